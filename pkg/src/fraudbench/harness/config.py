"""Flat ``key = value`` experiment configuration.

Lines starting with ``#`` and blank lines are ignored. Recognized keys::

    graph.source          sbm | sbm_clique | files
    graph.n_benign        graph.n_fraud
    graph.p_benign        graph.p_fraud        graph.p_cross
    graph.clique_size     graph.clique_density
    graph.edges           graph.labels         graph.metadata
    graph.seed            (defaults to seed)
    detectors.names       builtin | comma-separated detector names
    detectors.svd_sum_rank  detectors.svd_max_rank  detectors.random_seed
    mode                  one_shot | leaderboard | top1
    metric                auc | f1
    mechanism             exact | pda | synth
    mechanism.k           mechanism.rho
    mechanism.method      mechanism.d_multiplier
    mechanisms            comma list for error decomposition, e.g. exact,pda,synth:sbm
    epsilon  delta  trials  seed  out
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Mapping

from ..dp import DEFAULT_DELTA
from ..synth import METHODS


class ConfigError(ValueError):
    pass


MODES = ("one_shot", "leaderboard", "top1")
MECHANISMS = ("exact", "pda", "synth")
SOURCES = ("sbm", "sbm_clique", "files")

# config key -> dataclass field
_KEYS = {
    "graph.source": "graph_source",
    "graph.n_benign": "n_benign",
    "graph.n_fraud": "n_fraud",
    "graph.p_benign": "p_benign",
    "graph.p_fraud": "p_fraud",
    "graph.p_cross": "p_cross",
    "graph.clique_size": "clique_size",
    "graph.clique_density": "clique_density",
    "graph.edges": "edges_path",
    "graph.labels": "labels_path",
    "graph.metadata": "metadata_path",
    "graph.seed": "graph_seed",
    "detectors.names": "detectors",
    "detectors.svd_sum_rank": "svd_sum_rank",
    "detectors.svd_max_rank": "svd_max_rank",
    "detectors.random_seed": "random_seed",
    "mode": "mode",
    "metric": "metric",
    "mechanism": "mechanism",
    "mechanism.k": "k",
    "mechanism.rho": "rho",
    "mechanism.method": "method",
    "mechanism.d_multiplier": "d_multiplier",
    "mechanisms": "mechanisms",
    "epsilon": "epsilon",
    "delta": "delta",
    "trials": "trials",
    "seed": "seed",
    "out": "out",
}


@dataclass(frozen=True)
class ExperimentConfig:
    graph_source: str = "sbm"
    n_benign: int = 1000
    n_fraud: int = 100
    p_benign: float = 0.005
    p_fraud: float = 0.1
    p_cross: float = 0.0
    clique_size: int = 0
    clique_density: float = 1.0
    edges_path: str | None = None
    labels_path: str | None = None
    metadata_path: str | None = None
    graph_seed: int | None = None
    detectors: tuple[str, ...] = ("builtin",)
    svd_sum_rank: int = 10
    svd_max_rank: int = 50
    random_seed: int = 0
    mode: str = "leaderboard"
    metric: str = "auc"
    mechanism: str = "exact"
    k: int = 10
    rho: float = 1.0
    method: str = "sbm"
    d_multiplier: float = 1.0
    mechanisms: tuple[str, ...] = ()
    epsilon: float = 1.0
    delta: float = DEFAULT_DELTA
    trials: int = 10
    seed: int = 0
    out: str | None = None

    def __post_init__(self):
        if self.graph_source not in SOURCES:
            raise ConfigError(f"graph.source must be one of {SOURCES}")
        if self.graph_source == "files" and not (self.edges_path and self.labels_path):
            raise ConfigError("graph.source=files needs graph.edges and graph.labels")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.metric not in ("auc", "f1"):
            raise ConfigError("metric must be auc or f1")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        for m in self.mechanisms or (self.mechanism_label,):
            parse_mechanism(m)
        uses_privacy = any(parse_mechanism(m)[0] != "exact" for m in self.mechanisms or (self.mechanism_label,))
        if uses_privacy and not self.epsilon > 0:
            raise ConfigError("epsilon must be positive for private mechanisms")
        if not 0.0 < self.delta < 0.5:
            raise ConfigError("delta must lie in (0, 1/2)")

    @property
    def mechanism_label(self) -> str:
        return f"synth:{self.method}" if self.mechanism == "synth" else self.mechanism

    @classmethod
    def from_mapping(cls, raw: Mapping[str, str]) -> "ExperimentConfig":
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, value in raw.items():
            if key not in _KEYS:
                raise ConfigError(f"unknown config key {key!r}")
            name = _KEYS[key]
            kwargs[name] = _coerce(types[name], str(value).strip(), key)
        return cls(**kwargs)

    def to_mapping(self) -> dict[str, object]:
        d = asdict(self)
        return {k: d[name] for k, name in _KEYS.items()}


def _coerce(type_name: str, value: str, key: str):
    if type_name.endswith("| None") and value.lower() in ("", "none"):
        return None
    try:
        if type_name.startswith("int"):
            return int(value)
        if type_name.startswith("float"):
            return float(value)
        if type_name.startswith("tuple"):
            return tuple(v.strip() for v in value.split(",") if v.strip())
        return value
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None


def parse_mechanism(label: str) -> tuple[str, str | None]:
    """``"pda"`` -> ("pda", None); ``"synth:agm"`` -> ("synth", "agm")."""
    kind, _, method = label.partition(":")
    if kind not in MECHANISMS:
        raise ConfigError(f"unknown mechanism {label!r}")
    if kind == "synth":
        method = method or "sbm"
        if method not in METHODS:
            raise ConfigError(f"unknown synthetic method {method!r}")
        return kind, method
    if method:
        raise ConfigError(f"mechanism {kind!r} takes no method")
    return kind, None


def parse_config_text(text: str) -> dict[str, str]:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


def load_config(path, **overrides) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        raw = parse_config_text(fh.read())
    for key, value in overrides.items():
        if value is not None:
            raw[key] = str(value)
    return ExperimentConfig.from_mapping(raw)
