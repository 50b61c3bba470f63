"""Config-driven benchmark runs and the bias/noise error decomposition.

Seeding: trial ``t`` of an experiment with master seed ``s`` runs from the
integer seed ``SeedSequence([s, t]).generate_state(1, uint64)[0]``, which is
recorded in the output. Re-running one trial needs only that integer, and
trials do not depend on each other or on execution order.

Output CSV columns: ``trial, mechanism, mode, detector, value,
noiseless_value, eps_charged, seed``. In ``one_shot``/``leaderboard`` modes
there is one row per detector holding the released value and the value the
same mechanism gives with noise disabled under the same seed. ``top1`` writes
a single row per trial: the released winner, its top-1 error and the noiseless
winner's top-1 error, so no per-detector value leaves the server. Summed over
a trial's rows, ``eps_charged`` equals that trial's ledger total.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .. import detectors as det
from ..dp import BudgetExceededError, BudgetLedger, report_noisy_argmax
from ..graph import LabeledGraph, SbmParams, inject_fraud_clique, load_graph, sample_sbm
from ..metrics import ACCURACY_FUNCTIONS, Leaderboard, l1_error, top1_error, weighted_kendall_tau
from ..pda import PdaConfig, partition_duplicate, partition_values, pda_release
from ..synth import SynthMethod, generate_synthetic
from .config import ExperimentConfig, parse_mechanism

CSV_HEADER = ("trial", "mechanism", "mode", "detector", "value", "noiseless_value", "eps_charged", "seed")


@dataclass(frozen=True)
class ReleaseRecord:
    """What one trial released, plus its noise-free counterpart and ledger.

    ``values``/``noiseless`` are ``None`` in top1 mode, where only winner
    names are kept. ``wall_time`` is informational and never serialized.
    """

    trial: int
    mode: str
    mechanism: str
    values: dict[str, float] | None
    noiseless: dict[str, float] | None
    winner: str | None
    noiseless_winner: str | None
    epsilon_charged: float
    delta_charged: float
    seed: int
    ledger: BudgetLedger | None
    detector_charges: dict[str, float] | None = None
    wall_time: float = 0.0


# ---------------------------------------------------------------------------
# Inputs
# ---------------------------------------------------------------------------

def build_graph(cfg: ExperimentConfig) -> LabeledGraph:
    if cfg.graph_source == "files":
        return load_graph(cfg.edges_path, cfg.labels_path, cfg.metadata_path)
    seed = cfg.seed if cfg.graph_seed is None else cfg.graph_seed
    ss = np.random.SeedSequence([seed, 0xB10C])
    g_seed, c_seed = ss.spawn(2)
    params = SbmParams(
        n_fraud=cfg.n_fraud if cfg.graph_source == "sbm" else 0,
        n_benign=cfg.n_benign,
        p_fraud=cfg.p_fraud,
        p_benign=cfg.p_benign,
        p_cross=cfg.p_cross,
    )
    g = sample_sbm(params, g_seed)
    if cfg.graph_source == "sbm_clique":
        g = inject_fraud_clique(g, cfg.clique_size, cfg.clique_density, c_seed)
    return g


def detector_catalog(cfg: ExperimentConfig) -> dict[str, det.DetectorSpec]:
    suite = det.builtin_suite(cfg.svd_sum_rank, cfg.svd_max_rank, cfg.random_seed)
    catalog = {d.name: d for d in suite}
    catalog["degree"] = det.DetectorSpec("degree", "degree")
    return catalog


def resolve_detectors(cfg: ExperimentConfig) -> list[det.DetectorSpec]:
    catalog = detector_catalog(cfg)
    if cfg.detectors == ("builtin",):
        return det.builtin_suite(cfg.svd_sum_rank, cfg.svd_max_rank, cfg.random_seed)
    missing = [n for n in cfg.detectors if n not in catalog]
    if missing:
        raise ValueError(f"unknown detectors: {', '.join(missing)}")
    if len(set(cfg.detectors)) != len(cfg.detectors):
        raise ValueError("duplicate detector names")
    return [catalog[n] for n in cfg.detectors]


def trial_seed(master: int, trial: int) -> int:
    return int(np.random.SeedSequence([master, trial]).generate_state(1, np.uint64)[0])


def true_values(cfg: ExperimentConfig, graph: LabeledGraph, detectors: Sequence[det.DetectorSpec]) -> dict[str, float]:
    acc = ACCURACY_FUNCTIONS[cfg.metric]
    return {d.name: acc(det.score(d, graph), graph) for d in detectors}


# ---------------------------------------------------------------------------
# One trial
# ---------------------------------------------------------------------------

def _leader(values: dict[str, float]) -> str:
    return Leaderboard.from_values(values).names[0]


def release_trial(
    cfg: ExperimentConfig,
    graph: LabeledGraph,
    detectors: Sequence[det.DetectorSpec],
    mode: str,
    mechanism: str,
    trial: int = 0,
    ledger: BudgetLedger | None = None,
) -> ReleaseRecord:
    """Run one release of ``mode`` through ``mechanism`` and charge ``ledger``.

    A fresh ledger with allotment ``cfg.epsilon`` is used when none is given.
    """
    n_det = len(detectors)
    if mode == "one_shot" and n_det != 1:
        raise ValueError("one_shot mode takes exactly one detector")
    if mode in ("leaderboard", "top1") and n_det < 2:
        raise ValueError(f"{mode} mode needs at least two detectors")
    kind, method = parse_mechanism(mechanism)
    acc = ACCURACY_FUNCTIONS[cfg.metric]
    seed = trial_seed(cfg.seed, trial)
    ss = np.random.SeedSequence(seed)
    if ledger is None and kind != "exact":
        ledger = BudgetLedger(cfg.epsilon)
    start_spent = ledger.spent_epsilon if ledger is not None else 0.0
    start_delta = ledger.spent_delta if ledger is not None else 0.0
    t0 = time.perf_counter()

    values = noiseless = None
    winner = noiseless_winner = None
    per_detector = None

    if kind == "exact":
        values = {d.name: acc(det.score(d, graph), graph) for d in detectors}
        noiseless = dict(values)

    elif kind == "pda":
        if mode == "top1":
            if not ledger.can_charge(cfg.epsilon):
                raise BudgetExceededError(f"top1 release needs {cfg.epsilon:g}, {ledger.remaining:g} left")
            part_seed, noise_seed = ss.spawn(2)
            pcfg = PdaConfig(cfg.k, cfg.rho, cfg.epsilon)
            parts = partition_duplicate(graph, pcfg, part_seed)
            means = {d.name: float(np.mean(partition_values(d, parts, acc))) for d in detectors}
            winner = report_noisy_argmax(means, pcfg.noise_scale, np.random.default_rng(noise_seed))
            noiseless_winner = report_noisy_argmax(means, 0.0, np.random.default_rng(noise_seed))
            ledger = ledger.charge("pda:top1", cfg.epsilon)
        else:
            pcfg = PdaConfig(cfg.k, cfg.rho, cfg.epsilon / n_det)
            values, noiseless, per_detector = {}, {}, {}
            for d, s in zip(detectors, ss.spawn(n_det)):
                rel, ledger = pda_release(d, graph, pcfg, acc, ledger, seed=s)
                values[d.name] = rel.value
                noiseless[d.name] = rel.partition_mean
                per_detector[d.name] = rel.epsilon_charged

    else:  # synth: one generation serves every detector
        sm = SynthMethod(method, cfg.d_multiplier)
        if not ledger.can_charge(cfg.epsilon):
            raise BudgetExceededError(f"synthetic generation needs {cfg.epsilon:g}, {ledger.remaining:g} left")
        synth, _ = generate_synthetic(graph, sm, cfg.epsilon, cfg.delta, True, seed=seed)
        ledger = ledger.charge(f"synth:{method}", cfg.epsilon, cfg.delta)
        clean, _ = generate_synthetic(graph, sm, cfg.epsilon, cfg.delta, False, seed=seed)
        values = {d.name: acc(det.score(d, synth), synth) for d in detectors}
        noiseless = {d.name: acc(det.score(d, clean), clean) for d in detectors}

    if mode == "top1" and winner is None:
        winner, noiseless_winner = _leader(values), _leader(noiseless)
        values = noiseless = None

    spent = (ledger.spent_epsilon - start_spent) if ledger is not None else 0.0
    spent_delta = (ledger.spent_delta - start_delta) if ledger is not None else 0.0
    return ReleaseRecord(
        trial=trial,
        mode=mode,
        mechanism=mechanism,
        values=values,
        noiseless=noiseless,
        winner=winner,
        noiseless_winner=noiseless_winner,
        epsilon_charged=spent,
        delta_charged=spent_delta,
        seed=seed,
        ledger=ledger,
        detector_charges=per_detector,
        wall_time=time.perf_counter() - t0,
    )


def _inputs(cfg, graph, detectors):
    graph = graph if graph is not None else build_graph(cfg)
    detectors = list(detectors) if detectors is not None else resolve_detectors(cfg)
    return graph, detectors


def run_one_shot(cfg: ExperimentConfig, graph=None, detectors=None, trial: int = 0) -> ReleaseRecord:
    graph, detectors = _inputs(cfg, graph, detectors)
    return release_trial(cfg, graph, detectors, "one_shot", cfg.mechanism_label, trial)


def run_leaderboard(cfg: ExperimentConfig, graph=None, detectors=None, trial: int = 0) -> ReleaseRecord:
    graph, detectors = _inputs(cfg, graph, detectors)
    return release_trial(cfg, graph, detectors, "leaderboard", cfg.mechanism_label, trial)


def run_top1(cfg: ExperimentConfig, graph=None, detectors=None, trial: int = 0) -> ReleaseRecord:
    graph, detectors = _inputs(cfg, graph, detectors)
    return release_trial(cfg, graph, detectors, "top1", cfg.mechanism_label, trial)


# ---------------------------------------------------------------------------
# Errors and decomposition
# ---------------------------------------------------------------------------

def record_errors(record: ReleaseRecord, truth: dict[str, float]) -> tuple[float, float]:
    """(noise-free error, released error) under the mode's error metric."""
    if record.mode == "top1":
        return top1_error(truth, record.noiseless_winner), top1_error(truth, record.winner)
    if record.mode == "one_shot":
        (name,) = record.values
        return l1_error(truth[name], record.noiseless[name]), l1_error(truth[name], record.values[name])
    return (
        weighted_kendall_tau(truth, Leaderboard.from_values(record.noiseless)),
        weighted_kendall_tau(truth, Leaderboard.from_values(record.values)),
    )


@dataclass(frozen=True)
class DecompositionRow:
    mechanism: str
    mode: str
    x_mean: float
    x_se: float
    y_mean: float
    y_se: float
    trials: int


def _mean_se(v: Sequence[float]) -> tuple[float, float]:
    a = np.asarray(v, dtype=float)
    se = float(a.std(ddof=1) / math.sqrt(a.size)) if a.size > 1 else 0.0
    return float(a.mean()), se


def run_trials(cfg: ExperimentConfig, mechanism: str, graph, detectors) -> list[ReleaseRecord]:
    return [release_trial(cfg, graph, detectors, cfg.mode, mechanism, t) for t in range(cfg.trials)]


def run_decomposition(
    cfg: ExperimentConfig, graph=None, detectors=None
) -> tuple[list[DecompositionRow], list[ReleaseRecord], dict[str, float]]:
    """Noise-free (x) vs released (y) error per mechanism, mean and standard error."""
    graph, detectors = _inputs(cfg, graph, detectors)
    truth = true_values(cfg, graph, detectors)
    rows, records = [], []
    for mech in cfg.mechanisms or (cfg.mechanism_label,):
        recs = run_trials(cfg, mech, graph, detectors)
        errs = [record_errors(r, truth) for r in recs]
        xm, xs = _mean_se([e[0] for e in errs])
        ym, ys = _mean_se([e[1] for e in errs])
        rows.append(DecompositionRow(mech, cfg.mode, xm, xs, ym, ys, len(recs)))
        records.extend(recs)
    return rows, records, truth


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def records_to_csv(records: Sequence[ReleaseRecord], truth: dict[str, float]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        if r.mode == "top1":
            x_err, y_err = record_errors(r, truth)
            w.writerow([r.trial, r.mechanism, r.mode, r.winner, _fmt(y_err), _fmt(x_err), _fmt(r.epsilon_charged), r.seed])
            continue
        ordered = Leaderboard.from_values(r.values).names
        for i, name in enumerate(ordered):
            # pda charges per detector; a synth generation is booked on the first row
            if r.detector_charges is not None:
                eps = r.detector_charges[name]
            else:
                eps = r.epsilon_charged if i == 0 else 0.0
            w.writerow([r.trial, r.mechanism, r.mode, name, _fmt(r.values[name]), _fmt(r.noiseless[name]), _fmt(eps), r.seed])
    return buf.getvalue()


def summary_to_csv(rows: Sequence[DecompositionRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["mechanism", "mode", "x_mean", "x_se", "y_mean", "y_se", "trials"])
    for r in rows:
        w.writerow([r.mechanism, r.mode, _fmt(r.x_mean), _fmt(r.x_se), _fmt(r.y_mean), _fmt(r.y_se), r.trials])
    return buf.getvalue()


def ledger_json(cfg: ExperimentConfig, records: Sequence[ReleaseRecord], truth: dict[str, float]) -> str:
    doc = {
        # the output location is left out so files do not depend on where they are written
        "config": {k: v for k, v in cfg.to_mapping().items() if k != "out"},
        "true_values": truth,
        "trials": [
            {
                "trial": r.trial,
                "mechanism": r.mechanism,
                "seed": r.seed,
                "epsilon_charged": r.epsilon_charged,
                "delta_charged": r.delta_charged,
                "ledger": None if r.ledger is None else r.ledger.to_dict(),
            }
            for r in records
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def sidecar_paths(out) -> tuple[Path, Path]:
    out = Path(out)
    return out.with_suffix(".ledger.json"), out.with_suffix(".summary.csv")


def run_experiment(cfg: ExperimentConfig, out=None) -> tuple[list[DecompositionRow], list[ReleaseRecord]]:
    """Run every configured mechanism and write CSV, summary and ledger files."""
    rows, records, truth = run_decomposition(cfg)
    out = out if out is not None else cfg.out
    if out is not None:
        ledger_path, summary_path = sidecar_paths(out)
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(records_to_csv(records, truth), encoding="utf-8")
        summary_path.write_text(summary_to_csv(rows), encoding="utf-8")
        ledger_path.write_text(ledger_json(cfg, records, truth), encoding="utf-8")
    return rows, records
