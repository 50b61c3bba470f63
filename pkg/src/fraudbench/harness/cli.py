"""``fraudbench`` command line."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from .. import detectors as det
from ..attack import AttackSpec, ExactServer, PdaServer, SbmEdgeFamily, SynthServer, roc_curve, run_attack_trials, write_roc_csv
from ..dp import DEFAULT_DELTA
from ..graph import SbmParams, inject_fraud_clique, load_graph, sample_sbm, write_graph
from ..metrics import ACCURACY_FUNCTIONS, Leaderboard
from ..pda import PdaConfig, pda_release
from ..synth import METHODS, SynthMethod, generate_synthetic
from .config import ExperimentConfig, load_config
from .experiment import detector_catalog, run_experiment

log = logging.getLogger("fraudbench")


def _add_graph_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--edges", required=True, help="edge list, one 'u v' pair per line")
    p.add_argument("--labels", required=True, help="CSV with header vertex,label")
    p.add_argument("--metadata", help="optional CSV with header vertex,f1,...")


def _add_common(p: argparse.ArgumentParser, out_help: str) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help=out_help)


def _detectors(names: str) -> list[det.DetectorSpec]:
    catalog = detector_catalog(ExperimentConfig())
    if names == "builtin":
        return det.builtin_suite()
    picked = [n.strip() for n in names.split(",") if n.strip()]
    unknown = [n for n in picked if n not in catalog]
    if unknown:
        raise SystemExit(f"unknown detectors: {', '.join(unknown)}")
    return [catalog[n] for n in picked]


def _write_rows(path, header, rows) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def cmd_generate(a) -> int:
    params = SbmParams(
        n_fraud=0 if a.clique_size else a.n_fraud,
        n_benign=a.n_benign,
        p_fraud=a.p_fraud,
        p_benign=a.p_benign,
        p_cross=a.p_cross,
    )
    g = sample_sbm(params, a.seed)
    if a.clique_size:
        g = inject_fraud_clique(g, a.clique_size, a.clique_density, a.seed + 1)
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    write_graph(g, out / "edges.txt", out / "labels.csv")
    log.info("wrote %r to %s", g, out)
    return 0


def cmd_evaluate(a) -> int:
    g = load_graph(a.edges, a.labels, a.metadata)
    acc = ACCURACY_FUNCTIONS[a.metric]
    vals = {d.name: acc(det.score(d, g), g) for d in _detectors(a.detectors)}
    board = Leaderboard.from_values(vals)
    _write_rows(a.out, ["detector", a.metric], [(k, repr(v)) for k, v in board.entries])
    return 0


def cmd_pda(a) -> int:
    g = load_graph(a.edges, a.labels, a.metadata)
    (d,) = _detectors(a.detector)
    cfg = PdaConfig(a.k, a.rho, a.epsilon, noise_enabled=not a.no_noise)
    rel, _ = pda_release(d, g, cfg, ACCURACY_FUNCTIONS[a.metric], seed=a.seed)
    _write_rows(
        a.out,
        ["detector", "value", "epsilon_charged", "noise_scale", "seed"],
        [(d.name, repr(rel.value), repr(rel.epsilon_charged), repr(rel.noise_scale), a.seed)],
    )
    return 0


def cmd_synth(a) -> int:
    g = load_graph(a.edges, a.labels)
    synth, stats = generate_synthetic(
        g, SynthMethod(a.method, a.d_multiplier), a.epsilon, a.delta, not a.no_noise, seed=a.seed
    )
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    write_graph(synth, out / "edges.txt", out / "labels.csv")
    log.info("D=%s S=%.4g, wrote %r", stats.D, stats.S, synth)
    return 0


def cmd_attack(a) -> int:
    family = SbmEdgeFamily(SbmParams(a.n_fraud, a.n_benign, a.p_fraud, a.p_benign, a.p_cross))
    if a.server == "exact":
        server = ExactServer()
    elif a.server == "pda":
        server = PdaServer(a.k, a.rho, a.epsilon)
    else:
        server = SynthServer(a.method, a.epsilon, a.delta)
    spec = AttackSpec(det.DetectorSpec("degree", "degree"), family.query)
    trials = run_attack_trials(server, family, spec, a.positives, a.negatives, a.seed)
    roc = roc_curve(trials)
    Path(a.out).parent.mkdir(parents=True, exist_ok=True)
    write_roc_csv(roc, a.out)
    print(f"attack AUC {roc.auc:.4f}, TPR at FPR=0: {roc.tpr_at_fpr(0.0):.3f}")
    return 0


def cmd_experiment(a) -> int:
    cfg = load_config(a.config, seed=a.seed, out=a.out)
    rows, _ = run_experiment(cfg)
    for r in rows:
        print(f"{r.mechanism:24s} x={r.x_mean:.4f}±{r.x_se:.4f}  y={r.y_mean:.4f}±{r.y_se:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fraudbench", description="Private benchmarking of graph fraud detectors")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample an SBM (optionally with a fraud clique) to files")
    p.add_argument("--n-benign", type=int, default=1000)
    p.add_argument("--n-fraud", type=int, default=100)
    p.add_argument("--p-benign", type=float, default=0.005)
    p.add_argument("--p-fraud", type=float, default=0.1)
    p.add_argument("--p-cross", type=float, default=0.0)
    p.add_argument("--clique-size", type=int, default=0, help="relabel this many benign vertices as a fraud clique")
    p.add_argument("--clique-density", type=float, default=1.0)
    _add_common(p, "output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="exact accuracy of detectors")
    _add_graph_inputs(p)
    p.add_argument("--detectors", default="builtin")
    p.add_argument("--metric", choices=sorted(ACCURACY_FUNCTIONS), default="auc")
    _add_common(p, "output CSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pda", help="one private release via partition-duplicate-aggregate")
    _add_graph_inputs(p)
    p.add_argument("--detector", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--metric", choices=sorted(ACCURACY_FUNCTIONS), default="auc")
    p.add_argument("--no-noise", action="store_true")
    _add_common(p, "output CSV")
    p.set_defaults(func=cmd_pda)

    p = sub.add_parser("synth", help="write one private synthetic graph")
    p.add_argument("--edges", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--method", choices=METHODS, default="sbm")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    p.add_argument("--d-multiplier", type=float, default=1.0)
    p.add_argument("--no-noise", action="store_true")
    _add_common(p, "output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("attack", help="edge-membership attack, writes ROC points")
    p.add_argument("--server", choices=("exact", "pda", "synth"), default="exact")
    p.add_argument("--n-benign", type=int, default=200)
    p.add_argument("--n-fraud", type=int, default=40)
    p.add_argument("--p-benign", type=float, default=0.05)
    p.add_argument("--p-fraud", type=float, default=0.5)
    p.add_argument("--p-cross", type=float, default=0.0)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--method", choices=METHODS, default="sbm")
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    p.add_argument("--positives", type=int, default=100)
    p.add_argument("--negatives", type=int, default=100)
    _add_common(p, "output ROC CSV (fpr,tpr,threshold)")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("experiment", help="config-driven run with CSV and ledger output")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="overrides the config's seed")
    p.add_argument("--out", default=None, help="overrides the config's out")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
