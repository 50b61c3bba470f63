"""Private benchmarking of graph fraud detectors."""

from .graph import LabeledGraph, SbmParams, compute_stats, load_graph, sample_sbm, write_graph
from .detectors import DetectorSpec, builtin_suite, score
from .metrics import auc, f1_best_threshold
from .dp import BudgetLedger, BudgetExceededError
from .pda import PdaConfig, pda_release
from .synth import SynthMethod, generate_synthetic

__version__ = "0.1.0"
