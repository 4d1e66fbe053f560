"""Distributed optimization over digraphs with quantized, finite-time averaging."""

from .consensus import ConsensusResult, max_consensus, min_consensus, run_consensus
from .costs import CostEnsemble, QuadraticCost, global_optimum
from .graph import Digraph, complete_digraph, directed_cycle, random_strongly_connected
from .metrics import BitLedger, error_metric, table2_row
from .optimizer import OptimizerConfig, RunResult, run, run_alg1, run_alg3, run_alg4
from .quantizer import BoundedMidRise, FlcCodec, MidRiseInfinite

__version__ = "0.1.0"

__all__ = [
    "BitLedger",
    "BoundedMidRise",
    "ConsensusResult",
    "CostEnsemble",
    "Digraph",
    "FlcCodec",
    "MidRiseInfinite",
    "OptimizerConfig",
    "QuadraticCost",
    "RunResult",
    "complete_digraph",
    "directed_cycle",
    "error_metric",
    "global_optimum",
    "max_consensus",
    "min_consensus",
    "random_strongly_connected",
    "run",
    "run_alg1",
    "run_alg3",
    "run_alg4",
    "run_consensus",
    "table2_row",
]
