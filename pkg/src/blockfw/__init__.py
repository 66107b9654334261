"""Block-coordinate Frank-Wolfe methods with short step chains on products of simplices."""

from blockfw.blockvec import BlockLayout, BlockVector, assemble, block_dot, block_slice
from blockfw.domain import ProductSimplexDomain, SupportSet
from blockfw.directions import Direction, DirectionKind
from blockfw.problems import QuadraticProblem, gen_multistqp, load_instance, save_instance
from blockfw.solver import Method, RunResult, SolverConfig, Strategy, run
from blockfw.ssc import SSCTrace, ssc_run

__all__ = [
    "BlockLayout",
    "BlockVector",
    "Direction",
    "DirectionKind",
    "Method",
    "ProductSimplexDomain",
    "QuadraticProblem",
    "RunResult",
    "SSCTrace",
    "SolverConfig",
    "Strategy",
    "SupportSet",
    "assemble",
    "block_dot",
    "block_slice",
    "gen_multistqp",
    "load_instance",
    "run",
    "save_instance",
    "ssc_run",
]

__version__ = "0.1.0"
