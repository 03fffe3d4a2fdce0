from varhom.subadd.checks import (
    BoundsReport,
    ContinuityReport,
    CutupReport,
    OrderingReport,
    PartitionReport,
    UniformConvexityReport,
    UniquenessReport,
    check_bounds,
    check_continuity,
    check_cutup,
    check_ordering,
    check_partition,
    check_uniform_convexity,
    check_uniqueness,
    mu0_window,
    mu_window,
)
from varhom.subadd.newton import NewtonResult, minimize_newton_cg
from varhom.subadd.problem import CellProblem, MinimizerPair
from varhom.subadd.quantities import SolverParams, solve_mu, solve_mu0
from varhom.subadd.records import SolveRecord, write_records

__all__ = [
    "minimize_newton_cg",
    "NewtonResult",
    "CellProblem",
    "MinimizerPair",
    "SolverParams",
    "solve_mu",
    "solve_mu0",
    "mu_window",
    "mu0_window",
    "check_bounds",
    "BoundsReport",
    "check_partition",
    "PartitionReport",
    "check_ordering",
    "OrderingReport",
    "check_uniform_convexity",
    "UniformConvexityReport",
    "check_continuity",
    "ContinuityReport",
    "check_uniqueness",
    "UniquenessReport",
    "check_cutup",
    "CutupReport",
    "SolveRecord",
    "write_records",
]
