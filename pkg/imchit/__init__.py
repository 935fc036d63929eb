"""
imc-hit: lower and upper hitting probabilities for imprecise Markov chains
"""

from .credal import (
    CredalSet,
    EpsContamRow,
    ExtremeSelection,
    VertexRow,
    center_matrix,
    lower_envelope,
    materialize,
    possible_edge,
    upper_envelope,
)
from .errors import (
    CapacityError,
    DomainError,
    ExperimentError,
    ImcHitError,
    NonConvergenceError,
    SandwichViolation,
    SolverError,
)
from .hitting import HittingVector, PathCertificate, fundamental_solve, hitting_probabilities, monotone_path
from .imprecise import SolveOptions, SolveResult, fixed_point_residual, lower_hitting, sandwich_check, upper_hitting
from .instances import InstanceSpec, fixture, gen_random_instance, propagation_chain_instance, worst_case_instance
from .markov import (
    StateSpace,
    TargetSet,
    TransitionMatrix,
    ValueFunction,
    cannot_reach_set,
    extend_function,
    reaches,
    restrict_function,
    restrict_matrix,
)
from .oracle import McConfig, brute_force_bounds, simulate_hitting
from .reachability import (
    ReachabilityReport,
    ReachMode,
    closed_set_check,
    lower_reach_report,
    lr2_minimal_n,
    lr3_holds,
    upper_reach_report,
)

__version__ = "0.1.0"
