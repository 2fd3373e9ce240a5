"""Deterministic LOCC transformations between tensor-rank-2 multipartite qubit states."""
from .extended_complex import INF, SpecialS
from .lambda_space import (
    Kind,
    LambdaPoint,
    StateClass,
    canonical,
    classify,
    concurrence,
    concurrences,
    conjugate,
    lu_equivalent,
    normalization,
    representative_state,
    xi,
)
from .local_ops import (
    LocalOperation,
    MeasurementOperators,
    OutcomeFirst,
    OutcomeSecond,
    apply_symbolic,
    build_measurement_operators,
    first_to_second,
    second_to_first,
    validate_first,
    validate_second,
)
from .simulator import BranchResult, SimulationDivergence, certify, execute_protocol, extract_lambda
from .transform import (
    FeasibilityVerdict,
    InfeasibleTransformation,
    ProtocolPlan,
    Rule,
    check_feasible,
    invariant_class,
    is_ancestor,
    plan_protocol,
)

__all__ = [name for name in dir() if not name.startswith("_")]
