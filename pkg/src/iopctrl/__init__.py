"""Stabilizing and H2-optimal controller synthesis through closed-loop maps."""

from .basis import TruncatedParam, expand, gram, h2_sq_continuous, h2_sq_discrete
from .constraints import EqualitySystem, SparsityPattern, assemble, h_G_map, qi_check_sparsity
from .synthesis import (
    InfeasibleError,
    SynthesisProblem,
    SynthesisResult,
    cost_sweep,
    solve,
    solve_feasibility,
    solve_h2,
)
from .tf import (
    CONTINUOUS,
    DISCRETE,
    ClosedLoopQuad,
    RationalFunction,
    RationalMatrix,
    is_stable,
    poles,
    properness_class,
    rm_add,
    rm_inverse,
    rm_mul,
)
from .verify import (
    check_iop_membership,
    closed_loop_maps,
    is_internally_stabilizing,
    recover_controller,
)
from .youla import DoublyCoprimeFactorization, iop_to_youla, trivial_dcf, verify_dcf, youla_to_iop

__version__ = "0.1.0"
