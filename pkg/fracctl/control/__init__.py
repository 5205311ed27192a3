from .reports import ControlBounds, ControlLaw, Gramian, ObservabilityReport, SINGULAR_RTOL
from .linear import (
    RANK_RTOL,
    adjoint_regularized,
    apply_control,
    control_bounds_report,
    duality_residual,
    euler_lagrange_residual,
    functional_J,
    gramian,
    kalman_rank,
    minimizer_zb,
    observability_constant,
    synthesize_linear,
)
from .nonlinear import (
    FixedPointSynthesis,
    IterationRecord,
    SplitConstants,
    SynthesisReport,
    assemble_iterate,
    check_preconditions,
    compute_split_constants,
    estimate_kz,
    fixed_point_solve,
    memory_term,
    resimulate,
    solve_coast,
    solve_yp,
)
