import logging

_handler = logging.StreamHandler()
_handler.setFormatter(logging.Formatter("[%(levelname)s] %(name)s: %(message)s"))
_root = logging.getLogger("fracctl")
if not _root.handlers:
    _root.addHandler(_handler)
_root.setLevel(logging.WARNING)

from .exceptions import (  # noqa: E402
    ArtifactIOError,
    ConvergenceError,
    DomainError,
    FracControlError,
    InputError,
    NotControllableError,
    TruncationError,
)
from .special import MlQuery, mittag_leffler  # noqa: E402
from .calculus import SampledFunction, TimeGrid, frac_derivative, rl_integral  # noqa: E402
from .ode import (  # noqa: E402
    LinearSystem,
    Trajectory,
    solve_adjoint_terminal,
    solve_caputo_linear,
    solve_caputo_nonlinear,
)
from .kernels import TransitionKernel, build_kernels, kernel_bounds_report  # noqa: E402
from .control import (  # noqa: E402
    apply_control,
    fixed_point_solve,
    gramian,
    kalman_rank,
    synthesize_linear,
)
from .io import ProblemSpec, load_problem  # noqa: E402

__version__ = "0.1.0"
