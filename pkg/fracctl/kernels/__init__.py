from .diagonalization import (
    PSD_TOL,
    SYMMETRY_TOL,
    Diagonalization,
    check_symmetric,
    diagonalize,
)
from .transition import (
    DEFAULT_TOL,
    DEPTH_CAP,
    TransitionKernel,
    build_kernels,
    majorant_terms,
    truncation_depth,
)
from .bounds import LOWER_SLACK, RESOLUTION_SLACK, BoundsRecord, kernel_bounds_report
