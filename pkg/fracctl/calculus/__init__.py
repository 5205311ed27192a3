from .grid import SampledFunction, TimeGrid
from .operators import (
    CAPUTO_LEFT,
    LEFT,
    RIGHT,
    RL_RIGHT,
    frac_derivative,
    integration_by_parts_residual,
    l1_caputo_values,
    left_integral_values,
    rl_integral,
)
from .quadrature import (
    GradedCorrection,
    end_zone_correction,
    fractional_rectangle_weights,
    fractional_trapezoid_weights,
    graded_zone_size,
    singular_endpoint_weights,
    start_zone_correction,
    trapezoid_weights,
    two_sided_row,
    two_sided_weights,
)
