from .base import AdjointTrajectory, CaputoSolver, LinearSystem, Trajectory
from .adjoint import solve_adjoint_terminal
from .checks import comparison_check, positivity_check
from .linear import LinearCaputoSolver, solve_caputo_linear
from .nonlinear import NonlinearCaputoSolver, check_dissipative_matrix, solve_caputo_nonlinear
