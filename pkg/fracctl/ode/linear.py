import numpy as np

from ..exceptions import InputError
from ..kernels.diagonalization import SYMMETRY_TOL, diagonalize
from .base import CaputoSolver, LinearSystem, Trajectory

# grids coarser than this do not resolve the initial layer
MIN_LINEAR_STEPS = 8


class LinearCaputoSolver(CaputoSolver):
    """
    Predictor-corrector for C D^alpha x = coeff(t) x + p(t).

    With a symmetric factored coefficient A g(t) the system is stepped
    componentwise in the eigenbasis of A and rotated back at the end.
    """
    def __init__(self, system: LinearSystem, alpha, n_corrector=1, start_exponent=None,
                 end_exponent=None):
        if system.grid.n < MIN_LINEAR_STEPS:
            raise InputError(f"linear solves need n >= {MIN_LINEAR_STEPS}, got {system.grid.n}",
                             field="n_steps")
        self.system = system
        self.diag = None
        forcing = system.forcing.values.reshape(system.grid.n_nodes, -1)
        y0 = system.y0
        if system.matrix is not None and _is_symmetric(system.matrix):
            self.diag = diagonalize(system.matrix)
            self._scale = np.multiply.outer(system.profile, self.diag.eigenvalues)
            forcing = self.diag.to_eigenbasis(forcing)
            y0 = self.diag.to_eigenbasis(y0)
        self._forcing = forcing
        super().__init__(system.grid, alpha, y0, n_corrector=n_corrector,
                         start_exponent=start_exponent, end_exponent=end_exponent)

    def _rhs(self, j, y):
        if self.diag is not None:
            return self._scale[j] * y + self._forcing[j]
        return self.system.coeff.values[j] @ y + self._forcing[j]

    def _finish(self, states):
        if self.diag is not None:
            states = self.diag.from_eigenbasis(states)
        return Trajectory(self.grid, states)


def _is_symmetric(A):
    return np.linalg.norm(A - A.T, 2) <= SYMMETRY_TOL * (1 + np.linalg.norm(A, 2))


def solve_caputo_linear(system: LinearSystem, alpha: float, n_corrector: int = 1,
                        start_exponent=None, end_exponent=None) -> Trajectory:
    """
    Solve the linear time-varying Caputo system.

    Parameters
        system: LinearSystem
            Coefficient, forcing and initial state on a common grid
        alpha: float
            Order in (0, 1)
        n_corrector: int
            Corrector passes per step
        start_exponent, end_exponent: float, optional
            Grading of the corrector next to t=a and t=b
    Returns
        trajectory: Trajectory
    """
    return LinearCaputoSolver(system, alpha, n_corrector=n_corrector, start_exponent=start_exponent,
                              end_exponent=end_exponent).solve()
