import numpy as np

from ..exceptions import InputError
from ..kernels.diagonalization import PSD_TOL, check_symmetric, diagonalize
from ..models import make_field
from .base import CaputoSolver, Trajectory


def check_dissipative_matrix(A):
    """A must be symmetric positive semidefinite; returns A as an array."""
    A = check_symmetric(A)
    diag = diagonalize(A)
    if not diag.is_psd(PSD_TOL):
        raise InputError(
            f"A must be positive semidefinite, smallest eigenvalue {diag.eigenvalues[0]:.3e}",
            field="A")
    return A


class NonlinearCaputoSolver(CaputoSolver):
    """Predictor-corrector for C D^alpha z = -A f(z) z + forcing(t)."""
    def __init__(self, A, field, y0, grid, alpha, forcing=None, n_corrector=1,
                 start_exponent=None, end_exponent=None):
        self.A = check_dissipative_matrix(A)
        self.field = make_field(field)
        y0 = np.atleast_1d(np.asarray(y0, dtype=float))
        if y0.shape != (self.A.shape[0],):
            raise InputError(f"y0 must have length {self.A.shape[0]}", field="y0")
        self._forcing = None
        if forcing is not None:
            if not forcing.grid.matches(grid):
                raise InputError("forcing must live on the solver grid", field="grid")
            self._forcing = forcing.values.reshape(grid.n_nodes, -1)
            if self._forcing.shape[1] != y0.shape[0]:
                raise InputError(f"forcing must be {y0.shape[0]}-dimensional", field="forcing")
        super().__init__(grid, alpha, y0, n_corrector=n_corrector,
                         start_exponent=start_exponent, end_exponent=end_exponent)

    def _rhs(self, j, y):
        out = -self.field(y) * (self.A @ y)
        if self._forcing is not None:
            out = out + self._forcing[j]
        return out


def solve_caputo_nonlinear(A, f, y0, grid, alpha, forcing=None, n_corrector=1,
                           start_exponent=None, end_exponent=None) -> Trajectory:
    """
    Solve C D^alpha z = -A f(z) z (+ forcing), z(0) = y0.

    Parameters
        A: np.ndarray
            (d, d) symmetric positive semidefinite matrix
        f: dict or ScalarField
            Positive scalar field descriptor
        y0: np.ndarray
            (d,) initial state
        grid: TimeGrid
        alpha: float
        forcing: SampledFunction, optional
            (n+1, d) additive term, e.g. B u(t)
        n_corrector: int
        start_exponent, end_exponent: float, optional
            Grading of the corrector next to t=0 and t=T
    Returns
        trajectory: Trajectory
    """
    solver = NonlinearCaputoSolver(A, f, y0, grid, alpha, forcing=forcing, n_corrector=n_corrector,
                                   start_exponent=start_exponent, end_exponent=end_exponent)
    return solver.solve()
