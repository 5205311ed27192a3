import numpy as np
from scipy import special

from ..calculus import two_sided_weights
from ..exceptions import ConvergenceError, DomainError, InputError
from ..kernels.diagonalization import diagonalize
from .base import AdjointTrajectory

# implicit steps whose pivot falls below this, relative to its terms, are rejected
PIVOT_RTOL = 1e-10


def solve_adjoint_terminal(A, g, z_b, alpha) -> AdjointTrajectory:
    """
    Solve the right-sided Riemann-Liouville terminal-value problem

        t D_b^alpha z = A g(t) z,   t I_b^(1-alpha) z |_{t=b} = z_b.

    In the reflected variable x = b - t the regularized solution
    w = x^(1-alpha) z obeys

        w(x) = z_b/Gamma(alpha)
               + x^(1-alpha)/Gamma(alpha) int_0^x (x-s)^(alpha-1) s^(alpha-1) g~(s) A w(s) ds,

    which is stepped implicitly with two-sided product weights, per
    eigencomponent of A.

    Parameters
        A: np.ndarray
            (d, d) symmetric matrix
        g: SampledFunction
            Scalar time profile on [a, b]
        z_b: np.ndarray
            (d,) terminal datum
        alpha: float
            Order in (0, 1)
    Returns
        adjoint: AdjointTrajectory

    Raises ConvergenceError when an implicit step has a vanishing pivot.
    """
    if not np.isfinite(alpha) or not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}", field="alpha")
    diag = diagonalize(A)
    z_b = np.atleast_1d(np.asarray(z_b, dtype=float))
    if z_b.shape != (diag.d,):
        raise InputError(f"z_b must have length {diag.d}", field="z_b")
    if g.values.ndim != 1:
        raise InputError("g must be scalar valued", field="g")

    grid = g.grid
    n, h = grid.n, grid.h
    lam = diag.eigenvalues
    g_rev = g.values[::-1]
    W = two_sided_weights(n, alpha, alpha, alpha)
    x = h * np.arange(n + 1)
    scale = np.zeros(n + 1)
    scale[1:] = x[1:] ** (1 - alpha) * h ** (2 * alpha - 1) / special.gamma(alpha)

    w = np.empty((n + 1, diag.d))
    w[0] = diag.to_eigenbasis(z_b) / special.gamma(alpha)
    for i in range(1, n + 1):
        history = W[i, :i] @ (g_rev[:i, None] * w[:i])
        rhs = w[0] + scale[i] * lam * history
        coupling = scale[i] * W[i, i] * g_rev[i] * lam
        pivot = 1 - coupling
        if np.any(np.abs(pivot) <= PIVOT_RTOL * (1 + np.abs(coupling))):
            raise ConvergenceError(
                f"implicit adjoint step at x={x[i]:.6g} is singular "
                f"(pivot {np.min(np.abs(pivot)):.3e}); refine the grid")
        w[i] = rhs / pivot
    return AdjointTrajectory(grid, diag.from_eigenbasis(w[::-1]), alpha)
