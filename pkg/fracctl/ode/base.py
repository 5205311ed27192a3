from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np
from scipy import special

from ..calculus import SampledFunction
from ..calculus.quadrature import (
    GradedCorrection,
    fractional_rectangle_weights,
    fractional_trapezoid_weights,
    two_sided_row,
)
from ..exceptions import DomainError, InputError

# corrector passes and relative tolerance on graded panels
ZONE_PASSES = 50
ZONE_RTOL = 1e-14


class Trajectory(SampledFunction):
    """
    States of a d-dimensional system on a TimeGrid, stored as (n+1, d).
    """
    def __init__(self, grid, states):
        states = np.asarray(states, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
        if states.ndim != 2:
            raise InputError(f"trajectory states must be (n+1, d), got shape {states.shape}")
        super().__init__(grid, states)

    @property
    def states(self):
        return self.values

    @property
    def d(self):
        return self.values.shape[1]

    @property
    def initial_state(self):
        return self.values[0].copy()

    @property
    def final_state(self):
        return self.values[-1].copy()

    def norms(self):
        return np.linalg.norm(self.values, axis=1)


class AdjointTrajectory(Trajectory):
    """
    Solution of the right-sided terminal-value problem

        t D_b^alpha z = A g(t) z,   t I_b^(1-alpha) z |_{t=b} = z_b.

    z is singular like (b - t)^(alpha-1) at t=b, so the stored states are
    the regularized samples w(t) = (b - t)^(1-alpha) z(t), finite up to b.
    """
    def __init__(self, grid, regularized, alpha):
        super().__init__(grid, regularized)
        self.alpha = float(alpha)

    @property
    def regularized(self):
        return self.values

    @property
    def singular(self):
        """z(t) itself; the entry at t=b is nan."""
        dist = self.grid.b - self.grid.nodes
        out = np.full_like(self.values, np.nan)
        out[:-1] = self.values[:-1] * dist[:-1, None] ** (self.alpha - 1)
        return out

    def terminal_datum(self):
        """t I_b^(1-alpha) z at t=b, i.e. Gamma(alpha) w(b)."""
        return special.gamma(self.alpha) * self.values[-1]

    def initial_datum(self):
        """z_0 = t I_b^(1-alpha) z at t=a by two-sided product quadrature."""
        alpha = self.alpha
        row = two_sided_row(self.grid.n, 1 - alpha, alpha, alpha)
        # row runs over the reflected variable b - t
        return row @ self.values[::-1] / special.gamma(1 - alpha)


class LinearSystem:
    """
    C D^alpha x = coeff(t) x + forcing(t), x(a) = y0.

    Parameters
        coeff: SampledFunction
            (n+1, d, d) coefficient samples
        forcing: SampledFunction
            (n+1, d) samples of p(t); zero when None
        y0: np.ndarray
            (d,) initial state
        matrix, profile: np.ndarray, optional
            Factorization coeff(t) = matrix * profile(t); enables the
            eigenbasis path when matrix is symmetric
    """
    def __init__(self, coeff, y0, forcing=None, matrix=None, profile=None):
        y0 = np.atleast_1d(np.asarray(y0, dtype=float))
        values = coeff.values
        d = y0.shape[0]
        if values.shape[1:] != (d, d):
            raise InputError(f"coefficient samples must be (n+1, {d}, {d}), got {values.shape}",
                             field="A")
        if forcing is None:
            forcing = SampledFunction.constant(coeff.grid, np.zeros(d))
        if not forcing.grid.matches(coeff.grid):
            raise InputError("coefficient and forcing must share one grid", field="grid")
        if forcing.values.reshape(coeff.grid.n_nodes, -1).shape[1] != d:
            raise InputError(f"forcing must be {d}-dimensional", field="forcing")
        if not np.all(np.isfinite(y0)):
            raise InputError("initial state must be finite", field="y0")
        self.coeff = coeff
        self.forcing = forcing
        self.y0 = y0
        self.matrix = None if matrix is None else np.asarray(matrix, dtype=float)
        self.profile = None if profile is None else np.asarray(profile, dtype=float)

    @classmethod
    def from_factored(cls, A, g, y0, forcing=None):
        """coeff(t) = A g(t) with g a scalar SampledFunction."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        coeff = SampledFunction(g.grid, np.multiply.outer(g.values, A))
        return cls(coeff, y0, forcing=forcing, matrix=A, profile=g.values)

    @property
    def grid(self):
        return self.coeff.grid

    @property
    def d(self):
        return self.y0.shape[0]


class CaputoSolver(ABC):
    """
    Fractional Adams-Bashforth-Moulton predictor-corrector for

        C D^alpha y = F(t, y),  y(a) = y0,

    on a uniform grid. Subclasses supply the right-hand side F.

    With start_exponent or end_exponent the corrector weights of the panels
    next to t=a or t=b take F cubic in the distance to that end raised to
    the exponent, for right-hand sides with a (t-a)^gamma start or a
    (b-t)^gamma cusp; the corrector is then iterated to convergence on
    those panels.

    Parameters
        grid: TimeGrid
            Time grid
        alpha: float
            Order in (0, 1)
        y0: np.ndarray
            Initial state
        n_corrector: int
            Corrector passes per step
        start_exponent, end_exponent: float, optional
            Grading exponents at t=a and t=b
    """
    def __init__(self, grid, alpha, y0, n_corrector=1, start_exponent=None, end_exponent=None):
        if not np.isfinite(alpha) or not 0 < alpha < 1:
            raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}", field="alpha")
        if int(n_corrector) < 1:
            raise InputError("n_corrector must be at least 1", field="n_corrector")
        self.grid = grid
        self.alpha = float(alpha)
        self.y0 = np.atleast_1d(np.asarray(y0, dtype=float))
        self.n_corrector = int(n_corrector)
        self.start_exponent = start_exponent
        self.end_exponent = end_exponent

    @abstractmethod
    def _rhs(self, j, y):
        """
        Right-hand side at node j.

        Parameters
            j: int
                Node index
            y: np.ndarray
                (d,) state
        Returns
            F: np.ndarray
                (d,) value of F(t_j, y)
        """
        raise NotImplementedError

    def _finish(self, states):
        return Trajectory(self.grid, states)

    def solve(self):
        n, alpha, h = self.grid.n, self.alpha, self.grid.h
        b = fractional_rectangle_weights(n, alpha)
        c, a = fractional_trapezoid_weights(n, alpha)
        graded = GradedCorrection(n, alpha, self.start_exponent, self.end_exponent)
        s_pred = h ** alpha / special.gamma(alpha + 1)
        s_corr = h ** alpha / special.gamma(alpha + 2)
        s_zone = h ** alpha / special.gamma(alpha)

        y = np.empty((n + 1, self.y0.shape[0]))
        F = np.empty_like(y)
        y[0] = self.y0
        F[0] = self._rhs(0, y[0])
        for m in range(n):
            history = F[:m + 1]
            y_new = self.y0 + s_pred * (b[m::-1] @ history)
            base = self.y0 + s_corr * (c[m + 1:0:-1] @ history + a[m + 1] * F[0])
            zone = graded.row(m + 1)
            if zone is None:
                for _ in range(self.n_corrector):
                    y_new = base + s_corr * self._rhs(m + 1, y_new)
            else:
                base = base + s_zone * (zone[:-1] @ history)
                implicit = s_corr + s_zone * zone[-1]
                for _ in range(max(self.n_corrector, ZONE_PASSES)):
                    y_prev = y_new
                    y_new = base + implicit * self._rhs(m + 1, y_new)
                    if np.all(np.abs(y_new - y_prev) <= ZONE_RTOL * (1 + np.abs(y_new))):
                        break
            if not np.all(np.isfinite(y_new)):
                raise InputError(f"solution became non-finite at t={self.grid.nodes[m + 1]:.6g}")
            y[m + 1] = y_new
            F[m + 1] = self._rhs(m + 1, y_new)
        return self._finish(y)
