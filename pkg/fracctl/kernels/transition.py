"""
State-transition kernels of C D^alpha x = A g(t) x + p(t) with symmetric A.

Because A g(t) commutes with itself at all times, every eigencomponent
shares the scalar nested-integral layers of the Peano-Baker series:

    Psi_D(t)           = sum_k lambda^k J_k(t),  J_0 = 1, J_k = I^alpha(g J_{k-1})
    (t-tau)^(1-alpha) Phi_D(tau, t) = sum_k lambda^k rho_k(t - tau)

where rho_k are the regularized right-sided layers for the terminal t.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import special

from ..calculus import SampledFunction, left_integral_values, singular_endpoint_weights
from ..calculus.quadrature import two_sided_weights
from ..exceptions import DomainError, InputError, TruncationError
from ..ode.base import AdjointTrajectory, Trajectory
from ..utils.logger import get_logger
from .diagonalization import Diagonalization, diagonalize

logger = get_logger(__name__)

DEFAULT_TOL = 1e-12
DEPTH_CAP = 200
# majorant sums above this lose digits to cancellation in the series
CANCELLATION_WARNING = 1e6


def majorant_terms(rate, alpha, n_terms):
    """
    Mittag-Leffler majorants of the k-th series term,
    max(rate^k / Gamma(k alpha + 1), rate^k / Gamma(k alpha + alpha)).
    """
    k = np.arange(n_terms, dtype=float)
    if rate == 0:
        out = np.zeros(n_terms)
        out[0] = max(1.0, 1.0 / special.gamma(alpha))
        return out
    with np.errstate(over="ignore"):
        log_rate = k * math.log(rate)
        first = log_rate - special.gammaln(k * alpha + 1)
        second = log_rate - special.gammaln(k * alpha + alpha)
        return np.exp(np.maximum(first, second))


def truncation_depth(rate, alpha, tol=DEFAULT_TOL, cap=DEPTH_CAP):
    """
    Smallest depth K whose majorant tail sum_{k>K} and K-th term are below tol.

    Parameters
        rate: float
            lambda_max * M * (b - a)^alpha
        alpha: float
        tol: float
        cap: int
            Largest admissible depth
    Returns
        depth: int
        tail_bound: float
        majorant_sum: float
    """
    if rate == 0:
        return 0, 0.0, float(majorant_terms(0.0, alpha, 1)[0])
    terms = majorant_terms(rate, alpha, cap + 200)
    tail = np.cumsum(terms[::-1])[::-1]
    tail = np.append(tail[1:], 0.0)
    ok = np.flatnonzero((tail[:cap + 1] <= tol) & (terms[:cap + 1] < tol))
    total = float(np.sum(terms))
    if ok.size == 0:
        raise TruncationError(
            f"Peano-Baker series needs more than {cap} terms for tolerance {tol:g} "
            f"(lambda_max M (b-a)^alpha = {rate:.4g})",
            depth=cap, tail_bound=float(tail[cap]))
    depth = int(ok[0])
    return depth, float(tail[depth]), total


class TransitionKernel:
    """
    Truncated Peano-Baker kernels Psi(a, t) and (t - tau)^(1-alpha) Phi(tau, t)
    on the nodes of a grid.

    Parameters
        diag: Diagonalization
            Eigen-decomposition of A
        g: SampledFunction
            Scalar time profile
        alpha: float
            Order in (0, 1)
        depth: int
            Number of series terms beyond the first
        tail_bound: float
            Majorant bound of the discarded tail
    """
    def __init__(self, diag: Diagonalization, g: SampledFunction, alpha, depth, tail_bound, tol):
        self.diag = diag
        self.g = g
        self.alpha = float(alpha)
        self.depth = int(depth)
        self.tail_bound = float(tail_bound)
        self.tol = float(tol)
        self._forward = None
        self._right = {}
        self._endpoint_weights = None

    # -- basic data -----------------------------------------------------

    @property
    def grid(self):
        return self.g.grid

    @property
    def interval(self):
        return self.grid.a, self.grid.b

    @property
    def d(self):
        return self.diag.d

    @property
    def matrix(self):
        return self.diag.matrix

    @property
    def sup_g(self):
        return float(np.max(np.abs(self.g.values)))

    def _powers(self):
        """(depth+1, d) array of lambda_i^k."""
        return self.diag.eigenvalues[None, :] ** np.arange(self.depth + 1)[:, None]

    # -- forward (Caputo) kernel ----------------------------------------

    @property
    def forward_layers(self):
        """(depth+1, n+1) scalar layers J_k on the grid."""
        if self._forward is None:
            h, g = self.grid.h, self.g.values
            layers = np.empty((self.depth + 1, self.grid.n_nodes))
            layers[0] = 1.0
            for k in range(1, self.depth + 1):
                start = self.alpha if k > 1 else None
                layers[k] = left_integral_values(g * layers[k - 1], h, self.alpha, start)
            self._forward = layers
        return self._forward

    def psi_diagonal(self):
        """(n+1, d) eigencomponents of Psi(a, t_j)."""
        return self.forward_layers.T @ self._powers()

    def psi(self, t_index=None):
        """Psi(a, t) at one node, or (n+1, d, d) at all nodes."""
        U = self.diag.U
        diag = self.psi_diagonal()
        if t_index is not None:
            return (U * diag[t_index]) @ U.T
        return np.einsum("ik,jk,lk->jil", U, diag, U)

    # -- right-sided regularized kernel ---------------------------------

    def right_layers(self, t_index):
        """
        (depth+1, t_index+1) regularized layers rho_k in the reflected
        variable: column i belongs to tau = t_{t_index - i}.
        """
        m = int(t_index)
        if not 0 <= m <= self.grid.n:
            raise InputError(f"node index {m} outside the grid", field="t_index")
        if m not in self._right:
            alpha, h = self.alpha, self.grid.h
            layers = np.empty((self.depth + 1, m + 1))
            layers[0] = 1.0 / special.gamma(alpha)
            if self.depth and m:
                W = two_sided_weights(self.grid.n, alpha, alpha, alpha)[:m + 1, :m + 1]
                x = h * np.arange(m + 1)
                scale = x ** (1 - alpha) * h ** (2 * alpha - 1) / special.gamma(alpha)
                g_rev = self.g.values[m::-1]
                for k in range(1, self.depth + 1):
                    layers[k] = scale * (W @ (g_rev * layers[k - 1]))
            elif self.depth:
                layers[1:] = 0.0
            self._right[m] = layers
        return self._right[m]

    def phi_regularized_diagonal(self, t_index=None):
        """
        (t_index+1, d) eigencomponents of (t - tau)^(1-alpha) Phi(tau, t)
        for tau = t_0..t_{t_index}; t defaults to b.
        """
        m = self.grid.n if t_index is None else int(t_index)
        return (self.right_layers(m).T @ self._powers())[::-1]

    def phi_regularized(self, tau_index, t_index):
        """(t - tau)^(1-alpha) Phi(tau, t) as a d x d matrix, tau <= t."""
        if not 0 <= tau_index <= t_index:
            raise InputError(f"need tau_index <= t_index, got {tau_index} > {t_index}")
        diag = self.phi_regularized_diagonal(t_index)[tau_index]
        U = self.diag.U
        return (U * diag) @ U.T

    def phi(self, tau_index, t_index):
        """Phi(tau, t) for tau < t."""
        if tau_index >= t_index:
            raise InputError("Phi(tau, t) is singular for tau = t", field="tau_index")
        nodes = self.grid.nodes
        dist = nodes[t_index] - nodes[tau_index]
        return dist ** (self.alpha - 1) * self.phi_regularized(tau_index, t_index)

    def terminal_weights(self):
        """Weights of int_a^b (b - t)^(alpha-1) phi(t) dt; shared by every terminal integral."""
        if self._endpoint_weights is None:
            self._endpoint_weights = singular_endpoint_weights(self.grid, self.alpha, self.alpha)
        return self._endpoint_weights

    # -- solutions --------------------------------------------------------

    def adjoint(self, z_b):
        """Adjoint solution z(t) = Phi(t, b) z_b from the series."""
        z_b = np.atleast_1d(np.asarray(z_b, dtype=float))
        if z_b.shape != (self.d,):
            raise InputError(f"z_b must have length {self.d}", field="z_b")
        reg = self.phi_regularized_diagonal() * self.diag.to_eigenbasis(z_b)
        return AdjointTrajectory(self.grid, self.diag.from_eigenbasis(reg), self.alpha)

    def propagate(self, forcing=None, y0=None, start_exponent=None, end_exponent=None):
        """
        Psi(a, t) y0 + int_a^t Phi(tau, t) p(tau) dtau at every node, with the
        forcing part summed as forward layers L_0 = I^alpha p, L_k = I^alpha(g L_{k-1}).

        start_exponent grades L_0 at t=a for a forcing with a
        (t - a)^gamma start; end_exponent grades every layer at t=b for a
        forcing with a (b - t)^gamma cusp, such as a minimum-energy control.
        """
        n_nodes, d = self.grid.n_nodes, self.d
        out = np.zeros((n_nodes, d))
        if y0 is not None:
            y0 = np.atleast_1d(np.asarray(y0, dtype=float))
            if y0.shape != (d,):
                raise InputError(f"y0 must have length {d}", field="y0")
            out += self.psi_diagonal() * self.diag.to_eigenbasis(y0)
        if forcing is not None:
            if not forcing.grid.matches(self.grid):
                raise InputError("forcing must live on the kernel grid", field="grid")
            p = self.diag.to_eigenbasis(forcing.values.reshape(n_nodes, -1))
            if p.shape[1] != d:
                raise InputError(f"forcing must be {d}-dimensional", field="forcing")
            h, alpha, g = self.grid.h, self.alpha, self.g.values[:, None]
            lam = self.diag.eigenvalues
            layer = left_integral_values(p, h, alpha, start_exponent, end_exponent)
            out += layer
            for k in range(1, self.depth + 1):
                layer = left_integral_values(g * layer, h, alpha, alpha, end_exponent)
                out += lam ** k * layer
        return Trajectory(self.grid, self.diag.from_eigenbasis(out))

    def __repr__(self):
        return (f"TransitionKernel(d={self.d}, alpha={self.alpha}, interval={self.interval}, "
                f"depth={self.depth}, tail_bound={self.tail_bound:.3e})")


def build_kernels(A, g, alpha, tol=DEFAULT_TOL, depth_cap=DEPTH_CAP, depth=None):
    """
    Build the transition kernels of C D^alpha x = A g(t) x.

    Parameters
        A: np.ndarray
            (d, d) symmetric matrix
        g: SampledFunction
            Scalar continuous time profile
        alpha: float
            Order in (0, 1)
        tol: float
            Truncation tolerance of the series
        depth_cap: int
            Largest admissible number of series terms
        depth: int, optional
            Force this depth instead of the tolerance rule
    Returns
        kernel: TransitionKernel
    """
    if not np.isfinite(alpha) or not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}", field="alpha")
    if tol <= 0:
        raise InputError("truncation tolerance must be positive", field="pb_tol")
    if g.values.ndim != 1:
        raise InputError("g must be scalar valued", field="g")
    diag = A if isinstance(A, Diagonalization) else diagonalize(A)
    M = float(np.max(np.abs(g.values)))
    rate = diag.lambda_max * M * g.grid.length ** alpha
    auto_depth, tail, total = truncation_depth(rate, alpha, tol, depth_cap)
    if total > CANCELLATION_WARNING:
        logger.warning(
            "Peano-Baker majorant sum %.3g is large; expect cancellation in the kernel series",
            total)
    if depth is None:
        depth = auto_depth
    else:
        terms = majorant_terms(rate, alpha, int(depth) + 200)
        tail = float(np.sum(terms[int(depth) + 1:]))
    logger.debug("kernel depth %d, tail bound %.3e, rate %.4g", depth, tail, rate)
    return TransitionKernel(diag, g, alpha, depth, tail, tol)
