"""
Product-integration weights for weakly singular kernels on uniform grids.

All weights integrate an interpolant of the integrand exactly against the
singular factor, so the accuracy does not degrade at the kernel
singularity. Away from the ends the interpolant is piecewise linear. Data
that behave like c0 + c1 r^gamma + ... in the distance r to an end are
instead interpolated by cubics in r^gamma on a graded zone of panels next
to that end; the zone weights are stored as corrections to the linear ones.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import special

from ..exceptions import DomainError

# rows of the two-sided weight matrix assembled per vectorized batch
ROW_CHUNK = 128
# panels next to a graded end that use the cubic in r^gamma
GRADED_PANELS = 64
GRADED_DEGREE = 3
# Gauss nodes per panel for the zone moments
ZONE_NODES = 12


def trapezoid_weights(grid):
    """Composite trapezoid weights for the nodes of grid."""
    w = np.full(grid.n_nodes, grid.h)
    w[0] = w[-1] = 0.5 * grid.h
    return w


@lru_cache(maxsize=32)
def fractional_trapezoid_weights(n, alpha):
    """
    Product-trapezoid weights of the left Riemann-Liouville integral.

    (I^alpha f)(t_m) = h^alpha / Gamma(alpha + 2) * (sum_j c[m - j] f_j + a[m] f_0)

    Parameters
        n: int
            Number of intervals
        alpha: float
            Order, > 0
    Returns
        c: np.ndarray
            Convolution weights, c[0] = 1
        a: np.ndarray
            Correction of the weight of f_0, a[0] = 0
    """
    k = np.arange(n + 1, dtype=float)
    e = alpha + 1.0
    c = np.empty(n + 1)
    c[0] = 1.0
    c[1:] = (k[1:] + 1) ** e - 2 * k[1:] ** e + (k[1:] - 1) ** e
    a = np.zeros(n + 1)
    a[1:] = (k[1:] - 1) ** e - (k[1:] - alpha - 1) * k[1:] ** alpha - c[1:]
    c.setflags(write=False)
    a.setflags(write=False)
    return c, a


@lru_cache(maxsize=32)
def fractional_rectangle_weights(n, alpha):
    """Left-rectangle weights (k+1)^alpha - k^alpha of the predictor step."""
    k = np.arange(n + 1, dtype=float)
    b = (k + 1) ** alpha - k ** alpha
    b.setflags(write=False)
    return b


def _moments(i, lo, hi, p, q):
    """
    Zeroth and first moments of (i - u)^(p-1) u^(q-1) over [lo, hi].

    Panels in the left half use the regularized incomplete beta function
    from 0, panels in the right half its complement from i; both keep the
    small near-singular contributions accurate.
    """
    scale0 = i ** (p + q - 1) * special.beta(q, p)
    scale1 = i ** (p + q) * special.beta(q + 1, p)
    xl, xh = lo / i, hi / i
    left = hi <= 0.5 * i
    with np.errstate(invalid="ignore", divide="ignore"):
        p_left = special.betainc(q, p, xh) - special.betainc(q, p, xl)
        q_left = special.betainc(q + 1, p, xh) - special.betainc(q + 1, p, xl)
        p_right = special.betainc(p, q, 1 - xl) - special.betainc(p, q, 1 - xh)
        q_right = special.betainc(p, q + 1, 1 - xl) - special.betainc(p, q + 1, 1 - xh)
    m0 = scale0 * np.where(left, p_left, p_right)
    m1 = scale1 * np.where(left, q_left, q_right)
    return m0, m1


def _start_moment(i, p, q, gamma_):
    """Integral of (i - u)^(p-1) u^(q-1+gamma_) over [0, 1]."""
    qq = q + gamma_
    return i ** (p + qq - 1) * special.beta(qq, p) * special.betainc(qq, p, 1.0 / i)


def _rows(rows, n, p, q):
    rows = np.asarray(rows, dtype=float)[:, None]
    j = np.arange(n, dtype=float)[None, :]
    active = j < rows
    lo = np.where(active, j, 0.0)
    hi = np.where(active, j + 1, 1.0)
    m0, m1 = _moments(rows, lo, hi, p, q)
    m0 = np.where(active, m0, 0.0)
    m1 = np.where(active, m1, 0.0)
    out = np.zeros((rows.shape[0], n + 1))
    out[:, :-1] += (j + 1) * m0 - m1
    out[:, 1:] += m1 - j * m0
    return out


def _check_orders(p, q):
    if not (np.isfinite(p) and np.isfinite(q)) or p <= 0 or q <= 0:
        raise DomainError(f"kernel exponents must be positive, got p={p!r}, q={q!r}")


def _check_exponent(gamma_):
    if gamma_ is not None and (not np.isfinite(gamma_) or gamma_ <= 0):
        raise DomainError(f"grading exponent must be positive, got {gamma_!r}")


# -- graded end zones ----------------------------------------------------

def graded_zone_size(n):
    """Panels in each graded zone of a grid with n intervals."""
    return min(GRADED_PANELS, n // 4)


def _start_zone_size(n):
    return max(1, graded_zone_size(n)) if n >= 1 else 0


@lru_cache(maxsize=None)
def _legendre01():
    x, w = special.roots_legendre(ZONE_NODES)
    return 0.5 * (x + 1), 0.5 * w


@lru_cache(maxsize=64)
def _jacobi01(p):
    """Nodes and weights of int_0^1 y^(p-1) phi(y) dy."""
    x, w = special.roots_jacobi(ZONE_NODES, 0.0, p - 1.0)
    return 0.5 * (x + 1), w * 0.5 ** p


def _lagrange(v_nodes, v):
    """Lagrange basis through v_nodes at the points v, shape (len(v), len(v_nodes))."""
    v = np.asarray(v, dtype=float)[:, None]
    out = np.empty((v.shape[0], len(v_nodes)))
    for k, vk in enumerate(v_nodes):
        others = np.delete(v_nodes, k)
        out[:, k] = np.prod((v - others) / (vk - others), axis=1)
    return out


def _graded_minus_linear(u, j, nodes, warp):
    basis = _lagrange(warp(nodes.astype(float)), warp(u))
    k = int(np.flatnonzero(nodes == j)[0])
    basis[:, k] -= j + 1 - u
    basis[:, k + 1] -= u - j
    return basis


def _zone_panel(rows, j, nodes, warp, p, q):
    """
    Graded minus linear weights of panel [j, j+1] for rows i > j, one
    column per node. The data on the panel are the Lagrange interpolant
    in warp(u) through nodes; the row next to the panel uses the
    Gauss-Jacobi rule of its (i - u)^(p-1) singularity.
    """
    rows = np.asarray(rows, dtype=float)
    x, w = _legendre01()
    u = j + x
    weights = w * (rows[:, None] - u) ** (p - 1) * u ** (q - 1)
    out = weights @ _graded_minus_linear(u, j, nodes, warp)
    adjacent = rows == j + 1
    if np.any(adjacent):
        y, wy = _jacobi01(p)
        ua = j + 1 - y
        out[adjacent] = (wy * ua ** (q - 1)) @ _graded_minus_linear(ua, j, nodes, warp)
    return out


def _start_panel(rows, stop, p, q, gamma_):
    """Graded minus linear weights of [0, 1] with nodes 0..stop, from exact moments."""
    rows = np.asarray(rows, dtype=float)
    v = np.arange(stop + 1, dtype=float) ** gamma_
    C = np.linalg.inv(np.vander(v, increasing=True))
    mu = np.stack([_start_moment(rows, p, q, e * gamma_) for e in range(stop + 1)], axis=1)
    out = mu @ C
    m0 = _start_moment(rows, p, q, 0.0)
    m1 = _start_moment(rows, p, q, 1.0)
    out[:, 0] -= m0 - m1
    out[:, 1] -= m1
    return out


def _end_panel(p, gamma_):
    """Graded minus linear weights of the last panel for the last row, q = 1."""
    dist = np.arange(GRADED_DEGREE, -1, -1, dtype=float)
    C = np.linalg.inv(np.vander(dist ** gamma_, increasing=True))
    out = (1.0 / (p + gamma_ * np.arange(GRADED_DEGREE + 1))) @ C
    out[-2] -= 1.0 / (p + 1)
    out[-1] -= 1.0 / p - 1.0 / (p + 1)
    return out


def _start_zone_rows(rows, zone, p, q, gamma_):
    """
    Start-zone corrections for the given rows, columns 0..max(zone, 3).

    Panel j uses the nodes max(0, j-2)..max(j+1, min(3, i)), so no row
    reaches beyond its own node.
    """
    rows = np.asarray(rows, dtype=int)
    out = np.zeros((rows.shape[0], max(zone, GRADED_DEGREE) + 1))
    def warp(u):
        return u ** gamma_
    for j in range(zone):
        live = rows > j
        stops = np.maximum(j + 1, np.minimum(GRADED_DEGREE, rows))
        for stop in np.unique(stops[live]):
            sel = live & (stops == stop)
            nodes = np.arange(max(0, j + 1 - GRADED_DEGREE), stop + 1)
            if j == 0:
                block = _start_panel(rows[sel], stop, p, q, gamma_)
            else:
                block = _zone_panel(rows[sel], j, nodes, warp, p, q)
            out[np.ix_(sel, nodes)] += block
    return out


@lru_cache(maxsize=16)
def start_zone_correction(n, p, q, gamma_):
    """
    Change of the rows of two_sided_weights(n, p, q) when the first panels
    hold data cubic in u^gamma_ (linear in u^gamma_ on row 1, quadratic on
    row 2).

    Returns
        D: np.ndarray
            (n+1, k) read-only matrix; row i adds to the weights of the
            nodes 0..k-1
    """
    _check_orders(p, q)
    _check_exponent(gamma_)
    zone = _start_zone_size(n)
    width = min(max(zone, GRADED_DEGREE), n) + 1
    D = np.zeros((n + 1, width))
    if n >= 1:
        D[1:] = _start_zone_rows(np.arange(1, n + 1), zone, p, q, gamma_)[:, :width]
    D.setflags(write=False)
    return D


@lru_cache(maxsize=16)
def end_zone_correction(n, p, gamma_):
    """
    Change of the left-integral weights in index units,
    int_0^i (i - u)^(p-1) phi(u) du, when the last panels hold data cubic
    in (n - u)^gamma_.

    Returns
        D: np.ndarray
            (k+1, k+3) read-only block for rows n-k..n and columns
            n-k-2..n, k = graded_zone_size(n); empty when k = 0
    """
    _check_orders(p, 1.0)
    _check_exponent(gamma_)
    zone = graded_zone_size(n)
    if zone == 0:
        D = np.zeros((0, 0))
        D.setflags(write=False)
        return D
    first, col0 = n - zone, n - zone - 2
    rows = np.arange(first, n + 1)
    D = np.zeros((zone + 1, zone + 3))
    def warp(u):
        return (n - u) ** gamma_
    for j in range(first, n):
        nodes = np.arange(j + 1 - GRADED_DEGREE, j + 2)
        cols = nodes - col0
        if j == n - 1:
            D[-1, cols] += _end_panel(p, gamma_)
        else:
            live = rows > j
            D[np.ix_(live, cols)] += _zone_panel(rows[live], j, nodes, warp, p, 1.0)
    D.setflags(write=False)
    return D


class GradedCorrection:
    """
    Graded-zone corrections of the left Riemann-Liouville integral of order
    alpha on n intervals, in index units: the integral of the data gains
    h^alpha / Gamma(alpha) times the corrections.

    Parameters
        n: int
            Number of intervals
        alpha: float
        start_exponent, end_exponent: float, optional
            Grading exponents at t=a and t=b; None keeps that end linear
    """
    def __init__(self, n, alpha, start_exponent=None, end_exponent=None):
        self.n = int(n)
        self.blocks = []
        if start_exponent is not None and self.n >= 1:
            self.blocks.append((0, 0, start_zone_correction(self.n, alpha, 1.0, start_exponent)))
        if end_exponent is not None:
            D = end_zone_correction(self.n, alpha, end_exponent)
            if D.size:
                zone = D.shape[0] - 1
                self.blocks.append((self.n - zone, self.n - zone - 2, D))

    def __bool__(self):
        return bool(self.blocks)

    def apply(self, values):
        """Corrections of every row for the samples values (n+1, ...)."""
        values = np.asarray(values, dtype=float)
        out = np.zeros_like(values)
        for r0, c0, D in self.blocks:
            out[r0:r0 + D.shape[0]] += np.tensordot(D, values[c0:c0 + D.shape[1]], axes=(1, 0))
        return out

    def row(self, i):
        """Correction weights of row i over nodes 0..i, None outside every zone."""
        out = None
        for r0, c0, D in self.blocks:
            if not r0 <= i < r0 + D.shape[0]:
                continue
            if out is None:
                out = np.zeros(i + 1)
            width = min(D.shape[1], i + 1 - c0)
            out[c0:c0 + width] += D[i - r0, :width]
        return out


def two_sided_row(i, p, q, start_exponent=None):
    """
    Single row of two_sided_weights: weights w_0..w_i with
    sum_j w_j phi(j) ~ int_0^i (i - u)^(p-1) u^(q-1) phi(u) du.
    """
    _check_orders(p, q)
    _check_exponent(start_exponent)
    if i == 0:
        return np.zeros(1)
    out = _rows([i], i, p, q)[0]
    if start_exponent is not None:
        D = _start_zone_rows([i], _start_zone_size(i), p, q, start_exponent)[0]
        width = min(D.shape[0], i + 1)
        out[:width] += D[:width]
    return out


@lru_cache(maxsize=16)
def two_sided_weights(n, p, q, start_exponent=None):
    """
    Lower-triangular product-integration matrix for a kernel singular at
    both ends of the interval, in index units.

    Row i holds the weights of
        int_0^i (i - u)^(p-1) u^(q-1) phi(u) du
    for phi linear on every unit panel; with start_exponent gamma the first
    graded_zone_size(n) panels instead take phi cubic in u^gamma. Row i
    only uses phi_0..phi_i, so W[:m+1, :m+1] steps a problem on m <= n
    intervals.

    Parameters
        n: int
            Number of intervals
        p: float
            Exponent of the right factor, > 0
        q: float
            Exponent of the left factor, > 0
        start_exponent: float
            Optional exponent of the graded start zone
    Returns
        W: np.ndarray
            (n+1, n+1) read-only matrix, row 0 is zero
    """
    _check_orders(p, q)
    _check_exponent(start_exponent)
    W = np.zeros((n + 1, n + 1))
    for start in range(1, n + 1, ROW_CHUNK):
        stop = min(start + ROW_CHUNK, n + 1)
        W[start:stop] = _rows(np.arange(start, stop), n, p, q)
    if start_exponent is not None and n >= 1:
        D = start_zone_correction(n, p, q, start_exponent)
        W[:, :D.shape[1]] += D
    W.setflags(write=False)
    return W


def singular_endpoint_weights(grid, beta, start_exponent=None):
    """
    Weights w_j with sum_j w_j phi(t_j) ~ int_a^b (b - t)^(beta-1) phi(t) dt.

    Exact for piecewise-linear phi; with start_exponent gamma the panels
    next to b take phi cubic in (b - t)^gamma.
    """
    row = two_sided_row(grid.n, 1.0, beta, start_exponent)
    return grid.h ** beta * row[::-1]
