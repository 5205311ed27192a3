from __future__ import annotations

import numpy as np
from scipy import signal, special

from ..exceptions import DomainError, InputError
from .grid import SampledFunction, _check_same_grid
from .quadrature import GradedCorrection, fractional_trapezoid_weights, trapezoid_weights

LEFT, RIGHT = "left", "right"
CAPUTO_LEFT, RL_RIGHT = "caputo_left", "rl_right"
# L1 needs a few panels before its leading error term is meaningful
MIN_DERIVATIVE_STEPS = 4


def _check_order(alpha, upper=1.0):
    if not np.isfinite(alpha) or not 0 < alpha < upper:
        raise DomainError(f"alpha must lie in (0, {upper:g}), got {alpha!r}", field="alpha")


def _broadcast(weights, values):
    return weights.reshape((-1,) + (1,) * (values.ndim - 1))


def left_integral_values(values, h, alpha, start_exponent=None, end_exponent=None):
    """
    Product-trapezoid left Riemann-Liouville integral of raw samples.

    values is (n+1,) or (n+1, ...); the first axis runs over uniform nodes
    with spacing h. Entry 0 of the result is 0. With start_exponent gamma
    the panels next to t=a take the data cubic in (t - a)^gamma, which
    suits integrands that start like t^alpha; end_exponent does the same
    next to t=b for integrands with a (b - t)^gamma cusp.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[0] - 1
    c, a = fractional_trapezoid_weights(n, alpha)
    conv = signal.fftconvolve(_broadcast(c, values), values, axes=0)[:n + 1]
    conv = conv + _broadcast(a, values) * values[0]
    conv[0] = 0.0
    out = h ** alpha / special.gamma(alpha + 2) * conv
    graded = GradedCorrection(n, alpha, start_exponent, end_exponent)
    if graded:
        out += h ** alpha / special.gamma(alpha) * graded.apply(values)
    return out


def l1_caputo_values(values, h, alpha):
    """L1 discretization of the left Caputo derivative of raw samples."""
    values = np.asarray(values, dtype=float)
    n = values.shape[0] - 1
    k = np.arange(n, dtype=float)
    b = (k + 1) ** (1 - alpha) - k ** (1 - alpha)
    diffs = np.diff(values, axis=0)
    out = np.zeros_like(values)
    out[1:] = signal.fftconvolve(_broadcast(b, diffs), diffs, axes=0)[:n]
    return h ** (-alpha) / special.gamma(2 - alpha) * out


def rl_integral(f: SampledFunction, alpha: float, side: str = LEFT) -> SampledFunction:
    """
    Left (a I_t^alpha) or right (t I_b^alpha) Riemann-Liouville integral.

    The input is interpolated linearly between nodes and the kernel is
    integrated exactly on every panel. The left integral is 0 at t=a, the
    right one is 0 at t=b.
    """
    _check_order(alpha)
    h = f.grid.h
    if side == LEFT:
        return SampledFunction(f.grid, left_integral_values(f.values, h, alpha))
    if side == RIGHT:
        return SampledFunction(f.grid, left_integral_values(f.values[::-1], h, alpha)[::-1])
    raise InputError(f"side must be {LEFT!r} or {RIGHT!r}, got {side!r}", field="side")


def right_caputo_values(values, h, alpha):
    """Right Caputo derivative by reflecting the L1 scheme; 0 at t=b."""
    values = np.asarray(values, dtype=float)
    return l1_caputo_values(values[::-1], h, alpha)[::-1]


def frac_derivative(f: SampledFunction, alpha: float, kind: str = CAPUTO_LEFT) -> SampledFunction:
    """
    Left Caputo or right Riemann-Liouville derivative of sampled data.

    caputo_left is the L1 scheme. rl_right is assembled as
    f(b)(b - t)^(-alpha)/Gamma(1 - alpha) plus the right Caputo derivative;
    its value at t=b, where the defining integral is empty, is returned as 0.
    """
    _check_order(alpha)
    if f.grid.n < MIN_DERIVATIVE_STEPS:
        raise InputError(
            f"fractional derivatives need at least {MIN_DERIVATIVE_STEPS} intervals, got {f.grid.n}",
            field="n_steps")
    h = f.grid.h
    if kind == CAPUTO_LEFT:
        return SampledFunction(f.grid, l1_caputo_values(f.values, h, alpha))
    if kind == RL_RIGHT:
        out = right_caputo_values(f.values, h, alpha)
        dist = f.grid.b - f.grid.nodes[:-1]
        jump = np.multiply.outer(dist ** (-alpha), f.values[-1]) / special.gamma(1 - alpha)
        out[:-1] += jump.reshape(out[:-1].shape)
        out[-1] = 0.0
        return SampledFunction(f.grid, out)
    raise InputError(f"kind must be {CAPUTO_LEFT!r} or {RL_RIGHT!r}, got {kind!r}", field="kind")


def integration_by_parts_residual(f: SampledFunction, g: SampledFunction, alpha: float) -> float:
    """
    |LHS - RHS| of the fractional integration by parts formula

        int f * (C D^alpha g) dt
            = [t I_b^(1-alpha) f * g]_a^b + int (t D_b^alpha f) * g dt.

    The weakly singular part f(b)(b - t)^(-alpha)/Gamma(1 - alpha) of the
    right derivative is integrated against g exactly, as
    f(b) * (a I^(1-alpha) g)(b); the rest uses the trapezoid rule.
    """
    _check_order(alpha)
    _check_same_grid(f, g)
    if f.values.ndim != 1 or g.values.ndim != 1:
        raise InputError("integration by parts is defined here for scalar samples")
    if f.grid.n < MIN_DERIVATIVE_STEPS:
        raise InputError(
            f"need at least {MIN_DERIVATIVE_STEPS} intervals, got {f.grid.n}", field="n_steps")
    h = f.grid.h
    w = trapezoid_weights(f.grid)
    lhs = np.dot(w, f.values * l1_caputo_values(g.values, h, alpha))

    right_int_f = left_integral_values(f.values[::-1], h, 1 - alpha)[::-1]
    left_int_g = left_integral_values(g.values, h, 1 - alpha)
    boundary = -right_int_f[0] * g.values[0]
    singular = f.values[-1] * left_int_g[-1]
    regular = np.dot(w, right_caputo_values(f.values, h, alpha) * g.values)
    return float(abs(lhs - (boundary + singular + regular)))
