from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from ..exceptions import DomainError

# absolute tolerance of the Mittag-Leffler evaluation
ML_ABS_TOL = 1e-12
# |x|^(1/alpha) below which the alternating series is still accurate
SERIES_RADIUS = 6.0
# number of nodes on the optimized Talbot contour
CONTOUR_NODES = 40

# optimized cotangent contour z(theta) = N*(S*theta*cot(NU*theta) + SHIFT + i*MU*theta)
_S, _NU, _SHIFT, _MU = 0.5017, 0.6407, -0.6122, 0.2645


def _check_positive(name, value):
    if not np.isfinite(value) or value <= 0:
        raise DomainError(f"{name} must be a finite positive number, got {value!r}", field=name)


def gamma(x: float) -> float:
    """Gamma function for x > 0."""
    _check_positive("x", x)
    return float(special.gamma(x))


def beta(x: float, y: float) -> float:
    """Beta function B(x, y) = Gamma(x)Gamma(y)/Gamma(x+y) for x, y > 0."""
    _check_positive("x", x)
    _check_positive("y", y)
    return float(special.beta(x, y))


@dataclass(frozen=True)
class MlQuery:
    """
    Arguments of a two-parameter Mittag-Leffler evaluation.

    Parameters
        alpha: float
            Order, in (0, 2]
        beta: float
            Second parameter, > 0
        x: float
            Real argument
    """
    alpha: float
    beta: float = 1.0
    x: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.alpha) or not 0 < self.alpha <= 2:
            raise DomainError(f"alpha must lie in (0, 2], got {self.alpha!r}", field="alpha")
        _check_positive("beta", self.beta)
        if not np.isfinite(self.x):
            raise DomainError(f"x must be finite, got {self.x!r}", field="x")


def _series(alpha, beta, x, tol):
    if x == 0:
        return 1.0 / special.gamma(beta)
    # index of the largest term, then well past it
    peak = abs(x) ** (1.0 / alpha) / alpha
    n_terms = int(2 * peak + 60)
    k = np.arange(n_terms)
    with np.errstate(over="ignore"):
        log_terms = k * math.log(abs(x)) - special.gammaln(alpha * k + beta)
        terms = np.exp(log_terms)
    if x > 0 and not np.all(np.abs(terms) < 1e300):
        return math.inf
    if x < 0:
        terms[1::2] *= -1
    # drop the negligible tail so fsum works on the significant part only
    significant = np.abs(terms) >= tol * 1e-4
    significant[:2] = True
    last = np.nonzero(significant)[0][-1]
    return math.fsum(terms[:last + 1].tolist())


def _right_of_contour(pole, n_nodes):
    """True when a pole lies between the contour and the Bromwich line."""
    height = _MU * n_nodes
    if abs(pole.imag) >= height * math.pi:
        return True
    theta = pole.imag / height
    if theta == 0:
        crossing = n_nodes * (_S / _NU + _SHIFT)
    else:
        crossing = n_nodes * (_S * theta / math.tan(_NU * theta) + _SHIFT)
    return pole.real > crossing


def _poles(alpha, x):
    """Solutions of s**alpha = x on the principal sheet."""
    radius = abs(x) ** (1.0 / alpha)
    phase = 0.0 if x > 0 else math.pi
    poles = []
    j_max = int(alpha / 2) + 2
    for j in range(-j_max, j_max + 1):
        arg = (phase + 2 * math.pi * j) / alpha
        if -math.pi < arg <= math.pi:
            poles.append(radius * complex(math.cos(arg), math.sin(arg)))
    return poles


def _contour(alpha, beta, x, n_nodes=CONTOUR_NODES):
    theta = -math.pi + (np.arange(n_nodes) + 0.5) * (2 * math.pi / n_nodes)
    cot = 1.0 / np.tan(_NU * theta)
    z = n_nodes * (_S * theta * cot + _SHIFT + 1j * _MU * theta)
    dz = n_nodes * (_S * cot - _S * _NU * theta / np.sin(_NU * theta) ** 2 + 1j * _MU)
    laplace = z ** (alpha - beta) / (z ** alpha - x)
    value = np.sum(np.imag(np.exp(z) * laplace * dz)) / n_nodes
    for pole in _poles(alpha, x):
        if _right_of_contour(pole, n_nodes):
            value += (np.exp(pole) * pole ** (1.0 - beta) / alpha).real
    return float(value)


def mittag_leffler(q: MlQuery, tol: float = ML_ABS_TOL) -> float:
    """
    Two-parameter Mittag-Leffler function E_{alpha,beta}(x) on the real line.

    Non-negative arguments and small negative ones are summed as a Taylor
    series with compensated summation; large negative arguments are
    obtained by inverting the Laplace transform s^(a-b)/(s^a - x) on an
    optimized Talbot contour.

    Parameters
        q: MlQuery
            Order, second parameter and argument
        tol: float
            Absolute tolerance of the series truncation
    Returns
        value: float
            E_{alpha,beta}(x); may be inf when the result overflows
    """
    if not isinstance(q, MlQuery):
        q = MlQuery(*q)
    alpha, b, x = q.alpha, q.beta, q.x
    if x >= 0 or abs(x) ** (1.0 / alpha) <= SERIES_RADIUS:
        return float(_series(alpha, b, x, tol))
    return _contour(alpha, b, x)


def mittag_leffler_array(x, alpha: float, beta: float = 1.0, tol: float = ML_ABS_TOL):
    """Element-wise E_{alpha,beta} over an array of real arguments."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    flat = out.reshape(-1)
    for i, xi in enumerate(x.reshape(-1)):
        flat[i] = mittag_leffler(MlQuery(alpha, beta, float(xi)), tol=tol)
    return out
