from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# lambda_min <= SINGULAR_RTOL * lambda_max counts as singular
SINGULAR_RTOL = 1e-12


def _eigen_extremes(M):
    eig = np.linalg.eigvalsh(M)
    return float(eig[0]), float(eig[-1])


def is_nonsingular(min_eigenvalue, max_eigenvalue, rtol=SINGULAR_RTOL):
    return max_eigenvalue > 0 and min_eigenvalue > rtol * max_eigenvalue


@dataclass(frozen=True)
class Gramian:
    """
    Weighted controllability Gramian W(a, b) = U W_D U^T.

    Parameters
        W: np.ndarray
            (d, d) symmetric matrix
        W_D: np.ndarray
            Same matrix in the eigenbasis of A
        interval: tuple
            (a, b)
        alpha: float
    """
    W: np.ndarray
    W_D: np.ndarray
    interval: tuple
    alpha: float
    min_eigenvalue: float
    max_eigenvalue: float

    @classmethod
    def from_matrices(cls, W, W_D, interval, alpha):
        W = 0.5 * (W + W.T)
        lo, hi = _eigen_extremes(W)
        return cls(W=W, W_D=W_D, interval=tuple(interval), alpha=float(alpha),
                   min_eigenvalue=lo, max_eigenvalue=hi)

    @property
    def nonsingular(self):
        return is_nonsingular(self.min_eigenvalue, self.max_eigenvalue)

    @property
    def condition(self):
        if not self.nonsingular:
            return float("inf")
        return self.max_eigenvalue / self.min_eigenvalue

    def to_dict(self):
        return {"W": self.W.tolist(), "interval": list(self.interval), "alpha": self.alpha,
                "min_eigenvalue": self.min_eigenvalue, "max_eigenvalue": self.max_eigenvalue,
                "condition": self.condition, "nonsingular": self.nonsingular}


@dataclass(frozen=True)
class ControlLaw:
    """Minimum-energy control steering y0 to the target on [a, b]."""
    z_hat_b: np.ndarray
    u: object
    gramian: Gramian
    target: np.ndarray
    initial: np.ndarray
    psi_ab: np.ndarray
    l2_norm: float

    @property
    def defect(self):
        """y_b - Psi(a, b) y_0"""
        return self.target - self.psi_ab @ self.initial

    def to_dict(self):
        return {"z_hat_b": self.z_hat_b.tolist(), "target": self.target.tolist(),
                "initial": self.initial.tolist(), "psi_ab": self.psi_ab.tolist(),
                "l2_norm": self.l2_norm, "gramian": self.gramian.to_dict(),
                "t": self.u.grid.nodes.tolist(),
                "u": self.u.values.reshape(self.u.grid.n_nodes, -1).tolist()}


@dataclass(frozen=True)
class ObservabilityReport:
    """
    O(a, b) = int (b-t)^(2(1-alpha)) Phi(t,b)^T B B^T Phi(t,b) dt and the
    observability constant C = 1/lambda_min(O); C is inf when not observable.
    observable is also the unique-continuation verdict: B^T z = 0 on [a, b]
    forces z = 0 exactly when O is nonsingular.
    """
    constant: float
    O: np.ndarray
    min_eigenvalue: float
    max_eigenvalue: float

    @property
    def observable(self):
        return is_nonsingular(self.min_eigenvalue, self.max_eigenvalue)

    def to_dict(self):
        return {"constant": self.constant if np.isfinite(self.constant) else None,
                "O": self.O.tolist(), "min_eigenvalue": self.min_eigenvalue,
                "max_eigenvalue": self.max_eigenvalue, "observable": self.observable}


@dataclass
class ControlBounds:
    """Realized control and adjoint quantities next to their a priori bounds."""
    r_alpha_plus: float
    max_control: float
    pointwise_bound: float
    max_adjoint: float
    adjoint_bound: float
    l2_norm: float
    l2_bound: float
    pairing: float
    gramian_form: float
    defect_pairing: float
    energy: float
    observability_form: float
    checks: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(self.checks.values())

    def to_dict(self):
        out = {k: v for k, v in self.__dict__.items() if k != "checks"}
        out["checks"] = dict(self.checks)
        return out
