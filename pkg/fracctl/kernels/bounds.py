from dataclasses import asdict, dataclass, field

import numpy as np

from ..special import MlQuery, mittag_leffler
from .diagonalization import PSD_TOL

UPPER_SLACK = 1e-8
LOWER_SLACK = 1e-6
# lower envelopes also allow RESOLUTION_SLACK (1 + rate) h / (b - a)
RESOLUTION_SLACK = 0.1


@dataclass
class BoundsRecord:
    """
    Two-sided Mittag-Leffler envelopes of the transition kernels and the
    nodes where the computed kernels leave them.

    top_eigenvalue is the largest signed eigenvalue of the coefficient
    matrix, lambda_max the largest modulus. case is "dissipative" when the
    coefficient is -A g(t) with A psd and g >= 0, "general" otherwise.
    Lower envelopes are checked per eigencomponent, up to a slack that
    shrinks with the grid step; the spectral-norm versions are recorded in
    norm_lower_violations for information only.
    """
    case: str
    top_eigenvalue: float
    lambda_max: float
    M: float
    psi_lower: float
    psi_upper: float
    phi_lower: float
    phi_upper: float
    psi_norms: list
    phi_norms: list
    lower_slack: float = LOWER_SLACK
    violations: list = field(default_factory=list)
    norm_lower_violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def to_dict(self):
        return asdict(self)


def _spectral_norms(diagonal):
    # kernels are U diag U^T, so the spectral norm is the largest |entry|
    return np.max(np.abs(diagonal), axis=1)


def kernel_bounds_report(kernel):
    """
    Check Psi(a, t) and (b - t)^(1-alpha) Phi(t, b) against their envelopes
    at every node.

    Parameters
        kernel: TransitionKernel
    Returns
        record: BoundsRecord
    """
    alpha = kernel.alpha
    eig = kernel.diag.eigenvalues
    lambda_max = kernel.diag.lambda_max
    M = kernel.sup_g
    span = kernel.grid.length ** alpha
    dissipative = (bool(np.all(eig <= PSD_TOL * (1 + lambda_max)))
                   and bool(np.all(kernel.g.values >= 0)))

    rate = lambda_max * M * span
    lower_slack = LOWER_SLACK + RESOLUTION_SLACK * (1 + rate) * kernel.grid.h / kernel.grid.length
    if dissipative:
        case = "dissipative"
        psi_lower = mittag_leffler(MlQuery(alpha, 1.0, -rate))
        psi_upper = 1.0
        phi_lower = mittag_leffler(MlQuery(alpha, alpha, -rate))
        phi_upper = 1.0
    else:
        case = "general"
        psi_lower = mittag_leffler(MlQuery(alpha, 1.0, -rate))
        psi_upper = mittag_leffler(MlQuery(alpha, 1.0, rate))
        phi_lower = mittag_leffler(MlQuery(alpha, alpha, -rate))
        phi_upper = mittag_leffler(MlQuery(alpha, alpha, rate))

    psi_diag = kernel.psi_diagonal()
    phi_diag = kernel.phi_regularized_diagonal()
    psi_norms = _spectral_norms(psi_diag)
    phi_norms = _spectral_norms(phi_diag)

    violations = []
    norm_lower = []
    checks = (("psi", psi_diag, psi_norms, psi_lower, psi_upper),
              ("phi_regularized", phi_diag, phi_norms, phi_lower, phi_upper))
    for name, diagonal, norms, lower, upper in checks:
        for j in np.flatnonzero(norms > upper * (1 + UPPER_SLACK) + UPPER_SLACK):
            violations.append({"quantity": f"{name}_upper", "node": int(j),
                               "value": float(norms[j]), "bound": float(upper)})
        smallest = np.min(np.abs(diagonal), axis=1)
        for j in np.flatnonzero(smallest < lower - lower_slack):
            violations.append({"quantity": f"{name}_lower", "node": int(j),
                               "value": float(smallest[j]), "bound": float(lower)})
        for j in np.flatnonzero(norms < lower - lower_slack):
            norm_lower.append({"quantity": f"{name}_norm_lower", "node": int(j),
                               "value": float(norms[j]), "bound": float(lower)})

    return BoundsRecord(
        case=case, top_eigenvalue=float(np.max(eig)) if eig.size else 0.0,
        lambda_max=float(lambda_max), M=M,
        psi_lower=float(psi_lower), psi_upper=float(psi_upper),
        phi_lower=float(phi_lower), phi_upper=float(phi_upper), lower_slack=float(lower_slack),
        psi_norms=psi_norms.tolist(), phi_norms=phi_norms.tolist(),
        violations=violations, norm_lower_violations=norm_lower)
