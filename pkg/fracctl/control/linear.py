"""
Minimum-energy control of C D^alpha y = A g(t) y + B u on [a, b].

All terminal integrals carry the weight (b - t)^(alpha-1) and are evaluated
with the kernel's endpoint rule against the regularized kernel
F(t) = (b - t)^(1-alpha) Phi(t, b). apply_control re-solves the state
forward from y0 without that rule, so its terminal error is an independent
measure of how well the control steers.
"""
from __future__ import annotations

import numpy as np
from scipy import linalg

from ..calculus import SampledFunction, trapezoid_weights
from ..exceptions import InputError, NotControllableError
from ..special import MlQuery, mittag_leffler
from ..utils.logger import get_logger
from .reports import (
    ControlBounds,
    ControlLaw,
    Gramian,
    ObservabilityReport,
    _eigen_extremes,
    is_nonsingular,
)

logger = get_logger(__name__)

RANK_RTOL = 1e-10
BOUND_SLACK = 1e-6


def _as_input_matrix(B, d):
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    if B.ndim != 2 or B.shape[0] != d:
        raise InputError(f"B must have {d} rows, got shape {B.shape}", field="B")
    if not np.all(np.isfinite(B)):
        raise InputError("B must be finite", field="B")
    return B


def kalman_rank(A, B, rtol=RANK_RTOL):
    """
    Rank of [B | AB | ... | A^(d-1) B] from its singular values.

    Returns
        rank: int
        controllable: bool
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"A must be square, got shape {A.shape}", field="A")
    d = A.shape[0]
    B = _as_input_matrix(B, d)
    blocks = [B]
    for _ in range(d - 1):
        blocks.append(A @ blocks[-1])
    sigma = linalg.svdvals(np.hstack(blocks))
    if sigma.size == 0 or sigma[0] == 0:
        return 0, False
    rank = int(np.sum(sigma > rtol * sigma[0]))
    return rank, rank == d


def _regularized_terminal(kernel):
    return kernel.phi_regularized_diagonal()


def gramian(kernel, B, pin_start=False):
    """
    W(a, b) = int (b-t)^(1-alpha) Phi(t,b) B B^T Phi(t,b)^T dt
            = int (b-t)^(alpha-1) F(t) B B^T F(t) dt.

    With pin_start the quadrature weight of t = a is dropped: the Gramian
    of controls whose sample at a is zero.
    """
    B = _as_input_matrix(B, kernel.d)
    Bt = kernel.diag.transform_input(B)
    F = _regularized_terminal(kernel)
    w = kernel.terminal_weights()
    if pin_start:
        w = w.copy()
        w[0] = 0.0
    W_D = ((F.T * w) @ F) * (Bt @ Bt.T)
    U = kernel.diag.U
    return Gramian.from_matrices(U @ W_D @ U.T, W_D, kernel.interval, kernel.alpha)


def minimizer_zb(W, Psi_ab, y0, yb):
    """
    z_hat_b = W^(-1)(y_b - Psi(a, b) y_0).

    Raises NotControllableError when W is singular.
    """
    if not W.nonsingular:
        raise NotControllableError(
            f"controllability Gramian is singular (lambda_min={W.min_eigenvalue:.3e}, "
            f"lambda_max={W.max_eigenvalue:.3e})",
            min_eigenvalue=W.min_eigenvalue, max_eigenvalue=W.max_eigenvalue)
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    yb = np.atleast_1d(np.asarray(yb, dtype=float))
    rhs = yb - np.asarray(Psi_ab) @ y0
    z = linalg.solve(W.W, rhs, assume_a="sym")
    residual = np.linalg.norm(W.W @ z - rhs)
    if residual > 1e-10 * (1 + np.linalg.norm(yb)):
        logger.warning("Gramian solve residual %.3e; W is ill conditioned (cond %.3e)",
                       residual, W.condition)
    return z


def adjoint_regularized(kernel, z_b):
    """(n+1, d) samples of (b - t)^(1-alpha) Phi(t, b) z_b."""
    reg = _regularized_terminal(kernel) * kernel.diag.to_eigenbasis(z_b)
    return kernel.diag.from_eigenbasis(reg)


def synthesize_linear(kernel, B, y0, yb, check_rank=True, pin_start=False):
    """
    Minimum-energy control u(t) = B^T (b-t)^(1-alpha) Phi(t,b)^T z_hat_b.

    Parameters
        kernel: TransitionKernel
            Kernels of C D^alpha y = A g(t) y on [a, b]
        B: np.ndarray
            (d, N) input matrix
        y0, yb: np.ndarray
            Initial and target states
        check_rank: bool
            Run the Kalman rank test first
        pin_start: bool
            Require u(a) = 0, for a control spliced onto a zero control
            before a; the sampled control then still steers exactly
    Returns
        law: ControlLaw
    """
    B = _as_input_matrix(B, kernel.d)
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    yb = np.atleast_1d(np.asarray(yb, dtype=float))
    if check_rank:
        rank, controllable = kalman_rank(kernel.matrix, B)
        if not controllable:
            raise NotControllableError(
                f"Kalman rank condition fails: rank {rank} < d = {kernel.d}", rank=rank)
    W = gramian(kernel, B, pin_start=pin_start)
    psi_ab = kernel.psi(kernel.grid.n)
    z_hat = minimizer_zb(W, psi_ab, y0, yb)
    u_vals = adjoint_regularized(kernel, z_hat) @ B
    if pin_start:
        u_vals[0] = 0.0
    u = SampledFunction(kernel.grid, u_vals)
    l2 = float(np.sqrt(trapezoid_weights(kernel.grid) @ np.sum(u_vals ** 2, axis=1)))
    logger.info("linear synthesis: |z_hat_b| = %.6g, |u|_L2 = %.6g", np.linalg.norm(z_hat), l2)
    return ControlLaw(z_hat_b=z_hat, u=u, gramian=W, target=yb, initial=y0,
                      psi_ab=psi_ab, l2_norm=l2)


def _forcing(kernel, B, u):
    if not u.grid.matches(kernel.grid):
        raise InputError("control must live on the kernel grid", field="grid")
    u_vals = u.values.reshape(kernel.grid.n_nodes, -1)
    if u_vals.shape[1] != B.shape[1]:
        raise InputError(f"control must be {B.shape[1]}-dimensional", field="u")
    return SampledFunction(kernel.grid, u_vals @ B.T)


def apply_control(kernel, B, u, y0):
    """
    y(t) = Psi(a,t) y0 + int_a^t Phi(tau,t) B u(tau) dtau from the forward
    series at every node, graded at t=b for the (b - t)^alpha cusp of a
    minimum-energy control.
    """
    B = _as_input_matrix(B, kernel.d)
    return kernel.propagate(_forcing(kernel, B, u), y0, end_exponent=kernel.alpha)


def _weighted_pairing(kernel, B, first, second):
    """int (b-t)^(alpha-1) <B^T first(t), B^T second(t)> dt for regularized samples."""
    return float(kernel.terminal_weights() @ np.sum((first @ B) * (second @ B), axis=1))


def functional_J(z_b, kernel, B, y0, yb):
    """
    J(z_b) = 1/2 int |B^T (b-t)^((1-alpha)/2) z(t)|^2 dt - <y_b, z_b> + <y_0, z_0>
    with z(t) = Phi(t, b) z_b and z_0 = t I_b^(1-alpha) z at t = a.
    """
    B = _as_input_matrix(B, kernel.d)
    z_b = np.atleast_1d(np.asarray(z_b, dtype=float))
    adj = kernel.adjoint(z_b)
    quad = _weighted_pairing(kernel, B, adj.regularized, adj.regularized)
    return 0.5 * quad - float(np.dot(yb, z_b)) + float(np.dot(y0, adj.initial_datum()))


def euler_lagrange_residual(z_hat_b, z_b, kernel, B, y0, yb):
    """
    |int <B^T (b-t)^((1-alpha)/2) z_hat, B^T (b-t)^((1-alpha)/2) z> dt
     + <y_0, z_0> - <y_b, z_b>|
    """
    B = _as_input_matrix(B, kernel.d)
    adj_hat = kernel.adjoint(z_hat_b)
    adj = kernel.adjoint(z_b)
    quad = _weighted_pairing(kernel, B, adj_hat.regularized, adj.regularized)
    return abs(quad + float(np.dot(y0, adj.initial_datum())) - float(np.dot(yb, z_b)))


def duality_residual(u, z_b, kernel, B, y0):
    """
    |<y_0, z_0> - <y(b), z_b> + int <u, B^T z> dt| for an arbitrary control u,
    with y(b) from apply_control.
    """
    B = _as_input_matrix(B, kernel.d)
    adj = kernel.adjoint(z_b)
    y_b = apply_control(kernel, B, u, y0).final_state
    u_vals = u.values.reshape(kernel.grid.n_nodes, -1)
    pairing = float(kernel.terminal_weights() @ np.sum(u_vals * (adj.regularized @ B), axis=1))
    return abs(float(np.dot(y0, adj.initial_datum())) - float(np.dot(y_b, z_b)) + pairing)


def observability_constant(kernel, B):
    """
    Observability matrix O(a, b) = int F(t) B B^T F(t) dt and C = 1/lambda_min(O).
    """
    B = _as_input_matrix(B, kernel.d)
    Bt = kernel.diag.transform_input(B)
    F = _regularized_terminal(kernel)
    tw = trapezoid_weights(kernel.grid)
    O_D = ((F.T * tw) @ F) * (Bt @ Bt.T)
    U = kernel.diag.U
    O = U @ O_D @ U.T
    O = 0.5 * (O + O.T)
    lo, hi = _eigen_extremes(O)
    constant = 1.0 / lo if is_nonsingular(lo, hi) else float("inf")
    return ObservabilityReport(constant=constant, O=O, min_eigenvalue=lo, max_eigenvalue=hi)


def control_bounds_report(law, kernel, B, observability=None):
    """
    Compare the realized control with its a priori bounds:

        |u(t)| <= r_alpha+ |B^T| |z_hat_b|
        (b-t)^(1-alpha) |z_hat(t)| <= r_alpha+ |z_hat_b|
        |u|_L2 <= (b-a)^(1-alpha) sqrt(C) |y_b - Psi y_0|

    with r_alpha+ = E_{alpha,alpha}(lambda_max M (b-a)^alpha), plus the
    pairing identity int <u, B^T z_hat> = z^T W z = <y_b - Psi y_0, z_hat>
    and the energy identity |u|^2 = z^T O z.
    """
    B = _as_input_matrix(B, kernel.d)
    if observability is None:
        observability = observability_constant(kernel, B)
    alpha = kernel.alpha
    span = kernel.grid.length
    rate = kernel.diag.lambda_max * kernel.sup_g * span ** alpha
    r_plus = mittag_leffler(MlQuery(alpha, alpha, rate))

    z_hat = law.z_hat_b
    adj = adjoint_regularized(kernel, z_hat)
    u_vals = law.u.values.reshape(kernel.grid.n_nodes, -1)
    norm_bt = float(np.linalg.norm(B.T, 2))
    max_u = float(np.max(np.linalg.norm(u_vals, axis=1)))
    max_adj = float(np.max(np.linalg.norm(adj, axis=1)))
    defect = law.defect
    C = observability.constant
    if np.isfinite(C):
        l2_bound = span ** (1 - alpha) * np.sqrt(C) * np.linalg.norm(defect)
    else:
        l2_bound = float("inf")

    pairing = float(kernel.terminal_weights() @ np.sum(u_vals * (adj @ B), axis=1))
    gramian_form = float(z_hat @ law.gramian.W @ z_hat)
    defect_pairing = float(np.dot(defect, z_hat))
    energy = law.l2_norm ** 2
    observability_form = float(z_hat @ observability.O @ z_hat)

    scale = 1 + abs(defect_pairing)
    checks = {
        "pointwise": max_u <= r_plus * norm_bt * np.linalg.norm(z_hat) + BOUND_SLACK,
        "adjoint_growth": max_adj <= r_plus * np.linalg.norm(z_hat) + BOUND_SLACK,
        "l2": bool(law.l2_norm <= l2_bound * (1 + 1e-8) + BOUND_SLACK),
        "pairing": abs(pairing - defect_pairing) <= 1e-5 * scale
                   and abs(gramian_form - defect_pairing) <= 1e-8 * scale,
        "energy": abs(energy - observability_form) <= 1e-5 * (1 + energy),
    }
    return ControlBounds(
        r_alpha_plus=float(r_plus), max_control=max_u,
        pointwise_bound=float(r_plus * norm_bt * np.linalg.norm(z_hat)),
        max_adjoint=max_adj, adjoint_bound=float(r_plus * np.linalg.norm(z_hat)),
        l2_norm=law.l2_norm, l2_bound=float(l2_bound), pairing=pairing,
        gramian_form=gramian_form, defect_pairing=defect_pairing, energy=energy,
        observability_form=observability_form, checks={k: bool(v) for k, v in checks.items()})
