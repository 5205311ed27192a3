"""
Control of C D^alpha y = -A f(y) y + B u on [0, T].

For a frozen state v the coefficient f(v(t)) is known and the problem is
linear. The state coasts uncontrolled on [0, T_v]; on [T_v, T] it splits
into y_p, which absorbs the memory of the coast, and y_c, which is steered
by the minimum-energy control of the linear problem. Iterating v -> y
gives the nonlinear control.
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import special
from tqdm import tqdm
from tqdm.notebook import tqdm as tqdm_notebook

from ..calculus import SampledFunction, TimeGrid, l1_caputo_values, trapezoid_weights
from ..exceptions import ConvergenceError, InputError, NotControllableError
from ..kernels import build_kernels
from ..models import make_field
from ..ode import Trajectory, check_dissipative_matrix, solve_caputo_nonlinear
from ..utils.logger import Logger, get_logger
from ..utils.misc import is_notebook
from .linear import apply_control, kalman_rank, synthesize_linear

logger = get_logger(__name__)

# the controlled segment keeps at least this many intervals
MIN_CONTROL_STEPS = 8
AUDIT_RTOL = 1e-6
COAST_RTOL = 1e-8


@dataclass(frozen=True)
class SplitConstants:
    """
    M_v = max f(v), K_v = max(1, M_v)^(1/alpha), T_v = T - T/K_v^alpha.

    split_index is the last grid node not beyond T_v and split_time its time.
    """
    M_v: float
    K_v: float
    T_v: float
    K_z: float
    split_index: int
    split_time: float

    @property
    def k_alpha(self):
        """K_v^alpha = max(1, M_v)."""
        return max(1.0, self.M_v)

    def to_dict(self):
        return asdict(self)


def compute_split_constants(v, f, alpha, T, K_z=0.0):
    """
    Parameters
        v: Trajectory
            State on [0, T]
        f: dict or ScalarField
        alpha: float
        T: float
        K_z: float
            Singularity constant of the coast derivative, carried along
    Returns
        split: SplitConstants
    """
    field_ = make_field(f)
    values = field_(v.vectors())
    if not np.all(np.isfinite(values)) or np.any(values <= 0):
        raise InputError("f must be positive along the state", field="f")
    M = float(np.max(values))
    k_alpha = max(1.0, M)
    K = k_alpha ** (1.0 / alpha)
    T_v = T - T / k_alpha
    if T_v <= 0:
        index = 0
    else:
        index = min(v.grid.index_at_or_below(T_v), v.grid.n - MIN_CONTROL_STEPS)
        index = max(index, 0)
    return SplitConstants(M_v=M, K_v=float(K), T_v=float(T_v), K_z=float(K_z),
                          split_index=int(index), split_time=float(v.grid.nodes[index]))


def estimate_kz(z, alpha):
    """K_z = max_j t_(j+1)^(1-alpha) |z_(j+1) - z_j| / h on the coast."""
    grid = z.grid
    steps = np.linalg.norm(np.diff(z.vectors(), axis=0), axis=1) / grid.h
    right = grid.nodes[1:] - grid.a
    return float(np.max(right ** (1 - alpha) * steps))


def _memory_values(z_values, h, times, alpha):
    """
    h(t) for the coast z on nodes s_j = j h, j = 0..m, integrated exactly
    against (t - s)^(-alpha); times must be >= s_m.

    z is linear on every panel but the first, where it follows
    z_0 + (z_1 - z_0)(s/h)^alpha like a coast leaving its initial state.
    """
    z_values = np.asarray(z_values, dtype=float).reshape(len(z_values), -1)
    times = np.asarray(times, dtype=float)
    m = z_values.shape[0] - 1
    if m == 0:
        return np.zeros((times.shape[0], z_values.shape[1]))
    slopes = np.diff(z_values, axis=0) / h
    s = h * np.arange(m + 1)
    gap = np.clip(times[:, None] - s[None, :], 0.0, None) ** (1 - alpha)
    panel = gap[:, 1:-1] - gap[:, 2:]
    out = panel @ slopes[1:] / special.gamma(2 - alpha)
    # int_0^h s^(alpha-1) (t-s)^(-alpha) ds = B(alpha, 1-alpha) I_(h/t)(alpha, 1-alpha)
    first = special.gamma(alpha + 1) * h ** (-alpha) * special.betainc(alpha, 1 - alpha, h / times)
    return out + first[:, None] * (z_values[1] - z_values[0])


def memory_term(z, eval_grid, alpha):
    """
    Memory of the coast z on [0, T_v] seen from t > T_v:

        h(t) = 1/Gamma(1 - alpha) int_0^T_v z'(s) (t - s)^(-alpha) ds

    Parameters
        z: Trajectory
            Coast on a grid over [0, T_v]
        eval_grid: TimeGrid
            Evaluation nodes, all beyond T_v
        alpha: float
    Returns
        h: SampledFunction
    """
    T_v = z.grid.b
    if eval_grid.a <= T_v * (1 + 1e-12):
        raise InputError(f"memory term needs evaluation times beyond T_v = {T_v:g}", field="grid")
    times = eval_grid.nodes - z.grid.a
    values = _memory_values(z.vectors(), z.grid.h, times, alpha)
    return SampledFunction(eval_grid, values)


def solve_yp(kernel, h):
    """
    y_p(t) = -int_T_v^t Phi_v(tau, t) h(tau) dtau, y_p(T_v) = 0.

    h leaves T_v like h(T_v) + c (t - T_v)^(1-alpha), so the first forward
    layer is graded with that exponent.
    """
    if not h.grid.matches(kernel.grid):
        raise InputError("memory term must live on the kernel grid", field="grid")
    return kernel.propagate(-1.0 * h, start_exponent=1 - kernel.alpha)


def _caputo_solve(spec, grid, forcing=None):
    # coast and re-simulation share their settings, so both agree on the coast
    return solve_caputo_nonlinear(spec.A, spec.f, spec.y0, grid, spec.alpha, forcing=forcing,
                                  n_corrector=spec.numerics.n_corrector,
                                  start_exponent=spec.alpha, end_exponent=spec.alpha)


def solve_coast(spec, grid):
    """Uncontrolled solution z of C D^alpha z = -A f(z) z, z(0) = y0."""
    return _caputo_solve(spec, grid)


def resimulate(spec, u):
    """
    Re-solve C D^alpha y = -A f(y) y + B u from y0 with the predictor-corrector,
    graded at t=0 for the initial layer and at t=T for the cusp of the control.
    """
    forcing = SampledFunction(u.grid, u.vectors() @ spec.B.T)
    return _caputo_solve(spec, u.grid, forcing)


@dataclass(frozen=True)
class IterationRecord:
    """Everything measured while assembling one iterate T(v)."""
    iteration: int
    split: SplitConstants
    terminal_error: float
    update_norm: float
    damping: float
    depth: int
    gramian_min_eigenvalue: float
    constants: dict = field(default_factory=dict)
    measured: dict = field(default_factory=dict)
    audits: dict = field(default_factory=dict)

    @property
    def audits_ok(self):
        # the derivative audit is informational
        return all(v for k, v in self.audits.items() if k != "derivative")

    def to_dict(self):
        out = asdict(self)
        out["audits_ok"] = self.audits_ok
        return out


def _constants(spec, split, law, K_z, coast_fmax):
    alpha, T = spec.alpha, spec.T
    norm_A = float(np.linalg.norm(spec.A, 2))
    norm_B = float(np.linalg.norm(spec.B, 2))
    y0_norm = float(np.linalg.norm(spec.y0))
    k_alpha = split.k_alpha
    memory = K_z * special.gamma(alpha)
    yp_bound = memory * T ** alpha / alpha
    C_T = float(np.linalg.norm(spec.yT)) + yp_bound
    c_w = law.gramian.min_eigenvalue * k_alpha
    C_u = norm_B * (C_T + y0_norm) / c_w if c_w > 0 else float("inf")
    span = T - split.split_time
    C_y = (y0_norm + norm_B * C_u * k_alpha * span ** alpha / (alpha * special.gamma(alpha))
           + yp_bound)
    C_alpha = (norm_A * C_y + norm_B * C_u) * max(k_alpha, coast_fmax)
    return {"h_bound": float(memory), "yp_bound": float(yp_bound), "C_T": float(C_T),
            "c_w": float(c_w), "C_u": float(C_u), "C_y": float(C_y), "C_alpha": float(C_alpha)}


def assemble_iterate(v, spec, coast=None, K_z=None):
    """
    One application of the fixed-point map: y = T(v).

    Parameters
        v: Trajectory
            Frozen state on the synthesis grid over [0, T]
        spec: ProblemSpec
        coast: Trajectory, optional
            Uncontrolled solution on the same grid; computed if missing
        K_z: float, optional
            Singularity constant of the coast
    Returns
        y: Trajectory
        u: SampledFunction
            (n+1, N) control, zero on the coast nodes
        record: IterationRecord
    """
    grid = v.grid
    alpha = spec.alpha
    num = spec.numerics
    if coast is None:
        coast = solve_coast(spec, grid)
    elif not coast.grid.matches(grid):
        raise InputError("coast and iterate must share a grid", field="grid")
    if K_z is None:
        K_z = estimate_kz(coast, alpha)

    split = compute_split_constants(v, spec.f, alpha, spec.T, K_z)
    m = split.split_index
    sub = grid.subgrid(m)
    f_v = SampledFunction(sub, make_field(spec.f)(v.vectors()[m:]))
    kernel = build_kernels(-spec.A, f_v, alpha, tol=num.pb_tol, depth_cap=num.depth_cap)

    h = SampledFunction(sub, _memory_values(coast.vectors()[:m + 1], grid.h, sub.nodes, alpha))
    y_p = solve_yp(kernel, h)
    z_split = coast.vectors()[m]
    target = spec.yT - y_p.final_state

    law = synthesize_linear(kernel, spec.B, z_split, target, check_rank=False, pin_start=m > 0)
    y_c = apply_control(kernel, spec.B, law.u, z_split)

    states = coast.vectors().copy()
    states[m:] = y_p.vectors() + y_c.vectors()
    y = Trajectory(grid, states)
    u_vals = np.zeros((grid.n_nodes, spec.N))
    u_vals[m:] = law.u.vectors()
    u = SampledFunction(grid, u_vals)

    coast_fmax = float(np.max(make_field(spec.f)(coast.vectors())))
    constants = _constants(spec, split, law, K_z, coast_fmax)
    derivative = l1_caputo_values(states, grid.h, alpha)[1:-1]
    measured = {
        "h_sup": float(np.max(np.linalg.norm(h.vectors(), axis=1))),
        "yp_sup": y_p.sup_norm(),
        "target_norm": float(np.linalg.norm(target)),
        "u_sup": law.u.sup_norm(),
        "y_sup": y.sup_norm(),
        "derivative_sup": float(np.max(np.linalg.norm(derivative, axis=1))),
    }
    slack = 1 + AUDIT_RTOL
    audits = {
        "memory": measured["h_sup"] <= constants["h_bound"] * slack + 1e-12,
        "particular": measured["yp_sup"] <= constants["yp_bound"] * slack + 1e-10,
        "target": measured["target_norm"] <= constants["C_T"] * slack,
        "control": measured["u_sup"] <= constants["C_u"] * split.k_alpha * slack,
        "state": measured["y_sup"] <= constants["C_y"] * slack,
        "derivative": measured["derivative_sup"] <= constants["C_alpha"] * slack,
    }
    record = IterationRecord(
        iteration=0, split=split,
        terminal_error=float(np.linalg.norm(y.final_state - spec.yT)),
        update_norm=float("nan"), damping=float("nan"), depth=kernel.depth,
        gramian_min_eigenvalue=law.gramian.min_eigenvalue,
        constants=constants, measured=measured,
        audits={k: bool(val) for k, val in audits.items()})
    return y, u, record


@dataclass(frozen=True)
class SynthesisReport:
    """Outcome of the fixed-point synthesis; converged is never overstated."""
    iterations: tuple
    converged: bool
    y: Trajectory
    u: SampledFunction
    split: SplitConstants
    constants: dict
    terminal_error: float
    l2_norm: float
    K_z: float
    coast_bound_ok: bool
    resimulation_error: float = None
    settings: dict = field(default_factory=dict)
    seed: int = None
    elapsed: float = 0.0

    @property
    def n_iterations(self):
        return len(self.iterations)

    @property
    def audits_ok(self):
        return bool(self.iterations) and self.iterations[-1].audits_ok

    def control_support_ok(self):
        """u vanishes on the coast nodes before T_v."""
        m = self.split.split_index
        return bool(np.all(self.u.vectors()[:m] == 0.0))

    def to_dict(self):
        return {
            "converged": self.converged,
            "n_iterations": self.n_iterations,
            "iterations": [rec.to_dict() for rec in self.iterations],
            "split": self.split.to_dict(),
            "constants": dict(self.constants),
            "terminal_error": self.terminal_error,
            "resimulation_error": self.resimulation_error,
            "l2_norm": self.l2_norm,
            "K_z": self.K_z,
            "coast_bound_ok": self.coast_bound_ok,
            "audits_ok": self.audits_ok,
            "control_support_ok": self.control_support_ok(),
            "y_final": self.y.final_state.tolist(),
            "settings": dict(self.settings),
            "seed": self.seed,
            "elapsed": self.elapsed,
        }


def check_preconditions(spec):
    """A symmetric psd, Kalman rank d, f positive; raises the matching typed error."""
    check_dissipative_matrix(spec.A)
    rank, controllable = kalman_rank(spec.A, spec.B)
    if not controllable:
        raise NotControllableError(
            f"Kalman rank condition fails: rank {rank} < d = {spec.d}", rank=rank)
    field_ = make_field(spec.f)
    if field_(np.zeros(spec.d)) <= 0:
        raise InputError("f must be positive", field="f")


class FixedPointSynthesis:
    def __init__(self,
                 spec,
                 numerics=None,
                 resimulate=True,
                 logger=None,
                 log_dir=None,
                 hparam_dict=None,
                 progress=False):
        """
        Parameters
            spec: fracctl.io.ProblemSpec
                Validated problem
            numerics: fracctl.io.Numerics
                Overrides spec.numerics when given
            resimulate: bool
                Re-solve the closed loop with the predictor-corrector at the end
            logger: fracctl.utils.Logger
                Records per-iteration scalars; a memory-only Logger by default
            log_dir: str
                Where the default Logger pickles its scalars
            hparam_dict: dict
                Extra settings stored with the logger at the end of run()
            progress: bool
                Show a tqdm progress bar over the iterations
        """
        if numerics is not None:
            spec = replace(spec, numerics=numerics)
        self.spec = spec
        self.numerics = spec.numerics
        self.resimulate = resimulate
        self.logger = logger if logger is not None else Logger(log_dir=log_dir)
        self.hparam_dict = hparam_dict if hparam_dict is not None else {}
        self.progress = progress
        self.notebook = is_notebook()
        self.grid = TimeGrid(0.0, spec.T, self.numerics.n_steps)
        self.coast = None
        self.K_z = None

    def _log_iteration(self, record):
        step = record.iteration
        self.logger.add_scalar("fixed_point/update_norm", record.update_norm, global_step=step)
        self.logger.add_scalar("fixed_point/terminal_error", record.terminal_error, global_step=step)
        self.logger.add_scalar("fixed_point/damping", record.damping, global_step=step)
        self.logger.add_scalar("split/M_v", record.split.M_v, global_step=step)
        self.logger.add_scalar("split/T_v", record.split.T_v, global_step=step)

    def resimulation_error(self, u):
        """|y(T) - y_T| for the control re-simulated by the predictor-corrector."""
        return float(np.linalg.norm(resimulate(self.spec, u).final_state - self.spec.yT))

    def run(self):
        spec, num = self.spec, self.numerics
        check_preconditions(spec)
        run_start = time.time()

        self.coast = solve_coast(spec, self.grid)
        self.K_z = estimate_kz(self.coast, spec.alpha)
        y0_norm = float(np.linalg.norm(spec.y0))
        coast_bound_ok = self.coast.sup_norm() <= y0_norm * (1 + COAST_RTOL) + 1e-14
        if not coast_bound_ok:
            logger.warning("coast exceeds |y0|: %.6g > %.6g", self.coast.sup_norm(), y0_norm)

        v = self.coast
        omega = num.damping
        records, updates = [], []
        converged = False
        y = u = None
        if self.progress:
            bar = tqdm_notebook if self.notebook else tqdm
            pbar = bar(range(num.max_iter))
        else:
            pbar = range(num.max_iter)
        for j in pbar:
            iter_start = time.time()
            y, u, record = assemble_iterate(v, spec, coast=self.coast, K_z=self.K_z)
            v_vals = v.vectors()
            step = omega * (y.vectors() - v_vals)
            update = float(np.max(np.linalg.norm(step, axis=1)))
            v_norm = v.sup_norm()
            record = replace(record, iteration=j + 1, update_norm=update, damping=omega)
            records.append(record)
            updates.append(update)
            self._log_iteration(record)
            if self.progress:
                pbar.set_description(f"Update: {update:.3e}")

            t = time.time() - iter_start
            total_t = time.time() - run_start
            logger.info(f"Iteration {j + 1} complete. Time elapsed: {t // 60:.0f}m {t % 60:.1f}s. "
                        f"Total time elapsed: {total_t // 60:.0f}m {total_t % 60:.1f}s. "
                        f"Update {update:.3e}, T_v {record.split.T_v:.4f}")

            if update <= num.fp_tol * (1 + v_norm):
                converged = True
                break
            if len(updates) >= 3 and updates[-1] > updates[-2] > updates[-3] and omega > 0.5:
                omega = 0.5
                logger.warning("fixed-point updates grew twice in a row; damping set to 0.5")
            v = Trajectory(self.grid, v_vals + step)

        resim = self.resimulation_error(u) if self.resimulate else None
        last = records[-1]
        l2 = float(np.sqrt(trapezoid_weights(self.grid) @ np.sum(u.vectors() ** 2, axis=1)))
        report = SynthesisReport(
            iterations=tuple(records), converged=converged, y=y, u=u, split=last.split,
            constants=dict(last.constants), terminal_error=last.terminal_error, l2_norm=l2,
            K_z=self.K_z, coast_bound_ok=bool(coast_bound_ok), resimulation_error=resim,
            settings=num.to_dict(), seed=spec.seed, elapsed=time.time() - run_start)

        metrics = {"converged": converged, "n_iterations": len(records),
                   "terminal_error": report.terminal_error}
        if resim is not None:
            metrics["resimulation_error"] = resim
        self.logger.add_hparams(hparam_dict={**num.to_dict(), **self.hparam_dict},
                                metric_dict=metrics)
        self.logger.close()
        if not converged:
            logger.warning("fixed-point iteration stopped after %d iterations without converging",
                           len(records))
        return report


def fixed_point_solve(spec, numerics=None, resimulate=True, logger=None, progress=False,
                      raise_on_failure=False):
    """
    Run FixedPointSynthesis on spec and return its SynthesisReport.

    With raise_on_failure a non-converged run raises ConvergenceError
    carrying the report.
    """
    report = FixedPointSynthesis(spec, numerics=numerics, resimulate=resimulate,
                                 logger=logger, progress=progress).run()
    if raise_on_failure and not report.converged:
        raise ConvergenceError(
            f"fixed-point iteration did not converge in {report.n_iterations} iterations",
            report=report)
    return report
