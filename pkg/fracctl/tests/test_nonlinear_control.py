import logging

import numpy as np
import pytest
from scipy import special as sp

from fracctl.calculus import SampledFunction, TimeGrid
from fracctl.control import (
    FixedPointSynthesis,
    assemble_iterate,
    compute_split_constants,
    estimate_kz,
    fixed_point_solve,
    memory_term,
    resimulate,
    solve_coast,
    solve_yp,
)
from fracctl.exceptions import ConvergenceError, InputError, NotControllableError
from fracctl.io import Numerics, load_problem, problem_from_dict
from fracctl.kernels import build_kernels
from fracctl.models import ScalarField, make_field
from fracctl.ode import LinearSystem, Trajectory, solve_caputo_linear
from fracctl.utils import Logger


class NegativeField(ScalarField):
    kind = "negative"

    def _shape(self, r2):
        return np.full_like(r2, -2.0)


def _constant_spec(n_steps=400, **numerics):
    return problem_from_dict({
        "alpha": 0.5, "T": 1.0, "d": 2, "N": 1,
        "A": [[1.0, 0.0], [0.0, 2.0]], "B": [[1.0], [1.0]],
        "y0": [1.0, -1.0], "yT": [0.5, 0.5],
        "f": {"kind": "constant", "c1": 2.0},
        "numerics": {"n_steps": n_steps, **numerics},
    })


def _reference_spec(n_steps=400, **numerics):
    return problem_from_dict({
        "alpha": 0.6, "T": 1.0, "d": 2, "N": 2,
        "A": np.eye(2).tolist(), "B": np.eye(2).tolist(),
        "y0": [1.0, 0.0], "yT": [0.0, 1.0],
        "f": {"kind": "gauss_plus", "c1": 1.0, "c2": 1.0},
        "numerics": {"n_steps": n_steps, **numerics},
    })


def _state(grid, value):
    return Trajectory(grid, np.tile(value, (grid.n_nodes, 1)))


def test_split_constants_without_coast(unit_grid):
    split = compute_split_constants(_state(unit_grid, [1.0, 0.0]), {"kind": "constant", "c1": 1.0}, 0.5, 1.0)
    assert (split.M_v, split.K_v, split.T_v) == pytest.approx((1.0, 1.0, 0.0))
    assert split.split_index == 0
    assert split.split_time == 0.0


def test_split_constants_with_coast(unit_grid):
    split = compute_split_constants(_state(unit_grid, [1.0, 0.0]), {"kind": "constant", "c1": 2.0}, 0.5, 1.0)
    assert (split.M_v, split.K_v, split.T_v) == pytest.approx((2.0, 4.0, 0.5))
    assert split.k_alpha == 2.0
    assert split.split_index == unit_grid.n // 2
    assert split.split_time == pytest.approx(0.5)
    assert split.to_dict()["T_v"] == pytest.approx(0.5)


def test_split_keeps_a_minimal_control_window(unit_grid):
    split = compute_split_constants(_state(unit_grid, [0.0]), {"kind": "constant", "c1": 1e6}, 0.5, 1.0)
    assert split.T_v == pytest.approx(1.0 - 1e-6)
    assert split.split_index == unit_grid.n - 8


def test_split_constants_vary_continuously(unit_grid):
    f = {"kind": "gauss_plus", "c1": 1.0, "c2": 1.0}
    base = Trajectory(unit_grid, np.stack([np.cos(unit_grid.nodes), np.sin(unit_grid.nodes)], axis=1))
    first = compute_split_constants(base, f, 0.6, 1.0)
    for eps in (1e-2, 1e-4):
        moved = compute_split_constants(Trajectory(unit_grid, base.states + eps), f, 0.6, 1.0)
        assert abs(moved.M_v - first.M_v) <= 4 * eps
        assert abs(moved.T_v - first.T_v) <= 4 * eps


def test_non_positive_field_is_rejected(unit_grid):
    with pytest.raises(InputError) as info:
        compute_split_constants(_state(unit_grid, [1.0]), NegativeField(1.0, 1.0), 0.5, 1.0)
    assert info.value.field == "f"


def test_memory_of_constant_coast_vanishes():
    z = _state(TimeGrid(0.0, 0.5, 50), [1.0, 2.0])
    h = memory_term(z, TimeGrid(0.6, 1.0, 4), 0.5)
    np.testing.assert_allclose(h.values, 0.0)


def test_memory_of_linear_coast():
    # z(t) = t gives h(t) = (t^(1-alpha) - (t - T_v)^(1-alpha)) / Gamma(2 - alpha)
    grid = TimeGrid(0.0, 0.5, 50)
    eval_grid = TimeGrid(0.6, 1.0, 4)
    h = memory_term(Trajectory(grid, grid.nodes), eval_grid, 0.5)
    t = eval_grid.nodes
    expected = (np.sqrt(t) - np.sqrt(t - 0.5)) / sp.gamma(1.5)
    np.testing.assert_allclose(h.values[:, 0], expected, rtol=1e-4)
    assert h.values[-1, 0] == pytest.approx(0.3304946, abs=1e-4)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8])
def test_memory_of_a_coast_leaving_its_initial_state_is_exact(alpha):
    # z(s) = s^alpha on the first panel and constant after it
    step = 0.01
    z = Trajectory(TimeGrid(0.0, 2 * step, 2), [[0.0], [step ** alpha], [step ** alpha]])
    eval_grid = TimeGrid(0.1, 1.0, 9)
    h = memory_term(z, eval_grid, alpha)
    expected = sp.gamma(alpha + 1) * sp.betainc(alpha, 1 - alpha, step / eval_grid.nodes)
    np.testing.assert_allclose(h.values[:, 0], expected, rtol=1e-12)


def test_memory_of_a_power_law_coast():
    # z(s) = s^alpha on [0, T_v] gives h(t) = Gamma(alpha + 1) I_(T_v / t)(alpha, 1 - alpha)
    alpha = 0.5
    grid = TimeGrid(0.0, 0.5, 500)
    eval_grid = TimeGrid(0.6, 1.0, 8)
    h = memory_term(Trajectory(grid, grid.nodes ** alpha), eval_grid, alpha)
    expected = sp.gamma(alpha + 1) * sp.betainc(alpha, 1 - alpha, 0.5 / eval_grid.nodes)
    np.testing.assert_allclose(h.values[:, 0], expected, rtol=1e-3)


def test_memory_needs_times_beyond_the_coast():
    z = _state(TimeGrid(0.0, 0.5, 50), [1.0])
    with pytest.raises(InputError):
        memory_term(z, TimeGrid(0.5, 1.0, 4), 0.5)
    with pytest.raises(InputError):
        memory_term(z, TimeGrid(0.2, 1.0, 4), 0.5)


def test_memory_bound_on_the_coast():
    spec = _reference_spec()
    grid = TimeGrid(0.0, spec.T, 400)
    coast = solve_coast(spec, grid)
    K_z = estimate_kz(coast, spec.alpha)
    assert K_z > 0
    z = Trajectory(grid.subgrid(0, 200), coast.states[:201])
    h = memory_term(z, TimeGrid(0.5 + grid.h, 1.0, 100), spec.alpha)
    assert h.sup_norm() <= K_z * sp.gamma(spec.alpha) * (1 + 1e-9)


def _subkernel(spec, n=200):
    grid = TimeGrid(0.5, 1.0, n)
    f_v = SampledFunction(grid, 1.5 + 0.5 * np.cos(grid.nodes))
    return grid, f_v, build_kernels(-spec.A, f_v, spec.alpha)


def test_particular_solution_with_zero_memory():
    spec = _reference_spec()
    grid, _, kernel = _subkernel(spec)
    y_p = solve_yp(kernel, SampledFunction.constant(grid, [0.0, 0.0]))
    np.testing.assert_allclose(y_p.states, 0.0)


def test_particular_solution_matches_linear_solver():
    spec = _reference_spec()
    grid, f_v, kernel = _subkernel(spec, n=400)
    h = SampledFunction(grid, np.stack([np.exp(-grid.nodes), 0.3 * np.ones(grid.n_nodes)], axis=1))
    y_p = solve_yp(kernel, h)
    direct = solve_caputo_linear(
        LinearSystem.from_factored(-spec.A, f_v, np.zeros(2), forcing=-1.0 * h), spec.alpha)
    np.testing.assert_allclose(y_p.states[0], 0.0)
    np.testing.assert_allclose(y_p.states, direct.states, atol=1e-3)
    # |y_p| <= sup|h| (t - T_v)^alpha / Gamma(alpha + 1)
    bound = h.sup_norm() * grid.length ** spec.alpha / sp.gamma(spec.alpha + 1)
    assert y_p.sup_norm() <= bound * (1 + 1e-6)


def test_particular_solution_grid_check():
    spec = _reference_spec()
    _, _, kernel = _subkernel(spec)
    with pytest.raises(InputError):
        solve_yp(kernel, SampledFunction.constant(TimeGrid(0.5, 1.0, 10), [0.0, 0.0]))


def test_assembled_iterate_splices_coast_and_control():
    spec = _constant_spec()
    grid = TimeGrid(0.0, spec.T, spec.numerics.n_steps)
    coast = solve_coast(spec, grid)
    y, u, record = assemble_iterate(coast, spec, coast=coast)
    m = record.split.split_index
    assert m == grid.n // 2
    np.testing.assert_allclose(y.states[:m + 1], coast.states[:m + 1], atol=1e-12)
    assert np.all(u.values[:m + 1] == 0.0)
    assert np.any(u.values[m + 1:] != 0.0)
    tol = 1e-3 * (1 + np.linalg.norm(spec.yT))
    np.testing.assert_allclose(y.final_state, spec.yT, atol=tol)
    assert record.terminal_error == pytest.approx(np.linalg.norm(y.final_state - spec.yT))
    assert record.terminal_error <= tol
    assert record.audits_ok
    assert set(record.audits) == {"memory", "particular", "target", "control", "state", "derivative"}
    assert set(record.constants) == {"h_bound", "yp_bound", "C_T", "c_w", "C_u", "C_y", "C_alpha"}


def test_assembled_iterate_rejects_foreign_coast():
    spec = _constant_spec()
    grid = TimeGrid(0.0, spec.T, spec.numerics.n_steps)
    coast = solve_coast(spec, TimeGrid(0.0, spec.T, 200))
    with pytest.raises(InputError):
        assemble_iterate(_state(grid, spec.y0), spec, coast=coast)


def test_constant_field_converges_immediately():
    report = fixed_point_solve(_constant_spec())
    assert report.converged
    assert report.n_iterations <= 2
    assert report.audits_ok
    assert report.coast_bound_ok
    assert report.control_support_ok()
    assert report.split.T_v == pytest.approx(0.5)
    tol = 1e-3 * (1 + np.linalg.norm(report.y.final_state))
    assert report.terminal_error <= tol
    assert report.resimulation_error <= tol
    out = report.to_dict()
    assert out["n_iterations"] == report.n_iterations
    assert len(out["y_final"]) == 2


def test_resimulated_control_reaches_the_target():
    spec = _constant_spec(n_steps=1000)
    report = fixed_point_solve(spec)
    tol = 1e-3 * (1 + np.linalg.norm(spec.yT))
    assert report.converged
    assert report.resimulation_error <= tol
    resim = resimulate(spec, report.u)
    np.testing.assert_allclose(resim.final_state, spec.yT, atol=tol)
    m = report.split.split_index
    np.testing.assert_allclose(resim.states[:m + 1], report.y.states[:m + 1], atol=1e-12)
    np.testing.assert_allclose(resim.states, report.y.states, atol=tol)


def test_uncontrollable_problem_is_rejected():
    spec = _constant_spec()
    spec = problem_from_dict({**spec.to_dict(), "B": [[0.0], [0.0]]})
    with pytest.raises(NotControllableError):
        fixed_point_solve(spec)


def test_iteration_cap_is_reported():
    spec = _reference_spec(max_iter=1)
    report = fixed_point_solve(spec, resimulate=False)
    assert not report.converged
    assert report.n_iterations == 1
    assert report.resimulation_error is None
    with pytest.raises(ConvergenceError) as info:
        fixed_point_solve(spec, resimulate=False, raise_on_failure=True)
    assert info.value.report.n_iterations == 1


def test_synthesis_logs_scalars_and_progress(caplog):
    logger = Logger()
    caplog.set_level(logging.INFO, logger="fracctl")
    synthesis = FixedPointSynthesis(_constant_spec(n_steps=200), resimulate=False, logger=logger)
    report = synthesis.run()
    updates = logger.tags["fixed_point/update_norm"]["scalars"]
    assert len(updates) == report.n_iterations
    assert updates[-1] == pytest.approx(report.iterations[-1].update_norm)
    assert len(logger.tags["split/T_v"]["scalars"]) == report.n_iterations
    assert logger.hparams["metrics"]["converged"] == report.converged
    assert "Iteration 1 complete" in caplog.text


def test_numerics_override_the_problem_settings():
    spec = _constant_spec(n_steps=400)
    synthesis = FixedPointSynthesis(spec, numerics=Numerics(n_steps=200, max_iter=3), resimulate=False)
    assert synthesis.grid.n == 200
    report = synthesis.run()
    assert report.settings["max_iter"] == 3
    assert report.y.grid.n == 200


def test_reference_instance_coarse():
    report = fixed_point_solve(_reference_spec(n_steps=400))
    assert report.converged
    assert report.coast_bound_ok
    assert report.control_support_ok()
    assert 0 < report.split.T_v < 1
    assert report.resimulation_error < 5e-2


@pytest.mark.slow
def test_reference_instance(problems_dir):
    spec = load_problem(problems_dir / "nonlinear_reference.json")
    report = fixed_point_solve(spec)
    assert report.converged
    assert report.audits_ok
    assert report.control_support_ok()
    f = make_field(spec.f)
    assert report.split.M_v == pytest.approx(np.max(f(report.y.states)), rel=1e-5)
    assert report.resimulation_error < 1e-2
