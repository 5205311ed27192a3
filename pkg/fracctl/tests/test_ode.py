import numpy as np
import pytest
from scipy import special as sp

from fracctl.calculus import SampledFunction, TimeGrid, two_sided_weights
from fracctl.exceptions import ConvergenceError, DomainError, InputError
from fracctl.kernels import build_kernels
from fracctl.ode import (
    LinearSystem,
    Trajectory,
    comparison_check,
    positivity_check,
    solve_adjoint_terminal,
    solve_caputo_linear,
    solve_caputo_nonlinear,
)
from fracctl.special import MlQuery, mittag_leffler, mittag_leffler_array


def _scalar_decay(n, alpha=0.5, rate=1.0):
    grid = TimeGrid(0.0, 1.0, n)
    system = LinearSystem.from_factored([[-rate]], SampledFunction.constant(grid, 1.0), [1.0])
    return solve_caputo_linear(system, alpha)


def test_zero_coefficient_keeps_state(unit_grid):
    g = SampledFunction.constant(unit_grid, 1.0)
    traj = solve_caputo_linear(LinearSystem.from_factored(np.zeros((2, 2)), g, [1.0, -2.0]), 0.4)
    np.testing.assert_allclose(traj.states, np.tile([1.0, -2.0], (unit_grid.n_nodes, 1)))
    np.testing.assert_allclose(traj.initial_state, [1.0, -2.0])


def test_scalar_decay_matches_mittag_leffler():
    traj = _scalar_decay(1000)
    assert traj.final_state[0] == pytest.approx(0.4275836, abs=1e-3)
    t = traj.grid.nodes
    mask = t >= 0.1
    np.testing.assert_allclose(traj.states[mask, 0], mittag_leffler_array(-t[mask] ** 0.5, 0.5), atol=2e-3)


def test_order_near_one_approaches_exponential():
    traj = _scalar_decay(1000, alpha=0.99)
    assert traj.final_state[0] == pytest.approx(mittag_leffler(MlQuery(0.99, 1.0, -1.0)), abs=1e-3)
    assert traj.final_state[0] == pytest.approx(np.exp(-1.0), abs=2e-2)


def test_refinement_reduces_error():
    exact = mittag_leffler(MlQuery(0.5, 1.0, -1.0))
    coarse = abs(_scalar_decay(100).final_state[0] - exact)
    fine = abs(_scalar_decay(800).final_state[0] - exact)
    assert fine < coarse


def test_constant_forcing_is_exact(unit_grid):
    g = SampledFunction.constant(unit_grid, 1.0)
    forcing = SampledFunction.constant(unit_grid, [1.0])
    traj = solve_caputo_linear(LinearSystem.from_factored([[0.0]], g, [0.0], forcing=forcing), 0.5)
    np.testing.assert_allclose(traj.states[:, 0], unit_grid.nodes ** 0.5 / sp.gamma(1.5), atol=1e-10)


def test_end_graded_forcing_with_terminal_cusp(unit_grid):
    # I^alpha (1 - t)^alpha at t = 1 is 1 / (2 alpha Gamma(alpha))
    alpha = 0.5
    g = SampledFunction.constant(unit_grid, 1.0)
    forcing = SampledFunction(unit_grid, (1 - unit_grid.nodes) ** alpha)
    system = LinearSystem.from_factored([[0.0]], g, [0.0], forcing=forcing)
    exact = 1 / (2 * alpha * sp.gamma(alpha))
    graded = abs(solve_caputo_linear(system, alpha, end_exponent=alpha).final_state[0] - exact)
    linear = abs(solve_caputo_linear(system, alpha).final_state[0] - exact)
    assert graded <= 1e-5 * exact
    assert linear > 10 * graded


def test_non_symmetric_coefficients_use_the_general_path(unit_grid):
    # upper triangular coefficient: second component decays, first is driven by it
    A = np.array([[0.0, 1.0], [0.0, -1.0]])
    coeff = SampledFunction(unit_grid, np.broadcast_to(A, (unit_grid.n_nodes, 2, 2)).copy())
    traj = solve_caputo_linear(LinearSystem(coeff, [0.0, 1.0]), 0.5)
    second = solve_caputo_linear(
        LinearSystem.from_factored([[-1.0]], SampledFunction.constant(unit_grid, 1.0), [1.0]), 0.5)
    np.testing.assert_allclose(traj.states[:, 1], second.states[:, 0], atol=1e-10)
    assert np.all(np.diff(traj.states[:, 0]) > 0)


def test_linear_system_validation(unit_grid):
    g = SampledFunction.constant(unit_grid, 1.0)
    with pytest.raises(InputError):
        LinearSystem.from_factored(np.eye(2), g, [1.0])
    with pytest.raises(InputError):
        LinearSystem.from_factored(np.eye(1), g, [np.inf])
    coarse = TimeGrid(0.0, 1.0, 4)
    with pytest.raises(InputError):
        solve_caputo_linear(LinearSystem.from_factored(np.eye(1), SampledFunction.constant(coarse, 1.0), [1.0]), 0.5)
    with pytest.raises(DomainError):
        solve_caputo_linear(LinearSystem.from_factored(np.eye(1), g, [1.0]), 1.0)


def test_nonlinear_with_zero_matrix_is_constant(unit_grid):
    f = {"kind": "gauss_plus", "c1": 1.0, "c2": 1.0}
    traj = solve_caputo_nonlinear(np.zeros((2, 2)), f, [1.0, 0.5], unit_grid, 0.6)
    np.testing.assert_allclose(traj.states, np.tile([1.0, 0.5], (unit_grid.n_nodes, 1)))


def test_constant_field_matches_linear_solver(unit_grid):
    A = np.array([[1.0, 0.3], [0.3, 2.0]])
    y0 = [1.0, -1.0]
    nonlinear = solve_caputo_nonlinear(A, {"kind": "constant", "c1": 1.0}, y0, unit_grid, 0.5)
    linear = solve_caputo_linear(
        LinearSystem.from_factored(-A, SampledFunction.constant(unit_grid, 1.0), y0), 0.5)
    np.testing.assert_allclose(nonlinear.states, linear.states, atol=1e-8)


@pytest.mark.parametrize("field", [
    {"kind": "gauss_plus", "c1": 1.0, "c2": 1.0},
    {"kind": "rational_plus", "c1": 0.5, "c2": 2.0},
])
def test_dissipative_solution_is_norm_bounded(unit_grid, field):
    y0 = np.array([1.0, 0.0])
    traj = solve_caputo_nonlinear(np.diag([1.0, 2.0]), field, y0, unit_grid, 0.6)
    assert np.all(traj.norms() <= np.linalg.norm(y0) * (1 + 1e-6))


def test_nonlinear_forcing(unit_grid):
    forcing = SampledFunction.constant(unit_grid, [1.0])
    traj = solve_caputo_nonlinear(np.zeros((1, 1)), {"kind": "constant", "c1": 1.0}, [0.0],
                                  unit_grid, 0.5, forcing=forcing)
    np.testing.assert_allclose(traj.states[:, 0], unit_grid.nodes ** 0.5 / sp.gamma(1.5), atol=1e-10)


@pytest.mark.parametrize("A", [np.array([[0.0, 1.0], [0.0, 0.0]]), np.diag([1.0, -1.0])])
def test_nonlinear_rejects_non_dissipative_matrix(unit_grid, A):
    with pytest.raises(InputError) as info:
        solve_caputo_nonlinear(A, {"kind": "constant", "c1": 1.0}, [1.0, 1.0], unit_grid, 0.5)
    assert info.value.field == "A"


def test_adjoint_recovers_terminal_datum(unit_grid):
    g = SampledFunction.constant(unit_grid, 1.0)
    z_b = np.array([0.7, -0.2])
    adj = solve_adjoint_terminal(-np.diag([1.0, 3.0]), g, z_b, 0.5)
    np.testing.assert_allclose(adj.terminal_datum(), z_b, rtol=1e-12)
    assert np.all(np.isnan(adj.singular[-1]))


def test_adjoint_without_dynamics_has_constant_integral(unit_grid):
    g = SampledFunction.constant(unit_grid, 1.0)
    adj = solve_adjoint_terminal(np.zeros((1, 1)), g, [2.0], 0.4)
    np.testing.assert_allclose(adj.regularized[:, 0], 2.0 / sp.gamma(0.4))
    np.testing.assert_allclose(adj.initial_datum(), [2.0], rtol=1e-10)


@pytest.mark.parametrize("alpha", [0.4, 0.7])
def test_adjoint_closed_form(unit_grid, alpha):
    g = SampledFunction.constant(unit_grid, 1.0)
    adj = solve_adjoint_terminal([[-1.0]], g, [1.0], alpha)
    x = unit_grid.b - unit_grid.nodes
    expected = mittag_leffler_array(-x ** alpha, alpha, alpha)
    np.testing.assert_allclose(adj.regularized[:, 0], expected, rtol=1e-3)
    assert positivity_check(adj)
    assert positivity_check(adj, interior_only=True)


def test_kernel_adjoint_agrees_with_direct_solve(unit_grid):
    g = SampledFunction(unit_grid, 1 + 0.5 * np.sin(2 * np.pi * unit_grid.nodes))
    A = -np.array([[2.0, 0.5], [0.5, 1.0]])
    z_b = np.array([1.0, 2.0])
    direct = solve_adjoint_terminal(A, g, z_b, 0.6)
    series = build_kernels(A, g, 0.6).adjoint(z_b)
    np.testing.assert_allclose(series.regularized, direct.regularized, atol=1e-8)


def test_adjoint_step_with_vanishing_pivot_is_rejected(unit_grid):
    alpha = 0.5
    W = two_sided_weights(unit_grid.n, alpha, alpha, alpha)
    lam = sp.gamma(alpha) / (unit_grid.h ** alpha * W[1, 1])
    g = SampledFunction.constant(unit_grid, 1.0)
    with pytest.raises(ConvergenceError) as info:
        solve_adjoint_terminal([[lam]], g, [1.0], alpha)
    assert "singular" in str(info.value)
    assert info.value.report is None


def test_faster_decay_stays_below_slower_decay():
    slow, fast = _scalar_decay(400, rate=1.0), _scalar_decay(400, rate=2.0)
    assert comparison_check(fast, slow)
    assert not comparison_check(slow, fast)
    assert np.all(fast.states[1:, 0] < slow.states[1:, 0])


def test_comparison_and_positivity_checks(unit_grid):
    upper = _scalar_decay(400)
    lower = Trajectory(upper.grid, 0.5 * upper.states)
    assert comparison_check(lower, upper)
    assert not comparison_check(upper, lower)
    assert positivity_check(upper)
    assert not positivity_check(Trajectory(upper.grid, -upper.states))
    with pytest.raises(InputError):
        positivity_check(Trajectory(unit_grid, np.ones((unit_grid.n_nodes, 2))))
    with pytest.raises(InputError):
        comparison_check(lower, Trajectory(TimeGrid(0.0, 1.0, 200), np.ones(201)))
