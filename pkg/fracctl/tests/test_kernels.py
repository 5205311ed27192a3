import numpy as np
import pytest
from scipy import special as sp

from fracctl.calculus import SampledFunction, TimeGrid
from fracctl.exceptions import DomainError, InputError, TruncationError
from fracctl.kernels import (
    LOWER_SLACK,
    build_kernels,
    check_symmetric,
    diagonalize,
    kernel_bounds_report,
    truncation_depth,
)
from fracctl.ode import LinearSystem, solve_caputo_linear
from fracctl.special import mittag_leffler_array
from fracctl.tests.conftest import linear_kernel
from fracctl.utils import RandomLinearInstance


@pytest.fixture
def fine_grid():
    return TimeGrid(0.0, 1.0, 1000)


def _sinusoid(grid):
    return SampledFunction(grid, 1 + 0.5 * np.sin(2 * np.pi * grid.nodes))


def test_diagonalize_orders_and_orients():
    A = np.array([[2.0, 1.0], [1.0, 2.0]])
    diag = diagonalize(A)
    np.testing.assert_allclose(diag.eigenvalues, [1.0, 3.0])
    assert np.all(diag.U[0] > 0)
    np.testing.assert_allclose(diag.matrix, A, atol=1e-14)
    np.testing.assert_allclose(diag.U.T @ diag.U, np.eye(2), atol=1e-14)
    assert diag.lambda_max == pytest.approx(3.0)
    assert diag.is_psd()
    assert not diagonalize(-A).is_psd()


def test_asymmetric_matrix_is_rejected():
    with pytest.raises(InputError, match="A symmetric"):
        check_symmetric([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(InputError):
        diagonalize(np.ones((2, 3)))


def test_zero_matrix_gives_identity_kernels(unit_grid):
    kernel = build_kernels(np.zeros((2, 2)), SampledFunction.constant(unit_grid, 1.0), 0.5)
    assert kernel.depth == 0
    assert kernel.tail_bound == 0.0
    np.testing.assert_allclose(kernel.psi(), np.broadcast_to(np.eye(2), (unit_grid.n_nodes, 2, 2)))
    np.testing.assert_allclose(kernel.phi_regularized(10, 400), np.eye(2) / sp.gamma(0.5))


def test_psi_is_mittag_leffler(fine_grid):
    kernel = build_kernels([[-1.0]], SampledFunction.constant(fine_grid, 1.0), 0.5)
    assert kernel.psi(fine_grid.n)[0, 0] == pytest.approx(0.4275836, abs=1e-4)
    expected = mittag_leffler_array(-fine_grid.nodes ** 0.5, 0.5)
    np.testing.assert_allclose(kernel.psi_diagonal()[:, 0], expected, atol=1e-4)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8])
def test_phi_is_two_parameter_mittag_leffler(fine_grid, alpha):
    kernel = build_kernels([[-2.0]], SampledFunction.constant(fine_grid, 1.0), alpha)
    x = fine_grid.b - fine_grid.nodes
    expected = mittag_leffler_array(-2.0 * x ** alpha, alpha, alpha)
    np.testing.assert_allclose(kernel.phi_regularized_diagonal()[:, 0], expected, atol=1e-4)
    j = fine_grid.n // 2
    assert kernel.phi(j, fine_grid.n)[0, 0] == pytest.approx(
        x[j] ** (alpha - 1) * kernel.phi_regularized(j, fine_grid.n)[0, 0])


def test_bounds_for_dissipative_matrix(fine_grid):
    kernel = build_kernels(-np.diag([1.0, 2.0]), SampledFunction.constant(fine_grid, 1.0), 0.5)
    record = kernel_bounds_report(kernel)
    assert record.case == "dissipative"
    assert record.ok
    assert record.top_eigenvalue == pytest.approx(-1.0)
    assert record.lambda_max == pytest.approx(2.0)
    assert record.psi_lower == pytest.approx(0.2554033, abs=1e-7)
    assert min(np.min(np.abs(kernel.psi_diagonal()), axis=1)) >= 0.2554033 - 1e-6
    assert max(record.psi_norms) <= 1 + 1e-8
    assert "violations" in record.to_dict()


def test_bounds_hold_for_random_dissipative_instances():
    for inst in RandomLinearInstance(d_max=4).sample_many(20, random_state=31):
        kernel = linear_kernel(inst, n=200)
        record = kernel_bounds_report(kernel)
        assert record.case == "dissipative"
        assert record.ok, record.violations[:3]
        assert LOWER_SLACK < record.lower_slack < 0.1


def test_lower_slack_shrinks_with_the_step():
    records = []
    for n in (100, 400):
        grid = TimeGrid(0.0, 1.0, n)
        records.append(kernel_bounds_report(build_kernels(-np.eye(2), SampledFunction.constant(grid, 1.0), 0.5)))
    coarse, fine = records
    assert fine.lower_slack - LOWER_SLACK == pytest.approx((coarse.lower_slack - LOWER_SLACK) / 4)


def test_bounds_for_growing_system(unit_grid):
    kernel = build_kernels(np.diag([0.5, 1.0]), _sinusoid(unit_grid), 0.6)
    record = kernel_bounds_report(kernel)
    assert record.case == "general"
    assert record.ok
    assert record.top_eigenvalue == pytest.approx(1.0) == record.lambda_max
    assert record.psi_upper > 1


def test_truncation_error_when_cap_is_too_small(unit_grid):
    g = SampledFunction.constant(unit_grid, 1.0)
    with pytest.raises(TruncationError) as info:
        build_kernels(-5.0 * np.eye(2), g, 0.5, depth_cap=3)
    assert info.value.depth == 3
    assert info.value.tail_bound > 0


def test_truncation_depth_grows_with_rate():
    shallow, tail, _ = truncation_depth(0.5, 0.5)
    deep, _, _ = truncation_depth(4.0, 0.5)
    assert 0 < shallow < deep
    assert tail <= 1e-12
    assert truncation_depth(0.0, 0.5)[:2] == (0, 0.0)


def test_extra_depth_changes_less_than_tail(unit_grid):
    g = _sinusoid(unit_grid)
    A = -np.array([[2.0, 0.5], [0.5, 1.0]])
    kernel = build_kernels(A, g, 0.6)
    deeper = build_kernels(A, g, 0.6, depth=kernel.depth + 5)
    gap = np.max(np.abs(deeper.psi() - kernel.psi()))
    assert gap <= kernel.tail_bound + 1e-10
    gap = np.max(np.abs(deeper.phi_regularized_diagonal() - kernel.phi_regularized_diagonal()))
    assert gap <= kernel.tail_bound + 1e-10


def test_kernels_are_symmetric(unit_grid):
    A = -np.array([[2.0, 0.5, 0.0], [0.5, 1.0, 0.3], [0.0, 0.3, 0.5]])
    kernel = build_kernels(A, _sinusoid(unit_grid), 0.5)
    psi = kernel.psi()
    np.testing.assert_allclose(psi, np.transpose(psi, (0, 2, 1)), atol=1e-14)
    phi = kernel.phi_regularized(100, 300)
    np.testing.assert_allclose(phi, phi.T, atol=1e-14)


def test_propagate_matches_linear_solver():
    grid = TimeGrid(0.0, 1.0, 800)
    g = _sinusoid(grid)
    A = np.array([[2.0, 0.5], [0.5, 1.0]])
    y0 = np.array([1.0, -0.5])
    forcing = SampledFunction(grid, np.stack([np.sin(3 * grid.nodes), np.ones(grid.n_nodes)], axis=1))
    kernel = build_kernels(-A, g, 0.6)
    series = kernel.propagate(forcing, y0)
    solver = solve_caputo_linear(LinearSystem.from_factored(-A, g, y0, forcing=forcing), 0.6)
    np.testing.assert_allclose(series.states, solver.states, atol=1e-3)


def test_end_graded_propagate_agrees_with_terminal_weights():
    grid = TimeGrid(0.0, 1.0, 800)
    A = np.array([[2.0, 0.5], [0.5, 1.0]])
    kernel = build_kernels(-A, _sinusoid(grid), 0.6)
    cusp = (1 - grid.nodes) ** 0.6
    p = np.stack([cusp, cusp * np.cos(grid.nodes)], axis=1)
    reg = kernel.phi_regularized_diagonal()
    expected = kernel.diag.from_eigenbasis(kernel.terminal_weights() @ (reg * kernel.diag.to_eigenbasis(p)))
    forcing = SampledFunction(grid, p)
    graded = kernel.propagate(forcing, end_exponent=0.6).final_state
    np.testing.assert_allclose(graded, expected, atol=1e-5)
    linear = kernel.propagate(forcing).final_state
    assert np.max(np.abs(linear - expected)) > np.max(np.abs(graded - expected))


def test_kernel_argument_checks(unit_grid):
    g = SampledFunction.constant(unit_grid, 1.0)
    with pytest.raises(DomainError):
        build_kernels(np.eye(1), g, 1.2)
    with pytest.raises(InputError):
        build_kernels(np.eye(1), g, 0.5, tol=0.0)
    kernel = build_kernels(-np.eye(2), g, 0.5)
    with pytest.raises(InputError):
        kernel.phi(5, 5)
    with pytest.raises(InputError):
        kernel.right_layers(unit_grid.n + 1)
    with pytest.raises(InputError):
        kernel.propagate(y0=[1.0])
    with pytest.raises(InputError):
        kernel.adjoint([1.0, 2.0, 3.0])
