import numpy as np
import pytest
import scipy.sparse as sp

from pwavep.core.errors import DataError, InvalidParameterError, UnsupportedModeError
from pwavep.geometry.graph import build_knn_graph, build_laplacians
from pwavep.spectral.basis import eigendecompose
from pwavep.wavelets.chebyshev import chebyshev_coefficients, chebyshev_eval, shifted_laplacian
from pwavep.wavelets.kernels import FAMILIES, design_kernel_bank, meyer_nu, mexican_hat
from pwavep.wavelets.operators import build_operators_chebyshev, build_operators_exact, frame_bounds
from pwavep.wavelets.transform import WaveletCoefficients, gwt, igwt


def _relative(a, b) -> float:
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


@pytest.fixture
def graph100(sphere_cloud):
    lap = build_laplacians(build_knn_graph(sphere_cloud, 10))
    return sphere_cloud, lap, eigendecompose(lap, "normalized")


@pytest.fixture
def graph60(make_sphere):
    cloud = make_sphere(60, seed=7)
    lap = build_laplacians(build_knn_graph(cloud, 8))
    return cloud, lap, eigendecompose(lap, "normalized")


# Kernel banks


def test_meyer_bank_is_tight():
    for scale_count in (2, 4, 6):
        bank = design_kernel_bank("meyer", scale_count, 2.0)
        assert bank.is_tight
        assert bank.tightness_error() < 1e-6


def test_mexican_hat_bank_shape():
    bank = design_kernel_bank("mexican-hat", 4, 1.9)
    responses = bank.responses(np.array([0.0]))
    np.testing.assert_allclose(responses[1:, 0], 0.0)
    assert responses[0, 0] == pytest.approx(1.0)
    assert np.all(np.diff(bank.centers) > 0)
    assert bank.centers[-1] <= 0.95 * 1.9 + 1e-12
    assert not bank.is_tight


def test_band_centers_are_kernel_peaks():
    bank = design_kernel_bank("mexican-hat", 4, 2.0)
    grid = np.linspace(0.0, 20.0, 200001)
    for g, center in zip(bank.band_fns, bank.centers):
        assert grid[np.argmax(g(grid))] == pytest.approx(center, abs=1e-3)


def test_helper_functions():
    assert mexican_hat(np.array([1.0]))[0] == pytest.approx(1.0)
    np.testing.assert_allclose(meyer_nu(np.array([0.0, 0.5, 1.0])), [0.0, 0.5, 1.0])


@pytest.mark.parametrize("scale_count", [0, 3, 5])
def test_odd_or_small_scale_count_is_rejected(scale_count):
    with pytest.raises(InvalidParameterError):
        design_kernel_bank("meyer", scale_count, 2.0)


def test_unknown_family_is_rejected():
    with pytest.raises(InvalidParameterError):
        design_kernel_bank("haar", 4, 2.0)


# Exact operators


@pytest.mark.parametrize("family", FAMILIES)
def test_exact_round_trip(graph100, family):
    cloud, lap, basis = graph100
    ops = build_operators_exact(design_kernel_bank(family, 4, lap.lambda_max_estimate), basis)
    coeffs = gwt(ops, cloud.points)
    assert coeffs.scale_count == 4
    assert _relative(igwt(ops, coeffs), cloud.points) < 1e-6


def test_meyer_parseval(graph100):
    cloud, lap, basis = graph100
    ops = build_operators_exact(design_kernel_bank("meyer", 4, lap.lambda_max_estimate), basis)
    h = cloud.points
    energy = gwt(ops, h).energy()
    assert energy == pytest.approx(float(np.sum(h**2)), rel=1e-6)


def test_meyer_frame_bounds(graph100):
    _, lap, basis = graph100
    ops = build_operators_exact(design_kernel_bank("meyer", 4, lap.lambda_max_estimate), basis)
    bounds = frame_bounds(ops)
    assert 1 - 1e-4 <= bounds.lower <= bounds.upper <= 1 + 1e-4
    assert not bounds.is_degenerate


@pytest.mark.parametrize("family", FAMILIES)
def test_gwt_is_linear(graph100, family):
    cloud, lap, basis = graph100
    ops = build_operators_exact(design_kernel_bank(family, 4, lap.lambda_max_estimate), basis)
    x = cloud.points
    y = np.random.default_rng(2).standard_normal(x.shape)
    combined = gwt(ops, 1.5 * x - 0.25 * y).stacked()
    expected = 1.5 * gwt(ops, x).stacked() - 0.25 * gwt(ops, y).stacked()
    np.testing.assert_allclose(combined, expected, atol=1e-10)


def test_coefficients_follow_a_relabelling(graph100):
    cloud, lap, basis = graph100
    bank = design_kernel_bank("mexican-hat", 4, lap.lambda_max_estimate)
    order = np.random.default_rng(5).permutation(100)
    shuffled = cloud.permuted(order)
    shuffled_lap = build_laplacians(build_knn_graph(shuffled, 10))

    original = gwt(build_operators_exact(bank, basis), cloud.points).stacked()
    relabelled = gwt(
        build_operators_exact(bank, eigendecompose(shuffled_lap, "normalized")), shuffled.points
    ).stacked()
    np.testing.assert_allclose(relabelled, original[:, order], atol=1e-9)


@pytest.mark.parametrize("family", FAMILIES)
def test_band_pass_kills_the_null_vector(graph100, family):
    _, lap, basis = graph100
    ops = build_operators_exact(design_kernel_bank(family, 4, lap.lambda_max_estimate), basis)
    # D^1/2 1 spans the null space of the normalized Laplacian
    h = np.sqrt(lap.degrees)[:, None] * np.ones((1, 3))
    coeffs = gwt(ops, h)
    for j in range(1, 5):
        assert np.linalg.norm(coeffs.band(j)) < 1e-6 * np.linalg.norm(h)


def test_single_coefficient_edit_moves_one_synthesis_column(graph100):
    cloud, lap, basis = graph100
    ops = build_operators_exact(design_kernel_bank("mexican-hat", 4, lap.lambda_max_estimate), basis)
    coeffs = gwt(ops, cloud.points)
    base = igwt(ops, coeffs)

    delta = np.array([0.3, -0.2, 0.1])
    row = 17
    edited = coeffs.with_band_rows(4, np.array([row]), coeffs.band(4)[row] + delta)
    moved = igwt(ops, edited) - base
    expected = np.outer(ops.synthesis_column(4, row), delta)
    np.testing.assert_allclose(moved, expected, atol=1e-8)


def test_mismatched_coefficients_are_rejected(graph100):
    _, lap, basis = graph100
    ops = build_operators_exact(design_kernel_bank("meyer", 4, lap.lambda_max_estimate), basis)
    wrong = WaveletCoefficients.from_stacked(np.zeros((3, 100, 3)))
    with pytest.raises(DataError):
        igwt(ops, wrong)


def test_coefficient_frame_is_long_format(graph100):
    cloud, lap, basis = graph100
    ops = build_operators_exact(design_kernel_bank("meyer", 2, lap.lambda_max_estimate), basis)
    frame = gwt(ops, cloud.points).to_frame(cloud.ids)
    assert list(frame.columns) == ["point_id", "axis", "scale", "value"]
    assert len(frame) == 3 * 100 * 3
    assert set(frame["axis"]) == {"x", "y", "z"}


# Chebyshev operators


def test_shifted_laplacian_at_lambda_max_two(graph60):
    _, lap, _ = graph60
    t1 = shifted_laplacian(lap.normalized, 2.0)
    expected = lap.normalized - sp.identity(lap.n)
    assert abs(t1 - expected).max() < 1e-15


def test_chebyshev_series_fits_the_kernels():
    bank = design_kernel_bank("mexican-hat", 4, 2.0)
    grid = np.linspace(0.0, 2.0, 301)
    for g in (bank.scaling_fn,) + bank.band_fns:
        table = chebyshev_coefficients(g, 100, 2.0)[None, :]
        np.testing.assert_allclose(chebyshev_eval(table, grid, 2.0)[0], g(grid), atol=1e-10)


@pytest.mark.parametrize("order, tolerance", [(200, 1e-6), (50, 1e-3)])
def test_chebyshev_matches_exact(graph60, order, tolerance):
    cloud, lap, basis = graph60
    bank = design_kernel_bank("mexican-hat", 4, lap.lambda_max_estimate)
    exact = build_operators_exact(bank, basis)
    approx = build_operators_chebyshev(bank, lap, order)
    assert _relative(approx.analyze(cloud.points), exact.analyze(cloud.points)) < tolerance


def test_chebyshev_error_shrinks_with_order(graph60):
    cloud, lap, basis = graph60
    bank = design_kernel_bank("mexican-hat", 4, lap.lambda_max_estimate)
    reference = build_operators_exact(bank, basis).analyze(cloud.points)
    errors = [
        _relative(build_operators_chebyshev(bank, lap, z).analyze(cloud.points), reference)
        for z in (5, 10, 20, 50, 100)
    ]
    for coarse, fine in zip(errors, errors[1:]):
        assert fine <= coarse * 1.01 + 1e-12


def test_chebyshev_round_trip_through_cg(graph60):
    cloud, lap, _ = graph60
    ops = build_operators_chebyshev(design_kernel_bank("mexican-hat", 4, lap.lambda_max_estimate), lap, 40)
    assert _relative(igwt(ops, gwt(ops, cloud.points)), cloud.points) < 1e-6


def test_chebyshev_apply_band_matches_stack(graph60):
    cloud, lap, _ = graph60
    ops = build_operators_chebyshev(design_kernel_bank("meyer", 4, lap.lambda_max_estimate), lap, 30)
    stack = ops.analyze(cloud.points)
    np.testing.assert_allclose(ops.apply_band(3, cloud.points), stack[3], atol=1e-12)


def test_frame_bounds_need_exact_operators(graph60):
    _, lap, _ = graph60
    ops = build_operators_chebyshev(design_kernel_bank("meyer", 4, lap.lambda_max_estimate), lap, 30)
    with pytest.raises(UnsupportedModeError):
        frame_bounds(ops)
