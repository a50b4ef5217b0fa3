import numpy as np
import pytest

from pwavep.core.errors import CapacityError, InvalidParameterError
from pwavep.core.settings import configure
from pwavep.geometry.graph import build_knn_graph, build_laplacians
from pwavep.metrics.distances import cd_bound_check
from pwavep.spectral.basis import eigendecompose, smoothness, spectral_smoothness
from pwavep.spectral.filters import band_slices, gft_lowpass, inject_band_perturbation


@pytest.fixture
def sphere_basis(sphere_cloud):
    lap = build_laplacians(build_knn_graph(sphere_cloud, 10))
    return lap, eigendecompose(lap, "normalized")


def test_eigenvectors_are_sign_fixed(sphere_basis):
    _, basis = sphere_basis
    u = basis.eigenvectors
    pivot = np.argmax(np.abs(u), axis=0)
    assert np.all(u[pivot, np.arange(u.shape[1])] > 0)


def test_dense_cap_is_enforced(sphere_cloud):
    configure(dense_cap=50)
    lap = build_laplacians(build_knn_graph(sphere_cloud, 10))
    with pytest.raises(CapacityError):
        eigendecompose(lap)


def test_gft_inverts(sphere_basis, sphere_cloud):
    _, basis = sphere_basis
    np.testing.assert_allclose(basis.igft(basis.gft(sphere_cloud.points)), sphere_cloud.points, atol=1e-10)


@pytest.mark.parametrize("which", ["combinatorial", "normalized"])
def test_smoothness_forms_agree(make_sphere, which):
    cloud = make_sphere(20, seed=4)
    lap = build_laplacians(build_knn_graph(cloud, 4))
    signal = np.random.default_rng(0).standard_normal((20, 3))
    edge = smoothness(lap, signal, which=which)
    spectral = spectral_smoothness(eigendecompose(lap, which), signal)
    np.testing.assert_allclose(edge, spectral, rtol=1e-8)
    assert np.all(edge >= 0)


def test_constant_signal_is_perfectly_smooth(sphere_basis):
    lap, _ = sphere_basis
    np.testing.assert_allclose(smoothness(lap, np.ones((100, 3))), 0.0, atol=1e-10)


def test_lowpass_with_full_cutoff_is_identity(sphere_basis, sphere_cloud):
    _, basis = sphere_basis
    filtered = gft_lowpass(sphere_cloud, basis, cutoff=2.0)
    np.testing.assert_allclose(filtered.points, sphere_cloud.points, atol=1e-10)
    np.testing.assert_array_equal(filtered.ids, sphere_cloud.ids)


def test_lowpass_is_idempotent(sphere_basis, sphere_cloud):
    _, basis = sphere_basis
    once = gft_lowpass(sphere_cloud, basis, cutoff=0.67)
    twice = gft_lowpass(once, basis, cutoff=0.67)
    np.testing.assert_allclose(twice.points, once.points, atol=1e-10)


def test_linear_lowpass_tapers_the_spectrum(sphere_basis, sphere_cloud):
    _, basis = sphere_basis
    filtered = gft_lowpass(sphere_cloud, basis, cutoff=1.0, shape="linear")
    expected = np.clip(1.0 - basis.eigenvalues, 0.0, None)[:, None] * basis.gft(sphere_cloud.points)
    np.testing.assert_allclose(basis.gft(filtered.points), expected, atol=1e-10)


def test_lowpass_rejects_cutoff_outside_range(sphere_basis, sphere_cloud):
    _, basis = sphere_basis
    with pytest.raises(InvalidParameterError):
        gft_lowpass(sphere_cloud, basis, cutoff=2.5)


def test_band_slices_cover_everything_but_dc():
    bands = band_slices(101, 10)
    assert len(bands) == 10
    assert np.concatenate(bands).tolist() == list(range(1, 101))
    assert {b.size for b in bands} == {10}
    with pytest.raises(InvalidParameterError):
        band_slices(5, 5)


@pytest.mark.parametrize("band", [1, 5, 10])
def test_band_injection_energy_and_support(sphere_basis, sphere_cloud, band):
    _, basis = sphere_basis
    attacked, pert = inject_band_perturbation(sphere_cloud, basis, band, 10, energy=2.0, seed=band)

    assert np.linalg.norm(pert.delta) == pytest.approx(2.0, abs=1e-6)
    spectrum = basis.gft(attacked.points - sphere_cloud.points)
    outside = np.setdiff1d(np.arange(100), pert.rows)
    np.testing.assert_allclose(spectrum[outside], 0.0, atol=1e-10)
    np.testing.assert_array_equal(attacked.ids, sphere_cloud.ids)


def test_band_injection_is_seeded(sphere_basis, sphere_cloud):
    _, basis = sphere_basis
    a, _ = inject_band_perturbation(sphere_cloud, basis, 3, 10, 2.0, seed=11)
    b, _ = inject_band_perturbation(sphere_cloud, basis, 3, 10, 2.0, seed=11)
    np.testing.assert_array_equal(a.points, b.points)


def test_zero_energy_injection_is_a_no_op(sphere_basis, sphere_cloud):
    _, basis = sphere_basis
    attacked, pert = inject_band_perturbation(sphere_cloud, basis, 2, 10, 0.0)
    np.testing.assert_array_equal(pert.delta, 0.0)
    np.testing.assert_allclose(attacked.points, sphere_cloud.points)


def test_chamfer_bound_over_random_perturbations(sphere_cloud):
    rng = np.random.default_rng(0)
    for _ in range(1000):
        delta = rng.standard_normal((100, 3)) * rng.uniform(1e-3, 0.5)
        actual, bound = cd_bound_check(sphere_cloud, delta)
        assert actual <= bound + 1e-9


def test_chamfer_bound_holds_for_band_perturbations(sphere_basis, sphere_cloud):
    _, basis = sphere_basis
    for band in range(1, 11):
        _, pert = inject_band_perturbation(sphere_cloud, basis, band, 10, 2.0, seed=band)
        actual, bound = cd_bound_check(sphere_cloud, pert)
        assert bound == pytest.approx(2 * 4.0 / 100)
        assert actual <= bound + 1e-9
