import os

import numpy as np
import pandas as pd
import pytest

from pwavep.core.config import PurificationConfig
from pwavep.core.errors import DataError, GraphConstructionError, InvalidParameterError
from pwavep.geometry.cloud import PointCloud
from pwavep.geometry.io import load_cloud
from pwavep.oracle.base import Oracle
from pwavep.purify.baselines import gft_lowpass_defense, ror, ror_radius, sor
from pwavep.purify.pipeline import PWavePPurifier, build_wavelet_operators, pwavep, write_result_bundle
from pwavep.wavelets.transform import gwt, igwt


class _Unreachable:
    def evaluate(self, *args, **kwargs):
        raise AssertionError("oracle queried before the graph was validated")


@pytest.fixture
def oracle(small_model):
    return Oracle(small_model)


@pytest.fixture
def config():
    return PurificationConfig(k=10)


# PWaveP


def test_default_run_removes_high_and_filters_mid(sphere_cloud, oracle, config):
    result = pwavep(sphere_cloud, oracle, config)

    assert result.partition.high_risk.size == 1
    assert result.partition.mid_risk.size == 9
    assert result.purified.n == sphere_cloud.n - result.partition.high_risk.size
    assert set(result.purified.ids) <= set(sphere_cloud.ids)
    assert not set(result.partition.high_risk) & set(result.purified.ids)
    assert sorted(e.point_id for e in result.modified_coefficients) == sorted(result.partition.mid_risk)
    assert set(result.timings) == {"operators", "analysis", "gradient", "saliency", "synthesis", "removal"}


def test_gamma_zero_zeroes_the_targeted_coefficients(sphere_cloud, oracle, config):
    result = pwavep(sphere_cloud, oracle, config)
    for edit in result.modified_coefficients:
        row = int(sphere_cloud.rows_of([edit.point_id])[0])
        assert edit.new == (0.0, 0.0, 0.0)
        np.testing.assert_array_equal(edit.old, result.coefficients.band(edit.band)[row])
        assert edit.band in (2, 3, 4)


def test_no_modification_is_near_identity(sphere_cloud, oracle):
    config = PurificationConfig(k=10, drop_rate=0.0, filter_rate=0.0)
    result = pwavep(sphere_cloud, oracle, config)
    assert result.purified.n == sphere_cloud.n
    assert result.modified_coefficients == ()
    _, _, ops = build_wavelet_operators(sphere_cloud, config)
    np.testing.assert_allclose(result.purified.points, igwt(ops, gwt(ops, sphere_cloud.points)), atol=1e-10)
    np.testing.assert_allclose(result.purified.points, sphere_cloud.points, atol=1e-6)


def test_one_edit_moves_one_synthesis_column(sphere_cloud, oracle):
    config = PurificationConfig(k=10, drop_rate=0.0, filter_rate=0.01, gamma=0.25)
    result = pwavep(sphere_cloud, oracle, config)
    (edit,) = result.modified_coefficients

    _, _, ops = build_wavelet_operators(sphere_cloud, config)
    baseline = igwt(ops, result.coefficients)
    row = int(sphere_cloud.rows_of([edit.point_id])[0])
    column = ops.synthesis_column(edit.band, row)
    expected = np.outer(column, np.subtract(edit.new, edit.old))
    np.testing.assert_allclose(result.intermediate.points - baseline, expected, atol=1e-8)


def test_gamma_is_monotone_on_targeted_coefficients(sphere_cloud, oracle):
    low = pwavep(sphere_cloud, oracle, PurificationConfig(k=10, gamma=0.25))
    high = pwavep(sphere_cloud, oracle, PurificationConfig(k=10, gamma=0.75))
    for a, b in zip(low.modified_coefficients, high.modified_coefficients):
        assert a.point_id == b.point_id
        assert np.all(np.abs(a.new) <= np.abs(b.new))


def test_runs_are_deterministic(sphere_cloud, oracle, config):
    a = pwavep(sphere_cloud, oracle, config)
    b = pwavep(sphere_cloud, oracle, config)
    np.testing.assert_array_equal(a.purified.points, b.purified.points)
    np.testing.assert_array_equal(a.purified.ids, b.purified.ids)


def test_component_switches(sphere_cloud, oracle):
    keep_all = pwavep(sphere_cloud, oracle, PurificationConfig(k=10, remove_high=False))
    assert keep_all.purified.n == sphere_cloud.n

    no_filter = pwavep(sphere_cloud, oracle, PurificationConfig(k=10, filter_mid=False))
    assert no_filter.modified_coefficients == ()
    assert no_filter.purified.n == sphere_cloud.n - 1

    spectral_only = pwavep(sphere_cloud, oracle, PurificationConfig(k=10, use_spatial=False))
    np.testing.assert_allclose(spectral_only.report.hybrid, spectral_only.report.spectral_score)


@pytest.mark.parametrize("kernel", ["mexican-hat", "meyer"])
def test_chebyshev_mode_tracks_exact_mode(sphere_cloud, oracle, kernel):
    exact = pwavep(sphere_cloud, oracle, PurificationConfig(k=10, kernel=kernel, drop_rate=0, filter_rate=0))
    approx = pwavep(
        sphere_cloud,
        oracle,
        PurificationConfig(k=10, kernel=kernel, mode="chebyshev", chebyshev_order=50, drop_rate=0, filter_rate=0),
    )
    assert np.abs(approx.purified.points - exact.purified.points).max() < 1e-2


def test_small_cloud_is_rejected(oracle, make_sphere):
    with pytest.raises(InvalidParameterError):
        pwavep(make_sphere(10), oracle, PurificationConfig(k=10))


def test_disconnected_graph_fails_before_the_oracle():
    rng = np.random.default_rng(0)
    points = np.vstack([rng.standard_normal((30, 3)), 100.0 + rng.standard_normal((30, 3))])
    with pytest.raises(GraphConstructionError):
        pwavep(PointCloud.from_points(points), _Unreachable(), PurificationConfig(k=5))


def test_purifier_batch_keeps_order(oracle, config, make_sphere):
    clouds = [make_sphere(60, seed=s) for s in range(3)]
    purifier = PWavePPurifier(oracle, config)
    batch = purifier.purify_batch(clouds, threads=2)
    for cloud, result in zip(clouds, batch):
        np.testing.assert_array_equal(result.purified.points, purifier(cloud).points)


def test_result_bundle(tmp_path, sphere_cloud, oracle, config):
    result = pwavep(sphere_cloud, oracle, config)
    paths = write_result_bundle(result, str(tmp_path))
    assert all(os.path.exists(p) for p in paths.values())

    assert load_cloud(paths["purified"]).n == result.purified.n
    saliency = pd.read_csv(paths["saliency"])
    assert len(saliency) == sphere_cloud.n
    coefficients = pd.read_csv(paths["coefficients"])
    assert len(coefficients) == 5 * sphere_cloud.n * 3
    assert set(coefficients["point_id"]) == set(sphere_cloud.ids)
    edits = pd.read_csv(paths["edits"])
    assert len(edits) == 9
    assert (edits[["new_x", "new_y", "new_z"]] == 0).all().all()


# Baselines


def _grid() -> np.ndarray:
    axis = np.arange(5.0)
    return np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 3)


def test_sor_keeps_a_clean_grid():
    cloud = PointCloud.from_points(_grid())
    assert sor(cloud, k=6, sigma_mult=10.0).n == cloud.n


def test_sor_removes_a_far_outlier():
    cloud = PointCloud.from_points(np.vstack([_grid(), [[50.0, 50.0, 50.0]]]))
    cleaned = sor(cloud, k=6, sigma_mult=1.1)
    assert 125 not in set(cleaned.ids)
    assert set(cleaned.ids) <= set(cloud.ids)
    assert cleaned.n == 125


def test_ror_basics():
    cloud = PointCloud.from_points(np.vstack([_grid(), [[50.0, 50.0, 50.0]]]))
    assert ror(cloud, radius=1.5, min_neighbors=0).n == cloud.n
    assert 125 not in set(ror(cloud, radius=1.5, min_neighbors=1).ids)
    with pytest.raises(InvalidParameterError):
        ror(cloud, radius=0.0)
    with pytest.raises(DataError):
        ror(cloud, radius=0.5, min_neighbors=1)


def test_ror_strips_a_sparse_ring():
    rng = np.random.default_rng(0)
    cluster = 0.1 * rng.standard_normal((200, 3))
    angles = np.linspace(0.0, 2 * np.pi, 12, endpoint=False)
    ring = 5.0 * np.stack([np.cos(angles), np.sin(angles), np.zeros(12)], axis=1)
    cloud = PointCloud.from_points(np.vstack([cluster, ring]))

    cleaned = ror(cloud, radius=0.5, min_neighbors=3)
    dist = np.linalg.norm(cloud.points[:, None] - cloud.points[None], axis=-1)
    brute = (dist < 0.5).sum(axis=1) - 1
    assert cleaned.ids.tolist() == np.flatnonzero(brute >= 3).tolist()
    assert set(cleaned.ids) == set(range(200))


def test_ror_radius_scales_spacing():
    cloud = PointCloud.from_points(_grid())
    assert ror_radius(cloud, 2.5) == pytest.approx(2.5)


def test_lowpass_defense_full_band_is_identity(sphere_cloud):
    out = gft_lowpass_defense(sphere_cloud, k=10, cutoff=2.0)
    np.testing.assert_allclose(out.points, sphere_cloud.points, atol=1e-10)
