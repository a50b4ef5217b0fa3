import io
import json
import sys

import numpy as np
import pytest
from pydantic import ValidationError

from pwavep.core.config import OracleConfig, TrainingConfig, parse_config
from pwavep.core.errors import ConfigurationError, DataError, InvalidParameterError, OracleError
from pwavep.geometry.cloud import PointCloud
from pwavep.geometry.graph import build_knn_graph, build_laplacians
from pwavep.harness.data import generate_synthetic_dataset
from pwavep.oracle.base import Oracle
from pwavep.oracle.external import ExternalOracle, OracleResponse, serve
from pwavep.oracle.projection import project_gradient_to_wavelets
from pwavep.oracle.toy_model import LAYERS, ToyClassifier
from pwavep.oracle.training import gradient_check, train_toy_classifier
from pwavep.oracle.zeroth_order import zeroth_order_gradient
from pwavep.spectral.basis import eigendecompose
from pwavep.wavelets.kernels import design_kernel_bank
from pwavep.wavelets.operators import build_operators_chebyshev, build_operators_exact
from pwavep.wavelets.transform import gwt, igwt


def _cosine(a, b) -> float:
    a, b = np.ravel(a), np.ravel(b)
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))


def _finite_difference(fn, x: np.ndarray, step: float = 1e-5) -> np.ndarray:
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        plus, minus = x.copy(), x.copy()
        plus[idx] += step
        minus[idx] -= step
        grad[idx] = (fn(plus) - fn(minus)) / (2 * step)
    return grad


# Toy classifier


def test_class_scores_are_a_distribution(small_model, make_sphere):
    scores = small_model.class_scores(make_sphere(32).points)
    assert scores.shape == (4,)
    assert scores.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(scores >= 0)


def test_batch_and_single_agree(small_model):
    batch = np.random.default_rng(0).standard_normal((3, 20, 3))
    losses = small_model.ce_loss(batch, 1)
    for i in range(3):
        assert small_model.ce_loss(batch[i], 1) == pytest.approx(losses[i])


@pytest.mark.parametrize("layer", LAYERS)
@pytest.mark.parametrize("alpha", [0.0, 0.02])
def test_coordinate_gradient_matches_finite_differences(small_model, make_sphere, layer, alpha):
    points = make_sphere(32, seed=5).points.copy()
    terms = small_model.loss_terms(points, target=2, alpha=alpha, layer=layer)
    numeric = _finite_difference(
        lambda p: float(small_model.loss_terms(p, 2, alpha, layer, need_gradient=False).loss), points
    )
    assert np.linalg.norm(terms.coord_gradient - numeric) / np.linalg.norm(numeric) < 1e-4


def test_parameter_gradients_match_finite_differences(small_model, make_sphere):
    assert gradient_check(small_model, make_sphere(32, seed=2, label=1), probes=10) < 1e-4


def test_logits_ignore_point_order(small_model, make_sphere):
    cloud = make_sphere(40, seed=8)
    shuffled = cloud.permuted(np.random.default_rng(0).permutation(40))
    np.testing.assert_allclose(small_model.logits(shuffled.points), small_model.logits(cloud.points), rtol=1e-12)


def test_target_out_of_range(small_model, make_sphere):
    with pytest.raises(InvalidParameterError):
        small_model.ce_loss(make_sphere(16).points, 7)


def test_save_and_load(tmp_path, small_model, make_sphere):
    path = str(tmp_path / "model.npz")
    small_model.save(path)
    loaded = ToyClassifier.load(path)
    assert loaded.class_names == ("a", "b", "c", "d")
    points = make_sphere(16).points
    np.testing.assert_array_equal(loaded.logits(points), small_model.logits(points))


def test_load_missing_model(tmp_path):
    with pytest.raises(DataError):
        ToyClassifier.load(str(tmp_path / "missing.npz"))


# Training


def test_training_is_deterministic_and_learns():
    data = generate_synthetic_dataset(("sphere", "plane"), points_per_cloud=64, clouds_per_class=20, seed=1)
    config = TrainingConfig(epochs=4, widths=(8, 16), batch_size=8)
    first, report = train_toy_classifier(list(data.clouds), config=config)
    second, _ = train_toy_classifier(list(data.clouds), config=config)

    for name, value in first.params.items():
        np.testing.assert_array_equal(value, second.params[name])
    assert len(report.losses) == 4
    assert report.losses[-1] < report.losses[0]
    assert report.gradient_check_error < 1e-4


def test_training_needs_enough_clouds():
    data = generate_synthetic_dataset(("sphere", "plane"), points_per_cloud=64, clouds_per_class=5)
    with pytest.raises(InvalidParameterError):
        train_toy_classifier(list(data.clouds))


# Oracle front end


def test_oracle_defaults_to_the_prediction(small_model, make_sphere):
    cloud = make_sphere(32)
    oracle = Oracle(small_model)
    out = oracle.evaluate(cloud)
    assert out.target == out.predicted_class == oracle.predict(cloud)
    assert out.coord_gradient.shape == (32, 3)
    assert out.loss == pytest.approx(out.ce_loss + 0.002 * out.feature_norm)


def test_oracle_skips_the_gradient(small_model, make_sphere):
    out = Oracle(small_model).evaluate(make_sphere(32), target=0, need_gradient=False)
    assert out.coord_gradient is None
    assert out.target == 0


def test_local_modes_need_a_model():
    with pytest.raises(ConfigurationError):
        Oracle(None)


def test_external_mode_needs_a_command():
    with pytest.raises(ConfigurationError):
        parse_config(OracleConfig, {"mode": "external"})


def test_zeroth_order_estimate_points_uphill(small_model, make_sphere):
    points = make_sphere(16, seed=3).points
    analytic = small_model.loss_terms(points, target=1, alpha=0.0).coord_gradient
    estimate = zeroth_order_gradient(
        lambda batch: small_model.ce_loss(batch, 1), points, directions=128, smoothing=1e-3, seed=0
    )
    assert _cosine(estimate, analytic) > 0.5


def test_zeroth_order_estimate_improves_with_more_directions(small_model, make_sphere):
    points = make_sphere(16, seed=3).points
    analytic = small_model.loss_terms(points, target=1, alpha=0.0).coord_gradient

    def mean_cosine(directions: int) -> float:
        return float(
            np.mean(
                [
                    _cosine(
                        zeroth_order_gradient(
                            lambda batch: small_model.ce_loss(batch, 1),
                            points,
                            directions=directions,
                            smoothing=1e-3,
                            seed=seed,
                        ),
                        analytic,
                    )
                    for seed in range(10)
                ]
            )
        )

    cosines = [mean_cosine(q) for q in (8, 64, 512)]
    assert cosines[0] < cosines[1] < cosines[2]


def test_zeroth_order_oracle_is_seeded(small_model, make_sphere):
    cloud = make_sphere(16, seed=3)
    config = OracleConfig(mode="zeroth-order", zo_directions=64, seed=4)
    a = Oracle(small_model, config).evaluate(cloud, target=1)
    b = Oracle(small_model, config).evaluate(cloud, target=1)
    np.testing.assert_array_equal(a.coord_gradient, b.coord_gradient)
    assert a.feature_norm == 0.0


def test_zeroth_order_rejects_bad_arguments():
    with pytest.raises(InvalidParameterError):
        zeroth_order_gradient(lambda b: np.zeros(len(b)), np.zeros((4, 3)), directions=0)
    with pytest.raises(InvalidParameterError):
        zeroth_order_gradient(lambda b: np.zeros(len(b)), np.zeros((4, 3)), smoothing=0.0)


# External protocol


def test_serve_answers_line_by_line(small_model, make_sphere):
    cloud = make_sphere(16)
    requests = "\n".join(
        [
            json.dumps({"id": 1, "points": cloud.points.tolist(), "need_gradient": True, "target": 2}),
            "",
            json.dumps({"id": 2, "points": cloud.points.tolist(), "need_gradient": False}),
            json.dumps({"id": 3, "points": "not points"}),
            json.dumps({"id": 4, "points": cloud.points.tolist(), "target": 9}),
        ]
    )
    out = io.StringIO()
    answered = serve(small_model, OracleConfig(), stdin=io.StringIO(requests + "\n"), stdout=out)
    assert answered == 4

    replies = [json.loads(line) for line in out.getvalue().splitlines()]
    assert [r["id"] for r in replies] == [1, 2, None, 4]

    local = Oracle(small_model).evaluate(cloud, target=2)
    assert replies[0]["loss"] == local.loss
    np.testing.assert_array_equal(np.array(replies[0]["gradient"]), local.coord_gradient)
    assert replies[1]["gradient"] is None
    assert replies[2]["error"].startswith("bad request")
    assert replies[3]["error"] is not None


def test_external_oracle_round_trip(tmp_path, small_model, make_sphere):
    path = str(tmp_path / "model.npz")
    small_model.save(path)
    command = f"{sys.executable} -m pwavep.harness.cli --model {path} serve-oracle"
    cloud = make_sphere(24)

    local = Oracle(small_model).evaluate(cloud, target=1)
    with Oracle(None, OracleConfig(mode="external", command=command)) as remote:
        first = remote.evaluate(cloud, target=1)
        second = remote.evaluate(cloud, need_gradient=False)

    assert first.loss == pytest.approx(local.loss, rel=1e-12)
    np.testing.assert_allclose(first.coord_gradient, local.coord_gradient, rtol=1e-10, atol=1e-14)
    assert second.coord_gradient is None
    assert second.predicted_class == local.predicted_class


def test_external_oracle_that_exits_is_an_oracle_error():
    oracle = ExternalOracle(f"{sys.executable} -c pass", timeout=10)
    try:
        with pytest.raises(OracleError):
            oracle.request(np.zeros((4, 3)))
    finally:
        oracle.close()


def test_external_oracle_that_cannot_start():
    oracle = Oracle(None, OracleConfig(mode="external", command="/nonexistent/pwavep-oracle"))
    with pytest.raises(OracleError):
        oracle.evaluate(PointCloud.from_points(np.eye(3)))


_STUB_SERVER = """
import json, sys, time
for line in sys.stdin:
    request = json.loads(line)
    if request["id"] == 1:
        time.sleep({delay})
    reply = {{"id": request["id"], "class_scores": [1.0]}}
    if {with_loss}:
        reply.update(loss=float(request["id"]), ce_loss=0.0, feature_norm=0.0)
    print(json.dumps(reply), flush=True)
"""


def _stub_oracle(tmp_path, delay: float = 0.0, with_loss: bool = True, timeout: float = 10.0):
    script = tmp_path / "stub_oracle.py"
    script.write_text(_STUB_SERVER.format(delay=delay, with_loss=with_loss))
    return ExternalOracle(f"{sys.executable} {script}", timeout=timeout)


def test_external_oracle_recovers_after_a_timeout(tmp_path):
    oracle = _stub_oracle(tmp_path, delay=1.0, timeout=0.3)
    try:
        with pytest.raises(OracleError, match="did not answer request 1"):
            oracle.request(np.zeros((4, 3)))
        oracle.timeout = 10.0
        second = oracle.request(np.zeros((4, 3)))
        third = oracle.request(np.zeros((4, 3)))
    finally:
        oracle.close()

    assert (second.id, second.loss) == (2, 2.0)
    assert (third.id, third.loss) == (3, 3.0)


def test_reply_without_a_loss_is_an_oracle_error(tmp_path):
    oracle = _stub_oracle(tmp_path, with_loss=False)
    try:
        with pytest.raises(OracleError, match="Malformed"):
            oracle.request(np.zeros((4, 3)))
    finally:
        oracle.close()


def test_error_replies_need_no_numbers():
    reply = OracleResponse.model_validate_json('{"id": 3, "error": "boom"}')
    assert reply.loss is None
    with pytest.raises(ValidationError):
        OracleResponse.model_validate_json('{"id": 1, "class_scores": [1.0]}')


# Gradient projection


@pytest.fixture
def projection_setup(small_model, make_sphere):
    cloud = make_sphere(32, seed=9)
    lap = build_laplacians(build_knn_graph(cloud, 6))
    bank = design_kernel_bank("mexican-hat", 4, lap.lambda_max_estimate)
    exact = build_operators_exact(bank, eigendecompose(lap))
    return cloud, lap, bank, exact


def test_projection_matches_coefficient_finite_differences(small_model, projection_setup):
    cloud, _, _, ops = projection_setup
    target, alpha = 0, 0.002
    grad = small_model.loss_terms(cloud.points, target, alpha).coord_gradient
    projected = project_gradient_to_wavelets(grad, ops, "synthesis")
    coeffs = gwt(ops, cloud.points)

    def loss_of_band(values: np.ndarray, band: int) -> float:
        h = igwt(ops, coeffs.with_band_rows(band, np.arange(32), values))
        return float(small_model.loss_terms(h, target, alpha, need_gradient=False).loss)

    for band in (2, 4):
        numeric = _finite_difference(lambda v: loss_of_band(v, band), coeffs.band(band).copy())
        analytic = projected[band - 1]
        assert np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric) < 1e-3


def test_projection_agrees_across_modes(small_model, projection_setup):
    cloud, lap, bank, exact = projection_setup
    approx = build_operators_chebyshev(bank, lap, 50)
    grad = small_model.loss_terms(cloud.points, 0, 0.002).coord_gradient
    a = np.stack(project_gradient_to_wavelets(grad, exact))
    b = np.stack(project_gradient_to_wavelets(grad, approx))
    assert np.linalg.norm(a - b) / np.linalg.norm(a) < 1e-3


def test_analysis_chain_skips_the_gram_solve(small_model, projection_setup):
    cloud, _, _, ops = projection_setup
    grad = small_model.loss_terms(cloud.points, 0, 0.0).coord_gradient
    bands = project_gradient_to_wavelets(grad, ops, "analysis")
    np.testing.assert_allclose(bands[3], ops.apply_band(4, grad))
    with pytest.raises(InvalidParameterError):
        project_gradient_to_wavelets(grad, ops, "backward")
