import numpy as np
import pytest

from pwavep.core.config import TrainingConfig
from pwavep.core.settings import configure, reset_settings
from pwavep.geometry.cloud import PointCloud
from pwavep.harness.data import generate_synthetic_dataset, sample_sphere
from pwavep.oracle.toy_model import ToyClassifier
from pwavep.oracle.training import train_toy_classifier


@pytest.fixture(autouse=True)
def fresh_settings(tmp_path):
    reset_settings()
    configure(output_dir=str(tmp_path / "runs"))
    yield
    reset_settings()


def _sphere(n: int, seed: int = 0, label=None) -> PointCloud:
    return PointCloud(points=sample_sphere(np.random.default_rng(seed), n), label=label)


@pytest.fixture
def make_sphere():
    return _sphere


@pytest.fixture
def sphere_cloud() -> PointCloud:
    return _sphere(100)


@pytest.fixture
def small_model() -> ToyClassifier:
    """Untrained but deterministic; enough for gradient checks."""
    return ToyClassifier.initialize(4, widths=(16, 32), seed=0, class_names=("a", "b", "c", "d"))


@pytest.fixture(scope="session")
def toy_dataset():
    return generate_synthetic_dataset(points_per_cloud=128, clouds_per_class=25, seed=0)


@pytest.fixture(scope="session")
def trained_model(toy_dataset):
    train, heldout = toy_dataset.split(0.2, seed=0)
    model, _ = train_toy_classifier(
        train,
        heldout,
        TrainingConfig(epochs=8, widths=(32, 64)),
        class_names=toy_dataset.class_names,
    )
    return model
