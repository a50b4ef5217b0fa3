"""
Labeled datasets for the toy classifier and the experiments.

Synthetic shapes are sampled uniformly on their surface and scaled so the
farthest surface point sits at radius 1:

    sphere  unit sphere
    cube    surface of [-1, 1]^3 scaled by 1/sqrt(3)
    torus   major radius 1, minor radius 0.4, scaled by 1/1.4
    plane   square [-1, 1]^2 at z = 0, scaled by 1/sqrt(2)

Gaussian jitter with sd `noise` is added afterwards.
"""

import glob
import os
from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np
from loguru import logger

from pwavep.core.config import DatasetSpec
from pwavep.core.errors import DataError, InvalidParameterError
from pwavep.geometry.cloud import PointCloud
from pwavep.geometry.io import load_cloud, save_cloud

TORUS_MAJOR = 1.0
TORUS_MINOR = 0.4


def sample_sphere(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def sample_cube(rng: np.random.Generator, n: int) -> np.ndarray:
    faces = rng.integers(0, 6, size=n)
    pts = rng.uniform(-1.0, 1.0, size=(n, 3))
    axis = faces // 2
    pts[np.arange(n), axis] = np.where(faces % 2 == 0, -1.0, 1.0)
    return pts / np.sqrt(3.0)


def sample_torus(rng: np.random.Generator, n: int) -> np.ndarray:
    # Rejection on the tube angle gives uniform area density
    out = np.empty((0, 3))
    while out.shape[0] < n:
        m = 2 * (n - out.shape[0])
        theta = rng.uniform(0.0, 2 * np.pi, m)
        phi = rng.uniform(0.0, 2 * np.pi, m)
        accept = rng.uniform(0.0, 1.0, m) < (TORUS_MAJOR + TORUS_MINOR * np.cos(theta)) / (
            TORUS_MAJOR + TORUS_MINOR
        )
        ring = TORUS_MAJOR + TORUS_MINOR * np.cos(theta[accept])
        pts = np.column_stack(
            [ring * np.cos(phi[accept]), ring * np.sin(phi[accept]), TORUS_MINOR * np.sin(theta[accept])]
        )
        out = np.vstack([out, pts])
    return out[:n] / (TORUS_MAJOR + TORUS_MINOR)


def sample_plane(rng: np.random.Generator, n: int) -> np.ndarray:
    xy = rng.uniform(-1.0, 1.0, size=(n, 2))
    return np.column_stack([xy, np.zeros(n)]) / np.sqrt(2.0)


SAMPLERS: Dict[str, Callable[[np.random.Generator, int], np.ndarray]] = {
    "sphere": sample_sphere,
    "cube": sample_cube,
    "torus": sample_torus,
    "plane": sample_plane,
}


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    clouds: Tuple[PointCloud, ...]
    class_names: Tuple[str, ...]

    def __len__(self) -> int:
        return len(self.clouds)

    def split(self, heldout_fraction: float, seed: int = 0) -> Tuple[List[PointCloud], List[PointCloud]]:
        """Stratified train/held-out split, deterministic in seed."""
        rng = np.random.default_rng(seed)
        train: List[PointCloud] = []
        heldout: List[PointCloud] = []
        labels = np.array([c.label for c in self.clouds])
        for label in np.unique(labels):
            rows = rng.permutation(np.flatnonzero(labels == label))
            cut = int(round(heldout_fraction * rows.size))
            heldout.extend(self.clouds[i] for i in rows[:cut])
            train.extend(self.clouds[i] for i in rows[cut:])
        return train, heldout


def generate_synthetic_dataset(
    classes: Sequence[str] = ("sphere", "cube", "torus", "plane"),
    points_per_cloud: int = 256,
    clouds_per_class: int = 100,
    noise: float = 0.01,
    seed: int = 0,
) -> LabeledDataset:
    """
    Sample labeled shape clouds; label i is classes[i].

    Raises:
        InvalidParameterError: Unknown class or fewer than 64 points per cloud
    """
    unknown = [c for c in classes if c not in SAMPLERS]
    if unknown:
        raise InvalidParameterError(f"Unknown shape classes {unknown}; choose from {sorted(SAMPLERS)}.")
    if points_per_cloud < 64:
        raise InvalidParameterError(f"points_per_cloud must be at least 64, got {points_per_cloud}.")

    rng = np.random.default_rng(seed)
    clouds = []
    for label, name in enumerate(classes):
        sampler = SAMPLERS[name]
        for _ in range(clouds_per_class):
            pts = sampler(rng, points_per_cloud)
            if noise > 0:
                pts = pts + rng.normal(0.0, noise, size=pts.shape)
            clouds.append(PointCloud(points=pts, label=label))
    logger.debug(
        f"synthetic dataset: {len(classes)} classes x {clouds_per_class} clouds x {points_per_cloud} points"
    )
    return LabeledDataset(clouds=tuple(clouds), class_names=tuple(classes))


def load_labeled_files(pattern: str) -> LabeledDataset:
    """
    Load every file matching a glob; labels come from the files' label comments.

    Raises:
        DataError: No match, or a file without a label
    """
    paths = sorted(glob.glob(pattern))
    if not paths:
        raise DataError(f"No point-cloud files match {pattern!r}.")
    clouds = []
    for path in paths:
        cloud = load_cloud(path)
        if cloud.label is None:
            raise DataError(f"{path} has no label; add a '# label: <int>' line (xyz) or 'comment label <int>' (ply).")
        clouds.append(cloud)
    count = max(c.label for c in clouds) + 1
    return LabeledDataset(clouds=tuple(clouds), class_names=tuple(f"class_{i}" for i in range(count)))


def load_dataset(spec: DatasetSpec) -> LabeledDataset:
    if spec.files:
        return load_labeled_files(spec.files)
    return generate_synthetic_dataset(
        spec.classes, spec.points_per_cloud, spec.clouds_per_class, spec.noise, spec.seed
    )


def write_dataset(dataset: LabeledDataset, out_dir: str) -> List[str]:
    """One xyz file per cloud, named <class>_<index>.xyz."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    counters: Dict[int, int] = {}
    for cloud in dataset.clouds:
        index = counters.get(cloud.label, 0)
        counters[cloud.label] = index + 1
        path = os.path.join(out_dir, f"{dataset.class_names[cloud.label]}_{index:04d}.xyz")
        save_cloud(cloud, path)
        paths.append(path)
    return paths
