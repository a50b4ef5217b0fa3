"""
PWaveP - graph-wavelet purification of adversarial point clouds.

Purify a cloud:
    >>> from pwavep import configure, Oracle, Purifier, load_cloud
    >>> from pwavep import PurificationConfig, ToyClassifier
    >>> configure(threads=4)
    >>> oracle = Oracle(ToyClassifier.load("model.npz"))
    >>> result = Purifier(oracle, PurificationConfig(gamma=0.0)).purify(load_cloud("attacked.xyz"))
    >>> result.purified.n, result.partition.high_risk

Use a model served by another process (one JSON request per line):
    >>> from pwavep import OracleConfig
    >>> oracle = Oracle(config=OracleConfig(mode="external", command="python serve.py"))

Train the toy classifier and run the experiments from the shell:
    $ pwavep train-toy --output model.npz
    $ pwavep --model model.npz defense-eval

Environment Variables (alternative to configure()):
    PWAVEP_DEBUG - DEBUG logging when true
    PWAVEP_THREADS - Worker threads for batch work, default 1
    PWAVEP_DENSE_CAP - Largest graph for exact eigendecomposition, default 4096
    PWAVEP_HUNGARIAN_CAP - Largest cloud for exact EMD, default 512
    PWAVEP_ORACLE_TIMEOUT - Seconds per external oracle request, default 30
    PWAVEP_OUTPUT_DIR - Run directory root, default ./pwavep-runs
    PWAVEP_POWER_ITERATIONS - Power iterations for lambda_max, default 1000
"""

from loguru import logger

from pwavep.core.config import (
    AttackBudget,
    ExperimentSpec,
    OracleConfig,
    PurificationConfig,
    load_experiment_spec,
)
from pwavep.core.errors import PWavePError
from pwavep.core.log import setup_logging
from pwavep.core.settings import configure, get_settings
from pwavep.geometry.cloud import PointCloud
from pwavep.geometry.io import load_cloud, save_cloud
from pwavep.metrics.distances import chamfer, emd
from pwavep.oracle.base import Oracle
from pwavep.oracle.toy_model import ToyClassifier
from pwavep.purify.pipeline import PurificationResult, PWavePPurifier, pwavep
from pwavep.wavelets.transform import gwt, igwt

# Silent until setup_logging() or logger.enable("pwavep")
logger.disable("pwavep")

# Alias for convenience
Purifier = PWavePPurifier

__all__ = [
    "configure",
    "get_settings",
    "setup_logging",
    "PWavePError",
    "PointCloud",
    "load_cloud",
    "save_cloud",
    "PurificationConfig",
    "OracleConfig",
    "AttackBudget",
    "ExperimentSpec",
    "load_experiment_spec",
    "Oracle",
    "ToyClassifier",
    "pwavep",
    "Purifier",
    "PurificationResult",
    "gwt",
    "igwt",
    "chamfer",
    "emd",
]
