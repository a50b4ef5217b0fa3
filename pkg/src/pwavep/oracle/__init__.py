from pwavep.oracle.toy_model import LAYERS, ToyClassifier
from pwavep.oracle.training import TrainingReport, accuracy, gradient_check, train_toy_classifier
from pwavep.oracle.zeroth_order import zeroth_order_gradient
from pwavep.oracle.base import Oracle, OracleOutput
from pwavep.oracle.external import ExternalOracle, OracleRequest, OracleResponse, serve
from pwavep.oracle.projection import project_gradient_to_wavelets

__all__ = [
    "LAYERS",
    "ToyClassifier",
    "TrainingReport",
    "accuracy",
    "gradient_check",
    "train_toy_classifier",
    "zeroth_order_gradient",
    "Oracle",
    "OracleOutput",
    "ExternalOracle",
    "OracleRequest",
    "OracleResponse",
    "serve",
    "project_gradient_to_wavelets",
]
