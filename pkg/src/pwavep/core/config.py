"""
Typed configuration records.

All records are frozen pydantic models; constructing one validates it.
parse_config() converts pydantic's ValidationError into ConfigurationError
so the CLI can map it to exit code 2.
"""

import sys
from typing import Any, Dict, Literal, Mapping, Optional, Tuple, Type, TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from pwavep.core.errors import ConfigurationError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


KernelFamily = Literal["mexican-hat", "meyer"]
OperatorMode = Literal["exact", "chebyshev"]
OracleMode = Literal["analytic", "zeroth-order", "external"]
FeatureLayer = Literal["point1", "point2", "global"]
GradientChain = Literal["synthesis", "analysis"]
AttackKind = Literal["linf-coordinates", "spectral-band", "point-addition"]
ShapeClass = Literal["sphere", "cube", "torus", "plane"]
ExperimentName = Literal[
    "band-study",
    "defense-eval",
    "clean-side-effect",
    "kernel-ablation",
    "order-ablation",
    "partition-ablation",
    "layer-ablation",
    "hyper-ablation",
    "alpha-ablation",
    "beta-ablation",
    "gamma-ablation",
    "components-ablation",
    "blackbox-eval",
]

M = TypeVar("M", bound=BaseModel)


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class PurificationConfig(_Frozen):
    """Hyper-parameters of the purification pipeline."""

    k: int = Field(20, ge=1)
    alpha: float = Field(0.002, ge=0)
    beta: float = Field(1.0, ge=0)
    gamma: float = Field(0.0, ge=0, lt=1)
    drop_rate: float = Field(0.01, ge=0, lt=1)
    filter_rate: float = Field(0.10, ge=0, le=1)
    scale_count: int = Field(4, ge=2)
    chebyshev_order: int = Field(40, ge=1)
    kernel: KernelFamily = "mexican-hat"
    mode: OperatorMode = "exact"
    chain: GradientChain = "synthesis"

    # Component switches; all True is the full method
    use_spectral: bool = True
    use_spatial: bool = True
    filter_mid: bool = True
    remove_high: bool = True

    @model_validator(mode="after")
    def _check_rates(self) -> "PurificationConfig":
        if self.drop_rate > self.filter_rate:
            raise ValueError(
                f"drop_rate ({self.drop_rate}) must not exceed filter_rate ({self.filter_rate})"
            )
        if self.scale_count % 2:
            raise ValueError(f"scale_count must be even, got {self.scale_count}")
        return self


class OracleConfig(_Frozen):
    """How gradients of the composite loss are obtained."""

    alpha: float = Field(0.002, ge=0)
    mode: OracleMode = "analytic"
    layer: FeatureLayer = "global"
    zo_directions: int = Field(64, ge=1)
    zo_smoothing: float = Field(1e-3, gt=0)
    zo_batch: int = Field(64, ge=1)
    seed: int = 0
    command: Optional[str] = None

    @model_validator(mode="after")
    def _check_external(self) -> "OracleConfig":
        if self.mode == "external" and not self.command:
            raise ValueError("external oracle mode requires a command")
        return self


class AttackBudget(_Frozen):
    """Budget and knobs of one attack."""

    kind: AttackKind = "linf-coordinates"
    epsilon: float = Field(0.05, gt=0)
    steps: int = Field(20, ge=1)
    step_size: Optional[float] = Field(None, gt=0)
    added_points: int = Field(0, ge=0)
    cd_weight: float = Field(1.0, ge=0)
    band_index: int = Field(10, ge=1)
    band_count: int = Field(10, ge=1)
    seed: int = 0

    @model_validator(mode="after")
    def _check_band(self) -> "AttackBudget":
        if self.band_index > self.band_count:
            raise ValueError(
                f"band_index ({self.band_index}) must not exceed band_count ({self.band_count})"
            )
        return self

    @property
    def resolved_step_size(self) -> float:
        """Explicit step size, or 2.5 * epsilon / steps."""
        if self.step_size is not None:
            return self.step_size
        return 2.5 * self.epsilon / self.steps


class DatasetSpec(_Frozen):
    """Synthetic generator parameters, or a glob of labeled point-cloud files."""

    classes: Tuple[ShapeClass, ...] = ("sphere", "cube", "torus", "plane")
    points_per_cloud: int = Field(256, ge=64)
    clouds_per_class: int = Field(100, ge=1)
    noise: float = Field(0.01, ge=0)
    heldout_fraction: float = Field(0.2, gt=0, lt=1)
    seed: int = 0
    files: Optional[str] = None


class TrainingConfig(_Frozen):
    """Toy classifier training schedule."""

    epochs: int = Field(30, ge=1)
    learning_rate: float = Field(0.01, gt=0)
    batch_size: int = Field(16, ge=1)
    widths: Tuple[int, int] = (64, 128)
    seed: int = 0


def default_attacks() -> Dict[str, AttackBudget]:
    return {
        "pgd": AttackBudget(kind="linf-coordinates", epsilon=0.05, steps=20),
        "spectral-band": AttackBudget(kind="spectral-band", epsilon=2.0),
        # 10% of the default 256 points
        "point-addition": AttackBudget(
            kind="point-addition", epsilon=0.1, steps=20, added_points=26, cd_weight=1.0
        ),
    }


class ExperimentSpec(_Frozen):
    """One experiment of the harness."""

    name: ExperimentName = "defense-eval"
    dataset: DatasetSpec = DatasetSpec()
    purification: PurificationConfig = PurificationConfig()
    oracle: OracleConfig = OracleConfig()
    training: TrainingConfig = TrainingConfig()
    attacks: Dict[str, AttackBudget] = Field(default_factory=default_attacks)
    repeats: int = Field(1, ge=1)
    seed: int = 0
    output_dir: Optional[str] = None

    # Evaluation subset; None uses every held-out cloud
    eval_clouds: Optional[int] = Field(None, ge=1)

    # Band study
    band_count: int = Field(10, ge=1)
    band_energy: float = Field(2.0, ge=0)
    band_clouds: int = Field(50, ge=1)

    # Baselines
    sor_k: int = Field(20, ge=1)
    sor_sigma: float = Field(1.1, ge=0)
    ror_radius_factor: float = Field(2.5, gt=0)
    ror_min_neighbors: int = Field(4, ge=0)
    lowpass_cutoff: float = Field(0.67, ge=0, le=2)


def parse_config(model_cls: Type[M], data: Mapping[str, Any]) -> M:
    """
    Validate a mapping into a config model.

    Raises:
        ConfigurationError: If validation fails. The message lists every
            offending field.
    """
    try:
        return model_cls.model_validate(dict(data))
    except ValidationError as e:
        raise ConfigurationError(f"Invalid {model_cls.__name__}: {e}") from e


def load_toml(path: str) -> Dict[str, Any]:
    """Read a TOML file into a dict."""
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except FileNotFoundError:
        raise ConfigurationError(f"Config file not found: {path}")
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationError(f"Config file {path} is not valid TOML: {e}") from e


def load_experiment_spec(path: str, overrides: Optional[Mapping[str, Any]] = None) -> ExperimentSpec:
    """
    Load an ExperimentSpec from a TOML file.

    Top-level keys map to ExperimentSpec fields; the sections [dataset],
    [purification], [oracle], [training] and [attacks.<name>] map to the
    nested models. Keys in `overrides` replace top-level values.

    Example:
        name = "defense-eval"
        seed = 7

        [purification]
        gamma = 0.25

        [attacks.pgd]
        kind = "linf-coordinates"
        epsilon = 0.05
    """
    data = load_toml(path)
    if overrides:
        data.update(overrides)
    return parse_config(ExperimentSpec, data)


def dump_models(**models: BaseModel) -> Dict[str, Any]:
    """JSON-ready echo of several config models."""
    return {name: model.model_dump(mode="json") for name, model in models.items()}


def replace(model: M, **changes: Any) -> M:
    """Copy of a frozen model with fields changed, re-validated."""
    return parse_config(type(model), {**model.model_dump(), **changes})


__all__ = [
    "PurificationConfig",
    "OracleConfig",
    "AttackBudget",
    "DatasetSpec",
    "TrainingConfig",
    "ExperimentSpec",
    "default_attacks",
    "parse_config",
    "load_toml",
    "load_experiment_spec",
    "dump_models",
    "replace",
]
