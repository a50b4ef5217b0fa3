"""
One-knob sweeps around the default purification settings.

Each ablation attacks the evaluation set once, then re-runs PWaveP under
every setting of its knob on the same attacked clouds. Tables share the
columns knob, value, attack, accuracy, cd_to_clean, failures; the order
sweep adds operator_error and the partition grid splits its value into
drop_rate and filter_rate.
"""

from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from pwavep.core.config import PurificationConfig, replace
from pwavep.core.errors import ConfigurationError
from pwavep.geometry.cloud import PointCloud
from pwavep.harness.experiments import ExperimentContext, attack_sets, score_defense
from pwavep.oracle.base import Oracle
from pwavep.oracle.toy_model import LAYERS
from pwavep.purify.pipeline import build_wavelet_operators, pwavep
from pwavep.wavelets.kernels import FAMILIES

ALPHA_GRID = (0.0, 0.002, 0.02)
BETA_GRID = (0.0, 0.5, 1.0, 2.0)
GAMMA_GRID = (0.0, 0.25, 0.5, 0.75, 0.9)
ORDER_GRID = (5, 10, 20, 30, 50, 100)
DROP_GRID = (0.0, 0.01, 0.05)
FILTER_GRID = (0.05, 0.09, 0.2)
COMPONENTS = {
    "full": {},
    "spectral-only": {"use_spatial": False},
    "spatial-only": {"use_spectral": False},
    "filter-only": {"remove_high": False},
    "removal-only": {"filter_mid": False},
}

# Clouds used to measure Chebyshev operator error against exact mode
OPERATOR_ERROR_CLOUDS = 5

Setting = Tuple[object, PurificationConfig, Optional[Oracle]]


class _Sweep:
    """Attacked clouds shared by every setting of one ablation."""

    def __init__(self, ctx: ExperimentContext):
        self.ctx = ctx
        self.clean = ctx.eval_set()
        self.attacked = attack_sets(ctx, self.clean)

    def run(self, knob: str, settings: Iterable[Setting]) -> pd.DataFrame:
        rows = []
        for value, config, oracle in settings:
            guide = oracle or self.ctx.require_oracle()
            for attack, inputs in self.attacked.items():
                score = score_defense(
                    self.ctx,
                    self.clean,
                    inputs,
                    lambda c, config=config, guide=guide: pwavep(c, guide, config).purified,
                    desc=f"{knob}={value} {attack}",
                )
                rows.append(
                    {
                        "knob": knob,
                        "value": value,
                        "attack": attack,
                        "accuracy": score.accuracy,
                        "cd_to_clean": score.cd_to_clean,
                        "failures": score.failures,
                    }
                )
            logger.info(f"ablation {knob}={value} done")
        return pd.DataFrame(rows)


def _knob(ctx: ExperimentContext, sweep: _Sweep, knob: str, values: Sequence) -> pd.DataFrame:
    base = ctx.spec.purification
    return sweep.run(knob, [(v, replace(base, **{knob: v}), None) for v in values])


def kernel_ablation(ctx: ExperimentContext, sweep: _Sweep) -> pd.DataFrame:
    return _knob(ctx, sweep, "kernel", FAMILIES)


def alpha_ablation(ctx: ExperimentContext, sweep: _Sweep) -> pd.DataFrame:
    return _knob(ctx, sweep, "alpha", ALPHA_GRID)


def beta_ablation(ctx: ExperimentContext, sweep: _Sweep) -> pd.DataFrame:
    return _knob(ctx, sweep, "beta", BETA_GRID)


def gamma_ablation(ctx: ExperimentContext, sweep: _Sweep) -> pd.DataFrame:
    return _knob(ctx, sweep, "gamma", GAMMA_GRID)


def hyper_ablation(ctx: ExperimentContext, sweep: _Sweep) -> pd.DataFrame:
    return pd.concat(
        [alpha_ablation(ctx, sweep), beta_ablation(ctx, sweep), gamma_ablation(ctx, sweep)],
        ignore_index=True,
    )


def layer_ablation(ctx: ExperimentContext, sweep: _Sweep) -> pd.DataFrame:
    model = ctx.require_model()
    base = ctx.spec.purification
    settings = [
        (layer, base, Oracle(model, replace(ctx.spec.oracle, layer=layer, mode="analytic", command=None)))
        for layer in LAYERS
    ]
    return sweep.run("layer", settings)


def components_ablation(ctx: ExperimentContext, sweep: _Sweep) -> pd.DataFrame:
    base = ctx.spec.purification
    return sweep.run("components", [(name, replace(base, **c), None) for name, c in COMPONENTS.items()])


def partition_ablation(ctx: ExperimentContext, sweep: _Sweep) -> pd.DataFrame:
    base = ctx.spec.purification
    settings = [
        (f"{drop}/{keep}", replace(base, drop_rate=drop, filter_rate=keep), None)
        for drop in DROP_GRID
        for keep in FILTER_GRID
        if drop <= keep
    ]
    table = sweep.run("partition", settings)
    rates = table["value"].str.split("/", expand=True).astype(float)
    table.insert(2, "drop_rate", rates[0])
    table.insert(3, "filter_rate", rates[1])
    return table


def operator_error(clouds: Sequence[PointCloud], config: PurificationConfig, order: int) -> float:
    """
    Mean relative error of Chebyshev analysis against exact analysis.

    ||W_cheb x - W_exact x||_F / ||W_exact x||_F with x the cloud coordinates.
    """
    errors = []
    exact_config = replace(config, mode="exact")
    cheb_config = replace(config, mode="chebyshev", chebyshev_order=order)
    for cloud in clouds:
        _, _, exact = build_wavelet_operators(cloud, exact_config)
        _, _, approx = build_wavelet_operators(cloud, cheb_config)
        reference = exact.analyze(cloud.points)
        errors.append(np.linalg.norm(approx.analyze(cloud.points) - reference) / np.linalg.norm(reference))
    return float(np.mean(errors))


def order_ablation(ctx: ExperimentContext, sweep: _Sweep) -> pd.DataFrame:
    base = ctx.spec.purification
    probe = sweep.clean[:OPERATOR_ERROR_CLOUDS]
    settings = [(z, replace(base, mode="chebyshev", chebyshev_order=z), None) for z in ORDER_GRID]
    table = sweep.run("chebyshev_order", settings)
    errors = {z: operator_error(probe, base, z) for z in ORDER_GRID}
    for z, err in errors.items():
        logger.info(f"chebyshev order {z}: operator error {err:.3e}")
    table["operator_error"] = table["value"].map(errors)
    return table


ABLATIONS: Dict[str, Callable[[ExperimentContext, _Sweep], pd.DataFrame]] = {
    "kernel": kernel_ablation,
    "order": order_ablation,
    "partition": partition_ablation,
    "layer": layer_ablation,
    "alpha": alpha_ablation,
    "beta": beta_ablation,
    "gamma": gamma_ablation,
    "hyper": hyper_ablation,
    "components": components_ablation,
}


def run_ablations(ctx: ExperimentContext, names: Optional[List[str]] = None) -> Dict[str, pd.DataFrame]:
    """
    Run the named ablations (all of them by default).

    The attacked evaluation set is built once and shared by every ablation
    in the call.
    """
    names = names or list(ABLATIONS)
    unknown = [n for n in names if n not in ABLATIONS]
    if unknown:
        raise ConfigurationError(f"Unknown ablations {unknown}; choose from {', '.join(ABLATIONS)}.")
    sweep = _Sweep(ctx)
    return {name: ABLATIONS[name](ctx, sweep) for name in names}
