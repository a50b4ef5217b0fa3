"""
Experiment suite.

Every experiment takes an ExperimentContext (spec, model, oracle, output
directory) and returns pandas tables. Randomness is derived from
spec.seed through numpy SeedSequence, keyed by cloud index and band or
attack, so results do not depend on thread scheduling.
"""

import os
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from pwavep.attacks.spectral import run_attack
from pwavep.core.config import AttackBudget, ExperimentSpec, PurificationConfig, replace
from pwavep.core.errors import ConfigurationError, DataError
from pwavep.core.parallel import parallel_map
from pwavep.geometry.cloud import PointCloud
from pwavep.geometry.graph import build_knn_graph, build_laplacians, require_connected
from pwavep.harness.data import LabeledDataset, load_dataset
from pwavep.metrics.accuracy import AccuracyTally, coefficient_of_variation, spearman, summarize
from pwavep.metrics.distances import chamfer, emd
from pwavep.oracle.base import Oracle
from pwavep.oracle.toy_model import ToyClassifier
from pwavep.purify.baselines import gft_lowpass_defense, ror, ror_radius, sor
from pwavep.purify.pipeline import pwavep
from pwavep.spectral.basis import eigendecompose
from pwavep.spectral.filters import inject_band_perturbation

CSV_FLOAT_FORMAT = "%.10g"

Defense = Callable[[PointCloud], PointCloud]


def derive_seed(base: int, *keys: int) -> int:
    """Independent 32-bit seed for (base, *keys)."""
    return int(np.random.SeedSequence([base, *keys]).generate_state(1)[0])


@dataclass
class ExperimentOutput:
    """Tables and scalar results of one experiment, plus optional plot scripts."""

    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)
    results: Dict[str, Any] = field(default_factory=dict)
    scripts: Dict[str, str] = field(default_factory=dict)


@dataclass
class ExperimentContext:
    """
    Everything an experiment needs.

    Attributes:
        spec: Resolved experiment spec
        model: Local toy classifier, when one was loaded
        oracle: Gradient oracle of the protected model
        out_dir: Run directory for tables and scripts
        threads: Worker count, defaults to settings.threads
        progress: Show tqdm bars
    """

    spec: ExperimentSpec
    model: Optional[ToyClassifier] = None
    oracle: Optional[Oracle] = None
    out_dir: str = "."
    threads: Optional[int] = None
    progress: bool = False

    @cached_property
    def dataset(self) -> LabeledDataset:
        return load_dataset(self.spec.dataset)

    @cached_property
    def heldout(self) -> List[PointCloud]:
        _, heldout = self.dataset.split(self.spec.dataset.heldout_fraction, self.spec.dataset.seed)
        return heldout

    def eval_set(self) -> List[PointCloud]:
        """Held-out clouds, subsampled to spec.eval_clouds in original order."""
        clouds = self.heldout
        count = self.spec.eval_clouds
        if count is None or count >= len(clouds):
            return list(clouds)
        rng = np.random.default_rng(derive_seed(self.spec.seed, 0))
        rows = np.sort(rng.choice(len(clouds), size=count, replace=False))
        return [clouds[i] for i in rows]

    def require_oracle(self) -> Oracle:
        if self.oracle is None:
            raise ConfigurationError(
                "This experiment needs a trained classifier. Train one with "
                "`pwavep train-toy --output model.npz` and pass --model model.npz, "
                "or point --oracle at an external oracle."
            )
        return self.oracle

    def require_model(self) -> ToyClassifier:
        if self.model is None:
            raise ConfigurationError(
                "This experiment queries a local model directly (zeroth-order or layer "
                "sweeps). Pass --model with a classifier saved by `pwavep train-toy`."
            )
        return self.model

    def map(self, fn: Callable, items: Sequence, desc: str) -> list:
        return parallel_map(fn, items, threads=self.threads, progress=self.progress, desc=desc)

    def write(self, output: ExperimentOutput) -> List[str]:
        """Write tables as csv and scripts verbatim; return the paths written."""
        os.makedirs(self.out_dir, exist_ok=True)
        paths = []
        for name, table in output.tables.items():
            path = os.path.join(self.out_dir, f"{name}.csv")
            table.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
            paths.append(path)
        for name, text in output.scripts.items():
            path = os.path.join(self.out_dir, name)
            with open(path, "w") as f:
                f.write(text)
            paths.append(path)
        return paths


# Band study


BAND_STUDY_SCRIPT = """\
set datafile separator ","
set key autotitle columnhead
set terminal svg size 720,480
set output "{stem}.svg"
set xlabel "band index (low to high frequency)"
set ylabel "distance to clean"
set logscale y
# first data row is the energy-0 control
plot "{stem}.csv" every ::1 using 1:3:4 with yerrorlines title "Chamfer", \\
     "" every ::1 using 1:5:6 with yerrorlines title "EMD"
"""


def run_band_study(ctx: ExperimentContext) -> pd.DataFrame:
    """
    CD and EMD of band-limited perturbations, per band.

    Picks spec.band_clouds clouds, injects a perturbation of Frobenius norm
    spec.band_energy into each of spec.band_count index-uniform bands of the
    cloud's normalized K-NN Laplacian and measures both distances against
    the clean cloud. Row 0 is an energy-0 control.

    Returns:
        Columns band_index, energy, cd_mean, cd_sd, emd_mean, emd_sd, clouds
    """
    spec = ctx.spec
    pool = ctx.dataset.clouds
    rng = np.random.default_rng(derive_seed(spec.seed, 1))
    count = min(spec.band_clouds, len(pool))
    chosen = [pool[i] for i in np.sort(rng.choice(len(pool), size=count, replace=False))]
    bands = spec.band_count

    def one(item: Tuple[int, PointCloud]) -> np.ndarray:
        index, cloud = item
        graph = build_knn_graph(cloud, spec.purification.k)
        require_connected(graph)
        basis = eigendecompose(build_laplacians(graph), "normalized")
        out = np.zeros((bands + 1, 2))
        for band in range(bands + 1):
            # band 0 is the control: zero energy through the same injection path
            attacked, _ = inject_band_perturbation(
                cloud,
                basis,
                max(band, 1),
                bands,
                spec.band_energy if band else 0.0,
                seed=derive_seed(spec.seed, index, band),
            )
            out[band] = chamfer(attacked, cloud), emd(attacked, cloud, solver="hungarian-exact").cost
        return out

    per_cloud = np.stack(ctx.map(one, list(enumerate(chosen)), desc="band study"))

    rows = []
    for band in range(bands + 1):
        cd = summarize(per_cloud[:, band, 0])
        em = summarize(per_cloud[:, band, 1])
        rows.append(
            {
                "band_index": band,
                "energy": spec.band_energy if band else 0.0,
                "cd_mean": cd.mean,
                "cd_sd": cd.sd,
                "emd_mean": em.mean,
                "emd_sd": em.sd,
                "clouds": count,
            }
        )
    table = pd.DataFrame(rows)
    logger.info(f"band study: {count} clouds x {bands} bands, energy={spec.band_energy}")
    return table


def band_study_summary(table: pd.DataFrame) -> Dict[str, float]:
    """CD variation and EMD trend across the non-control bands."""
    bands = table[table["band_index"] > 0]
    return {
        "cd_coefficient_of_variation": coefficient_of_variation(bands["cd_mean"]),
        "emd_band_spearman": spearman(bands["band_index"], bands["emd_mean"]),
    }


# Attacks and defenses


def attack_sets(
    ctx: ExperimentContext,
    clouds: Sequence[PointCloud],
    attacks: Optional[Dict[str, AttackBudget]] = None,
) -> Dict[str, List[PointCloud]]:
    """Attack every cloud with every budget; seeds depend on (attack, cloud index)."""
    oracle = ctx.require_oracle()
    attacks = ctx.spec.attacks if attacks is None else attacks
    out = {}
    for a_index, (name, budget) in enumerate(sorted(attacks.items())):

        def one(item: Tuple[int, PointCloud], budget=budget, a_index=a_index) -> PointCloud:
            index, cloud = item
            seeded = replace(budget, seed=derive_seed(ctx.spec.seed, 2, a_index, index))
            return run_attack(cloud, oracle, seeded, k=ctx.spec.purification.k)

        out[name] = ctx.map(one, list(enumerate(clouds)), desc=f"attack {name}")
    return out


def defenses(ctx: ExperimentContext, config: Optional[PurificationConfig] = None) -> Dict[str, Defense]:
    spec = ctx.spec
    config = config or spec.purification
    oracle = ctx.require_oracle()
    return {
        "none": lambda c: c,
        "sor": lambda c: sor(c, spec.sor_k, spec.sor_sigma),
        "ror": lambda c: ror(c, ror_radius(c, spec.ror_radius_factor), spec.ror_min_neighbors),
        "gft-lowpass": lambda c: gft_lowpass_defense(c, config.k, spec.lowpass_cutoff),
        "pwavep": lambda c: pwavep(c, oracle, config).purified,
    }


@dataclass(frozen=True)
class DefenseScore:
    accuracy: float
    cd_to_clean: float
    failures: int
    clouds: int


def score_defense(
    ctx: ExperimentContext,
    clean: Sequence[PointCloud],
    inputs: Sequence[PointCloud],
    defense: Defense,
    oracle: Optional[Oracle] = None,
    desc: str = "defend",
) -> DefenseScore:
    """
    Accuracy of `oracle` on defended inputs and mean CD(defended, clean).

    A defense that raises DataError on some cloud (disconnected graph, every
    point removed) leaves that cloud undefended and counts as a failure.
    """
    oracle = oracle or ctx.require_oracle()

    def one(pair: Tuple[PointCloud, PointCloud]) -> Tuple[int, float, bool]:
        reference, cloud = pair
        failed = False
        try:
            defended = defense(cloud)
        except DataError as e:
            logger.warning(f"defense failed on a {cloud.n}-point cloud, left undefended: {e}")
            defended, failed = cloud, True
        return oracle.predict(defended), chamfer(defended, reference), failed

    results = ctx.map(one, list(zip(clean, inputs)), desc=desc)
    tally = AccuracyTally()
    tally.extend([c.label for c in clean], [r[0] for r in results])
    return DefenseScore(
        accuracy=tally.accuracy,
        cd_to_clean=summarize([r[1] for r in results]).mean,
        failures=sum(r[2] for r in results),
        clouds=len(results),
    )


def run_defense_eval(ctx: ExperimentContext) -> pd.DataFrame:
    """
    Accuracy and CD-to-clean of every defense under every attack.

    Returns:
        Columns attack, defense, accuracy, cd_to_clean, failures, clouds
    """
    clouds = ctx.eval_set()
    attacked = attack_sets(ctx, clouds)
    rows = []
    for attack_name, inputs in attacked.items():
        for defense_name, defense in defenses(ctx).items():
            score = score_defense(ctx, clouds, inputs, defense, desc=f"{attack_name}/{defense_name}")
            rows.append({"attack": attack_name, "defense": defense_name, **asdict(score)})
            logger.info(
                f"{attack_name:>16} | {defense_name:<12} acc={score.accuracy:.3f} "
                f"cd={score.cd_to_clean:.3e} failures={score.failures}"
            )
    return pd.DataFrame(rows, columns=["attack", "defense", "accuracy", "cd_to_clean", "failures", "clouds"])


def run_clean_side_effect(ctx: ExperimentContext) -> Tuple[float, float]:
    """
    Accuracy on clean held-out clouds before and after purification.

    Returns:
        (clean accuracy, post-purification accuracy)
    """
    clouds = ctx.eval_set()
    oracle = ctx.require_oracle()
    config = ctx.spec.purification
    before = score_defense(ctx, clouds, clouds, lambda c: c, desc="clean")
    after = score_defense(ctx, clouds, clouds, lambda c: pwavep(c, oracle, config).purified, desc="purified")
    logger.info(
        f"clean side effect: {before.accuracy:.3f} -> {after.accuracy:.3f} "
        f"(drop {100 * (before.accuracy - after.accuracy):.1f} points)"
    )
    return before.accuracy, after.accuracy


def run_blackbox_eval(ctx: ExperimentContext) -> pd.DataFrame:
    """
    PWaveP guided by analytic versus zeroth-order gradients, per attack.

    The attacks are white-box in both cases; only the defender's oracle
    changes.

    Returns:
        Columns attack, analytic_accuracy, zeroth_order_accuracy, difference
    """
    model = ctx.require_model()
    analytic = ctx.require_oracle()
    blackbox = Oracle(model, replace(ctx.spec.oracle, mode="zeroth-order", command=None))
    config = ctx.spec.purification
    clouds = ctx.eval_set()

    rows = []
    for attack_name, inputs in attack_sets(ctx, clouds).items():
        white = score_defense(ctx, clouds, inputs, lambda c: pwavep(c, analytic, config).purified,
                              desc=f"{attack_name}/analytic")
        black = score_defense(ctx, clouds, inputs, lambda c: pwavep(c, blackbox, config).purified,
                              oracle=analytic, desc=f"{attack_name}/zeroth-order")
        rows.append(
            {
                "attack": attack_name,
                "analytic_accuracy": white.accuracy,
                "zeroth_order_accuracy": black.accuracy,
                "difference": abs(white.accuracy - black.accuracy),
            }
        )
    return pd.DataFrame(rows)


def run_experiment(ctx: ExperimentContext, name: Optional[str] = None) -> ExperimentOutput:
    """Run a named experiment and collect its tables and headline numbers."""
    # Imported here: ablations builds on this module
    from pwavep.harness.ablations import ABLATIONS, run_ablations

    name = name or ctx.spec.name
    if name == "band-study":
        table = run_band_study(ctx)
        return ExperimentOutput(
            tables={"band_study": table},
            results=band_study_summary(table),
            scripts={"band_study.gp": BAND_STUDY_SCRIPT.format(stem="band_study")},
        )
    if name == "defense-eval":
        return ExperimentOutput(tables={"defense_eval": run_defense_eval(ctx)})
    if name == "clean-side-effect":
        clean, purified = run_clean_side_effect(ctx)
        table = pd.DataFrame(
            [{"clean_accuracy": clean, "purified_accuracy": purified, "drop": clean - purified,
              "clouds": len(ctx.eval_set())}]
        )
        return ExperimentOutput(
            tables={"clean_side_effect": table},
            results={"clean_accuracy": clean, "purified_accuracy": purified, "seed": ctx.spec.seed},
        )
    if name == "blackbox-eval":
        table = run_blackbox_eval(ctx)
        return ExperimentOutput(
            tables={"blackbox_eval": table},
            results={"max_difference": float(table["difference"].max()) if len(table) else 0.0},
        )
    ablation = name.removesuffix("-ablation")
    if ablation in ABLATIONS:
        tables = run_ablations(ctx, [ablation])
        return ExperimentOutput(tables={f"ablation_{k}": v for k, v in tables.items()})
    raise ConfigurationError(
        f"Unknown experiment {name!r}. Choose band-study, defense-eval, clean-side-effect, "
        f"blackbox-eval or one of the ablations: {', '.join(sorted(ABLATIONS))}."
    )
