"""
Hierarchical wavelet purification.

    graph -> GWT -> oracle gradient -> per-band gradients -> LSS -> hybrid
    score -> partition -> attenuate the best band of mid-risk points by gamma
    -> IGWT -> drop high-risk ids

The graph is built once on the input and reused for the reconstruction.
Ids travel through the reconstruction, so removal is by id.
"""

import os
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd
from loguru import logger

from pwavep.core.config import PurificationConfig
from pwavep.core.errors import InvalidParameterError
from pwavep.core.parallel import parallel_map
from pwavep.geometry.cloud import PointCloud
from pwavep.geometry.graph import KnnGraph, LaplacianPair, build_knn_graph, build_laplacians, require_connected
from pwavep.geometry.io import save_cloud
from pwavep.oracle.base import Oracle, OracleOutput
from pwavep.oracle.projection import project_gradient_to_wavelets
from pwavep.saliency.partition import RiskPartition, partition
from pwavep.saliency.scores import SaliencyReport, hybrid_saliency, local_sparsity_scores
from pwavep.spectral.basis import eigendecompose
from pwavep.wavelets.kernels import design_kernel_bank
from pwavep.wavelets.operators import WaveletOperators, build_operators_chebyshev, build_operators_exact
from pwavep.wavelets.transform import WaveletCoefficients, gwt


@dataclass(frozen=True)
class CoefficientEdit:
    point_id: int
    band: int
    old: Tuple[float, float, float]
    new: Tuple[float, float, float]


@dataclass(frozen=True, eq=False)
class PurificationResult:
    """
    Attributes:
        purified: Final cloud, high-risk ids removed
        intermediate: Reconstruction after filtering, before removal
        partition: High/mid risk ids
        modified_coefficients: One edit per filtered mid-risk point
        report: Saliency of every input point
        coefficients: Unmodified wavelet coefficients of the input
        oracle_output: Oracle answer on the input
        timings: Seconds per stage
    """

    purified: PointCloud
    intermediate: PointCloud
    partition: RiskPartition
    modified_coefficients: Tuple[CoefficientEdit, ...]
    report: SaliencyReport
    coefficients: WaveletCoefficients
    oracle_output: OracleOutput
    timings: Dict[str, float] = field(default_factory=dict)

    def edits_frame(self) -> pd.DataFrame:
        rows = [
            {
                "point_id": e.point_id,
                "band": e.band,
                "old_x": e.old[0], "old_y": e.old[1], "old_z": e.old[2],
                "new_x": e.new[0], "new_y": e.new[1], "new_z": e.new[2],
            }
            for e in self.modified_coefficients
        ]
        columns = ["point_id", "band", "old_x", "old_y", "old_z", "new_x", "new_y", "new_z"]
        return pd.DataFrame(rows, columns=columns)


def build_wavelet_operators(
    cloud: PointCloud, config: PurificationConfig
) -> Tuple[KnnGraph, LaplacianPair, WaveletOperators]:
    """
    K-NN graph, Laplacians and wavelet operators of a cloud.

    Raises:
        InvalidParameterError: If N <= k
        GraphConstructionError: If the graph is disconnected
        CapacityError: Exact mode above the dense cap
    """
    if cloud.n <= config.k:
        raise InvalidParameterError(
            f"Purification needs more points than neighbors: N={cloud.n}, k={config.k}. "
            "Lower k or pass a denser cloud."
        )
    graph = build_knn_graph(cloud, config.k)
    require_connected(graph)
    lap = build_laplacians(graph)
    bank = design_kernel_bank(config.kernel, config.scale_count, lap.lambda_max_estimate)
    if config.mode == "exact":
        ops = build_operators_exact(bank, eigendecompose(lap, "normalized"))
    else:
        ops = build_operators_chebyshev(bank, lap, config.chebyshev_order)
    return graph, lap, ops


def pwavep(
    cloud: PointCloud, oracle: Oracle, config: Optional[PurificationConfig] = None
) -> PurificationResult:
    """
    Purify one cloud.

    Args:
        cloud: Possibly attacked cloud P'
        oracle: Gradient oracle of the protected model
        config: Hyper-parameters; defaults are k=20, alpha=0.002, beta=1, gamma=0,
            1% removal and 10% filtering
            (drop_rate must stay below 1)

    Returns:
        PurificationResult

    Raises:
        GraphConstructionError: Disconnected K-NN graph (before any transform)
        DataError: Removal would empty the cloud (tiny clouds at a high drop_rate)
        OracleError: Oracle failure
    """
    config = config or PurificationConfig()
    timings: Dict[str, float] = {}
    clock = time.perf_counter()

    def lap_time(stage: str) -> None:
        nonlocal clock
        now = time.perf_counter()
        timings[stage] = now - clock
        clock = now

    graph, _, ops = build_wavelet_operators(cloud, config)
    lap_time("operators")

    coeffs = gwt(ops, cloud.points)
    lap_time("analysis")

    # target=None: the loss is taken against the model's prediction on this input
    answer = oracle.evaluate(cloud, alpha=config.alpha)
    band_gradients = project_gradient_to_wavelets(answer.coord_gradient, ops, config.chain)
    lap_time("gradient")

    lss, d_bar = local_sparsity_scores(cloud, graph)
    report = hybrid_saliency(
        band_gradients,
        lss,
        beta=config.beta,
        ids=cloud.ids,
        d_bar=d_bar,
        use_spectral=config.use_spectral,
        use_spatial=config.use_spatial,
    )
    risk = partition(report, config.drop_rate, config.filter_rate)
    lap_time("saliency")

    stack = coeffs.stacked()
    edits: List[CoefficientEdit] = []
    if config.filter_mid:
        for row in risk.mid_rows:
            band = int(report.best_band[row])
            old = stack[band, row].copy()
            stack[band, row] = config.gamma * old
            edits.append(
                CoefficientEdit(
                    point_id=int(cloud.ids[row]),
                    band=band,
                    old=tuple(float(v) for v in old),
                    new=tuple(float(v) for v in stack[band, row]),
                )
            )

    intermediate = cloud.with_points(ops.synthesize(stack))
    lap_time("synthesis")

    purified = intermediate.without_ids(risk.high_risk) if config.remove_high else intermediate
    lap_time("removal")

    logger.debug(
        f"pwavep: n={cloud.n} high={risk.high_risk.size} mid={risk.mid_risk.size} "
        f"edits={len(edits)} out={purified.n} "
        + " ".join(f"{k}={v * 1e3:.1f}ms" for k, v in timings.items())
    )

    return PurificationResult(
        purified=purified,
        intermediate=intermediate,
        partition=risk,
        modified_coefficients=tuple(edits),
        report=report,
        coefficients=coeffs,
        oracle_output=answer,
        timings=timings,
    )


class PWavePPurifier:
    def __init__(self, oracle: Oracle, config: Optional[PurificationConfig] = None):
        """
        Args:
            oracle: Gradient oracle shared by every purification
            config: PurificationConfig, defaults when omitted
        """
        self.oracle = oracle
        self.config = config or PurificationConfig()

    def purify(self, cloud: PointCloud) -> PurificationResult:
        return pwavep(cloud, self.oracle, self.config)

    def __call__(self, cloud: PointCloud) -> PointCloud:
        return self.purify(cloud).purified

    def purify_batch(
        self,
        clouds: Sequence[PointCloud],
        threads: Optional[int] = None,
        progress: bool = False,
    ) -> List[PurificationResult]:
        """
        Purify many clouds; results come back in input order.

        Args:
            clouds: Input clouds
            threads: Worker count, defaults to settings.threads
            progress: Show a tqdm bar
        """
        return parallel_map(self.purify, clouds, threads=threads, progress=progress, desc="purify")


def write_result_bundle(result: PurificationResult, out_dir: str, stem: str = "purified") -> Dict[str, str]:
    """
    Write the purified cloud, the saliency table, the input coefficients and
    the coefficient edits.

    Returns:
        Mapping of artifact name to path
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "purified": os.path.join(out_dir, f"{stem}.xyz"),
        "saliency": os.path.join(out_dir, f"{stem}_saliency.csv"),
        "coefficients": os.path.join(out_dir, f"{stem}_coefficients.csv"),
        "edits": os.path.join(out_dir, f"{stem}_edits.csv"),
    }
    save_cloud(result.purified, paths["purified"])
    result.report.save_csv(paths["saliency"])
    result.coefficients.save_csv(paths["coefficients"], result.intermediate.ids)
    result.edits_frame().to_csv(paths["edits"], index=False, float_format="%.10g")
    return paths
