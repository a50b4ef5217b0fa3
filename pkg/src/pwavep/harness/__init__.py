from pwavep.harness.data import LabeledDataset, generate_synthetic_dataset, load_dataset, write_dataset
from pwavep.harness.manifest import RunManifest, compare_outputs, load_manifest, sha256_file
from pwavep.harness.experiments import (
    ExperimentContext,
    ExperimentOutput,
    attack_sets,
    band_study_summary,
    run_band_study,
    run_blackbox_eval,
    run_clean_side_effect,
    run_defense_eval,
    run_experiment,
)
from pwavep.harness.ablations import ABLATIONS, operator_error, run_ablations

__all__ = [
    "LabeledDataset",
    "generate_synthetic_dataset",
    "load_dataset",
    "write_dataset",
    "RunManifest",
    "compare_outputs",
    "load_manifest",
    "sha256_file",
    "ExperimentContext",
    "ExperimentOutput",
    "attack_sets",
    "band_study_summary",
    "run_band_study",
    "run_blackbox_eval",
    "run_clean_side_effect",
    "run_defense_eval",
    "run_experiment",
    "ABLATIONS",
    "operator_error",
    "run_ablations",
]
