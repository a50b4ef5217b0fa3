import json
import os

import pandas as pd
import pytest

from pwavep.geometry.io import load_cloud, save_cloud
from pwavep.harness.cli import main
from pwavep.harness.manifest import MANIFEST_NAME

SMALL_SPEC = """\
name = "band-study"
seed = 3
band_clouds = 3
band_count = 4
eval_clouds = 2

[dataset]
classes = ["sphere", "plane"]
points_per_cloud = 64
clouds_per_class = 25

[purification]
k = 8

[training]
epochs = 2
widths = [8, 16]

[attacks.pgd]
kind = "linf-coordinates"
epsilon = 0.05
steps = 2

[attacks.band]
kind = "spectral-band"
epsilon = 0.5
band_index = 4
band_count = 4
"""


@pytest.fixture
def spec_path(tmp_path):
    path = tmp_path / "spec.toml"
    path.write_text(SMALL_SPEC)
    return str(path)


@pytest.fixture
def cloud_path(tmp_path, make_sphere):
    path = str(tmp_path / "cloud.xyz")
    save_cloud(make_sphere(64, label=0), path)
    return path


def _manifest(run_dir: str) -> dict:
    with open(os.path.join(run_dir, MANIFEST_NAME)) as f:
        return json.load(f)


def test_purify_without_an_oracle_is_a_configuration_error(cloud_path):
    assert main(["purify", "--input", cloud_path]) == 2


def test_missing_input_is_a_data_error(tmp_path, small_model):
    model = str(tmp_path / "model.npz")
    small_model.save(model)
    assert main(["--model", model, "purify", "--input", str(tmp_path / "missing.xyz")]) == 3


def test_invalid_config_exit_codes(tmp_path, spec_path, cloud_path):
    broken = tmp_path / "broken.toml"
    broken.write_text("name = \n")
    assert main(["--config", str(broken), "band-study"]) == 2

    unknown_field = tmp_path / "unknown.toml"
    unknown_field.write_text("wavelets = 4\n")
    assert main(["--config", str(unknown_field), "band-study"]) == 2

    assert main(["--config", spec_path, "attack", "--input", cloud_path, "--attack", "nope"]) == 2


def test_gen_data_writes_files_and_manifest(tmp_path, spec_path):
    run_dir = str(tmp_path / "gen")
    assert main(["--config", spec_path, "--out-dir", run_dir, "gen-data"]) == 0

    files = sorted(os.listdir(os.path.join(run_dir, "data")))
    assert len(files) == 50
    assert files[0] == "plane_0000.xyz"

    manifest = _manifest(run_dir)
    assert manifest["command"] == "gen-data"
    assert manifest["results"]["clouds"] == 50
    assert len(manifest["outputs"]) == 50
    assert manifest["seeds"]["seed"] == 3


def test_default_run_directory_lives_under_output_dir(tmp_path, spec_path, capsys):
    assert main(["--config", spec_path, "gen-data"]) == 0
    run_dir = capsys.readouterr().out.strip().splitlines()[-1]
    assert os.path.dirname(run_dir) == str(tmp_path / "runs")
    assert os.path.basename(run_dir).startswith("gen-data-")


def test_train_then_purify_and_attack(tmp_path, spec_path, cloud_path):
    model = str(tmp_path / "model.npz")
    assert main(["--config", spec_path, "--out-dir", str(tmp_path / "train"), "train-toy", "--output", model]) == 0
    assert os.path.exists(model)
    losses = pd.read_csv(tmp_path / "train" / "training_loss.csv")
    assert losses["epoch"].tolist() == [1, 2]

    purified = str(tmp_path / "purified.xyz")
    run_dir = str(tmp_path / "purify")
    args = ["--config", spec_path, "--model", model, "--out-dir", run_dir, "purify"]
    assert main(args + ["--input", cloud_path, "--output", purified]) == 0
    assert load_cloud(purified).n == 63
    results = _manifest(run_dir)["results"]
    assert (results["points_in"], results["points_out"]) == (64, 63)
    assert set(_manifest(run_dir)["timings"]) >= {"operators", "saliency", "total"}

    attacked = str(tmp_path / "attacked.xyz")
    args = ["--config", spec_path, "--model", model, "--out-dir", str(tmp_path / "attack"), "attack"]
    assert main(args + ["--input", cloud_path, "--output", attacked, "--attack", "pgd"]) == 0
    assert load_cloud(attacked).n == 64


def test_spectral_band_attack_needs_no_model(tmp_path, spec_path, cloud_path):
    run_dir = str(tmp_path / "attack")
    assert main(["--config", spec_path, "--out-dir", run_dir, "attack", "--input", cloud_path, "--attack", "band"]) == 0
    assert load_cloud(os.path.join(run_dir, "attacked.xyz")).n == 64


def test_rerun_reproduces_the_band_study(tmp_path, spec_path):
    run_dir = str(tmp_path / "band")
    assert main(["--config", spec_path, "--out-dir", run_dir, "band-study"]) == 0
    assert os.path.exists(os.path.join(run_dir, "band_study.csv"))
    assert os.path.exists(os.path.join(run_dir, "band_study.gp"))
    assert main(["rerun", run_dir]) == 0

    with open(os.path.join(run_dir, "band_study.csv"), "a") as f:
        f.write("tampered\n")
    assert main(["rerun", run_dir]) == 1


def test_rerun_of_a_missing_manifest(tmp_path):
    assert main(["rerun", str(tmp_path / "nowhere")]) == 2
