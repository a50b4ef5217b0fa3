"""
pwavep command line.

    pwavep [global flags] <command> [command flags]

Global flags come before the command. Every command except serve-oracle
writes its outputs and a manifest.json into one run directory (--out-dir,
default <settings.output_dir>/<command>-<UTC timestamp>).

Exit codes: 0 success, 1 internal or numerical error, 2 configuration
error, 3 data error, 4 oracle error.
"""

import argparse
import os
import shutil
import sys
import tempfile
import time
from datetime import datetime, timezone
from typing import List, Optional, Tuple

import pandas as pd
from loguru import logger

from pwavep.attacks.spectral import run_attack
from pwavep.core.config import ExperimentSpec, dump_models, load_experiment_spec, replace
from pwavep.core.errors import ConfigurationError, PWavePError
from pwavep.core.log import setup_logging
from pwavep.core.settings import get_settings
from pwavep.geometry.io import load_cloud, save_cloud
from pwavep.harness.ablations import ABLATIONS
from pwavep.harness.data import load_dataset, write_dataset
from pwavep.harness.experiments import CSV_FLOAT_FORMAT, ExperimentContext, run_experiment
from pwavep.harness.manifest import RunManifest, compare_outputs, load_manifest
from pwavep.oracle.base import Oracle
from pwavep.oracle.external import serve
from pwavep.oracle.toy_model import ToyClassifier
from pwavep.oracle.training import train_toy_classifier
from pwavep.purify.pipeline import pwavep, write_result_bundle

EXPERIMENT_COMMANDS = {
    "band-study": "band-study",
    "defense-eval": "defense-eval",
    "clean-check": "clean-side-effect",
    "blackbox-eval": "blackbox-eval",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pwavep",
        description="Graph-wavelet purification of adversarial point clouds.",
    )
    parser.add_argument("--config", help="TOML experiment spec")
    parser.add_argument("--seed", type=int, help="Override the experiment seed")
    parser.add_argument("--out-dir", help="Run directory (default: <output_dir>/<command>-<UTC>)")
    parser.add_argument("--threads", type=int, help="Worker threads (default: settings.threads)")
    mode = parser.add_mutually_exclusive_group()
    mode.add_argument("--exact", dest="mode", action="store_const", const="exact",
                      help="Dense eigendecomposition operators")
    mode.add_argument("--chebyshev", dest="mode", action="store_const", const="chebyshev",
                      help="Chebyshev polynomial operators")
    parser.add_argument("--oracle", default="toy", help="'toy' or 'external:<command>'")
    parser.add_argument("--model", help="Toy classifier .npz written by train-toy")
    parser.add_argument("--debug", action="store_true", help="DEBUG logging")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("purify", help="Purify one point cloud")
    p.add_argument("--input", required=True)
    p.add_argument("--output", help="Purified cloud path (default: <run dir>/purified.xyz)")

    p = sub.add_parser("attack", help="Attack one point cloud")
    p.add_argument("--input", required=True)
    p.add_argument("--output", help="Attacked cloud path (default: <run dir>/attacked.xyz)")
    p.add_argument("--attack", default="pgd", help="Name of an attack in the spec")
    p.add_argument("--target", type=int, help="Label to attack (default: the file's label)")

    p = sub.add_parser("train-toy", help="Train the toy classifier")
    p.add_argument("--output", help="Model path (default: <run dir>/model.npz)")

    for name in EXPERIMENT_COMMANDS:
        sub.add_parser(name, help=f"Run the {EXPERIMENT_COMMANDS[name]} experiment")

    p = sub.add_parser("ablate", help="Run one ablation")
    p.add_argument("name", choices=sorted(ABLATIONS))

    p = sub.add_parser("gen-data", help="Write the dataset as labeled xyz files")
    p.add_argument("--output", help="Directory (default: <run dir>/data)")

    p = sub.add_parser("rerun", help="Re-execute a run and compare its csv outputs")
    p.add_argument("manifest", help="manifest.json or its run directory")

    sub.add_parser("serve-oracle", help="Answer oracle requests on stdin/stdout")
    return parser


def resolve_spec(args: argparse.Namespace) -> ExperimentSpec:
    spec = load_experiment_spec(args.config) if args.config else ExperimentSpec()
    if args.seed is not None:
        spec = replace(spec, seed=args.seed, training=replace(spec.training, seed=args.seed))
    if args.mode:
        spec = replace(spec, purification=replace(spec.purification, mode=args.mode))
    return spec


def build_oracle(args: argparse.Namespace, spec: ExperimentSpec) -> Tuple[Optional[ToyClassifier], Optional[Oracle]]:
    model = ToyClassifier.load(args.model) if args.model else None
    if args.oracle.startswith("external:"):
        command = args.oracle.split(":", 1)[1].strip()
        if not command:
            raise ConfigurationError("--oracle external:<command> needs a command after the colon.")
        return model, Oracle(None, replace(spec.oracle, mode="external", command=command))
    if args.oracle != "toy":
        raise ConfigurationError(f"--oracle must be 'toy' or 'external:<command>', got {args.oracle!r}.")
    if model is None:
        return None, None
    return model, Oracle(model, spec.oracle)


def run_dir_for(args: argparse.Namespace) -> str:
    if args.out_dir:
        path = args.out_dir
    else:
        stamp = datetime.now(timezone.utc).strftime("%Y%m%d-%H%M%S")
        path = os.path.join(get_settings().get_output_dir(), f"{args.command}-{stamp}")
    os.makedirs(path, exist_ok=True)
    return path


def _require(oracle: Optional[Oracle], what: str) -> Oracle:
    if oracle is None:
        raise ConfigurationError(
            f"{what} needs a gradient oracle. Pass --model <npz> from `pwavep train-toy` "
            "or --oracle external:<command>."
        )
    return oracle


def cmd_purify(args, spec, model, oracle, run_dir, manifest) -> List[str]:
    cloud = load_cloud(args.input)
    result = pwavep(cloud, _require(oracle, "purify"), spec.purification)
    paths = list(write_result_bundle(result, run_dir).values())
    if args.output:
        save_cloud(result.purified, args.output)
        paths.append(args.output)
    manifest.timings.update(result.timings)
    manifest.results.update(
        points_in=cloud.n,
        points_out=result.purified.n,
        high_risk=int(result.partition.high_risk.size),
        mid_risk=int(result.partition.mid_risk.size),
        predicted_class=result.oracle_output.predicted_class,
    )
    return paths


def cmd_attack(args, spec, model, oracle, run_dir, manifest) -> List[str]:
    if args.attack not in spec.attacks:
        raise ConfigurationError(
            f"Unknown attack {args.attack!r}; the spec defines {', '.join(sorted(spec.attacks))}."
        )
    budget = replace(spec.attacks[args.attack], seed=spec.seed)
    if budget.kind != "spectral-band":
        oracle = _require(oracle, f"The {budget.kind} attack")
    cloud = load_cloud(args.input)
    attacked = run_attack(cloud, oracle, budget, k=spec.purification.k, target=args.target)
    path = args.output or os.path.join(run_dir, "attacked.xyz")
    save_cloud(attacked, path)
    manifest.config.update(dump_models(attack=budget))
    if oracle is not None:
        manifest.results.update(predicted_clean=oracle.predict(cloud), predicted_attacked=oracle.predict(attacked))
    return [path]


def cmd_train_toy(args, spec, model, oracle, run_dir, manifest) -> List[str]:
    dataset = load_dataset(spec.dataset)
    train, heldout = dataset.split(spec.dataset.heldout_fraction, spec.dataset.seed)
    trained, report = train_toy_classifier(train, heldout, spec.training, class_names=dataset.class_names)
    path = args.output or os.path.join(run_dir, "model.npz")
    trained.save(path)
    losses = os.path.join(run_dir, "training_loss.csv")
    pd.DataFrame({"epoch": range(1, len(report.losses) + 1), "loss": report.losses}).to_csv(
        losses, index=False, float_format=CSV_FLOAT_FORMAT
    )
    manifest.results.update(
        train_accuracy=report.train_accuracy,
        heldout_accuracy=report.heldout_accuracy,
        gradient_check_error=report.gradient_check_error,
        final_loss=report.final_loss,
    )
    return [path, losses]


def cmd_gen_data(args, spec, model, oracle, run_dir, manifest) -> List[str]:
    out = args.output or os.path.join(run_dir, "data")
    paths = write_dataset(load_dataset(spec.dataset), out)
    manifest.results.update(clouds=len(paths))
    return paths


def _experiment(name: str):
    def run(args, spec, model, oracle, run_dir, manifest) -> List[str]:
        ctx = ExperimentContext(
            spec=spec, model=model, oracle=oracle, out_dir=run_dir, threads=args.threads, progress=True
        )
        output = run_experiment(ctx, name)
        manifest.results.update(output.results)
        return ctx.write(output)

    return run


def _strip_out_dir(argv: List[str]) -> List[str]:
    out, skip = [], False
    for token in argv:
        if skip:
            skip = False
        elif token == "--out-dir":
            skip = True
        elif not token.startswith("--out-dir="):
            out.append(token)
    return out


def cmd_rerun(args) -> int:
    reference = load_manifest(args.manifest)
    scratch = tempfile.mkdtemp(prefix="pwavep-rerun-")
    try:
        code = main(["--out-dir", scratch] + _strip_out_dir(reference.argv))
        if code != 0:
            logger.error(f"Replayed run exited with code {code}")
            return code
        mismatched = compare_outputs(reference, scratch)
        if mismatched:
            logger.error(f"Replayed outputs differ from the manifest: {', '.join(mismatched)}")
            return 1
        logger.info(f"Replayed {reference.command}: all csv outputs match byte for byte")
        return 0
    finally:
        shutil.rmtree(scratch, ignore_errors=True)


def cmd_serve_oracle(args, spec) -> int:
    if not args.model:
        raise ConfigurationError("serve-oracle needs --model <npz> from `pwavep train-toy`.")
    config = spec.oracle
    if config.mode != "analytic":
        config = replace(config, mode="analytic", command=None)
    answered = serve(ToyClassifier.load(args.model), config)
    logger.info(f"oracle server answered {answered} requests")
    return 0


COMMANDS = {
    "purify": cmd_purify,
    "attack": cmd_attack,
    "train-toy": cmd_train_toy,
    "gen-data": cmd_gen_data,
    **{name: _experiment(experiment) for name, experiment in EXPERIMENT_COMMANDS.items()},
}


def execute(args: argparse.Namespace, argv: List[str]) -> int:
    if args.command == "rerun":
        return cmd_rerun(args)
    spec = resolve_spec(args)
    if args.command == "serve-oracle":
        return cmd_serve_oracle(args, spec)

    model, oracle = build_oracle(args, spec)
    run_dir = run_dir_for(args)
    manifest = RunManifest(
        command=args.command,
        argv=argv,
        config=dump_models(spec=spec),
        seeds={
            "seed": spec.seed,
            "dataset": spec.dataset.seed,
            "training": spec.training.seed,
            "oracle": spec.oracle.seed,
        },
    )
    handler = COMMANDS.get(args.command) or _experiment(f"{args.name}-ablation")
    start = time.perf_counter()
    try:
        paths = handler(args, spec, model, oracle, run_dir, manifest)
    finally:
        if oracle is not None:
            oracle.close()
    manifest.timings["total"] = time.perf_counter() - start
    manifest.record_outputs(run_dir, paths)
    manifest.write(run_dir)
    logger.info(f"{args.command}: {len(paths)} output(s) in {run_dir}")
    print(run_dir)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    setup_logging(debug=True if args.debug else None)
    try:
        return execute(args, argv)
    except PWavePError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
