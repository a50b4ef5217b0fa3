"""
Run manifests.

Every CLI run writes manifest.json next to its outputs: the argv that
produced it, the resolved configuration, seeds, stage timings, the package
version and the sha256 of every output file. `pwavep rerun` replays the
argv and compares the hashes.
"""

import hashlib
import os
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError, version
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, ValidationError

from pwavep.core.errors import ConfigurationError

MANIFEST_NAME = "manifest.json"


def package_version() -> str:
    try:
        return version("pwavep")
    except PackageNotFoundError:
        return "0+unknown"


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


class RunManifest(BaseModel):
    command: str
    argv: List[str]
    config: Dict[str, Any] = Field(default_factory=dict)
    seeds: Dict[str, int] = Field(default_factory=dict)
    timings: Dict[str, float] = Field(default_factory=dict)
    results: Dict[str, Any] = Field(default_factory=dict)
    outputs: Dict[str, str] = Field(default_factory=dict)
    version: str = Field(default_factory=package_version)
    created_at: str = Field(default_factory=lambda: datetime.now(timezone.utc).isoformat())

    def record_outputs(self, run_dir: str, paths: List[str]) -> None:
        """Hash output files, keyed by path relative to run_dir."""
        for path in sorted(paths):
            self.outputs[os.path.relpath(path, run_dir)] = sha256_file(path)

    def write(self, run_dir: str) -> str:
        path = os.path.join(run_dir, MANIFEST_NAME)
        with open(path, "w") as f:
            f.write(self.model_dump_json(indent=2))
        return path


def load_manifest(path: str) -> RunManifest:
    if os.path.isdir(path):
        path = os.path.join(path, MANIFEST_NAME)
    try:
        with open(path, "r") as f:
            return RunManifest.model_validate_json(f.read())
    except FileNotFoundError:
        raise ConfigurationError(f"Manifest not found: {path}")
    except ValidationError as e:
        raise ConfigurationError(f"{path} is not a valid run manifest: {e}") from e


def compare_outputs(
    manifest: RunManifest, run_dir: str, suffixes: Optional[tuple] = (".csv",)
) -> List[str]:
    """
    Files whose hash under run_dir differs from the manifest.

    Args:
        manifest: Reference manifest
        run_dir: Directory of the replayed run
        suffixes: Only compare these file types; None compares everything
    """
    mismatched = []
    for rel, digest in manifest.outputs.items():
        if suffixes and not rel.endswith(suffixes):
            continue
        path = os.path.join(run_dir, rel)
        if not os.path.exists(path) or sha256_file(path) != digest:
            mismatched.append(rel)
    return mismatched
