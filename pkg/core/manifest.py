"""
Run manifests and staged output directories

Every artifact-producing run writes its files into a temporary staging
directory next to the target. Only when the run finishes are the files
digested, the manifest written, and everything moved into place, so a
failed run leaves no partial outputs behind.
"""
import hashlib
import json
import os
import shutil
import tempfile
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Optional

from loguru import logger

from config.settings import ARTIFACT_VERSION, DIGEST_ALGORITHM
from core.image_io import write_json

MANIFEST_NAME = "manifest.json"


@dataclass
class RunManifest:
    """Provenance of one CLI run."""
    subcommand: str
    arguments: Dict[str, object]
    seeds: Dict[str, int] = field(default_factory=dict)
    artifact_version: str = ARTIFACT_VERSION
    outputs: Dict[str, str] = field(default_factory=dict)   # file name -> hex digest
    digest: str = DIGEST_ALGORITHM

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def combined_digest(self) -> str:
        """One digest over all output digests, in file-name order."""
        h = hashlib.new(self.digest)
        for name in sorted(self.outputs):
            h.update(f"{name}:{self.outputs[name]}\n".encode("utf-8"))
        return h.hexdigest()


def file_digest(path: Path, algorithm: str = DIGEST_ALGORITHM) -> str:
    """Hex digest of a file's bytes."""
    h = hashlib.new(algorithm)
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


class StagedRun:
    """Handle yielded by staged_output: where to write, and the manifest to fill."""

    def __init__(self, staging_dir: Path, manifest: RunManifest):
        self.dir = staging_dir
        self.manifest = manifest
        self.files: List[str] = []

    def path(self, name: str) -> Path:
        """Staging path for an output file; registers it for the manifest."""
        if name == MANIFEST_NAME:
            raise ValueError(f"{MANIFEST_NAME} is written by the run itself")
        if name not in self.files:
            self.files.append(name)
        return self.dir / name


@contextmanager
def staged_output(out_dir: Path, manifest: RunManifest) -> Iterator[StagedRun]:
    """
    Stage outputs and publish them atomically on success.

    Args:
        out_dir: Final output directory (created if missing).
        manifest: Manifest to complete with output digests.

    Yields:
        StagedRun for the caller to write into.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=out_dir))
    run = StagedRun(staging, manifest)
    try:
        yield run
        for name in run.files:
            if not (staging / name).exists():
                raise FileNotFoundError(f"Registered output was never written: {name}")
            manifest.outputs[name] = file_digest(staging / name)
        write_json(manifest.to_dict(), staging / MANIFEST_NAME)

        for name in run.files + [MANIFEST_NAME]:
            os.replace(staging / name, out_dir / name)
        logger.info(f"Wrote {len(run.files)} output(s) + {MANIFEST_NAME} to {out_dir}")
    finally:
        shutil.rmtree(staging, ignore_errors=True)


def verify_manifest(out_dir: Path, manifest: Optional[dict] = None) -> Dict[str, bool]:
    """Recompute digests of a published run; name -> matches."""
    out_dir = Path(out_dir)
    if manifest is None:
        with open(out_dir / MANIFEST_NAME, encoding="utf-8") as f:
            manifest = json.load(f)
    algorithm = manifest.get("digest", DIGEST_ALGORITHM)
    return {
        name: (out_dir / name).exists() and file_digest(out_dir / name, algorithm) == expected
        for name, expected in manifest["outputs"].items()
    }
