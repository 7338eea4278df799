"""Run manifests: what a stage read, what it wrote, and content digests of both."""
from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path


def digest_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def digest_dir(path: str | Path) -> str:
    """Digest over relative names and contents of every file below ``path``."""
    root = Path(path)
    h = hashlib.sha256()
    for f in sorted(p for p in root.rglob("*") if p.is_file()):
        h.update(f.relative_to(root).as_posix().encode())
        h.update(digest_file(f).encode())
    return h.hexdigest()


def digest_obj(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()


@dataclass
class RunManifest:
    stage: str
    config: dict = field(default_factory=dict)
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    checkpoint_hash: str | None = None
    seed: int | None = None
    started: str = field(default_factory=lambda: time.strftime("%Y-%m-%dT%H:%M:%S"))
    finished: str | None = None

    def add_input(self, path: str | Path) -> None:
        self.inputs[str(path)] = digest_file(path)

    def add_output(self, path: str | Path) -> None:
        self.outputs[str(path)] = digest_file(path)

    def write(self, path: str | Path) -> Path:
        self.finished = time.strftime("%Y-%m-%dT%H:%M:%S")
        data = asdict(self)
        data["config_hash"] = digest_obj(self.config)
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(data, indent=2, sort_keys=True, default=str) + "\n")
        return path
