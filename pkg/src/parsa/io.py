"""Partition files and run manifests.

A partition file has one ``<id> <part>`` line per vertex in id order, next to
a ``.json`` sidecar with ``k``, the part sizes and the producing config.
Neither carries timestamps, so fixed inputs give byte-identical files.
"""

from __future__ import annotations

import json
import platform
import sys
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InvalidArgument, ParseError


def write_partition(path, assign, k: int, config: dict | None = None) -> None:
    assign = np.asarray(assign, dtype=np.int64)
    path = Path(path)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.writelines(f"{i} {p}\n" for i, p in enumerate(assign.tolist()))
    meta = {"k": k, "count": int(assign.size),
            "sizes": np.bincount(assign[assign >= 0], minlength=k).tolist(),
            "config": config or {}}
    Path(str(path) + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def read_partition(path) -> tuple[np.ndarray, dict]:
    """Returns ``(assign, sidecar)``; the sidecar is ``{}`` when missing."""
    path = Path(path)
    ids, parts = [], []
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            tok = line.split()
            if not tok:
                continue
            if len(tok) != 2:
                raise ParseError(f"expected '<id> <part>', got {line.strip()!r}", path, lineno)
            try:
                ids.append(int(tok[0]))
                parts.append(int(tok[1]))
            except ValueError:
                raise ParseError(f"non-integer token in {line.strip()!r}", path, lineno) from None
    if ids != list(range(len(ids))):
        raise ParseError("ids must be 0..n-1 in order", path)
    side = Path(str(path) + ".json")
    meta = json.loads(side.read_text()) if side.exists() else {}
    return np.asarray(parts, dtype=np.int64), meta


@dataclass
class RunManifest:
    input: str = ""
    format: str = "libsvm"
    k: int = 16
    a: int = 16
    b: int = 16
    seed: int = 0
    balance_rule: str = "neighbor-set-size"
    tau: float | None = 0
    workers: int = 1
    server_shards: int = 1
    prefetch: bool = False
    global_init: float = 0.0
    max_sweeps: int = 50
    trials: int = 10
    out: str = "out"
    started: str = ""
    finished: str = ""
    versions: dict = field(default_factory=dict)

    def stamp_start(self) -> None:
        self.started = _now()
        self.versions = {"parsa": __version__, "python": platform.python_version(),
                         "numpy": np.__version__, "platform": sys.platform}

    def stamp_finish(self) -> None:
        self.finished = _now()

    def config(self) -> dict:
        """The fields that determine the output, without timing or versions."""
        skip = {"started", "finished", "versions", "out"}
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name not in skip}

    def to_json(self) -> str:
        d = asdict(self)
        if d["tau"] is not None and d["tau"] == float("inf"):
            d["tau"] = None
        return json.dumps(d, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        d = json.loads(text)
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise InvalidArgument(f"unknown manifest fields: {sorted(extra)}")
        return cls(**d)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "RunManifest":
        try:
            return cls.from_json(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad manifest JSON: {exc.msg}", path, exc.lineno) from None


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")
