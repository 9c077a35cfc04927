"""Result persistence: CSV tables, run manifests, experiment directories.

One experiment occupies one directory holding the manifest, a config
snapshot, the result tables, and any checkpoints or figures. Nothing is
overwritten unless the caller passed force=True. Floats are written with
repr (shortest round-trip form), so identical runs produce byte-identical
tables.
"""

from __future__ import annotations

import json
import os
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ParameterError

OUT_ROOT_ENV = "INFOHOP_OUT_ROOT"


def resolve_out_dir(out: str | os.PathLike) -> Path:
    """Interpret relative paths under the optional output-root env var."""
    path = Path(out)
    root = os.environ.get(OUT_ROOT_ENV)
    if root and not path.is_absolute():
        path = Path(root) / path
    return path


def prepare_run_dir(out, force: bool = False) -> Path:
    path = resolve_out_dir(out)
    if path.exists() and any(path.iterdir()) and not force:
        raise ParameterError(f"{path} already has contents; pass --force to reuse it")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, fieldnames, rows) -> Path:
    """Comma-separated UTF-8 with a header row and no trailing whitespace."""
    path = Path(path)
    lines = [",".join(fieldnames)]
    for row in rows:
        lines.append(",".join(_format_cell(row[name]) for name in fieldnames))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_csv(path) -> list[dict]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header = lines[0].split(",")
    rows = []
    for line in lines[1:]:
        if line:
            rows.append(dict(zip(header, line.split(","))))
    return rows


class RunManifest:
    """Records what ran, with what inputs, and what it produced.

    Written atomically at the end of the run; on an interruption the
    partial results stay on disk and the manifest carries a failure marker.
    """

    def __init__(self, command: str, config: dict, seeds, out_dir: Path):
        self.data = {
            "command": command,
            "config": config,
            "seeds": [int(s) for s in seeds],
            "version": __version__,
            "started_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "finished_at": None,
            "duration_s": None,
            "artifacts": [],
            "status": "running",
            "error": None,
        }
        self._t0 = time.monotonic()
        self.out_dir = Path(out_dir)

    def add_artifact(self, path) -> None:
        self.data["artifacts"].append(str(path))

    def finish(self, status: str = "ok", error: str | None = None) -> Path:
        self.data["finished_at"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
        self.data["duration_s"] = round(time.monotonic() - self._t0, 3)
        self.data["status"] = status
        self.data["error"] = error
        target = self.out_dir / "manifest.json"
        tmp = target.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n",
                       encoding="utf-8")
        os.replace(tmp, target)
        return target
