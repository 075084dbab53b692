"""CSV and JSON writers for campaign output."""

from __future__ import annotations

import csv
import json
import subprocess
import time
from pathlib import Path

import numpy as np

from . import __version__
from .hgeom import ideal_endpoints


def fmt(x) -> str:
    """17 significant digits, enough to round-trip a double."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return f"{float(x):.17g}"


def write_rows(fh, header, rows) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        write_rows(fh, header, rows)
    return path


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def write_json(path, payload) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(jsonable(payload), indent=2, sort_keys=True) + "\n")
    return path


def _git_stamp() -> str | None:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"], capture_output=True, text=True, timeout=5, cwd=Path(__file__).parent
        )
    except (OSError, subprocess.SubprocessError):
        return None
    return out.stdout.strip() or None


def write_manifest(path, config: dict, extra: dict | None = None) -> Path:
    payload = {
        "config": config,
        "version": __version__,
        "git": _git_stamp(),
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    if extra:
        payload.update(extra)
    return write_json(path, payload)


def realization_rows(real):
    for s, u in zip(real.s, real.dirs):
        yield [real.stream_id, s, *u]


def realization_header(d: int) -> list:
    return ["stream_id", "s"] + [f"dir_{k}" for k in range(1, d + 1)]


def disc_rows(real):
    if real.params.d != 2:
        raise ValueError("disc export needs d = 2")
    for s, u in zip(real.s, real.dirs):
        a, b = ideal_endpoints(u, s)
        yield [real.stream_id, a[0], a[1], b[0], b[1], s, u[0], u[1]]


DISC_HEADER = ["stream_id", "x1", "y1", "x2", "y2", "s", "dir_1", "dir_2"]


def export_disc(real, path) -> Path:
    """Chords of a planar realization in Poincare disc coordinates."""
    return write_csv(path, DISC_HEADER, list(disc_rows(real)))
