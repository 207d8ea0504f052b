"""Deterministic CSV/JSON writers with a provenance header."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np
import scipy

from . import __version__


def header_lines(cfg_hash: str, seed: int, command: str):
    return [
        f"quasirobin {__version__} numpy {np.__version__} scipy {scipy.__version__}",
        f"config_sha256 {cfg_hash}",
        f"seed {seed}",
        f"command {command}",
    ]


def _plain(obj):
    """Convert numpy scalars/arrays and enums to JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def write_json(path, payload: dict, meta: dict):
    doc = {"meta": _plain(meta), **_plain(payload)}
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def write_rows(path, rows: list[dict], header: list[str], columns: list[str]):
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in (row[c] for c in columns)])
    Path(path).write_text(buf.getvalue())


def write_profile(path, u, header: list[str]):
    Path(path).write_text(u.to_csv(header))
