"""Artifact writers: versioned CSV tables, JSON manifests and config echoes."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1
CHECKPOINT_COLUMNS = (
    "z", "mean_M", "stderr_M", "var_plusP", "S", "S_dB", "stderr", "diverged", "completed", "diverged_fraction",
    "area_mean", "stderr_area", "area_phase", "absorption", "atomic_absorption", "S_excluding_diverged",
)
SWEEP_COLUMNS = ("value", "S_opt", "S_opt_dB", "z_opt", "stderr", "absorption", "atomic_absorption", "area_out", "error")


def jsonable(x):
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    return x


def write_json(path: str | Path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def checkpoint_rows(stats, **extra) -> list[dict]:
    """One row per checkpoint of an EnsembleStats, with constant ``extra`` columns first."""
    cols = {
        "z": stats.z, "mean_M": stats.mean_M, "stderr_M": stats.stderr_M, "var_plusP": stats.var_plusP,
        "S": stats.S, "S_dB": stats.S_dB, "stderr": stats.stderr, "diverged": stats.diverged,
        "completed": stats.completed, "diverged_fraction": stats.diverged_fraction,
        "area_mean": stats.area_mean / math.pi, "stderr_area": stats.stderr_area / math.pi,
        "area_phase": stats.area_phase, "absorption": stats.absorption,
        "atomic_absorption": stats.atomic_absorption, "S_excluding_diverged": stats.S_excluding_diverged,
    }
    return [{**extra, **{k: cols[k][i] for k in CHECKPOINT_COLUMNS}} for i in range(len(stats.z))]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path: str | Path, rows: list[dict], table: str, columns=None) -> Path:
    """CSV preceded by ``# schema_version`` and ``# table`` comment lines.

    Area columns are stored in units of pi.
    """
    path = Path(path)
    columns = list(columns or (rows[0].keys() if rows else ()))
    with path.open("w", newline="") as fh:
        fh.write(f"# schema_version: {SCHEMA_VERSION}\n")
        fh.write(f"# table: {table}\n")
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in columns])
    return path


def read_csv(path: str | Path) -> tuple[dict, list[dict]]:
    """(header metadata, rows as dicts of strings)."""
    meta, lines = {}, []
    with Path(path).open() as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].partition(":")
                meta[key.strip()] = val.strip()
            else:
                lines.append(line)
    return meta, list(csv.DictReader(lines))
