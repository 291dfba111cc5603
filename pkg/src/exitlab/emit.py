"""Plot-ready CSV files plus a versioned JSON run manifest."""

from __future__ import annotations

import hashlib
import json
import math
import os
import subprocess
from pathlib import Path

import numpy as np

__all__ = ["SCHEMA", "fmt", "code_version", "write_curve", "write_histogram", "write_rows", "emit"]

SCHEMA = "v1"


def fmt(value):
    """Float text with 17 significant digits; integers stay integers."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def code_version():
    """``EXITLAB_CODE_VERSION`` if set, else ``git describe``, else the package version."""
    forced = os.environ.get("EXITLAB_CODE_VERSION")
    if forced:
        return forced
    from . import __version__

    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=10,
            check=True,
        )
        described = out.stdout.strip()
        if described:
            return f"{__version__}+{described}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        # JSON has no inf/nan; keep them as 17-digit text
        return value if math.isfinite(value) else fmt(value)
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dumps(obj):
    """Deterministic JSON text (sorted keys, fixed indentation, trailing newline)."""
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_rows(path, header, columns):
    """Write equal-length ``columns`` under ``header`` as CSV text."""
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(fmt(v) for v in row))
    data = ("\n".join(lines) + "\n").encode("utf-8")
    Path(path).write_bytes(data)
    return data


def write_curve(path, x, values, header=("x", "value")):
    return write_rows(path, header, [np.asarray(x), np.asarray(values)])


def write_histogram(path, left, right, counts):
    return write_rows(path, ("bin_left", "bin_right", "count"), [left, right, np.asarray(counts, dtype=np.int64)])


def emit(out_dir, *, curves=None, histograms=None, tables=None, config=None, seed=None, results=None, version=None):
    """Write every curve and histogram under ``out_dir`` plus ``manifest.json``.

    Parameters
    ----------
    curves : dict, optional
        ``name -> (x, value)`` or ``name -> (header, columns)``; written to
        ``name.csv`` with columns ``x,value`` unless a header is given.
    histograms : dict, optional
        ``name -> (bin_left, bin_right, count)``.
    tables : dict, optional
        ``name -> (header, columns)`` for any other CSV output.
    config, results : dict, optional
        Stored verbatim in the manifest.
    seed : int, optional
    version : str, optional
        Overrides :func:`code_version`.

    Returns
    -------
    list of Path
        Files written, manifest last.  Output is byte-identical for
        identical inputs.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    written = []

    def record(name, data):
        files[name] = {"sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)}
        written.append(out / name)

    for name, curve in sorted((curves or {}).items()):
        fname = f"{name}.csv"
        if len(curve) == 2 and isinstance(curve[0], (tuple, list)) and all(isinstance(h, str) for h in curve[0]):
            record(fname, write_rows(out / fname, curve[0], curve[1]))
        else:
            record(fname, write_curve(out / fname, *curve))
    for name, hist in sorted((histograms or {}).items()):
        fname = f"{name}.csv"
        record(fname, write_histogram(out / fname, *hist))
    for name, (header, columns) in sorted((tables or {}).items()):
        fname = f"{name}.csv"
        record(fname, write_rows(out / fname, header, columns))
    manifest = {
        "schema": SCHEMA,
        "code_version": version if version is not None else code_version(),
        "seed": seed,
        "config": config or {},
        "results": results or {},
        "files": files,
    }
    path = out / "manifest.json"
    path.write_text(dumps(manifest), encoding="utf-8")
    written.append(path)
    return written
