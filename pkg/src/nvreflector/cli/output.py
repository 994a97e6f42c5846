"""Deterministic serialisation and atomic file publication."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from nvreflector import __version__

DIGITS = 9


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), f".{DIGITS}g")


def csv_text(header, rows) -> bytes:
    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    return ("\n".join(lines) + "\n").encode()


def _rounded(obj):
    if isinstance(obj, dict):
        return {str(k): _rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_rounded(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not np.isfinite(v):
            return str(v)
        return float(format(v, f".{DIGITS}g"))
    return obj


def json_text(obj) -> bytes:
    return (json.dumps(_rounded(obj), indent=2, sort_keys=True) + "\n").encode()


def config_hash(fields: dict) -> str:
    canonical = json.dumps(fields, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _atomic_write(path: Path, data: bytes):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def publish(out_dir, files: dict, manifest: dict, moved: dict | None = None) -> list[str]:
    """Write ``files`` (name -> bytes), move ``moved`` (name -> temp path), then the manifest.

    Each file appears under its final name only once complete; the manifest
    is written last so its presence marks a finished run.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = sorted(files) + sorted(moved or {})
    for name in sorted(files):
        _atomic_write(out / name, files[name])
    for name, src in sorted((moved or {}).items()):
        os.replace(src, out / name)
    manifest = dict(manifest, outputs=names + ["manifest.json"], tool_version=__version__)
    _atomic_write(out / "manifest.json", json_text(manifest))
    return names
