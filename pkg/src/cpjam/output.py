"""CSV and manifest emission. Files are written to a temp name and renamed
into place so a failed run never leaves a partial file behind."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

from . import __version__
from .montecarlo import BerRecord, wilson_ci

CSV_HEADER = ("sweep_point", "observer", "bit_errors", "bits_total", "ber", "ci95_lo", "ci95_hi")


class OutputError(OSError):
    pass


def _num(x: float) -> str:
    return f"{x:.7g}"


def _atomic_write(path: Path, data: str) -> None:
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from None
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except OSError as exc:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from None


def format_csv(records: Iterable[BerRecord]) -> str:
    records = sorted(records, key=lambda r: (r.sweep_point, r.observer))
    if not records:
        raise ValueError("no records to emit")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        lo, hi = wilson_ci(r.bit_errors, r.bits_total)
        w.writerow([_num(r.sweep_point), r.observer, r.bit_errors, r.bits_total, _num(r.ber), _num(lo), _num(hi)])
    return buf.getvalue()


def emit_csv(records: Iterable[BerRecord], path) -> Path:
    path = Path(path)
    _atomic_write(path, format_csv(records))
    return path


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for k in ("sweep_point", "ber", "ci95_lo", "ci95_hi"):
            row[k] = float(row[k])
        for k in ("bit_errors", "bits_total"):
            row[k] = int(row[k])
    return rows


def write_manifest(path, preset: str, settings: dict, outputs: list[str], timestamp: str | None = None) -> Path:
    """``settings`` must be the fully-resolved config; it is what a rerun consumes."""
    doc = {
        "tool": "cpjam",
        "version": __version__,
        "preset": preset,
        "master_seed": settings["master_seed"],
        "config": {k: list(v) if isinstance(v, tuple) else v for k, v in settings.items()},
        "outputs": sorted(outputs),
        "timestamp": timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    path = Path(path)
    _atomic_write(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def load_manifest(path) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    cfg = doc["config"]
    for k, v in cfg.items():
        if isinstance(v, list):
            cfg[k] = tuple(v)
    return doc
