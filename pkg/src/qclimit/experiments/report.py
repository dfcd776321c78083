"""Experiment reports and their CSV / JSON serialization.

Floats are written with 17 significant digits and columns keep their
declared order, so identical inputs produce byte-identical files.  Timings and
version strings go to ``meta.json`` only.
"""
from __future__ import annotations

import csv
import io
import json
import math
import platform
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["Report", "emit_report", "write_meta", "fit_rate"]


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if v is None:
        return ""
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else repr(f)
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    return v


@dataclass
class Report:
    """Tabular report with a summary dictionary.

    ``rows`` are dictionaries keyed by ``columns``; missing entries are
    written as empty CSV cells.
    """

    name: str
    columns: list
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def add(self, **row):
        unknown = set(row) - set(self.columns)
        if unknown:
            raise KeyError(f"unknown report columns {sorted(unknown)}")
        self.rows.append(row)

    def column(self, name):
        return [r.get(name) for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(r.get(c)) for c in self.columns])
        return buf.getvalue()

    def to_dict(self):
        return _jsonable({"name": self.name, "columns": list(self.columns),
                          "rows": [{c: r.get(c) for c in self.columns} for r in self.rows],
                          "summary": self.summary})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    @classmethod
    def from_dict(cls, d):
        return cls(d["name"], list(d["columns"]), [dict(r) for r in d["rows"]], dict(d["summary"]))


def emit_report(report: Report, out_dir, formats=("csv", "json")):
    """Write ``report.csv`` and/or ``report.json`` into ``out_dir``.

    Raises ``OSError`` when the directory cannot be created or written.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for fmt in formats:
        if fmt == "csv":
            p = out / "report.csv"
            p.write_text(report.to_csv())
        elif fmt == "json":
            p = out / "report.json"
            p.write_text(report.to_json() + "\n")
        else:
            raise ValueError(f"unknown report format {fmt!r}")
        written.append(p)
    return written


def write_meta(out_dir, config_hash, timings, extra=None):
    import scipy

    from .. import __version__
    meta = {"config_sha256": config_hash, "timings_s": timings,
            "versions": {"qclimit": __version__, "numpy": np.__version__,
                         "scipy": scipy.__version__, "python": platform.python_version()}}
    meta.update(extra or {})
    p = Path(out_dir) / "meta.json"
    p.write_text(json.dumps(_jsonable(meta), indent=2) + "\n")
    return p


def fit_rate(x, y):
    """Least-squares slope of ``log y`` against ``log x`` and its R^2."""
    x = np.log(np.asarray(x, dtype=float))
    y = np.log(np.asarray(y, dtype=float))
    if len(x) < 2:
        return float("nan"), float("nan")
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), r2
