"""Report rows, verdicts and deterministic CSV/JSON emission."""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import math
import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

PASS, FAIL, VACUOUS, INFO = "pass", "fail", "vacuous", "info"
FLOAT_FMT = "{:.12g}"


@dataclass
class Row:
    claim_id: str
    anchor: str
    params: dict
    empirical: float
    theory: float
    se: float = float("nan")
    verdict: str = INFO
    extras: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "claim_id": self.claim_id,
            "anchor": self.anchor,
            "params": _plain(self.params),
            "empirical": _plain(self.empirical),
            "theory": _plain(self.theory),
            "se": _plain(self.se),
            "verdict": self.verdict,
            "extras": _plain(self.extras),
        }


def verdict(ok: bool) -> str:
    return PASS if ok else FAIL


def _plain(x: Any) -> Any:
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


def _fmt(x: Any) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (float, np.floating)):
        return FLOAT_FMT.format(float(x))
    if isinstance(x, (list, tuple)):
        return ";".join(_fmt(v) for v in x)
    return str(x)


@dataclass
class ExperimentReport:
    name: str
    config: dict
    rows: list[Row] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    wall_clock: float = 0.0

    def add(self, *args, **kw) -> Row:
        row = Row(*args, **kw)
        self.rows.append(row)
        return row

    @property
    def n_failed(self) -> int:
        return sum(r.verdict == FAIL for r in self.rows)

    @property
    def passed(self) -> bool:
        return self.n_failed == 0

    def verdict_counts(self) -> dict:
        out: dict = {}
        for r in self.rows:
            out[r.verdict] = out.get(r.verdict, 0) + 1
        return dict(sorted(out.items()))

    def csv_text(self) -> str:
        param_keys: list[str] = []
        extra_keys: list[str] = []
        for r in self.rows:
            param_keys += [k for k in r.params if k not in param_keys]
            extra_keys += [k for k in r.extras if k not in extra_keys]
        header = ["claim_id", *param_keys, "empirical", "theory", "se", *extra_keys, "verdict", "anchor"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in self.rows:
            w.writerow(
                [r.claim_id]
                + [_fmt(r.params.get(k)) for k in param_keys]
                + [_fmt(r.empirical), _fmt(r.theory), _fmt(r.se)]
                + [_fmt(r.extras.get(k)) for k in extra_keys]
                + [r.verdict, r.anchor]
            )
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "config": _plain(self.config),
            "summary": _plain(self.summary),
            "verdicts": self.verdict_counts(),
            "rows": [r.to_json() for r in self.rows],
        }


def metadata(version: str, wall_clock: dict) -> dict:
    return {
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "code_version": version,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "wall_clock_s": {k: round(v, 3) for k, v in wall_clock.items()},
    }


def write_reports(reports: list[ExperimentReport], out_dir: str | Path, version: str, extra: Optional[dict] = None) -> Path:
    """Write one CSV per experiment plus report.json; returns the JSON path.

    CSVs hold no timing or timestamp data, so identical config and seed give
    byte-identical files. Those fields live in the JSON metadata block.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for rep in reports:
        (out / f"{rep.name}.csv").write_text(rep.csv_text())
    doc = {
        "metadata": metadata(version, {r.name: r.wall_clock for r in reports}),
        "experiments": {r.name: r.to_json() for r in reports},
    }
    if extra:
        doc.update(_plain(extra))
    path = out / "report.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n")
    return path
