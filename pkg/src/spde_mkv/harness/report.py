"""Run reports: deterministic CSV bodies plus a separate provenance record."""
from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field

from .. import __version__

BASE_COLUMNS = ("N", "estimate", "stderr", "repetitions")


@dataclass
class RunReport:
    experiment: str
    rows: list[dict]
    diagnostics: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    extra_columns: tuple[str, ...] = ()

    def __post_init__(self):
        self.rows.sort(key=lambda r: r["N"])

    def column(self, name: str) -> list:
        return [row[name] for row in self.rows]

    @property
    def estimates(self) -> list[float]:
        return self.column("estimate")

    def to_csv(self, timings: bool = False) -> str:
        cols = list(BASE_COLUMNS) + (["runtime_ms"] if timings else []) + list(self.extra_columns)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for row in self.rows:
            writer.writerow([_fmt(row[c]) for c in cols])
        return buf.getvalue()

    def provenance_json(self) -> str:
        doc = dict(self.provenance)
        doc["experiment"] = self.experiment
        doc["version"] = __version__
        doc["runtime_ms"] = {str(r["N"]): round(r["runtime_ms"], 3) for r in self.rows}
        doc["written_at"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
        doc["diagnostics"] = self.diagnostics
        return json.dumps(doc, indent=2, default=_jsonable)


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _jsonable(v):
    try:
        return float(v)
    except (TypeError, ValueError):
        return str(v)


def count_inversions(values) -> int:
    """Adjacent increases in a sequence expected to be nonincreasing."""
    return sum(1 for a, b in zip(values, values[1:]) if b > a)
