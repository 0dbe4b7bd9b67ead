"""Deterministic table serialization for sweep outputs.

A CurveReport is a rectangular table of floats plus a metadata mapping. CSV
files carry the metadata as '# ' comment lines holding one JSON object, then
a header row, then data rows with every value printed as '%.17e' so that a
write/read/write cycle is byte identical. JSON files carry the same content
as one object with sorted keys. Neither format embeds timestamps or any other
run-dependent value; identical inputs produce identical bytes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

_FLOAT_FMT = "%.17e"


@dataclass(frozen=True)
class CurveReport:
    """A named table: column labels, float rows, and run metadata."""

    columns: tuple[str, ...]
    rows: tuple[tuple[float, ...], ...]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(str(c) for c in self.columns))
        rows = tuple(tuple(float(v) for v in r) for r in self.rows)
        object.__setattr__(self, "rows", rows)
        for r in rows:
            if len(r) != len(self.columns):
                raise ValueError(f"row of width {len(r)} in a table with "
                                 f"{len(self.columns)} columns")

    def column(self, name: str) -> list[float]:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


def _format_value(v: float) -> str:
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return _FLOAT_FMT % v


def render_csv(report: CurveReport) -> str:
    lines = []
    meta_json = json.dumps(report.metadata, sort_keys=True)
    lines.append("# " + meta_json)
    lines.append(",".join(report.columns))
    for row in report.rows:
        lines.append(",".join(_format_value(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(report: CurveReport, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(render_csv(report))


def read_csv(path) -> CurveReport:
    metadata = {}
    columns = None
    rows = []
    with open(path, "r") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if body:
                    metadata.update(json.loads(body))
                continue
            if columns is None:
                columns = tuple(line.split(","))
                continue
            rows.append(tuple(float(tok) for tok in line.split(",")))
    if columns is None:
        raise ValueError(f"{path}: no header row found")
    return CurveReport(columns=columns, rows=tuple(rows), metadata=metadata)


def render_json(report: CurveReport) -> str:
    payload = {
        "metadata": report.metadata,
        "columns": list(report.columns),
        "rows": [[_format_value(v) for v in row] for row in report.rows],
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def write_json(report: CurveReport, path) -> None:
    with open(path, "w") as fh:
        fh.write(render_json(report))


def read_json(path) -> CurveReport:
    with open(path, "r") as fh:
        payload = json.load(fh)
    return CurveReport(columns=tuple(payload["columns"]),
                       rows=tuple(tuple(float(v) for v in row)
                                  for row in payload["rows"]),
                       metadata=payload.get("metadata", {}))
