"""Deterministic structured reports.

A report is a list of named sections (key-value maps or tables) plus the
tool version, a content digest per input file, and collected warnings.
Identical inputs and version produce byte-identical output: floats are
serialized with ``repr`` (shortest round-trip, up to 17 significant
digits) in JSON and 6 significant digits in the human-readable text form.
"""

import hashlib
import io
import json
import math
from dataclasses import dataclass, field

from . import __version__


@dataclass
class Section:
    name: str
    kind: str = "keyvalue"  # "keyvalue" | "table"
    data: dict = field(default_factory=dict)       # keyvalue sections
    columns: list = field(default_factory=list)    # table sections
    rows: list = field(default_factory=list)


@dataclass
class Report:
    sections: list[Section] = field(default_factory=list)
    inputs: dict[str, str] = field(default_factory=dict)  # path -> sha256
    warnings: list[str] = field(default_factory=list)
    version: str = __version__

    def add_keyvalue(self, name: str, data: dict) -> Section:
        section = Section(name=name, kind="keyvalue", data=dict(data))
        self.sections.append(section)
        return section

    def add_table(self, name: str, columns: list, rows: list) -> Section:
        section = Section(name=name, kind="table", columns=list(columns),
                          rows=[list(r) for r in rows])
        self.sections.append(section)
        return section

    def add_input(self, path, data: bytes):
        self.inputs[str(path)] = hashlib.sha256(data).hexdigest()


def digest_file(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _json_value(value):
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, complex):
        return {"re": _json_value(value.real), "im": _json_value(value.imag)}
    return value


def to_json(report: Report) -> str:
    payload = {
        "version": report.version,
        "inputs": report.inputs,
        "sections": [
            {
                "name": s.name,
                "kind": s.kind,
                **(
                    {"data": {k: _json_value(v) for k, v in s.data.items()}}
                    if s.kind == "keyvalue"
                    else {
                        "columns": s.columns,
                        "rows": [[_json_value(v) for v in row] for row in s.rows],
                    }
                ),
            }
            for s in report.sections
        ],
        "warnings": report.warnings,
    }
    return json.dumps(payload, indent=2, sort_keys=False) + "\n"


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, complex):
        return f"{value.real:.6g}{value.imag:+.6g}j"
    return str(value)


def to_text(report: Report, quiet: bool = False) -> str:
    out = io.StringIO()
    for section in report.sections:
        out.write(f"[{section.name}]\n")
        if section.kind == "keyvalue":
            width = max((len(k) for k in section.data), default=0)
            for key, value in section.data.items():
                out.write(f"{key.ljust(width)} = {_fmt(value)}\n")
        else:
            rows = [[_fmt(v) for v in row] for row in section.rows]
            widths = [
                max(len(str(col)), *(len(r[i]) for r in rows)) if rows else len(str(col))
                for i, col in enumerate(section.columns)
            ]
            out.write("  ".join(str(c).ljust(w) for c, w in zip(section.columns, widths)).rstrip() + "\n")
            for row in rows:
                out.write("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() + "\n")
        out.write("\n")
    if report.warnings and not quiet:
        out.write("[warnings]\n")
        for w in report.warnings:
            out.write(f"- {w}\n")
    return out.getvalue()
