"""File ingestion and serialization: trace CSV, Touchstone v1, device
parameter files, device tables, and budget files.

Numeric parsing is locale-independent (dot decimal separator); machine-
facing serialization uses 17 significant digits so written traces re-parse
bit-exactly.
"""

import configparser
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .budget import BoundKind, Interval, LossSource, ParticipationBudget
from .dispersive import CoherenceSet, DispersiveSet
from .errors import (
    ParseError,
    UnsupportedFormatError,
    ValidationError,
)
from .resonance import FitResult, ResonanceTrace, TraceMeta

TRACE_HEADER = "freq_hz,s21_re,s21_im"

_TOUCHSTONE_UNITS = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}


def _parse_float(token: str, line: int, column: int, path=None) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(
            f"malformed number {token!r}", line=line, column=column, path=path
        ) from None


def parse_trace_csv(text: str | bytes, path=None) -> tuple[ResonanceTrace, list[str]]:
    """Parse the toolkit's trace CSV (header ``freq_hz,s21_re,s21_im``).

    Descending-frequency files are reordered ascending with a warning;
    any other non-monotone ordering or duplicate frequency is rejected
    with the offending row numbers.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty trace file", path=path)
    header = lines[0].strip().replace(" ", "")
    if header != TRACE_HEADER:
        raise ParseError(
            f"expected header {TRACE_HEADER!r}, got {lines[0].strip()!r}",
            line=1,
            path=path,
        )
    freqs, re_part, im_part = [], [], []
    for idx, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != 3:
            raise ParseError(f"expected 3 columns, got {len(cells)}", line=idx, path=path)
        freqs.append(_parse_float(cells[0], idx, 1, path))
        re_part.append(_parse_float(cells[1], idx, 2, path))
        im_part.append(_parse_float(cells[2], idx, 3, path))
    if len(freqs) < 8:
        raise ValidationError(f"trace needs >= 8 data rows, got {len(freqs)}")

    warnings: list[str] = []
    f = np.asarray(freqs)
    diffs = np.diff(f)
    if np.any(diffs == 0):
        rows = [int(i) + 2 for i in np.flatnonzero(diffs == 0)]
        raise ValidationError(f"duplicate frequencies at rows {rows}")
    if np.all(diffs < 0):
        warnings.append("frequencies were descending; trace reordered ascending")
        f = f[::-1]
        re_part = re_part[::-1]
        im_part = im_part[::-1]
    elif np.any(diffs < 0):
        rows = [int(i) + 2 for i in np.flatnonzero(diffs < 0)]
        raise ValidationError(f"non-monotone frequencies at rows {rows}")
    s21 = np.asarray(re_part) + 1j * np.asarray(im_part)
    return ResonanceTrace(f, s21, TraceMeta(label=str(path) if path else "")), warnings


def write_trace_csv(trace: ResonanceTrace) -> str:
    """Serialize a trace so that re-parsing reproduces it bit-exactly."""
    out = io.StringIO()
    out.write(TRACE_HEADER + "\n")
    for f, z in zip(trace.freqs, trace.s21):
        out.write(f"{float(f)!r},{float(z.real)!r},{float(z.imag)!r}\n")
    return out.getvalue()


def parse_touchstone(text: str | bytes, path=None) -> tuple[ResonanceTrace, list[str]]:
    """Extract S21 from a Touchstone v1 two-port (.s2p) file.

    Honors the option line's frequency unit (HZ/KHZ/MHZ/GHZ) and format
    (RI/MA/DB); values are converted to complex rectangular form and
    frequencies normalized to Hz.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    unit = 1e9
    fmt = "MA"
    option_seen = False
    tokens: list[tuple[str, int]] = []
    for idx, line in enumerate(text.splitlines(), start=1):
        bang = line.find("!")
        if bang >= 0:
            line = line[:bang]
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            if option_seen:
                continue  # later option lines are ignored per v1
            option_seen = True
            parts = line[1:].upper().split()
            state = None
            for tok in parts:
                if tok in _TOUCHSTONE_UNITS:
                    unit = _TOUCHSTONE_UNITS[tok]
                elif tok in ("RI", "MA", "DB"):
                    fmt = tok
                elif tok == "R":
                    state = "r"
                elif tok == "S":
                    pass
                elif tok in ("Y", "Z", "G", "H"):
                    raise UnsupportedFormatError(
                        f"only S-parameters are supported, got {tok}", line=idx, path=path
                    )
                elif state == "r":
                    _parse_float(tok, idx, 0, path)  # reference impedance, unused
                    state = None
                else:
                    raise UnsupportedFormatError(
                        f"unsupported option token {tok!r}", line=idx, path=path
                    )
            continue
        for tok in line.split():
            tokens.append((tok, idx))

    if len(tokens) == 0:
        raise ParseError("no data found", path=path)
    if len(tokens) % 9 != 0:
        raise ParseError(
            f"two-port data must come in rows of 9 values, got {len(tokens)} values",
            line=tokens[-1][1],
            path=path,
        )

    freqs, s21 = [], []
    for start in range(0, len(tokens), 9):
        row = tokens[start:start + 9]
        values = [_parse_float(tok, ln, col, path) for col, (tok, ln) in enumerate(row)]
        freqs.append(values[0] * unit)
        a, b = values[3], values[4]  # S21 pair in v1 ordering S11 S21 S12 S22
        if fmt == "RI":
            z = complex(a, b)
        elif fmt == "MA":
            z = a * complex(math.cos(math.radians(b)), math.sin(math.radians(b)))
        else:  # DB
            mag = 10.0 ** (a / 20.0)
            z = mag * complex(math.cos(math.radians(b)), math.sin(math.radians(b)))
        s21.append(z)

    f = np.asarray(freqs)
    warnings: list[str] = []
    if f.size > 1 and np.all(np.diff(f) < 0):
        warnings.append("frequencies were descending; trace reordered ascending")
        f = f[::-1]
        s21 = s21[::-1]
    return ResonanceTrace(f, np.asarray(s21), TraceMeta(label=str(path) if path else "")), warnings


@dataclass
class DeviceRecord:
    """Parameters of one device (a row of a multi-device table)."""

    id: str
    dispersive: DispersiveSet
    qubit_coherence: CoherenceSet = field(default_factory=CoherenceSet)
    storage_coherence: CoherenceSet = field(default_factory=CoherenceSet)
    fit_results: list[FitResult] = field(default_factory=list)
    notes: str = ""

    def attach_fit(self, result: FitResult, tolerance: float = 1e6) -> list[str]:
        """Attach a fit; warn when its f0 matches no recorded mode within 1 MHz."""
        warnings = []
        modes = [
            m for m in (
                self.dispersive.omega_q, self.dispersive.omega_r, self.dispersive.omega_s,
            ) if m is not None
        ]
        if modes and min(abs(result.params.f0 - m) for m in modes) > tolerance:
            warnings.append(
                f"fit f0 {result.params.f0 / 1e6:.3f} MHz is more than "
                f"{tolerance / 1e6:g} MHz from every recorded mode of device {self.id}"
            )
        self.fit_results.append(result)
        return warnings


# Device-table columns (multi-device table layout): lower_snake names with unit
# suffixes; values in MHz and microseconds convert to Hz and seconds here.
_DEVICE_FREQ_COLUMNS = {
    "omega_q_mhz": "omega_q",
    "omega_s_mhz": "omega_s",
    "omega_r_mhz": "omega_r",
    "chi_qr_mhz": "chi_qr",
    "chi_qs_mhz": "chi_qs",
    "chi_qq_mhz": "chi_qq",
    "chi_rr_mhz": "chi_rr",
    "kappa_r_mhz": "kappa_r",
    "kappa_q_mhz": "kappa_q",
}
_DEVICE_TIME_COLUMNS = {
    "t1_us": ("qubit", "t1"),
    "t2_star_us": ("qubit", "t2_star"),
    "t2_us": ("qubit", "t2_echo"),
    "t1_s_us": ("storage", "t1"),
}
_DEVICE_OTHER_COLUMNS = ("device", "p_e", "notes")


def parse_device_table(text: str | bytes, path=None) -> tuple[list[DeviceRecord], list[str]]:
    """Parse a device-per-row CSV; blank cells mean "not measured"."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    lines = [ln for ln in text.splitlines()]
    if not lines or not lines[0].strip():
        raise ParseError("empty device table", path=path)
    columns = [c.strip() for c in lines[0].split(",")]
    warnings: list[str] = []
    known = set(_DEVICE_FREQ_COLUMNS) | set(_DEVICE_TIME_COLUMNS) | set(_DEVICE_OTHER_COLUMNS)
    for col in columns:
        if col not in known:
            warnings.append(f"ignoring unknown column {col!r}")
    if "device" not in columns:
        raise ParseError("device table needs a 'device' column", line=1, path=path)

    records: list[DeviceRecord] = []
    seen_ids = set()
    for idx, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != len(columns):
            raise ParseError(
                f"expected {len(columns)} cells, got {len(cells)}", line=idx, path=path
            )
        disp_kwargs: dict[str, float] = {}
        coher = {"qubit": {}, "storage": {}}
        dev_id = ""
        p_e = None
        notes = ""
        for col_no, (col, cell) in enumerate(zip(columns, cells), start=1):
            if col not in known:
                continue
            if col == "device":
                dev_id = cell
                continue
            if col == "notes":
                notes = cell
                continue
            if cell == "":
                continue
            value = _parse_float(cell, idx, col_no, path)
            if col == "p_e":
                p_e = value
            elif col in _DEVICE_FREQ_COLUMNS:
                disp_kwargs[_DEVICE_FREQ_COLUMNS[col]] = value * 1e6
            else:
                mode, attr = _DEVICE_TIME_COLUMNS[col]
                coher[mode][attr] = value * 1e-6
        if not dev_id:
            raise ParseError("missing device id", line=idx, path=path)
        if dev_id in seen_ids:
            raise ValidationError(f"duplicate device id {dev_id!r} (row {idx})")
        seen_ids.add(dev_id)
        records.append(
            DeviceRecord(
                id=dev_id,
                dispersive=DispersiveSet(p_e=p_e, **disp_kwargs),
                qubit_coherence=CoherenceSet(**coher["qubit"]),
                storage_coherence=CoherenceSet(**coher["storage"]),
                notes=notes,
            )
        )
    if not records:
        raise ValidationError("device table holds no rows")
    return records, warnings


_PARAM_KEYS_MEASURED = dict(_DEVICE_FREQ_COLUMNS)
_PARAM_KEYS_TIME = dict(_DEVICE_TIME_COLUMNS)


def parse_device_params(text: str | bytes, path=None):
    """Parse a flat ``key = value`` device-parameter file.

    Measured keys follow the table-column names (``omega_q_mhz`` ...);
    simulated counterparts carry a ``_sim`` tag before the unit suffix
    (``omega_q_sim_mhz``).  Returns (record, simulated_set, warnings).
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    measured: dict[str, float] = {}
    simulated: dict[str, float] = {}
    coher = {"qubit": {}, "storage": {}}
    p_e = None
    label = ""
    warnings: list[str] = []
    for idx, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", line=idx, path=path)
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if key == "label":
            label = value
            continue
        if key == "p_e":
            p_e = _parse_float(value, idx, 2, path)
            continue
        if key in _PARAM_KEYS_MEASURED:
            measured[_PARAM_KEYS_MEASURED[key]] = _parse_float(value, idx, 2, path) * 1e6
            continue
        if key in _PARAM_KEYS_TIME:
            mode, attr = _PARAM_KEYS_TIME[key]
            coher[mode][attr] = _parse_float(value, idx, 2, path) * 1e-6
            continue
        if key.endswith("_sim_mhz"):
            base = key.replace("_sim_mhz", "_mhz")
            if base in _PARAM_KEYS_MEASURED:
                simulated[_PARAM_KEYS_MEASURED[base]] = _parse_float(value, idx, 2, path) * 1e6
                continue
        warnings.append(f"ignoring unknown key {key!r} (line {idx})")
    record = DeviceRecord(
        id=label or "device",
        dispersive=DispersiveSet(p_e=p_e, **measured),
        qubit_coherence=CoherenceSet(**coher["qubit"]),
        storage_coherence=CoherenceSet(**coher["storage"]),
    )
    sim_set = DispersiveSet(**simulated) if simulated else None
    return record, sim_set, warnings


def _parse_interval(token: str, line: int, column: int, path=None) -> Interval:
    if ":" in token:
        lo, _, hi = token.partition(":")
        return Interval(
            _parse_float(lo.strip(), line, column, path),
            _parse_float(hi.strip(), line, column, path),
        )
    v = _parse_float(token, line, column, path)
    return Interval(v, v)


def parse_budget_file(text: str | bytes, path=None) -> ParticipationBudget:
    """Parse a loss-budget CSV: ``name,p_min,p_max,q_material,bound_kind``.

    ``q_material`` accepts either a single value or a ``lo:hi`` range.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty budget file", path=path)
    header = [c.strip() for c in lines[0].split(",")]
    expected = ["name", "p_min", "p_max", "q_material", "bound_kind"]
    if header != expected:
        raise ParseError(
            f"expected header {','.join(expected)!r}, got {lines[0].strip()!r}",
            line=1,
            path=path,
        )
    sources = []
    for idx, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != 5:
            raise ParseError(f"expected 5 cells, got {len(cells)}", line=idx, path=path)
        name, p_min, p_max, q_mat, kind = cells
        try:
            bound_kind = BoundKind(kind)
        except ValueError:
            raise ValidationError(
                f"unknown bound_kind {kind!r} (row {idx}); expected one of "
                f"{[k.value for k in BoundKind]}"
            ) from None
        sources.append(
            LossSource(
                name=name,
                participation=Interval(
                    _parse_float(p_min, idx, 2, path), _parse_float(p_max, idx, 3, path)
                ),
                q_material=_parse_interval(q_mat, idx, 4, path),
                bound_kind=bound_kind,
            )
        )
    if not sources:
        raise ValidationError("budget file holds no sources")
    return ParticipationBudget(sources=tuple(sources))


def parse_config(text: str | bytes, path=None) -> dict[str, dict[str, str]]:
    """Parse the pipeline config (INI sections per analysis, strict keys)."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=str(path) if path else "<config>")
    except configparser.Error as exc:
        raise ParseError(f"bad config syntax: {exc}", path=path) from None
    return {section: dict(parser.items(section)) for section in parser.sections()}
