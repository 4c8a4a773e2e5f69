"""Analysis runners shared by the CLI subcommands and the config pipeline.

Each runner appends named sections to a Report; the pipeline executes the
analyses requested by a config file and may fit multiple traces
concurrently, but sections always land in input order and reports are
byte-deterministic for identical inputs.
"""

import math
import os

import numpy as np

from . import budget as budget_mod
from . import coupling as coupling_mod
from . import dataio, dispersive, resonance, waveguide
from .errors import NonPhysicalDephasingError, ParseError, UsageError, ValidationError
from .report import Report

_HZ_PER_MHZ = 1e6
_S_PER_US = 1e-6


def _read_bytes(path) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


# ---------------------------------------------------------------- waveguide

def run_waveguide(
    report: Report,
    diameter: float,
    loading: float | None,
    mode: waveguide.ModeId,
    freq: float | None,
) -> None:
    spec = (
        waveguide.WaveguideSpec(diameter)
        if loading is None
        else waveguide.WaveguideSpec(diameter, loading)
    )
    fc = waveguide.cutoff_frequency(spec, mode)
    data = {
        "mode": str(mode),
        "diameter_mm": spec.diameter * 1e3,
        "loading_factor": spec.loading_factor,
        "cutoff_ghz": fc / 1e9,
    }
    if freq is not None:
        att = waveguide.attenuation_constant(spec, mode, freq)
        data.update(
            {
                "freq_ghz": freq / 1e9,
                "alpha_np_per_mm": att.alpha / 1e3,
                "alpha_db_per_mm": att.db_per_mm,
                "scale_length_mm": att.scale_length * 1e3,
            }
        )
    report.add_keyvalue("waveguide", data)


# ---------------------------------------------------------------------- fit

def _load_trace(path, fmt: str):
    data = _read_bytes(path)
    if fmt == "csv":
        trace, warnings = dataio.parse_trace_csv(data, path=path)
    elif fmt == "s2p":
        trace, warnings = dataio.parse_touchstone(data, path=path)
    else:
        raise UsageError(f"unknown trace format {fmt!r} (expected csv or s2p)")
    return trace, warnings, data


def _fit_section_data(result: resonance.FitResult, trace) -> dict:
    p, e, d = result.params, result.std_errors, result.derived
    return {
        "n_points": len(trace),
        "f0_hz": p.f0,
        "f0_err_hz": e.f0,
        "qi": p.qi,
        "qi_err": e.qi,
        "qc_mag": p.qc_mag,
        "qc_mag_err": e.qc_mag,
        "phi_rad": p.phi,
        "phi_err_rad": e.phi,
        "amp": p.amp,
        "amp_err": e.amp,
        "theta0_rad": p.theta0,
        "theta0_err_rad": e.theta0,
        "tau_s": p.tau,
        "tau_err_s": e.tau,
        "ql": d.ql,
        "ql_err": d.ql_err,
        "qc_real": d.qc_real,
        "qi_uncorrected": d.qi_uncorrected,
        "residual_norm": result.goodness.residual_norm,
        "dof": result.goodness.dof,
        "reduced_chi2": result.goodness.reduced_chi2,
        "refined": result.refined,
        "flags": ";".join(result.flags),
        "convention": result.convention,
    }


def write_plot_data(path, trace, result: resonance.FitResult) -> None:
    """Fitted curve and residuals as CSV for external plotting."""
    model = resonance.model_s21_hanger(result.params, trace.freqs)
    resid = trace.s21 - model
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("freq_hz,data_re,data_im,model_re,model_im,residual_re,residual_im\n")
        for f, z, m, r in zip(trace.freqs, trace.s21, model, resid):
            cells = (f, z.real, z.imag, m.real, m.imag, r.real, r.imag)
            fh.write(",".join(repr(float(v)) for v in cells) + "\n")


def run_fit(
    report: Report,
    paths,
    fmt: str = "csv",
    refine: bool = True,
    workers: int | None = None,
    plot_data_path=None,
) -> list[resonance.FitResult]:
    loaded = []
    for path in paths:
        trace, warnings, data = _load_trace(path, fmt)
        report.add_input(path, data)
        report.warnings.extend(f"{path}: {w}" for w in warnings)
        loaded.append(trace)
    results = resonance.fit_many(loaded, refine=refine, max_workers=workers)
    for path, trace, result in zip(paths, loaded, results):
        name = f"fit {os.path.basename(str(path))}" if len(paths) > 1 else "fit"
        report.add_keyvalue(name, _fit_section_data(result, trace))
        report.warnings.extend(f"{path}: {w}" for w in result.warnings)
    if plot_data_path is not None:
        if len(paths) != 1:
            raise UsageError("plot data output needs exactly one input trace")
        write_plot_data(plot_data_path, loaded[0], results[0])
    return results


# ----------------------------------------------------------------- coupling

def run_coupling_fit(
    report: Report,
    path,
    kind: coupling_mod.SeriesKind,
    fixed_rate: float | None = None,
) -> coupling_mod.ExponentialLaw:
    """Fit an exponential law to a two-column CSV (distance_mm, value)."""
    data = _read_bytes(path)
    report.add_input(path, data)
    text = data.decode("utf-8")
    distances, values = [], []
    lines = [ln for ln in text.splitlines() if ln.strip()]
    start = 0
    if lines and any(c.isalpha() for c in lines[0]):
        start = 1  # header row
    for idx, line in enumerate(lines[start:], start=start + 1):
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != 2:
            raise ParseError(f"expected 2 columns, got {len(cells)}", line=idx, path=path)
        distances.append(dataio._parse_float(cells[0], idx, 1, path) * 1e-3)
        values.append(dataio._parse_float(cells[1], idx, 2, path))
    series = coupling_mod.CouplingSeries(np.array(distances), np.array(values), kind)
    law = coupling_mod.fit_exponential(series, fixed_rate=fixed_rate)
    report.add_keyvalue(
        "coupling fit",
        {
            "kind": kind.value,
            "n_points": law.n_points,
            "amplitude": law.amplitude,
            "amplitude_err": law.amplitude_err,
            "rate_np_per_mm": law.rate / 1e3,
            "rate_err_np_per_mm": law.rate_err / 1e3,
            "rate_fixed": law.rate_fixed,
            "residual_rms_log": law.residual_rms,
        },
    )
    return law


def run_coupling_predict(
    report: Report, qc_ref: float, d_ref: float, d: float, alpha: float
) -> float:
    qc = coupling_mod.predict_qc(qc_ref, d_ref, d, alpha)
    report.add_keyvalue(
        "coupling predict",
        {
            "qc_ref": qc_ref,
            "d_ref_mm": d_ref * 1e3,
            "d_mm": d * 1e3,
            "alpha_np_per_mm": alpha / 1e3,
            "qc": qc,
        },
    )
    return qc


# --------------------------------------------------------------- dispersive

def _device_derived(record: dataio.DeviceRecord) -> dict:
    dset = record.dispersive
    out: dict = {}
    if dset.omega_q is not None and dset.omega_r is not None:
        delta = dispersive.detuning(dset)
        out["delta_mhz"] = delta / _HZ_PER_MHZ
        if dset.chi_qr is not None:
            # chi = 2g^2/delta always shares delta's sign; tables often list
            # the magnitude, so impose the physical sign before converting.
            signed_chi = math.copysign(dset.chi_qr, delta)
            out["g_qr_mhz"] = coupling_mod.g_from_chi(signed_chi, delta) / _HZ_PER_MHZ
    qc = record.qubit_coherence
    if dset.omega_q is not None and qc.t1 is not None:
        out["q_qubit"] = dispersive.q_from_lifetime(dset.omega_q, qc.t1)
    for which, key in (("echo", "t_phi_echo_us"), ("ramsey", "t_phi_ramsey_us")):
        t2 = qc.t2_echo if which == "echo" else qc.t2_star
        if qc.t1 is None or t2 is None:
            continue
        try:
            out[key] = dispersive.pure_dephasing(qc, which) / _S_PER_US
        except NonPhysicalDephasingError:
            pass  # value undefined beyond the 2*T1 limit; row already warned
    sc = record.storage_coherence
    if dset.omega_s is not None and sc.t1 is not None:
        out["qi_storage"] = dispersive.q_from_lifetime(dset.omega_s, sc.t1)
    return out


def run_dispersive(report: Report, path) -> None:
    data = _read_bytes(path)
    report.add_input(path, data)
    record, sim_set, warnings = dataio.parse_device_params(data, path=path)
    report.warnings.extend(f"{path}: {w}" for w in warnings)
    derived = {"device": record.id}
    derived.update(_device_derived(record))
    report.add_keyvalue("dispersive derived", derived)
    if sim_set is not None:
        rows = dispersive.deviation_table(record.dispersive, sim_set)
        report.add_table(
            "deviation (normalized by measured)",
            ["parameter", "measured_mhz", "simulated_mhz", "deviation_pct"],
            [
                [r.name, r.measured / _HZ_PER_MHZ, r.simulated / _HZ_PER_MHZ, r.deviation_pct]
                for r in rows
            ],
        )
        if sim_set.kappa_q is not None and record.dispersive.kappa_q is not None:
            check = dispersive.purcell_check(sim_set, record.dispersive.kappa_q)
            report.add_keyvalue(
                "purcell check",
                {"ratio": check.ratio, "classification": check.classification},
            )


def run_dispersive_batch(report: Report, path) -> None:
    data = _read_bytes(path)
    report.add_input(path, data)
    records, warnings = dataio.parse_device_table(data, path=path)
    report.warnings.extend(f"{path}: {w}" for w in warnings)

    columns = [
        "device", "omega_q_mhz", "omega_s_mhz", "omega_r_mhz", "delta_mhz",
        "g_qr_mhz", "t1_us", "t2_us", "t_phi_echo_us", "t1_s_us", "qi_s_e6",
    ]
    rows = []
    kappa, storage_t1 = [], []
    for rec in records:
        derived = _device_derived(rec)
        dset = rec.dispersive

        def mhz(v):
            return "" if v is None else v / _HZ_PER_MHZ

        def us(v):
            return "" if v is None else v / _S_PER_US

        rows.append([
            rec.id,
            mhz(dset.omega_q),
            mhz(dset.omega_s),
            mhz(dset.omega_r),
            derived.get("delta_mhz", ""),
            derived.get("g_qr_mhz", ""),
            us(rec.qubit_coherence.t1),
            us(rec.qubit_coherence.t2_echo),
            derived.get("t_phi_echo_us", ""),
            us(rec.storage_coherence.t1),
            derived.get("qi_storage", 0.0) / 1e6 if "qi_storage" in derived else "",
        ])
        if dset.kappa_r is not None and rec.storage_coherence.t1 is not None:
            kappa.append(dset.kappa_r)
            storage_t1.append(rec.storage_coherence.t1)
    report.add_table("devices", columns, rows)

    summary: dict = {"n_devices": len(records)}
    t1s = [r.qubit_coherence.t1 for r in records if r.qubit_coherence.t1 is not None]
    if t1s:
        summary["t1_us_mean"] = float(np.mean(t1s)) / _S_PER_US
        summary["t1_us_median"] = float(np.median(t1s)) / _S_PER_US
    qis = [
        dispersive.q_from_lifetime(r.dispersive.omega_s, r.storage_coherence.t1)
        for r in records
        if r.dispersive.omega_s is not None and r.storage_coherence.t1 is not None
    ]
    if qis:
        summary["qi_storage_best"] = max(qis)
    if len(kappa) >= 2:
        rho = dispersive.spearman_rho(kappa, storage_t1)
        summary["spearman_kappa_r_vs_storage_t1"] = rho
        summary["spearman_n"] = len(kappa)
    report.add_keyvalue("summary", summary)


# ------------------------------------------------------------------- budget

def run_budget(report: Report, path, qi_best: float | None = None, sweep_path=None,
               sweep_out=None) -> None:
    data = _read_bytes(path)
    report.add_input(path, data)
    parsed = dataio.parse_budget_file(data, path=path)
    sources = parsed.sources
    bud = budget_mod.ParticipationBudget(sources=sources, qi_measured_best=qi_best)

    columns = ["source", "participation", "q_material", "bound_kind", "qi_limit"]
    if qi_best is not None:
        columns.append("q_material_bound")
    rows = []
    for s in sources:
        limit = budget_mod.q_limit(s.participation, s.q_material)
        limit = budget_mod.Interval.of(limit)
        row = [
            s.name,
            str(s.participation),
            str(s.q_material),
            s.bound_kind.value,
            str(limit),
        ]
        if qi_best is not None:
            bound = budget_mod.Interval.of(budget_mod.material_bound(s.participation, qi_best))
            row.append(str(bound))
        rows.append(row)
    report.add_table("loss budget", columns, rows)

    total = budget_mod.Interval.of(budget_mod.total_qi(bud))
    shares = budget_mod.dominant_source(bud)
    summary = {"qi_total": str(total)}
    if qi_best is not None:
        summary["qi_measured_best"] = qi_best
    report.add_keyvalue("budget summary", summary)
    report.add_table(
        "dominant sources (midpoint shares)",
        ["source", "loss_share"],
        [[name, share] for name, share in shares],
    )

    if sweep_path is not None:
        _run_budget_sweep(report, bud, sweep_path, sweep_out)


def _run_budget_sweep(report: Report, bud, sweep_path, sweep_out) -> None:
    """Per-diameter participation CSV -> conservative Qi limit curves."""
    data = _read_bytes(sweep_path)
    report.add_input(sweep_path, data)
    lines = [ln for ln in data.decode("utf-8").splitlines() if ln.strip()]
    if not lines:
        raise ParseError("empty sweep file", path=sweep_path)
    header = [c.strip() for c in lines[0].split(",")]
    if header[0] != "diameter_mm":
        raise ParseError("first sweep column must be diameter_mm", line=1, path=sweep_path)
    by_name = {s.name: s for s in bud.sources}
    names = [c for c in header[1:] if c in by_name]
    unknown = [c for c in header[1:] if c not in by_name]
    for c in unknown:
        report.warnings.append(f"{sweep_path}: sweep column {c!r} matches no budget source")
    rows = []
    for idx, line in enumerate(lines[1:], start=2):
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != len(header):
            raise ParseError(
                f"expected {len(header)} cells, got {len(cells)}", line=idx, path=sweep_path
            )
        diameter = dataio._parse_float(cells[0], idx, 1, sweep_path)
        row = [diameter]
        for name in names:
            p = dataio._parse_float(cells[header.index(name)], idx, 0, sweep_path)
            limit = budget_mod.q_limit(p, by_name[name].q_material.lo)
            row.append(limit)
        rows.append(row)
    columns = ["diameter_mm"] + [f"{n}_qi_limit" for n in names]
    report.add_table("qi limit curves", columns, rows)
    if sweep_out is not None:
        with open(sweep_out, "w", encoding="utf-8") as fh:
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


# ----------------------------------------------------------------- pipeline

_KNOWN_SECTIONS = ("waveguide", "fit", "coupling", "dispersive", "budget")

_SECTION_KEYS = {
    "waveguide": {"diameter_mm", "loading", "mode", "freq_ghz"},
    "fit": {"inputs", "format", "refine", "workers"},
    "coupling": {
        "mode", "input", "kind", "fixed_rate_np_per_mm",
        "qc_ref", "d_ref_mm", "d_mm", "alpha_np_per_mm",
    },
    "dispersive": {"input", "batch"},
    "budget": {"input", "qi_best", "sweep_diameter", "sweep_out"},
}


def _config_float(section, key, raw):
    try:
        return float(raw)
    except ValueError:
        raise ValidationError(f"[{section}] {key} must be a number, got {raw!r}") from None


def _config_bool(section, key, raw):
    if raw.lower() in ("1", "true", "yes", "on"):
        return True
    if raw.lower() in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"[{section}] {key} must be a boolean, got {raw!r}")


def run_pipeline(config: dict[str, dict[str, str]], seed: int | None = None) -> Report:
    """Execute the analyses named by a parsed config, in config order.

    Unknown sections or keys are errors (strict mode).  ``seed`` is held
    for analyses that synthesize data; none of the current ones do.
    """
    report = Report()
    if not config:
        raise ValidationError("config requests no analyses")
    for section, items in config.items():
        if section not in _KNOWN_SECTIONS:
            raise ValidationError(
                f"unknown analysis section [{section}]; expected one of {_KNOWN_SECTIONS}"
            )
        unknown = set(items) - _SECTION_KEYS[section]
        if unknown:
            raise ValidationError(
                f"unknown keys in [{section}]: {sorted(unknown)}"
            )

    for section, items in config.items():
        if section == "waveguide":
            if "diameter_mm" not in items or "mode" not in items:
                raise ValidationError("[waveguide] needs diameter_mm and mode")
            run_waveguide(
                report,
                _config_float(section, "diameter_mm", items["diameter_mm"]) * 1e-3,
                _config_float(section, "loading", items["loading"]) if "loading" in items else None,
                waveguide.ModeId.parse(items["mode"]),
                _config_float(section, "freq_ghz", items["freq_ghz"]) * 1e9
                if "freq_ghz" in items
                else None,
            )
        elif section == "fit":
            if "inputs" not in items:
                raise ValidationError("[fit] needs inputs")
            paths = items["inputs"].replace(",", " ").split()
            workers = (
                int(_config_float(section, "workers", items["workers"]))
                if "workers" in items
                else None
            )
            run_fit(
                report,
                paths,
                fmt=items.get("format", "csv"),
                refine=_config_bool(section, "refine", items["refine"]) if "refine" in items else True,
                workers=workers,
            )
        elif section == "coupling":
            mode = items.get("mode", "fit")
            if mode == "fit":
                if "input" not in items or "kind" not in items:
                    raise ValidationError("[coupling] fit mode needs input and kind")
                kind = (
                    coupling_mod.SeriesKind.QC_VS_DEPTH
                    if items["kind"] == "qc"
                    else coupling_mod.SeriesKind.G_VS_SEPARATION
                )
                fixed = (
                    _config_float(section, "fixed_rate_np_per_mm", items["fixed_rate_np_per_mm"]) * 1e3
                    if "fixed_rate_np_per_mm" in items
                    else None
                )
                run_coupling_fit(report, items["input"], kind, fixed)
            elif mode == "predict":
                needed = ("qc_ref", "d_ref_mm", "d_mm", "alpha_np_per_mm")
                missing = [k for k in needed if k not in items]
                if missing:
                    raise ValidationError(f"[coupling] predict mode needs {missing}")
                run_coupling_predict(
                    report,
                    _config_float(section, "qc_ref", items["qc_ref"]),
                    _config_float(section, "d_ref_mm", items["d_ref_mm"]) * 1e-3,
                    _config_float(section, "d_mm", items["d_mm"]) * 1e-3,
                    _config_float(section, "alpha_np_per_mm", items["alpha_np_per_mm"]) * 1e3,
                )
            else:
                raise ValidationError(f"[coupling] mode must be fit or predict, got {mode!r}")
        elif section == "dispersive":
            if "input" not in items:
                raise ValidationError("[dispersive] needs input")
            batch = _config_bool(section, "batch", items["batch"]) if "batch" in items else False
            if batch:
                run_dispersive_batch(report, items["input"])
            else:
                run_dispersive(report, items["input"])
        elif section == "budget":
            if "input" not in items:
                raise ValidationError("[budget] needs input")
            run_budget(
                report,
                items["input"],
                qi_best=_config_float(section, "qi_best", items["qi_best"])
                if "qi_best" in items
                else None,
                sweep_path=items.get("sweep_diameter"),
                sweep_out=items.get("sweep_out"),
            )
    return report
