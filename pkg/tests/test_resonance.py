import math

import numpy as np
import pytest

from coaxline import kernels
from coaxline.errors import (
    DegenerateGeometryError,
    InsufficientDataError,
    InvalidInputError,
    NoResonanceError,
)
from coaxline.resonance import (
    HangerModelParams,
    ResonanceTrace,
    circle_fit,
    combine_q,
    correct_background,
    estimate_delay,
    fit_hanger,
    fit_lorentzian_peak,
    fit_many,
    model_s21_hanger,
    phase_fit,
    synthesize_trace,
)

REF_QL = 1.0 / (1.0 / 5.98e6 + 1.0 / 4.27e6)  # 2.4912e6, scalar oracle


# ----------------------------------------------------------------- model

def test_model_decoupled_limit():
    p = HangerModelParams(f0=7.7e9, qi=1e6, qc_mag=math.inf, amp=0.8, theta0=0.2, tau=1e-9)
    f = np.linspace(7.69e9, 7.71e9, 11)
    expected = 0.8 * np.exp(1j * (0.2 - 2 * np.pi * f * 1e-9))
    np.testing.assert_allclose(model_s21_hanger(p, f), expected, rtol=1e-14)


def test_model_critical_coupling_half_depth():
    p = HangerModelParams(f0=7.7e9, qi=2e6, qc_mag=2e6)
    assert model_s21_hanger(p, 7.7e9) == pytest.approx(0.5, rel=1e-12)


def test_model_reference_dip_depth():
    p = HangerModelParams(f0=7.7e9, qi=5.98e6, qc_mag=4.27e6)
    assert p.ql == pytest.approx(REF_QL, rel=1e-12)
    dip = abs(model_s21_hanger(p, 7.7e9))
    assert dip == pytest.approx(1.0 - REF_QL / 4.27e6, rel=1e-12)
    assert dip == pytest.approx(0.417, abs=5e-4)


def test_params_validation():
    with pytest.raises(InvalidInputError):
        HangerModelParams(f0=-1.0, qi=1e6, qc_mag=1e6)
    with pytest.raises(InvalidInputError):
        HangerModelParams(f0=7.7e9, qi=-1e6, qc_mag=1e6)
    with pytest.raises(InvalidInputError):
        HangerModelParams(f0=7.7e9, qi=1e6, qc_mag=1e6, amp=0.0)
    with pytest.raises(InvalidInputError):
        HangerModelParams(f0=7.7e9, qi=1e6, qc_mag=1e6, tau=math.nan)
    # negative loaded Q is rejected at construction
    with pytest.raises(InvalidInputError):
        HangerModelParams(f0=7.7e9, qi=1e7, qc_mag=1e4, phi=math.pi)


# ------------------------------------------------------------- combine_q

def test_combine_q_values():
    assert combine_q(5.98e6, 4.27e6) == pytest.approx(REF_QL, rel=1e-12)
    assert combine_q(3.3e6, math.inf) == 3.3e6
    assert combine_q(2e6, 2e6) == pytest.approx(1e6, rel=1e-14)
    with pytest.raises(InvalidInputError):
        combine_q(-1.0, 1e6)
    with pytest.raises(InvalidInputError):
        combine_q(1e6, 0.0)


def test_combine_q_undercoupled_limit():
    qi = 5e6
    assert combine_q(qi, 100 * qi) == pytest.approx(qi, rel=0.01)
    assert combine_q(qi, 1000 * qi) == pytest.approx(qi, rel=0.001)


# ------------------------------------------------------------ background

def test_correct_background_identity(sample_trace):
    out = correct_background(sample_trace, 1.0, 0.0, 0.0)
    np.testing.assert_array_equal(out.s21, sample_trace.s21)


def test_correct_background_round_trip(sample_trace):
    out = correct_background(sample_trace, 2.5, 1.1, 30e-9)
    back = correct_background(out, 1.0 / 2.5, -1.1, -30e-9)
    np.testing.assert_allclose(back.s21, sample_trace.s21, rtol=1e-12)


def test_correct_background_rejects_bad_amp(sample_trace):
    with pytest.raises(InvalidInputError):
        correct_background(sample_trace, 0.0, 0.0, 0.0)


def test_delay_estimate_from_wide_span():
    # wide span (500 linewidths) makes the outer-edge slope estimator sharp
    p = HangerModelParams(f0=6.0e9, qi=4e4, qc_mag=4e4, phi=0.05, amp=1.0,
                          theta0=-0.4, tau=50e-9)
    span = 500 * p.f0 / p.ql
    trace = synthesize_trace(p, 2001, span, snr_db=80, seed=11)
    tau_hat = estimate_delay(trace)
    assert tau_hat == pytest.approx(50e-9, abs=0.5e-9)


# ------------------------------------------------------------ circle fit

def test_circle_fit_exact_points():
    t = np.linspace(0.0, 2 * np.pi, 60, endpoint=False)
    z = (0.7 + 0.1j) + 0.25 * np.exp(1j * t)
    fit = circle_fit(ResonanceTrace(np.linspace(1e9, 2e9, 60), z))
    assert fit.center.real == pytest.approx(0.7, abs=1e-10)
    assert fit.center.imag == pytest.approx(0.1, abs=1e-10)
    assert fit.radius == pytest.approx(0.25, abs=1e-10)
    assert np.max(np.abs(fit.residuals)) < 1e-10


def test_circle_fit_critical_coupling_radius():
    p = HangerModelParams(f0=7.7e9, qi=2e6, qc_mag=2e6)
    trace = synthesize_trace(p, 201, 8 * p.f0 / p.ql)
    fit = circle_fit(trace)
    assert fit.radius == pytest.approx(0.25, rel=1e-3)


def test_circle_fit_reference_diameter():
    p = HangerModelParams(f0=7.7e9, qi=5.98e6, qc_mag=4.27e6)
    trace = synthesize_trace(p, 401, 10 * p.f0 / p.ql)
    fit = circle_fit(trace)
    assert 2 * fit.radius == pytest.approx(REF_QL / 4.27e6, rel=1e-3)
    assert 2 * fit.radius == pytest.approx(0.583, abs=2e-3)


def test_circle_fit_degenerate_collinear():
    f = np.linspace(1e9, 2e9, 20)
    z = np.linspace(0, 1, 20) * (1 + 1j)
    with pytest.raises(DegenerateGeometryError):
        circle_fit(ResonanceTrace(f, z))


# ------------------------------------------------------------- phase fit

def test_phase_model_center_symmetry():
    theta = kernels.phase_model(np.array([7.7e9]), 0.37, 2.5e6, 7.7e9)
    assert theta[0] == pytest.approx(0.37, abs=1e-12)


def test_phase_fit_exact_recovery():
    p = HangerModelParams(f0=7.7e9, qi=5.98e6, qc_mag=4.27e6)
    trace = synthesize_trace(p, 401, 5 * p.f0 / p.ql)
    circ = circle_fit(trace)
    fit = phase_fit(trace, circ.center)
    assert fit.f0 == pytest.approx(7.7e9, rel=1e-9)
    assert fit.ql == pytest.approx(p.ql, rel=1e-9)


def test_phase_total_excursion_approaches_two_pi():
    ql, f0 = 1e4, 5e9
    f = np.linspace(f0 - 0.4 * f0, f0 + 0.4 * f0, 600001)
    theta = kernels.phase_model(f, 0.0, ql, f0)
    excursion = theta[0] - theta[-1]
    assert excursion == pytest.approx(2 * np.pi, rel=1e-3)


# ------------------------------------------------------------- synthesis

def test_synthesize_noiseless_matches_model(sample_params):
    trace = synthesize_trace(sample_params, 101, 1e4)
    np.testing.assert_array_equal(
        trace.s21, model_s21_hanger(sample_params, trace.freqs)
    )


def test_synthesize_deterministic(sample_params):
    a = synthesize_trace(sample_params, 101, 1e4, snr_db=40, seed=9)
    b = synthesize_trace(sample_params, 101, 1e4, snr_db=40, seed=9)
    np.testing.assert_array_equal(a.s21, b.s21)
    np.testing.assert_array_equal(a.freqs, b.freqs)
    c = synthesize_trace(sample_params, 101, 1e4, snr_db=40, seed=10)
    assert not np.array_equal(a.s21, c.s21)


def test_synthesize_noise_variance(sample_params):
    n = 20000
    trace = synthesize_trace(sample_params, n, 1e4, snr_db=50, seed=3)
    clean = model_s21_hanger(sample_params, trace.freqs)
    noise = trace.s21 - clean
    sigma2 = sample_params.amp**2 * 10 ** (-50 / 10)
    assert float(np.mean(np.abs(noise) ** 2)) == pytest.approx(sigma2, rel=0.05)


def test_synthesize_validation(sample_params):
    with pytest.raises(InvalidInputError):
        synthesize_trace(sample_params, 4, 1e4)
    with pytest.raises(InvalidInputError):
        synthesize_trace(sample_params, 100, -1.0)


def test_trace_validation():
    with pytest.raises(InvalidInputError):
        ResonanceTrace(np.array([1.0, 2.0]), np.array([1.0 + 0j]))
    with pytest.raises(InvalidInputError):
        ResonanceTrace(np.array([2.0, 1.0]), np.array([1.0 + 0j, 1.0 + 0j]))
    with pytest.raises(InvalidInputError):
        ResonanceTrace(np.array([1.0, 1.0]), np.array([1.0 + 0j, 1.0 + 0j]))
    with pytest.raises(InvalidInputError):
        ResonanceTrace(np.array([1.0, 2.0]), np.array([np.nan + 0j, 1.0 + 0j]))


# ---------------------------------------------------------- full pipeline

def test_fit_hanger_round_trip(sample_params, sample_trace):
    result = fit_hanger(sample_trace)
    assert result.params.qi == pytest.approx(sample_params.qi, rel=0.02)
    assert result.params.qc_mag == pytest.approx(sample_params.qc_mag, rel=0.02)
    assert result.params.phi == pytest.approx(sample_params.phi, abs=0.02)
    assert result.params.amp == pytest.approx(sample_params.amp, rel=0.01)
    assert result.params.f0 == pytest.approx(sample_params.f0, rel=1e-7)
    assert result.refined


def test_fit_hanger_two_step_only(sample_params, sample_trace):
    result = fit_hanger(sample_trace, refine=False)
    assert not result.refined
    assert result.params.qi == pytest.approx(sample_params.qi, rel=0.02)
    assert result.params.qc_mag == pytest.approx(sample_params.qc_mag, rel=0.02)


def test_fit_hanger_fixed_delay(sample_params, sample_trace):
    result = fit_hanger(sample_trace, delay=sample_params.tau)
    assert result.params.qi == pytest.approx(sample_params.qi, rel=0.02)


def test_fit_hanger_qc_dynamic_range():
    for qc in (1e3, 1e8):
        p = HangerModelParams(f0=7.7e9, qi=5e6, qc_mag=qc, phi=0.05, amp=1.0,
                              theta0=0.0, tau=10e-9)
        trace = synthesize_trace(p, 401, 6 * p.f0 / p.ql, snr_db=70, seed=3)
        result = fit_hanger(trace)
        assert result.params.qc_mag == pytest.approx(qc, rel=0.05)


def test_fit_hanger_ql_relation_exact(sample_trace):
    result = fit_hanger(sample_trace)
    p = result.params
    recomputed = 1.0 / (1.0 / p.qi + math.cos(p.phi) / p.qc_mag)
    assert result.derived.ql == pytest.approx(recomputed, rel=1e-12)


def test_fit_hanger_no_resonance():
    f = np.linspace(7.6e9, 7.8e9, 101)
    flat = 0.9 * np.exp(1j * (0.2 - 2 * np.pi * f * 5e-9))
    with pytest.raises(NoResonanceError):
        fit_hanger(ResonanceTrace(f, flat))


def test_fit_hanger_too_few_points(sample_params):
    trace = synthesize_trace(sample_params, 8, 1e4)
    short = ResonanceTrace(trace.freqs[:7], trace.s21[:7])
    with pytest.raises(InsufficientDataError):
        fit_hanger(short)


def test_fit_hanger_negative_qi_flagged():
    # |Qc| < Ql*cos(phi) has no positive-Qi solution: build the trace from
    # the raw kernel and check the pathology is reported, not clipped.
    f0, ql, qc, phi = 6.0e9, 1.0e4, 9.0e3, 0.2
    f = np.linspace(f0 - 4 * f0 / ql, f0 + 4 * f0 / ql, 301)
    z = kernels.hanger_s21(f, f0, ql, qc, phi, 1.0, 0.0, 0.0)
    result = fit_hanger(ResonanceTrace(f, z), refine=False)
    assert result.params.qi < 0
    assert "overcoupled_fit_pathology" in result.flags


def test_fit_hanger_multiple_dips_warns():
    f0a, f0b, ql = 7.0e9, 7.000060e9, 1e6
    f = np.linspace(f0a - 5 * f0a / ql, f0b + 5 * f0b / ql, 801)
    za = kernels.hanger_s21(f, f0a, ql, 2e6, 0.0, 1.0, 0.0, 0.0)
    zb = kernels.hanger_s21(f, f0b, ql, 3e6, 0.0, 1.0, 0.0, 0.0)
    result = fit_hanger(ResonanceTrace(f, za * zb), refine=False)
    assert any("multiple dips" in w for w in result.warnings)


def test_fit_hanger_narrow_span_warns(sample_params):
    trace = synthesize_trace(sample_params, 101, 2 * sample_params.f0 / sample_params.ql)
    result = fit_hanger(trace)
    assert any("linewidth" in w for w in result.warnings)


def test_fit_many_orders_match(sample_params):
    traces = [
        synthesize_trace(sample_params, 201, 5 * sample_params.f0 / sample_params.ql,
                         snr_db=60, seed=s)
        for s in range(3)
    ]
    serial = fit_many(traces)
    threaded = fit_many(traces, max_workers=3)
    for a, b in zip(serial, threaded):
        assert a.params == b.params
        assert a.derived.ql == b.derived.ql


def test_reported_errors_track_snr_slope(sample_params):
    # standard errors scale inversely with amplitude SNR: slope -1 +- 0.1
    span = 5 * sample_params.f0 / sample_params.ql
    snrs = [30.0, 45.0, 60.0, 75.0, 90.0]
    med_errs = []
    for snr in snrs:
        errs = [
            fit_hanger(synthesize_trace(sample_params, 201, span, snr_db=snr, seed=s)).std_errors.qi
            for s in range(8)
        ]
        med_errs.append(float(np.median(errs)))
    slope = np.polyfit([s / 20.0 for s in snrs], np.log10(med_errs), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.1)


def test_fit_lorentzian_peak():
    f0, ql = 9.2e9, 5e4
    f = np.linspace(f0 - 6 * f0 / ql, f0 + 6 * f0 / ql, 401)
    x = 2 * ql * (f / f0 - 1.0)
    s21 = 0.7 / np.sqrt(1.0 + x**2)  # magnitude-only Lorentzian line
    got_f0, got_ql, got_amp = fit_lorentzian_peak(ResonanceTrace(f, s21.astype(complex)))
    assert got_f0 == pytest.approx(f0, rel=1e-9)
    assert got_ql == pytest.approx(ql, rel=1e-6)
    assert got_amp == pytest.approx(0.7, rel=1e-6)
