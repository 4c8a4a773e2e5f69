"""Hanger (feedline-coupled) S21 resonance model, synthesis, and fitting.

The fit is the standard two-step procedure: estimate and strip the
electrical delay and background, fit the resonance circle algebraically,
then fit the centered phase response; an optional Levenberg-Marquardt
refinement over all seven model parameters follows.  Internal Q uses the
diameter-corrected (real-part) convention
``1/Qi = 1/Ql - cos(phi)/|Qc|``; the uncorrected variant is reported as a
derived value but never stored as the primary result.
"""

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import least_squares, minimize_scalar

from . import kernels
from .errors import (
    DegenerateGeometryError,
    FitFailureError,
    InsufficientDataError,
    InvalidInputError,
    NoResonanceError,
)

TWO_PI = 2.0 * math.pi

QI_CONVENTION = "1/Qi = 1/Ql - cos(phi)/|Qc| (diameter-corrected)"

MIN_FIT_POINTS = 8

# Optimizer caps shared by the phase fit and the full refinement.
MAX_ITERATIONS = 200
STEP_TOL = 1e-10


def _wrap_angle(angle: float) -> float:
    return (angle + math.pi) % TWO_PI - math.pi


def _smooth(values: np.ndarray, window: int) -> np.ndarray:
    """Edge-padded moving average (no zero-padding dip at the boundaries)."""
    if window <= 1:
        return values
    pad_lo = window // 2
    pad_hi = window - 1 - pad_lo
    padded = np.pad(values, (pad_lo, pad_hi), mode="edge")
    return np.convolve(padded, np.ones(window) / window, mode="valid")


@dataclass
class TraceMeta:
    """Acquisition metadata carried alongside a trace."""

    photon_number_estimate: float | None = None  # mean photons n_bar
    temperature: float | None = None             # K
    label: str = ""


@dataclass
class ResonanceTrace:
    """Frequency-ordered complex S21 samples."""

    freqs: np.ndarray
    s21: np.ndarray
    meta: TraceMeta = field(default_factory=TraceMeta)

    def __post_init__(self):
        self.freqs = np.asarray(self.freqs, dtype=float)
        self.s21 = np.asarray(self.s21, dtype=complex)
        if self.freqs.ndim != 1 or self.freqs.shape != self.s21.shape:
            raise InvalidInputError("freqs and s21 must be 1-d arrays of equal length")
        if self.freqs.size < 1:
            raise InvalidInputError("trace must hold at least one sample")
        if not np.all(np.isfinite(self.freqs)):
            raise InvalidInputError("frequencies must be finite")
        if not np.all(np.isfinite(self.s21.real)) or not np.all(np.isfinite(self.s21.imag)):
            raise InvalidInputError("s21 values must be finite")
        if np.any(np.diff(self.freqs) <= 0):
            raise InvalidInputError("frequencies must be strictly increasing")

    def __len__(self):
        return self.freqs.size

    @property
    def span(self) -> float:
        return float(self.freqs[-1] - self.freqs[0])


@dataclass(frozen=True)
class HangerModelParams:
    """Seven-parameter hanger model."""

    f0: float            # Hz
    qi: float            # > 0
    qc_mag: float        # |Qc| > 0, may be inf (decoupled)
    phi: float = 0.0     # impedance-asymmetry angle, rad
    amp: float = 1.0     # background amplitude a > 0
    theta0: float = 0.0  # global phase, rad
    tau: float = 0.0     # electrical delay, s

    def __post_init__(self):
        if not (math.isfinite(self.f0) and self.f0 > 0):
            raise InvalidInputError(f"f0 must be finite and > 0, got {self.f0}")
        if not self.qi > 0 or math.isinf(self.qi):
            raise InvalidInputError(f"Qi must be finite and > 0, got {self.qi}")
        if not self.qc_mag > 0:
            raise InvalidInputError(f"|Qc| must be > 0, got {self.qc_mag}")
        if not (math.isfinite(self.amp) and self.amp > 0):
            raise InvalidInputError(f"amp must be finite and > 0, got {self.amp}")
        for name in ("phi", "theta0", "tau"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidInputError(f"{name} must be finite")
        if self.ql <= 0:
            raise InvalidInputError(
                "1/Qi + cos(phi)/|Qc| must be positive (loaded Q undefined)"
            )

    @property
    def ql(self) -> float:
        """Loaded Q from ``1/Ql = 1/Qi + cos(phi)/|Qc|``."""
        inv = 1.0 / self.qi + math.cos(self.phi) / self.qc_mag
        return 1.0 / inv if inv != 0 else math.inf


@dataclass
class FitErrors:
    """Per-parameter standard errors (statistical only)."""

    f0: float
    qi: float
    qc_mag: float
    phi: float
    amp: float
    theta0: float
    tau: float


@dataclass
class FitDerived:
    ql: float
    ql_err: float
    qc_real: float       # |Qc|/cos(phi), real-part coupling Q
    qc_real_err: float
    qi_uncorrected: float  # 1/(1/Ql - 1/|Qc|), reporting option only


@dataclass
class FitGoodness:
    residual_norm: float  # sqrt(sum of squared stacked residuals)
    dof: int
    reduced_chi2: float


@dataclass
class FitResult:
    params: HangerModelParams
    std_errors: FitErrors
    derived: FitDerived
    goodness: FitGoodness
    warnings: list[str] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)
    convention: str = QI_CONVENTION
    refined: bool = False


@dataclass
class CircleFit:
    center: complex
    radius: float
    residuals: np.ndarray  # per-point radial distance minus radius


@dataclass
class PhaseFitResult:
    f0: float
    ql: float
    theta_offset: float
    f0_err: float
    ql_err: float
    theta_offset_err: float
    warnings: list[str] = field(default_factory=list)


def model_s21_hanger(params: HangerModelParams, f):
    """Evaluate the hanger model at frequency f (scalar or array), in Hz."""
    freqs = np.atleast_1d(np.asarray(f, dtype=float))
    if math.isinf(params.qc_mag):
        out = params.amp * np.exp(1j * (params.theta0 - TWO_PI * freqs * params.tau))
    else:
        out = kernels.hanger_s21(
            freqs, params.f0, params.ql, params.qc_mag, params.phi,
            params.amp, params.theta0, params.tau,
        )
    return out[0] if np.isscalar(f) else out


def synthesize_trace(
    params: HangerModelParams,
    n_points: int,
    span: float,
    snr_db: float | None = None,
    seed: int = 0,
    label: str = "synthetic",
) -> ResonanceTrace:
    """Model evaluation on a uniform grid centered at f0, plus complex noise.

    ``snr_db`` is the background-amplitude-to-noise ratio in dB
    (noise power ``E|n|^2 = (amp * 10^(-snr_db/20))^2`` per sample);
    None disables noise.  Deterministic for a fixed seed.
    """
    if n_points < MIN_FIT_POINTS:
        raise InvalidInputError(f"n_points must be >= {MIN_FIT_POINTS}, got {n_points}")
    if not (math.isfinite(span) and span > 0):
        raise InvalidInputError(f"span must be finite and > 0, got {span}")
    freqs = np.linspace(params.f0 - span / 2.0, params.f0 + span / 2.0, n_points)
    s21 = model_s21_hanger(params, freqs)
    if snr_db is not None and math.isfinite(snr_db):
        sigma = params.amp * 10.0 ** (-snr_db / 20.0)
        rng = np.random.default_rng(seed)
        noise = rng.standard_normal(n_points) + 1j * rng.standard_normal(n_points)
        s21 = s21 + noise * (sigma / math.sqrt(2.0))
    return ResonanceTrace(freqs, s21, TraceMeta(label=label))


def correct_background(trace: ResonanceTrace, amp: float, theta0: float, tau: float) -> ResonanceTrace:
    """Divide out a background ``amp * exp(i*(theta0 - 2*pi*f*tau))``."""
    if not (math.isfinite(amp) and amp > 0):
        raise InvalidInputError(f"amp must be finite and > 0, got {amp}")
    for name, value in (("theta0", theta0), ("tau", tau)):
        if not math.isfinite(value):
            raise InvalidInputError(f"{name} must be finite, got {value}")
    background = amp * np.exp(1j * (theta0 - TWO_PI * trace.freqs * tau))
    return ResonanceTrace(trace.freqs.copy(), trace.s21 / background, replace(trace.meta))


def combine_q(qi: float, qc: float) -> float:
    """Total quality factor ``1/Q = 1/Qi + 1/Qc``; inf inputs are allowed."""
    for name, value in (("qi", qi), ("qc", qc)):
        if math.isnan(value) or value <= 0:
            raise InvalidInputError(f"{name} must be > 0, got {value}")
    # decoupled limits are exact, not 1/(1/x)
    if math.isinf(qi):
        return qc
    if math.isinf(qc):
        return qi
    return 1.0 / (1.0 / qi + 1.0 / qc)


def estimate_delay(trace: ResonanceTrace, edge_fraction: float = 0.2) -> float:
    """Electrical delay from the linear phase slope over the span's outer edges.

    Fits a line per wing (outermost ``edge_fraction/2`` of the points each
    side) and averages the slopes; exact far off resonance, increasingly
    biased for spans of only a few linewidths (the delay iteration inside
    fit_hanger removes the residue).
    """
    n = len(trace)
    k = max(2, int(round(n * edge_fraction / 2.0)))
    if 2 * k > n:
        raise InsufficientDataError("trace too short for delay estimation")
    phase = np.unwrap(np.angle(trace.s21))
    slopes = []
    for sl in (slice(0, k), slice(n - k, n)):
        coef = np.polyfit(trace.freqs[sl], phase[sl], 1)
        slopes.append(coef[0])
    return -float(np.mean(slopes)) / TWO_PI


def circle_fit(trace: ResonanceTrace) -> CircleFit:
    """Algebraic (Taubin) circle fit refined by one geometric Gauss-Newton pass."""
    z = trace.s21
    if z.size < 3:
        raise DegenerateGeometryError("circle fit needs at least three points")
    x = z.real
    y = z.imag
    cx, cy = x.mean(), y.mean()
    u = x - cx
    v = y - cy
    scale = math.sqrt(float(np.mean(u * u + v * v)))
    if scale == 0.0:
        raise DegenerateGeometryError("all points coincide")
    u = u / scale
    v = v / scale

    # Taubin fit: smallest right singular vector of
    # [(r^2 - <r^2>)/(2 sqrt(<r^2>)), u, v].
    w = u * u + v * v
    w_mean = float(w.mean())
    w0 = (w - w_mean) / (2.0 * math.sqrt(w_mean))
    _, _, vt = np.linalg.svd(np.column_stack([w0, u, v]), full_matrices=False)
    a_vec = vt[2]
    a0 = a_vec[0] / (2.0 * math.sqrt(w_mean))
    b1, b2 = a_vec[1], a_vec[2]
    a3 = -w_mean * a0
    if abs(a0) < 1e-12:
        raise DegenerateGeometryError("points are collinear (infinite fitted radius)")
    xc = -b1 / (2.0 * a0)
    yc = -b2 / (2.0 * a0)
    r = math.sqrt(max(b1 * b1 + b2 * b2 - 4.0 * a0 * a3, 0.0)) / (2.0 * abs(a0))

    # One geometric Gauss-Newton step on (xc, yc, r).
    dx = u - xc
    dy = v - yc
    dist = np.hypot(dx, dy)
    if np.all(dist > 0):
        res = dist - r
        jac = np.column_stack([-dx / dist, -dy / dist, -np.ones_like(dist)])
        step, *_ = np.linalg.lstsq(jac, -res, rcond=None)
        xc += step[0]
        yc += step[1]
        r += step[2]

    if not (math.isfinite(xc) and math.isfinite(yc) and math.isfinite(r) and r > 0):
        raise DegenerateGeometryError("circle fit did not produce a finite circle")

    center = complex(cx + scale * xc, cy + scale * yc)
    radius = r * scale
    residuals = np.abs(z - center) - radius
    return CircleFit(center=center, radius=radius, residuals=residuals)


def _phase_seeds(freqs, phase, fscale):
    n = freqs.size
    smooth = _smooth(phase, max(1, n // 40))
    grad = np.gradient(smooth, freqs)
    f0_seed = float(freqs[np.argmax(np.abs(grad))])
    span = float(freqs[-1] - freqs[0])
    excursion = abs(phase[0] - phase[-1])
    if 0.0 < excursion < 0.999 * TWO_PI:
        ql_seed = math.tan(excursion / 4.0) * f0_seed / span
    else:
        ql_seed = 2.0 * f0_seed / span
    ql_seed = max(ql_seed, 1.0)
    k = max(1, n // 20)
    theta_seed = 0.5 * (float(np.mean(phase[:k])) + float(np.mean(phase[-k:])))
    return np.array([theta_seed, math.log(ql_seed), f0_seed / fscale])


def _check_phase_wrap(raw_phase, warn_list):
    steps = np.abs(np.diff(raw_phase))
    steps = np.minimum(steps, TWO_PI - steps)
    if np.any(steps > 0.95 * math.pi):
        warn_list.append("phase wrap ambiguity: adjacent samples step by nearly pi")


def _safe_inverse(mat, flags: list[str]):
    """Inverse of a normal matrix JtJ, robust to parameter-scale imbalance.

    The matrix is normalized to unit diagonal (correlation form) before
    inversion so that benign column-scale differences do not masquerade as
    singularity; a truly degenerate matrix falls back to a truncated
    pseudo-inverse and raises a diagnostic flag.
    """
    d = np.sqrt(np.diag(mat))
    d[d == 0] = 1.0
    corr = mat / np.outer(d, d)
    cond = np.linalg.cond(corr)
    if not math.isfinite(cond) or cond > 1e12:
        flags.append("singular_jacobian")
        inv_corr = np.linalg.pinv(corr, rcond=1e-12)
    else:
        inv_corr = np.linalg.inv(corr)
    return inv_corr / np.outer(d, d)


def phase_fit(trace: ResonanceTrace, center: complex) -> PhaseFitResult:
    """Fit ``theta(f) = theta_off + 2*arctan(2*Ql*(1 - f/f0))`` to the
    unwrapped angle of ``s21 - center``.

    Standard errors come from the Jacobian-based covariance at the optimum.
    """
    if len(trace) < MIN_FIT_POINTS:
        raise InsufficientDataError(f"phase fit needs >= {MIN_FIT_POINTS} points")
    warn_list: list[str] = []
    centered = trace.s21 - center
    raw_phase = np.angle(centered)
    _check_phase_wrap(raw_phase, warn_list)
    phase = np.unwrap(raw_phase)
    fscale = float(trace.freqs[len(trace) // 2])
    p0 = _phase_seeds(trace.freqs, phase, fscale)

    def fun(p):
        return kernels.phase_residual_jac(trace.freqs, phase, p, fscale)[0]

    def jac(p):
        return kernels.phase_residual_jac(trace.freqs, phase, p, fscale)[1]

    result = least_squares(
        fun, p0, jac=jac, method="lm", xtol=STEP_TOL, ftol=STEP_TOL, gtol=1e-14,
        max_nfev=MAX_ITERATIONS,
    )
    if result.status <= 0:
        raise FitFailureError(
            "phase fit did not converge within the iteration budget",
            last_iterate=result.x,
        )
    theta_off, lnql, nu = result.x
    ql = math.exp(lnql)
    f0 = nu * fscale

    dof = max(len(trace) - 3, 1)
    sigma2 = 2.0 * result.cost / dof
    cov = sigma2 * _safe_inverse(result.jac.T @ result.jac, warn_list)
    errs = np.sqrt(np.maximum(np.diag(cov), 0.0))
    return PhaseFitResult(
        f0=f0,
        ql=ql,
        theta_offset=_wrap_angle(theta_off),
        f0_err=float(errs[2]) * fscale,
        ql_err=float(errs[1]) * ql,
        theta_offset_err=float(errs[0]),
        warnings=warn_list,
    )


def _dip_depth(trace: ResonanceTrace) -> float:
    """Relative dip depth of |S21| against the outer-edge baseline."""
    mag = np.abs(trace.s21)
    n = mag.size
    k = max(2, n // 10)
    baseline = float(np.median(np.concatenate([mag[:k], mag[-k:]])))
    smooth = _smooth(mag, max(1, n // 64))
    if baseline <= 0:
        return 1.0
    return max((baseline - float(np.min(smooth))) / baseline, 0.0)


def _refine_delay(trace: ResonanceTrace, tau_seed: float) -> float:
    """Polish the delay by minimizing circle-fit smear.

    Delay-free hanger data lies exactly on a circle; a residual delay
    shears it into a spiral, so the mean squared circle residual is a
    locally convex function of the trial delay.  Both the width of that
    basin and the wing-curvature bias of the slope seed scale with the dip
    depth, so the bracket does too; a fixed wide bracket would let the
    search fall into the spurious minimum where a shallow-dip trace is
    wrapped into an arc about the origin.
    """
    freqs = trace.freqs
    span = trace.span
    depth = min(max(_dip_depth(trace), 0.02), 1.0)
    half_width = min(0.6, (4.0 / math.pi) * depth) / span

    def cost(tau):
        z = trace.s21 * np.exp(1j * TWO_PI * freqs * tau)
        try:
            circ = circle_fit(ResonanceTrace(freqs, z, trace.meta))
        except DegenerateGeometryError:
            return 1e30
        return float(np.mean(circ.residuals**2))

    result = minimize_scalar(
        cost,
        bounds=(tau_seed - half_width, tau_seed + half_width),
        method="bounded",
        options={"xatol": min(1e-4, depth * 1e-2) / (TWO_PI * span)},
    )
    return float(result.x)


def _detect_resonance(trace: ResonanceTrace, warn_list: list[str]):
    """Reject traces with no dip and no phase roll; warn on multiple dips."""
    mag = np.abs(trace.s21)
    n = mag.size
    k = max(2, n // 10)
    edges = np.concatenate([mag[:k], mag[-k:]])
    baseline = float(np.median(edges))
    noise = float(np.std(edges))
    smooth = _smooth(mag, max(1, n // 64))
    depth = baseline - float(np.min(smooth))
    # significance is noise-driven; the absolute floor only rejects
    # sub-0.02% features that no cryogenic VNA trace resolves anyway
    dip_ok = depth > max(4.0 * noise, 2e-4 * baseline)

    if not dip_ok:
        # check for a phase roll with the electrical delay stripped, or a
        # flat trace with any delay would masquerade as a resonance
        z1 = trace.s21 * np.exp(1j * TWO_PI * trace.freqs * estimate_delay(trace))
        centered = z1 - np.mean(z1)
        spread = float(np.median(np.abs(centered)))
        sigma = float(np.median(np.abs(np.diff(z1)))) / math.sqrt(2.0)
        scale = float(np.median(np.abs(z1)))
        if spread < max(4.0 * sigma, 1e-9 * scale):
            raise NoResonanceError(
                "no significant dip and no phase roll found in the trace"
            )
        excursion = float(np.ptp(np.unwrap(np.angle(centered))))
        if excursion < 1.0:
            raise NoResonanceError(
                "no significant dip and no phase roll found in the trace"
            )
        return

    threshold = baseline - 0.5 * depth
    idx = np.flatnonzero(smooth < threshold)
    if idx.size:
        groups = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)
        if len(groups) > 1:
            dips = [trace.freqs[g[np.argmin(smooth[g])]] for g in groups]
            listed = ", ".join(f"{f / 1e9:.6f} GHz" for f in dips)
            warn_list.append(f"multiple dips detected ({listed}); deepest wins")


def fit_hanger(trace: ResonanceTrace, refine: bool = True, delay: float | None = None) -> FitResult:
    """Extract (f0, Qi, |Qc|, phi, amp, theta0, tau) with standard errors.

    Pipeline: delay estimate from the outer phase slope, iterated against
    circle + centered-phase fits until the residual delay is negligible,
    then parameter assembly and (by default) a full seven-parameter
    Levenberg-Marquardt refinement.  Errors are propagated from the
    full-model Jacobian covariance at the final parameters.
    """
    if len(trace) < MIN_FIT_POINTS:
        raise InsufficientDataError(
            f"fitting needs >= {MIN_FIT_POINTS} points, got {len(trace)}"
        )
    warn_list: list[str] = []
    flags: list[str] = []
    _detect_resonance(trace, warn_list)

    freqs = trace.freqs
    wspan = trace.span
    fscale = float(freqs[len(trace) // 2])

    if delay is not None:
        tau_hat = float(delay)
    else:
        tau_hat = _refine_delay(trace, estimate_delay(trace))

    z1 = trace.s21 * np.exp(1j * TWO_PI * freqs * tau_hat)
    corrected = ResonanceTrace(freqs, z1, trace.meta)
    circ = circle_fit(corrected)
    pfit = phase_fit(corrected, circ.center)
    warn_list.extend(pfit.warnings)

    # Off-resonant point sits diametrically opposite the resonance on the circle.
    beta = _wrap_angle(pfit.theta_offset - math.pi)
    off_res = circ.center + circ.radius * cmath.exp(1j * beta)
    amp = abs(off_res)
    if amp == 0:
        raise DegenerateGeometryError("off-resonant point at the origin")
    theta0 = cmath.phase(off_res)
    phi = _wrap_angle(beta - theta0)
    qc_mag = pfit.ql * amp / (2.0 * circ.radius)

    if wspan * pfit.ql / pfit.f0 < 3.0:
        warn_list.append("trace spans fewer than ~3 linewidths; results may be biased")

    theta_mid = _wrap_angle(theta0 - TWO_PI * fscale * tau_hat)
    p_hat = np.array([
        pfit.f0 / fscale, math.log(pfit.ql), math.log(qc_mag), phi,
        math.log(amp), theta_mid, tau_hat * wspan,
    ])

    refined = False
    zre, zim = trace.s21.real, trace.s21.imag

    def fun(p):
        return kernels.hanger_residual_jac(freqs, zre, zim, p, fscale, wspan)[0]

    def jac(p):
        return kernels.hanger_residual_jac(freqs, zre, zim, p, fscale, wspan)[1]

    if refine:
        result = least_squares(
            fun, p_hat, jac=jac, method="lm",
            xtol=STEP_TOL, ftol=STEP_TOL, gtol=1e-14, max_nfev=MAX_ITERATIONS,
        )
        if result.status <= 0:
            raise FitFailureError(
                "full-model refinement did not converge within the iteration budget",
                last_iterate=result.x,
            )
        p_hat = result.x
        refined = True

    return _assemble_result(trace, p_hat, fscale, wspan, warn_list, flags, refined)


def _assemble_result(trace, p, fscale, wspan, warn_list, flags, refined) -> FitResult:
    freqs = trace.freqs
    zre, zim = trace.s21.real, trace.s21.imag
    res, jacm = kernels.hanger_residual_jac(freqs, zre, zim, p, fscale, wspan)

    f0 = p[0] * fscale
    ql = math.exp(p[1])
    qc_mag = math.exp(p[2])
    phi = _wrap_angle(p[3])
    amp = math.exp(p[4])
    tau = p[6] / wspan
    theta0 = _wrap_angle(p[5] + TWO_PI * fscale * tau)

    inv_qi = 1.0 / ql - math.cos(phi) / qc_mag
    qi = 1.0 / inv_qi if inv_qi != 0 else math.inf
    if qi <= 0:
        flags.append("overcoupled_fit_pathology")

    ssr = float(res @ res)
    dof = max(res.size - 7, 1)
    sigma2 = ssr / dof
    cov = sigma2 * _safe_inverse(jacm.T @ jacm, flags)

    def propagate(grad):
        return math.sqrt(max(float(grad @ cov @ grad), 0.0))

    errs = np.sqrt(np.maximum(np.diag(cov), 0.0))
    qi_grad = np.zeros(7)
    if math.isfinite(qi):
        qi_grad[1] = qi * qi / ql
        qi_grad[2] = -qi * qi * math.cos(phi) / qc_mag
        qi_grad[3] = -qi * qi * math.sin(phi) / qc_mag
    qc_real = qc_mag / math.cos(phi) if math.cos(phi) != 0 else math.inf
    qcr_grad = np.zeros(7)
    if math.isfinite(qc_real):
        qcr_grad[2] = qc_real
        qcr_grad[3] = qc_real * math.tan(phi)

    theta0_grad = np.zeros(7)
    theta0_grad[5] = 1.0
    theta0_grad[6] = TWO_PI * fscale / wspan
    std_errors = FitErrors(
        f0=float(errs[0]) * fscale,
        qi=propagate(qi_grad),
        qc_mag=float(errs[2]) * qc_mag,
        phi=float(errs[3]),
        amp=float(errs[4]) * amp,
        theta0=propagate(theta0_grad),
        tau=float(errs[6]) / wspan,
    )

    # Stored params must satisfy the Ql relation exactly; rebuild Ql from them.
    if qi > 0:
        params = HangerModelParams(
            f0=f0, qi=qi, qc_mag=qc_mag, phi=phi, amp=amp, theta0=theta0, tau=tau
        )
        ql_stored = params.ql
    else:
        # Negative Qi is reported, not clipped; bypass the params invariant.
        params = object.__new__(HangerModelParams)
        for name, value in (
            ("f0", f0), ("qi", qi), ("qc_mag", qc_mag), ("phi", phi),
            ("amp", amp), ("theta0", theta0), ("tau", tau),
        ):
            object.__setattr__(params, name, value)
        ql_stored = ql

    inv_unc = 1.0 / ql_stored - 1.0 / qc_mag
    derived = FitDerived(
        ql=ql_stored,
        ql_err=float(errs[1]) * ql,
        qc_real=qc_real,
        qc_real_err=propagate(qcr_grad),
        qi_uncorrected=1.0 / inv_unc if inv_unc != 0 else math.inf,
    )
    goodness = FitGoodness(
        residual_norm=math.sqrt(ssr),
        dof=dof,
        reduced_chi2=sigma2,
    )
    return FitResult(
        params=params,
        std_errors=std_errors,
        derived=derived,
        goodness=goodness,
        warnings=warn_list,
        flags=flags,
        refined=refined,
    )


def fit_many(traces, refine: bool = True, max_workers: int | None = None) -> list[FitResult]:
    """Fit a batch of traces; results are in input order regardless of workers."""
    if max_workers is None or max_workers <= 1:
        return [fit_hanger(t, refine=refine) for t in traces]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(lambda t: fit_hanger(t, refine=refine), traces))


def fit_lorentzian_peak(trace: ResonanceTrace):
    """Simple |S21|^2 Lorentzian peak fit for symmetric-transmission data.

    Returns (f0, ql, amplitude); a convenience helper only, without the
    asymmetry treatment of the hanger pipeline.
    """
    power = np.abs(trace.s21) ** 2
    f = trace.freqs
    f0_seed = float(f[np.argmax(power)])
    half = np.max(power) / 2.0
    above = f[power >= half]
    width = float(above[-1] - above[0]) if above.size >= 2 else trace.span / 10.0
    ql_seed = max(f0_seed / max(width, 1e-12), 1.0)
    a_seed = float(np.max(power))

    def resid(p):
        lna, lnql, nu = p
        x = 2.0 * math.exp(lnql) * (f / (nu * f0_seed) - 1.0)
        return math.exp(lna) / (1.0 + x * x) - power

    result = least_squares(resid, [math.log(a_seed), math.log(ql_seed), 1.0], method="lm")
    if result.status <= 0:
        raise FitFailureError("Lorentzian fit did not converge", last_iterate=result.x)
    lna, lnql, nu = result.x
    return nu * f0_seed, math.exp(lnql), math.sqrt(math.exp(lna))
