"""Exponential evanescent-coupling laws and dispersive chi/g conversions.

Coupling energy scales as the squared evanescent field, so a coupling
quality factor grows as ``exp(+2*alpha*d)`` with recess distance while an
effective coupling rate g falls as ``exp(-alpha*z)`` with separation.
Regression runs in log space: the data span several decades and log-space
least squares weights each decade equally.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateDetuningError,
    InsufficientDataError,
    InvalidInputError,
    SignInconsistencyError,
)


class SeriesKind(enum.Enum):
    QC_VS_DEPTH = "qc"
    G_VS_SEPARATION = "g"


@dataclass(frozen=True)
class CouplingSeries:
    """Measured (distance, value) pairs of one coupling sweep.

    Distances may be negative (a pin entering the enclosure); values must
    be positive.
    """

    distances: np.ndarray  # m
    values: np.ndarray     # > 0, unit set by kind
    kind: SeriesKind

    def __post_init__(self):
        object.__setattr__(self, "distances", np.asarray(self.distances, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.distances.ndim != 1 or self.distances.shape != self.values.shape:
            raise InvalidInputError("distances and values must be 1-d arrays of equal length")
        if self.distances.size < 1:
            raise InsufficientDataError("coupling series needs at least one point")
        if not np.all(np.isfinite(self.distances)):
            raise InvalidInputError("distances must be finite")
        if not np.all(np.isfinite(self.values)) or np.any(self.values <= 0):
            raise InvalidInputError("series values must be finite and > 0")

    def __len__(self):
        return self.distances.size


@dataclass(frozen=True)
class ExponentialLaw:
    """Fitted law ``value = amplitude * exp(rate * distance)``."""

    amplitude: float       # same unit as series values, > 0
    rate: float            # Np/m, signed
    amplitude_err: float
    rate_err: float
    residual_rms: float    # rms of log-space residuals
    n_points: int
    rate_fixed: bool = False
    kind: SeriesKind | None = field(default=None)

    def predict(self, distance):
        return self.amplitude * np.exp(self.rate * np.asarray(distance, dtype=float))


def predict_qc(qc_ref: float, d_ref: float, d: float, alpha: float) -> float:
    """Coupling Q at recess d from a reference point: ``qc_ref*e^{2a(d-d_ref)}``."""
    for name, value in (("qc_ref", qc_ref), ("alpha", alpha)):
        if not math.isfinite(value) or value <= 0:
            raise InvalidInputError(f"{name} must be finite and > 0, got {value}")
    for name, value in (("d_ref", d_ref), ("d", d)):
        if not math.isfinite(value):
            raise InvalidInputError(f"{name} must be finite, got {value}")
    return qc_ref * math.exp(2.0 * alpha * (d - d_ref))


def fit_exponential(series: CouplingSeries, fixed_rate: float | None = None) -> ExponentialLaw:
    """Log-linear least squares of an exponential law.

    With ``fixed_rate`` only the amplitude is fit (geometric-mean estimate
    of ``value * exp(-rate*d)``); otherwise both amplitude and rate are free
    with standard errors from the OLS covariance.
    """
    d = series.distances
    logv = np.log(series.values)
    n = len(series)

    if fixed_rate is not None:
        if not math.isfinite(fixed_rate):
            raise InvalidInputError(f"fixed_rate must be finite, got {fixed_rate}")
        if n < 1:
            raise InsufficientDataError("fixed-rate fit needs at least one point")
        resid_log = logv - fixed_rate * d
        intercept = float(np.mean(resid_log))
        resid = resid_log - intercept
        sigma = float(np.std(resid, ddof=1)) if n > 1 else 0.0
        amp = math.exp(intercept)
        return ExponentialLaw(
            amplitude=amp,
            rate=fixed_rate,
            amplitude_err=amp * sigma / math.sqrt(n),
            rate_err=0.0,
            residual_rms=float(np.sqrt(np.mean(resid**2))),
            n_points=n,
            rate_fixed=True,
            kind=series.kind,
        )

    if n < 2:
        raise InsufficientDataError("free-rate fit needs at least two points")
    design = np.column_stack([np.ones(n), d])
    coef, *_ = np.linalg.lstsq(design, logv, rcond=None)
    intercept, rate = float(coef[0]), float(coef[1])
    resid = logv - design @ coef
    dof = n - 2
    sigma2 = float(resid @ resid) / dof if dof > 0 else 0.0
    cov = sigma2 * np.linalg.inv(design.T @ design)
    amp = math.exp(intercept)
    return ExponentialLaw(
        amplitude=amp,
        rate=rate,
        amplitude_err=amp * math.sqrt(max(cov[0, 0], 0.0)),
        rate_err=math.sqrt(max(cov[1, 1], 0.0)),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        n_points=n,
        rate_fixed=False,
        kind=series.kind,
    )


def g_from_chi(chi: float, delta: float) -> float:
    """Effective coupling from dispersive shift: ``g = sqrt(chi*delta/2)``."""
    for name, value in (("chi", chi), ("delta", delta)):
        if not math.isfinite(value):
            raise InvalidInputError(f"{name} must be finite, got {value}")
    if delta == 0:
        raise DegenerateDetuningError("detuning is zero; g undefined")
    if chi * delta <= 0:
        raise SignInconsistencyError(
            f"chi ({chi}) and delta ({delta}) must share a sign for a real coupling"
        )
    return math.sqrt(chi * delta / 2.0)


def chi_from_g(g: float, delta: float) -> float:
    """Dispersive shift from coupling: ``chi = 2*g^2/delta``."""
    for name, value in (("g", g), ("delta", delta)):
        if not math.isfinite(value):
            raise InvalidInputError(f"{name} must be finite, got {value}")
    if delta == 0:
        raise DegenerateDetuningError("detuning is zero; chi undefined")
    return 2.0 * g * g / delta
