"""Coupled qubit-resonator bookkeeping: detunings, lifetimes, dephasing,
measured-vs-simulated deviation tables, and Purcell diagnostics.

All stored frequencies, shifts, and linewidths are ordinary frequencies in
Hz (the "/2pi" convention of device tables); coherence times are seconds.
Optional quantities are explicitly absent (None), never zero-filled.
"""

import math
import warnings
from dataclasses import dataclass, fields

import numpy as np

from .errors import (
    IncompleteSetError,
    InvalidInputError,
    NonPhysicalDephasingError,
)


class PhysicalityWarning(UserWarning):
    """Soft violation of an expected physical ordering."""


def _check_finite(name, value, positive=False):
    if value is None:
        return
    if not math.isfinite(value):
        raise InvalidInputError(f"{name} must be finite, got {value}")
    if positive and value <= 0:
        raise InvalidInputError(f"{name} must be > 0, got {value}")


@dataclass
class DispersiveSet:
    """Mode frequencies, Kerr/dispersive shifts, and linewidths of one device.

    Any field may be absent; chi entries keep their measured sign.
    """

    omega_q: float | None = None   # qubit frequency, Hz
    omega_r: float | None = None   # readout resonator frequency, Hz
    omega_s: float | None = None   # storage resonator frequency, Hz
    chi_qr: float | None = None    # qubit-readout cross-Kerr, Hz
    chi_qs: float | None = None    # qubit-storage cross-Kerr, Hz
    chi_qq: float | None = None    # qubit self-Kerr (anharmonicity), Hz
    chi_rr: float | None = None    # readout self-Kerr, Hz
    kappa_r: float | None = None   # readout linewidth, Hz
    kappa_q: float | None = None   # qubit linewidth, Hz
    p_e: float | None = None       # thermal excited-state population

    def __post_init__(self):
        for name in ("omega_q", "omega_r", "omega_s"):
            _check_finite(name, getattr(self, name), positive=True)
        for name in ("chi_qr", "chi_qs", "chi_qq", "chi_rr"):
            _check_finite(name, getattr(self, name))
        for name in ("kappa_r", "kappa_q"):
            _check_finite(name, getattr(self, name), positive=True)
        if self.p_e is not None:
            _check_finite("p_e", self.p_e)
            if not 0.0 <= self.p_e < 1.0:
                raise InvalidInputError(f"p_e must lie in [0, 1), got {self.p_e}")
        if self.chi_qq is not None and self.chi_qr is not None:
            if abs(self.chi_qq) < 5.0 * abs(self.chi_qr):
                warnings.warn(
                    "self-Kerr |chi_qq| is not much larger than |chi_qr|; "
                    "set looks non-transmon-like",
                    PhysicalityWarning,
                    stacklevel=2,
                )

    _NUMERIC_FIELDS = (
        "omega_q", "omega_r", "omega_s", "chi_qr", "chi_qs", "chi_qq",
        "chi_rr", "kappa_r", "kappa_q", "p_e",
    )


@dataclass
class CoherenceSet:
    """Relaxation and dephasing times for one mode, in seconds."""

    t1: float | None = None
    t2_star: float | None = None
    t2_echo: float | None = None

    def __post_init__(self):
        for f in fields(self):
            _check_finite(f.name, getattr(self, f.name), positive=True)
        if self.t1 is not None and self.t2_echo is not None:
            if self.t2_echo > 2.0 * self.t1 * 1.05:
                warnings.warn(
                    f"T2_echo ({self.t2_echo}) exceeds 2*T1 ({2 * self.t1}) "
                    "by more than 5%",
                    PhysicalityWarning,
                    stacklevel=2,
                )


@dataclass
class DeviationRow:
    name: str
    measured: float
    simulated: float
    deviation_pct: float


@dataclass
class PurcellCheck:
    ratio: float
    classification: str  # "Purcell-limited" | "other-loss-dominated"


def q_from_lifetime(f: float, t1: float) -> float:
    """Quality factor equivalent to an energy lifetime: ``Q = 2*pi*f*T1``."""
    for name, value in (("f", f), ("t1", t1)):
        if not (math.isfinite(value) and value > 0):
            raise InvalidInputError(f"{name} must be finite and > 0, got {value}")
    return 2.0 * math.pi * f * t1


def lifetime_from_q(f: float, q: float) -> float:
    """Energy lifetime equivalent to a quality factor: ``T1 = Q/(2*pi*f)``."""
    for name, value in (("f", f), ("q", q)):
        if not (math.isfinite(value) and value > 0):
            raise InvalidInputError(f"{name} must be finite and > 0, got {value}")
    return q / (2.0 * math.pi * f)


def pure_dephasing(c: CoherenceSet, which: str = "echo", tol: float = 1e-6) -> float:
    """Pure dephasing time ``1/T_phi = 1/T2 - 1/(2*T1)``.

    ``which`` selects the Ramsey (t2_star) or echo (t2_echo) time.  T2 at
    the 2*T1 lifetime limit (within ``tol``) returns inf; beyond it raises.
    """
    if which not in ("ramsey", "echo"):
        raise InvalidInputError(f"which must be 'ramsey' or 'echo', got {which!r}")
    t2 = c.t2_star if which == "ramsey" else c.t2_echo
    if c.t1 is None or t2 is None:
        raise IncompleteSetError(f"pure_dephasing needs T1 and T2_{which}")
    rate = 1.0 / t2 - 1.0 / (2.0 * c.t1)
    if abs(rate) <= tol / t2:
        return math.inf
    if rate < 0:
        raise NonPhysicalDephasingError(
            f"T2 ({t2}) exceeds the 2*T1 limit ({2 * c.t1}); dephasing rate negative"
        )
    return 1.0 / rate


def detuning(dset: DispersiveSet) -> float:
    """Signed qubit-readout detuning ``omega_q - omega_r`` in Hz."""
    if dset.omega_q is None or dset.omega_r is None:
        raise IncompleteSetError("detuning needs both omega_q and omega_r")
    return dset.omega_q - dset.omega_r


def deviation_table(measured: DispersiveSet, simulated: DispersiveSet) -> list[DeviationRow]:
    """Percent deviation per field present in both sets.

    Normalization is by the measured value:
    ``100 * |measured - simulated| / |measured|``.
    """
    rows = []
    for name in DispersiveSet._NUMERIC_FIELDS:
        m = getattr(measured, name)
        s = getattr(simulated, name)
        if m is None or s is None:
            continue
        if m == 0:
            raise InvalidInputError(f"measured {name} is zero; deviation undefined")
        rows.append(DeviationRow(name, m, s, 100.0 * abs(m - s) / abs(m)))
    if not rows:
        raise IncompleteSetError("no field is present in both sets")
    return rows


def purcell_check(simulated: DispersiveSet, measured_kappa_q: float) -> PurcellCheck:
    """Compare a measured qubit linewidth against its simulated Purcell limit.

    The simulated set's kappa_q is the dissipation-free (Purcell) rate;
    a ratio well above 1 means other losses dominate.
    """
    if simulated.kappa_q is None:
        raise IncompleteSetError("simulated set carries no kappa_q (Purcell rate)")
    if not (math.isfinite(measured_kappa_q) and measured_kappa_q > 0):
        raise InvalidInputError(
            f"measured kappa_q must be finite and > 0, got {measured_kappa_q}"
        )
    ratio = measured_kappa_q / simulated.kappa_q
    label = "Purcell-limited" if ratio < 2.0 else "other-loss-dominated"
    return PurcellCheck(ratio=ratio, classification=label)


def _rank(values: np.ndarray) -> np.ndarray:
    """Ranks starting at 1, ties averaged."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values))
    ranks[order] = np.arange(1, len(values) + 1)
    # average ranks over tied groups
    for v in np.unique(values):
        mask = values == v
        if np.count_nonzero(mask) > 1:
            ranks[mask] = ranks[mask].mean()
    return ranks


def spearman_rho(x, y) -> float:
    """Spearman rank correlation (Pearson correlation of average ranks)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidInputError("spearman_rho needs two equal-length 1-d arrays")
    if x.size < 2:
        raise InvalidInputError("spearman_rho needs at least two points")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InvalidInputError("spearman_rho inputs must be finite")
    rx = _rank(x)
    ry = _rank(y)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = math.sqrt(float(rx @ rx) * float(ry @ ry))
    if denom == 0:
        raise InvalidInputError("rank variance is zero; correlation undefined")
    return float(rx @ ry) / denom
