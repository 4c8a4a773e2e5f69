"""Participation-ratio loss accounting.

Each loss source contributes ``p_i / Q_material,i`` to the total inverse
internal quality factor; a single source therefore limits the device to
``Q_limit = Q_material / p`` and a best measured Qi bounds the material
from below via ``Q_material >= p * Qi``.  Published participations are
ranges, so all operations accept either scalars or closed intervals and
propagate endpoints monotonically.  Superconductor "participation" is the
kinetic inductance fraction, used in the same formulas.
"""

import enum
import math
from dataclasses import dataclass

from .errors import IncompleteBudgetError, InvalidInputError


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi]; a degenerate interval is a point value."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise InvalidInputError(f"interval endpoints must be finite, got [{self.lo}, {self.hi}]")
        if self.lo > self.hi:
            raise InvalidInputError(f"interval endpoints out of order: [{self.lo}, {self.hi}]")

    @classmethod
    def of(cls, value) -> "Interval":
        if isinstance(value, Interval):
            return value
        return cls(float(value), float(value))

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    def __str__(self):
        if self.is_point:
            return f"{self.lo:g}"
        return f"{self.lo:g}..{self.hi:g}"


def _as_interval(name, value, lo_limit=0.0, hi_limit=math.inf) -> Interval:
    iv = Interval.of(value)
    if iv.lo <= lo_limit or iv.hi > hi_limit:
        raise InvalidInputError(
            f"{name} must lie in ({lo_limit:g}, {hi_limit:g}], got {iv}"
        )
    return iv


def _maybe_scalar(iv: Interval, *inputs):
    """Collapse to float when every input was scalar."""
    if any(isinstance(x, Interval) and not x.is_point for x in inputs):
        return iv
    return iv.lo if iv.is_point else iv


class BoundKind(enum.Enum):
    ESTABLISHED_LOWER_BOUND = "established_lower_bound"
    INFERRED_FROM_DEVICE = "inferred_from_device"


@dataclass(frozen=True)
class LossSource:
    """One dissipation channel: participation and material quality."""

    name: str
    participation: Interval       # in (0, 1]
    q_material: Interval          # > 0, may be a lower bound
    bound_kind: BoundKind = BoundKind.ESTABLISHED_LOWER_BOUND

    def __post_init__(self):
        object.__setattr__(
            self, "participation", _as_interval("participation", self.participation, 0.0, 1.0)
        )
        object.__setattr__(self, "q_material", _as_interval("q_material", self.q_material))
        if not self.name:
            raise InvalidInputError("loss source needs a name")


@dataclass(frozen=True)
class ParticipationBudget:
    """Named loss sources plus an optional best measured Qi."""

    sources: tuple
    qi_measured_best: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        names = [s.name for s in self.sources]
        if len(set(names)) != len(names):
            raise InvalidInputError("loss source names must be unique")
        if self.qi_measured_best is not None:
            if not (math.isfinite(self.qi_measured_best) and self.qi_measured_best > 0):
                raise InvalidInputError(
                    f"qi_measured_best must be finite and > 0, got {self.qi_measured_best}"
                )


@dataclass(frozen=True)
class SeamSpec:
    """Seam-loss scaling inputs: exponential isolation of a reference bound."""

    distance_from_seam: float   # m
    alpha: float                # Np/m
    q_seam_reference: float     # Qi bound at the reference distance
    z_ref: float                # m

    def __post_init__(self):
        for name in ("distance_from_seam", "alpha", "q_seam_reference", "z_ref"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidInputError(f"{name} must be finite and > 0, got {value}")


def q_limit(participation, q_material):
    """Single-source quality limit ``Q_material / p``; monotone on intervals."""
    p = _as_interval("participation", participation, 0.0, 1.0)
    q = _as_interval("q_material", q_material)
    out = Interval(q.lo / p.hi, q.hi / p.lo)
    return _maybe_scalar(out, participation, q_material)


def material_bound(participation, qi_measured):
    """Lower bound on material quality from a measured Qi: ``p * Qi``.

    Attributes all measured loss to this one source; the interval's low
    endpoint is the conservative published-style bound.
    """
    p = _as_interval("participation", participation, 0.0, 1.0)
    if not (math.isfinite(qi_measured) and qi_measured > 0):
        raise InvalidInputError(f"qi_measured must be finite and > 0, got {qi_measured}")
    out = Interval(p.lo * qi_measured, p.hi * qi_measured)
    return _maybe_scalar(out, participation)


def total_qi(budget: ParticipationBudget):
    """Combined limit ``1/Qi = sum_i p_i / Q_material,i`` over all sources."""
    if not budget.sources:
        raise IncompleteBudgetError("budget holds no loss sources")
    worst = sum(s.participation.hi / s.q_material.lo for s in budget.sources)
    best = sum(s.participation.lo / s.q_material.hi for s in budget.sources)
    out = Interval(1.0 / worst, 1.0 / best)
    scalar = all(s.participation.is_point and s.q_material.is_point for s in budget.sources)
    return out.lo if scalar else out


def dominant_source(budget: ParticipationBudget):
    """Loss shares ``(p_i/q_i) / sum_j (p_j/q_j)``, sorted descending.

    Interval sources are evaluated at their midpoints so shares sum to one.
    """
    if not budget.sources:
        raise IncompleteBudgetError("budget holds no loss sources")
    rates = [
        (s.name, s.participation.midpoint / s.q_material.midpoint)
        for s in budget.sources
    ]
    total = sum(rate for _, rate in rates)
    shares = [(name, rate / total) for name, rate in rates]
    shares.sort(key=lambda item: item[1], reverse=True)
    return shares


def seam_q(spec: SeamSpec) -> float:
    """Seam-loss Qi bound rescaled to distance z.

    Seam participation scales with the local field energy ``e^{-2 alpha z}``,
    so the bound scales inversely:
    ``Q_seam(z) = Q_ref * exp(+2*alpha*(z - z_ref))``.
    """
    return spec.q_seam_reference * math.exp(
        2.0 * spec.alpha * (spec.distance_from_seam - spec.z_ref)
    )
