"""Verification instruments for coupled runs and single profiles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from .errors import DomainError
from .radial_metric import (
    CurvatureField,
    MetricProfile,
    RadialGrid,
    curvature,
    diff1,
    diff2,
    schwarzschild_profile,
)
from .surface_flow import MassTrace

__all__ = [
    "RadiusSummary",
    "MonotonicityReport",
    "DecayReport",
    "PositivityRecord",
    "find_monotonicity_radius",
    "is_monotone",
    "ale_decay_report",
    "positivity_monitor",
    "calibrate_eps_disc",
    "identity_check_dm_dr",
    "convergence_order",
]


class RadiusSummary(NamedTuple):
    radius: float
    min_dm_dt: float
    monotone: bool
    n_samples: int
    status: str


@dataclass(frozen=True)
class MonotonicityReport:
    """``r0`` is ``None`` when the largest tracked sphere is not monotone."""

    r0: Optional[float]
    per_radius: tuple
    run_metadata: Dict[str, object] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "r0": self.r0,
            "per_radius": [s._asdict() for s in self.per_radius],
            "run_metadata": dict(self.run_metadata),
        }


def is_monotone(trace: MassTrace, decreasing: bool = False) -> bool:
    """Strict sample-to-sample monotonicity of ``m``; needs two samples."""
    m = trace.column("m")
    if m.size < 2:
        return False
    steps = np.diff(m)
    return bool(np.all(steps < 0) if decreasing else np.all(steps > 0))


def find_monotonicity_radius(traces: Sequence[MassTrace], run_metadata: Optional[dict] = None,
                             decreasing: bool = False) -> MonotonicityReport:
    """Smallest tracked radius beyond which every sphere's mass is monotone.

    A sphere counts as monotone when its Hawking mass strictly increases
    (or, with ``decreasing=True``, strictly decreases) between every pair
    of consecutive samples. Traces cut short after a single sample cannot
    show that and count as non-monotone. Radii are the spheres' initial
    radii.
    """
    traces = list(traces)
    if not traces:
        raise DomainError("no traces given")
    if all(len(t.samples) < 2 for t in traces):
        raise DomainError("every trace has a single sample; nothing to compare")

    per_radius = []
    for trace in sorted(traces, key=lambda t: (t.initial_radius, t.sphere_id)):
        observed = trace.column("dm_dt_observed")[1:]
        min_rate = float(np.min(observed)) if observed.size else math.nan
        per_radius.append(RadiusSummary(
            trace.initial_radius, min_rate, is_monotone(trace, decreasing),
            len(trace.samples), trace.status,
        ))

    r0 = None
    for summary in reversed(per_radius):
        if not summary.monotone:
            break
        r0 = summary.radius
    return MonotonicityReport(r0, tuple(per_radius), dict(run_metadata or {}))


@dataclass(frozen=True)
class DecayReport:
    sup_f_minus_1: float
    sup_r_fr: float
    sup_r2_frr: float
    at_time: float
    window_start: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def ale_decay_report(profile: MetricProfile, t: float, window: float = 0.5) -> DecayReport:
    """Sup of ``|f-1|``, ``|r f_r|`` and ``|r^2 f_rr|`` over ``r > window * r_max``."""
    r, f, h = profile.r, profile.f, profile.grid.spacing
    outer = r > window * profile.grid.r_max
    if not np.any(outer):
        raise DomainError("decay window contains no nodes")
    return DecayReport(
        sup_f_minus_1=float(np.max(np.abs(f[outer] - 1.0))),
        sup_r_fr=float(np.max(np.abs(r * diff1(f, h))[outer])),
        sup_r2_frr=float(np.max(np.abs(r**2 * diff2(f, h))[outer])),
        at_time=float(t),
        window_start=float(window * profile.grid.r_max),
    )


class PositivityRecord(NamedTuple):
    min_R: float
    argmin: int
    violated: bool


def positivity_monitor(field: CurvatureField, eps_disc: float = 0.0) -> PositivityRecord:
    """Minimum scalar curvature over interior nodes; ``violated`` if below ``-eps_disc``."""
    interior = np.asarray(field.scalar)[1:-1]
    i = int(np.argmin(interior))
    value = float(interior[i])
    return PositivityRecord(value, i + 1, value < -eps_disc)


def calibrate_eps_disc(grid: RadialGrid, M: float = 1.0, factor: float = 3.0) -> float:
    """Discretisation floor for scalar curvature on ``grid``.

    Three times the largest ``|R|`` produced on the exact, scalar flat
    Schwarzschild slice of mass ``M``. ``M`` is reduced if the grid starts
    inside its horizon.
    """
    M = min(M, 0.45 * grid.r_min)
    field = curvature(schwarzschild_profile(M, grid))
    return factor * float(np.max(np.abs(field.scalar)))


def identity_check_dm_dr(profile: MetricProfile, k0_sign: float = 1.0) -> float:
    """Max interior deviation between a central difference of ``m`` and ``r^2 R / 4``."""
    r, f, h = profile.r, profile.f, profile.grid.spacing
    m = 0.5 * r * (1.0 - f**-2)
    dm = (m[2:] - m[:-2]) / (2.0 * h)
    R = curvature(profile, k0_sign=k0_sign).scalar
    return float(np.max(np.abs(dm - 0.25 * r[1:-1] ** 2 * R[1:-1])))


def convergence_order(coarse: float, medium: float, fine: float) -> float:
    """Observed order ``log2(|coarse - medium| / |medium - fine|)`` for halved spacings."""
    num = abs(coarse - medium)
    den = abs(medium - fine)
    tiny = np.finfo(float).tiny
    if den <= tiny or num <= tiny:
        raise DomainError("differences underflow; the observable has already converged")
    return math.log2(num / den)
