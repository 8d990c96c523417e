"""Coordinate spheres moving with normal speed ``p = +-H/R`` inside the flow.

A sphere at area radius ``r`` moves by ``dr/dt = f^-1 p(H)``, using
``dr/ds = 1/f``. Along the coupled flow its Hawking mass changes at the rate

    dm/dt = (r^2 R / 4) f^-1 p(H) + r f^-3 f_t,

which for ``p = H/R`` and ``H = 2/(r f)`` collapses to ``r/(2 f^2) + r f^-3 f_t``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Optional

import numpy as np

from .errors import DomainError, SingularSpeedError
from .flow_engine import FlowState, SchemeConfig, deturck_rhs, stable_dt, step_deturck
from .radial_metric import CurvatureField, MetricProfile, curvature, hawking_mass

__all__ = [
    "DEFAULT_EPSILON_R",
    "SpeedKind",
    "MassSample",
    "MassTrace",
    "speed",
    "surface_velocity",
    "step_surface",
    "partial_t_mass",
    "mass_rate",
    "mass_rate_simplified",
    "run_coupled",
]

DEFAULT_EPSILON_R = 1e-8


class SpeedKind(str, enum.Enum):
    FORWARD = "forward"
    BACKWARD = "backward"

    @property
    def sign(self) -> float:
        return 1.0 if self is SpeedKind.FORWARD else -1.0


def speed(kind: SpeedKind, H: float, R: float, epsilon_R: float = DEFAULT_EPSILON_R) -> float:
    """Normal speed ``H/R`` (forward) or ``-H/R`` (backward)."""
    if not math.isfinite(R) or abs(R) < epsilon_R:
        raise SingularSpeedError(f"|R| = {abs(R):.3e} is below the guard {epsilon_R:.1e}")
    return SpeedKind(kind).sign * H / R


def _local(profile: MetricProfile, r: float, field: Optional[CurvatureField]):
    field = curvature(profile) if field is None else field
    f = profile.f_at(r)
    R = profile.interp(field.scalar, r)
    return f, profile.dimension / (r * f), R


def surface_velocity(r: float, profile: MetricProfile, kind: SpeedKind,
                     epsilon_R: float = DEFAULT_EPSILON_R,
                     field: Optional[CurvatureField] = None) -> float:
    """``dr/dt`` of the sphere at ``r``."""
    f, H, R = _local(profile, r, field)
    return speed(kind, H, R, epsilon_R) / f


def step_surface(r: float, profile: MetricProfile, kind: SpeedKind, dt: float,
                 epsilon_R: float = DEFAULT_EPSILON_R,
                 field: Optional[CurvatureField] = None) -> float:
    """Explicit Euler step of the sphere radius.

    Pass ``field`` to reuse an already computed curvature of ``profile``.
    """
    grid = profile.grid
    if not grid.r_min < r < grid.r_max:
        raise DomainError(f"sphere radius {r} not inside the grid")
    r_new = r + dt * surface_velocity(r, profile, kind, epsilon_R, field)
    if not grid.r_min < r_new < grid.r_max:
        raise DomainError(f"sphere left the grid: r = {r_new:.6g}")
    return r_new


def partial_t_mass(profile: MetricProfile, f_t: np.ndarray, r: float) -> float:
    """Rate of change of ``m`` at fixed ``r``: ``r f^-3 f_t``."""
    f = profile.f_at(r)
    return r * f**-3 * profile.interp(f_t, r)


def mass_rate(profile: MetricProfile, f_t: np.ndarray, r: float, kind: SpeedKind,
              epsilon_R: float = DEFAULT_EPSILON_R,
              field: Optional[CurvatureField] = None) -> float:
    """``dm/dt`` along the coupled flow, unsimplified (goes through ``R``)."""
    f, H, R = _local(profile, r, field)
    p = speed(kind, H, R, epsilon_R)
    return 0.25 * r**2 * R / f * p + partial_t_mass(profile, f_t, r)


def mass_rate_simplified(profile: MetricProfile, f_t: np.ndarray, r: float, kind: SpeedKind) -> float:
    """``+-r/(2 f^2) + r f^-3 f_t``; defined even where ``R`` vanishes."""
    f = profile.f_at(r)
    return SpeedKind(kind).sign * r / (2.0 * f**2) + partial_t_mass(profile, f_t, r)


class MassSample(NamedTuple):
    t: float
    r: float
    f_at_r: float
    H: float
    R_at_r: float
    m: float
    dm_dt_formula: float
    dm_dt_observed: float


@dataclass(frozen=True)
class MassTrace:
    """Samples of one tracked sphere.

    ``status`` is ``"completed"`` for a sphere followed to ``t_end``,
    ``"boundary"`` if it left the grid and ``"singular"`` if the speed guard
    tripped; in the last two cases the trace stops at its last good sample.
    """

    sphere_id: str
    initial_radius: float
    samples: tuple
    status: str = "completed"
    reason: str = ""

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.samples], dtype=float)

    @property
    def flagged(self) -> bool:
        return self.status != "completed"


class _Tracker:
    def __init__(self, index: int, r: float):
        self.sphere_id = f"sphere{index:02d}_r{r:g}"
        self.initial_radius = r
        self.r = r
        self.samples: List[MassSample] = []
        self.status = "completed"
        self.reason = ""

    @property
    def active(self) -> bool:
        return self.status == "completed"

    def stop(self, status: str, reason: str):
        self.status, self.reason = status, reason

    def record(self, t, profile, field, f_t, kind, epsilon_R):
        f, H, R = _local(profile, self.r, field)
        m = hawking_mass(profile, self.r)
        try:
            rate = mass_rate(profile, f_t, self.r, kind, epsilon_R, field)
        except SingularSpeedError:
            rate = math.nan
        if self.samples:
            prev = self.samples[-1]
            observed = (m - prev.m) / (t - prev.t)
        else:
            observed = math.nan
        self.samples.append(MassSample(t, self.r, f, H, R, m, rate, observed))

    def freeze(self) -> MassTrace:
        return MassTrace(self.sphere_id, self.initial_radius, tuple(self.samples),
                         self.status, self.reason)


Observer = Callable[[FlowState, CurvatureField], None]


def run_coupled(initial: FlowState, kind: SpeedKind, scheme: SchemeConfig, t_end: float,
                sample_every: int = 1, epsilon_R: float = DEFAULT_EPSILON_R,
                observer: Optional[Observer] = None) -> List[MassTrace]:
    """Evolve the metric and the tracked spheres together up to ``t_end``.

    Each step advances the metric first and then moves the spheres on the
    new profile. The ``dm_dt_formula`` of a sample uses the ``f_t`` of the
    metric step that produced it, i.e. the right-hand side on the pre-step
    profile. The step is the smaller of :func:`stable_dt` and the time
    for the fastest active sphere to travel ``scheme.surface_cfl`` grid
    spacings. Spheres that leave the grid or hit the speed guard are flagged
    and frozen; the metric keeps evolving to ``t_end``.

    ``observer(state, field)`` is called on the initial state and on every
    sampled state. A :class:`~hawkflow.errors.StabilityError` or
    :class:`~hawkflow.errors.ConvergenceError` from the metric step aborts
    the run.
    """
    if t_end < 0:
        raise DomainError("t_end must be non-negative")
    if sample_every < 1:
        raise DomainError("sample_every must be at least 1")
    kind = SpeedKind(kind)
    h = initial.profile.grid.spacing

    state = initial
    field = curvature(state.profile)
    f_t = deturck_rhs(state.profile)
    trackers = [_Tracker(i, r) for i, r in enumerate(state.tracked_radii)]
    for tr in trackers:
        tr.record(state.t, state.profile, field, f_t, kind, epsilon_R)
        _, H, R = _local(state.profile, tr.r, field)
        try:
            speed(kind, H, R, epsilon_R)
        except SingularSpeedError as exc:
            tr.stop("singular", str(exc))
    if observer is not None:
        observer(state, field)

    t_stop = initial.t + t_end
    slack = 1e-12 * max(1.0, t_stop)
    while t_stop - state.t > slack:
        dt = stable_dt(state.profile, scheme)
        for tr in trackers:
            if tr.active:
                try:
                    v = surface_velocity(tr.r, state.profile, kind, epsilon_R, field)
                except SingularSpeedError as exc:
                    tr.stop("singular", str(exc))
                    continue
                if v != 0.0:
                    dt = min(dt, scheme.surface_cfl * h / abs(v))
        dt = min(dt, t_stop - state.t)

        # f_t of the step just taken: explicit Euler uses the pre-step RHS.
        f_t = deturck_rhs(state.profile)
        state = step_deturck(state, dt, scheme)
        field = curvature(state.profile)
        for tr in trackers:
            if not tr.active:
                continue
            try:
                tr.r = step_surface(tr.r, state.profile, kind, dt, epsilon_R, field)
            except SingularSpeedError as exc:
                tr.stop("singular", str(exc))
            except DomainError as exc:
                tr.stop("boundary", str(exc))

        last = t_stop - state.t <= slack
        if state.step_count % sample_every == 0 or last:
            for tr in trackers:
                if tr.active:
                    tr.record(state.t, state.profile, field, f_t, kind, epsilon_R)
            if observer is not None:
                observer(state, field)

    return [tr.freeze() for tr in trackers]
