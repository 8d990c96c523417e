"""Time evolution of rotationally symmetric metrics.

Two evolutions are provided:

* the Hamilton-DeTurck flow of ``f`` in the fixed Schwarzschild gauge,

      f_t = f^-2 f_rr - 2 f^-3 f_r^2 + ((n-1)/r - 1/(r f^2)) f_r
            - (n-1)/(r^2 f) (f^2 - 1),

  with explicit Euler or Crank-Nicolson/Newton time stepping, and
* the plain Ricci flow of a warped product ``phi^2 dx^2 + psi^2 g_sphere``.

Spatial derivatives are second order: central in the interior, one-sided
at the ends. The outer node of the DeTurck flow keeps its initial value. At
the inner node the Hawking mass ``m = r (1 - f^-2) / 2`` follows its
neighbours so that the one-sided difference ``-3 m_0 + 4 m_1 - m_2`` stays
at its initial value; since ``R = 4 m_r / r^2`` this freezes the scalar
curvature of the inner boundary instead of ``f``. Pinning ``f`` there
drives ``R`` negative in a layer next to the boundary as mass drains out of
the interior. The warped Ricci flow holds both ends fixed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import solve_banded

from .errors import ConvergenceError, DomainError, StabilityError
from .radial_metric import (
    CURVATURE_ORDER,
    MetricProfile,
    WarpedProfile,
    curvature,
    diff1,
    diff2,
)

__all__ = [
    "Scheme",
    "SchemeConfig",
    "FlowState",
    "WarpedFlowState",
    "deturck_rhs",
    "deturck_jacobian",
    "inner_mass_gradient",
    "stable_dt",
    "step_deturck",
    "gauge_field",
    "gauge_vector",
    "warped_rhs",
    "step_warped_ricci",
    "scalar_evolution_residual",
    "RESIDUAL_PAD",
]


class Scheme(str, enum.Enum):
    EXPLICIT_EULER = "explicit_euler"
    CRANK_NICOLSON = "crank_nicolson"


@dataclass(frozen=True)
class SchemeConfig:
    """Time stepping parameters.

    ``surface_cfl`` bounds how far a tracked sphere may move in one coupled
    step, in units of the grid spacing. It only matters in ``run_coupled``.
    """

    scheme: Scheme = Scheme.EXPLICIT_EULER
    cfl_safety: float = 0.4
    fixed_dt: Optional[float] = None
    max_newton_iters: int = 25
    newton_tol: float = 1e-12
    surface_cfl: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if not 0.0 < self.cfl_safety < 1.0:
            raise DomainError(f"cfl_safety must lie in (0, 1), got {self.cfl_safety}")
        if self.newton_tol <= 0:
            raise DomainError("newton_tol must be positive")
        if self.max_newton_iters < 1:
            raise DomainError("max_newton_iters must be at least 1")
        if self.fixed_dt is not None and self.fixed_dt <= 0:
            raise DomainError("fixed_dt must be positive when given")
        if self.surface_cfl <= 0:
            raise DomainError("surface_cfl must be positive")


@dataclass(frozen=True, eq=False)
class FlowState:
    t: float
    profile: MetricProfile
    tracked_radii: tuple = ()
    step_count: int = 0

    def __post_init__(self):
        if self.t < 0:
            raise DomainError("time must be non-negative")
        radii = tuple(float(r) for r in self.tracked_radii)
        grid = self.profile.grid
        for r in radii:
            if not grid.r_min < r < grid.r_max:
                raise DomainError(f"tracked radius {r} not inside ({grid.r_min}, {grid.r_max})")
        object.__setattr__(self, "tracked_radii", radii)


@dataclass(frozen=True, eq=False)
class WarpedFlowState:
    t: float
    warped: WarpedProfile
    step_count: int = 0


# -- DeTurck flow ------------------------------------------------------------


def deturck_rhs(profile: MetricProfile) -> np.ndarray:
    """``df/dt`` at every node; zero on the two Dirichlet boundary nodes."""
    n = profile.dimension
    r, f, h = profile.r, profile.f, profile.grid.spacing
    f_r = diff1(f, h)
    f_rr = diff2(f, h)
    rhs = (
        f_rr / f**2
        - 2.0 * f_r**2 / f**3
        + ((n - 1) / r - 1.0 / (r * f**2)) * f_r
        - (n - 1) / (r**2 * f) * (f**2 - 1.0)
    )
    rhs[0] = rhs[-1] = 0.0
    return rhs


def deturck_jacobian(profile: MetricProfile):
    """Tridiagonal Jacobian of :func:`deturck_rhs` with respect to nodal ``f``.

    Returns ``(lower, diag, upper)`` with ``lower[i] = dL_i/df_{i-1}`` and
    ``upper[i] = dL_i/df_{i+1}``; boundary rows are zero.
    """
    n = profile.dimension
    r, f, h = profile.r, profile.f, profile.grid.spacing
    f_r = diff1(f, h)
    f_rr = diff2(f, h)
    advect = (n - 1) / r - 1.0 / (r * f**2)
    slope = (-4.0 * f_r / f**3 + advect) / (2.0 * h)
    upper = 1.0 / (f**2 * h**2) + slope
    lower = 1.0 / (f**2 * h**2) - slope
    diag = (
        -2.0 * f_rr / f**3
        - 2.0 / (f**2 * h**2)
        + 6.0 * f_r**2 / f**4
        + 2.0 * f_r / (r * f**3)
        - (n - 1) * (1.0 + f**-2) / r**2
    )
    for band in (lower, diag, upper):
        band[0] = band[-1] = 0.0
    return lower, diag, upper


def stable_dt(profile: MetricProfile, config: SchemeConfig) -> float:
    """Largest time step the scheme should take.

    Explicit Euler is limited by the diffusion coefficient ``1/f^2``:
    ``cfl_safety * h^2 * min(f^2) / 2``. Crank-Nicolson is unconditionally
    stable, so it uses ``fixed_dt`` or, failing that, one grid spacing.
    """
    h = profile.grid.spacing
    if config.scheme is Scheme.EXPLICIT_EULER:
        return config.cfl_safety * h**2 * float(np.min(profile.f**2)) / 2.0
    return config.fixed_dt if config.fixed_dt is not None else h


def _mass(f, r):
    return 0.5 * r * (1.0 - f**-2)


def inner_mass_gradient(profile: MetricProfile) -> float:
    """``-3 m_0 + 4 m_1 - m_2``, the quantity conserved by the inner boundary."""
    m = _mass(profile.f[:3], profile.r[:3])
    return -3.0 * m[0] + 4.0 * m[1] - m[2]


def _inner_node(f: np.ndarray, r: np.ndarray, gradient: float) -> float:
    m = _mass(f[1:3], r[1:3])
    m0 = (4.0 * m[0] - m[1] - gradient) / 3.0
    ratio = 2.0 * m0 / r[0]
    if not ratio < 1.0:
        raise StabilityError("inner boundary mass reached the horizon 2m = r")
    return (1.0 - ratio) ** -0.5


def _accept(f_new: np.ndarray, what: str = "f") -> np.ndarray:
    if not np.all(np.isfinite(f_new)):
        raise StabilityError(f"non-finite {what} after step")
    if np.any(f_new <= 0):
        raise StabilityError(f"non-positive {what} after step")
    return f_new


def _crank_nicolson(profile: MetricProfile, dt: float, config: SchemeConfig) -> np.ndarray:
    r, f_old = profile.r, profile.f
    gradient = inner_mass_gradient(profile)
    half_old = 0.5 * dt * deturck_rhs(profile)
    u = f_old + 2.0 * half_old
    weights = np.array([-3.0, 4.0, -1.0])
    for _ in range(config.max_newton_iters):
        if not np.all(np.isfinite(u)) or np.any(u <= 0):
            raise StabilityError("Newton iterate left the positive cone")
        trial = profile.with_f(u)
        residual = u - f_old - half_old - 0.5 * dt * deturck_rhs(trial)
        residual[0] = weights @ _mass(u[:3], r[:3]) - gradient
        lower, diag, upper = deturck_jacobian(trial)
        # Banded storage (1 sub-, 2 super-diagonals); row 0 is the boundary row.
        bands = np.zeros((4, u.size))
        bands[1, 1:] = -0.5 * dt * upper[:-1]
        bands[2] = 1.0 - 0.5 * dt * diag
        bands[3, :-1] = -0.5 * dt * lower[1:]
        dm_df = weights * r[:3] * u[:3] ** -3
        bands[2, 0], bands[1, 1], bands[0, 2] = dm_df
        delta = solve_banded((1, 2), bands, -residual)
        u = u + delta
        if np.max(np.abs(delta)) <= config.newton_tol * max(1.0, float(np.max(np.abs(u)))):
            return u
    raise ConvergenceError(
        f"Newton iteration did not converge in {config.max_newton_iters} iterations"
    )


def step_deturck(state: FlowState, dt: float, config: SchemeConfig) -> FlowState:
    """Advance the DeTurck flow by ``dt``.

    The outer boundary node is held fixed and the inner one follows the
    frozen mass gradient described in the module docstring. The explicit
    scheme does not refuse steps above :func:`stable_dt`; an unstable step shows up as a :class:`StabilityError` once the solution
    stops being finite or positive.
    """
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    profile = state.profile
    if config.scheme is Scheme.EXPLICIT_EULER:
        f_new = profile.f + dt * deturck_rhs(profile)
        f_new = _accept(f_new)
        f_new[0] = _inner_node(f_new, profile.r, inner_mass_gradient(profile))
    else:
        f_new = _crank_nicolson(profile, dt, config)
    f_new[-1] = profile.f[-1]
    return FlowState(
        t=state.t + dt,
        profile=profile.with_f(_accept(f_new)),
        tracked_radii=state.tracked_radii,
        step_count=state.step_count + 1,
    )


def gauge_field(profile: MetricProfile) -> np.ndarray:
    """DeTurck gauge term ``(n-1)/r (f^2 - 1) + f_r/f`` at every node.

    This is the covariant radial component ``X_r``; the vector itself is
    ``X^r = X_r / f^2`` (see :func:`gauge_vector`).
    """
    n = profile.dimension
    r, f = profile.r, profile.f
    return (n - 1) / r * (f**2 - 1.0) + diff1(f, profile.grid.spacing) / f


def gauge_vector(profile: MetricProfile) -> np.ndarray:
    """Contravariant radial component of the gauge field, ``X_r / f^2``.

    With this vector ``L_X g`` cancels the tangential part of ``-2 Rc``,
    which is what keeps ``r`` an area radius along the flow.
    """
    return gauge_field(profile) / profile.f**2


# -- warped-product Ricci flow ----------------------------------------------


def warped_rhs(warped: WarpedProfile):
    """``(psi_t, phi_t)`` of the Ricci flow in ``x`` coordinates.

    ``d/ds = phi^-1 d/dx``, so ``psi_ss = psi_xx/phi^2 - psi_x phi_x/phi^3``.
    Boundary entries are zero.
    """
    n = warped.dimension
    h = warped.grid.spacing
    phi, psi = warped.phi, warped.psi
    psi_x = diff1(psi, h)
    psi_s = psi_x / phi
    psi_ss = diff2(psi, h) / phi**2 - psi_x * diff1(phi, h) / phi**3
    psi_t = psi_ss - (n - 1) * (1.0 - psi_s**2) / psi
    phi_t = n * psi_ss / psi * phi
    for arr in (psi_t, phi_t):
        arr[0] = arr[-1] = 0.0
    return psi_t, phi_t


def step_warped_ricci(state: WarpedFlowState, dt: float, config: SchemeConfig) -> WarpedFlowState:
    """One explicit Euler step of the warped Ricci flow."""
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    if config.scheme is not Scheme.EXPLICIT_EULER:
        raise DomainError("the warped Ricci flow is only integrated explicitly")
    warped = state.warped
    psi_t, phi_t = warped_rhs(warped)
    psi = _accept(warped.psi + dt * psi_t, "psi")
    phi = _accept(warped.phi + dt * phi_t, "phi")
    return WarpedFlowState(
        t=state.t + dt,
        warped=WarpedProfile(warped.grid, phi, psi, warped.dimension),
        step_count=state.step_count + 1,
    )


# -- scalar curvature evolution check ---------------------------------------

# Nodes at each end excluded from the residual: the boundary nodes do not
# follow the PDE and the wide stencils below reach two nodes further in.
RESIDUAL_PAD = 3


def scalar_evolution_residual(before: FlowState, after: FlowState, gauge: str = "deturck") -> np.ndarray:
    """Pointwise defect of ``R_t = Lap R + 2|Rc|^2 (+ X.grad R)``.

    ``R_t`` is a forward difference across the step from ``before`` to
    ``after``, everything else is evaluated on ``before``. For
    ``gauge="deturck"`` the Lie derivative adds the transport term
    ``X^r R_r``; ``gauge="ricci"`` omits it. The result is NaN on the
    ``RESIDUAL_PAD`` nodes at each end.
    """
    if gauge not in ("ricci", "deturck"):
        raise DomainError(f"unknown gauge {gauge!r}")
    grid = before.profile.grid
    if after.profile.grid != grid:
        raise DomainError("states live on different grids")
    if after.step_count != before.step_count + 1 or not after.t > before.t:
        raise DomainError("states are not consecutive steps")

    dt = after.t - before.t
    h = grid.spacing
    profile = before.profile
    f = profile.f
    field0 = curvature(profile)
    field1 = curvature(after.profile)
    R = field0.scalar

    R_r = diff1(R, h, CURVATURE_ORDER)
    R_s = R_r / f
    R_ss = diff1(R_s, h, CURVATURE_ORDER) / f
    laplacian = R_ss + field0.mean_curv * R_s

    residual = (field1.scalar - R) / dt - laplacian - 2.0 * field0.ricci_norm_sq
    if gauge == "deturck":
        residual = residual - gauge_vector(profile) * R_r
    residual = np.abs(residual)
    residual[:RESIDUAL_PAD] = np.nan
    residual[-RESIDUAL_PAD:] = np.nan
    return residual
