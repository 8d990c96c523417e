"""Oracle checks behind ``hawkflow verify``.

Each check returns a :class:`CheckResult`. Thresholds are fixed constants
here so the command line report and the test suite agree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .config import RunConfig
from .diagnostics import convergence_order, identity_check_dm_dr
from .errors import ConvergenceError, DomainError, StabilityError
from .flow_engine import FlowState, Scheme, SchemeConfig, scalar_evolution_residual, stable_dt, step_deturck
from .radial_metric import (
    MIN_POINTS,
    MetricProfile,
    RadialGrid,
    curvature,
    hawking_mass,
    perturbed_ale_profile,
    schwarzschild_profile,
)

SCALAR_FLAT_TOL = 1e-4
REFINEMENT_RATIO_MIN = 3.4
MASS_TOL = 1e-12
FLAT_STEPS = 10_000
FLAT_TOL = 1e-13
GAUGE_SEPARATION = 10.0
GAUGE_SHRINK_MIN = 2.0
ORDER_WINDOW = (1.7, 2.3)
CONVERGENCE_HORIZON = 0.5


@dataclass
class CheckResult:
    name: str
    status: str  # PASS, FAIL or SKIP
    value: Optional[float] = None
    threshold: Optional[str] = None
    details: Dict[str, object] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status != "FAIL"

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "value": self.value,
            "threshold": self.threshold,
            "details": self.details,
        }


def _status(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


def _schwarzschild_mass(grid: RadialGrid, M: float) -> float:
    # Keep the horizon off the grid when the config starts close to 2M.
    return M if grid.r_min > 2.0 * M else 0.45 * grid.r_min


def check_scalar_flatness(grid: RadialGrid, M: float = 1.0) -> CheckResult:
    M = _schwarzschild_mass(grid, M)
    coarse = float(np.max(np.abs(curvature(schwarzschild_profile(M, grid)).scalar)))
    fine = float(np.max(np.abs(curvature(schwarzschild_profile(M, grid.refined())).scalar)))
    ratio = coarse / fine if fine > 0 else np.inf
    ok = coarse <= SCALAR_FLAT_TOL and ratio >= REFINEMENT_RATIO_MIN
    return CheckResult("scalar_flatness", _status(ok), coarse,
                       f"max|R| <= {SCALAR_FLAT_TOL:g}, refinement ratio >= {REFINEMENT_RATIO_MIN}",
                       {"M": M, "max_R_refined": fine, "ratio": ratio})


def check_constant_mass(grid: RadialGrid, M: float = 1.0) -> CheckResult:
    M = _schwarzschild_mass(grid, M)
    profile = schwarzschild_profile(M, grid)
    dev = float(np.max(np.abs(hawking_mass(profile, profile.r) - M)))
    return CheckResult("constant_hawking_mass", _status(dev <= MASS_TOL), dev,
                       f"<= {MASS_TOL:g}", {"M": M})


def check_dm_dr_identity(config: RunConfig, k0_sign: float = 1.0) -> CheckResult:
    grid = config.grid
    coarse = identity_check_dm_dr(config.initial_profile(grid), k0_sign)
    fine = identity_check_dm_dr(config.initial_profile(grid.refined()), k0_sign)
    order = float(np.log2(coarse / fine)) if fine > 0 else np.inf
    ok = ORDER_WINDOW[0] <= order <= ORDER_WINDOW[1]
    return CheckResult("dm_dr_identity", _status(ok), coarse,
                       f"order under refinement in {ORDER_WINDOW}",
                       {"deviation_refined": fine, "order": order, "k0_sign": k0_sign})


def check_flat_fixed_point(grid: RadialGrid, steps: int = FLAT_STEPS) -> CheckResult:
    scheme = SchemeConfig()
    state = FlowState(0.0, MetricProfile(grid, np.ones(grid.n_points)))
    dt = stable_dt(state.profile, scheme)
    for _ in range(steps):
        state = step_deturck(state, dt, scheme)
    dev = float(np.max(np.abs(state.profile.f - 1.0)))
    return CheckResult("flat_fixed_point", _status(dev <= FLAT_TOL), dev, f"<= {FLAT_TOL:g}",
                       {"steps": steps})


def gauge_residuals(profile: MetricProfile, scheme: Optional[SchemeConfig] = None):
    """One explicit DeTurck step; residuals in both gauges plus the step size."""
    scheme = scheme or SchemeConfig()
    before = FlowState(0.0, profile)
    dt = stable_dt(profile, scheme)
    after = step_deturck(before, dt, scheme)
    return (scalar_evolution_residual(before, after, "deturck"),
            scalar_evolution_residual(before, after, "ricci"), dt)


def _curved_profile(config: RunConfig, grid: RadialGrid) -> MetricProfile:
    if config.family == "mass_aspect" and config.mass > 0:
        return config.initial_profile(grid)
    return perturbed_ale_profile("cubic", grid, M=min(1.0, 0.3 * grid.r_min), a=1.0)


def check_gauge_consistency(config: RunConfig) -> CheckResult:
    grid = config.grid
    res_c, ricci_c, dt_c = gauge_residuals(_curved_profile(config, grid))
    res_f, _, dt_f = gauge_residuals(_curved_profile(config, grid.refined()))
    max_c, max_f = float(np.nanmax(res_c)), float(np.nanmax(res_f))
    shrink = max_c / max_f if max_f > 0 else np.inf
    with np.errstate(divide="ignore", invalid="ignore"):
        separation = float(np.nanmax(ricci_c / res_c))
    h_c, h_f = grid.spacing, grid.refined().spacing
    ok = shrink >= GAUGE_SHRINK_MIN and separation >= GAUGE_SEPARATION
    return CheckResult(
        "gauge_consistency", _status(ok), max_c,
        f"shrink >= {GAUGE_SHRINK_MIN} under refinement, ricci/deturck >= {GAUGE_SEPARATION} at some node",
        {"max_residual_refined": max_f, "shrink": shrink, "separation": separation,
         "C_coarse": max_c / (h_c**2 + dt_c), "C_fine": max_f / (h_f**2 + dt_f),
         "max_ricci_residual": float(np.nanmax(ricci_c))},
    )


def refinement_levels(grid: RadialGrid):
    """Three nested grids ending near ``grid``; ``None`` if the coarsest is too small."""
    n_coarse = (grid.n_points - 1) // 4 + 1
    if n_coarse < MIN_POINTS:
        return None
    coarse = RadialGrid(grid.r_min, grid.r_max, n_coarse)
    medium = coarse.refined()
    return coarse, medium, medium.refined()


def observed_mass(config: RunConfig, grid: RadialGrid, scheme: SchemeConfig,
                  r_obs: float, horizon: float = CONVERGENCE_HORIZON) -> float:
    """Hawking mass at ``r_obs`` after evolving the initial data to ``horizon``."""
    state = FlowState(0.0, _curved_profile(config, grid))
    steps = int(np.ceil(horizon / stable_dt(state.profile, scheme)))
    dt = horizon / steps
    for _ in range(steps):
        state = step_deturck(state, dt, scheme)
    return hawking_mass(state.profile, r_obs)


def check_convergence_order(config: RunConfig) -> List[CheckResult]:
    levels = refinement_levels(config.grid)
    if levels is None:
        return [CheckResult(f"convergence_order_{s.value}", "SKIP", None,
                            f"order in {ORDER_WINDOW}",
                            {"reason": "insufficient refinement levels"}) for s in Scheme]
    coarse = levels[0]
    target = coarse.r_min + 0.03 * (coarse.r_max - coarse.r_min)
    r_obs = float(coarse.nodes[np.argmin(np.abs(coarse.nodes - target))])
    results = []
    for method in Scheme:
        scheme = SchemeConfig(scheme=method, cfl_safety=config.scheme.cfl_safety)
        values = [observed_mass(config, g, scheme, r_obs) for g in levels]
        order = convergence_order(*values)
        ok = ORDER_WINDOW[0] <= order <= ORDER_WINDOW[1]
        results.append(CheckResult(f"convergence_order_{method.value}", _status(ok), order,
                                   f"order in {ORDER_WINDOW}",
                                   {"r_obs": r_obs, "observables": values,
                                    "n_points": [g.n_points for g in levels]}))
    return results


def _guarded(name: str, check, *args) -> List[CheckResult]:
    """Run one check; a numerical breakdown becomes a FAIL carrying the error."""
    try:
        result = check(*args)
    except (StabilityError, ConvergenceError, DomainError) as exc:
        return [CheckResult(name, "FAIL", None, None, {"error": f"{type(exc).__name__}: {exc}"})]
    return result if isinstance(result, list) else [result]


def run_checks(config: RunConfig, k0_sign: float = 1.0) -> List[CheckResult]:
    """All checks in a fixed order; each one runs even if another breaks down."""
    M = config.mass if config.mass > 0 else 1.0
    grid = config.grid
    results = []
    results += _guarded("scalar_flatness", check_scalar_flatness, grid, M)
    results += _guarded("constant_hawking_mass", check_constant_mass, grid, M)
    results += _guarded("dm_dr_identity", check_dm_dr_identity, config, k0_sign)
    results += _guarded("flat_fixed_point", check_flat_fixed_point, grid)
    results += _guarded("gauge_consistency", check_gauge_consistency, config)
    results += _guarded("convergence_order", check_convergence_order, config)
    return results
