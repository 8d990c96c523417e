"""Acceptance criteria, one test each.

Every test prints a single ``PASS``/``FAIL`` line with the measured values
and the tolerance it was held to, then asserts the same condition. Run with
``pytest -v tests/test_acceptance.py`` or ``python tests/test_acceptance.py``.
"""

import math
import sys
import time

import numpy as np
import pytest

from hawkflow.cli import EXIT_OK, EXIT_SINGULAR, cmd_simulate
from hawkflow.config import config_from_mapping
from hawkflow.diagnostics import identity_check_dm_dr, is_monotone
from hawkflow.flow_engine import FlowState, SchemeConfig, deturck_rhs, stable_dt, step_deturck
from hawkflow.radial_metric import (
    MetricProfile,
    build_grid,
    curvature,
    hawking_mass,
    perturbed_ale_profile,
    schwarzschild_profile,
)
from hawkflow.surface_flow import SpeedKind, mass_rate, mass_rate_simplified
from hawkflow.verification import gauge_residuals

DEFAULT_GRID = build_grid(3.0, 200.0, 2048)


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number:2d} {title}: {detail}", flush=True)
        return ok
    return emit


def _timed(fn, *args):
    start = time.perf_counter()
    value = fn(*args)
    return value, time.perf_counter() - start


def _run_defaults(tmp_path_factory, speed):
    out = tmp_path_factory.mktemp(f"default_{speed}")
    config = config_from_mapping({"surfaces.speed": speed, "output.directory": str(out)})
    return _timed(cmd_simulate, config)


@pytest.fixture(scope="module")
def forward_run(tmp_path_factory):
    return _run_defaults(tmp_path_factory, "forward")


@pytest.fixture(scope="module")
def backward_run(tmp_path_factory):
    return _run_defaults(tmp_path_factory, "backward")


def test_01_scalar_flatness(report):
    def measure():
        coarse = np.max(np.abs(curvature(schwarzschild_profile(1.0, DEFAULT_GRID)).scalar))
        fine = np.max(np.abs(curvature(schwarzschild_profile(1.0, DEFAULT_GRID.refined())).scalar))
        return coarse, fine
    (coarse, fine), elapsed = _timed(measure)
    ratio = coarse / fine
    ok = coarse <= 1e-4 and ratio >= 3.4 and elapsed < 1.0
    assert report(1, "scalar flatness", ok,
                  f"max|R|={coarse:.3e} (<=1e-4), refinement ratio={ratio:.2f} (>=3.4), "
                  f"time={elapsed:.2f}s (<1s)")


def test_02_constant_hawking_mass(report):
    def measure():
        p = schwarzschild_profile(1.0, DEFAULT_GRID)
        return np.max(np.abs(hawking_mass(p, p.r) - 1.0))
    dev, elapsed = _timed(measure)
    ok = dev <= 1e-12 and elapsed < 1.0
    assert report(2, "constant Hawking mass", ok,
                  f"max|m-1|={dev:.3e} (<=1e-12), time={elapsed:.2f}s (<1s)")


def test_03_mass_identity(report):
    def measure():
        grids = (DEFAULT_GRID, DEFAULT_GRID.refined(), DEFAULT_GRID.refined().refined())
        return [identity_check_dm_dr(perturbed_ale_profile("cubic", g, M=1.0, a=1.0)) for g in grids]
    devs, elapsed = _timed(measure)
    orders = [math.log2(devs[i] / devs[i + 1]) for i in range(2)]
    constants = [d / g.spacing**2 for d, g in zip(devs, (DEFAULT_GRID, DEFAULT_GRID.refined(),
                                                         DEFAULT_GRID.refined().refined()))]
    ok = all(1.7 <= o <= 2.3 for o in orders) and max(constants) <= 2 * min(constants) and elapsed < 5.0
    assert report(3, "dm/dr = r^2 R/4 identity", ok,
                  f"deviation={devs[0]:.3e}, orders={orders[0]:.3f},{orders[1]:.3f} (in [1.7,2.3]), "
                  f"C=dev/h^2 in [{min(constants):.4f},{max(constants):.4f}], time={elapsed:.2f}s (<5s)")


def test_04_flat_fixed_point(report):
    def measure():
        scheme = SchemeConfig()
        state = FlowState(0.0, MetricProfile(DEFAULT_GRID, np.ones(DEFAULT_GRID.n_points)))
        dt = stable_dt(state.profile, scheme)
        for _ in range(10_000):
            state = step_deturck(state, dt, scheme)
        return np.max(np.abs(state.profile.f - 1.0))
    dev, elapsed = _timed(measure)
    ok = dev <= 1e-13 and elapsed < 5.0
    assert report(4, "flat fixed point", ok,
                  f"max|f-1| after 1e4 steps={dev:.3e} (<=1e-13), time={elapsed:.2f}s (<5s)")


def test_05_gauge_consistency(report):
    def measure():
        rows = []
        for g in (DEFAULT_GRID, DEFAULT_GRID.refined(), DEFAULT_GRID.refined().refined()):
            res, ricci, dt = gauge_residuals(perturbed_ale_profile("cubic", g, M=1.0, a=1.0))
            rows.append((np.nanmax(res), np.nanmax(ricci / res), g.spacing**2 + dt))
        return rows
    rows, elapsed = _timed(measure)
    constants = [m / scale for m, _, scale in rows]
    shrink = [rows[i][0] / rows[i + 1][0] for i in range(2)]
    separation = rows[0][1]
    ok = (max(constants) <= 2 * min(constants) and all(s >= 2.0 for s in shrink)
          and separation >= 10.0 and elapsed < 30.0)
    assert report(5, "gauge consistency", ok,
                  f"residual/(h^2+dt) in [{min(constants):.4f},{max(constants):.4f}] (bounded within 2x), "
                  f"shrink={shrink[0]:.2f},{shrink[1]:.2f} (>=2), ricci/deturck={separation:.0f} (>=10), "
                  f"time={elapsed:.2f}s (<30s)")


def _leading_term_margin(traces):
    """Smallest ``dm/dt - 0.8 r/2`` over samples with ``r >= 10``, and how many are undefined."""
    margins = []
    for trace in traces:
        r = trace.column("r")
        rate = trace.column("dm_dt_formula")
        mask = r >= 10.0
        margins.extend(rate[mask] - 0.4 * r[mask])
    margins = np.asarray(margins)
    undefined = int(np.sum(~np.isfinite(margins)))
    finite = margins[np.isfinite(margins)]
    return (float(np.min(finite)) if finite.size else math.nan), undefined


def test_06_mass_monotone_forward(report, forward_run):
    result, elapsed = forward_run
    monotone = {t.sphere_id: is_monotone(t) for t in result.traces}
    r0 = result.report.r0 if result.report else None
    margin, undefined = _leading_term_margin(result.traces)
    ok = (result.exit_status == EXIT_OK and all(monotone.values()) and r0 is not None
          and r0 <= 10.0 and margin >= 0.0 and undefined == 0 and elapsed < 60.0)
    status = ", ".join(f"{k}:{'up' if v else 'no'}({t.status},{len(t.samples)})"
                       for (k, v), t in zip(monotone.items(), result.traces))
    assert report(6, "Hawking mass monotone non-decreasing", ok,
                  f"exit={result.exit_status}, r0={r0} (finite, <=10), spheres [{status}], "
                  f"min(dm/dt - 0.8 r/2)={margin:.3e} (>=0), undefined rates={undefined} (0), "
                  f"time={elapsed:.1f}s (<60s)")


def test_07_backward_variant(report, backward_run):
    result, elapsed = backward_run
    monotone = {t.sphere_id: is_monotone(t, decreasing=True) for t in result.traces}
    ok = result.exit_status == EXIT_OK and all(monotone.values()) and elapsed < 60.0
    status = ", ".join(f"{k}:{'down' if v else 'no'}({t.status},{len(t.samples)})"
                       for (k, v), t in zip(monotone.items(), result.traces))
    assert report(7, "backward speed, mass non-increasing", ok,
                  f"exit={result.exit_status}, spheres [{status}], time={elapsed:.1f}s (<60s)")


def test_08_rate_cancellation(report):
    def measure():
        rng = np.random.default_rng(8)
        worst = 0.0
        for M, a in zip(rng.uniform(0.1, 1.4, 10), rng.uniform(0.3, 3.0, 10)):
            p = perturbed_ale_profile("cubic", DEFAULT_GRID, M=M, a=a)
            f_t = deturck_rhs(p)
            for r in rng.uniform(3.0, 200.0, 100):
                kind = SpeedKind.FORWARD if rng.random() < 0.5 else SpeedKind.BACKWARD
                composite = mass_rate(p, f_t, r, kind, epsilon_R=1e-300)
                simple = mass_rate_simplified(p, f_t, r, kind)
                worst = max(worst, abs(composite - simple) / abs(simple))
        return worst
    worst, elapsed = _timed(measure)
    ok = worst <= 1e-10 and elapsed < 1.0
    assert report(8, "mass-rate cancellation", ok,
                  f"max relative gap over 1000 draws={worst:.3e} (<=1e-10), time={elapsed:.2f}s (<1s)")


def test_09_positivity(report, forward_run):
    result, _ = forward_run
    eps = result.eps_disc
    minimum = min(p["min_R"] for p in result.positivity)
    violations = sum(p["violated"] for p in result.positivity)
    ok = minimum >= -eps and violations == 0 and len(result.positivity) > 1
    assert report(9, "positivity of scalar curvature", ok,
                  f"interior min R over {len(result.positivity)} samples={minimum:.3e} "
                  f"(>= -eps_disc = {-eps:.3e})")


def test_10_scalar_flat_rejection(report, tmp_path):
    config = config_from_mapping({"initial_data.family": "schwarzschild", "initial_data.M": 1.0,
                                  "output.directory": str(tmp_path)})
    result, elapsed = _timed(cmd_simulate, config)
    ok = result.exit_status == EXIT_SINGULAR and elapsed < 1.0
    assert report(10, "scalar-flat rejection", ok,
                  f"exit={result.exit_status} (expected 4), time={elapsed:.2f}s (<1s)")


if __name__ == "__main__":
    sys.exit(pytest.main(["-q", "-p", "no:cacheprovider", __file__]))
