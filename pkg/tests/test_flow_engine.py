import numpy as np
import pytest
import sympy as sp

from hawkflow.errors import ConvergenceError, DomainError, StabilityError
from hawkflow.flow_engine import (
    RESIDUAL_PAD,
    FlowState,
    Scheme,
    SchemeConfig,
    WarpedFlowState,
    deturck_jacobian,
    deturck_rhs,
    gauge_field,
    gauge_vector,
    inner_mass_gradient,
    scalar_evolution_residual,
    stable_dt,
    step_deturck,
    step_warped_ricci,
    warped_rhs,
)
from hawkflow.radial_metric import (
    MetricProfile,
    WarpedProfile,
    build_grid,
    perturbed_ale_profile,
    schwarzschild_profile,
)

CN = SchemeConfig(scheme=Scheme.CRANK_NICOLSON, fixed_dt=0.05)

_r = sp.symbols("r", positive=True)
_f = (1 - 2 / _r) ** sp.Rational(-1, 2)
_fr, _frr = sp.diff(_f, _r), sp.diff(_f, _r, 2)


def _symbolic(expr, at=4):
    return float(sp.N(expr.subs(_r, at), 30))


@pytest.fixture
def fine_schwarzschild():
    # node 100 sits at r = 4
    return schwarzschild_profile(1.0, build_grid(3.0, 10.0, 701))


# -- right-hand side ---------------------------------------------------------

def test_flat_rhs_vanishes():
    np.testing.assert_array_equal(deturck_rhs(MetricProfile(build_grid(1.0, 4.0, 32), np.ones(32))), 0.0)


def test_constant_profile_rhs():
    c = 1.5
    p = MetricProfile(build_grid(1.0, 3.0, 201), np.full(201, c))
    assert deturck_rhs(p)[100] == pytest.approx(-(c**2 - 1) / (4 * c), rel=1e-13)


def test_schwarzschild_rhs_against_symbolic(fine_schwarzschild):
    expr = (_frr / _f**2 - 2 * _fr**2 / _f**3 + (1 / _r - 1 / (_r * _f**2)) * _fr
            - (_f**2 - 1) / (_r**2 * _f))
    assert deturck_rhs(fine_schwarzschild)[100] == pytest.approx(_symbolic(expr), rel=1e-4)


def test_boundary_rows_are_zero(cubic_profile):
    rhs = deturck_rhs(cubic_profile)
    assert rhs[0] == rhs[-1] == 0.0


def test_jacobian_matches_finite_differences():
    p = perturbed_ale_profile("cubic", build_grid(3.0, 20.0, 40), M=1.0, a=1.0)
    lower, diag, upper = deturck_jacobian(p)
    eps = 1e-7
    base = deturck_rhs(p)
    for j in range(1, p.f.size - 1):
        bumped = p.f.copy()
        bumped[j] += eps
        column = (deturck_rhs(p.with_f(bumped)) - base) / eps
        assert column[j] == pytest.approx(diag[j], rel=1e-5, abs=1e-9)
        assert column[j - 1] == pytest.approx(upper[j - 1] if j > 1 else 0.0, rel=1e-5, abs=1e-9)
        if j + 1 < p.f.size - 1:
            assert column[j + 1] == pytest.approx(lower[j + 1], rel=1e-5, abs=1e-9)


# -- time step ---------------------------------------------------------------

def test_stable_dt_examples():
    g = build_grid(1.0, 2.5, 16)
    assert g.spacing == pytest.approx(0.1)
    assert stable_dt(MetricProfile(g, np.ones(16)), SchemeConfig()) == pytest.approx(0.002)
    assert stable_dt(MetricProfile(g, np.full(16, 2.0)), SchemeConfig()) == pytest.approx(0.008)
    assert stable_dt(MetricProfile(g, np.ones(16)), CN) == 0.05


@pytest.mark.parametrize("kwargs", [dict(cfl_safety=1.0), dict(cfl_safety=0.0), dict(newton_tol=0.0),
                                    dict(max_newton_iters=0), dict(fixed_dt=-1.0), dict(surface_cfl=0.0)])
def test_scheme_config_validation(kwargs):
    with pytest.raises(DomainError):
        SchemeConfig(**kwargs)


def test_scheme_from_string():
    assert SchemeConfig(scheme="crank_nicolson").scheme is Scheme.CRANK_NICOLSON


# -- stepping ----------------------------------------------------------------

@pytest.mark.parametrize("config", [SchemeConfig(), CN])
def test_flat_fixed_point(config):
    g = build_grid(1.0, 10.0, 64)
    state = FlowState(0.5, MetricProfile(g, np.ones(64)), (2.0,))
    after = step_deturck(state, 0.3, config)
    np.testing.assert_array_equal(after.profile.f, 1.0)
    assert after.t == pytest.approx(0.8)
    assert after.step_count == 1 and after.tracked_radii == (2.0,)


def test_far_zone_decays_monotonically(cubic_profile):
    config = SchemeConfig()
    state = FlowState(0.0, cubic_profile)
    far = cubic_profile.r > 50
    dt = stable_dt(cubic_profile, config)
    previous = np.max(np.abs(cubic_profile.f[far] - 1))
    for _ in range(100):
        state = step_deturck(state, dt, config)
        current = np.max(np.abs(state.profile.f[far] - 1))
        assert current <= previous
        previous = current


def test_oversized_explicit_step_blows_up():
    p = perturbed_ale_profile("cubic", build_grid(3.0, 50.0, 256), M=1.0, a=1.0)
    config = SchemeConfig()
    state = FlowState(0.0, p)
    dt = 10 * stable_dt(p, config)
    with pytest.raises(StabilityError):
        for _ in range(2000):
            state = step_deturck(state, dt, config)


def test_newton_failure_is_reported(cubic_profile):
    config = SchemeConfig(scheme="crank_nicolson", max_newton_iters=1)
    with pytest.raises(ConvergenceError):
        step_deturck(FlowState(0.0, cubic_profile), 0.5, config)


def test_non_positive_dt_rejected(cubic_profile):
    with pytest.raises(DomainError):
        step_deturck(FlowState(0.0, cubic_profile), 0.0, SchemeConfig())


@pytest.mark.parametrize("config", [SchemeConfig(), SchemeConfig(scheme="crank_nicolson")])
def test_boundary_treatment(cubic_profile, config):
    state = FlowState(0.0, cubic_profile)
    gradient = inner_mass_gradient(cubic_profile)
    dt = stable_dt(cubic_profile, config)
    for _ in range(20):
        state = step_deturck(state, dt, config)
    assert state.profile.f[-1] == cubic_profile.f[-1]
    assert state.profile.f[0] != cubic_profile.f[0]
    assert inner_mass_gradient(state.profile) == pytest.approx(gradient, rel=1e-9)


def test_schemes_agree_as_dt_shrinks():
    p = perturbed_ale_profile("cubic", build_grid(3.0, 30.0, 128), M=1.0, a=1.0)
    explicit, implicit = SchemeConfig(), SchemeConfig(scheme="crank_nicolson")
    dt = stable_dt(p, explicit)
    gaps = []
    for k in (1, 2):
        a = b = FlowState(0.0, p)
        for _ in range(50 * k):
            a = step_deturck(a, dt / k, explicit)
            b = step_deturck(b, dt / k, implicit)
        gaps.append(np.max(np.abs(a.profile.f - b.profile.f)))
    # explicit Euler is first order in time
    assert gaps[0] < 1e-4
    assert gaps[0] / gaps[1] == pytest.approx(2.0, rel=0.1)


def test_flow_state_validation(cubic_profile):
    with pytest.raises(DomainError):
        FlowState(-1.0, cubic_profile)
    with pytest.raises(DomainError):
        FlowState(0.0, cubic_profile, (250.0,))
    with pytest.raises(DomainError):
        FlowState(0.0, cubic_profile, (3.0,))


# -- gauge field -------------------------------------------------------------

def test_gauge_field_examples(fine_schwarzschild):
    g = build_grid(1.0, 3.0, 201)
    np.testing.assert_array_equal(gauge_field(MetricProfile(g, np.ones(201))), 0.0)
    assert gauge_field(MetricProfile(g, np.full(201, 2.0)))[0] == pytest.approx(3.0)
    expr = (_f**2 - 1) / _r + _fr / _f
    assert gauge_field(fine_schwarzschild)[100] == pytest.approx(_symbolic(expr), rel=1e-4)
    np.testing.assert_allclose(gauge_vector(fine_schwarzschild),
                               gauge_field(fine_schwarzschild) / fine_schwarzschild.f**2)


# -- warped Ricci flow ------------------------------------------------------

def test_warped_flat_fixed_point():
    g = build_grid(1.0, 5.0, 64)
    w = WarpedProfile(g, np.ones(64), g.nodes)
    psi_t, phi_t = warped_rhs(w)
    np.testing.assert_allclose(psi_t, 0.0, atol=1e-11)
    np.testing.assert_allclose(phi_t, 0.0, atol=1e-11)
    after = step_warped_ricci(WarpedFlowState(0.0, w), 1e-3, SchemeConfig())
    np.testing.assert_allclose(after.warped.psi, g.nodes, atol=1e-15)


def test_shrinking_cylinder():
    g = build_grid(0.0 + 1.0, 5.0, 32)
    c = 2.5
    psi_t, phi_t = warped_rhs(WarpedProfile(g, np.ones(32), np.full(32, c)))
    np.testing.assert_allclose(psi_t[1:-1], -1.0 / c, rtol=1e-14)
    np.testing.assert_array_equal(phi_t, 0.0)


def test_warped_schwarzschild_against_symbolic(fine_schwarzschild):
    psi_t, _ = warped_rhs(WarpedProfile.from_metric(fine_schwarzschild))
    psi_s = 1 / _f
    psi_ss = sp.diff(psi_s, _r) / _f
    expr = psi_ss - (1 - psi_s**2) / _r
    assert psi_t[100] == pytest.approx(_symbolic(expr), rel=1e-4)
    # the area radius moves against the gauge vector
    assert psi_t[100] == pytest.approx(-gauge_vector(fine_schwarzschild)[100], rel=1e-4)


def test_warped_flow_is_explicit_only():
    g = build_grid(1.0, 5.0, 32)
    with pytest.raises(DomainError):
        step_warped_ricci(WarpedFlowState(0.0, WarpedProfile(g, np.ones(32), g.nodes)), 0.1,
                          SchemeConfig(scheme="crank_nicolson"))


# -- scalar curvature residual ----------------------------------------------

def test_flat_residual_is_zero():
    g = build_grid(1.0, 10.0, 64)
    before = FlowState(0.0, MetricProfile(g, np.ones(64)))
    after = step_deturck(before, 1e-3, SchemeConfig())
    res = scalar_evolution_residual(before, after)
    assert np.all(np.isnan(res[:RESIDUAL_PAD])) and np.all(np.isnan(res[-RESIDUAL_PAD:]))
    np.testing.assert_array_equal(res[RESIDUAL_PAD:-RESIDUAL_PAD], 0.0)


def _residuals(grid):
    p = perturbed_ale_profile("cubic", grid, M=1.0, a=1.0)
    before = FlowState(0.0, p)
    after = step_deturck(before, stable_dt(p, SchemeConfig()), SchemeConfig())
    return (scalar_evolution_residual(before, after, "deturck"),
            scalar_evolution_residual(before, after, "ricci"))


def test_residual_shrinks_and_separates_gauges(default_grid):
    coarse, ricci = _residuals(default_grid)
    fine, _ = _residuals(default_grid.refined())
    assert np.nanmax(coarse) / np.nanmax(fine) >= 2.0
    assert np.nanmax(ricci / coarse) >= 10.0


def test_residual_argument_checks(cubic_profile):
    before = FlowState(0.0, cubic_profile)
    after = step_deturck(before, 1e-4, SchemeConfig())
    with pytest.raises(DomainError):
        scalar_evolution_residual(before, after, "harmonic")
    with pytest.raises(DomainError):
        scalar_evolution_residual(after, before)
