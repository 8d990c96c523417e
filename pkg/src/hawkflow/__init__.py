"""Hamilton-DeTurck Ricci flow of rotationally symmetric 3-metrics, coupled
with the ``H/R`` mean curvature flow of coordinate spheres, and the Hawking
mass along it."""

from .errors import (
    ConfigError,
    ConvergenceError,
    DomainError,
    HawkflowError,
    HorizonError,
    IoError,
    NonPositiveCurvatureError,
    SingularSpeedError,
    StabilityError,
)
from .radial_metric import (
    CubicMassAspect,
    CurvatureField,
    MetricProfile,
    RadialGrid,
    WarpedProfile,
    arc_length,
    area,
    build_grid,
    curvature,
    hawking_mass,
    mean_curvature,
    perturbed_ale_profile,
    schwarzschild_profile,
)
from .flow_engine import (
    FlowState,
    Scheme,
    SchemeConfig,
    WarpedFlowState,
    deturck_rhs,
    gauge_field,
    scalar_evolution_residual,
    stable_dt,
    step_deturck,
    step_warped_ricci,
)
from .surface_flow import (
    MassSample,
    MassTrace,
    SpeedKind,
    mass_rate,
    mass_rate_simplified,
    partial_t_mass,
    run_coupled,
    speed,
    step_surface,
)
from .diagnostics import (
    DecayReport,
    MonotonicityReport,
    ale_decay_report,
    convergence_order,
    find_monotonicity_radius,
    identity_check_dm_dr,
    positivity_monitor,
)
from .config import RunConfig, parse_config

__version__ = "0.1.0"
