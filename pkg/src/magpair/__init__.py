"""Simulation and field-angle control of a magnetically interacting microrobot pair."""

from magpair.control import (
    ControllerStack,
    EnvelopeConfig,
    PidConfig,
    PidState,
    SmootherConfig,
    bang_bang_phi,
    envelope,
    p_command,
    pid_command,
    saturate,
    smooth,
)
from magpair.dynamics import IntegratorConfig, SimState, integrate, step, velocities
from magpair.physics import (
    MU0,
    PSI_STAR,
    DerivedConstants,
    FieldOrientation,
    ForceComponents,
    PhysicalParams,
    derive_constants,
    dipole_field_at,
    force_components,
    magnetic_moment,
    min_field_magnitude,
    numeric_force_oracle,
)
from magpair.scenario import (
    ControllerSpec,
    Metrics,
    ScenarioSpec,
    Trace,
    compare,
    compute_metrics,
    run_scenario,
    sweep,
)

__version__ = "0.1.0"

TABLE1 = PhysicalParams(
    magnetization=1e4,
    agent_radius=250e-6,
    medium_viscosity=0.5,
    relative_permeability=1.0,
    max_error_angle=5.0,
)
