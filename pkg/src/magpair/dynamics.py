"""Overdamped pair dynamics under a commanded field angle.

At low Reynolds number the agents move at the velocity set by Stokes drag, so
the relative state ``(r, phi)`` obeys a first-order ODE. It is advanced with
fixed-step explicit Euler and a hard floor on ``r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, List, Tuple

from magpair.errors import DomainError
from magpair.physics import DerivedConstants


@dataclass(frozen=True, slots=True)
class SimState:
    """Relative state of the pair.

    ``phi`` is accumulated, never wrapped. ``clamped`` marks a state whose
    radius was lifted to the integrator floor on the step that produced it.
    """

    t: float
    r: float
    phi: float = 0.0
    psi_applied: float = float("nan")
    clamped: bool = False


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 1e-4
    epsilon_floor: float = 100e-6
    alpha: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise DomainError(f"dt must be > 0, got {self.dt!r}")
        if not (math.isfinite(self.epsilon_floor) and self.epsilon_floor > 0):
            raise DomainError(f"epsilon_floor must be > 0, got {self.epsilon_floor!r}")
        if not (math.isfinite(self.alpha) and -90.0 <= self.alpha <= 90.0):
            raise DomainError(f"alpha must lie in [-90, 90], got {self.alpha!r}")


def velocities(r: float, psi: float, alpha: float, consts: DerivedConstants) -> Tuple[float, float]:
    """Return ``(r_dot [m/s], phi_dot [rad/s])`` for field angles in degrees."""
    if not r > 0:
        raise DomainError(f"r must be > 0, got {r!r}")
    p = math.radians(psi)
    cos_a2 = math.cos(math.radians(alpha)) ** 2
    r_dot = consts.omega_t / r**4 * (1.0 - 3.0 * cos_a2 * math.cos(p) ** 2)
    phi_dot = consts.omega_r / r**3 * cos_a2 * math.sin(2.0 * p)
    return r_dot, phi_dot


def step(state: SimState, psi_command: float, cfg: IntegratorConfig, consts: DerivedConstants) -> SimState:
    """Advance ``state`` by one Euler step of ``cfg.dt`` under ``psi_command``."""
    if not math.isfinite(psi_command):
        raise DomainError(f"psi_command must be finite, got {psi_command!r}")
    r_dot, phi_dot = velocities(state.r, psi_command, cfg.alpha, consts)
    r = state.r + r_dot * cfg.dt
    clamped = r < cfg.epsilon_floor
    if clamped:
        r = cfg.epsilon_floor
    return SimState(
        t=state.t + cfg.dt,
        r=r,
        phi=state.phi + math.degrees(phi_dot) * cfg.dt,
        psi_applied=psi_command,
        clamped=clamped,
    )


def integrate(
    initial: SimState, psi_schedule: Iterable[float], cfg: IntegratorConfig, consts: DerivedConstants
) -> List[SimState]:
    """Open-loop trajectory under a per-step angle schedule, initial state included."""
    states = [initial]
    for psi in psi_schedule:
        states.append(step(states[-1], psi, cfg, consts))
    if len(states) == 1:
        raise DomainError("psi_schedule must not be empty")
    return states


def with_dt(cfg: IntegratorConfig, dt: float) -> IntegratorConfig:
    return replace(cfg, dt=dt)
