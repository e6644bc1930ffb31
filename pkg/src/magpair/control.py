"""Field-angle controllers for regulating the pair separation.

Every law maps the measured separation to an in-plane field angle in degrees.
Holding ``psi`` at the zero-force angle keeps the radius fixed. Angles below
it attract, angles above it repel. A full controller is the fixed pipeline

    inner law -> envelope -> smoother -> saturate

assembled by :class:`ControllerStack`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

from magpair.errors import ConfigError, DomainError, ModelInapplicableError
from magpair.physics import PSI_STAR, DerivedConstants

PSI_MIN, PSI_MAX = 0.0, 90.0

BRANCH_REPULSION = "repulsion"
BRANCH_INNER = "inner"
BRANCH_ATTRACTION = "attraction"

CONTROLLER_KINDS = ("P", "PID", "PID_PD")


def saturate(psi_raw: float) -> float:
    """Clamp a commanded angle to [0, 90] degrees."""
    if not math.isfinite(psi_raw):
        raise DomainError(f"cannot saturate non-finite angle {psi_raw!r}")
    return min(PSI_MAX, max(PSI_MIN, psi_raw))


@dataclass(frozen=True)
class EnvelopeConfig:
    """Radius band in which the inner law is trusted [m].

    Below ``r_min`` the field is set for full repulsion, above ``r_max`` for
    full attraction. ``epsilon`` is the radius under which the model is void.
    """

    r_min: float = 300e-6
    r_max: float = 700e-6
    epsilon: float = 100e-6

    def __post_init__(self):
        values = (self.epsilon, self.r_min, self.r_max)
        if not all(math.isfinite(v) for v in values):
            raise ConfigError("envelope radii must be finite")
        if not 0 < self.epsilon < self.r_min < self.r_max:
            raise ConfigError(
                f"envelope needs 0 < epsilon < r_min < r_max, got "
                f"epsilon={self.epsilon!r}, r_min={self.r_min!r}, r_max={self.r_max!r}"
            )


@dataclass(frozen=True)
class PidConfig:
    """Discrete PID gains.

    Errors are measured in units of ``error_unit_scale`` metres (micrometres by
    default). ``k_i`` and ``k_d`` act per step: the integral is a plain running
    sum and the derivative a plain difference, so both depend on the step size
    they were tuned at (see :meth:`rescaled`).
    """

    k_p: float = 0.5
    k_i: float = 5e-5
    k_d: float = 20.0
    error_unit_scale: float = 1e-6

    def __post_init__(self):
        for name in ("k_p", "k_i", "k_d", "error_unit_scale"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if self.k_p < 0:
            raise ConfigError(f"k_p must be >= 0, got {self.k_p!r}")
        if not self.error_unit_scale > 0:
            raise ConfigError("error_unit_scale must be > 0")

    def rescaled(self, step_ratio: float) -> "PidConfig":
        """Equivalent per-step gains for a step ``step_ratio`` times the tuning step."""
        return replace(self, k_i=self.k_i * step_ratio, k_d=self.k_d / step_ratio)


@dataclass(frozen=True, slots=True)
class PidState:
    integral: float = 0.0  # accumulated integral term [deg]
    prev_error: float = 0.0
    initialized: bool = False


@dataclass(frozen=True, slots=True)
class SmootherConfig:
    """Gains and memory of the cascade PD stage that shapes the applied angle.

    Gains are checked by :meth:`validate` where configurations enter the
    system, not on every per-step copy.
    """

    k_p2: float = 0.03
    k_d2: float = 0.01
    prev_applied: Optional[float] = None
    prev_angle_error: float = 0.0

    def validate(self) -> "SmootherConfig":
        if not (math.isfinite(self.k_p2) and 0 < self.k_p2 <= 1):
            raise ConfigError(f"k_p2 must lie in (0, 1], got {self.k_p2!r}")
        if not math.isfinite(self.k_d2):
            raise ConfigError("k_d2 must be finite")
        return self

    def rescaled(self, step_ratio: float) -> "SmootherConfig":
        # k_d2 multiplies a per-step difference of a per-step rate: step-invariant
        return replace(self, k_p2=min(1.0, self.k_p2 * step_ratio))

    def reset(self) -> "SmootherConfig":
        return replace(self, prev_applied=None, prev_angle_error=0.0)


def p_command(r: float, r_des: float, k_p: float, scale: float = 1e-6, *, signed: bool = False) -> float:
    """Proportional law around the zero-force angle.

    With ``signed=False`` the error magnitude is used, so any deviation pulls
    the agents together. ``signed=True`` uses ``r - r_des`` and repels when the
    pair is too close.
    """
    error = (r - r_des) / scale
    if not signed:
        error = abs(error)
    return saturate(PSI_STAR - k_p * error)


def pid_command(r: float, r_des: float, cfg: PidConfig, state: PidState) -> Tuple[float, PidState]:
    """One PID update; returns the saturated angle and the new memory.

    The derivative uses the previous error, which on the first call is taken
    equal to the current one. The integral is not advanced while the
    unsaturated command is already past a limit in the direction the update
    would push it.
    """
    error = (r - r_des) / cfg.error_unit_scale
    prev = state.prev_error if state.initialized else error
    p_term = cfg.k_p * error
    d_term = cfg.k_d * (error - prev)
    increment = cfg.k_i * error

    raw = PSI_STAR - (p_term + state.integral + d_term)
    winding_up = (raw < PSI_MIN and increment > 0) or (raw > PSI_MAX and increment < 0)
    integral = state.integral if winding_up else state.integral + increment

    psi = saturate(PSI_STAR - (p_term + integral + d_term))
    return psi, PidState(integral=integral, prev_error=error, initialized=True)


def envelope_branch(r: float, cfg: EnvelopeConfig) -> str:
    if r <= cfg.epsilon:
        raise ModelInapplicableError(f"r={r:g} m is at or below epsilon={cfg.epsilon:g} m")
    if r < cfg.r_min:
        return BRANCH_REPULSION
    if r > cfg.r_max:
        return BRANCH_ATTRACTION
    return BRANCH_INNER


def envelope(r: float, inner: float, cfg: EnvelopeConfig) -> float:
    """Override ``inner`` with full repulsion/attraction outside the trusted band."""
    branch = envelope_branch(r, cfg)
    if branch == BRANCH_REPULSION:
        return PSI_MAX
    if branch == BRANCH_ATTRACTION:
        return PSI_MIN
    return inner


def smooth(psi_cmd: float, cfg_state: SmootherConfig) -> Tuple[float, SmootherConfig]:
    """Move the applied angle a PD-shaped fraction of the way toward ``psi_cmd``."""
    if not (math.isfinite(psi_cmd) and PSI_MIN <= psi_cmd <= PSI_MAX):
        raise DomainError(f"smoother input must lie in [0, 90], got {psi_cmd!r}")
    prev = psi_cmd if cfg_state.prev_applied is None else cfg_state.prev_applied
    angle_error = psi_cmd - prev
    out = saturate(
        prev + cfg_state.k_p2 * angle_error + cfg_state.k_d2 * (angle_error - cfg_state.prev_angle_error)
    )
    return out, SmootherConfig(cfg_state.k_p2, cfg_state.k_d2, out, angle_error)


def bang_bang_phi(phi: float, phi_des: float, deadband: float, consts: DerivedConstants) -> float:
    """Pick the sign of the zero-force angle to steer the bearing ``phi``.

    Either sign holds the radius; positive angles turn ``phi`` upward. Inside
    the deadband the positive angle is kept and the resulting drift accepted.
    """
    error = phi_des - phi
    if error < -deadband:
        return -consts.psi_star
    return consts.psi_star


class ControllerStack:
    """Configured controller pipeline with its mutable memory.

    One instance drives one scenario run; call :meth:`reset` before reuse.

    Args:
        kind: ``"P"``, ``"PID"`` or ``"PID_PD"``.
        envelope_cfg: trusted radius band.
        pid: gains for the inner law. For ``"P"`` only ``k_p`` and the error
            scale are used.
        smoother: cascade stage gains, used by ``"PID_PD"`` only.
        signed_error: P law only; use ``r - r_des`` instead of its magnitude.
    """

    def __init__(
        self,
        kind: str,
        envelope_cfg: EnvelopeConfig,
        pid: PidConfig,
        smoother: Optional[SmootherConfig] = None,
        signed_error: bool = True,
    ):
        if kind not in CONTROLLER_KINDS:
            raise ConfigError(f"unknown controller kind {kind!r}; expected one of {CONTROLLER_KINDS}")
        if kind == "PID_PD" and smoother is None:
            smoother = SmootherConfig()
        if smoother is not None:
            smoother.validate()
        self.kind = kind
        self.envelope_cfg = envelope_cfg
        self.pid = pid
        self.smoother = smoother
        self.signed_error = signed_error
        self.reset()

    def reset(self):
        self._pid_state = PidState()
        if self.smoother is not None:
            self.smoother = self.smoother.reset()

    def command(self, r: float, r_des: float) -> Tuple[float, float, str]:
        """Return ``(psi_cmd, psi_applied, branch)`` for the measured radius.

        ``psi_cmd`` is the envelope output, ``psi_applied`` what reaches the field.
        """
        branch = envelope_branch(r, self.envelope_cfg)
        if self.kind == "P":
            inner = p_command(r, r_des, self.pid.k_p, self.pid.error_unit_scale, signed=self.signed_error)
        else:
            # runs on every step so derivative memory stays current under the envelope
            inner, self._pid_state = pid_command(r, r_des, self.pid, self._pid_state)

        if branch == BRANCH_REPULSION:
            psi_cmd = PSI_MAX
        elif branch == BRANCH_ATTRACTION:
            psi_cmd = PSI_MIN
        else:
            psi_cmd = inner

        applied = psi_cmd
        if self.kind == "PID_PD":
            applied, self.smoother = smooth(psi_cmd, self.smoother)
        return psi_cmd, saturate(applied), branch
