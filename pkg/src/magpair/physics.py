"""Closed-form dipole-dipole physics for a pair of identical magnetic agents.

Both agents are point dipoles whose moments are locked to the direction of a
shared applied field. The field direction is described in the pair's local
frame (radial, tangential, normal) by an in-plane angle ``psi`` and an
out-of-plane angle ``alpha``. Angles cross every public boundary in degrees.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from magpair.errors import (
    DegenerateConfigurationError,
    DomainError,
    ModelInapplicableError,
    NoValidFieldError,
    SingularityError,
)

MU0 = 4e-7 * math.pi  # vacuum permeability [H/m]

# zero-radial-force angle, where 1 - 3 cos^2(psi) vanishes
PSI_STAR = math.degrees(math.acos(math.sqrt(1.0 / 3.0)))


def _require_positive(**values):
    for name, value in values.items():
        if not (math.isfinite(value) and value > 0):
            raise DomainError(f"{name} must be finite and > 0, got {value!r}")


@dataclass(frozen=True)
class PhysicalParams:
    """Raw physical inputs describing the agents and their medium.

    Attributes:
        magnetization: magnetization magnitude of each agent [A/m].
        agent_radius: agent radius [m].
        medium_viscosity: dynamic viscosity of the medium [Pa s].
        relative_permeability: medium permeability relative to vacuum.
        max_error_angle: tolerated misalignment of a moment from the field [deg].
    """

    magnetization: float
    agent_radius: float
    medium_viscosity: float
    relative_permeability: float = 1.0
    max_error_angle: float = 5.0

    def __post_init__(self):
        _require_positive(
            magnetization=self.magnetization,
            agent_radius=self.agent_radius,
            medium_viscosity=self.medium_viscosity,
            relative_permeability=self.relative_permeability,
            max_error_angle=self.max_error_angle,
        )


@dataclass(frozen=True)
class DerivedConstants:
    magnetic_moment: float
    omega: float
    sigma_trans: float
    sigma_rot: float
    omega_t: float
    omega_r: float
    psi_star: float = PSI_STAR
    mu0: float = MU0
    relative_permeability: float = 1.0

    @property
    def permeability(self) -> float:
        return self.mu0 * self.relative_permeability


@dataclass(frozen=True)
class FieldOrientation:
    """Applied-field direction in the pair frame, degrees."""

    psi: float
    alpha: float = 0.0

    def __post_init__(self):
        for name in ("psi", "alpha"):
            value = getattr(self, name)
            if not (math.isfinite(value) and -90.0 <= value <= 90.0):
                raise DomainError(f"{name} must lie in [-90, 90] degrees, got {value!r}")

    def unit_vector(self) -> np.ndarray:
        """Field direction as (e_r, e_t, e_z) components."""
        p, a = math.radians(self.psi), math.radians(self.alpha)
        return np.array([math.cos(a) * math.cos(p), math.cos(a) * math.sin(p), math.sin(a)])


@dataclass(frozen=True)
class ForceComponents:
    f_r: float
    f_t: float
    f_z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.f_r, self.f_t, self.f_z])


def magnetic_moment(magnetization: float, agent_radius: float) -> float:
    """Moment of a uniformly magnetized sphere, ``M * (4/3) pi R^3`` [A m^2]."""
    _require_positive(magnetization=magnetization, agent_radius=agent_radius)
    return magnetization * (4.0 / 3.0) * math.pi * agent_radius**3


def derive_constants(params: PhysicalParams) -> DerivedConstants:
    """Compute the force scale and Stokes drag constants for ``params``."""
    m = magnetic_moment(params.magnetization, params.agent_radius)
    mu = MU0 * params.relative_permeability
    omega = 3.0 * mu * m**2 / (4.0 * math.pi)
    sigma_trans = 6.0 * math.pi * params.medium_viscosity * params.agent_radius
    sigma_rot = 8.0 * math.pi * params.medium_viscosity * params.agent_radius**3
    return DerivedConstants(
        magnetic_moment=m,
        omega=omega,
        sigma_trans=sigma_trans,
        sigma_rot=sigma_rot,
        omega_t=omega / sigma_trans,
        omega_r=omega / sigma_rot,
        psi_star=PSI_STAR,
        mu0=MU0,
        relative_permeability=params.relative_permeability,
    )


def dipole_field_at(moment_vector, displacement, permeability: float = MU0) -> np.ndarray:
    """Flux density [T] of a point dipole at ``displacement`` from it.

    ``moment_vector`` is in A m^2 and ``displacement`` in metres, both 3-vectors.
    """
    m = np.asarray(moment_vector, dtype=float)
    d = np.asarray(displacement, dtype=float)
    dist = float(np.linalg.norm(d))
    if dist == 0.0:
        raise SingularityError("field is singular at the dipole position")
    rhat = d / dist
    return permeability / (4.0 * math.pi) / dist**3 * (3.0 * np.dot(m, rhat) * rhat - m)


def force_components(r: float, orientation: FieldOrientation, consts: DerivedConstants) -> ForceComponents:
    """Radial, tangential and normal force on agent 2 [N].

    Positive ``f_r`` pushes the agents apart.
    """
    if not r > 0:
        raise DomainError(f"r must be > 0, got {r!r}")
    p, a = math.radians(orientation.psi), math.radians(orientation.alpha)
    scale = consts.omega / r**4
    cos_a2 = math.cos(a) ** 2
    return ForceComponents(
        f_r=scale * (1.0 - 3.0 * cos_a2 * math.cos(p) ** 2),
        f_t=scale * cos_a2 * math.sin(2.0 * p),
        f_z=scale * math.sin(2.0 * a) * math.cos(p),
    )


def min_field_magnitude(
    r: float, orientation: FieldOrientation, consts: DerivedConstants, theta_eps: float
) -> float:
    """Smallest applied-field magnitude [T] that keeps both moments aligned.

    Returns the root ``(b - sqrt(b^2 - 4ac)) / (2a)`` of the alignment
    quadratic. The root is taken with this sign only; a negative value means
    the alignment condition cannot be met this way and is reported as an
    error instead of switching roots.

    Raises:
        DegenerateConfigurationError: the quadratic or its angular terms collapse.
        NoValidFieldError: the discriminant is negative.
        ModelInapplicableError: the selected root is negative.
    """
    if not r > 0:
        raise DomainError(f"r must be > 0, got {r!r}")
    a2 = math.cos(math.radians(orientation.psi)) * math.cos(math.radians(orientation.alpha))
    if abs(a2) > 1.0:
        raise DomainError(f"|cos(psi) cos(alpha)| exceeds 1: {a2!r}")
    a1 = math.cos(math.radians(theta_eps) + math.acos(a2))
    if a1 == 0.0 or a2 == 0.0:
        raise DegenerateConfigurationError(f"angular terms vanish (A1={a1!r}, A2={a2!r})")

    inv1, inv2 = 1.0 / a1**2, 1.0 / a2**2
    mu_m = consts.permeability * consts.magnetic_moment
    a = inv1 - inv2
    b = mu_m * (4.0 * inv1 + 2.0 * inv2 - 3.0) / (2.0 * math.pi * r**3)
    c = mu_m**2 * (-4.0 * inv1 + inv2 + 6.0) / (16.0 * math.pi * r**6)
    if a == 0.0:
        raise DegenerateConfigurationError("leading coefficient of the alignment quadratic is zero")
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        raise NoValidFieldError(f"negative discriminant {disc!r}")
    root = (b - math.sqrt(disc)) / (2.0 * a)
    if root < 0.0:
        raise ModelInapplicableError(f"alignment root is negative ({root!r} T)")
    return root


def numeric_force_oracle(
    r: float, orientation: FieldOrientation, consts: DerivedConstants, h: float | None = None
) -> ForceComponents:
    """Force on agent 2 by central differences of its energy ``m2 . B_dip``.

    Agent 1 sits at the origin, agent 2 at ``r`` along the local radial axis,
    and both moments point along the applied field. Used to cross-check
    :func:`force_components`.
    """
    if h is None:
        h = r * 1e-5
    if not (h > 0 and r > 2 * h):
        raise DomainError(f"need r > 2h > 0, got r={r!r}, h={h!r}")
    if h > r * 1e-3:
        warnings.warn(f"step h={h:g} is coarse relative to r={r:g}; truncation error may dominate", RuntimeWarning)

    moment = consts.magnetic_moment * orientation.unit_vector()
    mu = consts.permeability

    def energy(pos):
        return float(np.dot(moment, dipole_field_at(moment, pos, mu)))

    base = np.array([r, 0.0, 0.0])
    grad = np.empty(3)
    for i in range(3):
        step = np.zeros(3)
        step[i] = h
        grad[i] = (energy(base + step) - energy(base - step)) / (2.0 * h)
    return ForceComponents(*grad)
