import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magpair import (
    MU0,
    PSI_STAR,
    FieldOrientation,
    PhysicalParams,
    derive_constants,
    dipole_field_at,
    force_components,
    magnetic_moment,
    min_field_magnitude,
    numeric_force_oracle,
)
from magpair.errors import (
    DegenerateConfigurationError,
    DomainError,
    ModelInapplicableError,
    SingularityError,
)

angles = st.floats(min_value=-90.0, max_value=90.0, allow_nan=False)
radii = st.floats(min_value=200e-6, max_value=1000e-6)


# -- moment and constants ---------------------------------------------------


def test_magnetic_moment_table_value():
    assert magnetic_moment(1e4, 250e-6) == pytest.approx(6.545e-7, rel=1e-4)


def test_magnetic_moment_unit_sphere():
    assert magnetic_moment(3.0 / (4.0 * math.pi), 1.0) == pytest.approx(1.0, rel=1e-15)


def test_magnetic_moment_halved_radius():
    # (4/3) pi (125e-6)^3 * 1e4 = 8.1812e-8; an eighth of the full-size moment
    assert magnetic_moment(1e4, 125e-6) == pytest.approx(8.181e-8, rel=1e-3)
    assert magnetic_moment(1e4, 125e-6) * 8 == pytest.approx(magnetic_moment(1e4, 250e-6), rel=1e-14)


@pytest.mark.parametrize("args", [(0.0, 1e-4), (1e4, 0.0), (-1.0, 1e-4), (1e4, float("nan"))])
def test_magnetic_moment_rejects_non_positive(args):
    with pytest.raises(DomainError):
        magnetic_moment(*args)


@pytest.mark.parametrize(
    "field,value",
    [("magnetization", 0.0), ("agent_radius", -1.0), ("medium_viscosity", 0.0), ("max_error_angle", 0.0)],
)
def test_physical_params_positive(field, value):
    kwargs = dict(magnetization=1e4, agent_radius=250e-6, medium_viscosity=0.5)
    kwargs[field] = value
    with pytest.raises(DomainError):
        PhysicalParams(**kwargs)


def test_physical_params_permeability_default():
    assert PhysicalParams(1e4, 250e-6, 0.5).relative_permeability == 1.0


def test_constants_against_hand_arithmetic(consts):
    # independent chain: m = 6.544985e-7, Omega = 3e-7 m^2, sigma_t = 3 pi * 250e-6
    m = 1e4 * 4.0 / 3.0 * math.pi * 250e-6**3
    omega = 3e-7 * m**2
    assert consts.omega == pytest.approx(omega, rel=1e-12)
    assert consts.omega_t == pytest.approx(omega / (3 * math.pi * 250e-6), rel=1e-12)
    assert consts.omega_t == pytest.approx(5.4543e-17, rel=1e-4)
    assert consts.omega_r == pytest.approx(6.545e-10, rel=1e-4)


def test_constants_per_viscosity_match_published(consts, params):
    assert round(consts.omega_t * params.medium_viscosity, 21) == pytest.approx(2.7271e-17, abs=5e-22)
    assert round(consts.omega_r * params.medium_viscosity, 14) == pytest.approx(3.2725e-10, abs=5e-15)


def test_constants_round_trip(consts):
    assert consts.omega_t * consts.sigma_trans == pytest.approx(consts.omega, rel=1e-15)
    assert consts.omega_r * consts.sigma_rot == pytest.approx(consts.omega, rel=1e-15)


def test_psi_star_is_exact_zero_force_angle(consts):
    assert abs(1 - 3 * math.cos(math.radians(consts.psi_star)) ** 2) < 1e-12
    assert consts.psi_star == pytest.approx(54.7356, abs=1e-4)
    assert consts.psi_star != 54.74


def test_relative_permeability_scales_omega():
    base = derive_constants(PhysicalParams(1e4, 250e-6, 0.5))
    doubled = derive_constants(PhysicalParams(1e4, 250e-6, 0.5, relative_permeability=2.0))
    assert doubled.omega == pytest.approx(2 * base.omega, rel=1e-15)


# -- dipole field --------------------------------------------------------------


def _field_from_potential(m, pos, h=1e-9):
    # B = -mu0 grad(m.r / (4 pi r^3)) away from the source
    def potential(p):
        return np.dot(m, p) / (4 * math.pi * np.linalg.norm(p) ** 3)

    grad = np.array(
        [(potential(pos + h * e) - potential(pos - h * e)) / (2 * h) for e in np.eye(3)]
    )
    return -MU0 * grad


def test_dipole_field_on_axis():
    m0, d = 2e-7, 4e-4
    b = dipole_field_at([0, 0, m0], [0, 0, d])
    np.testing.assert_allclose(b, [0, 0, MU0 * m0 / (2 * math.pi * d**3)], rtol=1e-14, atol=0)


def test_dipole_field_equatorial():
    m0, d = 2e-7, 4e-4
    b = dipole_field_at([0, 0, m0], [d, 0, 0])
    np.testing.assert_allclose(b, [0, 0, -MU0 * m0 / (4 * math.pi * d**3)], rtol=1e-14, atol=1e-30)


def test_dipole_field_diagonal_matches_potential_gradient():
    m = np.array([6.545e-7, 0.0, 0.0])
    d = 5e-4
    pos = np.array([d, d, 0.0]) / math.sqrt(2)
    expected = _field_from_potential(m, pos, h=d * 1e-6)
    np.testing.assert_allclose(dipole_field_at(m, pos), expected, rtol=1e-7)
    # closed form: mu0 m0 / (4 pi d^3) * (0.5, 1.5, 0)
    np.testing.assert_allclose(
        dipole_field_at(m, pos), MU0 * m[0] / (4 * math.pi * d**3) * np.array([0.5, 1.5, 0.0]), rtol=1e-12
    )


def test_dipole_field_singular_at_source():
    with pytest.raises(SingularityError):
        dipole_field_at([1, 0, 0], [0, 0, 0])


# -- force decomposition ----------------------------------------------------------


def test_force_max_attraction(consts):
    r = 500e-6
    f = force_components(r, FieldOrientation(0.0, 0.0), consts)
    assert f.f_r == -2 * consts.omega / r**4
    assert f.f_t == 0.0 and f.f_z == 0.0


def test_force_max_repulsion(consts):
    r = 500e-6
    f = force_components(r, FieldOrientation(90.0, 0.0), consts)
    assert f.f_r == pytest.approx(consts.omega / r**4, rel=1e-15)
    assert abs(f.f_t) < 1e-15 * consts.omega / r**4
    assert f.f_z == 0.0


def test_force_repulsion_magnitude_table(consts):
    f = force_components(500e-6, FieldOrientation(90.0), consts)
    assert f.f_r == pytest.approx(2.056e-6, rel=1e-3)
    oracle = numeric_force_oracle(500e-6, FieldOrientation(90.0), consts)
    assert oracle.f_r == pytest.approx(f.f_r, rel=1e-5)


@pytest.mark.parametrize("r", [0.0, -1e-4])
def test_force_domain(consts, r):
    with pytest.raises(DomainError):
        force_components(r, FieldOrientation(0.0), consts)


@pytest.mark.parametrize("psi,alpha", [(0.0, 0.0), (45.0, 30.0), (-70.0, 15.0), (20.0, -60.0)])
def test_oracle_matches_analytic(consts, psi, alpha):
    r = 500e-6
    o = FieldOrientation(psi, alpha)
    scale = consts.omega / r**4
    analytic = force_components(r, o, consts).as_array()
    numeric = numeric_force_oracle(r, o, consts, h=r * 1e-5).as_array()
    assert np.max(np.abs(analytic - numeric)) / scale < 1e-5


def test_oracle_zero_force_angle(consts):
    r = 500e-6
    f = numeric_force_oracle(r, FieldOrientation(consts.psi_star), consts)
    assert abs(f.f_r) < 1e-6 * consts.omega / r**4


def test_oracle_rejects_oversized_step(consts):
    with pytest.raises(DomainError):
        numeric_force_oracle(1e-4, FieldOrientation(0.0), consts, h=6e-5)
    with pytest.warns(RuntimeWarning):
        numeric_force_oracle(1e-4, FieldOrientation(0.0), consts, h=1e-6)


@settings(max_examples=200, deadline=None)
@given(r=radii, psi=angles, alpha=angles)
def test_oracle_agreement_property(consts, r, psi, alpha):
    o = FieldOrientation(psi, alpha)
    scale = consts.omega / r**4
    diff = force_components(r, o, consts).as_array() - numeric_force_oracle(r, o, consts).as_array()
    assert np.max(np.abs(diff)) / scale < 1e-4


@given(r=radii, psi=angles, alpha=angles)
def test_force_parity_in_psi(consts, r, psi, alpha):
    plus = force_components(r, FieldOrientation(psi, alpha), consts)
    minus = force_components(r, FieldOrientation(-psi, alpha), consts)
    assert plus.f_r == minus.f_r
    assert plus.f_t == -minus.f_t


@given(r=radii, psi=angles, alpha=angles)
def test_force_power_law(consts, r, psi, alpha):
    o = FieldOrientation(psi, alpha)
    near = force_components(r, o, consts).f_r
    far = force_components(2 * r, o, consts).f_r
    assert far == pytest.approx(near / 16, rel=1e-13, abs=1e-30)


@given(psi=angles, alpha=angles)
def test_force_sign_regimes(consts, psi, alpha):
    r = 500e-6
    key = math.cos(math.radians(alpha)) ** 2 * math.cos(math.radians(psi)) ** 2
    if abs(key - 1 / 3) < 1e-9:
        return
    f_r = force_components(r, FieldOrientation(psi, alpha), consts).f_r
    assert (f_r < 0) == (key > 1 / 3)


def test_force_extremes_over_psi(consts):
    r = 500e-6
    scale = consts.omega / r**4
    grid = np.linspace(0, 90, 9001)
    values = np.array([force_components(r, FieldOrientation(p), consts).f_r for p in grid])
    assert grid[values.argmax()] == 90.0 and values.max() == pytest.approx(scale, rel=1e-12)
    assert grid[values.argmin()] == 0.0 and values.min() == pytest.approx(-2 * scale, rel=1e-12)


def test_zero_force_angles(consts):
    r = 500e-6
    scale = consts.omega / r**4
    assert abs(force_components(r, FieldOrientation(consts.psi_star), consts).f_r) < 1e-12 * scale
    # first-order estimate: 3 sin(2 psi*) * (54.74 - psi*) in radians
    rounded = abs(force_components(r, FieldOrientation(54.74), consts).f_r) / scale
    estimate = 3 * math.sin(2 * math.radians(PSI_STAR)) * math.radians(54.74 - PSI_STAR)
    assert rounded == pytest.approx(estimate, rel=1e-3)
    assert rounded == pytest.approx(2.167e-4, rel=1e-3)


# -- minimum applied field ----------------------------------------------------------


def _quadratic_roots(r, psi, alpha, theta, consts):
    a2 = np.cos(np.radians(psi)) * np.cos(np.radians(alpha))
    a1 = np.cos(np.radians(theta) + np.arccos(a2))
    mu_m = MU0 * consts.magnetic_moment
    a = 1 / a1**2 - 1 / a2**2
    b = mu_m * (4 / a1**2 + 2 / a2**2 - 3) / (2 * np.pi * r**3)
    c = mu_m**2 * (-4 / a1**2 + 1 / a2**2 + 6) / (16 * np.pi * r**6)
    # roots of a x^2 - b x + c
    return a, b, c, np.sort(np.roots([a, -b, c]).real)


def test_min_field_aligned_collapses_angles(consts):
    theta = 5.0
    a, b, c, roots = _quadratic_roots(500e-6, 0.0, 0.0, theta, consts)
    # A2 = 1, A1 = cos(theta)
    assert a == pytest.approx(1 / math.cos(math.radians(theta)) ** 2 - 1, rel=1e-12)
    value = min_field_magnitude(500e-6, FieldOrientation(0.0), consts, theta)
    assert value == pytest.approx(roots[0], rel=1e-9)
    assert a * value**2 - b * value + c == pytest.approx(0.0, abs=1e-12 * c)
    assert value == pytest.approx(8.0742e-4, rel=1e-4)


def test_min_field_scales_with_inverse_cube(consts):
    near = min_field_magnitude(500e-6, FieldOrientation(0.0), consts, 5.0)
    far = min_field_magnitude(1000e-6, FieldOrientation(0.0), consts, 5.0)
    assert far == pytest.approx(near / 8, rel=1e-12)


@pytest.mark.parametrize("r", [500e-6, 1000e-6])
def test_min_field_negative_root_at_zero_force_angle(consts, r):
    # the selected root is negative here: about -2.92e-4 T at 500 um, -3.65e-5 T at 1 mm
    _, _, _, roots = _quadratic_roots(r, PSI_STAR, 0.0, 5.0, consts)
    assert roots[0] < 0
    with pytest.raises(ModelInapplicableError):
        min_field_magnitude(r, FieldOrientation(PSI_STAR), consts, 5.0)


def test_min_field_degenerate(consts):
    with pytest.raises(DegenerateConfigurationError):
        min_field_magnitude(500e-6, FieldOrientation(30.0), consts, 0.0)


def test_min_field_domain(consts):
    with pytest.raises(DomainError):
        min_field_magnitude(0.0, FieldOrientation(0.0), consts, 5.0)


def test_field_orientation_bounds():
    with pytest.raises(DomainError):
        FieldOrientation(91.0)
    with pytest.raises(DomainError):
        FieldOrientation(0.0, -95.0)
