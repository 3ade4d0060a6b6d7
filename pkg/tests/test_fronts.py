import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frontlab.errors import DomainError, NoFrontError
from frontlab.fronts import (FrontProfile, extract_front_profile, fit_tail, front_residual, planar_front_shooting,
                             planar_profile_for, profile_monotone, pulsating_front_speed, rational_direction,
                             speed_table)
from frontlab.medium import PeriodicMedium, ReactionSpec, homogeneous_medium

SQRT2 = np.sqrt(2.0)


def test_cubic_speed_matches_closed_form(planar):
    assert planar.speed == pytest.approx(SQRT2 * (0.5 - 0.25), abs=1e-7)


def test_cubic_profile_matches_closed_form(planar):
    p = planar.profile
    exact = 1.0 / (1.0 + np.exp(p.z / SQRT2))
    sel = np.abs(p.z) < 20
    assert np.max(np.abs(p.table[0, sel] - exact[sel])) < 1e-5
    assert p.decay[1] == pytest.approx(1 / SQRT2, abs=1e-6)
    assert profile_monotone(p)


@pytest.mark.parametrize("alpha", [0.1, 0.35])
def test_cubic_speed_family(alpha):
    assert planar_front_shooting(ReactionSpec.bistable(alpha)).speed == pytest.approx(SQRT2 * (0.5 - alpha), abs=1e-7)


def test_ignition_speed_frozen():
    assert planar_front_shooting(ReactionSpec.ignition(0.3)).speed == pytest.approx(0.49537, abs=1e-4)


def test_balanced_cubic_has_no_invading_front():
    with pytest.raises(NoFrontError):
        planar_front_shooting(ReactionSpec.bistable(0.5))


def test_shooting_rejects_kpp():
    with pytest.raises(DomainError):
        planar_front_shooting(ReactionSpec.kpp())


def test_profile_evaluation_and_tail(planar):
    p = planar_profile_for([3.0, 4.0], planar)
    assert p.direction == pytest.approx([0.6, 0.8])
    x = np.zeros((3, 2))
    vals = p(x, np.array([-100.0, 0.0, 100.0]))
    assert vals[0] == pytest.approx(1.0, abs=1e-9)
    assert vals[1] == pytest.approx(0.5, abs=1e-9)
    assert 0 < vals[2] < 1e-20
    # reconstruct is a travelling wave
    y = np.array([[1.0, 2.0]])
    assert p.reconstruct(2.0, y + 2.0 * p.speed * p.direction) == pytest.approx(p.reconstruct(0.0, y))


@settings(max_examples=60, deadline=None)
@given(st.floats(-np.pi, np.pi), st.integers(1, 8))
def test_rational_direction_is_close_and_lattice(theta, den):
    e = np.array([np.cos(theta), np.sin(theta)])
    real, (p, q), T = rational_direction(e, den)
    assert 0 <= q <= p <= den
    assert np.linalg.norm(real) == pytest.approx(1.0)
    assert np.allclose(T @ real * np.hypot(p, q), [p, q])
    assert float(real @ e) >= np.cos(np.arctan(1.0 / (2 * den))) - 1e-12 or den == 1


def test_pulsating_speed_one_dimension(homog1d):
    est = pulsating_front_speed(homog1d, np.array([1.0]), h=0.05, T=80.0)
    assert est.speed == pytest.approx(SQRT2 * 0.25, rel=0.01)
    assert est.oscillation < 0.02


def test_pulsating_speed_requires_unit_direction(homog1d):
    with pytest.raises(DomainError):
        pulsating_front_speed(homog1d, np.array([2.0]))


def test_non_invading_medium_raises():
    m = homogeneous_medium(ReactionSpec.bistable(0.6), 1)
    with pytest.raises(NoFrontError):
        pulsating_front_speed(m, np.array([1.0]), T=40.0)


def test_homogeneous_speed_table_is_isotropic(homog2d):
    dirs = [[np.cos(a), np.sin(a)] for a in np.arange(8) * np.pi / 4]
    tab = speed_table(homog2d, dirs, h=0.1, T=40.0, max_den=1)
    assert np.ptp(tab.speeds) < 2e-3
    assert tab.speeds.mean() == pytest.approx(SQRT2 * 0.25, rel=0.01)
    assert len(tab.rows()) == 8 and len(tab.as_mapping()) == 8


def test_speed_table_needs_enough_directions(homog2d):
    with pytest.raises(DomainError):
        speed_table(homog2d, [[1.0, 0.0]] * 4)


@pytest.fixture(scope="module")
def run1d(homog1d):
    return pulsating_front_speed(homog1d, np.array([1.0]), h=0.05, T=60.0, keep_trajectory=True)


def test_extracted_profile_matches_closed_form(run1d):
    prof = extract_front_profile(run1d.medium, np.array([1.0]), run1d.speed, run1d.trajectory, t_min=30.0)
    assert profile_monotone(prof)
    exact = 1.0 / (1.0 + np.exp(prof.z / SQRT2))
    assert np.max(np.abs(prof.cell_average() - exact)) < 0.01
    C, lam0 = prof.decay
    assert lam0 == pytest.approx(1 / SQRT2, rel=0.05)
    assert C >= 0.5


def test_front_residual_of_exact_profile(planar, homog1d):
    assert front_residual(homog1d, planar.profile, h=0.05) < 1e-4


def test_fit_tail_recovers_exponential():
    z = np.linspace(-5, 40, 901)
    u = np.minimum(1.0, 2.0 * np.exp(-0.8 * z))
    prof = FrontProfile(np.array([1.0]), 1.0, z, u[None, :])
    C, lam0 = fit_tail(prof)
    assert lam0 == pytest.approx(0.8, rel=1e-9)
    assert C == pytest.approx(2.0, rel=1e-9)


def test_periodic_one_dimensional_profile_is_monotone():
    m = PeriodicMedium.from_catalog(1, ReactionSpec.periodic_bistable(0.25, 0.1), resolution=10)
    est = pulsating_front_speed(m, np.array([1.0]), h=0.1, T=60.0, keep_trajectory=True)
    prof = extract_front_profile(est.medium, np.array([1.0]), est.speed, est.trajectory, t_min=30.0)
    assert prof.cell_shape == (10,)
    assert profile_monotone(prof)


def test_ignition_speed_agrees_with_simulation():
    f = ReactionSpec.ignition(0.3)
    est = pulsating_front_speed(homogeneous_medium(f, 1), np.array([1.0]), h=0.05, T=60.0)
    assert est.speed == pytest.approx(planar_front_shooting(f).speed, rel=0.02)


def test_anisotropic_speeds_follow_the_metric():
    m = homogeneous_medium(ReactionSpec.bistable(0.25), 2, diagonal=[1.0, 4.0])
    cx = pulsating_front_speed(m, np.array([1.0, 0.0]), h=0.1, T=40.0).speed
    cy = pulsating_front_speed(m, np.array([0.0, 1.0]), h=0.1, T=40.0, speed_guess=1.0).speed
    assert cy / cx == pytest.approx(2.0, rel=0.01)


def test_residual_of_constant_and_perturbed_profiles(planar, homog1d):
    p = planar.profile
    one = FrontProfile(p.direction, p.speed, p.z, np.ones_like(p.table))
    assert front_residual(homog1d, one) == 0.0
    rng = np.random.default_rng(2)
    noisy = FrontProfile(p.direction, p.speed, p.z, p.table + 1e-3 * rng.standard_normal(p.table.shape), p.mu, p.decay)
    assert front_residual(homog1d, noisy) > front_residual(homog1d, p)


def test_time_monotone_in_the_travelling_window(run1d):
    snaps = [s for s in run1d.trajectory if s.t >= 30.0]
    d = np.diff(np.stack([s.values for s in snaps]), axis=0)
    assert np.min(d) >= -1e-10


def test_profile_unique_up_to_shift(homog1d, run1d):
    g = run1d.trajectory.fields[0].grid
    x = g.points()[..., 0]
    from frontlab.solver import GridField, simulate
    u0 = GridField(g, 1.0 / (1.0 + np.exp(4.0 * (x - 25.0))))
    tr = simulate(homog1d, u0, 60.0, np.arange(30.0, 60.01, 0.5))
    a = extract_front_profile(homog1d, np.array([1.0]), run1d.speed, run1d.trajectory, t_min=30.0)
    b = extract_front_profile(homog1d, np.array([1.0]), run1d.speed, tr, t_min=30.0)
    z = np.linspace(-8, 8, 161)
    x0 = np.zeros((z.size, 1))
    assert np.max(np.abs(a(x0, z) - b(x0, z))) < 5e-3


def test_integer_shift_periodicity_of_pulsating_profile():
    m = PeriodicMedium.from_catalog(1, ReactionSpec.periodic_bistable(0.25, 0.1), resolution=10)
    est = pulsating_front_speed(m, np.array([1.0]), h=0.1, T=60.0, keep_trajectory=True)
    prof = extract_front_profile(est.medium, np.array([1.0]), est.speed, est.trajectory, t_min=30.0)
    x = np.linspace(-5, 5, 101)[:, None]
    for k in (1, 3):
        shifted = prof.reconstruct(10.0 + k / prof.speed, x + k)
        assert np.max(np.abs(shifted - prof.reconstruct(10.0, x))) < 1e-9
