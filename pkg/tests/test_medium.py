import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from frontlab.errors import DomainError, StructuralError
from frontlab.medium import (PeriodicMedium, ReactionSpec, check_homogeneous_invasion, check_weak_stability,
                             homogeneous_medium, transform_medium, validate_medium)


def test_constant_medium_passes_every_check(cubic):
    rep = validate_medium(homogeneous_medium(cubic, 2))
    assert rep.passed
    assert set(rep.as_dict()) == {"symmetric", "ellipticity", "divergence-free", "zero-average",
                                  "periodicity", "endpoint-zeros"}


@pytest.mark.parametrize("drift", ["shear", "cellular"])
def test_periodic_flows_are_divergence_free(cubic, drift):
    m = PeriodicMedium.from_catalog(2, cubic, "identity", drift, drift_params={"beta": 3.0})
    rep = validate_medium(m)
    assert rep["divergence-free"].passed
    assert rep["zero-average"].passed
    assert rep.passed


def test_linear_drift_fails_periodicity_and_average(cubic):
    m = PeriodicMedium.from_catalog(2, cubic, "identity", "linear-x1")
    rep = validate_medium(m)
    assert not rep["periodicity"].passed
    assert not rep["zero-average"].passed
    assert rep["periodicity"].residual == pytest.approx(1.0)


def test_indefinite_matrix_fails_ellipticity(cubic):
    m = PeriodicMedium.from_catalog(2, cubic, "constant", diffusion_params={"matrix": [1, 2, 2, 1]})
    assert not validate_medium(m)["ellipticity"].passed


def test_mismatched_field_shape_is_structural(cubic):
    m = PeriodicMedium(2, cubic, diffusion=lambda x: np.zeros(np.shape(x)[:-1] + (3, 3)))
    with pytest.raises(StructuralError):
        validate_medium(m)


def test_validation_is_deterministic(shear):
    assert validate_medium(shear).as_dict() == validate_medium(shear).as_dict()


def _first_sign_change(alpha):
    # roots of d/ds [s (1 - s)(s - alpha)] = -3 s^2 + 2 (1 + alpha) s - alpha
    r = np.sort(np.roots([-3.0, 2.0 * (1.0 + alpha), -alpha]).real)
    return r


def test_weak_stability_of_cubic(cubic):
    lo, hi = _first_sign_change(0.25)
    assert lo == pytest.approx(0.11624, abs=1e-4)
    m = homogeneous_medium(cubic)
    assert check_weak_stability(m, 0.1)
    assert not check_weak_stability(m, 0.15)
    assert hi < 0.9


def test_weak_stability_fails_for_kpp():
    res = check_weak_stability(homogeneous_medium(ReactionSpec.kpp()), 0.2)
    assert not res
    assert res.witness[1] == 0.0


def test_weak_stability_of_ignition():
    m = homogeneous_medium(ReactionSpec.ignition(0.3))
    assert check_weak_stability(m, 0.05)


def test_weak_stability_rejects_bad_delta(cubic):
    with pytest.raises(DomainError):
        check_weak_stability(homogeneous_medium(cubic), 0.5)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 0.49), st.floats(0.01, 0.49), st.floats(0.05, 0.45))
def test_weak_stability_is_monotone_in_delta(d1, d2, alpha):
    m = homogeneous_medium(ReactionSpec.bistable(alpha))
    small, large = sorted((d1, d2))
    if check_weak_stability(m, large):
        assert check_weak_stability(m, small)


def test_periodic_weak_stability_scans_cell(periodic_alpha):
    assert check_weak_stability(periodic_alpha, 0.05)
    assert not check_weak_stability(periodic_alpha, 0.2)


@pytest.mark.parametrize("alpha,expected", [(0.25, True), (0.5, False), (0.7, False)])
def test_homogeneous_invasion_cubic(alpha, expected):
    f = ReactionSpec.bistable(alpha)
    total = integrate.quad(f, 0.0, 1.0)[0]
    assert total == pytest.approx((1.0 - 2.0 * alpha) / 12.0, abs=1e-14)
    assert check_homogeneous_invasion(f) is expected


def test_homogeneous_invasion_kpp_and_ignition():
    assert check_homogeneous_invasion(ReactionSpec.kpp())
    assert check_homogeneous_invasion(ReactionSpec.ignition(0.3))


def test_homogeneous_invasion_rejects_periodic():
    with pytest.raises(DomainError):
        check_homogeneous_invasion(ReactionSpec.periodic_bistable(0.25, 0.1))


BUILTINS = [ReactionSpec.bistable(0.3), ReactionSpec.ignition(0.2), ReactionSpec.kpp(),
            ReactionSpec.periodic_bistable(0.3, 0.1, 1), ReactionSpec.table([0, -0.1, 0.2, 0])]


@pytest.mark.parametrize("f", BUILTINS, ids=lambda f: f.kind)
def test_builtin_reactions_vanish_at_endpoints(f):
    x = np.random.default_rng(0).random((50, 2))
    assert np.all(f(np.zeros(50), x) == 0.0)
    assert np.all(f(np.ones(50), x) == 0.0)


def test_reaction_parameters_are_checked():
    with pytest.raises(DomainError):
        ReactionSpec.bistable(1.2)
    with pytest.raises(DomainError):
        ReactionSpec.periodic_bistable(0.1, 0.2)
    with pytest.raises(DomainError):
        ReactionSpec.table([0.1, 0.2, 0.0])


@pytest.mark.parametrize("f", BUILTINS[:3], ids=lambda f: f.kind)
def test_derivative_matches_finite_difference(f):
    s = np.linspace(0.05, 0.95, 19)
    s = s[np.abs(s - 0.2) > 0.02]
    fd = (f(s + 1e-6) - f(s - 1e-6)) / 2e-6
    assert np.allclose(f.derivative(s), fd, atol=1e-6)


def test_transform_swaps_axes(cubic):
    m = PeriodicMedium.from_catalog(2, ReactionSpec.periodic_bistable(0.25, 0.1, 0), "diagonal",
                                    "shear", diffusion_params={"d": [1.0, 4.0]}, drift_params={"beta": 1.0})
    T = np.array([[0.0, 1.0], [1.0, 0.0]])
    mt = transform_medium(m, T)
    y = np.random.default_rng(1).random((20, 2))
    x = y @ T
    assert np.allclose(mt.sample_diffusion(y), T @ m.sample_diffusion(x) @ T.T)
    assert np.allclose(mt.sample_drift(y), m.sample_drift(x) @ T.T)
    s = np.full(20, 0.4)
    assert np.allclose(mt.reaction(s, y), m.reaction(s, x))
    assert validate_medium(mt).passed


def test_transform_requires_signed_permutation(cubic):
    with pytest.raises(DomainError):
        transform_medium(homogeneous_medium(cubic, 2), np.array([[0.6, 0.8], [-0.8, 0.6]]))
