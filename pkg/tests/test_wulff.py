import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frontlab.errors import CoverageError, DomainError
from frontlab.geometry import PolygonShape, unit_circle
from frontlab.wulff import (SpeedFunction, ball_condition_probe, cone_conditions_check, halfspace_containment,
                            regular_fg_check, shifted_shape, wulff_shape)


def table(func, n=64, offset=0.0):
    d = unit_circle(n, offset)
    return d, func(d)


def ellipse_speeds(a11, a22, n=256):
    return table(lambda d: np.sqrt(a11 * d[:, 0] ** 2 + a22 * d[:, 1] ** 2), n)


def test_constant_speeds_give_exact_disk():
    W = wulff_shape(table(lambda d: np.full(len(d), 0.4)), n_eval=256)
    assert np.max(np.abs(W.radii - 0.4)) == 0.0
    assert W.is_convex()


def test_ellipse_support_function_recovers_semi_axes():
    W = wulff_shape(ellipse_speeds(1.0, 4.0, 4096), n_eval=512)
    assert W.radius([0.0, 1.0]) == pytest.approx(2.0, rel=1e-4)
    assert W.radius([1.0, 0.0]) == pytest.approx(1.0, rel=1e-4)
    assert regular_fg_check(W, boundary_samples=32).max_residual < 1e-6


def test_square_support_function_gives_square():
    W = wulff_shape(table(lambda d: np.abs(d).sum(axis=1), 512), n_eval=512)
    assert W.radius([1.0, 0.0]) == pytest.approx(1.0, abs=1e-4)
    r45 = W.radius(np.array([1.0, 1.0]) / np.sqrt(2))
    assert r45 == pytest.approx(np.sqrt(2.0), rel=1e-3)
    # the corner has a whole fan of minimisers
    i = int(np.argmin(np.abs(np.arctan2(W.directions[:, 1], W.directions[:, 0]) - np.pi / 4)))
    assert len(W.minimizers[i]) >= 1


def test_one_dimensional_wulff_is_interval():
    W = wulff_shape(([[-1.0], [1.0]], [0.2, 0.5]))
    assert W.radii.tolist() == [0.2, 0.5]


@pytest.mark.parametrize("dirs", [unit_circle(6), unit_circle(16)[:12]])
def test_coverage_errors(dirs):
    with pytest.raises(CoverageError):
        SpeedFunction(dirs, np.ones(len(dirs)))


def test_speed_function_inputs():
    with pytest.raises(DomainError):
        SpeedFunction(unit_circle(8), -np.ones(8))
    sf = SpeedFunction.from_any({(1.0, 0.0): 1.0, (0.0, 1.0): 2.0, (-1.0, 0.0): 1.0, (0.0, -1.0): 2.0,
                                 (0.6, 0.8): 1.5, (-0.6, 0.8): 1.5, (0.6, -0.8): 1.5, (-0.6, -0.8): 1.5})
    assert sf.c_min == 1.0 and sf.c_max == 2.0
    assert sf(np.array([0.0, 1.0])) == pytest.approx(2.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(0.5, 3.0))
def test_wulff_scales_with_speeds(s, a22):
    d, c = ellipse_speeds(1.0, a22, 64)
    W1 = wulff_shape((d, c), n_eval=64)
    W2 = wulff_shape((d, s * c), n_eval=64)
    assert np.allclose(W2.radii, s * W1.radii, rtol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.2, 2.0), min_size=16, max_size=16))
def test_wulff_is_convex_and_within_half_planes(speeds):
    d = unit_circle(16)
    W = wulff_shape((d, np.array(speeds)), n_eval=128)
    assert W.is_convex()
    assert halfspace_containment(W.vertices, (d, np.array(speeds))) < 1e-9
    assert np.all(W.radii <= np.max(speeds) + 1e-12)
    assert np.all(W.radii >= np.min(speeds) - 1e-12)


def test_fg_check_flags_wrong_speeds():
    W = wulff_shape(table(lambda d: np.full(len(d), 1.0)))
    rep = regular_fg_check(W, speeds=table(lambda d: np.full(len(d), 1.5)))
    assert not rep.passed
    assert rep.max_residual == pytest.approx(0.5, abs=1e-3)


def test_polygon_shape_basics():
    sq = PolygonShape([[1, 1], [-1, 1], [-1, -1], [1, -1]])
    assert sq.area == pytest.approx(4.0)
    assert sq.signed_distance(np.array([[0.0, 0.0], [2.0, 0.0]])) == pytest.approx([-1.0, 1.0])
    assert sq.is_convex()
    hits = sq.ray_hits(np.array([[1.0, 0.0]]))
    assert hits[0] == pytest.approx([1.0, 0.0])
    assert sq.normal_at(np.array([1.0, 0.3])) == pytest.approx([1.0, 0.0])
    assert len(sq.vertex_fan(np.array([1.0, 1.0]), 1e-9)) == 2


def test_halfspace_shifted_shape():
    S = shifted_shape("halfspace", 0.4, direction=[0.0, 1.0])
    assert S.contains(np.array([[0.0, 0.39]]))[0]
    assert not S.contains(np.array([[0.0, 0.41]]))[0]


def test_cone_shapes():
    S = shifted_shape("cone", 1.0, alpha=-1.0)
    assert S.apex == pytest.approx([0.0, 1.0])
    S2 = shifted_shape("cone", 1.0, alpha=1.0)
    assert S2.apex == pytest.approx([0.0, np.sqrt(2.0)])
    pts = S.boundary_samples(16)
    assert np.all([ball_condition_probe(S, z, 0.5).interior for z in pts])
    assert not ball_condition_probe(S2, S2.apex, 0.5).exterior
    with pytest.raises(DomainError):
        shifted_shape("cone", 1.0, alpha=0.0)


def test_ball_probe_on_disk():
    W = wulff_shape(table(lambda d: np.ones(len(d)), 256), n_eval=256)
    pr = ball_condition_probe(W.polygon, np.array([1.0, 0.0]), 0.3)
    assert pr.interior and pr.exterior
    assert pr.normal == pytest.approx([1.0, 0.0], abs=0.01)


def test_cone_conditions_on_disk():
    W = wulff_shape(table(lambda d: np.full(len(d), 0.5), 256), n_eval=256)
    rep = cone_conditions_check(W.polygon, 0.25, W.boundary_samples(32))
    assert rep.passed
    # margin |1 - lambda| (R - gamma), smallest at lambda = 0.75
    assert rep.worst_margin == pytest.approx(0.25 * 0.25, abs=1e-3)
    too_big = cone_conditions_check(W.polygon, 0.75, W.boundary_samples(32))
    assert not too_big.passed
    with pytest.raises(DomainError):
        cone_conditions_check(W.polygon, 0.25, W.boundary_samples(8), lambdas=(1.0,))


def test_constant_table_ties_only_at_the_direction_itself():
    W = wulff_shape(table(lambda d: np.ones(len(d))), n_eval=64)
    assert all(len(m) == 1 for m in W.minimizers)
    assert np.allclose(np.concatenate(W.minimizers), W.directions)


def test_two_directions_are_not_enough():
    with pytest.raises(CoverageError):
        wulff_shape(([[1.0, 0.0], [0.0, 1.0]], [1.0, 1.0]))


def test_fg_residual_at_known_points():
    disk = wulff_shape(table(lambda d: np.ones(len(d)), 256), n_eval=256)
    assert regular_fg_check(disk, boundary_samples=[[1.0, 0.0]]).max_residual < 1e-12
    ell = wulff_shape(ellipse_speeds(1.0, 4.0, 4096), n_eval=512)
    assert regular_fg_check(ell, boundary_samples=[[0.0, 2.0]]).max_residual < 1e-4


def test_fg_residual_on_a_corner_fan():
    W = wulff_shape(table(lambda d: np.abs(d).sum(axis=1), 512), n_eval=512)
    rep = regular_fg_check(W.polygon, speeds=W.speeds, boundary_samples=[[1.0, 1.0]], vertex_tol=1e-3)
    assert rep.samples[0].at_vertex
    assert rep.max_residual < 1e-3


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 10.0), st.lists(st.floats(0.2, 2.0), min_size=16, max_size=16))
def test_argmin_directions_are_scale_invariant(s, speeds):
    d = unit_circle(16)
    c = np.array(speeds)
    W1, W2 = wulff_shape((d, c), n_eval=64), wulff_shape((d, s * c), n_eval=64, tie_tol=s * 1e-6 * c.max())
    assert all(np.array_equal(a, b) for a, b in zip(W1.minimizers, W2.minimizers))
    assert W1.radii.min() >= c.min() - 1e-12


def test_halfspace_and_radial_polygons_agree():
    W = wulff_shape(table(lambda d: 1.0 + 0.3 * np.cos(3 * np.arctan2(d[:, 1], d[:, 0])), 128), n_eval=512)
    radial, hp = W.radial_polygon(), W.halfspace_polygon()
    assert np.max(np.abs(hp.boundary_distance(radial.vertices))) < 0.01
    assert hp.area == pytest.approx(radial.area, rel=1e-3)


def test_cone_matches_brute_force_minkowski_sum():
    S = shifted_shape("cone", 1.0, alpha=-1.0)
    assert abs(S.signed_distance(np.array([[0.0, 1.0]]))[0]) < 1e-6
    s = np.linspace(0.0, 30.0, 30001)
    cone_pts = np.concatenate([np.column_stack([s, -s]), np.column_stack([-s, -s]), [[0.0, -1.0], [0.0, -5.0]]])
    x = np.random.default_rng(4).uniform([-3, -3], [3, 3], (400, 2))
    from scipy.spatial import cKDTree
    dist, _ = cKDTree(cone_pts).query(x)
    inside_cone = x[:, 1] <= -np.abs(x[:, 0])
    brute = inside_cone | (dist < 1.0)
    clear = np.abs(dist - 1.0) > 1e-2
    assert np.array_equal(S.contains(x)[clear], brute[clear])


def test_cone_conditions_on_unit_disk():
    W = wulff_shape(table(lambda d: np.ones(len(d)), 256), n_eval=256)
    z = np.array([[1.0, 0.0]])
    assert cone_conditions_check(W.polygon, 0.5, z, lambdas=(0.5,)).passed


def test_star_shape_violation_fails():
    # a thick crescent: the origin's ray through (0, 1) leaves and re-enters the region
    ang = np.linspace(0.3, 2 * np.pi - 0.3, 200)
    outer = 2.0 * np.column_stack([np.cos(ang), np.sin(ang)])
    inner = 1.2 * np.column_stack([np.cos(ang[::-1]), np.sin(ang[::-1])])
    crescent = PolygonShape(np.concatenate([outer, inner]) + [0.5, 0.0])
    z = crescent.densify(0.1)[::10]
    rep = cone_conditions_check(crescent, 0.1, z)
    assert not rep.passed
    assert rep.worst_margin < 0
