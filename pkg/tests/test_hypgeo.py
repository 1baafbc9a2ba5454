import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ctlab import constants
from ctlab.calibrate import (
    admissible_tube_configs,
    far_segment_gaps,
    horoball_configs,
    log_slope,
    tube_length_ratios,
)
from ctlab.hypgeo import (
    Geodesic,
    GeometryError,
    Horoball,
    CoplanarMidpointError,
    Tube,
    geodesic_thinpart_crossing,
    geodesic_through,
    horoball_penetration_check,
    horoball_surface_dist,
    margulis_horoball,
    margulis_tube,
    point_to_geodesic,
    segment_distance,
    segment_points,
    tube_penetration_check,
    tube_point,
    tube_surface_length,
)
from ctlab.moebius import INF, ORIGIN, H3Point, MoebiusMap, act_h3, dist_h3, random_moebius

VERTICAL = Geodesic(0j, INF)
TOP = Horoball(INF, 1.0)
seeds = st.integers(0, 2**32 - 1)


def rand_point(rng):
    return H3Point(complex(*rng.normal(size=2)), float(np.exp(rng.normal())))


# -- point_to_geodesic -------------------------------------------------------


def test_point_to_geodesic_examples():
    assert point_to_geodesic(H3Point(0j, 3.0), VERTICAL)[0] == 0
    d, foot = point_to_geodesic(H3Point(1 + 0j, 1.0), VERTICAL)
    assert abs(d - math.asinh(1)) < 1e-12
    assert abs(foot.z) < 1e-12 and abs(foot.t - math.sqrt(2)) < 1e-12


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_point_to_geodesic_equivariant(seed):
    rng = np.random.default_rng(seed)
    g = Geodesic(complex(*rng.normal(size=2)), complex(*rng.normal(size=2)))
    p, m = rand_point(rng), random_moebius(rng)
    d0, foot0 = point_to_geodesic(p, g)
    d1, foot1 = point_to_geodesic(act_h3(m, p), g.image(m))
    assert abs(d0 - d1) < 1e-8 * max(1, d0)
    assert dist_h3(act_h3(m, foot0), foot1) < 1e-6
    assert abs(dist_h3(p, foot0) - d0) < 1e-8 * max(1, d0)


def test_geodesic_through_contains_both_points():
    rng = np.random.default_rng(1)
    for _ in range(20):
        p, q = rand_point(rng), rand_point(rng)
        g = geodesic_through(p, q)
        assert point_to_geodesic(p, g)[0] < 1e-7
        assert point_to_geodesic(q, g)[0] < 1e-7


def test_coincident_endpoints_rejected():
    with pytest.raises(GeometryError):
        Geodesic(1j, 1j)


def test_segment_points_evenly_spaced():
    p, q = H3Point(0j, 1.0), H3Point(3 + 1j, 0.5)
    pts = segment_points(p, q, 11)
    steps = [dist_h3(a, b) for a, b in zip(pts, pts[1:])]
    assert np.ptp(steps) < 1e-9
    assert abs(sum(steps) - dist_h3(p, q)) < 1e-9


def test_segment_distance_against_sampling():
    rng = np.random.default_rng(2)
    for _ in range(20):
        o, p, q = rand_point(rng), rand_point(rng), rand_point(rng)
        brute = min(dist_h3(o, x) for x in segment_points(p, q, 4001))
        exact = segment_distance(o, p, q)
        assert exact <= brute + 1e-12
        assert brute - exact < 1e-4


# -- horoballs ---------------------------------------------------------------


def test_horosphere_examples():
    p, q = H3Point(0j, 1.0), H3Point(1 + 0j, 1.0)
    assert abs(horoball_surface_dist(TOP, p, q) - 1) < 1e-12
    assert abs(2 * math.sinh(math.acosh(1.5) / 2) - 1) < 1e-12
    assert horoball_surface_dist(TOP, p, p) == 0
    for x in (0.5, 2.0, 10.0):
        assert abs(horoball_surface_dist(TOP, p, H3Point(complex(x), 1.0)) - x) < 1e-12


def test_horosphere_rejects_off_surface_points():
    with pytest.raises(GeometryError, match="offset"):
        horoball_surface_dist(TOP, H3Point(0j, 2.0), H3Point(1 + 0j, 1.0))


def _on_horosphere(h, rng):
    m, height = h.normalizer()
    return act_h3(m.inverse(), H3Point(complex(*rng.normal(0, 3, 2)) * height, height))


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_horosphere_length_identity(seed):
    rng = np.random.default_rng(seed)
    h = Horoball(complex(*rng.normal(size=2)), float(np.exp(rng.normal())))
    p, q = _on_horosphere(h, rng), _on_horosphere(h, rng)
    d = dist_h3(p, q)
    if d < 0.5:
        return
    l = horoball_surface_dist(h, p, q)
    assert abs(l - 2 * math.sinh(d / 2)) / l < 1e-10


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_horoball_image(seed):
    rng = np.random.default_rng(seed)
    h = Horoball(complex(*rng.normal(size=2)), float(np.exp(rng.normal())))
    m = random_moebius(rng)
    image = h.image(m)
    for _ in range(5):
        p = _on_horosphere(h, rng)
        assert abs(image.signed_offset(act_h3(m, p))) < 1e-7


def test_horoball_offset_sign():
    assert TOP.contains(H3Point(0j, 2.0))
    assert not TOP.contains(H3Point(0j, 0.5))
    assert abs(Horoball(0j, 2.0).signed_offset(H3Point(0j, 2.0))) < 1e-12


# -- tubes -------------------------------------------------------------------


def test_tube_surface_examples():
    tube = Tube(VERTICAL, 1.0)
    p = tube_point(tube, 0.0, 0.0)
    l, h, phi = tube_surface_length(tube, p, tube_point(tube, 0.0, math.pi / 2))
    assert abs(l - math.pi / 2 * math.sinh(1)) < 1e-12 and abs(h) < 1e-12
    l, h, phi = tube_surface_length(tube, p, tube_point(tube, 2.0, 0.0))
    assert abs(l - 2 * math.cosh(1)) < 1e-12 and abs(phi) < 1e-12
    assert tube_surface_length(tube, p, p)[0] == 0


def test_tube_angle_takes_short_way():
    tube = Tube(VERTICAL, 0.7)
    _, _, phi = tube_surface_length(tube, tube_point(tube, 0, 0.1), tube_point(tube, 0, 2 * math.pi - 0.1))
    assert abs(phi - 0.2) < 1e-12


def test_tube_rejects_off_surface_points():
    tube = Tube(VERTICAL, 1.0)
    with pytest.raises(GeometryError):
        tube_surface_length(tube, H3Point(0.1 + 0j, 1.0), tube_point(tube, 0, 0))


def test_tube_point_on_boundary():
    tube = Tube(Geodesic(1 + 1j, -2 + 0j), 1.3)
    for a in np.linspace(0, 6, 7):
        assert abs(tube.distance_to_axis(tube_point(tube, a - 3, a)) - 1.3) < 1e-9


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_tube_length_equivariant(seed):
    rng = np.random.default_rng(seed)
    tube = Tube(Geodesic(complex(*rng.normal(size=2)), complex(*rng.normal(size=2))), float(rng.uniform(0.3, 2)))
    p = tube_point(tube, *rng.normal(size=2))
    q = tube_point(tube, *rng.normal(size=2))
    m = random_moebius(rng)
    moved = Tube(tube.axis.image(m), tube.radius)
    l0 = tube_surface_length(tube, p, q)[0]
    l1 = tube_surface_length(moved, act_h3(m, p), act_h3(m, q))[0]
    assert abs(l0 - l1) < 1e-6 * max(1, l0)


def test_tube_ratio_window():
    r = tube_length_ratios(np.random.default_rng(11), 20000)
    assert constants.TUBE_RATIO_LOW <= r.min() and r.max() <= constants.TUBE_RATIO_HIGH


# -- crossings ---------------------------------------------------------------


def test_crossing_examples():
    c = geodesic_thinpart_crossing(Geodesic(-2 + 0j, 2 + 0j), TOP)
    assert c.flag == "crossing"
    assert abs(c.entry.z + math.sqrt(3)) < 1e-12 and abs(c.entry.t - 1) < 1e-12
    assert abs(c.exit.z - math.sqrt(3)) < 1e-12 and abs(c.exit.t - 1) < 1e-12
    assert geodesic_thinpart_crossing(Geodesic(-0.1 + 0j, 0.1 + 0j), TOP).flag == "none"
    assert geodesic_thinpart_crossing(Geodesic(-1 + 0j, 1 + 0j), TOP).flag == "tangent"
    tube = Tube(VERTICAL, 0.8)
    c = geodesic_thinpart_crossing(VERTICAL, tube)
    assert c.flag == "contained" and c.entry is None and c.exit is None


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_tube_crossings_lie_on_boundary(seed):
    rng = np.random.default_rng(seed)
    tube = Tube(Geodesic(complex(*rng.normal(size=2)), complex(*rng.normal(size=2))), float(rng.uniform(0.3, 2)))
    g = Geodesic(complex(*rng.normal(0, 2, 2)), complex(*rng.normal(0, 2, 2)))
    c = geodesic_thinpart_crossing(g, tube)
    for p in (c.entry, c.exit):
        if p is not None:
            assert abs(tube.distance_to_axis(p) - tube.radius) < 1e-7
            assert point_to_geodesic(p, g)[0] < 1e-7


# -- penetration -------------------------------------------------------------


def test_horoball_penetration_trivial():
    p = H3Point(3 + 0j, 1.0)
    dmin, bound = horoball_penetration_check(TOP, ORIGIN, p, p)
    assert abs(dmin - dist_h3(ORIGIN, p)) < 1e-12 and dmin >= 4 * (bound + constants.HOROBALL_PENETRATION_C)


@pytest.mark.parametrize("x", [1.0, 5.0, 40.0, 1e3, 1e5])
def test_horoball_penetration_symmetric(x):
    p1, p2 = H3Point(complex(-x), 1.0), H3Point(complex(x), 1.0)
    dmin, bound = horoball_penetration_check(TOP, ORIGIN, p1, p2)
    brute = min(dist_h3(ORIGIN, q) for q in segment_points(p1, p2, 10001))
    assert abs(dmin - brute) < 1e-6
    assert dmin >= bound


def test_horoball_penetration_rejects_inside_basepoint():
    with pytest.raises(GeometryError):
        horoball_penetration_check(TOP, H3Point(0j, 2.0), H3Point(1 + 0j, 1.0), H3Point(-1 + 0j, 1.0))


def test_horoball_penetration_random():
    b = horoball_configs(np.random.default_rng(5), 20000)
    assert (b.min_dist >= b.N / 4 - constants.HOROBALL_PENETRATION_C).all()


def test_tube_penetration_random():
    b = admissible_tube_configs(np.random.default_rng(6), 20000)
    assert (b.min_dist >= b.N / 4 - constants.TUBE_PENETRATION_C).all()


def test_tube_penetration_far_side_rotation():
    tube = Tube(VERTICAL, 1.0)
    # the short surface path passes through angle 0, O sits at angle pi
    o = H3Point(complex(-math.sinh(3.0)), 1.0)
    p1, p2 = tube_point(tube, 0.0, math.pi / 2 - 0.01), tube_point(tube, 0.0, -math.pi / 2 + 0.01)
    dmin, bound = tube_penetration_check(tube, o, p1, p2)
    assert dmin >= bound


def test_tube_penetration_same_point():
    tube = Tube(VERTICAL, 1.0)
    o = H3Point(complex(math.sinh(3.0)), 1.0)
    p = tube_point(tube, 1.0, 2.0)
    assert abs(tube_penetration_check(tube, o, p, p)[0] - dist_h3(o, p)) < 1e-12


def test_coplanar_midpoint_configuration_raises():
    tube = Tube(VERTICAL, 1.0)
    p1, p2 = tube_point(tube, -4.0, 0.0), tube_point(tube, 4.0, 0.0)
    o = tube_point(tube, 0.0, 0.0)
    with pytest.raises(CoplanarMidpointError, match="coplanar midpoint"):
        tube_penetration_check(tube, o, p1, p2)


# -- far segments ------------------------------------------------------------


def test_far_segment_gap_slope():
    rng = np.random.default_rng(7)
    rs = np.linspace(3, 12, 10)
    slope = log_slope(rs, np.array([far_segment_gaps(rng, R, 1000).max() for R in rs]))
    assert -1.1 <= slope <= -0.9


def test_right_triangle_identity():
    # right angle at P = (0, e^s) on the vertical axis; X on the orthogonal hemisphere
    for s, phi in [(0.5, 0.3), (1.0, 1.0), (2.0, 0.7), (3.0, 1.4)]:
        p = H3Point(0j, math.exp(s))
        x = H3Point(complex(math.exp(s) * math.sin(phi)), math.exp(s) * math.cos(phi))
        g = geodesic_through(ORIGIN, x)
        centre = (g.p + g.q).real / 2
        # angle at O between the vertical and the tangent to [O, X]
        theta = math.atan(1 / abs(centre))
        assert abs(math.tan(theta) - math.tanh(dist_h3(x, p)) / math.sinh(dist_h3(ORIGIN, p))) < 1e-9


# -- Margulis thin parts -----------------------------------------------------


def test_margulis_horoball_displacement():
    par = MoebiusMap.from_entries(1, 2, 0, 1)
    h = margulis_horoball(par, 0.3)
    p = H3Point(0j, h.size)
    assert abs(dist_h3(p, act_h3(par, p)) - 0.3) < 1e-12


def test_margulis_tube_displacement():
    lox = MoebiusMap.from_entries(math.exp(0.05), 0, 0, math.exp(-0.05))
    tube = margulis_tube(lox, 0.3)
    p = tube_point(tube, 0.0, 0.0)
    best = min(dist_h3(p, act_h3(MoebiusMap.from_entries(math.exp(0.05 * j), 0, 0, math.exp(-0.05 * j)), p))
               for j in range(1, 6))
    assert abs(best - 0.3) < 1e-9
    assert margulis_tube(MoebiusMap.from_entries(math.exp(1), 0, 0, math.exp(-1)), 0.3) is None
