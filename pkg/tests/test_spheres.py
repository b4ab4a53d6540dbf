"""Sphere intersection and the matched-pair machinery."""

import math

import numpy as np
import pytest

from normrig.norms import SidePreconditionError, p_norm
from normrig.spheres import (InfeasibleRadiiError,
                             find_second_pair, h_map, make_frame,
                             pair_sum_gap, scan_star_condition, side_of_line,
                             sphere_intersect)

EUCL = p_norm(2)
P15 = p_norm(1.5)
P3 = p_norm(3)
LINF = p_norm(math.inf)
SQRT3_2 = math.sqrt(3.0) / 2.0


def circle_circle(ax, ay, r1, bx, by, r2):
    """Closed-form euclidean circle intersection (test oracle)."""
    dx, dy = bx - ax, by - ay
    d = math.hypot(dx, dy)
    a = (r1 * r1 - r2 * r2 + d * d) / (2 * d)
    h = math.sqrt(r1 * r1 - a * a)
    mx, my = ax + a * dx / d, ay + a * dy / d
    return ((mx - h * dy / d, my + h * dx / d),
            (mx + h * dy / d, my - h * dx / d))


def test_side_of_line():
    assert side_of_line((0, 0), (1, 0), (0.5, 1)) == 1
    assert side_of_line((0, 0), (1, 0), (0.5, -1)) == -1
    with pytest.raises(SidePreconditionError):
        side_of_line((0, 0), (1, 0), (2, 0))


def test_intersect_euclidean_closed_form():
    up, down = circle_circle(0, 0, 1, 1, 0, 1)
    res = sphere_intersect(EUCL, (0, 0), 1, (1, 0), 1, side=1)
    assert res.point == pytest.approx(up, abs=1e-12)
    assert not res.tangent
    res2 = sphere_intersect(EUCL, (0, 0), 1, (1, 0), 1, side=-1)
    assert res2.point == pytest.approx(down, abs=1e-12)


def test_intersect_random_euclidean_against_oracle():
    rng = np.random.default_rng(2)
    for _ in range(200):
        a = rng.uniform(-2, 2, 2)
        b = rng.uniform(-2, 2, 2)
        d = math.hypot(*(b - a))
        if d < 0.2:
            continue
        r1 = rng.uniform(0.3 * d, 1.5 * d)
        lo = abs(r1 - d) + 0.05 * d
        hi = r1 + d - 0.05 * d
        if lo >= hi:
            continue
        r2 = rng.uniform(lo, hi)
        up, down = circle_circle(a[0], a[1], r1, b[0], b[1], r2)
        got = sphere_intersect(EUCL, tuple(a), r1, tuple(b), r2, side=1)
        assert got.point == pytest.approx(up, abs=1e-9)


def test_intersect_tangency():
    res = sphere_intersect(EUCL, (0, 0), 1, (2, 0), 1, side=1)
    assert res.tangent
    assert res.point == pytest.approx((1.0, 0.0), abs=1e-12)


def test_intersect_infeasible():
    with pytest.raises(InfeasibleRadiiError):
        sphere_intersect(EUCL, (0, 0), 1, (5, 0), 1)
    with pytest.raises(InfeasibleRadiiError):
        sphere_intersect(EUCL, (0, 0), 3, (0.5, 0), 1)


def test_intersect_p15_residuals():
    res = sphere_intersect(P15, (0, 0), 1, (1, 0), 1, side=1)
    assert abs(P15.eval(res.point) - 1.0) <= 1e-9
    assert abs(P15.dist(res.point, (1, 0)) - 1.0) <= 1e-9


@pytest.mark.parametrize("norm", [EUCL, P15, P3])
def test_intersect_feasible_instances_bulk(norm):
    rng = np.random.default_rng(7)
    count = 0
    while count < 1000:
        a = rng.uniform(-2, 2, 2)
        b = rng.uniform(-2, 2, 2)
        d = norm.dist(a, b)
        if d < 0.2:
            continue
        r1 = rng.uniform(0.3 * d, 1.5 * d)
        lo = abs(r1 - d) + 0.05 * d
        hi = r1 + d - 0.05 * d
        if lo >= hi:
            continue
        r2 = rng.uniform(lo, hi)
        side = 1 if count % 2 == 0 else -1
        res = sphere_intersect(norm, tuple(a), r1, tuple(b), r2, side=side)
        assert abs(norm.dist(res.point, a) - r1) <= 1e-9
        assert abs(norm.dist(res.point, b) - r2) <= 1e-9
        assert side_of_line(tuple(a), tuple(b), res.point) == side
        count += 1


@pytest.mark.parametrize("norm", [EUCL, P15])
def test_intersect_two_solutions_only(norm):
    # sweep 2000 directions: no third point matches both radii
    a, b, r1, r2 = (0.0, 0.0), (1.0, 0.0), 1.0, 1.0
    plus = sphere_intersect(norm, a, r1, b, r2, side=1).point
    minus = sphere_intersect(norm, a, r1, b, r2, side=-1).point
    for k in range(2000):
        theta = 2 * math.pi * k / 2000
        u = norm.unit_point(theta)
        p = (r1 * u[0], r1 * u[1])
        if abs(norm.dist(p, b) - r2) <= 1e-5:
            close = min(norm.dist(p, plus), norm.dist(p, minus))
            assert close <= 1e-2


def frame60():
    return make_frame(EUCL, (1.0, 0.0), (0.5, SQRT3_2))


def test_h_map_fixed_points():
    fr = frame60()
    assert h_map(fr, EUCL, (1.0, 0.0)) == (0.5, SQRT3_2)
    hm = h_map(fr, EUCL, (-1.0, 0.0))
    assert hm == (-0.5, -SQRT3_2)


def test_h_map_is_rotation_for_euclid():
    # for the euclidean frame at 60 degrees, h rotates by +60 degrees
    fr = frame60()
    got = h_map(fr, EUCL, (0.0, 1.0))
    assert got == pytest.approx((-SQRT3_2, 0.5), abs=1e-12)


def test_h_map_oddness_and_sum_lower_bound():
    fr = frame60()
    for norm in (EUCL, P15, P3):
        f = make_frame(norm, norm.unit_point(0.3),
                       sphere_intersect(norm, (0, 0), 1,
                                        norm.unit_point(0.3), 1, side=1).point)
        for k in range(100):
            theta = 2 * math.pi * k / 100
            u = norm.unit_point(theta)
            hu = f and h_map(f, norm, u)
            h_neg = h_map(f, norm, (-u[0], -u[1]))
            assert abs(h_neg[0] + hu[0]) <= 1e-9
            assert abs(h_neg[1] + hu[1]) <= 1e-9
            assert norm.eval((u[0] + hu[0], u[1] + hu[1])) >= 1.0 - 1e-9
    del fr


def test_pair_sum_gap_values():
    fr = frame60()
    assert pair_sum_gap(fr, EUCL, (1.0, 0.0)) == 0.0
    # g(-a) = 2 * |a + b| = 2 * sqrt(3) in this frame
    assert pair_sum_gap(fr, EUCL, (-1.0, 0.0)) == pytest.approx(
        2.0 * math.sqrt(3.0), abs=1e-12)


def test_pair_sum_gap_lower_bound_at_antipode():
    for norm in (EUCL, P15, P3):
        a = norm.unit_point(1.1)
        b = sphere_intersect(norm, (0, 0), 1, a, 1, side=1).point
        fr = make_frame(norm, a, b)
        assert pair_sum_gap(fr, norm, (-a[0], -a[1])) >= 2.0 - 1e-6


def test_pair_sum_gap_continuity_smoke():
    # |delta g| <= C * delta theta along the sphere for a modest C
    fr = frame60()
    dt = 1e-4
    worst = 0.0
    for k in range(1000):
        t = 2 * math.pi * k / 1000
        g1 = pair_sum_gap(fr, EUCL, EUCL.unit_point(t))
        g2 = pair_sum_gap(fr, EUCL, EUCL.unit_point(t + dt))
        worst = max(worst, abs(g2 - g1) / dt)
    assert worst <= 10.0


def test_find_second_pair_euclidean_closed_form():
    # root at angle t with cos t = 5/6; verified against the defining
    # equalities below
    fr = frame60()
    at, bt = find_second_pair(fr, EUCL)
    assert at[0] == pytest.approx(5.0 / 6.0, abs=1e-9)
    assert at[1] == pytest.approx(math.sqrt(11.0) / 6.0, abs=1e-9)


@pytest.mark.parametrize("norm", [P15, EUCL, P3])
def test_find_second_pair_equalities(norm):
    rng = np.random.default_rng(13)
    for trial in range(10):
        theta = rng.uniform(0, 2 * math.pi)
        side = 1 if trial % 2 == 0 else -1
        a = norm.unit_point(theta)
        b = sphere_intersect(norm, (0, 0), 1.0, a, 1.0, side=side).point
        fr = make_frame(norm, a, b)
        at, bt = find_second_pair(fr, norm)
        assert abs(norm.eval(at) - 1.0) <= 1e-9
        assert abs(norm.eval(bt) - 1.0) <= 1e-9
        assert abs(norm.dist(at, bt) - 1.0) <= 1e-9
        gap = norm.eval((at[0] + bt[0] - a[0] - b[0],
                         at[1] + bt[1] - a[1] - b[1]))
        assert abs(gap - 1.0) <= 1e-9


def test_find_second_pair_rejects_non_strictly_convex_claim():
    with pytest.raises(ValueError):
        h_map(frame60(), LINF, (1.0, 0.0))


def test_scan_star_condition():
    rep = scan_star_condition(EUCL, samples=200, seed=4)
    assert rep.holds
    assert rep.max_violation <= 1e-6
    rep_inf = scan_star_condition(LINF, samples=400, seed=4)
    assert not rep_inf.holds
    a, b, c, d = rep_inf.witness_quadruple
    assert abs(LINF.dist(a, c) - LINF.dist(a, d)) <= 1e-6
    assert abs(LINF.dist(b, c) - LINF.dist(b, d)) <= 1e-6
    assert LINF.dist(c, d) > 1e-6


def test_h_map_rejects_off_sphere_point():
    fr = frame60()
    with pytest.raises(ValueError):
        h_map(fr, EUCL, (0.5, 0.5))


def test_intersect_inner_tangency():
    res = sphere_intersect(EUCL, (0, 0), 2, (1, 0), 1, side=1)
    assert res.tangent
    assert res.point == pytest.approx((2.0, 0.0), abs=1e-12)
