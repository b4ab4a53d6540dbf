"""The compiled kernel and its pure-Python twin must agree."""

import math

import numpy as np
import pytest

from normrig import _pykernel as pure

try:
    from normrig import _core as comp
except ImportError:
    comp = None

pytestmark = pytest.mark.skipif(comp is None,
                                reason="compiled kernel not built")


def norm_args(kind):
    if kind == "p15":
        return ([1.0], [pure.K_3_2], [1.5], [2.0 / 3.0], [0], [0],
                np.zeros((0, 2)))
    if kind == "p2":
        return ([1.0], [pure.K_TWO], [2.0], [0.5], [0], [0], np.zeros((0, 2)))
    if kind == "p27":
        return ([1.0], [pure.K_P], [2.7], [1 / 2.7], [0], [0], np.zeros((0, 2)))
    if kind == "inf":
        return ([1.0], [pure.K_INF], [0.0], [0.0], [0], [0], np.zeros((0, 2)))
    if kind == "square":
        facets = np.array([(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)])
        return ([1.0], [pure.K_POLY], [0.0], [0.0], [0], [4], facets)
    if kind == "blend":
        return ([0.9, 0.1], [pure.K_INF, pure.K_TWO], [0.0, 2.0],
                [0.0, 0.5], [0, 0], [0, 0], np.zeros((0, 2)))
    raise KeyError(kind)


def pack_pair(kind):
    a = norm_args(kind)
    arrs = (np.array(a[0]), np.array(a[1], dtype=np.intc), np.array(a[2]),
            np.array(a[3]), np.array(a[4], dtype=np.intc),
            np.array(a[5], dtype=np.intc), np.asarray(a[6], dtype=np.float64))
    return pure.pack_norm(*arrs), comp.pack_norm(*arrs)


KINDS = ["p15", "p2", "p27", "inf", "square", "blend"]


@pytest.mark.parametrize("kind", KINDS)
def test_eval_parity(kind):
    pp, cc = pack_pair(kind)
    rng = np.random.default_rng(1)
    for _ in range(500):
        x, y = rng.uniform(-30, 30, 2)
        assert pure.eval1(pp, x, y) == comp.eval1(cc, x, y)


@pytest.mark.parametrize("kind", KINDS)
def test_grad_parity(kind):
    pp, cc = pack_pair(kind)
    rng = np.random.default_rng(2)
    for _ in range(300):
        x, y = rng.uniform(-5, 5, 2)
        assert pure.grad1(pp, x, y) == comp.grad1(cc, x, y)


@pytest.mark.parametrize("kind", KINDS)
def test_eval_many_parity(kind):
    pp, cc = pack_pair(kind)
    rng = np.random.default_rng(3)
    xy = rng.uniform(-10, 10, (200, 2))
    np.testing.assert_array_equal(pure.eval_many(pp, xy), comp.eval_many(cc, xy))


@pytest.mark.parametrize("kind", ["p15", "p2", "p27", "blend"])
def test_intersect_parity(kind):
    pp, cc = pack_pair(kind)
    rng = np.random.default_rng(4)
    for trial in range(200):
        ax, ay, bx, by = rng.uniform(-2, 2, 4)
        r1, r2 = rng.uniform(0.5, 2.5, 2)
        side = 1 if trial % 2 == 0 else -1
        got_p = pure.intersect(pp, ax, ay, r1, bx, by, r2, side, 1e-13, 80)
        got_c = comp.intersect(cc, ax, ay, r1, bx, by, r2, side, 1e-13, 80)
        assert got_p[2] == got_c[2]
        if got_p[2] <= 1:
            assert got_p[0] == pytest.approx(got_c[0], abs=1e-12)
            assert got_p[1] == pytest.approx(got_c[1], abs=1e-12)


def test_sphere_pt_parity():
    pp, cc = pack_pair("p15")
    for k in range(50):
        t = 2 * math.pi * k / 50
        assert pure.sphere_pt(pp, 0.3, -0.2, 1.7, t) == \
            comp.sphere_pt(cc, 0.3, -0.2, 1.7, t)


@pytest.mark.parametrize("kind", ["p2", "p15", "inf"])
def test_lm_edges_parity(kind):
    pp, cc = pack_pair(kind)
    rng = np.random.default_rng(5)
    edges = np.array([(0, 1), (1, 2), (0, 2), (0, 3), (1, 3)], dtype=np.intc)
    targets = np.ones(5)
    free = np.array([0, 1, 1, 1], dtype=np.uint8)
    start = rng.uniform(-1, 1, (4, 2))
    p_pts = np.ascontiguousarray(start.copy())
    c_pts = np.ascontiguousarray(start.copy())
    rp, _ = pure.lm_edges(pp, p_pts, edges, targets, free, -1, -1, 0.0, 0.0,
                          80, 1e-12, 1e-3)
    rc, _ = comp.lm_edges(cc, c_pts, edges, targets, free, -1, -1, 0.0, 0.0,
                          80, 1e-12, 1e-3)
    # different linear solvers, same optimum
    assert rp <= 1e-10 and rc <= 1e-10
    np.testing.assert_allclose(p_pts, c_pts, atol=1e-7)


def test_pairs_max_resid_parity():
    pp, cc = pack_pair("square")
    pts = np.array([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)])
    assert pure.pairs_max_resid(pp, pts, 1.0) == comp.pairs_max_resid(cc, pts, 1.0)


def _tiny_plan():
    # seed, sweep, place, then a closure block: sweep + place with a check
    kind = np.array([pure.S_SEED, pure.S_SWEEP, pure.S_PLACE,
                     pure.S_SWEEP, pure.S_PLACE], dtype=np.intc)
    v = np.array([0, 1, 2, 3, 4], dtype=np.intc)
    n1 = np.array([-1, 0, 0, 2, 3], dtype=np.intc)
    n2 = np.array([-1, -1, 1, -1, 0], dtype=np.intc)
    slot = np.array([-1, 0, 0, 1, 1], dtype=np.intc)
    chk_off = np.array([0, 0, 0, 0, 0, 1], dtype=np.intc)
    chk_i = np.array([4], dtype=np.intc)
    chk_j = np.array([1], dtype=np.intc)
    chk_closure = np.array([1], dtype=np.uint8)
    return (kind, v, n1, n2, slot, chk_off, chk_i, chk_j, chk_closure, 1.0)


@pytest.mark.parametrize("kind", ["p2", "p15"])
def test_place_and_closure_parity(kind):
    pp, cc = pack_pair(kind)
    plan_args = _tiny_plan()
    plan_p = pure.pack_plan(*plan_args)
    plan_c = comp.pack_plan(*plan_args)
    signs = np.zeros(2, dtype=np.uint8)
    phis = np.array([0.0, 0.0])
    pts_p = np.full((5, 2), np.nan)
    pts_c = np.full((5, 2), np.nan)
    code_p, w_p = pure.place_range(pp, plan_p, 0, 3, pts_p, signs, phis, True)
    code_c, w_c = comp.place_range(cc, plan_c, 0, 3, pts_c, signs, phis, True)
    assert code_p == code_c == 0
    np.testing.assert_array_equal(pts_p[:3], pts_c[:3])
    roots_p = pure.closure_roots(pp, plan_p, 3, 5, 4, 1, pts_p, signs, phis,
                                 64, 1e-3)
    roots_c = comp.closure_roots(cc, plan_c, 3, 5, 4, 1, pts_c, signs, phis,
                                 64, 1e-3)
    np.testing.assert_allclose(roots_p, roots_c, atol=1e-12)
    assert len(roots_p) >= 1


def test_leaf_stats_parity():
    pp, cc = pack_pair("p2")
    pts = np.array([(0.0, 0.0), (1.0, 0.0), (0.5, 0.8660254037844386),
                    (0.5, 0.8660254037844386)])
    edges = np.array([(0, 1), (0, 2), (1, 2)], dtype=np.intc)
    buf_p = np.zeros((8, 2), dtype=np.intc)
    buf_c = np.zeros((8, 2), dtype=np.intc)
    sp = pure.leaf_stats(pp, pts, edges, 1.0, 0, 1, 1e-7, buf_p)
    sc = comp.leaf_stats(cc, pts, edges, 1.0, 0, 1, 1e-7, buf_c)
    assert sp == sc
    np.testing.assert_array_equal(buf_p, buf_c)
    assert sp[3] == 1  # the duplicated apex counts as one coincident pair


def test_backends_report_distinct_names():
    assert pure.BACKEND_NAME == "pure-python"
    assert comp.BACKEND_NAME == "compiled"
