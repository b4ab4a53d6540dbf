"""Witness-set constructions against closed-form oracles."""

import inspect
import math
from fractions import Fraction

import numpy as np
import pytest

from normrig.norms import p_norm
from normrig.witness import (FIGURE5_GRAPH, BuildError, approx_set,
                             base_pair, build_rational, dedup_and_merge,
                             divide_set, double_set, figure5_config,
                             multiply_set)

EUCL = p_norm(2)
P15 = p_norm(1.5)
P3 = p_norm(3)
LINF = p_norm(math.inf)
H = math.sqrt(3.0) / 2.0


def coords_set(ws, tol=1e-9):
    return {(round(x / tol), round(y / tol)) for x, y in ws.points}


def test_base_pair():
    ws = base_pair(EUCL, (0, 0), (1, 0), 1.0)
    assert len(ws.points) == 2 and len(ws.edges) == 1
    assert ws.target_distance == 1.0
    ws.check_invariants()

    same = base_pair(EUCL, (3, 4), (3, 4), 1.0)
    assert len(same.points) == 1 and not same.edges
    assert same.target_distance == 0.0
    same.check_invariants()

    with pytest.raises(BuildError):
        base_pair(EUCL, (0, 0), (0.5, 0), 1.0)


def test_double_set_euclidean_closed_form():
    ws = double_set(EUCL, (0, 0), (2, 0), 1.0)
    # circle intersections put the two apexes at height sqrt(3)/2
    expect = {(0, 0), (1, 0), (2, 0), (0.5, H), (1.5, H)}
    assert coords_set(ws) == {(round(x / 1e-9), round(y / 1e-9)) for x, y in expect}
    assert len(ws.edges) == 7
    assert ws.target_distance == 2.0
    assert (ws.labels[ws.anchor_x], ws.labels[ws.anchor_y]) == ("x", "y")
    ws.check_invariants()


def test_double_set_p15_residuals():
    ws = double_set(P15, (0, 0), (2, 0), 1.0)
    assert len(ws.points) == 5
    assert float(np.max(ws.edge_residuals())) <= 1e-9
    ws.check_invariants()


def test_multiply_chain_positions():
    ws = multiply_set(EUCL, (0, 0), (3, 0), 3, 1.0)
    pts = coords_set(ws)
    for i in range(4):
        assert (round(i / 1e-9), 0) in pts
    # sub-pairs at distance 1: three adjacent; at distance 2: two
    assert len(ws.points) == 7
    assert len(ws.edges) == 11
    ws.check_invariants()


def test_multiply_k1_reduces_to_base():
    ws = multiply_set(EUCL, (0, 0), (1, 0), 1, 1.0)
    assert len(ws.points) == 2 and len(ws.edges) == 1


def test_multiply_k2_matches_double():
    # hand enumeration: chain of three plus the two doubling apexes
    ws = multiply_set(EUCL, (0, 0), (2, 0), 2, 1.0)
    assert len(ws.points) == 5
    assert len(ws.edges) == 7
    assert coords_set(ws) == coords_set(double_set(EUCL, (0, 0), (2, 0), 1.0))


def test_divide_closed_form():
    ws = divide_set(EUCL, (0, 0), (0.5, 0), 2, 1.0)
    z = (0.25, math.sqrt(1 - 0.0625))
    pts = coords_set(ws)
    for expect in [(0, 0), (0.5, 0), z, (-0.25, -z[1]), (0.75, -z[1])]:
        key = (round(expect[0] / 1e-9), round(expect[1] / 1e-9))
        assert key in pts, f"missing {expect}"
    assert len(ws.points) == 9
    assert abs(EUCL.dist((-0.25, -z[1]), (0.75, -z[1])) - 1.0) <= 1e-12
    ws.check_invariants()


def test_divide_k1_reduces():
    ws = divide_set(EUCL, (0, 0), (1, 0), 1, 1.0)
    assert len(ws.points) == 2


def test_divide_p3_k3_residuals():
    ws = divide_set(P3, (0, 0), (1.0 / 3.0, 0), 3, 1.0)
    assert float(np.max(ws.edge_residuals())) <= 1e-9
    assert abs(ws.anchor_residual()) <= 1e-9
    ws.check_invariants()


def test_build_rational_core_cases():
    w1 = build_rational(EUCL, (0, 0), (1, 0), 1, 1.0)
    assert len(w1.points) == 2
    w2 = build_rational(EUCL, (0, 0), (2, 0), 2, 1.0)
    assert len(w2.points) == 5 and len(w2.edges) == 7
    wh = build_rational(EUCL, (0, 0), (0.5, 0), Fraction(1, 2), 1.0)
    assert len(wh.points) == 9 and len(wh.edges) == 15
    for ws in (w1, w2, wh):
        ws.check_invariants()


def test_build_rational_precondition():
    with pytest.raises(BuildError):
        build_rational(EUCL, (0, 0), (1.01, 0), 1, 1.0)


@pytest.mark.parametrize("q", ["1", "2", "3", "1/2", "1/3", "2/3", "3/2", "5/4"])
def test_build_rational_invariants_suite(q):
    q = Fraction(q)
    ws = build_rational(EUCL, (0, 0), (float(q), 0), q, 1.0)
    ws.check_invariants(tol=1e-9)
    assert abs(ws.target_distance - float(q)) <= 1e-12


def test_witness_sets_are_exactly_braced():
    # every construction so far lands on |E| = 2|V| - 3
    for q in ("2", "3", "1/2", "2/3", "5/4"):
        q = Fraction(q)
        ws = build_rational(EUCL, (0, 0), (float(q), 0), q, 1.0)
        assert len(ws.edges) == 2 * len(ws.points) - 3


def test_approx_set_sqrt2():
    ws = approx_set(EUCL, (0, 0), (math.sqrt(2), 0), 0.1, 1.0)
    assert ws.approximate and ws.eps == 0.1
    q = Fraction(ws.trace["q"])
    r = Fraction(ws.trace["r"])
    # leg feasibility: |target - q*rho| <= r*rho and r <= eps / (2 rho)
    assert abs(math.sqrt(2) - float(q)) <= float(r)
    assert float(r) <= 0.05
    assert ws.target_distance == pytest.approx(math.sqrt(2), abs=1e-15)
    ws.check_invariants()


def test_approx_set_exact_ratio_folds():
    ws = approx_set(EUCL, (0, 0), (1.5, 0), 0.4, 1.0)
    assert ws.approximate
    assert Fraction(ws.trace["q"]) == Fraction(3, 2)
    ws.check_invariants()


def test_approx_set_needs_positive_eps():
    with pytest.raises(BuildError):
        approx_set(EUCL, (0, 0), (1, 0), 0.0, 1.0)


def test_figure5_euclidean_geometry():
    ws = figure5_config(EUCL, (0, 0), (2, 0))
    assert len(ws.points) == 11
    assert len(ws.edges) == 19
    assert ws.labels == list(FIGURE5_GRAPH.vertex_labels)
    assert float(np.max(ws.edge_residuals())) <= 1e-9
    # fig-1 sub-lattice comes out in closed form
    lab = {name: ws.points[i] for i, name in enumerate(ws.labels)}
    assert lab["z"] == pytest.approx((1, 0), abs=1e-12)
    assert lab["y1"] == pytest.approx((0.5, H), abs=1e-9)
    assert lab["x1"] == pytest.approx((1.5, H), abs=1e-9)
    ws.check_invariants()


def test_figure5_unit_pairs_match_adjacency():
    ws = figure5_config(EUCL, (0, 0), (2, 0))
    d = ws.rho
    found = set()
    for i in range(11):
        for j in range(i + 1, 11):
            if abs(EUCL.dist(ws.points[i], ws.points[j]) - d) <= 1e-6:
                found.add((i, j))
    assert found == set(FIGURE5_GRAPH.edges)
    assert ws.trace["extra_unit_pairs"] == []


@pytest.mark.parametrize("norm", [P15, P3])
def test_figure5_other_norms(norm):
    ws = figure5_config(norm, (0, 0), (2, 0))
    assert float(np.max(ws.edge_residuals())) <= 1e-9
    ws.check_invariants()


def test_figure5_continuation_for_flat_norms():
    ws = figure5_config(LINF, (0, 0), (2, 0))
    assert float(np.max(ws.edge_residuals())) <= 1e-9
    assert len(ws.trace["lambda_path"]) >= 1


def test_figure5_graph_shape():
    assert len(FIGURE5_GRAPH.vertex_labels) == 11
    assert len(FIGURE5_GRAPH.edges) == 19


def test_dedup_and_merge():
    ws = double_set(EUCL, (0, 0), (2, 0), 1.0)
    merged = dedup_and_merge([ws, ws])
    assert len(merged.points) == len(ws.points)
    assert len(merged.edges) == len(ws.edges)
    assert merged.anchor_x == ws.anchor_x and merged.anchor_y == ws.anchor_y
    assert merged.target_distance == ws.target_distance

    other = base_pair(EUCL, (0, 0), (1, 0), 1.0)
    both = dedup_and_merge([ws, other])
    assert len(both.points) == len(ws.points)  # base pair is a subset

    conflicting = base_pair(EUCL, (0, 0), (2, 0), 2.0)
    with pytest.raises(BuildError):
        dedup_and_merge([ws, conflicting])


def test_merge_of_seven_doubling_pairs():
    # the doubling gadget's seven sub-pairs collapse onto five points
    ws = double_set(EUCL, (0, 0), (2, 0), 1.0)
    assert len(ws.points) == 5


def test_builders_never_see_a_target_norm():
    for fn in (base_pair, double_set, multiply_set, divide_set,
               build_rational, approx_set, figure5_config, dedup_and_merge):
        params = inspect.signature(fn).parameters
        assert not any("target" in name for name in params), fn.__name__


def test_trace_rules_present():
    ws = build_rational(EUCL, (0, 0), (1.5, 0), Fraction(3, 2), 1.0)
    rules = set()

    def walk(node):
        if isinstance(node, dict):
            rules.add(node.get("rule"))
            for c in node.get("children", []):
                walk(c)

    walk(ws.trace)
    assert {"fig3", "fig2", "fig1", "base"} <= rules
