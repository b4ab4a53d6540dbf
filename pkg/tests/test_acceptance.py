"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s``.  Every criterion pins its
tolerance and asserts its runtime budget; the budgets assume the compiled
kernel backend (``normrig.BACKEND == "compiled"``).
"""

import math
import time
from fractions import Fraction

import numpy as np

from normrig import BACKEND
from normrig.cli import main
from normrig.norms import p_norm
from normrig.serialize import load_witness, save_witness
from normrig.spheres import (find_second_pair, h_map, make_frame,
                             pair_sum_gap, sphere_intersect)
from normrig.verify import (approx_gap_check, check_non_collapse,
                            enumerate_placements, equilateral_search, falsify)
from normrig.witness import (FIGURE5_GRAPH, approx_set, build_rational,
                             figure5_config)

EUCL = p_norm(2)
LINF = p_norm(math.inf)


class Budget:
    def __init__(self, name, seconds):
        self.name = name
        self.seconds = seconds

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.elapsed = time.perf_counter() - self.t0
        status = "PASS" if exc_type is None else "FAIL"
        print(f"ACCEPTANCE {self.name}: {status} "
              f"({self.elapsed:.2f}s / budget {self.seconds}s, backend {BACKEND})")
        if exc_type is None:
            assert self.elapsed <= self.seconds, (
                f"{self.name} exceeded its runtime budget: "
                f"{self.elapsed:.2f}s > {self.seconds}s")
        return False


def test_criterion_1_base_closure():
    ratios = ["1", "2", "3", "1/2", "1/3", "2/3", "3/2", "5/4"]
    with Budget("1 base closure", 5.0):
        for q in ratios:
            q = Fraction(q)
            ws = build_rational(EUCL, (0.0, 0.0), (float(q), 0.0), q, 1.0)
            ws.check_invariants(tol=1e-9)


def test_criterion_2_forcing_enumeration():
    with Budget("2 forcing (enumeration)", 10.0):
        for q in (Fraction(1), Fraction(2), Fraction(1, 2)):
            ws = build_rational(EUCL, (0.0, 0.0), (float(q), 0.0), q, 1.0)
            rep = enumerate_placements(ws, EUCL, direction_grid=720, tol=1e-6)
            assert rep.injective_found >= 1, f"q={q}: no injective placement"
            assert rep.max_abs_anchor_gap_injective <= 1e-6, (
                f"q={q}: injective anchor gap {rep.max_abs_anchor_gap_injective}")


def test_criterion_3_injectivity_necessity():
    with Budget("3 injectivity necessity", 1.0):
        ws = build_rational(EUCL, (0.0, 0.0), (2.0, 0.0), 2, 1.0)
        rep = enumerate_placements(ws, EUCL, direction_grid=720, tol=1e-6)
        assert rep.non_injective_found >= 1
        anchors = [p.anchor_gap + ws.target_distance
                   for p in rep.non_injective_examples]
        assert any(abs(a - 1.0) <= 1e-6 for a in anchors), (
            f"no collapsed placement with anchor distance 1: {anchors}")


def test_criterion_4_strict_convexity_necessity():
    with Budget("4 strict convexity necessity", 60.0):
        ws = build_rational(EUCL, (0.0, 0.0), (2.0, 0.0), 2, 1.0)
        rep = falsify(ws, LINF, restarts=1000, seed=7, tol=1e-6,
                      require_injective=True)
        assert rep.violations_found >= 1
        assert max(abs(v.anchor_gap) for v in rep.violations) > 1e-2
        assert all(v.injective for v in rep.violations)
        for p in (1.5, 2.0, 3.0):
            repp = falsify(ws, p_norm(p), restarts=1000, seed=7, tol=1e-6,
                           require_injective=True)
            assert repp.violations_found == 0, f"p={p} found violations"


def test_criterion_5_matched_pair_kernel():
    with Budget("5 matched-pair kernel", 10.0):
        for p in (1.5, 2.0, 3.0):
            norm = p_norm(p)
            rng = np.random.default_rng(17)
            for trial in range(10):
                theta = rng.uniform(0.0, 2.0 * math.pi)
                side = 1 if trial % 2 == 0 else -1
                a = norm.unit_point(theta)
                b = sphere_intersect(norm, (0, 0), 1.0, a, 1.0, side=side).point
                fr = make_frame(norm, a, b)
                assert h_map(fr, norm, a) == b  # exact
                for k in range(10):
                    u = norm.unit_point(rng.uniform(0.0, 2.0 * math.pi))
                    hu = h_map(fr, norm, u)
                    hneg = h_map(fr, norm, (-u[0], -u[1]))
                    assert abs(hneg[0] + hu[0]) <= 1e-9
                    assert abs(hneg[1] + hu[1]) <= 1e-9
                assert pair_sum_gap(fr, norm, a) <= 1e-9
                assert pair_sum_gap(fr, norm, (-a[0], -a[1])) >= 2.0 - 1e-6
                at, bt = find_second_pair(fr, norm)
                for val in (norm.eval(at), norm.eval(bt), norm.dist(at, bt),
                            norm.eval((at[0] + bt[0] - a[0] - b[0],
                                       at[1] + bt[1] - a[1] - b[1]))):
                    assert abs(val - 1.0) <= 1e-9
        # closed-form euclidean cross-check
        fr = make_frame(EUCL, (1.0, 0.0), (0.5, math.sqrt(3.0) / 2.0))
        at, _ = find_second_pair(fr, EUCL)
        assert abs(at[0] - 5.0 / 6.0) <= 1e-9


def test_criterion_6_eleven_point_gadget():
    with Budget("6 gadget non-collapse", 120.0):
        for p in (1.5, 2.0, 3.0):
            norm = p_norm(p)
            ws = figure5_config(norm, (0.0, 0.0), (2.0, 0.0))
            assert len(ws.points) == 11 and len(ws.edges) == 19
            assert float(np.max(ws.edge_residuals())) <= 1e-9
            if p == 2.0:
                d = ws.rho
                found = {(i, j) for i in range(11) for j in range(i + 1, 11)
                         if abs(norm.dist(ws.points[i], ws.points[j]) - d) <= 1e-6}
                assert found == set(FIGURE5_GRAPH.edges)
            rep = enumerate_placements(ws, norm, direction_grid=720, tol=1e-6)
            assert rep.placements_found >= 1
            assert check_non_collapse(ws, norm, rep) is True, f"p={p}"


def test_criterion_7_equilateral_dichotomy():
    with Budget("7 equilateral dichotomy", 120.0):
        r_inf = equilateral_search(LINF, 1.0, 4, restarts=10_000, seed=2)
        assert r_inf.best_residual <= 1e-9
        for p in (1.5, 2.0):
            r4 = equilateral_search(p_norm(p), 1.0, 4, restarts=10_000, seed=2)
            assert r4.best_residual >= 1e-2, f"p={p}: {r4.best_residual}"
        for norm in (LINF, p_norm(1.5), p_norm(2.0)):
            r3 = equilateral_search(norm, 1.0, 3, restarts=100, seed=2)
            assert r3.best_residual <= 1e-9


def test_criterion_8_approximate_set():
    with Budget("8 approximate set", 30.0):
        ws = approx_set(EUCL, (0.0, 0.0), (math.sqrt(2.0), 0.0), 0.1, 1.0)
        ws.check_invariants(tol=1e-9)
        rep = falsify(ws, EUCL, restarts=8, seed=5, tol=1e-6)
        assert rep.placements_found >= 1
        assert approx_gap_check(ws, EUCL, rep, tol=1e-6) is True, (
            f"worst injective gap {rep.max_abs_anchor_gap_injective}")


def test_criterion_9_determinism_and_round_trip(tmp_path):
    with Budget("9 determinism & round trip", 30.0):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        for out in (a, b):
            assert main(["build", "--q", "3/2", "--rho", "1",
                         "--source-norm", "p:2", "--out", str(out)]) == 0
        assert a.read_bytes() == b.read_bytes()

        c = tmp_path / "c.json"
        save_witness(load_witness(str(a)), str(c))
        assert a.read_bytes() == c.read_bytes()

        r1 = tmp_path / "r1.json"
        r2 = tmp_path / "r2.json"
        for rep in (r1, r2):
            code = main(["verify", "--in", str(a), "--target-norm", "p:inf",
                         "--mode", "falsify", "--restarts", "120",
                         "--seed", "9", "--out", str(rep)])
            assert code in (0, 2)
        assert r1.read_bytes() == r2.read_bytes()
