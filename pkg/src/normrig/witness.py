"""Recursive construction of witness point sets.

A witness set is a finite labeled point collection in a source normed plane
together with its unit edges (point pairs at source distance rho) and a
distinguished anchor pair (x, y).  The edge graph is built so that any
placement into a strictly convex plane that preserves every unit edge is
forced to reproduce the anchor distance; the verifier in
``normrig.verify`` puts that claim under test.

Constructions compose recursively:

* ``base_pair``       -- the trivial set for distance 0 or rho,
* ``double_set``      -- rule "fig1": doubles a distance with two triangles,
* ``multiply_set``    -- rule "fig2": collinear chain for integer multiples,
* ``divide_set``      -- rule "fig3": reflected apex for integer divisions,
* ``build_rational``  -- composes the above for any ratio m/n,
* ``approx_set``      -- rule "fig4": two rational legs within eps,
* ``figure5_config``  -- the 11-point, 19-edge doubling gadget whose
  placements cannot collapse the doubled pair.

Builders read only the source norm; no operation here takes a target norm.
They are pure given their inputs (memoization lives inside one build call),
so independent builds may run concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from normrig import _backend as kernel
from normrig.norms import CONSTRUCTION_TOL, VERIFY_TOL, Norm2, Vec2, strictify
from normrig.spheres import sphere_intersect, make_frame, find_second_pair

DEDUP_TOL = 1e-9

SubBuilder = Callable[[Vec2, Vec2, float], "WitnessSet"]


class BuildError(ValueError):
    """Construction preconditions violated or a sub-construction failed."""


class InvariantError(ValueError):
    """A finished witness set fails its own consistency checks."""


@dataclass
class WitnessSet:
    """Labeled point set with unit edges anchored at (x, y)."""

    points: list[Vec2]
    labels: list[str]
    rho: float
    edges: list[tuple[int, int]]
    anchor_x: int
    anchor_y: int
    target_distance: float
    source_norm: Norm2
    trace: dict
    approximate: bool = False
    eps: Optional[float] = None

    def __len__(self) -> int:
        return len(self.points)

    def points_array(self) -> np.ndarray:
        return np.array(self.points, dtype=np.float64)

    def edges_array(self) -> np.ndarray:
        return np.array(self.edges, dtype=np.intc).reshape(-1, 2)

    def edge_residuals(self) -> np.ndarray:
        pts = self.points
        n = self.source_norm
        return np.array([abs(n.dist(pts[i], pts[j]) - self.rho)
                         for i, j in self.edges])

    def anchor_residual(self) -> float:
        return abs(self.source_norm.dist(self.points[self.anchor_x],
                                         self.points[self.anchor_y])
                   - self.target_distance)

    def min_pair_separation(self) -> float:
        """Smallest pairwise Chebyshev distance between distinct points."""
        if len(self.points) < 2:
            return math.inf
        pts = self.points_array()
        best = math.inf
        for i in range(len(pts) - 1):
            d = np.max(np.abs(pts[i + 1:] - pts[i]), axis=1)
            m = float(np.min(d))
            if m < best:
                best = m
        return best

    def check_invariants(self, tol: float = CONSTRUCTION_TOL) -> None:
        res = self.edge_residuals()
        if len(res) and float(np.max(res)) > tol:
            raise InvariantError(f"edge residual {float(np.max(res)):.3e} above {tol:.1e}")
        if self.anchor_residual() > tol:
            raise InvariantError(f"anchor residual {self.anchor_residual():.3e} above {tol:.1e}")
        if self.anchor_x == self.anchor_y and self.target_distance != 0.0:
            raise InvariantError("coincident anchors with nonzero target")
        if self.min_pair_separation() <= DEDUP_TOL:
            raise InvariantError("distinct points closer than the dedup tolerance")
        for i, j in self.edges:
            if i == j or not (0 <= i < len(self.points)) or not (0 <= j < len(self.points)):
                raise InvariantError(f"bad edge ({i}, {j})")

    def label_index(self, label: str) -> int:
        return self.labels.index(label)


@dataclass(frozen=True)
class ConfigGraph:
    """Abstract vertex/edge structure independent of coordinates."""

    vertex_labels: tuple[str, ...]
    adjacency: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        n = len(self.vertex_labels)
        if len(self.adjacency) != n or any(len(r) != n for r in self.adjacency):
            raise ValueError("adjacency must be square")
        for i in range(n):
            if self.adjacency[i][i] != 0:
                raise ValueError("adjacency diagonal must be zero")
            for j in range(n):
                if self.adjacency[i][j] != self.adjacency[j][i]:
                    raise ValueError("adjacency must be symmetric")

    @property
    def edges(self) -> list[tuple[int, int]]:
        n = len(self.vertex_labels)
        return [(i, j) for i in range(n) for j in range(i + 1, n)
                if self.adjacency[i][j]]


# The 11-vertex, 19-edge doubling gadget: all edges have one common length d
# and the anchors sit at distance 2d.  Vertex order and adjacency are fixed.
FIGURE5_GRAPH = ConfigGraph(
    vertex_labels=("x", "y", "z", "xt", "x1", "x1t", "yt", "y1", "y1t", "zx", "zy"),
    adjacency=(
        (0, 0, 1, 1, 0, 0, 0, 1, 0, 0, 0),
        (0, 0, 1, 0, 1, 0, 1, 0, 0, 0, 0),
        (1, 1, 0, 0, 1, 0, 0, 1, 0, 0, 0),
        (1, 0, 0, 0, 0, 0, 0, 0, 1, 0, 1),
        (0, 1, 1, 0, 0, 0, 0, 1, 1, 0, 1),
        (0, 0, 0, 0, 0, 0, 1, 1, 0, 1, 0),
        (0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0),
        (1, 0, 1, 0, 1, 1, 0, 0, 0, 1, 0),
        (0, 0, 0, 1, 1, 0, 0, 0, 0, 0, 1),
        (0, 0, 0, 0, 0, 1, 1, 1, 0, 0, 0),
        (0, 0, 0, 1, 1, 0, 0, 0, 1, 0, 0),
    ),
)


class _Acc:
    """Accumulates points/edges with coordinate dedup and label suffixing."""

    def __init__(self, norm: Norm2, rho: float, tol: float = DEDUP_TOL):
        self.norm = norm
        self.rho = float(rho)
        self.tol = tol
        self.cell = 2.0 * tol
        self.points: list[Vec2] = []
        self.labels: list[str] = []
        self.edges: set[tuple[int, int]] = set()
        self._grid: dict[tuple[int, int], list[int]] = {}
        self._label_count: dict[str, int] = {}

    def find(self, x: float, y: float) -> Optional[int]:
        kx = round(x / self.cell)
        ky = round(y / self.cell)
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for idx in self._grid.get((kx + dx, ky + dy), ()):
                    px, py = self.points[idx]
                    if abs(px - x) <= self.tol and abs(py - y) <= self.tol:
                        return idx
        return None

    def add_point(self, xy: Sequence[float], label: str) -> int:
        x = float(xy[0])
        y = float(xy[1])
        idx = self.find(x, y)
        if idx is not None:
            return idx
        idx = len(self.points)
        self.points.append((x, y))
        cnt = self._label_count.get(label, 0) + 1
        self._label_count[label] = cnt
        self.labels.append(label if cnt == 1 else f"{label}#{cnt}")
        self._grid.setdefault((round(x / self.cell), round(y / self.cell)), []).append(idx)
        return idx

    def add_edge(self, i: int, j: int) -> None:
        if i != j:
            self.edges.add((i, j) if i < j else (j, i))

    def merge_set(self, ws: WitnessSet) -> None:
        if abs(ws.rho - self.rho) > 1e-9 * max(1.0, self.rho):
            raise BuildError(f"conflicting rho: {ws.rho} vs {self.rho}")
        if ws.source_norm.descriptor() != self.norm.descriptor():
            raise BuildError("conflicting source norms in merge")
        remap = [self.add_point(p, ws.labels[k]) for k, p in enumerate(ws.points)]
        for i, j in ws.edges:
            self.add_edge(remap[i], remap[j])

    def finish(self, ax_xy: Vec2, ay_xy: Vec2, target: float, trace: dict,
               approximate: bool = False, eps: Optional[float] = None) -> WitnessSet:
        ax = self.find(float(ax_xy[0]), float(ax_xy[1]))
        ay = self.find(float(ay_xy[0]), float(ay_xy[1]))
        if ax is None or ay is None:
            raise BuildError("anchor points missing from accumulated set")
        return WitnessSet(points=self.points, labels=self.labels, rho=self.rho,
                          edges=sorted(self.edges), anchor_x=ax, anchor_y=ay,
                          target_distance=float(target), source_norm=self.norm,
                          trace=trace, approximate=approximate, eps=eps)


def _check_distance(n: Norm2, x: Vec2, y: Vec2, expected: float, what: str) -> None:
    d = n.dist(x, y)
    if abs(d - expected) > 1e-9 * max(1.0, abs(expected)):
        raise BuildError(f"{what}: ||x - y|| = {d}, expected {expected}")


def base_pair(n: Norm2, x: Vec2, y: Vec2, rho: float) -> WitnessSet:
    """Witness set for distance 0 (single point) or rho (one edge)."""
    x = (float(x[0]), float(x[1]))
    y = (float(y[0]), float(y[1]))
    d = n.dist(x, y)
    acc = _Acc(n, rho)
    if d <= 1e-9 * max(1.0, rho):
        acc.add_point(x, "x")
        return acc.finish(x, x, 0.0, {"rule": "base", "ratio": "0"})
    if abs(d - rho) <= 1e-9 * max(1.0, rho):
        i = acc.add_point(x, "x")
        j = acc.add_point(y, "y")
        acc.add_edge(i, j)
        return acc.finish(x, y, rho, {"rule": "base", "ratio": "1"})
    raise BuildError(f"base pair distance {d} is neither 0 nor rho = {rho}")


def _grounded_sub(n: Norm2, unit: float) -> SubBuilder:
    return _Builder(n, unit).sub


def double_set(n: Norm2, x: Vec2, y: Vec2, d: float,
               sub: Optional[SubBuilder] = None) -> WitnessSet:
    """Distance doubler (rule "fig1").

    Requires ||x - y|| = 2d.  Places the midpoint z, an apex y1 at distance d
    from x and z, and its translate x1 = y1 + (z - x); the union of the seven
    distance-d sub-sets over the resulting pairs pins 2d down.
    """
    x = (float(x[0]), float(x[1]))
    y = (float(y[0]), float(y[1]))
    _check_distance(n, x, y, 2.0 * d, "double_set")
    if sub is None:
        sub = _grounded_sub(n, d)
    z = ((x[0] + y[0]) / 2.0, (x[1] + y[1]) / 2.0)
    y1 = sphere_intersect(n, x, d, z, d, side=1).point
    x1 = (y1[0] + z[0] - x[0], y1[1] + z[1] - x[1])
    pairs = [(x, z), (z, y), (y1, x1), (x, y1), (z, x1), (z, y1), (y, x1)]
    children = [sub(a, b, d) for a, b in pairs]
    acc = _Acc(n, children[0].rho)
    for pt, lab in ((x, "x"), (z, "z"), (y, "y"), (y1, "y1"), (x1, "x1")):
        acc.add_point(pt, lab)
    for ch in children:
        acc.merge_set(ch)
    trace = {"rule": "fig1", "d": d, "children": [c.trace for c in children]}
    return acc.finish(x, y, 2.0 * d, trace)


def multiply_set(n: Norm2, x: Vec2, y: Vec2, k: int, d: float,
                 sub: Optional[SubBuilder] = None) -> WitnessSet:
    """Integer-multiple chain (rule "fig2").

    Requires ||x - y|| = k*d.  Lays out the collinear chain w_i = x +
    (i/k)(y - x) and unions the sub-sets of every chain pair at distance d
    or 2d.
    """
    if k < 1:
        raise BuildError(f"k must be a positive integer, got {k}")
    x = (float(x[0]), float(x[1]))
    y = (float(y[0]), float(y[1]))
    _check_distance(n, x, y, k * d, "multiply_set")
    if sub is None:
        sub = _grounded_sub(n, d)
    if k == 1:
        return sub(x, y, d)
    w = [(x[0] + (i / k) * (y[0] - x[0]), x[1] + (i / k) * (y[1] - x[1]))
         for i in range(k + 1)]
    children = []
    for i in range(k):
        children.append(sub(w[i], w[i + 1], d))
    for i in range(k - 1):
        children.append(sub(w[i], w[i + 2], 2.0 * d))
    acc = _Acc(n, children[0].rho)
    acc.add_point(w[0], "x")
    for i in range(1, k):
        acc.add_point(w[i], f"w{i}")
    acc.add_point(w[k], "y")
    for ch in children:
        acc.merge_set(ch)
    trace = {"rule": "fig2", "k": k, "d": d, "children": [c.trace for c in children]}
    return acc.finish(x, y, k * d, trace)


def divide_set(n: Norm2, x: Vec2, y: Vec2, k: int, d: float,
               sub: Optional[SubBuilder] = None) -> WitnessSet:
    """Integer-division gadget (rule "fig3").

    Requires ||x - y|| = d/k.  Finds an apex z at distance d from both x and
    y, reflects to xt = x + (k-1)(x - z) and yt = y + (k-1)(y - z), so that
    xt - yt = k(x - y); the union of the seven sub-sets at distances d,
    (k-1)d and kd pins d/k down.
    """
    if k < 1:
        raise BuildError(f"k must be a positive integer, got {k}")
    x = (float(x[0]), float(x[1]))
    y = (float(y[0]), float(y[1]))
    _check_distance(n, x, y, d / k, "divide_set")
    if sub is None:
        sub = _grounded_sub(n, d)
    if k == 1:
        return sub(x, y, d)
    if n.dist(x, y) <= 0.0:
        raise BuildError("divide_set needs distinct x, y")
    z = sphere_intersect(n, x, d, y, d, side=1).point
    xt = (x[0] + (k - 1) * (x[0] - z[0]), x[1] + (k - 1) * (x[1] - z[1]))
    yt = (y[0] + (k - 1) * (y[0] - z[0]), y[1] + (k - 1) * (y[1] - z[1]))
    jobs = [(xt, yt, d), (xt, x, (k - 1) * d), (yt, y, (k - 1) * d),
            (x, z, d), (y, z, d), (xt, z, k * d), (yt, z, k * d)]
    children = [sub(a, b, dist) for a, b, dist in jobs]
    acc = _Acc(n, children[0].rho)
    for pt, lab in ((x, "x"), (y, "y"), (z, "z"), (xt, "xt"), (yt, "yt")):
        acc.add_point(pt, lab)
    for ch in children:
        acc.merge_set(ch)
    trace = {"rule": "fig3", "k": k, "d": d, "children": [c.trace for c in children]}
    return acc.finish(x, y, d / k, trace)


class _Builder:
    """Memoizing integer-ratio builder grounded at edge length rho."""

    def __init__(self, n: Norm2, rho: float):
        self.n = n
        self.rho = float(rho)
        self.memo: dict = {}

    def sub(self, x: Vec2, y: Vec2, dist: float) -> WitnessSet:
        m = int(round(dist / self.rho))
        if abs(dist - m * self.rho) > 1e-6 * max(1.0, self.rho):
            raise BuildError(f"sub-build distance {dist} is not an integer "
                             f"multiple of rho = {self.rho}")
        return self.build_int(x, y, m)

    def build_int(self, x: Vec2, y: Vec2, m: int) -> WitnessSet:
        key = (m, round(x[0], 12), round(x[1], 12), round(y[0], 12), round(y[1], 12))
        hit = self.memo.get(key)
        if hit is not None:
            return replace(hit, trace={"rule": hit.trace.get("rule", "base"),
                                       "reused": True})
        if m <= 1:
            ws = base_pair(self.n, x, y, self.rho)
        elif m == 2:
            ws = double_set(self.n, x, y, self.rho, sub=self.sub)
        else:
            ws = multiply_set(self.n, x, y, m, self.rho, sub=self.sub)
        self.memo[key] = ws
        return ws


def build_rational(n: Norm2, x: Vec2, y: Vec2, q, rho: float) -> WitnessSet:
    """Witness set for anchor distance q * rho, q a nonnegative rational.

    Integer ratios go through the chain construction; a ratio m/n runs the
    division gadget on distance m*rho.  Sub-builds are memoized per call by
    (ratio, endpoints rounded to 1e-12).
    """
    q = Fraction(q)
    if q < 0:
        raise BuildError(f"ratio must be nonnegative, got {q}")
    x = (float(x[0]), float(x[1]))
    y = (float(y[0]), float(y[1]))
    target = float(q) * rho
    _check_distance(n, x, y, target, "build_rational")
    builder = _Builder(n, rho)
    if q.denominator == 1:
        ws = builder.build_int(x, y, q.numerator)
    else:
        ws = divide_set(n, x, y, q.denominator, float(q.numerator) * rho,
                        sub=builder.sub)
    return ws


def _convergents(value: float, max_terms: int = 48):
    """Continued-fraction convergents of a nonnegative float."""
    h0, k0 = 1, 0
    h1, k1 = int(math.floor(value)), 1
    yield Fraction(h1, k1)
    frac = value - math.floor(value)
    for _ in range(max_terms):
        if frac <= 1e-13:
            return
        value = 1.0 / frac
        a = int(math.floor(value))
        frac = value - a
        h0, k0, h1, k1 = h1, k1, a * h1 + h0, a * k1 + k0
        yield Fraction(h1, k1)
        if k1 > 10 ** 9:
            return


def approx_set(n: Norm2, x: Vec2, y: Vec2, eps: float, rho: float) -> WitnessSet:
    """Two-leg approximate witness set (rule "fig4") with gap bound eps.

    Picks rationals q (a continued-fraction convergent of ||x-y||/rho, the
    first whose error fits) and r = 1/ceil(2*rho/eps) <= eps/(2*rho), places
    the elbow z at distances q*rho from x and r*rho from y, and unions the
    two rational witness sets.  Any unit-preserving placement then keeps the
    anchor distance within 2*r*rho <= eps.
    """
    if eps <= 0.0:
        raise BuildError(f"eps must be positive, got {eps}")
    x = (float(x[0]), float(x[1]))
    y = (float(y[0]), float(y[1]))
    dist = n.dist(x, y)
    if dist <= 1e-9 * max(1.0, rho):
        ws = base_pair(n, x, y, rho)
        return replace(ws, approximate=True, eps=float(eps),
                       trace={"rule": "fig4", "q": "0", "r": "0",
                              "children": [ws.trace]})
    ratio = dist / rho
    cap = max(1, math.ceil(2.0 * rho / eps))
    r = Fraction(1, cap)
    q = None
    for cand in _convergents(ratio):
        if cand <= 0:
            continue
        if abs(ratio - float(cand)) <= float(r):
            q = cand
            break
    if q is None:
        raise BuildError("no feasible rational leg found")
    z = sphere_intersect(n, x, float(q) * rho, y, float(r) * rho, side=1).point
    left = build_rational(n, x, z, q, rho)
    right = build_rational(n, z, y, r, rho)
    acc = _Acc(n, rho)
    acc.add_point(x, "x")
    acc.add_point(y, "y")
    acc.add_point(z, "z")
    acc.merge_set(left)
    acc.merge_set(right)
    trace = {"rule": "fig4", "q": str(q), "r": str(r), "eps": float(eps),
             "children": [left.trace, right.trace]}
    return acc.finish(x, y, dist, trace, approximate=True, eps=float(eps))


def dedup_and_merge(sets: Sequence[WitnessSet]) -> WitnessSet:
    """Union of witness sets sharing rho and source norm.

    Points are deduplicated at the coordinate tolerance, edges re-indexed,
    traces concatenated; anchors and target come from the first set.
    """
    if not sets:
        raise BuildError("nothing to merge")
    first = sets[0]
    acc = _Acc(first.source_norm, first.rho)
    for ws in sets:
        acc.merge_set(ws)
    trace = {"rule": "merge", "children": [w.trace for w in sets]}
    return acc.finish(first.points[first.anchor_x], first.points[first.anchor_y],
                      first.target_distance, trace,
                      approximate=first.approximate, eps=first.eps)


class Figure5Error(BuildError):
    """Gadget refinement stayed above tolerance; carries the best residual."""

    def __init__(self, best_residual: float, lambda_path):
        super().__init__(f"gadget residual {best_residual:.3e} above tolerance "
                         f"after continuation {lambda_path}")
        self.best_residual = best_residual
        self.lambda_path = lambda_path


def _gadget_points(m: Norm2, x: Vec2, y: Vec2) -> list[Vec2]:
    # all lattice relations are exact under the construction norm m
    d = m.dist(x, y) / 2.0
    z = ((x[0] + y[0]) / 2.0, (x[1] + y[1]) / 2.0)
    y1 = sphere_intersect(m, x, d, z, d, side=1).point
    x1 = (y1[0] + z[0] - x[0], y1[1] + z[1] - x[1])
    f1 = make_frame(m, (z[0] - x[0], z[1] - x[1]), (y1[0] - x[0], y1[1] - x[1]))
    a1, b1 = find_second_pair(f1, m)
    y1t = (x1[0] - a1[0], x1[1] - a1[1])
    zy = (x1[0] - b1[0], x1[1] - b1[1])
    xt = (x1[0] - a1[0] - b1[0], x1[1] - a1[1] - b1[1])
    f2 = make_frame(m, (z[0] - y[0], z[1] - y[1]), (x1[0] - y[0], x1[1] - y[1]))
    a2, b2 = find_second_pair(f2, m)
    x1t = (y1[0] - a2[0], y1[1] - a2[1])
    zx = (y1[0] - b2[0], y1[1] - b2[1])
    yt = (y1[0] - a2[0] - b2[0], y1[1] - a2[1] - b2[1])
    return [x, y, z, xt, x1, x1t, yt, y1, y1t, zx, zy]


def figure5_config(n: Norm2, x: Vec2, y: Vec2, tol: float = CONSTRUCTION_TOL,
                   continuation: Sequence[float] = (1e-1, 1e-2, 1e-3)) -> WitnessSet:
    """The 11-point doubling gadget with all 19 edges of length ||x-y||/2.

    For strictly convex source norms the gadget is built directly from the
    matched-pair machinery and polished jointly (8 free points against the
    19 constraints; x, y, z stay fixed).  Other norms go through a
    continuation: construct under blend approximations with shrinking
    lambda, polish under the true norm, keep the best.  If no stage reaches
    tolerance a Figure5Error reports the best residual.
    """
    x = (float(x[0]), float(x[1]))
    y = (float(y[0]), float(y[1]))
    dist = n.dist(x, y)
    if dist <= 0.0:
        raise BuildError("gadget needs distinct x, y")
    d = dist / 2.0
    edges = FIGURE5_GRAPH.edges
    edges_np = np.array(edges, dtype=np.intc)
    targets = np.full(len(edges), d)
    free = np.ones(11, dtype=np.uint8)
    free[0] = free[1] = free[2] = 0

    if n.claims_strictly_convex:
        stages = [None]
    else:
        stages = list(continuation)
    best_pts = None
    best_res = math.inf
    lam_path = []
    for lam in stages:
        m = n if lam is None else strictify(n, lam)
        pts = np.array(_gadget_points(m, x, y), dtype=np.float64)
        res, _ = kernel.lm_edges(n.packed, pts, edges_np, targets, free,
                                 -1, -1, 0.0, 0.0, 120, 1e-13 * max(1.0, d), 1e-8)
        lam_path.append([0.0 if lam is None else lam, float(res)])
        if res < best_res:
            best_res = res
            best_pts = pts.copy()
        if best_res <= tol:
            break
    if best_res > tol:
        raise Figure5Error(best_res, lam_path)

    pts = [(float(px), float(py)) for px, py in best_pts]
    extra = []
    for i in range(11):
        for j in range(i + 1, 11):
            if FIGURE5_GRAPH.adjacency[i][j]:
                continue
            if abs(n.dist(pts[i], pts[j]) - d) <= VERIFY_TOL:
                extra.append([i, j])
    trace = {"rule": "fig5", "d": d, "lambda_path": lam_path,
             "extra_unit_pairs": extra,
             "config_graph": {"vertex_labels": list(FIGURE5_GRAPH.vertex_labels),
                              "adjacency": [list(r) for r in FIGURE5_GRAPH.adjacency]}}
    ws = WitnessSet(points=pts, labels=list(FIGURE5_GRAPH.vertex_labels),
                    rho=d, edges=edges, anchor_x=0, anchor_y=1,
                    target_distance=dist, source_norm=n, trace=trace)
    return ws
