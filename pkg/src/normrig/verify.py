"""Placement enumeration and falsification for witness sets.

``enumerate_placements`` walks every branch of the placement tree of a
witness set in a target normed plane: translations are quotiented by pinning
the first anchor at the origin, the first edge direction is swept (a single
direction suffices for the euclidean target, whose rotations make all
directions equivalent), each further point placeable from two located
neighbors branches over the two sides of their connecting line, and any
vertex reachable from only one located neighbor opens a one-parameter
loop-closure sweep whose admissible angles are found by scanning and
root-refining the first downstream constraint.  Complete leaves are
classified by edge residual, injectivity, and anchor gap.

``falsify`` searches for counterexample placements at larger scale: random
restarts of a damped least-squares pass that drives all unit edges to length
rho while pushing the anchor distance away from its nominal value, followed
by a pure polish and an independent re-evaluation of every claimed
violation.

``equilateral_search`` looks for n mutually unit-distant points, the
obstruction behind the non-collapse property of the 11-point gadget.

Restarts and sweep directions are independent work items processed in a
fixed order, so reports are deterministic for fixed seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from normrig import _backend as kernel
from normrig.norms import VERIFY_TOL, Norm2, Vec2
from normrig.witness import WitnessSet

INJECT_TOL = 1e-7
LEAF_CAP = 1 << 24
EXAMPLE_CAP = 32


class PlanError(ValueError):
    """The edge graph admits no supported placement order."""


class BudgetError(RuntimeError):
    """Branch enumeration exceeded the leaf budget."""


@dataclass
class Placement:
    """One placement of a witness set into the target plane."""

    images: list[Vec2]
    max_edge_residual: float
    anchor_gap: float
    injective: bool


@dataclass
class VerifyReport:
    """Outcome of an enumeration or falsification run."""

    mode: str
    target_norm: dict
    tol: float
    placements_found: int = 0
    injective_found: int = 0
    non_injective_found: int = 0
    violations_found: int = 0
    violations: list[Placement] = field(default_factory=list)
    non_injective_examples: list[Placement] = field(default_factory=list)
    max_abs_anchor_gap_injective: Optional[float] = None
    max_abs_anchor_gap_all: Optional[float] = None
    coincidence_counts: dict[tuple[int, int], int] = field(default_factory=dict)
    search_budget_used: int = 0
    budget_exhausted: bool = False
    placements: list[Placement] = field(default_factory=list)  # opt-in, unserialized

    @property
    def holds(self) -> bool:
        return self.violations_found == 0 and self.placements_found > 0

    def exit_code(self) -> int:
        if self.violations_found > 0:
            return 2
        if self.budget_exhausted or self.placements_found == 0:
            return 3
        return 0


@dataclass
class _Segment:
    lo: int
    hi: int
    kind: str                     # "chain" | "free" | "block"
    phi_slot: int = -1
    outer: bool = False
    closure: Optional[tuple[int, int]] = None
    closure_end: int = -1
    sign_slots: list[int] = field(default_factory=list)
    scan_sign_slots: list[int] = field(default_factory=list)
    dep_vertices: list[int] = field(default_factory=list)


@dataclass
class PlacementPlan:
    n_points: int
    packed: object
    segments: list[_Segment]
    n_sign_slots: int
    n_phi_slots: int
    free_slots: list[int]

    @property
    def n_free_sweeps(self) -> int:
        return len(self.free_slots)


def build_plan(w: WitnessSet) -> PlacementPlan:
    """Placement order for the unit-edge graph of a witness set.

    Greedy: the anchor seeds the origin, its lowest-index neighbor is swept,
    and thereafter any vertex with two located neighbors is placed by sphere
    intersection (extra edges become checks).  When no such vertex exists, a
    vertex with one located neighbor opens a sweep; the first later check
    depending on it becomes its closure.  Sweeps whose closure would nest
    inside another open sweep are unsupported and raise PlanError.
    """
    n = len(w.points)
    if n == 0:
        raise PlanError("empty witness set")
    adj: list[list[int]] = [[] for _ in range(n)]
    for i, j in w.edges:
        adj[i].append(j)
        adj[j].append(i)
    for lst in adj:
        lst.sort()

    kind: list[int] = []
    sv: list[int] = []
    n1: list[int] = []
    n2: list[int] = []
    slot: list[int] = []
    checks: list[list[tuple[int, int]]] = []

    placed_step = {w.anchor_x: 0}
    kind.append(kernel.S_SEED)
    sv.append(w.anchor_x)
    n1.append(-1)
    n2.append(-1)
    slot.append(-1)
    checks.append([])

    used_edges: set[tuple[int, int]] = set()
    vertex_sweeps: dict[int, frozenset[int]] = {w.anchor_x: frozenset()}
    open_sweeps: dict[int, int] = {}      # phi slot -> sweep step index
    closure_of: dict[int, tuple[tuple[int, int], int]] = {}  # slot -> (edge, step)
    n_phi = 0
    n_sign = 0

    def canon(a: int, b: int) -> tuple[int, int]:
        return (a, b) if a < b else (b, a)

    def add_check(i: int, j: int, at_step: int) -> None:
        nonlocal n_phi
        deps = vertex_sweeps[i] | vertex_sweeps[j]
        open_deps = [s for s in deps if s in open_sweeps]
        if open_deps:
            s = max(open_deps)
            later_open = [t for t in open_sweeps if t > s]
            if later_open:
                raise PlanError("nested loop-closure sweeps are not supported")
            closure_of[s] = (canon(i, j), at_step)
            del open_sweeps[s]
            checks[at_step].append((i, j))
        else:
            checks[at_step].append((i, j))

    while len(placed_step) < n:
        unplaced = [v for v in range(n) if v not in placed_step]
        cand2 = []
        cand1 = []
        for v in unplaced:
            pn_nbrs = [u for u in adj[v] if u in placed_step]
            if len(pn_nbrs) >= 2:
                cand2.append((v, pn_nbrs))
            elif len(pn_nbrs) == 1:
                cand1.append((v, pn_nbrs))
        step_idx = len(kind)
        if cand2:
            v, nbrs = min(cand2)
            a, b = nbrs[0], nbrs[1]
            kind.append(kernel.S_PLACE)
            sv.append(v)
            n1.append(a)
            n2.append(b)
            slot.append(n_sign)
            checks.append([])
            n_sign += 1
            placed_step[v] = step_idx
            vertex_sweeps[v] = vertex_sweeps[a] | vertex_sweeps[b]
            used_edges.add(canon(v, a))
            used_edges.add(canon(v, b))
            for u in nbrs[2:]:
                used_edges.add(canon(v, u))
                add_check(v, u, step_idx)
        elif cand1:
            v, nbrs = min(cand1)
            c = nbrs[0]
            kind.append(kernel.S_SWEEP)
            sv.append(v)
            n1.append(c)
            n2.append(-1)
            slot.append(n_phi)
            checks.append([])
            placed_step[v] = step_idx
            vertex_sweeps[v] = vertex_sweeps[c] | {n_phi}
            open_sweeps[n_phi] = step_idx
            used_edges.add(canon(v, c))
            n_phi += 1
        else:
            raise PlanError("edge graph is disconnected from the anchor")

    for i, j in w.edges:
        if canon(i, j) not in used_edges:
            # edge between two long-placed vertices: a residual check
            at = max(placed_step[i], placed_step[j])
            add_check(i, j, at)
            used_edges.add(canon(i, j))

    chk_off = [0]
    chk_i: list[int] = []
    chk_j: list[int] = []
    chk_closure: list[int] = []
    closure_edges = {edge for edge, _ in closure_of.values()}
    for s in range(len(kind)):
        for (i, j) in checks[s]:
            chk_i.append(i)
            chk_j.append(j)
            chk_closure.append(1 if canon(i, j) in closure_edges else 0)
        chk_off.append(len(chk_i))

    packed = kernel.pack_plan(
        np.array(kind, dtype=np.intc), np.array(sv, dtype=np.intc),
        np.array(n1, dtype=np.intc), np.array(n2, dtype=np.intc),
        np.array(slot, dtype=np.intc), np.array(chk_off, dtype=np.intc),
        np.array(chk_i, dtype=np.intc), np.array(chk_j, dtype=np.intc),
        np.array(chk_closure, dtype=np.uint8), w.rho)

    sweep_steps = [s for s in range(len(kind)) if kind[s] == kernel.S_SWEEP]
    boundaries = [0] + [s for s in sweep_steps[1:]]
    boundaries.append(len(kind))
    segments: list[_Segment] = []
    free_slots: list[int] = []
    for b in range(len(boundaries) - 1):
        lo, hi = boundaries[b], boundaries[b + 1]
        seg_sweeps = [s for s in sweep_steps if lo <= s < hi]
        if not seg_sweeps:
            seg = _Segment(lo=lo, hi=hi, kind="chain")
        else:
            sw = seg_sweeps[0]
            phi_slot = slot[sw]
            if phi_slot in closure_of:
                edge, at = closure_of[phi_slot]
                seg = _Segment(lo=lo, hi=hi, kind="block", phi_slot=phi_slot,
                               closure=edge, closure_end=at + 1)
            else:
                seg = _Segment(lo=lo, hi=hi, kind="free", phi_slot=phi_slot,
                               outer=len(free_slots) == 0)
                free_slots.append(phi_slot)
        seg.sign_slots = [slot[s] for s in range(lo, hi) if kind[s] == kernel.S_PLACE]
        if seg.kind == "block":
            seg.scan_sign_slots = [slot[s] for s in range(lo, seg.closure_end)
                                   if kind[s] == kernel.S_PLACE]
            deps = set()
            for s in range(lo, seg.closure_end):
                for u in (n1[s], n2[s]):
                    if u >= 0 and placed_step[u] < lo:
                        deps.add(u)
                for (i, j) in checks[s]:
                    for u in (i, j):
                        if placed_step[u] < lo:
                            deps.add(u)
            seg.dep_vertices = sorted(deps)
        segments.append(seg)

    return PlacementPlan(n_points=n, packed=packed, segments=segments,
                         n_sign_slots=n_sign, n_phi_slots=max(n_phi, 1),
                         free_slots=free_slots)


def _is_euclidean(n: Norm2) -> bool:
    return n.kind == "p" and n.p == 2.0


def _indep_dist(desc: dict, a, b) -> float:
    """Norm distance evaluated straight from the descriptor (no kernel)."""
    dx = a[0] - b[0]
    dy = a[1] - b[1]

    def ev(d, x, y):
        if d["kind"] == "p":
            p = d["p"]
            if isinstance(p, str) or math.isinf(float(p)):
                return max(abs(x), abs(y))
            p = float(p)
            if p == 1.0:
                return abs(x) + abs(y)
            return (abs(x) ** p + abs(y) ** p) ** (1.0 / p)
        if d["kind"] == "polygonal":
            verts = d["vertices"]
            best = -math.inf
            m = len(verts)
            for i in range(m):
                xi, yi = verts[i]
                xj, yj = verts[(i + 1) % m]
                det = xi * yj - yi * xj
                best = max(best, ((yj - yi) * x + (xi - xj) * y) / det)
            return best
        return (1.0 - d["lambda"]) * ev(d["base"], x, y) + d["lambda"] * math.hypot(x, y)

    return ev(desc, dx, dy)


def revalidate_placement(w: WitnessSet, target_norm: Norm2, images) -> float:
    """Independent max edge residual of a placement (descriptor arithmetic)."""
    desc = target_norm.descriptor()
    worst = 0.0
    for i, j in w.edges:
        worst = max(worst, abs(_indep_dist(desc, images[i], images[j]) - w.rho))
    return worst


class _Aggregator:
    def __init__(self, w: WitnessSet, target: Norm2, tol: float,
                 require_injective_violations: bool = True,
                 keep_placements: bool = False):
        self.w = w
        self.target = target
        self.tol = tol
        self.require_inj = require_injective_violations
        self.keep_placements = keep_placements
        self.report = VerifyReport(mode="", target_norm=target.descriptor(), tol=tol)
        self.pairs_buf = np.zeros((64, 2), dtype=np.intc)
        self.scale = max(1.0, w.rho)

    def consume(self, pts: np.ndarray, budget_units: int = 1) -> None:
        rep = self.report
        rep.search_budget_used += budget_units
        w = self.w
        mr, anchor, minpair, ncoinc = kernel.leaf_stats(
            self.target.packed, pts, w.edges_array(), w.rho,
            w.anchor_x, w.anchor_y, INJECT_TOL, self.pairs_buf)
        if mr > self.tol:
            return
        gap = anchor - w.target_distance
        injective = ncoinc == 0
        rep.placements_found += 1
        if self.keep_placements:
            rep.placements.append(self._placement(pts, mr, gap, injective))
        if injective:
            rep.injective_found += 1
            if rep.max_abs_anchor_gap_injective is None or abs(gap) > rep.max_abs_anchor_gap_injective:
                rep.max_abs_anchor_gap_injective = abs(gap)
        else:
            rep.non_injective_found += 1
            if len(rep.non_injective_examples) < EXAMPLE_CAP:
                rep.non_injective_examples.append(self._placement(pts, mr, gap, injective))
            for k in range(min(ncoinc, 64)):
                key = (int(self.pairs_buf[k, 0]), int(self.pairs_buf[k, 1]))
                rep.coincidence_counts[key] = rep.coincidence_counts.get(key, 0) + 1
        if rep.max_abs_anchor_gap_all is None or abs(gap) > rep.max_abs_anchor_gap_all:
            rep.max_abs_anchor_gap_all = abs(gap)
        if abs(gap) > 10.0 * self.tol and (injective or not self.require_inj):
            if revalidate_placement(w, self.target, pts) <= self.tol:
                rep.violations_found += 1
                if len(rep.violations) < EXAMPLE_CAP:
                    rep.violations.append(self._placement(pts, mr, gap, injective))

    def _placement(self, pts, mr, gap, injective) -> Placement:
        return Placement(images=[(float(x), float(y)) for x, y in pts],
                         max_edge_residual=float(mr), anchor_gap=float(gap),
                         injective=bool(injective))


def enumerate_placements(w: WitnessSet, target_norm: Norm2,
                         direction_grid: int = 720, tol: float = VERIFY_TOL,
                         closure_scan: int = 96, leaf_cap: int = LEAF_CAP,
                         keep_placements: bool = False) -> VerifyReport:
    """Branch enumeration of unit-edge-preserving placements.

    Leaves with every edge within tol are classified by injectivity and
    anchor gap; injective consistent leaves whose |gap| exceeds 10*tol are
    re-validated independently and reported as violations.  For the
    euclidean target a single first-edge direction stands in for the
    direction grid (all directions are rotations of it).

    Placements that need two placing centers to coincide (sphere
    intersection degenerates into a whole circle) are not representable as
    branches and are skipped; any such placement keeps the coincident pair,
    so the enumeration of injective placements is unaffected -- only some
    collapsed, non-injective folds go uncounted.
    """
    plan = build_plan(w)
    if direction_grid < 1:
        raise ValueError("direction_grid must be >= 1")
    if _is_euclidean(target_norm):
        thetas = [0.0]
    else:
        thetas = [2.0 * math.pi * k / direction_grid for k in range(direction_grid)]
    grid_angles = [2.0 * math.pi * k / direction_grid for k in range(direction_grid)]

    est = len(thetas) * (2 ** plan.n_sign_slots)
    for _ in range(max(0, plan.n_free_sweeps - 1)):
        est *= direction_grid
    if est > leaf_cap:
        raise BudgetError(f"estimated {est} branches exceed the cap {leaf_cap}")

    agg = _Aggregator(w, target_norm, tol, keep_placements=keep_placements)
    agg.report.mode = "enumerate"
    pn = target_norm.packed
    kplan = plan.packed
    signs = np.zeros(max(plan.n_sign_slots, 1), dtype=np.uint8)
    phis = np.zeros(plan.n_phi_slots, dtype=np.float64)
    edges_np = w.edges_array()
    free_all = np.ones(plan.n_points, dtype=np.uint8)
    free_all[w.anchor_x] = 0
    targets_np = np.full(len(w.edges), w.rho)
    graze_tol = 1e-3 * max(1.0, w.rho)
    scale = max(1.0, w.rho)
    cache: dict = {}
    segs = plan.segments
    leaves = [0]

    def finish_leaf(pts: np.ndarray) -> None:
        leaves[0] += 1
        if leaves[0] > leaf_cap:
            raise BudgetError(f"leaf budget {leaf_cap} exhausted")
        stats_pts = pts
        # salvage slightly-off leaves with a polish before classification
        worst = float(np.max(np.abs(
            kernel.eval_many(pn, stats_pts[edges_np[:, 0]] - stats_pts[edges_np[:, 1]]) - w.rho))) if len(w.edges) else 0.0
        if tol < worst <= 1e-3 * scale:
            kernel.lm_edges(pn, stats_pts, edges_np, targets_np, free_all,
                            -1, -1, 0.0, 0.0, 60, 1e-12 * scale, 1e-8)
        agg.consume(stats_pts)

    def run(si: int, pts: np.ndarray) -> None:
        if si == len(segs):
            finish_leaf(pts)
            return
        seg = segs[si]
        for bits in range(1 << len(seg.sign_slots)):
            for b, sl in enumerate(seg.sign_slots):
                signs[sl] = (bits >> b) & 1
            if seg.kind == "chain":
                p2 = pts.copy()
                code, worstf = kernel.place_range(pn, kplan, seg.lo, seg.hi,
                                                  p2, signs, phis, True)
                if code == 0 and worstf <= tol:
                    run(si + 1, p2)
            elif seg.kind == "free":
                angles = thetas if seg.outer else grid_angles
                for phi in angles:
                    phis[seg.phi_slot] = phi
                    p2 = pts.copy()
                    code, worstf = kernel.place_range(pn, kplan, seg.lo, seg.hi,
                                                      p2, signs, phis, True)
                    if code == 0 and worstf <= tol:
                        run(si + 1, p2)
            else:
                scan_bits = 0
                for b, sl in enumerate(seg.sign_slots):
                    if sl in seg.scan_sign_slots:
                        scan_bits |= ((bits >> b) & 1) << seg.scan_sign_slots.index(sl)
                key = (si, scan_bits, pts[seg.dep_vertices].tobytes())
                roots = cache.get(key)
                if roots is None:
                    ci, cj = seg.closure
                    roots = kernel.closure_roots(pn, kplan, seg.lo, seg.closure_end,
                                                 ci, cj, pts, signs, phis,
                                                 closure_scan, graze_tol)
                    cache[key] = roots
                for root in roots:
                    phis[seg.phi_slot] = float(root)
                    p2 = pts.copy()
                    code, worstf = kernel.place_range(pn, kplan, seg.lo, seg.hi,
                                                      p2, signs, phis, True)
                    if code != 0 or worstf > tol:
                        continue
                    ci, cj = seg.closure
                    cres = abs(kernel.eval1(pn, p2[ci, 0] - p2[cj, 0],
                                            p2[ci, 1] - p2[cj, 1]) - w.rho)
                    if cres <= max(tol, 1e-9 * scale):
                        run(si + 1, p2)

    pts0 = np.full((plan.n_points, 2), np.nan)
    run(0, pts0)
    agg.report.search_budget_used = leaves[0]
    return agg.report


def _hinge_splits(n: int, edges: Sequence[tuple[int, int]]):
    """Articulation vertices with the vertex sets they split off.

    A witness set glued at a single shared point carries a one-parameter
    hinge flex there; rotating one side makes a good restart seed.
    """
    adj: list[list[int]] = [[] for _ in range(n)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    disc = [-1] * n
    low = [0] * n
    aps: set[int] = set()
    timer = [0]
    for root in range(n):
        if disc[root] != -1:
            continue
        stack = [(root, -1, iter(adj[root]))]
        disc[root] = low[root] = timer[0]
        timer[0] += 1
        root_children = 0
        while stack:
            v, parent, it = stack[-1]
            advanced = False
            for u in it:
                if disc[u] == -1:
                    if v == root:
                        root_children += 1
                    disc[u] = low[u] = timer[0]
                    timer[0] += 1
                    stack.append((u, v, iter(adj[u])))
                    advanced = True
                    break
                if u != parent and disc[u] < low[v]:
                    low[v] = disc[u]
            if not advanced:
                stack.pop()
                if stack:
                    pv = stack[-1][0]
                    if low[v] < low[pv]:
                        low[pv] = low[v]
                    if pv != root and low[v] >= disc[pv]:
                        aps.add(pv)
        if root_children > 1:
            aps.add(root)
    splits = []
    for v in sorted(aps):
        seen = {v}
        for u in adj[v]:
            if u in seen:
                continue
            comp = [u]
            seen.add(u)
            queue = [u]
            while queue:
                c = queue.pop()
                for t in adj[c]:
                    if t not in seen:
                        seen.add(t)
                        comp.append(t)
                        queue.append(t)
            splits.append((v, np.array(sorted(comp), dtype=np.int64)))
    return splits


def falsify(w: WitnessSet, target_norm: Norm2, restarts: int = 1000,
            seed: int = 0, tol: float = VERIFY_TOL,
            require_injective: bool = True, push_weight: float = 0.3,
            max_iter: int = 150, keep_placements: bool = False) -> VerifyReport:
    """Random-restart search for placements that break the anchor distance.

    Each restart minimizes the squared unit-edge residuals plus a weighted
    term steering the anchor distance toward an exaggerated value (direction
    alternating per restart), then polishes edges alone.  Restart seeds mix
    the source coordinates, random boxes, and randomly rotated hinge sides
    when the edge graph has articulation vertices.  Optima whose edges sit
    within tol are classified; injective ones with |gap| > 10*tol are
    re-validated independently and reported as violations.  Deterministic
    for a fixed seed; finding nothing is evidence, not proof.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    rng = np.random.default_rng(seed)
    pts0 = w.points_array()
    edges_np = w.edges_array()
    targets_np = np.full(len(w.edges), w.rho)
    n = len(w.points)
    free = np.ones(n, dtype=np.uint8)
    free[w.anchor_x] = 0
    span = max(float(np.max(pts0, initial=0.0) - np.min(pts0, initial=0.0)), w.rho)
    lo = np.min(pts0, axis=0) - 0.6 * span
    hi = np.max(pts0, axis=0) + 0.6 * span
    delta = 0.75 * max(w.rho, w.target_distance)
    big = n > 40
    splits = _hinge_splits(n, w.edges)

    agg = _Aggregator(w, target_norm, tol,
                      require_injective_violations=require_injective,
                      keep_placements=keep_placements)
    agg.report.mode = "falsify"
    pn = target_norm.packed
    scale = max(1.0, w.rho)

    for k in range(restarts):
        start = rng.uniform(lo, hi, size=(n, 2))
        angle = rng.uniform(0.0, 2.0 * math.pi)
        if k < 2:
            start = pts0.copy()
        elif splits and k % 2 == 0:
            start = pts0.copy()
            pivot, comp = splits[(k // 2) % len(splits)]
            ca, sa = math.cos(angle), math.sin(angle)
            rel = start[comp] - start[pivot]
            start[comp, 0] = start[pivot, 0] + ca * rel[:, 0] - sa * rel[:, 1]
            start[comp, 1] = start[pivot, 1] + sa * rel[:, 0] + ca * rel[:, 1]
        start = start - start[w.anchor_x]
        push_target = w.target_distance + (delta if k % 2 == 0 else -delta)
        if push_target < 0.0:
            push_target = 0.0
        pts = np.ascontiguousarray(start, dtype=np.float64)
        if big:
            _sparse_descent(target_norm, pts, edges_np, w.rho, free,
                            w.anchor_x, w.anchor_y, push_target, push_weight,
                            max_nfev=2 * max_iter)
            _sparse_descent(target_norm, pts, edges_np, w.rho, free,
                            w.anchor_x, w.anchor_y, 0.0, 0.0,
                            max_nfev=2 * max_iter)
        else:
            kernel.lm_edges(pn, pts, edges_np, targets_np, free,
                            w.anchor_x, w.anchor_y, push_target, push_weight,
                            max_iter, 1e-12 * scale, 1e-3)
            kernel.lm_edges(pn, pts, edges_np, targets_np, free,
                            -1, -1, 0.0, 0.0, max_iter, 1e-13 * scale, 1e-6)
            # resolve near-coincidences left by a stalled descent
            for _ in range(2):
                mr, _, minpair, _ = kernel.leaf_stats(
                    pn, pts, edges_np, w.rho, w.anchor_x, w.anchor_y,
                    INJECT_TOL, agg.pairs_buf)
                if mr > tol or minpair >= 1e-4 or minpair <= 1e-9:
                    break
                kernel.lm_edges(pn, pts, edges_np, targets_np, free,
                                -1, -1, 0.0, 0.0, max_iter, 1e-14 * scale, 1e-9)
        agg.consume(pts)
    agg.report.search_budget_used = restarts
    return agg.report


def _sparse_descent(target: Norm2, pts: np.ndarray, edges: np.ndarray,
                    rho: float, free: np.ndarray, ai: int, aj: int,
                    push_target: float, push_weight: float,
                    max_nfev: int = 400) -> None:
    """scipy path for large sets: sparse trust-region least squares."""
    from scipy.optimize import least_squares
    from scipy.sparse import csr_matrix

    pn = target.packed
    fidx = np.flatnonzero(free.astype(bool))
    vmap = np.full(len(pts), -1, dtype=np.int64)
    vmap[fidx] = np.arange(len(fidx))
    nv = 2 * len(fidx)
    use_push = push_weight > 0.0
    me = len(edges)
    m = me + (1 if use_push else 0)

    # fixed sparsity pattern: per row, up to 4 value slots (2 per endpoint)
    rows, cols, sgn = [], [], []
    pair_rows = list(edges) + ([(ai, aj)] if use_push else [])
    for e, (i, j) in enumerate(pair_rows):
        for v, s in ((int(i), 1.0), (int(j), -1.0)):
            if vmap[v] >= 0:
                rows += [e, e]
                cols += [2 * vmap[v], 2 * vmap[v] + 1]
                sgn += [s, s]
    rows = np.array(rows)
    cols = np.array(cols)
    sgn = np.array(sgn)
    row_edge = rows.copy()

    def unpack(x):
        p = pts.copy()
        p[fidx] = x.reshape(-1, 2)
        return p

    def fun(x):
        p = unpack(x)
        r = kernel.eval_many(pn, p[edges[:, 0]] - p[edges[:, 1]]) - rho
        if use_push:
            g = kernel.eval1(pn, p[ai, 0] - p[aj, 0], p[ai, 1] - p[aj, 1])
            r = np.append(r, push_weight * (g - push_target))
        return r

    def jac(x):
        p = unpack(x)
        diffs = p[[pr[0] for pr in pair_rows]] - p[[pr[1] for pr in pair_rows]]
        grads = kernel.grad_many(pn, diffs)
        if use_push:
            grads[me] *= push_weight
        vals = sgn * grads[row_edge, cols & 1]
        return csr_matrix((vals, (rows, cols)), shape=(m, nv))

    x0 = pts[fidx].ravel()
    res = least_squares(fun, x0, jac=jac, method="trf", ftol=1e-14,
                        xtol=1e-14, gtol=1e-14, max_nfev=max_nfev)
    pts[fidx] = res.x.reshape(-1, 2)


@dataclass
class EquilateralResult:
    best_residual: float
    best_points: list[Vec2]
    restarts_used: int


def equilateral_search(target_norm: Norm2, d: float, n_points: int = 4,
                       restarts: int = 4096, seed: int = 0,
                       max_iter: int = 80) -> EquilateralResult:
    """Search for n points pairwise at distance d in the target plane.

    Minimizes the squared deviations of all pairwise distances from d over
    random restarts (the first restart is seeded with a sphere-intersection
    chain, which is already exact for n = 3) and reports the best
    configuration by maximum pair residual.
    """
    if n_points < 3:
        raise ValueError("n_points must be >= 3")
    pn = target_norm.packed
    pairs = np.array([(i, j) for i in range(n_points) for j in range(i + 1, n_points)],
                     dtype=np.intc)
    targets = np.full(len(pairs), float(d))
    free = np.ones(n_points, dtype=np.uint8)
    free[0] = 0
    rng = np.random.default_rng(seed)

    def chain_seed() -> np.ndarray:
        pts = np.zeros((n_points, 2))
        pts[1] = kernel.sphere_pt(pn, 0.0, 0.0, d, 0.0)
        side = 1
        for i in range(2, n_points):
            px, py, code, _ = kernel.intersect(pn, pts[i - 2, 0], pts[i - 2, 1], d,
                                               pts[i - 1, 0], pts[i - 1, 1], d,
                                               side, 1e-13 * max(1.0, d), 80)
            if code >= 2:
                px, py = kernel.sphere_pt(pn, pts[i - 1, 0], pts[i - 1, 1], d,
                                          2.0 * i)
            pts[i] = px, py
            side = -side
        return pts

    best_res = math.inf
    best_pts = None
    used = 0
    for k in range(restarts):
        used = k + 1
        start = rng.uniform(-1.6 * d, 1.6 * d, size=(n_points, 2))
        if k == 0:
            start = chain_seed()
        start[0] = 0.0
        pts = np.ascontiguousarray(start, dtype=np.float64)
        kernel.lm_edges(pn, pts, pairs, targets, free, -1, -1, 0.0, 0.0,
                        max_iter, 1e-14 * max(1.0, d), 1e-4)
        mr = kernel.pairs_max_resid(pn, pts, d)
        if mr < best_res:
            best_res = mr
            best_pts = pts.copy()
        if best_res <= 1e-12 * max(1.0, d):
            break
    return EquilateralResult(best_residual=float(best_res),
                             best_points=[(float(x), float(y)) for x, y in best_pts],
                             restarts_used=used)


def check_non_collapse(w: WitnessSet, target_norm: Norm2,
                       report: VerifyReport) -> bool:
    """True when no consistent placement merges x with x1 or y with y1."""
    try:
        ix = w.labels.index("x1")
        iy = w.labels.index("y1")
    except ValueError as exc:
        raise ValueError("witness set has no labeled x1/y1 points") from exc
    pair_a = (min(w.anchor_x, ix), max(w.anchor_x, ix))
    pair_b = (min(w.anchor_y, iy), max(w.anchor_y, iy))
    counts = report.coincidence_counts
    return counts.get(pair_a, 0) == 0 and counts.get(pair_b, 0) == 0


def approx_gap_check(w: WitnessSet, target_norm: Norm2, report: VerifyReport,
                     tol: float = VERIFY_TOL) -> bool:
    """True when all injective consistent placements stay within eps + tol."""
    if not w.approximate or w.eps is None:
        raise ValueError("witness set is not flagged approximate")
    worst = report.max_abs_anchor_gap_injective
    if worst is None:
        return True
    return worst <= w.eps + tol
