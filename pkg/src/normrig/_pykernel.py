"""Pure-Python numeric kernels.

Fallback used when the compiled extension ``normrig._core`` is not
available.  The algorithms here are kept line-for-line in sync with the
Cython version; ``tests/test_kernel_parity.py`` guards against drift.

A norm is handed to the kernels in "packed" form: a flat list of weighted
primitive terms (p-norms and polygonal support functions) produced by
``normrig.norms``.  All routines are pure functions over immutable inputs
except where an output array is documented as written in place.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND_NAME = "pure-python"

# primitive term kinds
K_P = 0       # generic p in (1, inf)
K_ONE = 1     # p = 1
K_TWO = 2     # p = 2
K_INF = 3     # p = inf
K_3_2 = 4     # p = 3/2 (sqrt fast path)
K_THREE = 5   # p = 3 (cube fast path)
K_POLY = 6    # polygonal: max over facet functionals

# plan step kinds
S_SEED = 0
S_SWEEP = 1
S_PLACE = 2

TWO_PI = 2.0 * math.pi


class PackedNorm:
    __slots__ = ("weights", "kinds", "pvals", "invps", "poly_off", "poly_len",
                 "facets", "nterms")

    def __init__(self, weights, kinds, pvals, invps, poly_off, poly_len, facets):
        self.weights = np.ascontiguousarray(weights, dtype=np.float64)
        self.kinds = np.ascontiguousarray(kinds, dtype=np.intc)
        self.pvals = np.ascontiguousarray(pvals, dtype=np.float64)
        self.invps = np.ascontiguousarray(invps, dtype=np.float64)
        self.poly_off = np.ascontiguousarray(poly_off, dtype=np.intc)
        self.poly_len = np.ascontiguousarray(poly_len, dtype=np.intc)
        self.facets = np.ascontiguousarray(facets, dtype=np.float64).reshape(-1, 2)
        self.nterms = len(self.weights)


def pack_norm(weights, kinds, pvals, invps, poly_off, poly_len, facets):
    return PackedNorm(weights, kinds, pvals, invps, poly_off, poly_len, facets)


def _term_eval(pn, t, x, y):
    k = pn.kinds[t]
    if k == K_POLY:
        off = pn.poly_off[t]
        best = -math.inf
        for f in range(off, off + pn.poly_len[t]):
            v = pn.facets[f, 0] * x + pn.facets[f, 1] * y
            if v > best:
                best = v
        return best
    ax = abs(x)
    ay = abs(y)
    if k == K_ONE:
        return ax + ay
    if k == K_INF:
        return ax if ax >= ay else ay
    m = ax if ax >= ay else ay
    if m == 0.0:
        return 0.0
    sx = ax / m
    sy = ay / m
    if k == K_TWO:
        # scaled explicitly so the compiled twin matches bit for bit
        return m * math.sqrt(sx * sx + sy * sy)
    if k == K_3_2:
        s = sx * math.sqrt(sx) + sy * math.sqrt(sy)
        return m * s ** (2.0 / 3.0)
    if k == K_THREE:
        s = sx * sx * sx + sy * sy * sy
        return m * s ** (1.0 / 3.0)
    p = pn.pvals[t]
    s = sx ** p + sy ** p
    return m * s ** pn.invps[t]


def eval1(pn, x, y):
    """Value of the packed norm at (x, y)."""
    total = 0.0
    for t in range(pn.nterms):
        total += pn.weights[t] * _term_eval(pn, t, x, y)
    return float(total)


def eval_many(pn, xy):
    xy = np.asarray(xy, dtype=np.float64)
    out = np.empty(len(xy))
    for i in range(len(xy)):
        out[i] = eval1(pn, xy[i, 0], xy[i, 1])
    return out


def _term_grad(pn, t, x, y):
    k = pn.kinds[t]
    if k == K_POLY:
        off = pn.poly_off[t]
        best = -math.inf
        bi = off
        for f in range(off, off + pn.poly_len[t]):
            v = pn.facets[f, 0] * x + pn.facets[f, 1] * y
            if v > best:
                best = v
                bi = f
        return pn.facets[bi, 0], pn.facets[bi, 1]
    ax = abs(x)
    ay = abs(y)
    sx = 1.0 if x > 0.0 else (-1.0 if x < 0.0 else 0.0)
    sy = 1.0 if y > 0.0 else (-1.0 if y < 0.0 else 0.0)
    if k == K_ONE:
        return sx, sy
    if k == K_INF:
        if ax >= ay:
            return sx, 0.0
        return 0.0, sy
    n = _term_eval(pn, t, x, y)
    if n == 0.0:
        return 0.0, 0.0
    if k == K_TWO:
        return x / n, y / n
    if k == K_3_2:
        return sx * math.sqrt(ax / n), sy * math.sqrt(ay / n)
    if k == K_THREE:
        rx = ax / n
        ry = ay / n
        return sx * rx * rx, sy * ry * ry
    pm1 = pn.pvals[t] - 1.0
    return sx * (ax / n) ** pm1, sy * (ay / n) ** pm1


def grad1(pn, x, y):
    """Subgradient of the packed norm at (x, y); (0, 0) at the origin."""
    gx = 0.0
    gy = 0.0
    for t in range(pn.nterms):
        tgx, tgy = _term_grad(pn, t, x, y)
        gx += pn.weights[t] * tgx
        gy += pn.weights[t] * tgy
    return gx, gy


def grad_many(pn, xy):
    xy = np.asarray(xy, dtype=np.float64)
    out = np.empty_like(xy)
    for i in range(len(xy)):
        out[i, 0], out[i, 1] = grad1(pn, xy[i, 0], xy[i, 1])
    return out


def sphere_pt(pn, cx, cy, r, theta):
    """Point of the radius-r sphere around (cx, cy) in direction theta."""
    ct = math.cos(theta)
    st = math.sin(theta)
    nu = eval1(pn, ct, st)
    return cx + r * ct / nu, cy + r * st / nu


def intersect(pn, ax, ay, r1, bx, by, r2, side, f_tol, max_iter):
    """Intersect the spheres around a (radius r1) and b (radius r2).

    Returns (px, py, code, fres) with code 0 = regular intersection on the
    requested side of the oriented line a -> b, 1 = tangency (collinear touch
    point), 2 = infeasible radii, 3 = root refinement failed to reach f_tol.

    On each side of the line a->b the residual F(theta) = ||p(theta)-b|| - r2
    is monotone along the sphere arc for strictly convex norms, so a single
    bracketed Illinois iteration finds the crossing.
    """
    dx = bx - ax
    dy = by - ay
    dist = eval1(pn, dx, dy)
    tang = 1e-9 * max(1.0, r1, r2)
    if dist <= tang:
        return 0.0, 0.0, 2, math.inf
    outer = dist - (r1 + r2)
    inner = abs(r1 - r2) - dist
    if abs(outer) <= tang:
        f = r1 / dist
        return ax + f * dx, ay + f * dy, 1, 0.0
    if abs(inner) <= tang:
        s = 1.0 if r1 >= r2 else -1.0
        f = s * r1 / dist
        return ax + f * dx, ay + f * dy, 1, 0.0
    if outer > 0.0 or inner > 0.0:
        return 0.0, 0.0, 2, math.inf

    th = math.atan2(dy, dx)
    t0 = th
    t1 = th + (math.pi if side > 0 else -math.pi)

    def fval(t):
        ct = math.cos(t)
        st = math.sin(t)
        nu = eval1(pn, ct, st)
        px = ax + r1 * ct / nu
        py = ay + r1 * st / nu
        return eval1(pn, px - bx, py - by) - r2, px, py

    f0, px, py = fval(t0)
    if f0 >= 0.0:
        if f0 <= max(f_tol, tang):
            return px, py, 1, f0
        return px, py, 2, f0
    f1, px, py = fval(t1)
    if f1 <= 0.0:
        if -f1 <= max(f_tol, tang):
            return px, py, 1, -f1
        return px, py, 2, -f1

    last = 0
    fm = f1
    for _ in range(max_iter):
        denom = f1 - f0
        if denom != 0.0:
            tm = t1 - f1 * (t1 - t0) / denom
        else:
            tm = 0.5 * (t0 + t1)
        lo = min(t0, t1)
        hi = max(t0, t1)
        if not (lo < tm < hi):
            tm = 0.5 * (t0 + t1)
        fm, px, py = fval(tm)
        if abs(fm) <= f_tol:
            return px, py, 0, abs(fm)
        if fm < 0.0:
            if last == -1:
                f1 *= 0.5
            t0 = tm
            f0 = fm
            last = -1
        else:
            if last == 1:
                f0 *= 0.5
            t1 = tm
            f1 = fm
            last = 1
        if abs(t1 - t0) <= 1e-15:
            break
    code = 0 if abs(fm) <= max(f_tol * 100.0, 1e-9) else 3
    return px, py, code, abs(fm)


def pairs_max_resid(pn, pts, d):
    """max over point pairs of | ||p_i - p_j|| - d |."""
    pts = np.asarray(pts, dtype=np.float64)
    n = len(pts)
    worst = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            r = abs(eval1(pn, pts[i, 0] - pts[j, 0], pts[i, 1] - pts[j, 1]) - d)
            if r > worst:
                worst = r
    return worst


def _residuals_jac(pn, pts, edges, targets, vmap, nv, push_i, push_j, push_t, push_w):
    m = len(edges)
    rows = m + (1 if push_w > 0.0 else 0)
    r = np.zeros(rows)
    jac = np.zeros((rows, nv))
    for e in range(m):
        i = edges[e, 0]
        j = edges[e, 1]
        vx = pts[i, 0] - pts[j, 0]
        vy = pts[i, 1] - pts[j, 1]
        r[e] = eval1(pn, vx, vy) - targets[e]
        gx, gy = grad1(pn, vx, vy)
        if vmap[i] >= 0:
            jac[e, 2 * vmap[i]] += gx
            jac[e, 2 * vmap[i] + 1] += gy
        if vmap[j] >= 0:
            jac[e, 2 * vmap[j]] -= gx
            jac[e, 2 * vmap[j] + 1] -= gy
    if push_w > 0.0:
        vx = pts[push_i, 0] - pts[push_j, 0]
        vy = pts[push_i, 1] - pts[push_j, 1]
        r[m] = push_w * (eval1(pn, vx, vy) - push_t)
        gx, gy = grad1(pn, vx, vy)
        if vmap[push_i] >= 0:
            jac[m, 2 * vmap[push_i]] += push_w * gx
            jac[m, 2 * vmap[push_i] + 1] += push_w * gy
        if vmap[push_j] >= 0:
            jac[m, 2 * vmap[push_j]] -= push_w * gx
            jac[m, 2 * vmap[push_j] + 1] -= push_w * gy
    return r, jac


def lm_edges(pn, pts, edges, targets, free, push_i, push_j, push_t, push_w,
             max_iter, gtol, lam0):
    """Damped least-squares refinement of edge-length residuals.

    ``pts`` is modified in place.  Residuals are ||p_i - p_j|| - target per
    edge, plus an optional weighted row steering the (push_i, push_j)
    distance toward push_t.  Returns (max edge residual, iterations used).
    """
    pts = np.asarray(pts)
    edges = np.asarray(edges, dtype=np.intc)
    targets = np.asarray(targets, dtype=np.float64)
    free = np.asarray(free, dtype=np.uint8)
    n = len(pts)
    m = len(edges)
    vmap = np.full(n, -1, dtype=np.intc)
    nf = 0
    for i in range(n):
        if free[i]:
            vmap[i] = nf
            nf += 1
    nv = 2 * nf

    def edge_max(r):
        return float(np.max(np.abs(r[:m]))) if m else 0.0

    if nv == 0:
        r, _ = _residuals_jac(pn, pts, edges, targets, vmap, 1, push_i, push_j, push_t, push_w)
        return edge_max(r), 0

    lam = lam0
    r, jac = _residuals_jac(pn, pts, edges, targets, vmap, nv, push_i, push_j, push_t, push_w)
    cost = 0.5 * float(r @ r)
    it = 0
    for it in range(1, max_iter + 1):
        if push_w <= 0.0 and edge_max(r) <= gtol:
            break
        a = jac.T @ jac
        g = jac.T @ r
        accepted = False
        for _ in range(24):
            try:
                delta = np.linalg.solve(a + lam * np.eye(nv), -g)
            except np.linalg.LinAlgError:
                lam *= 4.0
                continue
            trial = pts.copy()
            for i in range(n):
                if vmap[i] >= 0:
                    trial[i, 0] += delta[2 * vmap[i]]
                    trial[i, 1] += delta[2 * vmap[i] + 1]
            rt, jt = _residuals_jac(pn, trial, edges, targets, vmap, nv,
                                    push_i, push_j, push_t, push_w)
            ct = 0.5 * float(rt @ rt)
            if ct < cost:
                pts[:, :] = trial
                r, jac, cost = rt, jt, ct
                lam = max(lam * 0.35, 1e-14)
                accepted = True
                break
            lam *= 4.0
            if lam > 1e14:
                break
        if not accepted:
            break
        if float(np.max(np.abs(delta))) <= 1e-15:
            break
    return edge_max(r), it


class PackedPlan:
    __slots__ = ("kind", "v", "n1", "n2", "slot", "chk_off", "chk_i", "chk_j",
                 "chk_closure", "rho", "nsteps")

    def __init__(self, kind, v, n1, n2, slot, chk_off, chk_i, chk_j, chk_closure, rho):
        self.kind = np.ascontiguousarray(kind, dtype=np.intc)
        self.v = np.ascontiguousarray(v, dtype=np.intc)
        self.n1 = np.ascontiguousarray(n1, dtype=np.intc)
        self.n2 = np.ascontiguousarray(n2, dtype=np.intc)
        self.slot = np.ascontiguousarray(slot, dtype=np.intc)
        self.chk_off = np.ascontiguousarray(chk_off, dtype=np.intc)
        self.chk_i = np.ascontiguousarray(chk_i, dtype=np.intc)
        self.chk_j = np.ascontiguousarray(chk_j, dtype=np.intc)
        self.chk_closure = np.ascontiguousarray(chk_closure, dtype=np.uint8)
        self.rho = float(rho)
        self.nsteps = len(self.kind)


def pack_plan(kind, v, n1, n2, slot, chk_off, chk_i, chk_j, chk_closure, rho):
    return PackedPlan(kind, v, n1, n2, slot, chk_off, chk_i, chk_j, chk_closure, rho)


def place_range(pn, plan, lo, hi, pts, signs, phis, tight):
    """Execute plan steps [lo, hi) writing coordinates into pts.

    Returns (code, worst_filter): code 0 on success, or 1 + failing step
    index when a placement is infeasible.  worst_filter is the largest
    residual among non-closure check edges encountered in the range.
    """
    rho = plan.rho
    f_tol = 1e-13 * max(1.0, rho) if tight else 1e-7 * max(1.0, rho)
    iters = 80 if tight else 40
    worst = 0.0
    for s in range(lo, hi):
        k = plan.kind[s]
        v = plan.v[s]
        if k == S_SEED:
            pts[v, 0] = 0.0
            pts[v, 1] = 0.0
        elif k == S_SWEEP:
            c = plan.n1[s]
            px, py = sphere_pt(pn, pts[c, 0], pts[c, 1], rho, phis[plan.slot[s]])
            pts[v, 0] = px
            pts[v, 1] = py
        else:
            i = plan.n1[s]
            j = plan.n2[s]
            side = 1 if signs[plan.slot[s]] == 0 else -1
            px, py, code, _ = intersect(pn, pts[i, 0], pts[i, 1], rho,
                                        pts[j, 0], pts[j, 1], rho, side, f_tol, iters)
            if code >= 2:
                return s + 1, worst
            pts[v, 0] = px
            pts[v, 1] = py
        for c in range(plan.chk_off[s], plan.chk_off[s + 1]):
            if plan.chk_closure[c]:
                continue
            resid = abs(eval1(pn, pts[plan.chk_i[c], 0] - pts[plan.chk_j[c], 0],
                              pts[plan.chk_i[c], 1] - pts[plan.chk_j[c], 1]) - rho)
            if resid > worst:
                worst = resid
    return 0, worst


def closure_roots(pn, plan, blo, bend, ci, cj, pts_in, signs, phis, scan_n, graze_tol):
    """Sweep-angle values closing the block's designated check edge.

    Scans the full circle at scan_n samples, refines each sign change of the
    closure residual by the Illinois method, and additionally reports grazing
    candidates (local minima of |R| below graze_tol, and validity-boundary
    samples) so that tangential placements are not silently missed.
    """
    rho = plan.rho
    slot = plan.slot[blo]
    pts = np.array(pts_in, dtype=np.float64, copy=True)
    rvals = np.full(scan_n, np.nan)
    for k in range(scan_n):
        phis[slot] = TWO_PI * k / scan_n
        code, _ = place_range(pn, plan, blo, bend, pts, signs, phis, False)
        if code == 0:
            rvals[k] = eval1(pn, pts[ci, 0] - pts[cj, 0], pts[ci, 1] - pts[cj, 1]) - rho

    def refine(a, fa, b, fb):
        last = 0
        tm = 0.5 * (a + b)
        for _ in range(80):
            denom = fb - fa
            tm = b - fb * (b - a) / denom if denom != 0.0 else 0.5 * (a + b)
            if not (min(a, b) < tm < max(a, b)):
                tm = 0.5 * (a + b)
            phis[slot] = tm
            code, _ = place_range(pn, plan, blo, bend, pts, signs, phis, True)
            if code != 0:
                return None
            fm = eval1(pn, pts[ci, 0] - pts[cj, 0], pts[ci, 1] - pts[cj, 1]) - rho
            if abs(fm) <= 1e-11 * max(1.0, rho):
                return tm
            if (fm < 0.0) == (fa < 0.0):
                if last == -1:
                    fb *= 0.5
                a, fa, last = tm, fm, -1
            else:
                if last == 1:
                    fa *= 0.5
                b, fb, last = tm, fm, 1
            if abs(b - a) <= 1e-14:
                return tm
        return tm

    roots = []
    step = TWO_PI / scan_n
    for k in range(scan_n):
        k2 = (k + 1) % scan_n
        a = step * k
        b = step * (k + 1)
        ra = rvals[k]
        rb = rvals[k2]
        va = not math.isnan(ra)
        vb = not math.isnan(rb)
        if va and vb:
            if ra == 0.0:
                roots.append(a)
            elif ra * rb < 0.0:
                root = refine(a, ra, b, rb)
                if root is not None:
                    roots.append(root % TWO_PI)
        # grazing: validity boundary with small residual
        if va and not vb and abs(ra) <= graze_tol:
            roots.append(a)
        if vb and not va and abs(rb) <= graze_tol:
            roots.append(b % TWO_PI)
        # grazing: interior local minimum of |R| that does not cross zero
        k0 = (k - 1) % scan_n
        r0 = rvals[k0]
        if va and vb and not math.isnan(r0):
            if abs(ra) <= graze_tol and abs(ra) < abs(r0) and abs(ra) <= abs(rb) and r0 * ra > 0.0 and ra * rb > 0.0:
                den = r0 - 2.0 * ra + rb
                off = 0.5 * (r0 - rb) / den if den != 0.0 else 0.0
                roots.append((a + off * step) % TWO_PI)
    roots.sort()
    out = []
    for r in roots:
        if not out or r - out[-1] > 1e-9:
            out.append(r)
    return np.asarray(out)


def leaf_stats(pn, pts, edges, rho, ai, aj, inj_tol, pairs_out):
    """Summary of a complete placement.

    Returns (max edge residual, anchor distance, min pairwise distance,
    number of coincident pairs); coincident index pairs (distance <= inj_tol)
    are written into pairs_out up to its capacity.
    """
    pts = np.asarray(pts)
    edges = np.asarray(edges, dtype=np.intc)
    n = len(pts)
    worst = 0.0
    for e in range(len(edges)):
        r = abs(eval1(pn, pts[edges[e, 0], 0] - pts[edges[e, 1], 0],
                      pts[edges[e, 0], 1] - pts[edges[e, 1], 1]) - rho)
        if r > worst:
            worst = r
    anchor = eval1(pn, pts[ai, 0] - pts[aj, 0], pts[ai, 1] - pts[aj, 1])
    minpair = math.inf
    ncoinc = 0
    cap = len(pairs_out)
    for i in range(n):
        for j in range(i + 1, n):
            d = eval1(pn, pts[i, 0] - pts[j, 0], pts[i, 1] - pts[j, 1])
            if d < minpair:
                minpair = d
            if d <= inj_tol:
                if ncoinc < cap:
                    pairs_out[ncoinc, 0] = i
                    pairs_out[ncoinc, 1] = j
                ncoinc += 1
    if n < 2:
        minpair = 0.0
    return worst, float(anchor), float(minpair), ncoinc
