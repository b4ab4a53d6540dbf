# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled numeric kernels.

Mirror of normrig._pykernel; keep the two implementations in sync
(tests/test_kernel_parity.py compares them).
"""

import math

import numpy as np

from libc.math cimport atan2, cos, fabs, pow, sin, sqrt

BACKEND_NAME = "compiled"

K_P = 0
K_ONE = 1
K_TWO = 2
K_INF = 3
K_3_2 = 4
K_THREE = 5
K_POLY = 6

S_SEED = 0
S_SWEEP = 1
S_PLACE = 2

cdef double TWO_PI = 2.0 * math.pi
cdef double PI = math.pi
cdef double INF = float("inf")

DEF CK_P = 0
DEF CK_ONE = 1
DEF CK_TWO = 2
DEF CK_INF = 3
DEF CK_3_2 = 4
DEF CK_THREE = 5
DEF CK_POLY = 6

DEF CS_SEED = 0
DEF CS_SWEEP = 1
DEF CS_PLACE = 2


cdef class PackedNorm:
    cdef double[::1] weights
    cdef int[::1] kinds
    cdef double[::1] pvals
    cdef double[::1] invps
    cdef int[::1] poly_off
    cdef int[::1] poly_len
    cdef double[:, ::1] facets
    cdef int nterms

    def __init__(self, weights, kinds, pvals, invps, poly_off, poly_len, facets):
        self.weights = np.ascontiguousarray(weights, dtype=np.float64)
        self.kinds = np.ascontiguousarray(kinds, dtype=np.intc)
        self.pvals = np.ascontiguousarray(pvals, dtype=np.float64)
        self.invps = np.ascontiguousarray(invps, dtype=np.float64)
        self.poly_off = np.ascontiguousarray(poly_off, dtype=np.intc)
        self.poly_len = np.ascontiguousarray(poly_len, dtype=np.intc)
        self.facets = np.ascontiguousarray(facets, dtype=np.float64).reshape(-1, 2)
        self.nterms = len(weights)


def pack_norm(weights, kinds, pvals, invps, poly_off, poly_len, facets):
    return PackedNorm(weights, kinds, pvals, invps, poly_off, poly_len, facets)


cdef inline double _term_eval(PackedNorm pn, int t, double x, double y) noexcept nogil:
    cdef int k = pn.kinds[t]
    cdef int f, off
    cdef double best, v, ax, ay, m, sx, sy, s, p
    if k == CK_POLY:
        off = pn.poly_off[t]
        best = -INF
        for f in range(off, off + pn.poly_len[t]):
            v = pn.facets[f, 0] * x + pn.facets[f, 1] * y
            if v > best:
                best = v
        return best
    ax = fabs(x)
    ay = fabs(y)
    if k == CK_ONE:
        return ax + ay
    if k == CK_INF:
        return ax if ax >= ay else ay
    m = ax if ax >= ay else ay
    if m == 0.0:
        return 0.0
    sx = ax / m
    sy = ay / m
    if k == CK_TWO:
        # scaled explicitly so the pure twin matches bit for bit
        return m * sqrt(sx * sx + sy * sy)
    if k == CK_3_2:
        s = sx * sqrt(sx) + sy * sqrt(sy)
        return m * pow(s, 2.0 / 3.0)
    if k == CK_THREE:
        s = sx * sx * sx + sy * sy * sy
        return m * pow(s, 1.0 / 3.0)
    p = pn.pvals[t]
    s = pow(sx, p) + pow(sy, p)
    return m * pow(s, pn.invps[t])


cdef inline double c_eval(PackedNorm pn, double x, double y) noexcept nogil:
    cdef double total = 0.0
    cdef int t
    for t in range(pn.nterms):
        total += pn.weights[t] * _term_eval(pn, t, x, y)
    return total


cdef void _term_grad(PackedNorm pn, int t, double x, double y,
                     double* gx, double* gy) noexcept nogil:
    cdef int k = pn.kinds[t]
    cdef int f, off, bi
    cdef double best, v, ax, ay, sx, sy, n, rx, ry, pm1
    if k == CK_POLY:
        off = pn.poly_off[t]
        best = -INF
        bi = off
        for f in range(off, off + pn.poly_len[t]):
            v = pn.facets[f, 0] * x + pn.facets[f, 1] * y
            if v > best:
                best = v
                bi = f
        gx[0] = pn.facets[bi, 0]
        gy[0] = pn.facets[bi, 1]
        return
    ax = fabs(x)
    ay = fabs(y)
    sx = 1.0 if x > 0.0 else (-1.0 if x < 0.0 else 0.0)
    sy = 1.0 if y > 0.0 else (-1.0 if y < 0.0 else 0.0)
    if k == CK_ONE:
        gx[0] = sx
        gy[0] = sy
        return
    if k == CK_INF:
        if ax >= ay:
            gx[0] = sx
            gy[0] = 0.0
        else:
            gx[0] = 0.0
            gy[0] = sy
        return
    n = _term_eval(pn, t, x, y)
    if n == 0.0:
        gx[0] = 0.0
        gy[0] = 0.0
        return
    if k == CK_TWO:
        gx[0] = x / n
        gy[0] = y / n
        return
    if k == CK_3_2:
        gx[0] = sx * sqrt(ax / n)
        gy[0] = sy * sqrt(ay / n)
        return
    if k == CK_THREE:
        rx = ax / n
        ry = ay / n
        gx[0] = sx * rx * rx
        gy[0] = sy * ry * ry
        return
    pm1 = pn.pvals[t] - 1.0
    gx[0] = sx * pow(ax / n, pm1)
    gy[0] = sy * pow(ay / n, pm1)


cdef void c_grad(PackedNorm pn, double x, double y,
                 double* gx, double* gy) noexcept nogil:
    cdef double tx = 0.0, ty = 0.0, ggx = 0.0, ggy = 0.0
    cdef int t
    for t in range(pn.nterms):
        _term_grad(pn, t, x, y, &ggx, &ggy)
        tx += pn.weights[t] * ggx
        ty += pn.weights[t] * ggy
    gx[0] = tx
    gy[0] = ty


def eval1(PackedNorm pn, double x, double y):
    """Value of the packed norm at (x, y)."""
    return c_eval(pn, x, y)


def eval_many(PackedNorm pn, xy):
    cdef double[:, ::1] v = np.ascontiguousarray(xy, dtype=np.float64)
    out = np.empty(v.shape[0])
    cdef double[::1] o = out
    cdef Py_ssize_t i
    for i in range(v.shape[0]):
        o[i] = c_eval(pn, v[i, 0], v[i, 1])
    return out


def grad1(PackedNorm pn, double x, double y):
    """Subgradient of the packed norm at (x, y); (0, 0) at the origin."""
    cdef double gx = 0.0, gy = 0.0
    c_grad(pn, x, y, &gx, &gy)
    return gx, gy


def grad_many(PackedNorm pn, xy):
    cdef double[:, ::1] v = np.ascontiguousarray(xy, dtype=np.float64)
    out = np.empty((v.shape[0], 2))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i
    cdef double gx = 0.0, gy = 0.0
    for i in range(v.shape[0]):
        c_grad(pn, v[i, 0], v[i, 1], &gx, &gy)
        o[i, 0] = gx
        o[i, 1] = gy
    return out


cdef inline void c_sphere_pt(PackedNorm pn, double cx, double cy, double r,
                             double theta, double* px, double* py) noexcept nogil:
    cdef double ct = cos(theta)
    cdef double st = sin(theta)
    cdef double nu = c_eval(pn, ct, st)
    px[0] = cx + r * ct / nu
    py[0] = cy + r * st / nu


def sphere_pt(PackedNorm pn, double cx, double cy, double r, double theta):
    """Point of the radius-r sphere around (cx, cy) in direction theta."""
    cdef double px = 0.0, py = 0.0
    c_sphere_pt(pn, cx, cy, r, theta, &px, &py)
    return px, py


cdef int c_intersect(PackedNorm pn, double ax, double ay, double r1,
                     double bx, double by, double r2, int side,
                     double f_tol, int max_iter,
                     double* opx, double* opy, double* ofres) noexcept nogil:
    cdef double dx = bx - ax
    cdef double dy = by - ay
    cdef double dist = c_eval(pn, dx, dy)
    cdef double rmax = r1 if r1 > r2 else r2
    cdef double tang = 1e-9 * (1.0 if rmax < 1.0 else rmax)
    cdef double outer, inner, f, s
    cdef double th, t0, t1, f0, f1, tm, fm, lo, hi, denom, ftop
    cdef double ct, st, nu, px, py
    cdef int last, it

    if dist <= tang:
        opx[0] = 0.0
        opy[0] = 0.0
        ofres[0] = INF
        return 2
    outer = dist - (r1 + r2)
    inner = fabs(r1 - r2) - dist
    if fabs(outer) <= tang:
        f = r1 / dist
        opx[0] = ax + f * dx
        opy[0] = ay + f * dy
        ofres[0] = 0.0
        return 1
    if fabs(inner) <= tang:
        s = 1.0 if r1 >= r2 else -1.0
        f = s * r1 / dist
        opx[0] = ax + f * dx
        opy[0] = ay + f * dy
        ofres[0] = 0.0
        return 1
    if outer > 0.0 or inner > 0.0:
        opx[0] = 0.0
        opy[0] = 0.0
        ofres[0] = INF
        return 2

    th = atan2(dy, dx)
    t0 = th
    t1 = th + (PI if side > 0 else -PI)
    ftop = f_tol if f_tol > tang else tang

    ct = cos(t0)
    st = sin(t0)
    nu = c_eval(pn, ct, st)
    px = ax + r1 * ct / nu
    py = ay + r1 * st / nu
    f0 = c_eval(pn, px - bx, py - by) - r2
    if f0 >= 0.0:
        opx[0] = px
        opy[0] = py
        ofres[0] = f0
        return 1 if f0 <= ftop else 2
    ct = cos(t1)
    st = sin(t1)
    nu = c_eval(pn, ct, st)
    px = ax + r1 * ct / nu
    py = ay + r1 * st / nu
    f1 = c_eval(pn, px - bx, py - by) - r2
    if f1 <= 0.0:
        opx[0] = px
        opy[0] = py
        ofres[0] = -f1
        return 1 if -f1 <= ftop else 2

    last = 0
    fm = f1
    for it in range(max_iter):
        denom = f1 - f0
        if denom != 0.0:
            tm = t1 - f1 * (t1 - t0) / denom
        else:
            tm = 0.5 * (t0 + t1)
        lo = t0 if t0 < t1 else t1
        hi = t1 if t1 > t0 else t0
        if not (lo < tm < hi):
            tm = 0.5 * (t0 + t1)
        ct = cos(tm)
        st = sin(tm)
        nu = c_eval(pn, ct, st)
        px = ax + r1 * ct / nu
        py = ay + r1 * st / nu
        fm = c_eval(pn, px - bx, py - by) - r2
        if fabs(fm) <= f_tol:
            opx[0] = px
            opy[0] = py
            ofres[0] = fabs(fm)
            return 0
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
        if fabs(t1 - t0) <= 1e-15:
            break
    opx[0] = px
    opy[0] = py
    ofres[0] = fabs(fm)
    return 0 if fabs(fm) <= (f_tol * 100.0 if f_tol * 100.0 > 1e-9 else 1e-9) else 3


def intersect(PackedNorm pn, double ax, double ay, double r1,
              double bx, double by, double r2, int side,
              double f_tol, int max_iter):
    """Intersect two norm spheres; see normrig._pykernel.intersect."""
    cdef double px = 0.0, py = 0.0, fres = 0.0
    cdef int code = c_intersect(pn, ax, ay, r1, bx, by, r2, side, f_tol,
                                max_iter, &px, &py, &fres)
    return px, py, code, fres


def pairs_max_resid(PackedNorm pn, pts, double d):
    """max over point pairs of | ||p_i - p_j|| - d |."""
    cdef double[:, ::1] p = np.ascontiguousarray(pts, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0]
    cdef Py_ssize_t i, j
    cdef double worst = 0.0, r
    for i in range(n):
        for j in range(i + 1, n):
            r = fabs(c_eval(pn, p[i, 0] - p[j, 0], p[i, 1] - p[j, 1]) - d)
            if r > worst:
                worst = r
    return worst


cdef int _cholesky_solve(double* a, double* b, double* x, int n) noexcept nogil:
    # solves a x = b for symmetric positive definite a (row major);
    # a is overwritten with its Cholesky factor.
    cdef int i, j, k
    cdef double s
    for i in range(n):
        for j in range(i, n):
            s = a[i * n + j]
            for k in range(i):
                s -= a[i * n + k] * a[j * n + k]
            if i == j:
                if s <= 0.0:
                    return 1
                a[i * n + i] = sqrt(s)
            else:
                a[j * n + i] = s / a[i * n + i]
    for i in range(n):
        s = b[i]
        for k in range(i):
            s -= a[i * n + k] * x[k]
        x[i] = s / a[i * n + i]
    for i in range(n - 1, -1, -1):
        s = x[i]
        for k in range(i + 1, n):
            s -= a[k * n + i] * x[k]
        x[i] = s / a[i * n + i]
    return 0


cdef void _fill_residuals(PackedNorm pn, double[:, ::1] p, int[:, ::1] edges,
                          double[::1] targets, int[::1] vmap, int rows, int nv,
                          int push_i, int push_j, double push_t, double push_w,
                          double[::1] rr, double[:, ::1] jj) noexcept nogil:
    cdef int m = edges.shape[0]
    cdef int e, i, j, c
    cdef double vx, vy, gx = 0.0, gy = 0.0
    for e in range(rows):
        for c in range(nv):
            jj[e, c] = 0.0
    for e in range(m):
        i = edges[e, 0]
        j = edges[e, 1]
        vx = p[i, 0] - p[j, 0]
        vy = p[i, 1] - p[j, 1]
        rr[e] = c_eval(pn, vx, vy) - targets[e]
        c_grad(pn, vx, vy, &gx, &gy)
        if vmap[i] >= 0:
            jj[e, 2 * vmap[i]] += gx
            jj[e, 2 * vmap[i] + 1] += gy
        if vmap[j] >= 0:
            jj[e, 2 * vmap[j]] -= gx
            jj[e, 2 * vmap[j] + 1] -= gy
    if push_w > 0.0:
        vx = p[push_i, 0] - p[push_j, 0]
        vy = p[push_i, 1] - p[push_j, 1]
        rr[m] = push_w * (c_eval(pn, vx, vy) - push_t)
        c_grad(pn, vx, vy, &gx, &gy)
        if vmap[push_i] >= 0:
            jj[m, 2 * vmap[push_i]] += push_w * gx
            jj[m, 2 * vmap[push_i] + 1] += push_w * gy
        if vmap[push_j] >= 0:
            jj[m, 2 * vmap[push_j]] -= push_w * gx
            jj[m, 2 * vmap[push_j] + 1] -= push_w * gy


cdef double _edge_max(double[::1] rr, int m) noexcept nogil:
    cdef double w = 0.0
    cdef int e
    for e in range(m):
        if fabs(rr[e]) > w:
            w = fabs(rr[e])
    return w


def lm_edges(PackedNorm pn, pts_arr, edges_arr, targets_arr, free_arr,
             int push_i, int push_j, double push_t, double push_w,
             int max_iter, double gtol, double lam0):
    """Damped least-squares refinement; pts is modified in place.

    Same contract as normrig._pykernel.lm_edges.
    """
    cdef double[:, ::1] pts = pts_arr
    cdef int[:, ::1] edges = np.ascontiguousarray(edges_arr, dtype=np.intc).reshape(-1, 2)
    cdef double[::1] targets = np.ascontiguousarray(targets_arr, dtype=np.float64)
    cdef unsigned char[::1] freep = np.ascontiguousarray(free_arr, dtype=np.uint8)
    cdef int n = pts.shape[0]
    cdef int m = edges.shape[0]
    cdef int rows = m + (1 if push_w > 0.0 else 0)
    cdef int i, j, e, it, nf, nv, inner, itused

    vmap_np = np.full(n, -1, dtype=np.intc)
    cdef int[::1] vmap = vmap_np
    nf = 0
    for i in range(n):
        if freep[i]:
            vmap[i] = nf
            nf += 1
    nv = 2 * nf

    r_np = np.zeros(rows)
    rt_np = np.zeros(rows)
    jac_np = np.zeros((rows, nv if nv > 0 else 1))
    jt_np = np.zeros((rows, nv if nv > 0 else 1))
    trial_np = np.zeros((n, 2))
    a_np = np.zeros((nv if nv > 0 else 1) * (nv if nv > 0 else 1))
    aw_np = np.zeros_like(a_np)
    g_np = np.zeros(nv if nv > 0 else 1)
    gw_np = np.zeros_like(g_np)
    d_np = np.zeros(nv if nv > 0 else 1)
    cdef double[::1] r = r_np
    cdef double[::1] rt = rt_np
    cdef double[:, ::1] jac = jac_np
    cdef double[:, ::1] jt = jt_np
    cdef double[:, ::1] trial = trial_np
    cdef double[::1] abuf = a_np
    cdef double[::1] awork = aw_np
    cdef double[::1] gbuf = g_np
    cdef double[::1] gwork = gw_np
    cdef double[::1] dbuf = d_np

    cdef double lam, cost, newcost, s, maxstep
    cdef bint accepted

    _fill_residuals(pn, pts, edges, targets, vmap, rows, nv,
                    push_i, push_j, push_t, push_w, r, jac)
    if nv == 0:
        return _edge_max(r, m), 0

    cost = 0.0
    for e in range(rows):
        cost += r[e] * r[e]
    cost *= 0.5
    lam = lam0
    itused = 0
    maxstep = INF
    for it in range(1, max_iter + 1):
        itused = it
        if push_w <= 0.0 and _edge_max(r, m) <= gtol:
            break
        for i in range(nv):
            for j in range(nv):
                s = 0.0
                for e in range(rows):
                    s += jac[e, i] * jac[e, j]
                abuf[i * nv + j] = s
            s = 0.0
            for e in range(rows):
                s += jac[e, i] * r[e]
            gbuf[i] = -s
        accepted = False
        for inner in range(24):
            for i in range(nv * nv):
                awork[i] = abuf[i]
            for i in range(nv):
                awork[i * nv + i] += lam
                gwork[i] = gbuf[i]
            if _cholesky_solve(&awork[0], &gwork[0], &dbuf[0], nv) != 0:
                lam *= 4.0
                continue
            maxstep = 0.0
            for i in range(nv):
                if fabs(dbuf[i]) > maxstep:
                    maxstep = fabs(dbuf[i])
            for i in range(n):
                trial[i, 0] = pts[i, 0]
                trial[i, 1] = pts[i, 1]
                if vmap[i] >= 0:
                    trial[i, 0] += dbuf[2 * vmap[i]]
                    trial[i, 1] += dbuf[2 * vmap[i] + 1]
            _fill_residuals(pn, trial, edges, targets, vmap, rows, nv,
                            push_i, push_j, push_t, push_w, rt, jt)
            newcost = 0.0
            for e in range(rows):
                newcost += rt[e] * rt[e]
            newcost *= 0.5
            if newcost < cost:
                for i in range(n):
                    pts[i, 0] = trial[i, 0]
                    pts[i, 1] = trial[i, 1]
                for e in range(rows):
                    r[e] = rt[e]
                    for j in range(nv):
                        jac[e, j] = jt[e, j]
                cost = newcost
                lam = lam * 0.35
                if lam < 1e-14:
                    lam = 1e-14
                accepted = True
                break
            lam *= 4.0
            if lam > 1e14:
                break
        if not accepted:
            break
        if maxstep <= 1e-15:
            break
    return _edge_max(r, m), itused


cdef class PackedPlan:
    cdef int[::1] kind
    cdef int[::1] v
    cdef int[::1] n1
    cdef int[::1] n2
    cdef int[::1] slot
    cdef int[::1] chk_off
    cdef int[::1] chk_i
    cdef int[::1] chk_j
    cdef unsigned char[::1] chk_closure
    cdef public double rho
    cdef int nsteps

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
        self.nsteps = len(kind)


def pack_plan(kind, v, n1, n2, slot, chk_off, chk_i, chk_j, chk_closure, rho):
    return PackedPlan(kind, v, n1, n2, slot, chk_off, chk_i, chk_j, chk_closure, rho)


cdef int c_place_range(PackedNorm pn, PackedPlan plan, int lo, int hi,
                       double[:, ::1] pts, unsigned char[::1] signs,
                       double[::1] phis, bint tight, double* oworst) noexcept nogil:
    cdef double rho = plan.rho
    cdef double scale = 1.0 if rho < 1.0 else rho
    cdef double f_tol = (1e-13 if tight else 1e-7) * scale
    cdef int iters = 80 if tight else 40
    cdef double worst = 0.0
    cdef int s, k, v, c, i, j, side, code
    cdef double px = 0.0, py = 0.0, fres = 0.0, resid
    for s in range(lo, hi):
        k = plan.kind[s]
        v = plan.v[s]
        if k == CS_SEED:
            pts[v, 0] = 0.0
            pts[v, 1] = 0.0
        elif k == CS_SWEEP:
            c_sphere_pt(pn, pts[plan.n1[s], 0], pts[plan.n1[s], 1], rho,
                        phis[plan.slot[s]], &px, &py)
            pts[v, 0] = px
            pts[v, 1] = py
        else:
            i = plan.n1[s]
            j = plan.n2[s]
            side = 1 if signs[plan.slot[s]] == 0 else -1
            code = c_intersect(pn, pts[i, 0], pts[i, 1], rho, pts[j, 0],
                               pts[j, 1], rho, side, f_tol, iters, &px, &py, &fres)
            if code >= 2:
                oworst[0] = worst
                return s + 1
            pts[v, 0] = px
            pts[v, 1] = py
        for c in range(plan.chk_off[s], plan.chk_off[s + 1]):
            if plan.chk_closure[c]:
                continue
            resid = fabs(c_eval(pn, pts[plan.chk_i[c], 0] - pts[plan.chk_j[c], 0],
                                pts[plan.chk_i[c], 1] - pts[plan.chk_j[c], 1]) - rho)
            if resid > worst:
                worst = resid
    oworst[0] = worst
    return 0


def place_range(PackedNorm pn, PackedPlan plan, int lo, int hi, pts_arr,
                signs_arr, phis_arr, bint tight):
    """Execute plan steps [lo, hi); same contract as the pure version."""
    cdef double[:, ::1] pts = pts_arr
    cdef unsigned char[::1] signs = signs_arr
    cdef double[::1] phis = phis_arr
    cdef double worst = 0.0
    cdef int code = c_place_range(pn, plan, lo, hi, pts, signs, phis, tight, &worst)
    return code, worst


cdef double _closure_val(PackedNorm pn, PackedPlan plan, int blo, int bend,
                         int ci, int cj, double[:, ::1] pts,
                         unsigned char[::1] signs, double[::1] phis,
                         int slot, double phi, bint tight, int* code) noexcept nogil:
    cdef double worst = 0.0
    phis[slot] = phi
    code[0] = c_place_range(pn, plan, blo, bend, pts, signs, phis, tight, &worst)
    if code[0] != 0:
        return 0.0
    return c_eval(pn, pts[ci, 0] - pts[cj, 0], pts[ci, 1] - pts[cj, 1]) - plan.rho


cdef double _refine_root(PackedNorm pn, PackedPlan plan, int blo, int bend,
                         int ci, int cj, double[:, ::1] pts,
                         unsigned char[::1] signs, double[::1] phis, int slot,
                         double a, double fa, double b, double fb, int* ok) noexcept nogil:
    cdef int last = 0, itr, code = 0
    cdef double tm = 0.5 * (a + b), fm, denom, lo, hi
    cdef double rtol = 1e-11 * (1.0 if plan.rho < 1.0 else plan.rho)
    ok[0] = 1
    for itr in range(80):
        denom = fb - fa
        if denom != 0.0:
            tm = b - fb * (b - a) / denom
        else:
            tm = 0.5 * (a + b)
        lo = a if a < b else b
        hi = b if b > a else a
        if not (lo < tm < hi):
            tm = 0.5 * (a + b)
        fm = _closure_val(pn, plan, blo, bend, ci, cj, pts, signs, phis,
                          slot, tm, True, &code)
        if code != 0:
            ok[0] = 0
            return tm
        if fabs(fm) <= rtol:
            return tm
        if (fm < 0.0) == (fa < 0.0):
            if last == -1:
                fb *= 0.5
            a = tm
            fa = fm
            last = -1
        else:
            if last == 1:
                fa *= 0.5
            b = tm
            fb = fm
            last = 1
        if fabs(b - a) <= 1e-14:
            return tm
    return tm


def closure_roots(PackedNorm pn, PackedPlan plan, int blo, int bend,
                  int ci, int cj, pts_in, signs_arr, phis_arr,
                  int scan_n, double graze_tol):
    """Sweep-angle values closing the block's designated check edge."""
    cdef int slot = plan.slot[blo]
    pts_np = np.array(pts_in, dtype=np.float64, copy=True)
    cdef double[:, ::1] pts = pts_np
    cdef unsigned char[::1] signs = signs_arr
    cdef double[::1] phis = phis_arr
    rvals_np = np.full(scan_n, np.nan)
    cdef double[::1] rvals = rvals_np
    cdef int k, code = 0, ok = 0
    cdef double val
    for k in range(scan_n):
        val = _closure_val(pn, plan, blo, bend, ci, cj, pts, signs, phis,
                           slot, TWO_PI * k / scan_n, False, &code)
        if code == 0:
            rvals[k] = val

    roots = []
    cdef double step = TWO_PI / scan_n
    cdef int k2, k0
    cdef double a, b, ra, rb, r0, den, off, root
    cdef bint va, vb
    for k in range(scan_n):
        k2 = k + 1
        if k2 == scan_n:
            k2 = 0
        a = step * k
        b = step * (k + 1)
        ra = rvals[k]
        rb = rvals[k2]
        va = ra == ra
        vb = rb == rb
        if va and vb:
            if ra == 0.0:
                roots.append(a)
            elif ra * rb < 0.0:
                root = _refine_root(pn, plan, blo, bend, ci, cj, pts, signs,
                                    phis, slot, a, ra, b, rb, &ok)
                if ok:
                    roots.append(root % TWO_PI)
        if va and (not vb) and fabs(ra) <= graze_tol:
            roots.append(a)
        if vb and (not va) and fabs(rb) <= graze_tol:
            roots.append(b % TWO_PI)
        k0 = k - 1
        if k0 < 0:
            k0 = scan_n - 1
        r0 = rvals[k0]
        if va and vb and r0 == r0:
            if (fabs(ra) <= graze_tol and fabs(ra) < fabs(r0)
                    and fabs(ra) <= fabs(rb) and r0 * ra > 0.0 and ra * rb > 0.0):
                den = r0 - 2.0 * ra + rb
                off = 0.5 * (r0 - rb) / den if den != 0.0 else 0.0
                roots.append((a + off * step) % TWO_PI)
    roots.sort()
    out = []
    last = -10.0
    for r in roots:
        if not out or r - last > 1e-9:
            out.append(r)
            last = r
    return np.asarray(out)


def leaf_stats(PackedNorm pn, pts_arr, edges_arr, double rho, int ai, int aj,
               double inj_tol, pairs_out):
    """Summary of a complete placement; see the pure version for the contract."""
    cdef double[:, ::1] pts = np.ascontiguousarray(pts_arr, dtype=np.float64)
    cdef int[:, ::1] edges = np.ascontiguousarray(edges_arr, dtype=np.intc).reshape(-1, 2)
    cdef int[:, ::1] pairs = pairs_out
    cdef int n = pts.shape[0]
    cdef int m = edges.shape[0]
    cdef int cap = pairs.shape[0]
    cdef double worst = 0.0, r, anchor, minpair = INF, d
    cdef int e, i, j, ncoinc = 0
    for e in range(m):
        r = fabs(c_eval(pn, pts[edges[e, 0], 0] - pts[edges[e, 1], 0],
                        pts[edges[e, 0], 1] - pts[edges[e, 1], 1]) - rho)
        if r > worst:
            worst = r
    anchor = c_eval(pn, pts[ai, 0] - pts[aj, 0], pts[ai, 1] - pts[aj, 1])
    for i in range(n):
        for j in range(i + 1, n):
            d = c_eval(pn, pts[i, 0] - pts[j, 0], pts[i, 1] - pts[j, 1])
            if d < minpair:
                minpair = d
            if d <= inj_tol:
                if ncoinc < cap:
                    pairs[ncoinc, 0] = i
                    pairs[ncoinc, 1] = j
                ncoinc += 1
    if n < 2:
        minpair = 0.0
    return worst, anchor, minpair, ncoinc
