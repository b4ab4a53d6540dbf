"""Sphere intersection and the matched-pair machinery on a norm sphere.

``sphere_intersect`` finds a point at prescribed norm-distances from two
centers, on a chosen side of the line joining them.  On each side the radial
residual is monotone along the sphere arc for strictly convex norms (the
two-equidistant-points property), so one bracketed root-find suffices; no
scanning is needed.

``h_map`` matches each point u of a sphere with the unique sphere point at
sphere-radius distance from u on the orientation fixed by a reference pair,
``pair_sum_gap`` measures how far the matched sum u + h(u) travels from the
reference sum, and ``find_second_pair`` locates a second pair at prescribed
gap by bisection along the sphere arc.

All functions are pure; concurrent calls are safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from normrig import _backend as kernel
from normrig.norms import (CONSTRUCTION_TOL, Norm2, SidePreconditionError,
                           StarReport, Vec2, side_sign)

TIGHT_F_TOL = 1e-13
TIGHT_ITERS = 80


class InfeasibleRadiiError(ValueError):
    """Sphere radii cannot meet: outside the generalized triangle range."""


class ConvergenceError(RuntimeError):
    """Root refinement failed to reach tolerance within the iteration cap."""


class FrameError(ValueError):
    """Reference pair does not satisfy the frame distance equalities."""


@dataclass(frozen=True)
class IntersectResult:
    point: Vec2
    tangent: bool


@dataclass(frozen=True)
class OrientedFrame:
    """Reference pair (a, b) on a common sphere fixing orientation and radius d."""

    a: Vec2
    b: Vec2
    d: float

    @property
    def orientation(self) -> int:
        det = self.a[0] * self.b[1] - self.a[1] * self.b[0]
        return 1 if det > 0.0 else -1


def side_of_line(a: Vec2, b: Vec2, p: Vec2) -> int:
    """+1 or -1 for the side of the oriented line a -> b containing p.

    The sign is that of det(b - a, p - a); collinear points raise
    SidePreconditionError.
    """
    if a == b:
        raise SidePreconditionError("a and b must be distinct")
    return side_sign(a, b, p)


def sphere_intersect(n: Norm2, a: Vec2, r1: float, b: Vec2, r2: float,
                     side: int = 1, tol: float = CONSTRUCTION_TOL) -> IntersectResult:
    """Point c with ||c - a|| = r1 and ||c - b|| = r2 on the given side.

    Tangency (center distance at the edge of feasibility within 1e-9)
    returns the collinear touch point with ``tangent=True``.  Infeasible
    radii raise InfeasibleRadiiError; failure to reach the residual
    tolerance raises ConvergenceError.
    """
    if side not in (1, -1):
        raise ValueError("side must be +1 or -1")
    f_tol = min(tol, TIGHT_F_TOL * max(1.0, r1, r2))
    px, py, code, fres = kernel.intersect(n.packed, a[0], a[1], r1, b[0], b[1],
                                          r2, side, f_tol, TIGHT_ITERS)
    if code == 2:
        raise InfeasibleRadiiError(
            f"no sphere intersection: centers {a}, {b}, radii {r1}, {r2}")
    if code == 3 or fres > tol:
        raise ConvergenceError(
            f"sphere intersection residual {fres:.3e} above tolerance {tol:.3e}")
    return IntersectResult(point=(px, py), tangent=code == 1)


def make_frame(n: Norm2, a: Vec2, b: Vec2, tol: float = CONSTRUCTION_TOL) -> OrientedFrame:
    """Validated frame: ||a|| = ||b|| = ||a - b|| within tol."""
    da = n.eval(a)
    db = n.eval(b)
    dab = n.dist(a, b)
    d = da
    if abs(da - db) > tol * max(1.0, d) or abs(dab - d) > tol * max(1.0, d):
        raise FrameError(
            f"frame distances differ: ||a||={da}, ||b||={db}, ||a-b||={dab}")
    return OrientedFrame(a=(float(a[0]), float(a[1])), b=(float(b[0]), float(b[1])), d=d)


def h_map(frame: OrientedFrame, n: Norm2, u: Vec2,
          tol: float = CONSTRUCTION_TOL) -> Vec2:
    """The sphere point at distance d from u, on the frame's orientation.

    Requires ||u|| = d within tolerance and a norm that claims strict
    convexity (which makes the matched point unique).  h(a) = b and
    h(-a) = -b hold exactly by construction.
    """
    if not n.claims_strictly_convex:
        raise ValueError("h_map requires a norm claiming strict convexity")
    d = frame.d
    nu = n.eval(u)
    if abs(nu - d) > tol * max(1.0, d):
        raise ValueError(f"||u|| = {nu} differs from sphere radius {d}")
    snap = 1e-9 * max(1.0, d)
    if n.dist(u, frame.a) <= snap:
        return frame.b
    if n.eval((u[0] + frame.a[0], u[1] + frame.a[1])) <= snap:
        return (-frame.b[0], -frame.b[1])
    res = sphere_intersect(n, (0.0, 0.0), d, u, d, side=frame.orientation, tol=tol)
    return res.point


def pair_sum_gap(frame: OrientedFrame, n: Norm2, u: Vec2,
                 tol: float = CONSTRUCTION_TOL) -> float:
    """|| u + h(u) - (a + b) || for the frame's matched map h."""
    hu = h_map(frame, n, u, tol=tol)
    return n.eval((u[0] + hu[0] - frame.a[0] - frame.b[0],
                   u[1] + hu[1] - frame.a[1] - frame.b[1]))


def find_second_pair(frame: OrientedFrame, n: Norm2, tol: float = CONSTRUCTION_TOL,
                     scan_n: int = 96) -> tuple[Vec2, Vec2]:
    """Second sphere pair whose sum sits at distance d from a + b.

    The gap function vanishes at a and reaches at least 2d at -a, so a root
    of gap = d is bracketed along the arc from a to -a; the first bracketed
    root in positive orientation is returned (other roots may exist).
    Failure to bracket signals a norm that is not strictly convex despite
    its claim.
    """
    d = frame.d
    alpha = math.atan2(frame.a[1], frame.a[0])
    sigma = float(frame.orientation)

    def g_at(t: float) -> float:
        u = kernel.sphere_pt(n.packed, 0.0, 0.0, d, alpha + sigma * t)
        return pair_sum_gap(frame, n, u, tol=tol) - d

    t_lo, g_lo = 0.0, -d
    bracket = None
    for k in range(1, scan_n + 1):
        t = math.pi * k / scan_n
        g = g_at(t)
        if g >= 0.0:
            bracket = (t_lo, g_lo, t, g)
            break
        t_lo, g_lo = t, g
    if bracket is None:
        raise ConvergenceError("gap function never reaches d along the arc; "
                               "norm is not strictly convex")
    a0, f0, b0, f1 = bracket
    last = 0
    tm = 0.5 * (a0 + b0)
    for _ in range(100):
        denom = f1 - f0
        tm = b0 - f1 * (b0 - a0) / denom if denom != 0.0 else 0.5 * (a0 + b0)
        if not (a0 < tm < b0):
            tm = 0.5 * (a0 + b0)
        fm = g_at(tm)
        if abs(fm) <= min(tol, 1e-11 * max(1.0, d)):
            break
        if fm < 0.0:
            if last == -1:
                f1 *= 0.5
            a0, f0, last = tm, fm, -1
        else:
            if last == 1:
                f0 *= 0.5
            b0, f1, last = tm, fm, 1
        if b0 - a0 <= 1e-15:
            break
    else:
        raise ConvergenceError("second-pair bisection did not converge")
    a_tilde = kernel.sphere_pt(n.packed, 0.0, 0.0, d, alpha + sigma * tm)
    b_tilde = h_map(frame, n, a_tilde, tol=tol)
    return a_tilde, b_tilde


def scan_star_condition(n: Norm2, samples: int = 200, tol: float = 1e-6,
                        seed: int = 0) -> StarReport:
    """Randomized probe of the two-equidistant-points property.

    Samples segments (a, b) and side points c, then reconstructs the point d
    with the same distances to a and b on the same side.  For strictly
    convex norms d must coincide with c; the largest ||c - d|| found is
    reported, with the quadruple when it exceeds tol.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    witness = None
    for _ in range(samples):
        a = tuple(rng.uniform(-1.0, 1.0, 2))
        b = tuple(rng.uniform(-1.0, 1.0, 2))
        c = tuple(rng.uniform(-1.5, 1.5, 2))
        try:
            side = side_sign(a, b, c)
        except SidePreconditionError:
            continue
        r1 = n.dist(a, c)
        r2 = n.dist(b, c)
        if r1 < 0.05 or r2 < 0.05:
            continue
        try:
            res = sphere_intersect(n, a, r1, b, r2, side=side, tol=1e-9)
        except (InfeasibleRadiiError, ConvergenceError):
            continue
        d_pt = res.point
        try:
            if side_sign(a, b, d_pt) != side:
                continue
        except SidePreconditionError:
            continue
        gap = n.dist(c, d_pt)
        if gap > worst:
            worst = gap
            witness = (a, b, c, d_pt)
    return StarReport(holds=worst <= tol,
                      witness_quadruple=witness if worst > tol else None,
                      max_violation=worst)
