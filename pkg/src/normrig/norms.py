"""Norms on the real plane and numeric tests of their convexity behavior.

Three norm families are supported:

* ``p_norm(p)`` for p in [1, inf],
* ``polygonal_norm(vertices)`` whose unit sphere is a symmetric convex
  polygon (evaluated through the support functionals of its facets),
* ``blend_norm(base, lam)``, the convex combination
  ``(1-lam)*base + lam*euclidean``, which is strictly convex for lam > 0.

``strict_convexity_scan`` probes the triangle inequality for non-parallel
equality pairs, and ``check_star_condition`` tests the two-equidistant-points
uniqueness property that strictly convex planes satisfy.  Scans are seeded
and give evidence, not certificates.

All values are immutable after construction and every function here is pure,
so concurrent use needs no locking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from normrig import _backend as kernel

Vec2 = tuple[float, float]

CONSTRUCTION_TOL = 1e-9
VERIFY_TOL = 1e-6


class NormError(ValueError):
    """Malformed norm descriptor."""


class SidePreconditionError(ValueError):
    """Degenerate or wrong-side inputs to a same-side test."""


@dataclass(frozen=True)
class Norm2:
    """An evaluatable norm on the plane plus a strict-convexity claim."""

    kind: str
    p: Optional[float] = None
    vertices: Optional[tuple[Vec2, ...]] = None
    base: Optional["Norm2"] = None
    lam: Optional[float] = None
    claims_strictly_convex: bool = False
    packed: object = field(default=None, compare=False, repr=False)

    def eval(self, v: Sequence[float]) -> float:
        return kernel.eval1(self.packed, float(v[0]), float(v[1]))

    def dist(self, a: Sequence[float], b: Sequence[float]) -> float:
        return kernel.eval1(self.packed, float(a[0]) - float(b[0]),
                            float(a[1]) - float(b[1]))

    def unit_point(self, theta: float) -> Vec2:
        """Point of the unit sphere in direction theta."""
        return kernel.sphere_pt(self.packed, 0.0, 0.0, 1.0, theta)

    def descriptor(self) -> dict:
        if self.kind == "p":
            return {"kind": "p", "p": "inf" if math.isinf(self.p) else self.p}
        if self.kind == "polygonal":
            return {"kind": "polygonal", "vertices": [[x, y] for x, y in self.vertices]}
        return {"kind": "blend", "base": self.base.descriptor(), "lambda": self.lam}

    def __str__(self) -> str:
        if self.kind == "p":
            return "p:inf" if math.isinf(self.p) else f"p:{self.p:g}"
        if self.kind == "polygonal":
            return f"polygonal[{len(self.vertices)}]"
        return f"blend({self.base},{self.lam:g})"


def _lower(norm_kind: str, p, vertices, base, lam, weight, acc):
    """Flatten a norm tree into weighted primitive terms."""
    if norm_kind == "blend":
        _lower(base.kind, base.p, base.vertices, base.base, base.lam,
               weight * (1.0 - lam), acc)
        acc.append((weight * lam, kernel.K_TWO, 2.0, 0.5, None))
        return
    if norm_kind == "polygonal":
        acc.append((weight, kernel.K_POLY, 0.0, 0.0, _facets(vertices)))
        return
    if math.isinf(p):
        acc.append((weight, kernel.K_INF, 0.0, 0.0, None))
    elif p == 1.0:
        acc.append((weight, kernel.K_ONE, 1.0, 1.0, None))
    elif p == 2.0:
        acc.append((weight, kernel.K_TWO, 2.0, 0.5, None))
    elif p == 1.5:
        acc.append((weight, kernel.K_3_2, 1.5, 2.0 / 3.0, None))
    elif p == 3.0:
        acc.append((weight, kernel.K_THREE, 3.0, 1.0 / 3.0, None))
    else:
        acc.append((weight, kernel.K_P, p, 1.0 / p, None))


def _pack(kind: str, p, vertices, base, lam):
    acc: list = []
    _lower(kind, p, vertices, base, lam, 1.0, acc)
    weights = [a[0] for a in acc]
    kinds = [a[1] for a in acc]
    pvals = [a[2] for a in acc]
    invps = [a[3] for a in acc]
    poly_off, poly_len, facets = [], [], []
    for a in acc:
        if a[4] is None:
            poly_off.append(0)
            poly_len.append(0)
        else:
            poly_off.append(len(facets))
            poly_len.append(len(a[4]))
            facets.extend(a[4])
    if not facets:
        facets = np.zeros((0, 2))
    return kernel.pack_norm(np.array(weights), np.array(kinds, dtype=np.intc),
                            np.array(pvals), np.array(invps),
                            np.array(poly_off, dtype=np.intc),
                            np.array(poly_len, dtype=np.intc),
                            np.asarray(facets, dtype=np.float64))


def _facets(vertices: tuple[Vec2, ...]) -> list[tuple[float, float]]:
    """Support functionals of the polygon facets: one (a, b) per edge with
    a*vx + b*vy = 1 on that edge."""
    verts = list(vertices)
    out = []
    for i in range(len(verts)):
        xi, yi = verts[i]
        xj, yj = verts[(i + 1) % len(verts)]
        det = xi * yj - yi * xj
        out.append(((yj - yi) / det, (xi - xj) / det))
    return out


def _validate_polygon(vertices) -> tuple[Vec2, ...]:
    verts = [(float(x), float(y)) for x, y in vertices]
    if len(verts) < 4:
        raise NormError("polygonal norm needs at least 4 vertices")
    scale = max(max(abs(x), abs(y)) for x, y in verts)
    if scale <= 0.0:
        raise NormError("degenerate polygon")
    tol = 1e-9 * scale
    verts.sort(key=lambda v: math.atan2(v[1], v[0]))
    n = len(verts)
    for i in range(n):
        xi, yi = verts[i]
        xj, yj = verts[(i + 1) % n]
        # origin strictly inside and vertices in strictly convex position
        if xi * yj - yi * xj <= tol:
            raise NormError("polygon vertices must be in strictly convex "
                            "position around the origin")
    if n % 2 != 0:
        raise NormError("polygon must be symmetric about the origin")
    for i in range(n):
        xi, yi = verts[i]
        xk, yk = verts[(i + n // 2) % n]
        if abs(xi + xk) > tol or abs(yi + yk) > tol:
            raise NormError("polygon must be symmetric about the origin")
    return tuple(verts)


def p_norm(p: float) -> Norm2:
    """The p-norm; strictly convex exactly for p in (1, inf)."""
    p = float(p)
    if math.isnan(p) or p < 1.0:
        raise NormError(f"p must be >= 1 or inf, got {p}")
    claims = not math.isinf(p) and p > 1.0
    return Norm2(kind="p", p=p, claims_strictly_convex=claims,
                 packed=_pack("p", p, None, None, None))


def polygonal_norm(vertices: Sequence[Sequence[float]]) -> Norm2:
    """Norm whose unit sphere is the given symmetric convex polygon."""
    verts = _validate_polygon(vertices)
    return Norm2(kind="polygonal", vertices=verts, claims_strictly_convex=False,
                 packed=_pack("polygonal", None, verts, None, None))


def blend_norm(base: Norm2, lam: float) -> Norm2:
    """(1-lam)*base + lam*euclidean; strictly convex for lam > 0."""
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise NormError(f"lambda must be in [0, 1], got {lam}")
    return Norm2(kind="blend", base=base, lam=lam,
                 claims_strictly_convex=lam > 0.0,
                 packed=_pack("blend", None, None, base, lam))


def strictify(n: Norm2, lam: float) -> Norm2:
    """Strictly convex approximation of n: blend with the euclidean norm.

    On any bounded set the approximation differs from n by at most
    lam * (n(v) + euclid(v)) pointwise.
    """
    if not 0.0 < lam <= 1.0:
        raise NormError(f"strictify needs 0 < lambda <= 1, got {lam}")
    return blend_norm(n, lam)


def construct_norm(spec) -> Norm2:
    """Build a norm from a descriptor dict (or pass through a Norm2).

    Descriptors: {"kind":"p","p":2.0} (p may be the string "inf"),
    {"kind":"polygonal","vertices":[[x,y],...]},
    {"kind":"blend","base":{...},"lambda":0.1}.
    """
    if isinstance(spec, Norm2):
        return spec
    if not isinstance(spec, dict) or "kind" not in spec:
        raise NormError(f"bad norm descriptor: {spec!r}")
    kind = spec["kind"]
    if kind == "p":
        raw = spec.get("p")
        if isinstance(raw, str):
            if raw.lower() not in ("inf", "infinity"):
                raise NormError(f"bad p value: {raw!r}")
            return p_norm(math.inf)
        return p_norm(float(raw))
    if kind == "polygonal":
        return polygonal_norm(spec["vertices"])
    if kind == "blend":
        return blend_norm(construct_norm(spec["base"]), float(spec["lambda"]))
    raise NormError(f"unknown norm kind: {kind!r}")


@dataclass(frozen=True)
class ScanReport:
    """Result of a randomized strict-convexity scan."""

    is_consistent: bool
    worst_pair: Optional[tuple[Vec2, Vec2]]
    min_slack: float
    samples: int


@dataclass(frozen=True)
class StarReport:
    """Result of a randomized two-equidistant-points scan."""

    holds: bool
    witness_quadruple: Optional[tuple[Vec2, Vec2, Vec2, Vec2]]
    max_violation: float


def strict_convexity_scan(n: Norm2, samples: int, tol: float = 1e-9,
                          seed: int = 0, min_separation: float = 1e-3) -> ScanReport:
    """Search sampled unit-sphere pairs for non-parallel triangle equality.

    A pair (a, b) with ||a+b|| >= ||a|| + ||b|| - tol and ||a-b|| above
    min_separation contradicts strict convexity.  min_separation screens out
    nearly-parallel pairs whose slack falls below tol for purely quadratic
    reasons.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    thetas = rng.uniform(0.0, 2.0 * math.pi, size=(samples, 2))
    worst = None
    min_slack = math.inf
    consistent = True
    for t1, t2 in thetas:
        a = n.unit_point(t1)
        b = n.unit_point(t2)
        if n.dist(a, b) < min_separation:
            continue
        slack = 2.0 - n.eval((a[0] + b[0], a[1] + b[1]))
        if slack < min_slack:
            min_slack = slack
            worst = (a, b)
        if slack <= tol:
            consistent = False
    return ScanReport(is_consistent=consistent, worst_pair=worst,
                      min_slack=min_slack, samples=samples)


def side_sign(a: Vec2, b: Vec2, p: Vec2, degenerate_tol: float = 1e-12) -> int:
    """Sign of det(b - a, p - a); raises when p is collinear with a, b."""
    det = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
    scale = max(abs(b[0] - a[0]), abs(b[1] - a[1]), 1.0)
    if abs(det) <= degenerate_tol * scale:
        raise SidePreconditionError(f"point {p} is collinear with {a}, {b}")
    return 1 if det > 0.0 else -1


def check_star_condition(n: Norm2, a: Vec2, b: Vec2, c: Vec2, d: Vec2,
                         tol: float = VERIFY_TOL) -> bool:
    """Two-equidistant-points test for points on one side of line(a, b).

    Returns True when the quadruple carries no violation: either the two
    distance equalities fail, or they hold and c coincides with d within tol.
    Raises SidePreconditionError when c or d lies on the line or they sit on
    opposite sides.
    """
    if a == b:
        raise SidePreconditionError("a and b must be distinct")
    sc = side_sign(a, b, c)
    sd = side_sign(a, b, d)
    if sc != sd:
        raise SidePreconditionError("c and d must lie on the same side of line(a, b)")
    if abs(n.dist(a, c) - n.dist(a, d)) > tol:
        return True
    if abs(n.dist(b, c) - n.dist(b, d)) > tol:
        return True
    return bool(n.dist(c, d) <= tol)
