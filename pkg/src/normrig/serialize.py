"""JSON persistence for witness sets and verification reports.

Floats are written with 17 significant digits so that write -> read ->
write is byte-identical; key order is fixed by construction.  Unknown keys
in input files are rejected.
"""

from __future__ import annotations

import json
import math
from typing import Any

from normrig.norms import construct_norm
from normrig.verify import Placement, VerifyReport
from normrig.witness import WitnessSet


class SchemaError(ValueError):
    """Input file does not match the expected schema."""


def _fmt_float(v: float) -> str:
    if math.isinf(v) or math.isnan(v):
        raise SchemaError(f"non-finite number in output: {v}")
    out = format(float(v), ".17g")
    # keep integral floats recognizably floats for a stable round trip
    if "." not in out and "e" not in out and "E" not in out:
        out += ".0"
    return out


def dumps(obj: Any, indent: int = 0) -> str:
    """Deterministic JSON with 17-significant-digit floats."""
    pieces: list[str] = []
    _emit(obj, pieces)
    return "".join(pieces)


def _emit(obj: Any, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(_fmt_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        first = True
        for k, v in obj.items():
            if not isinstance(k, str):
                raise SchemaError(f"non-string key: {k!r}")
            if not first:
                out.append(",")
            first = False
            out.append(json.dumps(k))
            out.append(":")
            _emit(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(",")
            _emit(v, out)
        out.append("]")
    else:
        raise SchemaError(f"unserializable value: {obj!r}")


def witness_to_jsonable(w: WitnessSet) -> dict:
    return {
        "rho": float(w.rho),
        "source_norm": w.source_norm.descriptor(),
        "points": [{"id": i, "label": w.labels[i],
                    "xy": [float(p[0]), float(p[1])]}
                   for i, p in enumerate(w.points)],
        "edges": [[int(i), int(j)] for i, j in w.edges],
        "anchors": {"x": int(w.anchor_x), "y": int(w.anchor_y)},
        "target_distance": float(w.target_distance),
        "approximate": bool(w.approximate),
        "eps": None if w.eps is None else float(w.eps),
        "trace": w.trace,
    }


_WITNESS_KEYS = {"rho", "source_norm", "points", "edges", "anchors",
                 "target_distance", "approximate", "eps", "trace"}
_POINT_KEYS = {"id", "label", "xy"}


def witness_from_jsonable(data: dict) -> WitnessSet:
    if not isinstance(data, dict):
        raise SchemaError("witness file must hold a JSON object")
    unknown = set(data) - _WITNESS_KEYS
    if unknown:
        raise SchemaError(f"unknown keys in witness file: {sorted(unknown)}")
    missing = _WITNESS_KEYS - set(data)
    if missing:
        raise SchemaError(f"missing keys in witness file: {sorted(missing)}")
    try:
        norm = construct_norm(data["source_norm"])
        pts_raw = data["points"]
        points: list[tuple[float, float]] = []
        labels: list[str] = []
        for rec in pts_raw:
            unknown = set(rec) - _POINT_KEYS
            if unknown:
                raise SchemaError(f"unknown point keys: {sorted(unknown)}")
            if int(rec["id"]) != len(points):
                raise SchemaError("point ids must be consecutive from 0")
            points.append((float(rec["xy"][0]), float(rec["xy"][1])))
            labels.append(str(rec["label"]))
        edges = [(int(i), int(j)) for i, j in data["edges"]]
        for i, j in edges:
            if not (0 <= i < len(points) and 0 <= j < len(points)) or i == j:
                raise SchemaError(f"bad edge [{i}, {j}]")
        anchors = data["anchors"]
        if set(anchors) != {"x", "y"}:
            raise SchemaError("anchors must hold exactly the keys x and y")
        eps = data["eps"]
        return WitnessSet(points=points, labels=labels, rho=float(data["rho"]),
                          edges=edges, anchor_x=int(anchors["x"]),
                          anchor_y=int(anchors["y"]),
                          target_distance=float(data["target_distance"]),
                          source_norm=norm, trace=data["trace"],
                          approximate=bool(data["approximate"]),
                          eps=None if eps is None else float(eps))
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"malformed witness file: {exc}") from exc


def save_witness(w: WitnessSet, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(witness_to_jsonable(w)))
        fh.write("\n")


def load_witness(path: str) -> WitnessSet:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc
    return witness_from_jsonable(data)


def _placement_to_jsonable(p: Placement) -> dict:
    return {
        "images": [[float(x), float(y)] for x, y in p.images],
        "max_edge_residual": float(p.max_edge_residual),
        "anchor_gap": float(p.anchor_gap),
        "injective": bool(p.injective),
    }


def report_to_jsonable(rep: VerifyReport) -> dict:
    return {
        "mode": rep.mode,
        "target_norm": rep.target_norm,
        "tol": float(rep.tol),
        "placements_found": rep.placements_found,
        "injective_found": rep.injective_found,
        "non_injective_found": rep.non_injective_found,
        "violations_found": rep.violations_found,
        "violations": [_placement_to_jsonable(p) for p in rep.violations],
        "non_injective_examples": [_placement_to_jsonable(p)
                                   for p in rep.non_injective_examples],
        "max_abs_anchor_gap_injective": rep.max_abs_anchor_gap_injective,
        "max_abs_anchor_gap_all": rep.max_abs_anchor_gap_all,
        "coincidence_counts": [[int(i), int(j), int(c)]
                               for (i, j), c in sorted(rep.coincidence_counts.items())],
        "search_budget_used": rep.search_budget_used,
        "budget_exhausted": rep.budget_exhausted,
    }


def save_report(rep: VerifyReport, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(report_to_jsonable(rep)))
        fh.write("\n")
