"""SVG rendering of witness sets: one line per unit edge, one circle per
point, anchors highlighted, plus a small legend of the construction rules."""

from __future__ import annotations

from normrig.witness import WitnessSet

SCALE = 100.0       # drawing units per rho
POINT_R = 5.0
PAD = 40.0


def _trace_rules(trace: dict) -> list[str]:
    rules: list[str] = []

    def walk(node):
        if not isinstance(node, dict):
            return
        rule = node.get("rule")
        if rule and rule not in rules:
            rules.append(rule)
        for child in node.get("children", []):
            walk(child)

    walk(trace)
    return rules


def witness_svg(w: WitnessSet) -> str:
    s = SCALE / w.rho if w.rho > 0 else SCALE
    xs = [p[0] * s for p in w.points]
    ys = [-p[1] * s for p in w.points]  # flip so +y points up
    min_x, max_x = min(xs), max(xs)
    min_y, max_y = min(ys), max(ys)
    width = (max_x - min_x) + 2 * PAD
    height = (max_y - min_y) + 2 * PAD + 20.0
    ox = PAD - min_x
    oy = PAD - min_y

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.1f}" '
        f'height="{height:.1f}" viewBox="0 0 {width:.1f} {height:.1f}">',
        f'<rect x="0" y="0" width="{width:.1f}" height="{height:.1f}" fill="white"/>',
    ]
    for i, j in w.edges:
        out.append(
            f'<line x1="{xs[i] + ox:.3f}" y1="{ys[i] + oy:.3f}" '
            f'x2="{xs[j] + ox:.3f}" y2="{ys[j] + oy:.3f}" '
            'stroke="#555" stroke-width="1.5"/>')
    for i, (px, py) in enumerate(zip(xs, ys)):
        anchor = i in (w.anchor_x, w.anchor_y)
        fill = "#c0392b" if anchor else "#2c3e50"
        extra = ' class="anchor"' if anchor else ""
        out.append(
            f'<circle cx="{px + ox:.3f}" cy="{py + oy:.3f}" r="{POINT_R:.1f}" '
            f'fill="{fill}"{extra}/>')
        out.append(
            f'<text x="{px + ox + 7:.3f}" y="{py + oy - 7:.3f}" '
            f'font-size="11" font-family="sans-serif">{w.labels[i]}</text>')
    legend = "rules: " + ", ".join(_trace_rules(w.trace))
    out.append(f'<text x="{PAD:.1f}" y="{height - 10:.1f}" font-size="11" '
               f'font-family="sans-serif" fill="#888">{legend}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def save_svg(w: WitnessSet, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(witness_svg(w))
