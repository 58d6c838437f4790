"""Self-contained deterministic SVG renderings.

Hand-rolled rather than delegated to a plotting stack so the output is
byte-stable across runs and structurally diffable: no timestamps, no
generated ids, fixed float formatting.
"""

import numpy as np

from .signature import N_ANGLES


def _f(x):
    return f"{x:.3f}"


def _svg(width, height, body):
    head = (
        '<svg xmlns="http://www.w3.org/2000/svg" '
        f'width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    )
    return head + "\n" + "\n".join(body) + "\n</svg>\n"


def signature_svg(values, peaks=(), valleys=(), title=""):
    """Line plot of a 360-sample signature, angle on x, ratio on y.

    Detected peaks are marked with circles (class "peak"), valleys with
    squares (class "valley").
    """
    values = np.asarray(values, dtype=np.float64)
    width, height = 760, 420
    left, right, top, bottom = 60, 20, 30, 50
    pw, ph = width - left - right, height - top - bottom

    def sx(theta):
        return left + pw * theta / (N_ANGLES - 1)

    def sy(v):
        return top + ph * (1.0 - v)

    body = [
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" '
        'fill="none" stroke="#888" stroke-width="1"/>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = sy(frac)
        body.append(
            f'<line x1="{left}" y1="{_f(y)}" x2="{left + pw}" y2="{_f(y)}" '
            'stroke="#ddd" stroke-width="1"/>'
        )
        body.append(
            f'<text x="{left - 8}" y="{_f(y + 4)}" text-anchor="end" '
            f'font-size="12" fill="#333">{frac:g}</text>'
        )
    for theta in (0, 90, 180, 270, 359):
        x = sx(theta)
        body.append(
            f'<line x1="{_f(x)}" y1="{top}" x2="{_f(x)}" y2="{top + ph}" '
            'stroke="#eee" stroke-width="1"/>'
        )
        body.append(
            f'<text x="{_f(x)}" y="{height - 28}" text-anchor="middle" '
            f'font-size="12" fill="#333">{theta}</text>'
        )
    pts = " ".join(f"{_f(sx(t))},{_f(sy(values[t]))}" for t in range(N_ANGLES))
    body.append(
        f'<polyline points="{pts}" fill="none" stroke="#b2382b" stroke-width="1.5"/>'
    )
    for e in peaks:
        body.append(
            f'<circle class="peak" cx="{_f(sx(e.angle))}" cy="{_f(sy(e.value))}" '
            'r="4" fill="none" stroke="#1f5fa8" stroke-width="1.5"/>'
        )
    for e in valleys:
        x, y = sx(e.angle), sy(e.value)
        body.append(
            f'<rect class="valley" x="{_f(x - 3.5)}" y="{_f(y - 3.5)}" '
            'width="7" height="7" fill="none" stroke="#3a7d2c" stroke-width="1.5"/>'
        )
    if title:
        body.append(
            f'<text x="{left}" y="18" font-size="13" fill="#000">{title}</text>'
        )
    body.append(
        f'<text x="{left + pw / 2}" y="{height - 8}" text-anchor="middle" '
        'font-size="12" fill="#000">rotation angle (degrees)</text>'
    )
    return _svg(width, height, body)


def scene_sketch_svg(graph, title="scene (top view)"):
    """Top-down sketch: segment extents, furniture boxes, pattern marks."""
    xs, ys = [], []
    for node in graph.nodes:
        xs.append(float(node.centroid[0]))
        ys.append(float(node.centroid[1]))
        if node.kind == "FURNITURE":
            hx, hy = node.attributes["half_extents"][:2]
            xs += [node.centroid[0] - hx, node.centroid[0] + hx]
            ys += [node.centroid[1] - hy, node.centroid[1] + hy]
    if not xs:
        return _svg(200, 200, ["<text x='20' y='20'>empty scene</text>"])
    pad = 1.0
    x0, x1 = min(xs) - pad, max(xs) + pad
    y0, y1 = min(ys) - pad, max(ys) + pad
    width, height = 640, 640
    sx = width / (x1 - x0)
    sy = height / (y1 - y0)
    s = min(sx, sy)

    def px(x):
        return (x - x0) * s

    def py(y):
        return height - (y - y0) * s

    colors = {
        "WALL": "#5b5b5b",
        "FLOOR": "#a87f32",
        "CEILING": "#32a8a0",
        "OTHER": "#999999",
        "PATTERN": "#b2382b",
        "FURNITURE": "#1f5fa8",
    }
    body = [f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>']
    for edge in graph.edges:
        na, nb = graph.node(edge.a), graph.node(edge.b)
        body.append(
            f'<line class="edge-{edge.relation.lower()}" '
            f'x1="{_f(px(na.centroid[0]))}" y1="{_f(py(na.centroid[1]))}" '
            f'x2="{_f(px(nb.centroid[0]))}" y2="{_f(py(nb.centroid[1]))}" '
            'stroke="#cccccc" stroke-width="1" stroke-dasharray="4 3"/>'
        )
    for node in graph.nodes:
        color = colors.get(node.kind, "#000")
        cx, cy = px(node.centroid[0]), py(node.centroid[1])
        if node.kind == "FURNITURE":
            hx, hy = node.attributes["half_extents"][:2]
            body.append(
                f'<rect class="furniture" x="{_f(px(node.centroid[0] - hx))}" '
                f'y="{_f(py(node.centroid[1] + hy))}" '
                f'width="{_f(2 * hx * s)}" height="{_f(2 * hy * s)}" '
                f'fill="none" stroke="{color}" stroke-width="2"/>'
            )
        elif node.kind == "PATTERN":
            body.append(
                f'<circle class="pattern" cx="{_f(cx)}" cy="{_f(cy)}" r="6" '
                f'fill="{color}"/>'
            )
        else:
            body.append(
                f'<circle class="surface" cx="{_f(cx)}" cy="{_f(cy)}" r="4" '
                f'fill="{color}"/>'
            )
        body.append(
            f'<text x="{_f(cx + 8)}" y="{_f(cy - 6)}" font-size="11" '
            f'fill="{color}">{node.id}</text>'
        )
    body.append(f'<text x="12" y="18" font-size="13" fill="#000">{title}</text>')
    return _svg(width, height, body)
