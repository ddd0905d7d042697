"""SVG snapshots of a planning tree over its environment."""
from __future__ import annotations

import math
from xml.sax.saxutils import quoteattr

import numpy as np

SCALE = 300.0  # pixels per meter
MARGIN = 10.0


def _fmt(v):
    return f"{v:.2f}"


def _triangle(x, y, theta, size):
    pts = [(size, 0.0), (-0.6 * size, 0.5 * size), (-0.6 * size, -0.5 * size)]
    c, s = math.cos(theta), math.sin(theta)
    return [(x + c * px - s * py, y + s * px + c * py) for px, py in pts]


def render_tree(result, env, query=None):
    """Return an SVG document string; identical inputs give identical bytes.

    Obstacles are black, tree edges green, the solution path orange, the
    start a black triangle and the goal a red one.
    """
    lo, hi = env.lower_state[:2], env.upper_state[:2]
    w = (hi[0] - lo[0]) * SCALE + 2 * MARGIN
    h = (hi[1] - lo[1]) * SCALE + 2 * MARGIN

    def px(p):
        return MARGIN + (p[0] - lo[0]) * SCALE, MARGIN + (hi[1] - p[1]) * SCALE

    def poly(points):
        return " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in map(px, points))

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width={quoteattr(_fmt(w))} '
        f'height={quoteattr(_fmt(h))} viewBox="0 0 {_fmt(w)} {_fmt(h)}">',
        f'<rect x="{_fmt(MARGIN)}" y="{_fmt(MARGIN)}" width="{_fmt(w - 2 * MARGIN)}" '
        f'height="{_fmt(h - 2 * MARGIN)}" fill="white" stroke="gray"/>',
    ]
    out.append('<g id="obstacles" fill="black">')
    for ob in env.obstacles:
        out.append(f'<polygon points="{poly(ob.corners())}"/>')
    out.append("</g>")

    tree = result.tree
    states = tree.states
    out.append('<g id="tree" stroke="green" stroke-width="0.8" fill="none">')
    for i in range(1, len(tree)):
        (x1, y1), (x2, y2) = px(states[tree.parents[i]]), px(states[i])
        out.append(f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}"/>')
    out.append("</g>")

    if result.path:
        out.append(f'<polyline id="path" stroke="orange" stroke-width="2" fill="none" '
                   f'points="{poly(states[result.path])}"/>')

    size = 0.05
    start = states[0] if query is None else query.x_init
    out.append(f'<polygon id="start" fill="black" '
               f'points="{poly(_triangle(start[0], start[1], start[2], size))}"/>')
    if query is not None:
        g = np.asarray(query.x_goal)
        out.append(f'<polygon id="goal" fill="red" '
                   f'points="{poly(_triangle(g[0], g[1], g[2], size))}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def save_svg(path, result, env, query=None):
    with open(path, "w") as f:
        f.write(render_tree(result, env, query))
