"""SVG serialization for glyphs (M/C/L/Z path subset)."""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET

import numpy as np

from .errors import UnsupportedSvgFeature
from .glyph import BezierPath, Glyph, line_to_cubic

SVG_NS = "http://www.w3.org/2000/svg"

_TOKEN = re.compile(r"([MmLlHhVvCcZzSsQqTtAa])|([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)")
_TRANSFORM = re.compile(r"(\w+)\s*\(([^)]*)\)")


def _fmt(v: float) -> str:
    return repr(float(v))


def path_data(glyph: Glyph) -> str:
    parts = []
    for path in glyph.paths:
        seg = path.segments
        parts.append(f"M {_fmt(seg[0, 0, 0])} {_fmt(seg[0, 0, 1])}")
        for s in seg:
            parts.append("C " + " ".join(f"{_fmt(x)} {_fmt(y)}" for x, y in s[1:]))
        parts.append("Z")
    return " ".join(parts)


def to_svg(glyph: Glyph, width: float = 1.0, height: float = 1.0, pixels: int = 256) -> str:
    """Serialize a glyph; ``width``/``height`` give the canvas in glyph units."""
    px_w = int(round(pixels * width / height))
    return (
        f'<svg xmlns="{SVG_NS}" viewBox="0 0 {_fmt(width)} {_fmt(height)}" '
        f'width="{px_w}" height="{pixels}">\n'
        f'  <rect x="0" y="0" width="{_fmt(width)}" height="{_fmt(height)}" fill="white"/>\n'
        f'  <path d="{path_data(glyph)}" fill="black" fill-rule="nonzero"/>\n'
        "</svg>\n"
    )


def _parse_transform(text: str | None) -> np.ndarray:
    m = np.eye(3)
    if not text:
        return m
    for name, args in _TRANSFORM.findall(text):
        vals = [float(v) for v in re.split(r"[\s,]+", args.strip()) if v]
        if name == "translate":
            tx, ty = vals[0], vals[1] if len(vals) > 1 else 0.0
            t = np.array([[1, 0, tx], [0, 1, ty], [0, 0, 1.0]])
        elif name == "scale":
            sx = vals[0]
            sy = vals[1] if len(vals) > 1 else sx
            t = np.diag([sx, sy, 1.0])
        else:
            raise UnsupportedSvgFeature(f"transform '{name}' is not supported")
        m = m @ t
    return m


def _parse_d(d: str) -> list:
    tokens = [(c, n) for c, n in _TOKEN.findall(d)]
    paths = []
    segs: list = []
    start = cur = None
    i = 0
    cmd = None

    def nums(k):
        nonlocal i
        out = []
        for _ in range(k):
            if i >= len(tokens) or tokens[i][0]:
                raise UnsupportedSvgFeature(f"malformed path data near token {i}")
            out.append(float(tokens[i][1]))
            i += 1
        return out

    def close():
        nonlocal segs, cur
        if segs:
            if np.max(np.abs(cur - start)) > 0:
                segs.append(line_to_cubic(cur, start))
            else:
                segs[-1][3] = start
            paths.append(BezierPath.from_segments(np.array(segs)))
        segs = []
        cur = start

    while i < len(tokens):
        c, _ = tokens[i]
        if c:
            cmd = c
            i += 1
            if cmd in "Zz":
                close()
                continue
        elif cmd is None:
            raise UnsupportedSvgFeature("path data must start with a command")
        if cmd in "AaQqSsTt":
            raise UnsupportedSvgFeature(f"path command '{cmd}' is not supported")
        rel = cmd.islower() and cur is not None
        base = cur if rel else np.zeros(2)
        if cmd in "Mm":
            if segs:
                close()
            p = np.array(nums(2)) + base
            start = cur = p
            cmd = "l" if cmd == "m" else "L"
        elif cmd in "Ll":
            p = np.array(nums(2)) + base
            segs.append(line_to_cubic(cur, p))
            cur = p
        elif cmd in "Hh":
            x = nums(1)[0] + (cur[0] if rel else 0.0)
            p = np.array([x, cur[1]])
            segs.append(line_to_cubic(cur, p))
            cur = p
        elif cmd in "Vv":
            y = nums(1)[0] + (cur[1] if rel else 0.0)
            p = np.array([cur[0], y])
            segs.append(line_to_cubic(cur, p))
            cur = p
        elif cmd in "Cc":
            v = np.array(nums(6)).reshape(3, 2) + base
            segs.append(np.vstack([cur, v]))
            cur = v[2]
        else:
            raise UnsupportedSvgFeature(f"path command '{cmd}' is not supported")
    if segs:
        close()
    return paths


def from_svg(text: str) -> Glyph:
    """Parse an SVG document produced by :func:`to_svg` (or any M/C/L/Z subset)."""
    root = ET.fromstring(text)
    vb = root.get("viewBox")
    if vb:
        minx, miny, _, h = (float(v) for v in re.split(r"[\s,]+", vb.strip()))
        norm = np.array([[1 / h, 0, -minx / h], [0, 1 / h, -miny / h], [0, 0, 1.0]])
    else:
        norm = np.eye(3)
    paths = []

    def walk(el, m):
        tag = el.tag.split("}")[-1]
        if tag in ("linearGradient", "radialGradient", "pattern", "image", "text", "use"):
            raise UnsupportedSvgFeature(f"<{tag}> is not supported")
        if tag in ("svg", "g", "defs", "title", "desc", "metadata"):
            if tag == "g":
                m = m @ _parse_transform(el.get("transform"))
            for child in el:
                walk(child, m)
            return
        if tag == "rect":
            # background rectangles written by to_svg are decoration
            if el.get("fill", "").lower() in ("white", "#fff", "#ffffff", "none"):
                return
            raise UnsupportedSvgFeature("<rect> with ink fill is not supported")
        if tag != "path":
            raise UnsupportedSvgFeature(f"<{tag}> is not supported")
        if "url(" in (el.get("fill") or "") or "url(" in (el.get("style") or ""):
            raise UnsupportedSvgFeature("paint servers (gradients/patterns) are not supported")
        if el.get("fill-rule", "nonzero") != "nonzero":
            raise UnsupportedSvgFeature("only fill-rule nonzero is supported")
        m = m @ _parse_transform(el.get("transform"))
        for p in _parse_d(el.get("d", "")):
            pts = p.points @ m[:2, :2].T + m[:2, 2]
            paths.append(BezierPath(pts))

    walk(root, norm)
    if not paths:
        raise UnsupportedSvgFeature("document contains no path data")
    return Glyph(tuple(paths))
