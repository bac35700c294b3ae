"""Deterministic SVG output for interfaces, curves, site grids and fields.

Coordinates are written with a fixed number of significant digits, so the
same object always renders to the same bytes.  The y axis is flipped so that
x2 points up.
"""

from pathlib import Path
from typing import List, Optional

import numpy as np

from .curve_core import CompleteCurve
from .errors import ConfigError
from .grain_field import GrainField
from .interface_builder import Interface
from .percolation import CompatibleCurve, SiteGrid

SIZE = 800.0
MAX_POINTS = 4000


def _num(v: float) -> str:
    return format(float(v), ".6g")


class _Canvas:
    def __init__(self, xlo, xhi, ylo, yhi):
        w = max(xhi - xlo, 1e-300)
        h = max(yhi - ylo, 1e-300)
        self.scale = SIZE / max(w, h)
        self.xlo, self.yhi = xlo, yhi
        self.width = w * self.scale
        self.height = h * self.scale
        self.layers: List[str] = []

    def X(self, x):
        return (np.asarray(x, float) - self.xlo) * self.scale

    def Y(self, y):
        return (self.yhi - np.asarray(y, float)) * self.scale

    def layer(self, name: str, items: List[str]):
        body = "".join(f"    {it}\n" for it in items)
        self.layers.append(f'  <g id="{name}">\n{body}  </g>\n')

    def line(self, x0, y0, x1, y1, cls):
        return (f'<line class="{cls}" x1="{_num(self.X(x0))}" y1="{_num(self.Y(y0))}" '
                f'x2="{_num(self.X(x1))}" y2="{_num(self.Y(y1))}"/>')

    def polyline(self, P: np.ndarray, cls):
        P = np.asarray(P, float)
        if len(P) > MAX_POINTS:
            idx = np.unique(np.linspace(0, len(P) - 1, MAX_POINTS).round().astype(int))
            P = P[idx]
        pts = " ".join(f"{_num(x)},{_num(y)}" for x, y in zip(self.X(P[:, 0]), self.Y(P[:, 1])))
        return f'<polyline class="{cls}" points="{pts}"/>'

    def svg(self) -> str:
        style = ("line, polyline { fill: none; stroke-width: 1 } "
                 ".interface { stroke: #1f4e9c } .lambda { stroke: #999; stroke-dasharray: 4 3 } "
                 ".curve { stroke: #b03030 } circle { fill: #c8a24a } .closed { fill: #555 }")
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{_num(self.width)}" '
                f'height="{_num(self.height)}" viewBox="0 0 {_num(self.width)} {_num(self.height)}">\n'
                f"  <style>{style}</style>\n" + "".join(self.layers) + "</svg>\n")


def _grains(cv: _Canvas, centers: np.ndarray, R: float) -> List[str]:
    r = _num(max(R * cv.scale, 0.5))
    return [f'<circle cx="{_num(cv.X(x))}" cy="{_num(cv.Y(y))}" r="{r}"/>' for x, y in centers]


def _interface_svg(g: Interface, field: Optional[GrainField]) -> str:
    L = g.params.L
    cv = _Canvas(0.0, L, 0.0, L)
    centers = field.centers if field is not None else g.centers[sorted({i for c in g.clusters for i in c})]
    cv.layer("grains", _grains(cv, centers, g.params.R))
    if g.is_horizontal():
        items = [cv.line(0.0, g.lam, L, g.lam, "interface")]
    else:
        items = [cv.polyline(np.column_stack([c.x1, c.x2]), "interface") for c in g.components]
    cv.layer("interface", items)
    cv.layer("lambda", [cv.line(0.0, g.lam, L, g.lam, "lambda")])
    return cv.svg()


def _field_svg(f: GrainField) -> str:
    L = f.params.L
    cv = _Canvas(0.0, L, 0.0, L)
    cv.layer("grains", _grains(cv, f.centers, f.params.R))
    return cv.svg()


def _complete_curve_svg(c: CompleteCurve) -> str:
    x, y = c.x1, c.x2bar
    pad = 0.05 * max(np.ptp(x), np.ptp(y), 1e-12)
    cv = _Canvas(x.min() - pad, x.max() + pad, y.min() - pad, y.max() + pad)
    cv.layer("interface", [cv.polyline(np.column_stack([x, y]), "curve")])
    cv.layer("lambda", [cv.line(x.min() - pad, 0.0, x.max() + pad, 0.0, "lambda")])
    return cv.svg()


def _site_grid_svg(g: SiteGrid) -> str:
    x0, y0 = g.origin
    cv = _Canvas(x0, x0 + g.M, y0, y0 + g.M)
    items = []
    side = _num(cv.scale)
    for i, j in np.argwhere(~g.states):
        items.append(f'<rect class="closed" x="{_num(cv.X(x0 + i))}" y="{_num(cv.Y(y0 + j + 1))}" '
                     f'width="{side}" height="{side}"/>')
    cv.layer("sites", items)
    return cv.svg()


def _compatible_curve_svg(c: CompatibleCurve) -> str:
    cv = _Canvas(0.0, 1.0, 0.0, 1.0)
    cv.layer("interface", [cv.polyline(c.samples, "curve")])
    cv.layer("lambda", [cv.line(0.0, c.V, 1.0, c.V, "lambda")])
    return cv.svg()


def svg_text(obj, field: Optional[GrainField] = None) -> str:
    if isinstance(obj, Interface):
        return _interface_svg(obj, field)
    if isinstance(obj, GrainField):
        return _field_svg(obj)
    if isinstance(obj, CompleteCurve):
        return _complete_curve_svg(obj)
    if isinstance(obj, SiteGrid):
        return _site_grid_svg(obj)
    if isinstance(obj, CompatibleCurve):
        return _compatible_curve_svg(obj)
    raise TypeError(f"cannot render {type(obj).__name__}")


def render_svg(obj, path, field: Optional[GrainField] = None) -> Path:
    p = Path(path)
    try:
        p.write_text(svg_text(obj, field))
    except OSError as e:
        raise ConfigError(f"cannot write {p}: {e}") from None
    return p
