"""
============================================================================
SVG BUILDER
============================================================================
SVG writer kecil untuk comparison graphs. Output deterministic: semua
angka di-format dengan presisi tetap, urutan elements = urutan points.
============================================================================
"""

from typing import Dict, Optional, Tuple
from xml.sax.saxutils import escape

from app.schemas.analysis import ComparisonGraph, GraphPoint
from app.schemas.filter import FilterFlag

SIZE = 420
MARGIN = 56
MARKER = 4.5

SUBTYPE_COLORS: Dict[str, str] = {"A": "#1f4e9c", "B": "#b22222"}
FLAG_COLORS: Dict[FilterFlag, str] = {FilterFlag.WARN: "#ff8c00", FilterFlag.FAIL: "#d00000"}


class SVG:
    def __init__(self) -> None:
        self.svg = ""

    def header(self, width: int, height: int) -> None:
        self.svg += (
            '<?xml version="1.0" encoding="UTF-8" standalone="no"?>\n'
            f'<svg version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" '
            'xmlns="http://www.w3.org/2000/svg">\n'
        )

    def comment(self, text: str) -> None:
        self.svg += f"<!-- {escape(text).replace('--', '- -')} -->\n"

    def group_start(self, attr: Dict[str, str]) -> None:
        g_attr = [f'{key}="{escape(value)}"' for key, value in attr.items() if key in ("id", "class")]
        self.svg += f'<g {" ".join(g_attr)}>\n'
        if "title" in attr:
            self.svg += f"<title>{escape(attr['title'])}</title>\n"

    def group_end(self) -> None:
        self.svg += "</g>\n"

    def line(self, x1: float, y1: float, x2: float, y2: float, stroke: str, extra: str = "") -> None:
        self.svg += f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" stroke="{stroke}" {extra}/>\n'

    def circle(self, cx: float, cy: float, r: float, fill: str, extra: str = "") -> None:
        self.svg += f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{r:.2f}" fill="{fill}" {extra}/>\n'

    def cross(self, cx: float, cy: float, r: float, stroke: str, extra: str = "") -> None:
        d = (
            f"M{cx - r:.2f},{cy - r:.2f} L{cx + r:.2f},{cy + r:.2f} "
            f"M{cx - r:.2f},{cy + r:.2f} L{cx + r:.2f},{cy - r:.2f}"
        )
        self.svg += f'<path d="{d}" stroke="{stroke}" fill="none" {extra}/>\n'

    def text(self, x: float, y: float, string: str, extra: str = "") -> None:
        self.svg += f'<text x="{x:.2f}" y="{y:.2f}" {extra}>{escape(string)}</text>\n'

    def get_svg(self) -> str:
        return f"{self.svg}</svg>\n"


def _gray(level: float) -> str:
    value = int(round(max(0.0, min(1.0, level)) * 255))
    return f"#{value:02x}{value:02x}{value:02x}"


def _point_color(point: GraphPoint, kind: str) -> str:
    if kind == "document":
        # rare -> gelap
        return _gray(0.75 * (1.0 - point.shade))
    return SUBTYPE_COLORS.get(point.klass or "", "#000000")


def _outline(point: GraphPoint) -> Tuple[str, str]:
    color = FLAG_COLORS.get(point.flag)
    if color is None:
        return "", ""
    return color, f'stroke="{color}" stroke-width="2"'


def graph_svg(graph: ComparisonGraph, limit: Optional[float] = None) -> str:
    """
    Render ComparisonGraph sebagai scatter SVG.

    d_a di axis horizontal, d_b di axis vertical; titik di atas diagonal
    (d_a < d_b) lebih dekat ke A. Reference documents = dot, lainnya =
    cross. Setiap marker punya class="marker".

    Args:
        graph (ComparisonGraph): Graph
        limit (float, optional): Axis maximum; default 1.05 x distance terbesar

    Returns:
        str: SVG document
    """
    largest = max((max(p.d_a, p.d_b) for p in graph.points), default=0.0)
    limit = limit or (largest * 1.05 if largest > 0 else 1.0)
    span = SIZE - 2 * MARGIN

    def sx(value: float) -> float:
        return MARGIN + span * value / limit

    def sy(value: float) -> float:
        return SIZE - MARGIN - span * value / limit

    svg = SVG()
    svg.header(SIZE, SIZE)
    svg.comment(f"{graph.kind} graph: {graph.subject}")
    for note in graph.notes:
        svg.comment(note)
    svg.text(SIZE / 2, 24, f"{graph.kind} graph: {graph.subject}", 'text-anchor="middle" font-size="14"')

    svg.group_start({"id": "axes", "class": "axes"})
    svg.line(sx(0), sy(0), sx(limit), sy(0), "#000000")
    svg.line(sx(0), sy(0), sx(0), sy(limit), "#000000")
    svg.line(sx(0), sy(0), sx(limit), sy(limit), "#888888", 'stroke-dasharray="4,3"')
    svg.text(SIZE / 2, SIZE - 16, graph.x_label, 'text-anchor="middle" font-size="12"')
    svg.text(16, SIZE / 2, graph.y_label, f'text-anchor="middle" font-size="12" transform="rotate(-90 16 {SIZE / 2:.2f})"')
    svg.text(sx(limit), sy(0) + 14, f"{limit:.3f}", 'text-anchor="end" font-size="10"')
    svg.text(sx(0) - 4, sy(limit), f"{limit:.3f}", 'text-anchor="end" font-size="10"')
    svg.group_end()

    svg.group_start({"id": "points", "class": "points"})
    for point in graph.points:
        cx, cy = sx(point.d_a), sy(point.d_b)
        color = _point_color(point, graph.kind)
        outline_color, outline = _outline(point)
        title = f"{point.label}: d_a={point.d_a:.6f} d_b={point.d_b:.6f} {point.side}"
        svg.group_start({"class": "point", "title": title})
        if point.marker == "reference-dot":
            svg.circle(cx, cy, MARKER, color, f'class="marker" {outline}'.strip())
        else:
            svg.cross(cx, cy, MARKER, outline_color or color, 'class="marker" stroke-width="2"')
        svg.text(cx + 6, cy - 6, point.label, 'font-size="9"')
        svg.group_end()
    svg.group_end()
    return svg.get_svg()
