"""
Minimal string-building SVG 1.1 writer
"""
from typing import Dict, Optional, Sequence, Tuple
from xml.sax.saxutils import escape, quoteattr


def _attrs(attr: Dict[str, object]) -> str:
    return " ".join(f"{key}={quoteattr(str(value))}" for key, value in attr.items())


class SVG:
    def __init__(self):
        self.svg = ""

    def header(self, width: int, height: int):
        self.svg += f"""<?xml version="1.0" standalone="no"?>
<!DOCTYPE svg PUBLIC "-//W3C//DTD SVG 1.1//EN" "http://www.w3.org/Graphics/SVG/1.1/DTD/svg11.dtd">
<svg version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" xmlns="http://www.w3.org/2000/svg">
<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>
"""

    def group_start(self, attr: Dict[str, object]):
        title = attr.get("title")
        g_attr = {k: v for k, v in attr.items() if k != "title"}
        self.svg += f"<g {_attrs(g_attr)}>\n" if g_attr else "<g>\n"
        if title is not None:
            self.svg += f"<title>{escape(str(title))}</title>\n"

    def group_end(self):
        self.svg += "</g>\n"

    def line(self, x1: float, y1: float, x2: float, y2: float, stroke: str = "#000000", width: float = 1.0):
        self.svg += f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" stroke="{stroke}" stroke-width="{width:.2f}"/>\n'

    def polyline(self, points: Sequence[Tuple[float, float]], stroke: str, width: float, opacity: Optional[float] = None):
        coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
        extra = f' stroke-opacity="{opacity:.4f}"' if opacity is not None else ""
        self.svg += (
            f'<polyline points="{coords}" fill="none" stroke="{stroke}" stroke-width="{width:.2f}"'
            f' stroke-linecap="butt"{extra}/>\n'
        )

    def text(self, x: float, y: float, string: str, size: int = 12, anchor: str = "start", extra: str = ""):
        self.svg += (
            f'<text x="{x:.2f}" y="{y:.2f}" font-family="sans-serif" font-size="{size}"'
            f' text-anchor="{anchor}"{(" " + extra) if extra else ""}>{escape(string)}</text>\n'
        )

    def get_svg(self) -> str:
        return f"{self.svg}</svg>\n"
