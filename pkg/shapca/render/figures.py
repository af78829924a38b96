"""
Explanation figures: a spectrum drawn as per-wavenumber segments whose opacity encodes
back-projected importance and whose hue encodes the relative component value
(red = higher, blue = lower, white = neutral)
"""
import logging
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from shapca.explain.models import GlobalExplanation, LocalExplanation
from shapca.render.models import PanelLayout, RenderError, RenderSpec
from shapca.render.svg import SVG
from shapca.spectra.models import SpectralAxis
from shapca.utils.files import write_csv_atomic, write_text_atomic

logger = logging.getLogger(__name__)

RED = (0xB2, 0x18, 0x2B)
NEUTRAL = (0xF7, 0xF7, 0xF7)
BLUE = (0x21, 0x66, 0xAC)
TITLE_BAND = 28


def colormap(value: float) -> str:
    """Diverging map over [-1, 1]: -1 blue, 0 neutral, +1 red"""
    v = float(np.clip(value, -1.0, 1.0))
    end = RED if v >= 0 else BLUE
    t = abs(v)
    rgb = [int(round(n + (e - n) * t)) for n, e in zip(NEUTRAL, end)]
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def opacities(importance: np.ndarray, alpha_min: float) -> np.ndarray:
    """alpha_min + (1 - alpha_min) * |v| / max|v|; all alpha_min when every value is 0"""
    mag = np.abs(np.asarray(importance, dtype=np.float64))
    top = mag.max() if mag.size else 0.0
    if top == 0:
        return np.full(mag.shape, alpha_min)
    return alpha_min + (1.0 - alpha_min) * mag / top


def relative_values(track: np.ndarray) -> np.ndarray:
    """Rescale by max |value| onto [-1, 1]"""
    track = np.asarray(track, dtype=np.float64)
    top = np.abs(track).max() if track.size else 0.0
    return track / top if top > 0 else np.zeros_like(track)


def _check_lengths(axis: SpectralAxis, **tracks: Optional[np.ndarray]):
    for name, track in tracks.items():
        if track is not None and np.asarray(track).shape != (axis.size,):
            raise RenderError(f"{name} has shape {np.asarray(track).shape}, axis has {axis.size} points")


class _Frame:
    """Maps data coordinates into one panel rectangle"""

    def __init__(self, axis: np.ndarray, curve: np.ndarray, x0: float, y0: float, w: float, h: float):
        self.x0, self.y0, self.w, self.h = x0, y0, w, h
        self.a_lo, self.a_hi = float(axis[0]), float(axis[-1])
        finite = curve[np.isfinite(curve)]
        self.y_lo = float(finite.min()) if finite.size else 0.0
        self.y_hi = float(finite.max()) if finite.size else 1.0

    def x(self, a: float) -> float:
        return self.x0 + (a - self.a_lo) / (self.a_hi - self.a_lo) * self.w

    def y(self, v: float) -> float:
        if self.y_hi == self.y_lo:
            return self.y0 + self.h / 2
        return self.y0 + self.h - (v - self.y_lo) / (self.y_hi - self.y_lo) * self.h


def _segments(axis: np.ndarray, curve: np.ndarray) -> List[List[Tuple[float, float]]]:
    """Piece of the curve owned by each wavenumber: previous midpoint -> point -> next midpoint"""
    n = axis.size
    mids = [((axis[j] + axis[j + 1]) / 2, (curve[j] + curve[j + 1]) / 2) for j in range(n - 1)]
    out = []
    for j in range(n):
        pts = []
        if j > 0:
            pts.append(mids[j - 1])
        pts.append((axis[j], curve[j]))
        if j < n - 1:
            pts.append(mids[j])
        out.append(pts)
    return out


def _draw_panel(
    svg: SVG,
    spec: RenderSpec,
    axis: SpectralAxis,
    curve: np.ndarray,
    importance: Optional[np.ndarray],
    pc_track: Optional[np.ndarray],
    top: float,
    title: str,
    panel_id: str,
    note: Optional[str] = None,
):
    m = spec.margin
    frame = _Frame(axis.values, curve, m, top + TITLE_BAND, spec.width - 2 * m, spec.height - TITLE_BAND - m)
    svg.group_start({"id": panel_id, "title": title})
    svg.text(spec.width / 2, top + 18, title, size=14, anchor="middle")

    # frame axes with end labels
    bottom = frame.y0 + frame.h
    svg.line(frame.x0, bottom, frame.x0 + frame.w, bottom)
    svg.line(frame.x0, frame.y0, frame.x0, bottom)
    svg.text(frame.x0, bottom + 16, f"{frame.a_lo:g}", size=10, anchor="middle")
    svg.text(frame.x0 + frame.w, bottom + 16, f"{frame.a_hi:g}", size=10, anchor="middle")
    svg.text(frame.x0 + frame.w / 2, bottom + 32, spec.x_label, size=11, anchor="middle")
    svg.text(frame.x0 - 8, frame.y0 + frame.h / 2, spec.y_label, size=11, anchor="middle",
             extra=f'transform="rotate(-90 {frame.x0 - 8:.2f} {frame.y0 + frame.h / 2:.2f})"')

    finite = bool(np.all(np.isfinite(curve)))
    points = [(frame.x(a), frame.y(v)) for a, v in zip(axis.values, curve)] if finite else []
    if points:
        svg.polyline(points, stroke=spec.mean_color, width=1.0)

    if importance is not None and pc_track is not None and points:
        alphas = opacities(importance, spec.alpha_min)
        colours = relative_values(pc_track)
        svg.group_start({"class": "overlay"})
        for j, seg in enumerate(_segments(axis.values, curve)):
            svg.polyline(
                [(frame.x(a), frame.y(v)) for a, v in seg],
                stroke=colormap(colours[j]),
                width=spec.stroke_width,
                opacity=float(alphas[j]),
            )
        svg.group_end()

    if note:
        svg.text(frame.x0 + frame.w / 2, frame.y0 + frame.h / 2, note, size=13, anchor="middle", extra='fill="#555555"')
    svg.group_end()


def render_global(
    ge: Mapping[int, GlobalExplanation],
    axis: SpectralAxis,
    class_means: np.ndarray,
    spec: Optional[RenderSpec] = None,
) -> Dict[str, str]:
    """One SVG per class name (single layout) or {'grid': svg} with all classes stacked"""
    spec = spec or RenderSpec()
    class_means = np.asarray(class_means, dtype=np.float64)
    panels = []
    for cls in sorted(ge):
        g = ge[cls]
        _check_lengths(axis, psi=g.psi, pc_track=g.pc_track, mean=class_means[cls])
        panels.append(g)

    def draw(svg: SVG, g: GlobalExplanation, top: float):
        title = f"Global explanation: {g.class_name} (n={g.n_samples_used})"
        note = "no samples" if g.empty else None
        _draw_panel(svg, spec, axis, class_means[g.class_index], g.psi, g.pc_track, top, title,
                    f"panel-{g.class_index}", note)

    if spec.layout == PanelLayout.GRID:
        svg = SVG()
        svg.header(spec.width, spec.height * len(panels))
        for row, g in enumerate(panels):
            draw(svg, g, row * spec.height)
        return {"grid": svg.get_svg()}

    out = {}
    for g in panels:
        svg = SVG()
        svg.header(spec.width, spec.height)
        draw(svg, g, 0)
        out[g.class_name] = svg.get_svg()
    return out


def render_local(
    le: LocalExplanation,
    axis: SpectralAxis,
    spectrum: np.ndarray,
    spec: Optional[RenderSpec] = None,
    class_name: Optional[str] = None,
) -> str:
    """Two stacked panels: supporting evidence (psi_pos) over opposing evidence (|psi_neg|)"""
    spec = spec or RenderSpec()
    spectrum = np.asarray(spectrum, dtype=np.float64)
    _check_lengths(axis, spectrum=spectrum, psi_pos=le.psi_pos, psi_neg=le.psi_neg, pc_track=le.pc_track)
    name = class_name or str(le.predicted_class)
    who = le.sample_id or f"sample {le.sample_index}"
    svg = SVG()
    svg.header(spec.width, 2 * spec.height)
    _draw_panel(svg, spec, axis, spectrum, le.psi_pos, le.pc_track, 0,
                f"{who}: evidence for {name}", "panel-positive")
    _draw_panel(svg, spec, axis, spectrum, np.abs(le.psi_neg), le.pc_track, spec.height,
                f"{who}: evidence against {name}", "panel-negative")
    return svg.get_svg()


def export_tracks_csv(path: Path, axis: SpectralAxis, tracks: Mapping[str, np.ndarray]) -> Path:
    """axis column followed by one column per named track, in the given order"""
    names = list(tracks)
    _check_lengths(axis, **{n: tracks[n] for n in names})
    cols = [np.asarray(tracks[n], dtype=np.float64) for n in names]
    rows = ([float(axis.values[j])] + [float(c[j]) for c in cols] for j in range(axis.size))
    return write_csv_atomic(path, ["axis"] + names, rows)


def global_tracks(g: GlobalExplanation) -> Dict[str, np.ndarray]:
    return {"psi": g.psi, "pc": g.pc_track}


def local_tracks(le: LocalExplanation) -> Dict[str, np.ndarray]:
    return {"psi_pos": le.psi_pos, "psi_neg": le.psi_neg, "pc": le.pc_track}


def write_svg(path: Path, document: str) -> Path:
    return write_text_atomic(path, document)
