"""Deterministic SVG figures: Kaplan-Meier curves and THP traces.

Text is drawn with a small built-in stroke font so that files carry no font
references and render identically everywhere.  Coordinates are written with
two decimals and depend linearly on the data; the plotting frame is recorded
on the ``<g class="plot">`` element so curve values can be read back.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .survival import KMCurve

WIDTH, HEIGHT = 640, 400
PALETTE = ("#1f5fa8", "#c8501e", "#2b8a3e", "#7a3fa0", "#8c6d1f")

# Stroke font on a 4 x 6 grid (y grows downward).  Each glyph is a list of
# polylines given as flat coordinate strings.
_GLYPHS: dict[str, tuple[str, ...]] = {
    "A": ("0 6 0 2 2 0 4 2 4 6", "0 3 4 3"),
    "B": ("0 0 0 6 3 6 4 5 4 4 3 3 0 3", "0 0 3 0 4 1 4 2 3 3"),
    "C": ("4 0 0 0 0 6 4 6",),
    "D": ("0 0 0 6 2 6 4 4 4 2 2 0 0 0",),
    "E": ("4 0 0 0 0 6 4 6", "0 3 3 3"),
    "F": ("4 0 0 0 0 6", "0 3 3 3"),
    "G": ("4 1 4 0 0 0 0 6 4 6 4 3 2 3",),
    "H": ("0 0 0 6", "4 0 4 6", "0 3 4 3"),
    "I": ("1 0 3 0", "2 0 2 6", "1 6 3 6"),
    "J": ("4 0 4 6 0 6 0 4",),
    "K": ("0 0 0 6", "4 0 0 3 4 6"),
    "L": ("0 0 0 6 4 6",),
    "M": ("0 6 0 0 2 3 4 0 4 6",),
    "N": ("0 6 0 0 4 6 4 0",),
    "O": ("0 0 4 0 4 6 0 6 0 0",),
    "P": ("0 6 0 0 4 0 4 3 0 3",),
    "Q": ("0 0 4 0 4 6 0 6 0 0", "2 4 4 6"),
    "R": ("0 6 0 0 4 0 4 3 0 3 4 6",),
    "S": ("4 0 0 0 0 3 4 3 4 6 0 6",),
    "T": ("0 0 4 0", "2 0 2 6"),
    "U": ("0 0 0 6 4 6 4 0",),
    "V": ("0 0 2 6 4 0",),
    "W": ("0 0 1 6 2 3 3 6 4 0",),
    "X": ("0 0 4 6", "4 0 0 6"),
    "Y": ("0 0 2 3 4 0", "2 3 2 6"),
    "Z": ("0 0 4 0 0 6 4 6",),
    "0": ("0 0 4 0 4 6 0 6 0 0", "0 6 4 0"),
    "1": ("1 1 2 0 2 6", "1 6 3 6"),
    "2": ("0 0 4 0 4 3 0 3 0 6 4 6",),
    "3": ("0 0 4 0 4 6 0 6", "1 3 4 3"),
    "4": ("0 0 0 3 4 3", "4 0 4 6"),
    "5": ("4 0 0 0 0 3 4 3 4 6 0 6",),
    "6": ("4 0 0 0 0 6 4 6 4 3 0 3",),
    "7": ("0 0 4 0 1 6",),
    "8": ("0 0 4 0 4 6 0 6 0 0", "0 3 4 3"),
    "9": ("4 3 0 3 0 0 4 0 4 6 0 6",),
    ".": ("2 5.5 2 6",),
    ",": ("2 5 1.5 7",),
    ":": ("2 1.5 2 2", "2 4.5 2 5"),
    "-": ("1 3 3 3",),
    "_": ("0 6 4 6",),
    "+": ("0 3 4 3", "2 1 2 5"),
    "=": ("0 2 4 2", "0 4 4 4"),
    "/": ("0 6 4 0",),
    "(": ("3 0 1 2 1 4 3 6",),
    ")": ("1 0 3 2 3 4 1 6",),
    "%": ("0 6 4 0", "0 0 1 0 1 1 0 1 0 0", "3 5 4 5 4 6 3 6 3 5"),
    "<": ("4 0 0 3 4 6",),
    ">": ("0 0 4 3 0 6",),
    "'": ("2 0 2 1.5",),
    "?": ("0 1 0 0 4 0 4 3 2 3 2 4", "2 5.5 2 6"),
    " ": (),
}


def _f(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


def text_path(text: str, x: float, y: float, size: float = 12.0, anchor: str = "start") -> str:
    """SVG path data for ``text`` with its baseline-left corner at ``(x, y)``.

    Lowercase letters are drawn as capitals; unknown characters as ``?``.
    """
    scale = size / 8.0
    advance = 6.0 * scale
    width = advance * len(text) - 2.0 * scale if text else 0.0
    if anchor == "middle":
        x -= width / 2
    elif anchor == "end":
        x -= width
    top = y - 6.0 * scale
    parts = []
    for i, ch in enumerate(text):
        strokes = _GLYPHS.get(ch.upper(), _GLYPHS["?"])
        ox = x + i * advance
        for stroke in strokes:
            nums = [float(v) for v in stroke.split()]
            pts = [(ox + nums[k] * scale, top + nums[k + 1] * scale) for k in range(0, len(nums), 2)]
            parts.append("M" + " L".join(f"{_f(px)} {_f(py)}" for px, py in pts))
    return " ".join(parts)


@dataclass(frozen=True)
class Frame:
    """Linear map from data coordinates to the plotting area."""

    left: float
    top: float
    width: float
    height: float
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def x(self, v) -> np.ndarray:
        return self.left + (np.asarray(v, float) - self.xmin) / (self.xmax - self.xmin) * self.width

    def y(self, v) -> np.ndarray:
        return self.top + (self.ymax - np.asarray(v, float)) / (self.ymax - self.ymin) * self.height

    def inv_x(self, px) -> np.ndarray:
        return self.xmin + (np.asarray(px, float) - self.left) / self.width * (self.xmax - self.xmin)

    def inv_y(self, py) -> np.ndarray:
        return self.ymax - (np.asarray(py, float) - self.top) / self.height * (self.ymax - self.ymin)

    def attr(self) -> str:
        return " ".join([_f(v) for v in (self.left, self.top, self.width, self.height)]
                        + [repr(float(v)) for v in (self.xmin, self.xmax, self.ymin, self.ymax)])

    @classmethod
    def parse(cls, text: str) -> "Frame":
        return cls(*(float(v) for v in text.split()))


def _nice_step(span: float, target: int = 6) -> float:
    raw = span / target
    mag = 10 ** np.floor(np.log10(raw))
    for m in (1, 2, 2.5, 5, 10):
        if m * mag >= raw:
            return float(m * mag)
    return float(10 * mag)


def _path(xs, ys) -> str:
    return "M" + " L".join(f"{_f(a)} {_f(b)}" for a, b in zip(xs, ys))


class _Svg:
    def __init__(self, title: str):
        self.items = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
                      f'width="{WIDTH}" height="{HEIGHT}">',
                      f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>']
        self.text(title, WIDTH / 2, 24, 13, "middle")

    def add(self, item: str):
        self.items.append(item)

    def text(self, s: str, x: float, y: float, size: float = 10, anchor: str = "start", color: str = "#000000"):
        if s:
            self.add(f'<path d="{text_path(s, x, y, size, anchor)}" fill="none" stroke="{color}" '
                     f'stroke-width="1" stroke-linecap="round" stroke-linejoin="round"/>')

    def axes(self, fr: Frame, xlabel: str, ylabel: str, yticks: Sequence[float]):
        x0, y0, x1, y1 = fr.left, fr.top + fr.height, fr.left + fr.width, fr.top
        self.add(f'<path d="M{_f(x0)} {_f(y1)} L{_f(x0)} {_f(y0)} L{_f(x1)} {_f(y0)}" fill="none" '
                 f'stroke="#000000" stroke-width="1"/>')
        step = _nice_step(fr.xmax - fr.xmin)
        for k in range(int(np.floor((fr.xmax - fr.xmin) / step + 1e-9)) + 1):
            v = fr.xmin + k * step
            px = float(fr.x(v))
            self.add(f'<path d="M{_f(px)} {_f(y0)} L{_f(px)} {_f(y0 + 4)}" stroke="#000000" stroke-width="1"/>')
            self.text(f"{v:g}", px, y0 + 16, 9, "middle")
        for v in yticks:
            py = float(fr.y(v))
            self.add(f'<path d="M{_f(x0 - 4)} {_f(py)} L{_f(x0)} {_f(py)}" stroke="#000000" stroke-width="1"/>')
            self.text(f"{v:g}", x0 - 7, py + 4, 9, "end")
        self.text(xlabel, fr.left + fr.width / 2, y0 + 34, 10, "middle")
        self.text(ylabel, 12, fr.top - 10, 10, "start")

    def render(self) -> str:
        return "\n".join(self.items + ["</svg>"]) + "\n"


def _frame(xmax: float, xmin: float = 0.0) -> Frame:
    return Frame(60.0, 50.0, 540.0, 290.0, xmin, xmax if xmax > xmin else xmin + 1.0, 0.0, 1.0)


def km_step_points(curve: KMCurve, t_end: float) -> tuple[np.ndarray, np.ndarray]:
    """Vertices of the right-continuous step function, extended to ``t_end``."""
    xs, ys = [], []
    prev = None
    for s in curve.steps:
        if prev is not None:
            xs.append(s.time)
            ys.append(prev)
        xs.append(s.time)
        ys.append(s.survival)
        prev = s.survival
    if xs and t_end > xs[-1]:
        xs.append(t_end)
        ys.append(prev)
    return np.array(xs), np.array(ys)


def km_svg(curves: Mapping[str, KMCurve], title: str = "Kaplan-Meier estimate of hold",
           xlabel: str = "time after silence onset (s)", ylabel: str = "proportion holding",
           t_max: float | None = None) -> str:
    groups = sorted(curves)
    last = max((c.steps[-1].time for c in curves.values() if c.steps), default=1.0)
    fr = _frame(t_max if t_max is not None else last)
    svg = _Svg(title)
    svg.axes(fr, xlabel, ylabel, (0, 0.25, 0.5, 0.75, 1.0))
    svg.add(f'<g class="plot" data-frame="{fr.attr()}">')
    for i, g in enumerate(groups):
        color = PALETTE[i % len(PALETTE)]
        xs, ys = km_step_points(curves[g], fr.xmax)
        svg.add(f'<path class="curve" data-group="{g}" d="{_path(fr.x(xs), fr.y(ys))}" fill="none" '
                f'stroke="{color}" stroke-width="1.5"/>')
    svg.add("</g>")
    for i, g in enumerate(groups):
        color = PALETTE[i % len(PALETTE)]
        ly = fr.top + 14 + 16 * i
        lx = fr.left + fr.width - 150
        svg.add(f'<path d="M{_f(lx)} {_f(ly - 4)} L{_f(lx + 20)} {_f(ly - 4)}" stroke="{color}" stroke-width="2"/>')
        svg.text(g.replace("_", " "), lx + 26, ly, 9)
    return svg.render()


@dataclass
class TraceData:
    times: np.ndarray
    values: np.ndarray
    silence_onset: float
    shift_time: float | None

    @property
    def frame_rate(self) -> float:
        return 1.0 / float(self.times[1] - self.times[0]) if len(self.times) > 1 else 1.0


def read_trace_csv(path: str | Path) -> TraceData:
    times, values = [], []
    onset, shift = None, None
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            times.append(float(row["time"]))
            values.append(float(row["thp"]))
            if row.get("silence_onset"):
                onset = float(row["silence_onset"])
            if row.get("shift_time"):
                shift = float(row["shift_time"])
    if not times:
        raise ValueError(f"{path}: empty trace")
    return TraceData(np.array(times), np.array(values), onset if onset is not None else 0.0, shift)


def thp_svg(trace: TraceData, title: str = "Turn-hold probability", threshold: float = 0.5) -> str:
    end = float(trace.times[-1]) + 1.0 / trace.frame_rate
    fr = _frame(end)
    svg = _Svg(title)
    svg.axes(fr, "time (s)", "THP", (0, 0.5, 1.0))
    svg.add(f'<g class="plot" data-frame="{fr.attr()}">')
    ty = float(fr.y(threshold))
    svg.add(f'<path class="threshold" d="M{_f(fr.left)} {_f(ty)} L{_f(fr.left + fr.width)} {_f(ty)}" '
            f'stroke="#888888" stroke-width="1" stroke-dasharray="4 3"/>')
    ox = float(fr.x(trace.silence_onset))
    svg.add(f'<path class="onset" d="M{_f(ox)} {_f(fr.top)} L{_f(ox)} {_f(fr.top + fr.height)}" '
            f'stroke="#888888" stroke-width="1"/>')
    svg.add(f'<path class="curve" data-group="thp" d="{_path(fr.x(trace.times), fr.y(trace.values))}" '
            f'fill="none" stroke="{PALETTE[0]}" stroke-width="1.2"/>')
    if trace.shift_time is not None:
        sx, sy = float(fr.x(trace.shift_time)), ty
        svg.add(f'<path class="shift" d="M{_f(sx - 5)} {_f(sy - 5)} L{_f(sx + 5)} {_f(sy + 5)} '
                f'M{_f(sx - 5)} {_f(sy + 5)} L{_f(sx + 5)} {_f(sy - 5)}" stroke="{PALETTE[1]}" stroke-width="2"/>')
    svg.add("</g>")
    svg.text("silence", ox + 4, fr.top + 12, 9, color="#555555")
    if trace.shift_time is not None:
        svg.text(f"shift {trace.shift_time - trace.silence_onset:.2f} s", float(fr.x(trace.shift_time)) + 8,
                 ty - 8, 9, color=PALETTE[1])
    return svg.render()


def parse_curves(svg_text: str) -> tuple[Frame, dict[str, tuple[np.ndarray, np.ndarray]]]:
    """Recover data-space curve vertices from an SVG written by this module."""
    fr = Frame.parse(re.search(r'data-frame="([^"]+)"', svg_text).group(1))
    out = {}
    for m in re.finditer(r'class="curve" data-group="([^"]+)" d="([^"]+)"', svg_text):
        nums = np.array([float(v) for v in re.findall(r"-?\d+\.\d+", m.group(2))]).reshape(-1, 2)
        out[m.group(1)] = (fr.inv_x(nums[:, 0]), fr.inv_y(nums[:, 1]))
    return fr, out


__all__ = ["Frame", "TraceData", "km_step_points", "km_svg", "parse_curves", "read_trace_csv", "text_path",
           "thp_svg"]
