"""Self-contained SVG 1.1 charts: funnel plots, R/S log-log fits, H versus length.

Output is a pure function of the inputs (fixed number formatting, no
timestamps), so identical data produce byte-identical documents.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from . import funnel, hurst

__all__ = ["Chart", "render_svg", "funnel_svg", "rs_loglog_svg", "hurst_vs_length_svg"]

WIDTH, HEIGHT = 640, 480
MARGIN = dict(left=70, right=20, top=40, bottom=55)

BLUE = "#1f4fbf"
RED = "#c0392b"
GREY = "#555555"


def _f(x: float) -> str:
    return f"{x:.2f}"


def _nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / target
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 10))
        t += step
    return ticks


@dataclass
class Chart:
    """Minimal plotting surface with linear data-to-pixel mapping."""

    xlim: tuple[float, float]
    ylim: tuple[float, float]
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    metadata: dict = field(default_factory=dict)
    body: list[str] = field(default_factory=list)

    def px(self, x: float) -> float:
        x0, x1 = self.xlim
        return MARGIN["left"] + (x - x0) / (x1 - x0) * (WIDTH - MARGIN["left"] - MARGIN["right"])

    def py(self, y: float) -> float:
        y0, y1 = self.ylim
        return HEIGHT - MARGIN["bottom"] - (y - y0) / (y1 - y0) * (HEIGHT - MARGIN["top"] - MARGIN["bottom"])

    def polyline(self, xs, ys, color: str, dash: Optional[str] = None, width: float = 1.5, cls: str = "") -> None:
        pts = " ".join(f"{_f(self.px(x))},{_f(self.py(y))}" for x, y in zip(xs, ys) if np.isfinite(y))
        if not pts:
            return
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        cls_attr = f' class="{cls}"' if cls else ""
        self.body.append(
            f'<polyline{cls_attr} points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"{dash_attr}/>'
        )

    def vline(self, x: float, color: str, dash: str, cls: str) -> None:
        self.polyline([x, x], list(self.ylim), color, dash, 1.2, cls)

    def circles(self, xs, ys, r: float = 2.5, color: str = "#000000", filled: bool = False, cls: str = "point") -> None:
        fill = color if filled else "none"
        for x, y in zip(xs, ys):
            self.body.append(
                f'<circle class="{cls}" cx="{_f(self.px(x))}" cy="{_f(self.py(y))}" r="{r}" '
                f'fill="{fill}" stroke="{color}" stroke-width="0.8"/>'
            )

    def text(self, x: float, y: float, s: str, anchor: str = "start", size: int = 12) -> None:
        self.body.append(
            f'<text x="{_f(x)}" y="{_f(y)}" font-family="sans-serif" font-size="{size}" '
            f'text-anchor="{anchor}">{escape(s)}</text>'
        )

    def _axes(self, xfmt, yfmt) -> list[str]:
        out = []
        left, bottom = MARGIN["left"], HEIGHT - MARGIN["bottom"]
        right, top = WIDTH - MARGIN["right"], MARGIN["top"]
        out.append(f'<rect x="{left}" y="{top}" width="{right - left}" height="{bottom - top}" fill="none" stroke="#000000"/>')
        for t in _nice_ticks(*self.xlim):
            x = self.px(t)
            out.append(f'<line x1="{_f(x)}" y1="{bottom}" x2="{_f(x)}" y2="{bottom + 5}" stroke="#000000"/>')
            out.append(
                f'<text x="{_f(x)}" y="{bottom + 18}" font-family="sans-serif" font-size="11" '
                f'text-anchor="middle">{escape(xfmt(t))}</text>'
            )
        for t in _nice_ticks(*self.ylim):
            y = self.py(t)
            out.append(f'<line x1="{left - 5}" y1="{_f(y)}" x2="{left}" y2="{_f(y)}" stroke="#000000"/>')
            out.append(
                f'<text x="{left - 8}" y="{_f(y + 4)}" font-family="sans-serif" font-size="11" '
                f'text-anchor="end">{escape(yfmt(t))}</text>'
            )
        out.append(
            f'<text x="{(left + right) / 2:.2f}" y="{HEIGHT - 12}" font-family="sans-serif" font-size="13" '
            f'text-anchor="middle">{escape(self.xlabel)}</text>'
        )
        out.append(
            f'<text x="16" y="{(top + bottom) / 2:.2f}" font-family="sans-serif" font-size="13" '
            f'text-anchor="middle" transform="rotate(-90 16 {(top + bottom) / 2:.2f})">{escape(self.ylabel)}</text>'
        )
        if self.title:
            out.append(
                f'<text x="{WIDTH / 2:.2f}" y="22" font-family="sans-serif" font-size="14" '
                f'text-anchor="middle">{escape(self.title)}</text>'
            )
        return out

    def render(self, xfmt=lambda t: f"{t:g}", yfmt=lambda t: f"{t:g}") -> str:
        meta = json.dumps(self.metadata, sort_keys=True, allow_nan=False)
        parts = [
            '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">',
            f"<metadata>{escape(meta)}</metadata>",
            f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
            *self._axes(xfmt, yfmt),
            f'<clipPath id="plot"><rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" '
            f'width="{WIDTH - MARGIN["left"] - MARGIN["right"]}" '
            f'height="{HEIGHT - MARGIN["top"] - MARGIN["bottom"]}"/></clipPath>',
            '<g clip-path="url(#plot)">',
            *self.body,
            "</g>",
            "</svg>",
        ]
        return "\n".join(parts) + "\n"


def _clean(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, float):
            out[k] = round(v, 6) if math.isfinite(v) else None
        else:
            out[k] = v
    return out


def funnel_svg(
    pis: Sequence[float],
    sizes: Sequence[float],
    envelopes: Sequence[funnel.EnvelopeSpec] = (funnel.EnvelopeSpec(),),
    wp: Optional[float] = None,
    mean_pi: Optional[float] = None,
    title: str = "",
    metadata: Optional[dict] = None,
) -> str:
    """Funnel plot: effect size across, log10 study size up.

    The first envelope is drawn blue dashed (random-data reference), any
    further ones red solid. ``wp`` gets a dashed line, ``mean_pi`` a
    dash-dotted one.
    """
    pis = np.asarray(pis, dtype=float)
    sizes = np.asarray(sizes, dtype=float)
    if pis.size == 0:
        raise ValueError("funnel chart needs at least one point")
    logn = np.log10(sizes)
    ylo = math.floor(min(logn.min(), 2.0))
    yhi = math.ceil(max(logn.max(), 6.0))
    centre = wp if wp is not None else 0.5
    spread = max(np.max(np.abs(pis - centre)), 0.05)
    xlo, xhi = max(centre - 1.1 * spread, 0.0), min(centre + 1.1 * spread, 1.0)
    chart = Chart((xlo, xhi), (ylo, yhi), title, "effect size π", "log10 N (bits)")
    ns = np.logspace(ylo, yhi, 300)
    for i, spec in enumerate(envelopes):
        h = spec.half_width(ns)
        color, dash = (BLUE, "6,4") if i == 0 else (RED, None)
        cls = f"envelope-v{spec.v_factor:.3g}"
        chart.polyline(np.clip(spec.wp - h, 0, 1), np.log10(ns), color, dash, cls=cls)
        chart.polyline(np.clip(spec.wp + h, 0, 1), np.log10(ns), color, dash, cls=cls)
    if wp is not None:
        chart.vline(wp, GREY, "5,3", "wp-line")
    if mean_pi is not None:
        chart.vline(mean_pi, GREY, "8,3,2,3", "mean-line")
    chart.circles(pis, logn)
    meta = {"chart": "funnel", "n_points": int(pis.size)}
    meta.update(metadata or {})
    chart.metadata = _clean(meta)
    return chart.render(xfmt=lambda t: f"{t:.2f}")


def rs_loglog_svg(report: hurst.HurstReport, title: str = "") -> str:
    x = np.log2([p.window_n for p in report.points])
    y = np.log2([p.rs_mean for p in report.points])
    pad = 0.3
    chart = Chart(
        (x.min() - pad, x.max() + pad),
        (min(y.min(), report.intercept + report.h * x.min()) - pad, max(y.max(), report.intercept + report.h * x.max()) + pad),
        title,
        "log2 n (window length)",
        "log2 R/S",
    )
    xs = np.array([x.min() - pad, x.max() + pad])
    chart.polyline(xs, report.intercept + report.h * xs, RED, cls="fit")
    chart.circles(x, y, r=3.5, color=BLUE, filled=True)
    chart.text(MARGIN["left"] + 10, MARGIN["top"] + 18, f"H = {report.h:.3f} ± {report.h_se:.3f}")
    chart.metadata = _clean({"chart": "rs_loglog", "h": report.h, "h_se": report.h_se, "c_h": report.c_h})
    return chart.render()


def hurst_vs_length_svg(
    baselines: Sequence[hurst.Baseline],
    highlights: Sequence[tuple[str, int, float]] = (),
    poly_fit: bool = True,
    title: str = "",
) -> str:
    """Mean baseline H against series length, with optional named points.

    ``highlights`` are ``(label, length, h)`` triples drawn as filled red
    circles. ``poly_fit`` overlays a dotted quadratic through the baselines.
    """
    if not baselines:
        raise ValueError("need at least one baseline")
    lengths = np.array([b.length for b in baselines], dtype=float)
    means = np.array([b.mean for b in baselines])
    ses = np.array([b.se for b in baselines])
    all_len = np.concatenate([lengths, [h[1] for h in highlights]]) if highlights else lengths
    all_h = np.concatenate([means - ses, means + ses, [h[2] for h in highlights]]) if highlights else np.concatenate([means - ses, means + ses])
    chart = Chart(
        (0.0, float(all_len.max()) * 1.08),
        (min(0.4, float(all_h.min()) - 0.02), max(0.8, float(all_h.max()) + 0.02)),
        title,
        "series length",
        "Hurst exponent H",
    )
    if poly_fit and lengths.size >= 3:
        coef = np.polyfit(lengths, means, 2)
        xs = np.linspace(lengths.min(), lengths.max(), 100)
        chart.polyline(xs, np.polyval(coef, xs), GREY, "2,3", cls="poly-fit")
    for L, m, s in zip(lengths, means, ses):
        chart.polyline([L, L], [m - s, m + s], BLUE, width=1.0, cls="error-bar")
    chart.circles(lengths, means, r=3.5, color=BLUE)
    for label, L, h in highlights:
        chart.circles([L], [h], r=4.5, color=RED, filled=True, cls="highlight")
        chart.text(chart.px(L) + 7, chart.py(h) - 6, label, size=11)
    chart.metadata = {"chart": "hurst_vs_length", "n_baselines": int(lengths.size), "highlights": [h[0] for h in highlights]}
    return chart.render()


def render_svg(chart: str, data, **options) -> str:
    """Dispatch by chart name: ``funnel``, ``rs_loglog`` or ``hurst_vs_length``.

    For ``funnel``, ``data`` is a sequence of study records or a
    ``(pis, sizes)`` pair.
    """
    if chart == "funnel":
        if isinstance(data, tuple) and len(data) == 2:
            pis, sizes = data
        else:
            data = list(data)
            if not data:
                raise ValueError("funnel chart needs at least one record")
            pis = [r.pi for r in data]
            sizes = [r.n_bits for r in data]
        return funnel_svg(pis, sizes, **options)
    if chart == "rs_loglog":
        return rs_loglog_svg(data, **options)
    if chart == "hurst_vs_length":
        return hurst_vs_length_svg(data, **options)
    raise ValueError(f"unknown chart {chart!r}")
