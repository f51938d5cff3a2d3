"""
Minimal SVG line plots for recovery curves and threshold sweeps. The output
is plain text, deterministic for a given input, with no plotting backend.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

WIDTH = 640
HEIGHT = 420
MARGIN = 56
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _ticks(lo: float, hi: float, count: int = 5) -> np.ndarray:
	if hi <= lo:
		hi = lo + 1.0
	return np.linspace(lo, hi, count)


def line_plot(
	series: Mapping[str, tuple[Sequence[float], Sequence[float]]],
	path: str | Path,
	*,
	title: str = "",
	xlabel: str = "",
	ylabel: str = "",
	ylim: tuple[float, float] | None = None,
) -> Path:
	"""Write one polyline per series (label -> (xs, ys)) to `path`."""
	xs_all = np.concatenate([np.asarray(xs, dtype=float) for xs, _ in series.values()] or [np.zeros(1)])
	ys_all = np.concatenate([np.asarray(ys, dtype=float) for _, ys in series.values()] or [np.zeros(1)])
	x_lo, x_hi = float(np.nanmin(xs_all)), float(np.nanmax(xs_all))
	y_lo, y_hi = ylim or (float(np.nanmin(ys_all)), float(np.nanmax(ys_all)))
	if x_hi <= x_lo:
		x_hi = x_lo + 1.0
	if y_hi <= y_lo:
		y_hi = y_lo + 1.0

	plot_w = WIDTH - 2 * MARGIN
	plot_h = HEIGHT - 2 * MARGIN

	def px(x: float) -> float:
		return MARGIN + (x - x_lo) / (x_hi - x_lo) * plot_w

	def py(y: float) -> float:
		return HEIGHT - MARGIN - (y - y_lo) / (y_hi - y_lo) * plot_h

	out = [
		f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">',
		f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
		f'<text x="{WIDTH / 2:.1f}" y="{MARGIN / 2:.1f}" text-anchor="middle" font-size="13">{escape(title)}</text>',
		f'<rect x="{MARGIN}" y="{MARGIN}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>',
	]

	for t in _ticks(x_lo, x_hi):
		out.append(f'<line x1="{px(t):.2f}" y1="{HEIGHT - MARGIN}" x2="{px(t):.2f}" y2="{HEIGHT - MARGIN + 4}" stroke="black"/>')
		out.append(f'<text x="{px(t):.2f}" y="{HEIGHT - MARGIN + 16}" text-anchor="middle">{t:.3g}</text>')
	for t in _ticks(y_lo, y_hi):
		out.append(f'<line x1="{MARGIN - 4}" y1="{py(t):.2f}" x2="{MARGIN}" y2="{py(t):.2f}" stroke="black"/>')
		out.append(f'<text x="{MARGIN - 6}" y="{py(t) + 4:.2f}" text-anchor="end">{t:.3g}</text>')

	out.append(f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
	out.append(
		f'<text x="14" y="{HEIGHT / 2:.1f}" text-anchor="middle" transform="rotate(-90 14 {HEIGHT / 2:.1f})">{escape(ylabel)}</text>'
	)

	for i, (label, (xs, ys)) in enumerate(series.items()):
		color = PALETTE[i % len(PALETTE)]
		points = " ".join(
			f"{px(float(x)):.2f},{py(float(y)):.2f}" for x, y in zip(xs, ys) if np.isfinite(x) and np.isfinite(y)
		)
		out.append(f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.5"/>')
		ly = MARGIN + 14 + 14 * i
		out.append(f'<line x1="{WIDTH - MARGIN - 90}" y1="{ly - 4}" x2="{WIDTH - MARGIN - 70}" y2="{ly - 4}" stroke="{color}"/>')
		out.append(f'<text x="{WIDTH - MARGIN - 66}" y="{ly}">{escape(str(label))}</text>')

	out.append("</svg>")

	path = Path(path)
	path.parent.mkdir(parents=True, exist_ok=True)
	path.write_text("\n".join(out) + "\n")
	return path
