"""Dependency-free SVG rendering of a recorded trajectory."""

import csv
import math

import numpy as np

from .errors import ConfigError

COLUMNS = ("t", "u", "v", "r", "phi", "phi_over_t")
WIDTH, HEIGHT, PAD = 900, 420, 40
MAX_POINTS = 4000


def read_trajectory(path):
    """Columns of a trajectory CSV as float arrays keyed by name."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read trajectory {path}: {exc.strerror}") from None
    if not rows or tuple(rows[0]) != COLUMNS:
        raise ConfigError(f"{path}: expected header {','.join(COLUMNS)}")
    try:
        data = np.array(rows[1:], dtype=float).reshape(-1, len(COLUMNS))
    except ValueError:
        raise ConfigError(f"{path}: non-numeric trajectory data") from None
    if data.shape[0] < 2:
        raise ConfigError(f"{path}: need at least two samples to render")
    return {name: data[:, i] for i, name in enumerate(COLUMNS)}


def _thin(n):
    if n <= MAX_POINTS:
        return np.arange(n)
    return np.unique(np.linspace(0, n - 1, MAX_POINTS).astype(np.int64))


def _polyline(xs, ys, box, color):
    x0, y0, w, h = box
    xmin, xmax = float(np.min(xs)), float(np.max(xs))
    ymin, ymax = float(np.min(ys)), float(np.max(ys))
    sx = w / (xmax - xmin) if xmax > xmin else 1.0
    sy = h / (ymax - ymin) if ymax > ymin else 1.0
    pts = " ".join(f"{x0 + (a - xmin) * sx:.2f},{y0 + h - (b - ymin) * sy:.2f}"
                   for a, b in zip(xs, ys))
    return f'<polyline fill="none" stroke="{color}" stroke-width="1" points="{pts}"/>'


def _equal_box(xs, ys, box):
    # square data window centred in the panel so the curve is not distorted
    x0, y0, w, h = box
    cx = 0.5 * (float(np.min(xs)) + float(np.max(xs)))
    cy = 0.5 * (float(np.min(ys)) + float(np.max(ys)))
    half = 0.5 * max(float(np.ptp(xs)), float(np.ptp(ys)), 1e-300)
    side = min(w, h)
    ox, oy = x0 + 0.5 * (w - side), y0 + 0.5 * (h - side)
    s = side / (2 * half)
    pts = " ".join(f"{ox + (a - cx + half) * s:.2f},{oy + side - (b - cy + half) * s:.2f}"
                   for a, b in zip(xs, ys))
    return f'<polyline fill="none" stroke="#1f4e9a" stroke-width="0.8" points="{pts}"/>'


def svg(traj, title="trajectory"):
    """Two panels: the endpoint path (u, v) and phi(t)/t against t."""
    idx = _thin(traj["t"].size)
    t = traj["t"][idx]
    half_w = (WIDTH - 3 * PAD) / 2
    left = (PAD, PAD, half_w, HEIGHT - 2 * PAD)
    right = (2 * PAD + half_w, PAD, half_w, HEIGHT - 2 * PAD)
    keep = t > 0
    ratio = traj["phi_over_t"][idx][keep]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{PAD}" y="{PAD - 15}" font-family="sans-serif" font-size="13">'
        f"{_escape(title)}: endpoint path</text>",
        f'<text x="{right[0]}" y="{PAD - 15}" font-family="sans-serif" font-size="13">'
        "phi(t)/t</text>",
    ]
    for box in (left, right):
        parts.append(f'<rect x="{box[0]}" y="{box[1]}" width="{box[2]}" height="{box[3]}" '
                     'fill="none" stroke="#999"/>')
    parts.append(_equal_box(traj["u"][idx], traj["v"][idx], left))
    if ratio.size >= 2:
        parts.append(_polyline(t[keep], ratio, right, "#b5361b"))
        last = float(ratio[-1])
        parts.append(f'<text x="{right[0] + 5}" y="{HEIGHT - PAD + 18}" font-family="sans-serif" '
                     f'font-size="12">final {_fmt(last)} at t = {_fmt(float(t[keep][-1]))}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _fmt(x):
    return f"{x:.8g}" if math.isfinite(x) else str(x)


def _escape(s):
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
