"""Dependency-free SVG figures; every figure also writes its numbers as CSV."""

from __future__ import annotations

import csv
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .errors import NocturneError

WIDTH, HEIGHT = 640, 420
MARGIN = 56
COLORS = {False: "#3b6ea5", True: "#c8553d"}
PALETTE = ("#3b6ea5", "#c8553d", "#5b9a68", "#8a6bbd", "#d19a2e", "#4aa3a2", "#7a7a7a")


class EmptyPlotInput(NocturneError):
    """Nothing to plot."""


def _scale(lo: float, hi: float, a: float, b: float):
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    return lambda v: a + (v - lo) * (b - a) / (hi - lo)


def _svg(body: list[str], title: str) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">')
    return "\n".join([head, f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
                      f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
                      *body, "</svg>"]) + "\n"


def _axes(xlabel: str, ylabel: str) -> list[str]:
    x0, y0, x1, y1 = MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN / 2, MARGIN / 2 + 12
    return [
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
        f'<text x="{(x0 + x1) / 2}" y="{HEIGHT - 16}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="16" y="{(y0 + y1) / 2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {(y0 + y1) / 2})">{escape(ylabel)}</text>',
    ]


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def pca_scatter(coords, labels, synth_flags, svg_path, csv_path, title: str = "PCA of balanced rows") -> int:
    """Scatter of the first two principal coordinates.

    Originals are filled circles, synthetic rows hollow diamonds; colour
    encodes the label. Returns the number of plotted points.
    """
    coords = np.asarray(coords, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    synth = np.asarray(synth_flags, dtype=bool)
    if coords.ndim != 2 or coords.shape[0] == 0:
        raise EmptyPlotInput("no points to plot")
    sx = _scale(coords[:, 0].min(), coords[:, 0].max(), MARGIN + 8, WIDTH - MARGIN / 2 - 8)
    sy = _scale(coords[:, 1].min(), coords[:, 1].max(), HEIGHT - MARGIN - 8, MARGIN / 2 + 20)
    body = _axes("PC1", "PC2")
    for (a, b), lab, syn in zip(coords, labels, synth):
        x, y, c = sx(a), sy(b), COLORS[bool(lab)]
        if syn:
            body.append(f'<path class="pt synthetic" d="M{x:.2f} {y - 4:.2f} L{x + 4:.2f} {y:.2f} '
                        f'L{x:.2f} {y + 4:.2f} L{x - 4:.2f} {y:.2f} Z" fill="none" stroke="{c}"/>')
        else:
            body.append(f'<circle class="pt original" cx="{x:.2f}" cy="{y:.2f}" r="3.5" fill="{c}" '
                        f'fill-opacity="0.8"/>')
    Path(svg_path).write_text(_svg(body, title))
    _write_csv(Path(csv_path), ["pc1", "pc2", "label", "synthetic"],
               [(repr(float(a)), repr(float(b)), int(lab), int(syn))
                for (a, b), lab, syn in zip(coords, labels, synth)])
    return coords.shape[0]


def auroc_distribution(rows, svg_path, csv_path,
                       title: str = "Mean AUROC across feature sets, per model") -> int:
    """Box-and-strip plot of per-feature-set mean AUROC, one group per model.

    ``rows`` are summary dicts with ``model``, ``feature_set`` and
    ``mean_auroc``. Returns the number of model groups.
    """
    rows = [r for r in rows if np.isfinite(float(r["mean_auroc"]))]
    if not rows:
        raise EmptyPlotInput("no results to plot")
    models = []
    for r in rows:
        if r["model"] not in models:
            models.append(r["model"])
    sets = sorted({r["feature_set"] for r in rows})
    sy = _scale(0.0, 1.0, HEIGHT - MARGIN, MARGIN / 2 + 20)
    step = (WIDTH - 1.5 * MARGIN) / len(models)
    body = _axes("model", "mean AUROC")
    for v in (0.0, 0.25, 0.5, 0.75, 1.0):
        body.append(f'<text x="{MARGIN - 6}" y="{sy(v) + 4:.2f}" text-anchor="end">{v:.2f}</text>')
    body.append(f'<line x1="{MARGIN}" y1="{sy(0.5):.2f}" x2="{WIDTH - MARGIN / 2}" y2="{sy(0.5):.2f}" '
                f'stroke="#999" stroke-dasharray="4 3"/>')
    for gi, m in enumerate(models):
        cx = MARGIN + step * (gi + 0.5)
        vals = np.array([float(r["mean_auroc"]) for r in rows if r["model"] == m])
        q1, med, q3 = np.percentile(vals, [25, 50, 75])
        body.append(f'<g class="group" data-model="{escape(m)}">')
        body.append(f'<line x1="{cx:.2f}" y1="{sy(vals.min()):.2f}" x2="{cx:.2f}" y2="{sy(vals.max()):.2f}" stroke="#555"/>')
        body.append(f'<rect x="{cx - 14:.2f}" y="{sy(q3):.2f}" width="28" height="{max(sy(q1) - sy(q3), 1):.2f}" '
                    f'fill="#eee" stroke="#555"/>')
        body.append(f'<line x1="{cx - 14:.2f}" y1="{sy(med):.2f}" x2="{cx + 14:.2f}" y2="{sy(med):.2f}" stroke="black"/>')
        for r in rows:
            if r["model"] != m:
                continue
            si = sets.index(r["feature_set"])
            jitter = (si - (len(sets) - 1) / 2) * 3.0
            body.append(f'<circle cx="{cx + jitter:.2f}" cy="{sy(float(r["mean_auroc"])):.2f}" r="3" '
                        f'fill="{PALETTE[si % len(PALETTE)]}"/>')
        body.append("</g>")
        body.append(f'<text x="{cx:.2f}" y="{HEIGHT - MARGIN + 16}" text-anchor="middle">{escape(m)}</text>')
    Path(svg_path).write_text(_svg(body, title))
    _write_csv(Path(csv_path), ["model", "feature_set", "mean_auroc"],
               [(r["model"], r["feature_set"], repr(float(r["mean_auroc"]))) for r in rows])
    return len(models)
