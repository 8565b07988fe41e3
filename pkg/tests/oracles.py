"""Independent brute-force reference implementations used by the tests."""

from __future__ import annotations

import itertools
import math

import numpy as np


def label_oracle(cgm_t, cgm_v, smbg_t, smbg_v, interval_s, threshold=3.9, run_minutes=15.0, gap_factor=1.5):
    """Enumerate every maximal sub-threshold run and return (label, trigger, evidence_t)."""
    runs = []  # (start index, end index inclusive)
    n = len(cgm_t)
    for i in range(n):
        if not cgm_v[i] < threshold:
            continue
        starts_run = i == 0 or not cgm_v[i - 1] < threshold or cgm_t[i] - cgm_t[i - 1] > gap_factor * interval_s
        if not starts_run:
            continue
        j = i
        while j + 1 < n and cgm_v[j + 1] < threshold and cgm_t[j + 1] - cgm_t[j] <= gap_factor * interval_s:
            j += 1
        runs.append((i, j))
    qualifying = []
    for i, j in runs:
        k = j - i + 1
        if k * interval_s >= run_minutes * 60:
            # The run is credited once its duration is reached; evidence is its first sample.
            qualifying.append(cgm_t[i])
    smbg_hits = [t for t, v in zip(smbg_t, smbg_v) if v < threshold]
    first_cgm = min(qualifying) if qualifying else None
    first_smbg = min(smbg_hits) if smbg_hits else None
    if first_cgm is None and first_smbg is None:
        return False, "NONE", None
    if first_smbg is None or (first_cgm is not None and first_cgm <= first_smbg):
        return True, "CGM_RUN", first_cgm
    return True, "SMBG_POINT", first_smbg


def daily_oracle(values, mask, evening=(36, 48)):
    """Loop-based aggregates with the n - 1 standard deviation convention."""
    obs = [(i, values[i]) for i in range(len(values)) if mask[i]]
    if len(obs) < 2:
        return None
    g = [v for _, v in obs]
    t = [float(i) for i, _ in obs]
    n = len(g)
    mean = math.fsum(g) / n
    sd = math.sqrt(math.fsum((x - mean) ** 2 for x in g) / (n - 1))
    d = [g[i + 1] - g[i] for i in range(n - 1)]
    if len(d) >= 2:
        dm = math.fsum(d) / len(d)
        sd_d = math.sqrt(math.fsum((x - dm) ** 2 for x in d) / (len(d) - 1))
    else:
        sd_d = 0.0
    tm = math.fsum(t) / n
    sxx = math.fsum((x - tm) ** 2 for x in t)
    sxy = math.fsum((x - tm) * (y - mean) for x, y in zip(t, g))
    ev = [values[i] for i in range(evening[0], evening[1]) if mask[i]]
    return {
        "cv": sd / mean if mean != 0 else 0.0,
        "liability_index": math.fsum(x * x for x in d) / 5.0,
        "sd_first_diff": sd_d,
        "daily_min": min(g),
        "evening_peak": max(ev) if ev else 0.0,
        "evening_low": min(ev) if ev else 0.0,
        "linreg_slope": sxy / sxx if sxx else 0.0,
    }


def auroc_pairwise(scores, labels) -> float:
    pos = [s for s, y in zip(scores, labels) if y]
    neg = [s for s, y in zip(scores, labels) if not y]
    total = 0.0
    for p, q in itertools.product(pos, neg):
        total += 1.0 if p > q else 0.5 if p == q else 0.0
    return total / (len(pos) * len(neg))


def point_on_some_segment(x, minority, tol=1e-9) -> bool:
    """Is ``x`` within ``tol`` of a segment between two minority rows (or a minority row)?"""
    m = np.asarray(minority, dtype=float)
    for i in range(len(m)):
        a = m[i]
        if np.max(np.abs(x - a)) <= tol:
            return True
        for j in range(len(m)):
            if i == j:
                continue
            b = m[j]
            ab = b - a
            denom = float(ab @ ab)
            if denom == 0:
                continue
            lam = min(1.0, max(0.0, float((x - a) @ ab) / denom))
            if np.max(np.abs(a + lam * ab - x)) <= tol:
                return True
    return False


def numeric_gradient(f, params: dict, h: float = 1e-5) -> dict:
    """Central differences of the scalar ``f(params)`` for every entry of every tensor."""
    out = {}
    for k, a in params.items():
        g = np.zeros_like(a)
        flat, gflat = a.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            up = f(params)
            flat[i] = old - h
            down = f(params)
            flat[i] = old
            gflat[i] = (up - down) / (2 * h)
        out[k] = g
    return out


def max_relative_error(analytic: dict, numeric: dict, floor: float = 1e-6) -> float:
    """max |a - n| / max(|a|, |n|, floor) over all entries of all tensors."""
    worst = 0.0
    for k in numeric:
        a, n = np.asarray(analytic[k]), numeric[k]
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def min_segment_distance(x, minority) -> float:
    """Smallest Euclidean distance from ``x`` to any segment joining two minority rows."""
    m = np.asarray(minority, dtype=float)
    a = m[:, None, :]
    ab = m[None, :, :] - a
    denom = np.einsum("ijk,ijk->ij", ab, ab)
    t = np.where(denom > 0, np.einsum("ijk,ijk->ij", x - a, ab) / np.where(denom > 0, denom, 1), 0.0)
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[..., None] * ab
    return float(np.sqrt(((closest - x) ** 2).sum(axis=2)).min())
