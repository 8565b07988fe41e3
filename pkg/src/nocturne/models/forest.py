"""Class-weighted random forest with Gini splits.

Trees are grown by a compiled kernel that releases the GIL, so a thread
pool can build them concurrently. Each tree owns a seed derived from the
forest seed, and predictions are reduced in tree order, which makes the
output independent of the worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numba
import numpy as np

from ..errors import ConfigurationError, SingleClass

FORMAT_VERSION = 1


class MaxFeatures(str, Enum):
    SQRT = "sqrt"
    ALL = "all"


class ClassWeight(str, Enum):
    BALANCED = "balanced"
    NONE = "none"


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 1000
    max_depth: int | None = None
    min_samples_leaf: int = 1
    max_features: MaxFeatures = MaxFeatures.SQRT
    class_weight: ClassWeight = ClassWeight.BALANCED
    seed: int = 0
    bootstrap: bool = True
    workers: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ConfigurationError("n_trees must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ConfigurationError("max_depth must be >= 1")
        if self.min_samples_leaf < 1:
            raise ConfigurationError("min_samples_leaf must be >= 1")
        object.__setattr__(self, "max_features", MaxFeatures(self.max_features))
        object.__setattr__(self, "class_weight", ClassWeight(self.class_weight))

    def n_candidate_features(self, d: int) -> int:
        if self.max_features is MaxFeatures.ALL:
            return d
        return max(1, math.ceil(math.sqrt(d)))


@dataclass
class Forest:
    """Flattened tree storage.

    Node ``j`` of tree ``t`` lives at ``offsets[t] + j``. ``feature`` is -1
    at leaves; ``value`` holds the weighted positive fraction of the node.
    Child indices are tree-local.
    """

    n_features: int
    offsets: np.ndarray
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    config: ForestConfig = field(default_factory=ForestConfig)

    @property
    def n_trees(self) -> int:
        return self.offsets.size - 1

    def split_features(self) -> np.ndarray:
        """Feature index of every internal node, in storage order."""
        return self.feature[self.feature >= 0]

    def save(self, path) -> None:
        np.savez(
            Path(path), format_version=FORMAT_VERSION, kind="rfc",
            n_features=self.n_features, offsets=self.offsets, feature=self.feature,
            threshold=self.threshold, left=self.left, right=self.right, value=self.value,
        )

    @classmethod
    def load(cls, path) -> "Forest":
        with np.load(Path(path)) as z:
            if int(z["format_version"]) != FORMAT_VERSION or str(z["kind"]) != "rfc":
                raise ConfigurationError(f"{path}: not a version-{FORMAT_VERSION} forest file")
            return cls(int(z["n_features"]), z["offsets"], z["feature"], z["threshold"],
                       z["left"], z["right"], z["value"])


@numba.njit(cache=True, inline="always")
def _next(state):
    # splitmix64; state is a length-1 uint64 array
    state[0] += np.uint64(0x9E3779B97F4A7C15)
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@numba.njit(cache=True, inline="always")
def _randbelow(state, n):
    return np.int64(_next(state) % np.uint64(n))


@numba.njit(cache=True, nogil=True)
def _grow(x, y, mult, cw0, cw1, n_cand, max_depth, min_leaf, seed):
    n, d = x.shape
    rows = np.empty(n, np.int64)
    m = 0
    for i in range(n):
        if mult[i] > 0:
            rows[m] = i
            m += 1
    rows = rows[:m]
    w = np.empty(n)
    for i in range(n):
        w[i] = mult[i] * (cw1 if y[i] else cw0)

    cap = 2 * m + 1
    feat = np.full(cap, -1, np.int64)
    thr = np.zeros(cap)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    val = np.zeros(cap)

    # stack of (node, start, end, depth) over a shared row buffer
    st_node = np.empty(cap, np.int64)
    st_lo = np.empty(cap, np.int64)
    st_hi = np.empty(cap, np.int64)
    st_dep = np.empty(cap, np.int64)
    st_node[0], st_lo[0], st_hi[0], st_dep[0] = 0, 0, m, 0
    top = 1
    n_nodes = 1
    state = np.array([seed], dtype=np.uint64)
    perm = np.arange(d)
    vals = np.empty(m)
    order = np.empty(m, np.int64)

    while top > 0:
        top -= 1
        node, lo, hi, dep = st_node[top], st_lo[top], st_hi[top], st_dep[top]
        wpos = 0.0
        wtot = 0.0
        cnt = 0
        for r in range(lo, hi):
            i = rows[r]
            wtot += w[i]
            cnt += mult[i]
            if y[i]:
                wpos += w[i]
        val[node] = wpos / wtot
        if wpos == 0.0 or wpos == wtot:
            continue
        if max_depth >= 0 and dep >= max_depth:
            continue
        if cnt < 2 * min_leaf:
            continue

        parent_imp = wtot - (wpos * wpos + (wtot - wpos) ** 2) / wtot
        best_f = -1
        best_t = 0.0
        best_score = np.inf
        visited = 0
        for k in range(d):
            # partial Fisher-Yates: draw until n_cand non-constant features seen
            j = k + _randbelow(state, d - k)
            perm[k], perm[j] = perm[j], perm[k]
            f = perm[k]
            size = hi - lo
            for r in range(size):
                vals[r] = x[rows[lo + r], f]
            o = np.argsort(vals[:size], kind="mergesort")
            if vals[o[0]] == vals[o[size - 1]]:
                continue
            visited += 1
            lpos = 0.0
            ltot = 0.0
            lcnt = 0
            for r in range(size - 1):
                i = rows[lo + o[r]]
                ltot += w[i]
                lcnt += mult[i]
                if y[i]:
                    lpos += w[i]
                a = vals[o[r]]
                b = vals[o[r + 1]]
                if a == b:
                    continue
                if lcnt < min_leaf or cnt - lcnt < min_leaf:
                    continue
                rtot = wtot - ltot
                rpos = wpos - lpos
                # weighted child impurity (times total weight)
                score = (ltot - (lpos * lpos + (ltot - lpos) ** 2) / ltot
                         + rtot - (rpos * rpos + (rtot - rpos) ** 2) / rtot)
                if score < best_score - 1e-12 * wtot:
                    best_score = score
                    best_f = f
                    best_t = a + (b - a) / 2.0
                    if best_t >= b:
                        best_t = a
            if visited >= n_cand:
                break
        if best_f < 0 or best_score > parent_imp + 1e-12 * wtot:
            continue

        # partition rows[lo:hi] on the chosen split
        nl = 0
        for r in range(lo, hi):
            if x[rows[r], best_f] <= best_t:
                order[nl] = rows[r]
                nl += 1
        nr = nl
        for r in range(lo, hi):
            if x[rows[r], best_f] > best_t:
                order[nr] = rows[r]
                nr += 1
        for r in range(hi - lo):
            rows[lo + r] = order[r]

        feat[node] = best_f
        thr[node] = best_t
        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        left[node] = lc
        right[node] = rc
        st_node[top], st_lo[top], st_hi[top], st_dep[top] = rc, lo + nl, hi, dep + 1
        top += 1
        st_node[top], st_lo[top], st_hi[top], st_dep[top] = lc, lo, lo + nl, dep + 1
        top += 1

    return feat[:n_nodes], thr[:n_nodes], left[:n_nodes], right[:n_nodes], val[:n_nodes]


@numba.njit(cache=True, nogil=True)
def _predict(x, offsets, feat, thr, left, right, val):
    n = x.shape[0]
    n_trees = offsets.size - 1
    out = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for t in range(n_trees):
            base = offsets[t]
            j = 0
            while feat[base + j] >= 0:
                if x[i, feat[base + j]] <= thr[base + j]:
                    j = left[base + j]
                else:
                    j = right[base + j]
            acc += val[base + j]
        out[i] = acc / n_trees
    return out


def _worker_count(requested: int) -> int:
    if requested and requested > 0:
        return requested
    return os.cpu_count() or 1


def forest_fit(x, y, cfg: ForestConfig = ForestConfig()) -> Forest:
    """Grow ``cfg.n_trees`` bootstrap trees on ``(x, y)``.

    Splits minimise class-weighted Gini impurity over ``max_features``
    randomly drawn candidate features (constant features are skipped and
    do not count towards the budget). With BALANCED weights each class
    carries weight ``N / (2 N_c)``.
    """
    x = np.ascontiguousarray(x, dtype=float)
    y = np.asarray(y, dtype=bool)
    if x.ndim != 2 or x.shape[0] != y.size:
        raise ConfigurationError(f"x shape {x.shape} does not match {y.size} labels")
    n, d = x.shape
    n_pos = int(y.sum())
    if n < 2 or n_pos == 0 or n_pos == n:
        raise SingleClass("forest_fit needs both classes present")
    if not np.isfinite(x).all():
        raise ConfigurationError("forest input contains non-finite values")
    if cfg.class_weight is ClassWeight.BALANCED:
        cw0, cw1 = n / (2.0 * (n - n_pos)), n / (2.0 * n_pos)
    else:
        cw0 = cw1 = 1.0
    n_cand = cfg.n_candidate_features(d)
    max_depth = -1 if cfg.max_depth is None else cfg.max_depth

    children = np.random.SeedSequence(cfg.seed).spawn(cfg.n_trees)

    def grow(t):
        ss = children[t]
        tree_seed = np.uint64(ss.generate_state(1, dtype=np.uint64)[0])
        if cfg.bootstrap:
            draw = np.random.default_rng(ss).integers(0, n, size=n)
            mult = np.bincount(draw, minlength=n).astype(np.int64)
        else:
            mult = np.ones(n, dtype=np.int64)
        return _grow(x, y, mult, cw0, cw1, n_cand, max_depth, cfg.min_samples_leaf, tree_seed)

    workers = min(_worker_count(cfg.workers), cfg.n_trees)
    if workers == 1:
        trees = [grow(t) for t in range(cfg.n_trees)]
    else:
        with ThreadPoolExecutor(workers) as pool:
            trees = list(pool.map(grow, range(cfg.n_trees)))

    sizes = np.array([t[0].size for t in trees])
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    return Forest(
        d, offsets,
        np.concatenate([t[0] for t in trees]),
        np.concatenate([t[1] for t in trees]),
        np.concatenate([t[2] for t in trees]),
        np.concatenate([t[3] for t in trees]),
        np.concatenate([t[4] for t in trees]),
        cfg,
    )


def forest_predict_proba(forest: Forest, x) -> np.ndarray:
    """Mean over trees of the leaf's weighted positive fraction."""
    x = np.ascontiguousarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != forest.n_features:
        raise ConfigurationError(f"expected {forest.n_features} features, got shape {x.shape}")
    return _predict(x, forest.offsets, forest.feature, forest.threshold,
                    forest.left, forest.right, forest.value)
