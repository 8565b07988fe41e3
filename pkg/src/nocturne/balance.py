"""ADASYN oversampling on flattened rows and a two-component PCA."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BalanceImpossible, ConfigurationError
from .features import DesignMatrix


@dataclass(frozen=True)
class AdasynConfig:
    k_neighbors: int = 5
    ratio: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ConfigurationError("k_neighbors must be >= 1")
        if not 0 < self.ratio <= 1:
            raise ConfigurationError("ratio must lie in (0, 1]")


def _allocate(weights: np.ndarray, total: int) -> np.ndarray:
    """Round ``weights * total`` to integers that sum exactly to ``total``.

    Largest-remainder rounding; ties go to the lower index.
    """
    raw = weights * total
    counts = np.floor(raw).astype(int)
    short = total - counts.sum()
    if short > 0:
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def _knn(query: np.ndarray, pool: np.ndarray, k: int, exclude_self: np.ndarray | None) -> np.ndarray:
    """Indices into ``pool`` of the k nearest rows for each query row.

    Distances are Euclidean; ties resolve by pool index. ``exclude_self[i]``
    is the pool index to skip for query ``i`` (or -1).
    """
    d2 = (np.sum(query ** 2, axis=1)[:, None] + np.sum(pool ** 2, axis=1)[None, :]
          - 2.0 * query @ pool.T)
    if exclude_self is not None:
        rows = np.flatnonzero(exclude_self >= 0)
        d2[rows, exclude_self[rows]] = np.inf
    order = np.argsort(d2, axis=1, kind="stable")
    return order[:, :k]


def adasyn(x, y, cfg: AdasynConfig = AdasynConfig()):
    """Adaptive synthetic oversampling of the minority class.

    Returns ``(x_out, y_out, synth_flags)``: the original rows unchanged,
    followed by the synthetic minority rows. Synthetic rows are allocated
    in proportion to how many majority points sit among each minority
    point's ``k`` nearest neighbours and placed on segments towards random
    minority neighbours.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=bool)
    if x.ndim != 2 or x.shape[1] == 0:
        raise ConfigurationError("adasyn needs a 2-D matrix with at least one column")
    n = x.shape[0]
    n_pos = int(y.sum())
    minority_label = n_pos <= n - n_pos
    min_idx = np.flatnonzero(y == minority_label)
    maj_idx = np.flatnonzero(y != minority_label)
    n_min, n_maj = min_idx.size, maj_idx.size
    if n_min < 2:
        raise BalanceImpossible(f"minority class has {n_min} sample(s); need at least 2")
    if n <= cfg.k_neighbors:
        raise ConfigurationError(f"need more than k_neighbors={cfg.k_neighbors} rows, got {n}")

    g_total = int(round(cfg.ratio * n_maj - n_min))
    flags = np.zeros(n, dtype=bool)
    if g_total <= 0:
        return x.copy(), y.copy(), flags

    k = cfg.k_neighbors
    xm = x[min_idx]
    neigh = _knn(xm, x, k, min_idx)
    delta = (y[neigh] != minority_label).sum(axis=1)
    r = delta / k
    r_hat = r / r.sum() if r.sum() > 0 else np.full(n_min, 1.0 / n_min)
    g = _allocate(r_hat, g_total)

    k_min = min(k, n_min - 1)
    min_neigh = _knn(xm, xm, k_min, np.arange(n_min))
    rng = np.random.default_rng(cfg.seed)
    synth = np.empty((g_total, x.shape[1]))
    row = 0
    for i in range(n_min):
        for _ in range(g[i]):
            z = min_neigh[i, rng.integers(k_min)]
            lam = rng.uniform()
            synth[row] = xm[i] + lam * (xm[z] - xm[i])
            row += 1
    x_out = np.concatenate([x, synth])
    y_out = np.concatenate([y, np.full(g_total, minority_label)])
    return x_out, y_out, np.concatenate([flags, np.ones(g_total, dtype=bool)])


@dataclass(frozen=True)
class Layout:
    n_steps: int
    temporal_names: tuple[str, ...]
    static_names: tuple[str, ...]

    @property
    def n_temporal(self) -> int:
        return self.n_steps * len(self.temporal_names)

    def column_name(self, j: int) -> str:
        if j < self.n_temporal:
            step, c = divmod(j, len(self.temporal_names))
            return f"{self.temporal_names[c]}@{step}"
        return self.static_names[j - self.n_temporal]


def flatten_for_balance(dm: DesignMatrix) -> tuple[np.ndarray, Layout]:
    """Row-major flatten of the temporal block followed by the static block."""
    n, t, c = dm.x_temporal.shape
    flat = np.concatenate([dm.x_temporal.reshape(n, t * c), dm.x_static], axis=1)
    return flat, Layout(t, tuple(dm.temporal_names), tuple(dm.static_names))


def unflatten(flat: np.ndarray, layout: Layout) -> tuple[np.ndarray, np.ndarray]:
    n = flat.shape[0]
    c = len(layout.temporal_names)
    xt = flat[:, :layout.n_temporal].reshape(n, layout.n_steps, c)
    xs = flat[:, layout.n_temporal:]
    return xt.copy(), xs.copy()


def balance_design_matrix(dm: DesignMatrix, cfg: AdasynConfig = AdasynConfig()):
    """ADASYN on a design matrix; returns the balanced matrix and synthetic flags.

    Synthetic rows get the key ``("<synthetic>", date of their seed row)``
    and fully-defined static flags.
    """
    flat, layout = flatten_for_balance(dm)
    x, y, flags = adasyn(flat, dm.y, cfg)
    xt, xs = unflatten(x, layout)
    n_new = int(flags.sum())
    keys = list(dm.night_keys) + [("<synthetic>", dm.night_keys[0][1])] * n_new
    defined = np.concatenate([dm.static_defined, np.ones((n_new, xs.shape[1]), dtype=bool)])
    out = DesignMatrix(xt, xs, y, keys, list(dm.temporal_names), list(dm.static_names), defined)
    return out, flags


@dataclass(frozen=True)
class PcaProjection:
    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray
    degenerate: bool = False

    def transform(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) @ self.components.T


def pca2(x) -> tuple[PcaProjection, np.ndarray]:
    """Top-two principal axes of the sample covariance.

    Component signs are fixed so that each row's largest-magnitude entry is
    positive. All-constant data is flagged ``degenerate`` with zero
    variances and the first two coordinate axes as components.
    """
    x = np.asarray(x, dtype=float)
    n, d = x.shape
    if n < 3 or d < 2:
        raise ConfigurationError(f"pca2 needs N >= 3 and D >= 2, got {x.shape}")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = xc.T @ xc / (n - 1)
    scale = float(np.abs(cov).max())
    if scale == 0.0:
        comps = np.eye(2, d)
        return PcaProjection(mean, comps, np.zeros(2), True), xc @ comps.T
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1][:2]
    comps = evecs[:, order].T.copy()
    for i in range(2):
        j = np.argmax(np.abs(comps[i]))
        if comps[i, j] < 0:
            comps[i] = -comps[i]
    var = np.clip(evals[order], 0.0, None)
    return PcaProjection(mean, comps, var, False), xc @ comps.T

