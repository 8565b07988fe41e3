"""Cross-validated experiments, metrics and result tables.

One experiment is a (feature set, model) pair evaluated over several seeds
of stratified k-fold cross-validation. Inside each cell the training rows
are standardised, oversampled with ADASYN, and used to fit the model; the
untouched test fold is then scored.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from datetime import datetime, timezone
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .balance import AdasynConfig, balance_design_matrix, flatten_for_balance
from .channels import GLUCOSE
from .errors import ConfigurationError, NocturneError, StratificationImpossible, UndefinedMetric
from .features import (
    DesignMatrix, FeatureSetName, FeatureSetSpec, Standardizer, build_design_matrix, get_feature_set,
)
from .ingest import RawCohort
from .labeling import label_cohort
from .models.forest import ForestConfig, forest_fit, forest_predict_proba
from .models.nets import NetConfig, NetKind, net_forward
from .models.training import TrainConfig, net_train
from .models.transfer import (
    TransferPlan, params_checksum, pretrain_glucose_lstm, transfer_build, transfer_finetune,
)

log = logging.getLogger(__name__)

DEFAULT_SEEDS = (11, 23, 37)
N_FOLDS = 5


class ModelKind(str, Enum):
    RFC = "rfc"
    LSTM = "lstm"
    CNN = "cnn"
    DAILY_LSTM = "daily-lstm"
    DAILY_CNN = "daily-cnn"
    CONSTANT = "constant"
    ORACLE = "oracle"

    @property
    def display(self) -> str:
        return _DISPLAY[self]


_DISPLAY = {
    ModelKind.RFC: "RFC", ModelKind.LSTM: "LSTM", ModelKind.CNN: "CNN",
    ModelKind.DAILY_LSTM: "DailyLSTM", ModelKind.DAILY_CNN: "DailyCNN",
    ModelKind.CONSTANT: "Constant", ModelKind.ORACLE: "Oracle",
}
TABLE_MODELS = (ModelKind.RFC, ModelKind.LSTM, ModelKind.CNN, ModelKind.DAILY_LSTM, ModelKind.DAILY_CNN)


class ExperimentError(NocturneError):
    """A single cross-validation cell failed; the message names the cell."""


# -- splitting ---------------------------------------------------------------

@dataclass(frozen=True)
class FoldSplit:
    fold_id: int
    train_indices: np.ndarray
    test_indices: np.ndarray


def stratified_kfold(y, k: int = N_FOLDS, seed: int = 0) -> list[FoldSplit]:
    """Shuffle each class with ``seed`` and deal its members round-robin into folds.

    Negatives are shuffled first, then positives, from one generator.
    """
    y = np.asarray(y, dtype=bool)
    if k < 2:
        raise ConfigurationError("k must be >= 2")
    fold_of = np.empty(y.size, dtype=int)
    rng = np.random.default_rng(seed)
    for cls in (False, True):
        idx = np.flatnonzero(y == cls)
        if idx.size < k:
            raise StratificationImpossible(
                f"class {int(cls)} has {idx.size} member(s); {k}-fold stratification needs {k}")
        fold_of[idx[rng.permutation(idx.size)]] = np.arange(idx.size) % k
    return [FoldSplit(f, np.flatnonzero(fold_of != f), np.flatnonzero(fold_of == f)) for f in range(k)]


def grouped_stratified_kfold(y, groups, k: int = N_FOLDS, seed: int = 0) -> list[FoldSplit]:
    """Keep every group (patient) inside one fold while spreading positives.

    Groups are shuffled, ordered by positive count (descending) and dealt
    greedily to the fold with the fewest positives so far, then the fewest
    rows. Each test fold must still contain both classes.
    """
    y = np.asarray(y, dtype=bool)
    groups = np.asarray(groups)
    uniq = np.unique(groups)
    if uniq.size < k:
        raise StratificationImpossible(f"{uniq.size} groups cannot fill {k} folds")
    rng = np.random.default_rng(seed)
    uniq = uniq[rng.permutation(uniq.size)]
    pos = np.array([y[groups == g].sum() for g in uniq])
    size = np.array([(groups == g).sum() for g in uniq])
    order = np.argsort(-pos, kind="stable")
    f_pos = np.zeros(k, dtype=int)
    f_size = np.zeros(k, dtype=int)
    fold_of_group = {}
    for i in order:
        f = min(range(k), key=lambda j: (f_pos[j], f_size[j], j))
        fold_of_group[uniq[i]] = f
        f_pos[f] += pos[i]
        f_size[f] += size[i]
    fold_of = np.array([fold_of_group[g] for g in groups])
    splits = []
    for f in range(k):
        test = np.flatnonzero(fold_of == f)
        if y[test].all() or not y[test].any():
            raise StratificationImpossible(f"fold {f} would hold a single class when grouping by patient")
        splits.append(FoldSplit(f, np.flatnonzero(fold_of != f), test))
    return splits


# -- metrics -----------------------------------------------------------------

def average_ranks(x) -> np.ndarray:
    """1-based ranks with ties sharing the mean of their positions."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    ranks = np.empty(x.size)
    start = 0
    n = x.size
    # boundaries of runs of equal values
    edges = np.flatnonzero(np.diff(xs) != 0) + 1
    for end in list(edges) + [n]:
        ranks[order[start:end]] = (start + 1 + end) / 2.0
        start = end
    return ranks


def auroc(scores, labels) -> float:
    """Mann-Whitney AUROC with average ranks for tied scores."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=bool)
    if s.shape != y.shape:
        raise ConfigurationError("scores and labels differ in length")
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetric("AUROC needs both classes")
    if not np.isfinite(s).all():
        raise ConfigurationError("scores must be finite")
    r_pos = average_ranks(s)[y].sum()
    return float((r_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


@dataclass(frozen=True)
class MetricReport:
    auroc: float
    f1: float
    precision: float
    recall: float
    tp: int
    fp: int
    tn: int
    fn: int
    degenerate: tuple[str, ...] = ()

    def as_row(self) -> dict:
        d = asdict(self)
        d["degenerate"] = ";".join(self.degenerate)
        return d


def f1_at_threshold(scores, labels, threshold: float = 0.5) -> MetricReport:
    """Confusion counts at ``score >= threshold``; zero denominators give 0 and a flag.

    ``auroc`` is filled when both classes are present, else NaN.
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=bool)
    if s.size == 0 or s.shape != y.shape:
        raise ConfigurationError("f1_at_threshold needs equal-length, nonempty inputs")
    pred = s >= threshold
    tp = int((pred & y).sum())
    fp = int((pred & ~y).sum())
    tn = int((~pred & ~y).sum())
    fn = int((~pred & y).sum())
    flags = []
    if tp + fp:
        precision = tp / (tp + fp)
    else:
        precision = 0.0
        flags.append("precision")
    if tp + fn:
        recall = tp / (tp + fn)
    else:
        recall = 0.0
        flags.append("recall")
    if precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
        flags.append("f1")
    auc = auroc(s, y) if 0 < y.sum() < y.size else float("nan")
    return MetricReport(auc, f1, precision, recall, tp, fp, tn, fn, tuple(flags))


# -- experiments -------------------------------------------------------------

@dataclass
class ExperimentResult:
    model: str
    feature_set: str
    seeds: tuple[int, ...]
    cells: list  # seeds x folds of MetricReport
    extras: dict = field(default_factory=dict)

    def _values(self, attr) -> np.ndarray:
        return np.array([getattr(c, attr) for row in self.cells for c in row], dtype=float)

    @property
    def n_cells(self) -> int:
        return sum(len(r) for r in self.cells)

    @property
    def mean_auroc(self) -> float:
        return float(np.mean(self._values("auroc")))

    @property
    def std_auroc(self) -> float:
        return float(np.std(self._values("auroc")))

    @property
    def mean_f1(self) -> float:
        return float(np.mean(self._values("f1")))

    @property
    def std_f1(self) -> float:
        return float(np.std(self._values("f1")))

    def summary(self) -> dict:
        return {"model": self.model, "feature_set": self.feature_set, "n_cells": self.n_cells,
                "mean_auroc": self.mean_auroc, "std_auroc": self.std_auroc,
                "mean_f1": self.mean_f1, "std_f1": self.std_f1}

    def cell_rows(self) -> list[dict]:
        rows = []
        for seed, row in zip(self.seeds, self.cells):
            for fold, c in enumerate(row):
                rows.append({"model": self.model, "feature_set": self.feature_set,
                             "seed": seed, "fold": fold, **c.as_row()})
        return rows

    def to_json(self) -> dict:
        return {**self.summary(), "seeds": list(self.seeds), "cells": self.cell_rows(),
                "extras": self.extras}


@dataclass(frozen=True)
class ModelSettings:
    """Everything needed to fit one model kind inside a cell."""

    forest: ForestConfig = ForestConfig()
    net: NetConfig = NetConfig()
    train: TrainConfig = TrainConfig()


@dataclass
class Cell:
    seed: int
    fold: int
    cell_seed: int
    train: DesignMatrix
    test: DesignMatrix
    synth_flags: np.ndarray
    leaky: bool = False


def cell_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0] & 0x7FFFFFFF)


def prepare_cells(dm: DesignMatrix, seeds=DEFAULT_SEEDS, balance: AdasynConfig = AdasynConfig(),
                  k: int = N_FOLDS, group_by_patient: bool = False,
                  standardize_temporal: bool = True, leaky: bool = False) -> list[list[Cell]]:
    """Split, standardise on training rows and oversample the training part only.

    ``leaky=True`` reproduces the unsafe ordering instead: the whole matrix
    is standardised and oversampled first and the folds are cut from the
    balanced rows, so synthetic points can reach the test folds.
    """
    cells = []
    for seed in seeds:
        if leaky:
            row = _leaky_row(dm, seed, balance, k, standardize_temporal)
            cells.append(row)
            continue
        if group_by_patient:
            splits = grouped_stratified_kfold(dm.y, dm.patient_ids, k, seed)
        else:
            splits = stratified_kfold(dm.y, k, seed)
        row = []
        for sp in splits:
            cs = cell_seed(seed, sp.fold_id)
            try:
                scaler = Standardizer.fit(dm, sp.train_indices)
                train = scaler.apply(dm.subset(sp.train_indices), standardize_temporal)
                test = scaler.apply(dm.subset(sp.test_indices), standardize_temporal)
                cfg = AdasynConfig(balance.k_neighbors, balance.ratio, cs)
                balanced, flags = balance_design_matrix(train, cfg)
            except NocturneError as exc:
                raise ExperimentError(f"seed {seed} fold {sp.fold_id}: {exc}") from exc
            row.append(Cell(seed, sp.fold_id, cs, balanced, test, flags))
        cells.append(row)
    return cells


def _leaky_row(dm, seed, balance, k, standardize_temporal) -> list[Cell]:
    try:
        scaled = Standardizer.fit(dm).apply(dm, standardize_temporal)
        cfg = AdasynConfig(balance.k_neighbors, balance.ratio, cell_seed(seed, k))
        balanced, flags = balance_design_matrix(scaled, cfg)
        splits = stratified_kfold(balanced.y, k, seed)
    except NocturneError as exc:
        raise ExperimentError(f"seed {seed} (leaky): {exc}") from exc
    return [Cell(seed, sp.fold_id, cell_seed(seed, sp.fold_id), balanced.subset(sp.train_indices),
                 balanced.subset(sp.test_indices), flags[sp.test_indices], leaky=True)
            for sp in splits]


def fit_and_score(kind: ModelKind, train: DesignMatrix, test: DesignMatrix, settings: ModelSettings,
                  seed: int) -> np.ndarray:
    """Fit ``kind`` on ``train`` and return positive-class scores for ``test``."""
    kind = ModelKind(kind)
    if kind is ModelKind.CONSTANT:
        return np.full(len(test), 0.5)
    if kind is ModelKind.ORACLE:
        return test.y.astype(float)
    if kind is ModelKind.RFC:
        fc = settings.forest
        cfg = ForestConfig(fc.n_trees, fc.max_depth, fc.min_samples_leaf, fc.max_features,
                           fc.class_weight, seed, fc.bootstrap, fc.workers)
        forest = forest_fit(flatten_for_balance(train)[0], train.y, cfg)
        return forest_predict_proba(forest, flatten_for_balance(test)[0])
    nc = settings.net
    cfg = NetConfig(NetKind(kind.value), nc.hidden, nc.conv_filters, nc.conv_kernel, nc.dense,
                    nc.l2_lambda, nc.learning_rate, nc.batch_size)
    tc = settings.train
    tc = TrainConfig(tc.max_epochs, tc.patience, tc.inner_val_fraction, seed, tc.gamma)
    params, _ = net_train(cfg, train.x_temporal, train.x_static, train.y, tc)
    return net_forward(cfg, params, test.x_temporal, test.x_static)


def _score_cell(args) -> MetricReport:
    kind, cell, settings, label = args
    try:
        scores = fit_and_score(kind, cell.train, cell.test, settings, cell.cell_seed)
    except NocturneError as exc:
        raise ExperimentError(f"{label} seed {cell.seed} fold {cell.fold}: {exc}") from exc
    return f1_at_threshold(scores, cell.test.y)


def _map(fn, items, workers: int):
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def run_on_cells(cells, kind, feature_set: str, settings: ModelSettings = ModelSettings(),
                 workers: int = 1) -> ExperimentResult:
    kind = ModelKind(kind)
    label = f"{kind.value}/{feature_set}"
    flat = [(kind, c, settings, label) for row in cells for c in row]
    for c in (c for row in cells for c in row):
        if not c.leaky and any(k[0] == "<synthetic>" for k in c.test.night_keys):
            raise ExperimentError(f"{label}: synthetic rows leaked into a test fold")
    reports = _map(_score_cell, flat, workers)
    n_folds = len(cells[0])
    grid = [reports[i * n_folds:(i + 1) * n_folds] for i in range(len(cells))]
    seeds = tuple(row[0].seed for row in cells)
    return ExperimentResult(kind.value, feature_set, seeds, grid)


def run_experiment_on_matrix(dm: DesignMatrix, kind, feature_set: str, seeds=DEFAULT_SEEDS,
                             balance: AdasynConfig = AdasynConfig(),
                             settings: ModelSettings = ModelSettings(),
                             group_by_patient: bool = False, workers: int = 1,
                             leaky: bool = False) -> ExperimentResult:
    cells = prepare_cells(dm, seeds, balance, group_by_patient=group_by_patient, leaky=leaky)
    return run_on_cells(cells, kind, feature_set, settings, workers)


def run_experiment(cohort: RawCohort, feature_set, model_kind, seeds=DEFAULT_SEEDS,
                   balance: AdasynConfig = AdasynConfig(), settings: ModelSettings = ModelSettings(),
                   labels=None, group_by_patient: bool = False, workers: int = 1,
                   leaky: bool = False) -> ExperimentResult:
    """Label the cohort (unless ``labels`` is given), build the feature set and cross-validate."""
    spec = get_feature_set(feature_set) if not isinstance(feature_set, FeatureSetSpec) else feature_set
    if labels is None:
        labels = label_cohort(cohort)
    dm = build_design_matrix(cohort, labels, spec)
    return run_experiment_on_matrix(dm, model_kind, spec.label, seeds, balance, settings,
                                    group_by_patient, workers, leaky)


# -- native train/test split (no cross-validation) ---------------------------

def test_start_dates(test_start_ts: dict) -> dict:
    """Turn first-test-sample timestamps (local seconds) into first test dates."""
    return {pid: datetime.fromtimestamp(t, tz=timezone.utc).date() for pid, t in test_start_ts.items()}


def native_split(dm: DesignMatrix, test_start: dict | None = None, test_fraction: float = 0.2):
    """Per-patient chronological split.

    With ``test_start`` (patient id -> first test date, or a local
    timestamp) the split follows it; otherwise the last ``test_fraction``
    of each patient's nights form the test part.
    """
    if test_start and any(isinstance(v, (int, np.integer)) for v in test_start.values()):
        test_start = test_start_dates(test_start)
    train, test = [], []
    by_patient: dict = {}
    for i, (pid, d) in enumerate(dm.night_keys):
        by_patient.setdefault(pid, []).append((d, i))
    for pid, items in sorted(by_patient.items()):
        items.sort()
        if test_start is not None and pid in test_start:
            for d, i in items:
                (test if d >= test_start[pid] else train).append(i)
        else:
            n_test = int(round(test_fraction * len(items)))
            n_test = min(max(n_test, 1), len(items) - 1) if len(items) > 1 else 0
            train.extend(i for _, i in items[:len(items) - n_test])
            test.extend(i for _, i in items[len(items) - n_test:])
    return np.array(sorted(train), dtype=int), np.array(sorted(test), dtype=int)


def run_native_split(dm: DesignMatrix, kind, feature_set: str, seeds=DEFAULT_SEEDS,
                     balance: AdasynConfig = AdasynConfig(), settings: ModelSettings = ModelSettings(),
                     test_start: dict | None = None) -> ExperimentResult:
    """One fit per seed on the native training part, scored on the native test part."""
    tr, te = native_split(dm, test_start)
    scaler = Standardizer.fit(dm, tr)
    train, test = scaler.apply(dm.subset(tr)), scaler.apply(dm.subset(te))
    kind = ModelKind(kind)
    cells = []
    for seed in seeds:
        cs = cell_seed(seed, 0)
        balanced, _ = balance_design_matrix(train, AdasynConfig(balance.k_neighbors, balance.ratio, cs))
        scores = fit_and_score(kind, balanced, test, settings, cs)
        cells.append([f1_at_threshold(scores, test.y)])
    return ExperimentResult(kind.value, feature_set, tuple(seeds), cells)


# -- transfer ----------------------------------------------------------------

GLUCOSE_ONLY = FeatureSetSpec("GLUCOSE_ONLY", (GLUCOSE,), ())


def pretrain_on_cohort(cohort: RawCohort, seed: int, tc: TrainConfig = TrainConfig(),
                       net: NetConfig = NetConfig(), test_start: dict | None = None):
    """Glucose-only LSTM on the native training split of ``cohort``.

    Returns the parameters and the AUROC on the native test split (NaN if
    that split holds a single class).
    """
    labels = label_cohort(cohort)
    dm = build_design_matrix(cohort, labels, GLUCOSE_ONLY)
    tr, te = native_split(dm, test_start)
    scaler = Standardizer.fit(dm, tr)
    train, test = scaler.apply(dm.subset(tr)), scaler.apply(dm.subset(te))
    cfg = NetConfig(NetKind.LSTM, net.hidden, net.conv_filters, net.conv_kernel, net.dense,
                    net.l2_lambda, net.learning_rate, net.batch_size)
    tcs = TrainConfig(tc.max_epochs, tc.patience, tc.inner_val_fraction, seed, tc.gamma)
    params, hist = pretrain_glucose_lstm(train.x_temporal, train.y, cfg, tcs)
    p = net_forward(cfg, params, test.x_temporal, test.x_static)
    auc = auroc(p, test.y) if 0 < test.y.sum() < test.y.size else float("nan")
    return params, auc


def run_transfer(ohio_like: RawCohort, inhouse_like: RawCohort, plan: TransferPlan = TransferPlan(),
                 seeds=DEFAULT_SEEDS, tc: TrainConfig = TrainConfig(), net: NetConfig = NetConfig(),
                 balance: AdasynConfig = AdasynConfig(), test_start: dict | None = None,
                 inhouse_labels=None) -> ExperimentResult:
    """Pretrain per seed on ``ohio_like``, then fine-tune under in-house cross-validation.

    ``extras`` records the frozen checksum before and after every
    fine-tuning, the pretraining AUROC per seed, and the number of cells
    whose frozen tensors changed (always 0 when the contract holds).
    """
    spec = FeatureSetSpec("TRANSFER", tuple(plan.head_features), ())
    labels = inhouse_labels if inhouse_labels is not None else label_cohort(inhouse_like)
    dm = build_design_matrix(inhouse_like, labels, spec)
    cells = prepare_cells(dm, seeds, balance)
    grid, checks, pre_auc = [], [], {}
    for seed, row in zip(seeds, cells):
        pretrained, pre_auc[seed] = pretrain_on_cohort(ohio_like, seed, tc, net, test_start)
        out = []
        for cell in row:
            model = transfer_build(pretrained, plan, cell.train.temporal_names, seed=cell.cell_seed)
            before = model.frozen_checksum()
            ftc = TrainConfig(tc.max_epochs, tc.patience, tc.inner_val_fraction, cell.cell_seed, tc.gamma)
            try:
                tuned = transfer_finetune(model, cell.train.x_temporal, cell.train.y, ftc)
            except NocturneError as exc:
                raise ExperimentError(f"transfer seed {seed} fold {cell.fold}: {exc}") from exc
            after = tuned.frozen_checksum()
            checks.append({"seed": seed, "fold": cell.fold, "before": before, "after": after,
                           "pretrained": params_checksum(pretrained, ("lstm_W", "lstm_U", "lstm_b"))})
            out.append(f1_at_threshold(tuned.predict_proba(cell.test.x_temporal), cell.test.y))
        grid.append(out)
    extras = {
        "frozen_checksums": checks,
        "frozen_changed": sum(c["before"] != c["after"] for c in checks),
        "pretrain_auroc": {str(k): v for k, v in pre_auc.items()},
        "branch": plan.branch,
    }
    return ExperimentResult("transfer-lstm", FeatureSetName.REDUCED.value, tuple(seeds), grid, extras)


# -- reporting ---------------------------------------------------------------

SUMMARY_FIELDS = ["feature_set", "model", "n_cells", "mean_auroc", "std_auroc", "mean_f1", "std_f1"]
CELL_FIELDS = ["model", "feature_set", "seed", "fold", "auroc", "f1", "precision", "recall",
               "tp", "fp", "tn", "fn", "degenerate"]


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _csv_text(fields, rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r[k]) for k in fields})
    return buf.getvalue()


def summary_csv(results) -> str:
    return _csv_text(SUMMARY_FIELDS, [r.summary() for r in results])


def cells_csv(results) -> str:
    return _csv_text(CELL_FIELDS, [row for r in results for row in r.cell_rows()])


def write_results(results, out_dir, stem: str = "results") -> list[Path]:
    """Write ``<stem>_table.csv``, ``<stem>_cells.csv``, ``<stem>.json`` and ``<stem>_table.txt``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / f"{stem}_table.csv", out / f"{stem}_cells.csv", out / f"{stem}.json",
             out / f"{stem}_table.txt"]
    paths[0].write_text(summary_csv(results))
    paths[1].write_text(cells_csv(results))
    paths[2].write_text(json.dumps([r.to_json() for r in results], indent=1, sort_keys=True) + "\n")
    paths[3].write_text(render_table(results))
    return paths


def read_summary_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for k in ("mean_auroc", "std_auroc", "mean_f1", "std_f1"):
            r[k] = float(r[k])
        r["n_cells"] = int(r["n_cells"])
    return rows


def render_table(results, metric: str = "auroc") -> str:
    """Feature sets as rows and models as columns, cells ``mean ± std``."""
    rows = [r.summary() if isinstance(r, ExperimentResult) else r for r in results]
    models = []
    sets = []
    for r in rows:
        if r["model"] not in models:
            models.append(r["model"])
        if r["feature_set"] not in sets:
            sets.append(r["feature_set"])
    lookup = {(r["feature_set"], r["model"]): r for r in rows}

    def head(m):
        try:
            return ModelKind(m).display
        except ValueError:
            return m

    header = ["Feature set"] + [head(m) for m in models]
    body = []
    for s in sets:
        line = [s]
        for m in models:
            r = lookup.get((s, m))
            line.append("N/A" if r is None else f"{r['mean_' + metric]:.2f} ± {r['std_' + metric]:.2f}")
        body.append(line)
    widths = [max(len(x[i]) for x in [header] + body) for i in range(len(header))]
    fmt = lambda cols: "  ".join(c.ljust(w) for c, w in zip(cols, widths)).rstrip()
    lines = [fmt(header), fmt(["-" * w for w in widths])] + [fmt(b) for b in body]
    return "\n".join(lines) + "\n"
