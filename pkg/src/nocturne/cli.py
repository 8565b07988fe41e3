"""``nocturne`` command-line interface.

Every artifact-producing command writes ``<command>.manifest.json`` next to
its outputs, recording the command line, the configuration hash, seeds,
component versions and the output paths.

Exit codes: 0 success, 1 stage failure, 2 invalid configuration or usage.
"""

from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
import time
from dataclasses import replace
from datetime import date, datetime, time as dtime, timezone
from pathlib import Path

import numba
import numpy as np

from . import __version__
from .balance import AdasynConfig, balance_design_matrix, flatten_for_balance, pca2
from .channels import GLUCOSE, HYPO_EVENT, load_ranges
from .config import SchemaError, config_hash, load_config, resolve_path
from .errors import ConfigurationError, NocturneError
from .evaluation import (
    TABLE_MODELS, ExperimentResult, ModelKind, ModelSettings, prepare_cells,
    read_summary_csv, render_table, run_native_split, run_on_cells, run_transfer,
    write_results,
)
from .features import (
    DesignMatrix, FeatureSetSpec, Standardizer, build_design_matrix, dump_spec, get_feature_set,
)
from .ingest import (
    RawCohort, load_ohio_directory, parse_inhouse_bundle, parse_ohio_xml, write_inhouse_bundle,
    write_ohio_xml,
)
from .labeling import label_cohort, night_dates, read_labels, write_labels
from .models.forest import ForestConfig, forest_fit
from .models.nets import NetConfig, NetKind, save_params
from .models.training import TrainConfig, net_train
from .models.transfer import TransferPlan
from .plots import EmptyPlotInput, auroc_distribution, pca_scatter
from .preprocess import Imputation
from .synthgen import generate_cohort, get_profile

log = logging.getLogger("nocturne")

OHIO_FEATURES = FeatureSetSpec(
    "OHIO", (GLUCOSE, HYPO_EVENT, "basis_gsr", "basal", "basis_skin_temperature"), ())


class StageFailure(Exception):
    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        super().__init__(f"stage '{stage}' failed: {cause}")


# -- shared helpers ----------------------------------------------------------

def _versions() -> dict:
    return {"nocturne": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "numba": numba.__version__}


def _relative(path: Path, base: Path) -> str:
    try:
        return str(path.resolve().relative_to(base.resolve()))
    except ValueError:
        return str(path)


def write_manifest(out_dir: Path, command: str, argv, cfg: dict, seeds, outputs) -> Path:
    path = out_dir / f"{command}.manifest.json"
    doc = {
        "command_line": "nocturne " + " ".join(argv),
        "config_hash": config_hash({k: v for k, v in cfg.items() if k not in ("out", "workers")}),
        "seeds": [int(s) for s in seeds],
        "versions": _versions(),
        "outputs": sorted(_relative(Path(p), out_dir) for p in outputs),
    }
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return path


def _settings(cfg: dict) -> ModelSettings:
    f, n, t = cfg["forest"], cfg["net"], cfg["train"]
    return ModelSettings(
        ForestConfig(n_trees=f["n_trees"], max_depth=f["max_depth"], min_samples_leaf=f["min_samples_leaf"],
                     max_features=f["max_features"], class_weight=f["class_weight"], workers=cfg["workers"]),
        NetConfig(hidden=n["hidden"], conv_filters=n["conv_filters"], conv_kernel=n["conv_kernel"],
                  dense=n["dense"], l2_lambda=n["l2_lambda"], learning_rate=n["learning_rate"],
                  batch_size=n["batch_size"]),
        TrainConfig(max_epochs=t["max_epochs"], patience=t["patience"],
                    inner_val_fraction=t["inner_val_fraction"], gamma=t["gamma"]),
    )


def _balance_cfg(cfg: dict) -> AdasynConfig:
    return AdasynConfig(cfg["balance"]["k_neighbors"], cfg["balance"]["ratio"])


def _ranges(cfg: dict):
    path = cfg["preprocess"]["ranges"]
    return load_ranges(path) if path else None


def _load_cohort(path: str) -> tuple[RawCohort, dict | None]:
    """A CSV bundle directory, an Ohio directory of split XML files, or one Ohio XML file."""
    p = Path(path)
    if p.is_dir() and (p / "glucose.csv").exists():
        return parse_inhouse_bundle(p)[0], None
    if p.is_dir():
        cohort, test_start, _ = load_ohio_directory(p)
        return cohort, test_start
    return parse_ohio_xml(p)[0], None


def _labels(cohort: RawCohort, cfg: dict, labels_path: str | None = None):
    if labels_path:
        return read_labels(labels_path)
    return label_cohort(cohort, cfg["labeling"]["threshold"], cfg["labeling"]["run_minutes"])


def _out_file(out: Path, default_name: str) -> tuple[Path, Path]:
    """Resolve ``--out`` as either a directory or a file path with a suffix."""
    if out.suffix:
        out.parent.mkdir(parents=True, exist_ok=True)
        return out.parent, out
    out.mkdir(parents=True, exist_ok=True)
    return out, out / default_name


def _split_ohio_files(cohort: RawCohort, out_dir: Path, test_fraction: float = 0.2) -> list[Path]:
    """Write each patient as ``<id>-train.xml`` / ``<id>-test.xml``; the last nights go to test."""
    paths = []
    for pid in cohort.patients():
        dates = night_dates(cohort, pid)
        n_test = max(1, int(round(test_fraction * len(dates)))) if len(dates) > 1 else 0
        cut_date = dates[len(dates) - n_test] if n_test else date.max
        cut = None if cut_date == date.max else int(
            datetime.combine(cut_date, dtime(), tzinfo=timezone.utc).timestamp())
        for part, keep in (("train", lambda t: cut is None or t < cut), ("test", lambda t: cut is not None and t >= cut)):
            sub = RawCohort(provenance=cohort.provenance)
            sub.glucose = [s for s in cohort.glucose if s.patient_id == pid and keep(s.t_local)]
            sub.vitals = [s for s in cohort.vitals if s.patient_id == pid and keep(s.t_local)]
            sub.meta = {pid: cohort.meta[pid]} if pid in cohort.meta else {}
            if part == "test" and not sub.glucose:
                continue
            paths.append(write_ohio_xml(sub, pid, out_dir / f"{pid}-{part}.xml"))
    return paths


# -- commands ----------------------------------------------------------------

def cmd_generate(args, cfg) -> list[Path]:
    overrides = {"seed": cfg["seed"], "nh_signal_strength": cfg["cohort"]["nh_signal_strength"]}
    for k in ("n_patients", "nights_per_patient"):
        if cfg["cohort"][k] is not None:
            overrides[k] = cfg["cohort"][k]
    cohort = generate_cohort(get_profile(args.profile or cfg["cohort"]["profile"], **overrides))
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    if args.format == "ohio-xml":
        return _split_ohio_files(cohort, out)
    write_inhouse_bundle(cohort, out)
    return [out / n for n in ("glucose.csv", "vitals.csv", "logbook.csv", "metadata.csv")]


def cmd_ingest(args, cfg) -> list[Path]:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    if args.inhouse:
        cohort, report = parse_inhouse_bundle(args.inhouse)
    else:
        p = Path(args.ohio)
        if p.is_dir():
            cohort, _, report = load_ohio_directory(p)
        else:
            cohort, report = parse_ohio_xml(p)
    bundle = out / "bundle"
    write_inhouse_bundle(cohort, bundle)
    rep = out / "parse_report.json"
    rep.write_text(json.dumps({
        "rows_read": report.rows_read, "rows_rejected": report.rows_rejected,
        "reasons": {k.value if hasattr(k, "value") else str(k): v for k, v in report.reasons().items()},
        "warnings": report.warnings,
    }, indent=1, sort_keys=True) + "\n")
    print(f"read {report.rows_read} rows, rejected {report.rows_rejected}")
    return [bundle, rep]


def cmd_label(args, cfg) -> list[Path]:
    cohort, _ = _load_cohort(args.bundle)
    _, path = _out_file(Path(cfg["out"]), "labels.csv")
    labels = _labels(cohort, cfg)
    write_labels(labels, path)
    print(f"{len(labels)} nights, {sum(l.label for l in labels)} positive")
    return [path]


def cmd_features(args, cfg) -> list[Path]:
    if args.dump_spec:
        print(dump_spec(args.dump_spec))
        return []
    if not args.bundle or not args.features:
        raise ConfigurationError("features needs --bundle and --features (or --dump-spec)")
    cohort, _ = _load_cohort(args.bundle)
    spec = get_feature_set(args.features)
    labels = _labels(cohort, cfg, args.labels)
    dm = build_design_matrix(cohort, labels, spec, _ranges(cfg),
                             Imputation.parse(cfg["preprocess"]["imputation"]),
                             personalization=args.personalization)
    if args.with_defined_mask:
        dm = dm.with_defined_mask()
    _, path = _out_file(Path(cfg["out"]), f"matrix_{spec.label}.npz")
    dm.save(path)
    return [path]


def cmd_balance(args, cfg) -> list[Path]:
    dm = DesignMatrix.load(args.input)
    scaled = Standardizer.fit(dm).apply(dm)
    ac = AdasynConfig(args.k if args.k is not None else cfg["balance"]["k_neighbors"],
                      args.ratio if args.ratio is not None else cfg["balance"]["ratio"], cfg["seed"])
    balanced, flags = balance_design_matrix(scaled, ac)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    bpath = out / "balanced.npz"
    balanced.save(bpath)
    _, coords = pca2(flatten_for_balance(balanced)[0])
    svg, csvp = out / "pca_scatter.svg", out / "pca_scatter.csv"
    n = pca_scatter(coords, balanced.y, flags, svg, csvp, "Rows before and after ADASYN (PCA)")
    print(f"{len(dm)} rows -> {len(balanced)} rows ({int(flags.sum())} synthetic); plotted {n} points")
    return [bpath, svg, csvp]


def _matrix_from_args(args, cfg) -> tuple[DesignMatrix, str]:
    if args.matrix:
        dm = DesignMatrix.load(args.matrix)
        return dm, args.features or Path(args.matrix).stem.removeprefix("matrix_")
    if not args.bundle:
        raise ConfigurationError("give --matrix or --bundle")
    cohort, _ = _load_cohort(args.bundle)
    spec = get_feature_set(args.features)
    labels = _labels(cohort, cfg, getattr(args, "labels", None))
    dm = build_design_matrix(cohort, labels, spec, _ranges(cfg), Imputation.parse(cfg["preprocess"]["imputation"]))
    return dm, spec.label


def cmd_train(args, cfg) -> list[Path]:
    dm, fs = _matrix_from_args(args, cfg)
    scaler = Standardizer.fit(dm)
    balanced, _ = balance_design_matrix(scaler.apply(dm), replace(_balance_cfg(cfg), seed=cfg["seed"]))
    settings = _settings(cfg)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"model_{args.model}_{fs}.npz"
    kind = ModelKind(args.model)
    scale = {"temporal_mean": scaler.temporal_mean, "temporal_std": scaler.temporal_std,
             "static_mean": scaler.static_mean, "static_std": scaler.static_std}
    if kind is ModelKind.RFC:
        fc = replace(settings.forest, seed=cfg["seed"])
        forest = forest_fit(flatten_for_balance(balanced)[0], balanced.y, fc)
        forest.save(path)
        np.savez(out / f"scaler_{args.model}_{fs}.npz", **scale)
        return [path, out / f"scaler_{args.model}_{fs}.npz"]
    net = replace(settings.net, kind=NetKind(kind.value))
    tc = replace(settings.train, seed=cfg["seed"])
    params, hist = net_train(net, balanced.x_temporal, balanced.x_static, balanced.y, tc)
    meta = {"config": net.to_dict(), "feature_set": fs, "best_epoch": hist.best_epoch,
            "temporal_names": list(dm.temporal_names), "static_names": list(dm.static_names)}
    save_params(path, kind.value, {**params, **{"scaler_" + k: v for k, v in scale.items()}}, meta)
    print(f"best epoch {hist.best_epoch} of {hist.stopped_epoch}")
    return [path]


def _experiments(dm: DesignMatrix, fs: str, models, cfg: dict, native: bool = False,
                 test_start=None) -> list[ExperimentResult]:
    settings = _settings(cfg)
    seeds = cfg["experiment"]["seeds"]
    if native:
        return [run_native_split(dm, m, fs, seeds, _balance_cfg(cfg), settings, test_start) for m in models]
    cells = prepare_cells(dm, seeds, _balance_cfg(cfg), cfg["experiment"]["folds"],
                          cfg["experiment"]["group_by_patient"], leaky=cfg["experiment"]["leaky"])
    return [run_on_cells(cells, m, fs, settings, cfg["workers"]) for m in models]


def cmd_evaluate(args, cfg) -> list[Path]:
    dm, fs = _matrix_from_args(args, cfg)
    models = args.models.split(",") if args.models else cfg["experiment"]["models"]
    results = _experiments(dm, fs, models, cfg)
    paths = write_results(results, Path(cfg["out"]), "results")
    print(render_table(results), end="")
    return paths


def _transfer_source(cfg: dict, ohio_arg: str | None):
    tr = cfg["transfer"]
    path = ohio_arg or (tr["path"] if tr["source"] == "ohio" else "")
    if path:
        return _load_cohort(path)
    return generate_cohort(get_profile(tr["profile"], seed=cfg["seed"])), None


def _run_transfer(inhouse: RawCohort, labels, cfg: dict, ohio_arg: str | None = None):
    ohio, test_start = _transfer_source(cfg, ohio_arg)
    settings = _settings(cfg)
    plan = TransferPlan(branch=cfg["transfer"]["branch"], l2_lambda=cfg["net"]["l2_lambda"],
                        learning_rate=cfg["net"]["learning_rate"], batch_size=cfg["net"]["batch_size"])
    return run_transfer(ohio, inhouse, plan, cfg["experiment"]["seeds"], settings.train, settings.net,
                        _balance_cfg(cfg), test_start, labels)


def cmd_transfer(args, cfg) -> list[Path]:
    cohort, _ = _load_cohort(args.bundle)
    labels = _labels(cohort, cfg, args.labels)
    result = _run_transfer(cohort, labels, cfg, args.ohio)
    results = [result]
    if cfg["transfer"]["compare_scratch"]:
        dm = build_design_matrix(cohort, labels, get_feature_set("REDUCED"), _ranges(cfg),
                                 Imputation.parse(cfg["preprocess"]["imputation"]))
        results += _experiments(dm, "REDUCED", [ModelKind.LSTM.value], cfg)
    paths = write_results(results, Path(cfg["out"]), "transfer")
    print(render_table(results), end="")
    print(f"frozen tensors changed in {result.extras['frozen_changed']} of {result.n_cells} cells")
    return paths


def cmd_plot(args, cfg) -> list[Path]:
    src = Path(args.results)
    if not src.exists() or src.stat().st_size == 0:
        raise EmptyPlotInput(f"{src} is missing or empty")
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "pca-scatter":
        with open(src) as fh:
            rows = [line.rstrip("\n").split(",") for line in fh][1:]
        if not rows:
            raise EmptyPlotInput(f"{src} has no rows")
        arr = np.array([[float(r[0]), float(r[1])] for r in rows])
        lab = np.array([r[2] == "1" for r in rows])
        syn = np.array([r[3] == "1" for r in rows])
        svg, csvp = out / "pca_scatter.svg", out / "pca_scatter_points.csv"
        pca_scatter(arr, lab, syn, svg, csvp)
    else:
        rows = read_summary_csv(src)
        svg, csvp = out / "auroc_distribution.svg", out / "auroc_distribution.csv"
        auroc_distribution(rows, svg, csvp)
    return [svg, csvp]


def cmd_pipeline(args, cfg) -> list[Path]:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    outputs: list[Path] = []
    ex = cfg["experiment"]

    def stage(name, fn):
        t0 = time.perf_counter()
        try:
            value = fn()
        except (NocturneError, OSError, ValueError) as exc:
            raise StageFailure(name, exc) from exc
        log.info("stage %s done in %.1fs", name, time.perf_counter() - t0)
        return value

    def cohort_stage():
        src = cfg["cohort"]
        if src["source"] == "synthetic":
            overrides = {"seed": cfg["seed"], "nh_signal_strength": src["nh_signal_strength"]}
            for k in ("n_patients", "nights_per_patient"):
                if src[k] is not None:
                    overrides[k] = src[k]
            profile = get_profile(src["profile"], **overrides)
            cohort = generate_cohort(profile)
            bundle = write_inhouse_bundle(cohort, out / "cohort")
            outputs.append(bundle)
            return cohort, None, profile.name == "ohio-like"
        cohort, test_start = _load_cohort(src["path"])
        return cohort, test_start, src["source"] == "ohio"

    cohort, test_start, native = stage("ingest", cohort_stage)
    labels = stage("label", lambda: _labels(cohort, cfg))
    write_labels(labels, out / "labels.csv")
    outputs.append(out / "labels.csv")

    specs = [OHIO_FEATURES] if native else [get_feature_set(n) for n in ex["feature_sets"]]
    ranges = stage("preprocess", lambda: _ranges(cfg))
    imputation = Imputation.parse(cfg["preprocess"]["imputation"])
    results, baselines = [], []
    for spec in specs:
        dm = stage(f"features:{spec.label}",
                   lambda: build_design_matrix(cohort, labels, spec, ranges, imputation))
        results += stage(f"evaluate:{spec.label}",
                         lambda: _experiments(dm, spec.label, ex["models"], cfg, native, test_start))
        if ex["baselines"]:
            baselines += stage(f"baselines:{spec.label}",
                               lambda: _experiments(dm, spec.label, ["constant", "oracle"], cfg, native,
                                                    test_start))
    outputs += write_results(results, out, "results")
    if baselines:
        outputs += write_results(baselines, out, "baselines")
    f1_table = out / "results_f1_table.txt"
    f1_table.write_text(render_table(results, "f1"))
    outputs.append(f1_table)
    svg, csvp = out / "auroc_distribution.svg", out / "auroc_distribution.csv"
    try:
        auroc_distribution([r.summary() for r in results], svg, csvp)
        outputs += [svg, csvp]
    except EmptyPlotInput:
        log.warning("every AUROC is undefined; skipping the distribution plot")

    if cfg["transfer"]["enabled"] and not native:
        tr = stage("transfer", lambda: _run_transfer(cohort, labels, cfg))
        compare = [tr]
        scratch = [r for r in results if r.model == ModelKind.LSTM.value and r.feature_set == "REDUCED"]
        if cfg["transfer"]["compare_scratch"]:
            if not scratch:
                dm = stage("features:REDUCED", lambda: build_design_matrix(
                    cohort, labels, get_feature_set("REDUCED"), ranges, imputation))
                scratch = stage("evaluate:REDUCED", lambda: _experiments(dm, "REDUCED", ["lstm"], cfg))
            compare += scratch
        outputs += write_results(compare, out, "transfer")
    print(render_table(results), end="")
    return outputs


# -- argument parsing --------------------------------------------------------

def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--seed", type=int, default=d, help="base seed (overrides the config)")
    p.add_argument("--config", default=d, help=f"TOML config file (fallback: ${'NOCTURNE_CONFIG'})")
    p.add_argument("--workers", type=int, default=d, help="parallel worker count")
    p.add_argument("--out", default=d, help="output directory (or file for single-file commands)")
    p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS if suppress else False)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nocturne", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)

    def add(name, help_text):
        return sub.add_parser(name, parents=[common], help=help_text)

    p = add("generate", "write a seeded synthetic cohort")
    p.add_argument("--profile", choices=["inhouse-like", "ohio-like"])
    p.add_argument("--signal", type=float, help="nh_signal_strength")
    p.add_argument("--patients", type=int)
    p.add_argument("--nights", type=int)
    p.add_argument("--format", choices=["csv", "ohio-xml"], default="csv")

    p = add("ingest", "parse raw files into a normalised bundle")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--inhouse", help="CSV bundle directory")
    g.add_argument("--ohio", help="Ohio XML file or directory of *-train/*-test XML files")

    p = add("label", "label every night of a cohort")
    p.add_argument("--bundle", required=True)
    p.add_argument("--threshold", type=float)
    p.add_argument("--run-minutes", type=int)

    p = add("features", "build a design matrix for one feature set")
    p.add_argument("--bundle")
    p.add_argument("--labels")
    p.add_argument("--features")
    p.add_argument("--imputation")
    p.add_argument("--ranges")
    p.add_argument("--personalization", choices=["literal", "zscore"], default="literal")
    p.add_argument("--with-defined-mask", action="store_true")
    p.add_argument("--dump-spec", metavar="NAME")

    p = add("balance", "ADASYN-oversample a design matrix and emit a PCA scatter")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--ratio", type=float)
    p.add_argument("--k", type=int)

    for name, text in (("train", "fit one model on all rows"), ("evaluate", "cross-validate models")):
        p = add(name, text)
        p.add_argument("--matrix")
        p.add_argument("--bundle")
        p.add_argument("--labels")
        p.add_argument("--features")
        if name == "train":
            p.add_argument("--model", required=True, choices=[m.value for m in TABLE_MODELS])
        else:
            p.add_argument("--models", help="comma-separated model kinds")
            p.add_argument("--group-by-patient", action="store_true")
            p.add_argument("--leaky", action="store_true", help="oversample before splitting (unsafe)")

    p = add("transfer", "pretrain on a glucose-only cohort and fine-tune under cross-validation")
    p.add_argument("--bundle", required=True)
    p.add_argument("--labels")
    p.add_argument("--ohio", help="Ohio XML directory; a synthetic ohio-like cohort is used otherwise")
    p.add_argument("--branch", choices=["aggregate", "sequence"])

    p = add("plot", "render a figure from results")
    p.add_argument("--results", required=True)
    p.add_argument("--kind", required=True, choices=["pca-scatter", "auroc-distribution"])

    add("pipeline", "run the configured end-to-end experiment")
    return parser


COMMANDS = {
    "generate": cmd_generate, "ingest": cmd_ingest, "label": cmd_label, "features": cmd_features,
    "balance": cmd_balance, "train": cmd_train, "evaluate": cmd_evaluate, "transfer": cmd_transfer,
    "plot": cmd_plot, "pipeline": cmd_pipeline,
}


def _overrides(args) -> dict:
    ov: dict = {"seed": args.seed, "workers": args.workers, "out": args.out}
    cmd = args.command
    if cmd == "generate":
        ov["cohort"] = {k: v for k, v in (("profile", args.profile), ("nh_signal_strength", args.signal),
                                           ("n_patients", args.patients), ("nights_per_patient", args.nights))
                        if v is not None}
    if cmd == "label":
        ov["labeling"] = {k: v for k, v in (("threshold", args.threshold), ("run_minutes", args.run_minutes))
                          if v is not None}
    if cmd == "features":
        ov["preprocess"] = {k: v for k, v in (("imputation", args.imputation), ("ranges", args.ranges))
                            if v is not None}
    if cmd == "evaluate":
        ov["experiment"] = {"group_by_patient": args.group_by_patient or None, "leaky": args.leaky or None}
        ov["experiment"] = {k: v for k, v in ov["experiment"].items() if v is not None}
    if cmd == "transfer" and args.branch:
        ov["transfer"] = {"branch": args.branch}
    return {k: v for k, v in ov.items() if v is not None and v != {}}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    for name in ("seed", "config", "workers", "out", "verbose"):
        if not hasattr(args, name):
            setattr(args, name, None)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(resolve_path(args.config), _overrides(args))
    except SchemaError as exc:
        print(f"nocturne: configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        outputs = COMMANDS[args.command](args, cfg)
    except StageFailure as exc:
        print(f"nocturne {args.command}: {exc}", file=sys.stderr)
        return 1
    except SchemaError as exc:
        print(f"nocturne: configuration error: {exc}", file=sys.stderr)
        return 2
    except (NocturneError, OSError, ValueError) as exc:
        print(f"nocturne {args.command}: {exc}", file=sys.stderr)
        return 1
    if outputs:
        out_dir = Path(outputs[0]).parent if Path(cfg["out"]).suffix else Path(cfg["out"])
        seeds = cfg["experiment"]["seeds"] if args.command in ("evaluate", "transfer", "pipeline") else [cfg["seed"]]
        write_manifest(out_dir, args.command, argv, cfg, seeds, outputs)
    return 0


if __name__ == "__main__":
    sys.exit(main())
