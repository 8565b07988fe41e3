"""Experiment configuration: a TOML file validated against a fixed schema.

Precedence, highest first: command-line flags, the file given by
``--config`` (or the ``NOCTURNE_CONFIG`` environment variable), built-in
defaults. Unknown keys are rejected so typos surface immediately.
"""

from __future__ import annotations

import copy
import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import tomli

from .errors import ConfigurationError
from .evaluation import DEFAULT_SEEDS, TABLE_MODELS, ModelKind
from .features import FEATURE_SETS
from .models.forest import ClassWeight, MaxFeatures
from .preprocess import Imputation
from .synthgen import PROFILES

ENV_VAR = "NOCTURNE_CONFIG"


class SchemaError(ConfigurationError):
    """A configuration value violates the schema; ``path`` names the field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class Field:
    kind: Any  # int, float, bool, str, "list[str]", "list[int]" or a tuple of allowed strings
    default: Any
    optional: bool = False
    minimum: float | None = None


def _models() -> tuple[str, ...]:
    return tuple(m.value for m in ModelKind)


SCHEMA: dict[str, Any] = {
    "seed": Field(int, 1),
    "workers": Field(int, 1, minimum=1),
    "out": Field(str, "nocturne-out"),
    "cohort": {
        "source": Field(("synthetic", "inhouse", "ohio"), "synthetic"),
        "profile": Field(tuple(PROFILES), "inhouse-like"),
        "path": Field(str, ""),
        "nh_signal_strength": Field(float, 1.0, minimum=0.0),
        "n_patients": Field(int, None, optional=True, minimum=1),
        "nights_per_patient": Field(int, None, optional=True, minimum=1),
    },
    "preprocess": {
        "imputation": Field(str, "ffill"),
        "ranges": Field(str, ""),
    },
    "labeling": {
        "threshold": Field(float, 3.9, minimum=0.0),
        "run_minutes": Field(int, 15, minimum=1),
    },
    "experiment": {
        "feature_sets": Field("list[str]", [n.value for n in FEATURE_SETS]),
        "models": Field("list[str]", [m.value for m in TABLE_MODELS]),
        "seeds": Field("list[int]", list(DEFAULT_SEEDS)),
        "folds": Field(int, 5, minimum=2),
        "group_by_patient": Field(bool, False),
        "leaky": Field(bool, False),
        "baselines": Field(bool, True),
    },
    "balance": {
        "k_neighbors": Field(int, 5, minimum=1),
        "ratio": Field(float, 1.0, minimum=0.0),
    },
    "forest": {
        "n_trees": Field(int, 1000, minimum=1),
        "max_depth": Field(int, None, optional=True, minimum=1),
        "min_samples_leaf": Field(int, 1, minimum=1),
        "max_features": Field(tuple(m.value for m in MaxFeatures), "sqrt"),
        "class_weight": Field(tuple(c.value for c in ClassWeight), "balanced"),
    },
    "net": {
        "hidden": Field(int, 32, minimum=1),
        "conv_filters": Field(int, 16, minimum=1),
        "conv_kernel": Field(int, 3, minimum=1),
        "dense": Field(int, 16, minimum=1),
        "l2_lambda": Field(float, 1e-3, minimum=0.0),
        "learning_rate": Field(float, 1e-3, minimum=0.0),
        "batch_size": Field(int, 16, minimum=1),
    },
    "train": {
        "max_epochs": Field(int, 100, minimum=1),
        "patience": Field(int, 30, minimum=1),
        "inner_val_fraction": Field(float, 0.2, minimum=0.0),
        "gamma": Field(float, 2.0, minimum=0.0),
    },
    "transfer": {
        "enabled": Field(bool, False),
        "source": Field(("synthetic", "ohio"), "synthetic"),
        "profile": Field(tuple(PROFILES), "ohio-like"),
        "path": Field(str, ""),
        "branch": Field(("aggregate", "sequence"), "aggregate"),
        "compare_scratch": Field(bool, True),
    },
}


def defaults() -> dict:
    def walk(node):
        return {k: walk(v) if isinstance(v, dict) else copy.deepcopy(v.default) for k, v in node.items()}
    return walk(SCHEMA)


def _check(path: str, f: Field, value):
    if value is None:
        if f.optional:
            return None
        raise SchemaError(path, "value required")
    kind = f.kind
    if isinstance(kind, tuple):
        if not isinstance(value, str) or value not in kind:
            raise SchemaError(path, f"unknown value {value!r}; expected one of {', '.join(kind)}")
        return value
    if kind in ("list[str]", "list[int]"):
        elem = str if kind == "list[str]" else int
        if not isinstance(value, list) or not value:
            raise SchemaError(path, "expected a nonempty list")
        for i, v in enumerate(value):
            if not isinstance(v, elem) or isinstance(v, bool):
                raise SchemaError(f"{path}[{i}]", f"expected {elem.__name__}, got {v!r}")
        return list(value)
    if kind is bool:
        if not isinstance(value, bool):
            raise SchemaError(path, f"expected true/false, got {value!r}")
        return value
    if kind is int:
        if not isinstance(value, int) or isinstance(value, bool):
            raise SchemaError(path, f"expected an integer, got {value!r}")
    elif kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise SchemaError(path, f"expected a number, got {value!r}")
        value = float(value)
    elif kind is str:
        if not isinstance(value, str):
            raise SchemaError(path, f"expected a string, got {value!r}")
        return value
    if f.minimum is not None and value < f.minimum:
        raise SchemaError(path, f"must be >= {f.minimum}")
    return value


def _merge(schema: dict, base: dict, over: dict, prefix: str = "") -> None:
    for key, value in over.items():
        path = f"{prefix}{key}"
        if key not in schema:
            raise SchemaError(path, "unknown key")
        node = schema[key]
        if isinstance(node, dict):
            if not isinstance(value, dict):
                raise SchemaError(path, "expected a table")
            _merge(node, base[key], value, path + ".")
        else:
            base[key] = _check(path, node, value)


def _semantic_checks(cfg: dict) -> None:
    for i, m in enumerate(cfg["experiment"]["models"]):
        if m not in _models():
            raise SchemaError(f"experiment.models[{i}]", f"unknown model {m!r}; expected one of {', '.join(_models())}")
    names = {n.value for n in FEATURE_SETS}
    for i, fs in enumerate(cfg["experiment"]["feature_sets"]):
        if fs.upper().replace("-", "_") not in names:
            raise SchemaError(f"experiment.feature_sets[{i}]", f"unknown feature set {fs!r}")
    try:
        Imputation.parse(cfg["preprocess"]["imputation"])
    except (ConfigurationError, ValueError) as exc:
        raise SchemaError("preprocess.imputation", str(exc)) from None
    if not 0 < cfg["balance"]["ratio"] <= 1:
        raise SchemaError("balance.ratio", "must lie in (0, 1]")
    if not 0 < cfg["train"]["inner_val_fraction"] < 1:
        raise SchemaError("train.inner_val_fraction", "must lie in (0, 1)")
    if cfg["train"]["patience"] > cfg["train"]["max_epochs"]:
        raise SchemaError("train.patience", "must not exceed train.max_epochs")
    if cfg["cohort"]["source"] != "synthetic" and not cfg["cohort"]["path"]:
        raise SchemaError("cohort.path", f"required for source {cfg['cohort']['source']!r}")
    if cfg["transfer"]["source"] == "ohio" and not cfg["transfer"]["path"]:
        raise SchemaError("transfer.path", "required for source 'ohio'")


def validate(data: dict) -> dict:
    cfg = defaults()
    _merge(SCHEMA, cfg, data)
    _semantic_checks(cfg)
    return cfg


def resolve_path(explicit: str | None) -> Path | None:
    if explicit:
        return Path(explicit)
    env = os.environ.get(ENV_VAR)
    return Path(env) if env else None


def load_config(path=None, overrides: dict | None = None) -> dict:
    """Defaults, then the TOML file at ``path`` (if any), then ``overrides``."""
    data: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomli.load(fh)
        except FileNotFoundError:
            raise SchemaError(str(path), "config file not found") from None
        except tomli.TOMLDecodeError as exc:
            raise SchemaError(str(path), f"invalid TOML: {exc}") from None
    cfg = validate(data)
    if overrides:
        _merge(SCHEMA, cfg, {k: v for k, v in overrides.items() if v is not None})
        _semantic_checks(cfg)
    return cfg


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()
