"""Run configuration: JSON schema, defaults, validation, canonical hashing."""

from __future__ import annotations

import copy
import hashlib
import json
import os

from .connectivity import BicLag, FixedLag
from .crossval import TrainSettings, TunerBudgets, parse_inner_policy
from .errors import ConfigError, DataError
from .features import FEATURE_KINDS, FeatureConfig
from .synthgen import PRESET_NAMES
from .tuning import HyperParams

TUNER_KINDS = ("random", "hyperband", "bayes", "none")
MODEL_KINDS = ("tuned", "untuned")

DEFAULT_CONFIG = {
    "input": {
        "kind": "synth",
        "preset": "ad_like",
        "n_subjects_per_class": None,
        "jitter": 0.1,
    },
    "features": {
        "kind": "pearson",
        "alpha": 0.05,
        "lag_policy": "bic:8",
        "raw_width": 128,
        "zscore": True,
    },
    "model": "tuned",
    "tuner": {
        "kind": "random",
        "n_trials": 20,
        "resource_epochs": 30,
        "max_resource": 81,
        "eta": 3,
        "n_init": 5,
        "n_iter": 15,
        "hyperparams": None,
    },
    "train": {"batch_size": 8, "max_epochs": 100, "early_stop_patience": 10},
    "cv": {"k": 10, "inner": "kfold:3"},
    "seed": 0,
    "out_dir": "runs",
    "jobs": 1,
}


def _merge_section(defaults: dict, given, where: str) -> dict:
    if not isinstance(given, dict):
        raise ConfigError(f"{where}: expected an object, got {type(given).__name__}")
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    merged = copy.deepcopy(defaults)
    merged.update(given)
    return merged


def _require(cond: bool, message: str):
    if not cond:
        raise ConfigError(message)


def resolve_config(doc: dict) -> dict:
    """Merge with defaults and validate every field; returns the full config."""
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(doc) - set(DEFAULT_CONFIG)
    if unknown:
        raise ConfigError(f"config: unknown top-level keys {sorted(unknown)}")
    cfg = copy.deepcopy(DEFAULT_CONFIG)

    inp = _merge_section(
        {"kind": "synth", "preset": "ad_like", "n_subjects_per_class": None,
         "jitter": 0.1, "path": None},
        doc.get("input", {}),
        "input",
    )
    _require(inp["kind"] in ("synth", "manifest"), "input.kind must be synth or manifest")
    if inp["kind"] == "synth":
        _require(inp["preset"] in PRESET_NAMES,
                 f"input.preset must be one of {PRESET_NAMES}")
        if inp["n_subjects_per_class"] is not None:
            _require(
                isinstance(inp["n_subjects_per_class"], int)
                and inp["n_subjects_per_class"] >= 1,
                "input.n_subjects_per_class must be a positive integer",
            )
        _require(
            isinstance(inp["jitter"], (int, float)) and inp["jitter"] >= 0,
            "input.jitter must be a nonnegative number",
        )
        inp.pop("path")
    else:
        _require(bool(inp.get("path")), "input.path is required for manifest input")
        inp = {"kind": "manifest", "path": inp["path"]}
    cfg["input"] = inp

    feats = _merge_section(DEFAULT_CONFIG["features"], doc.get("features", {}), "features")
    _require(feats["kind"] in FEATURE_KINDS,
             f"features.kind must be one of {FEATURE_KINDS}")
    _require(
        isinstance(feats["alpha"], float) and 0.0 < feats["alpha"] < 1.0,
        "features.alpha must be a float in (0, 1)",
    )
    parse_lag_policy(feats["lag_policy"])  # validates
    _require(
        isinstance(feats["raw_width"], int) and feats["raw_width"] >= 4,
        "features.raw_width must be an integer >= 4",
    )
    _require(isinstance(feats["zscore"], bool), "features.zscore must be true/false")
    cfg["features"] = feats

    _require(doc.get("model", cfg["model"]) in MODEL_KINDS,
             f"model must be one of {MODEL_KINDS}")
    cfg["model"] = doc.get("model", cfg["model"])

    tuner = _merge_section(DEFAULT_CONFIG["tuner"], doc.get("tuner", {}), "tuner")
    _require(tuner["kind"] in TUNER_KINDS, f"tuner.kind must be one of {TUNER_KINDS}")
    for key in ("n_trials", "resource_epochs", "max_resource", "n_init"):
        _require(isinstance(tuner[key], int) and tuner[key] >= 1,
                 f"tuner.{key} must be a positive integer")
    _require(isinstance(tuner["eta"], int) and tuner["eta"] >= 2,
             "tuner.eta must be an integer >= 2")
    _require(isinstance(tuner["n_iter"], int) and tuner["n_iter"] >= 0,
             "tuner.n_iter must be a nonnegative integer")
    if tuner["hyperparams"] is not None:
        tuner["hyperparams"] = _merge_section(
            {k: None for k in HyperParams.__dataclass_fields__},
            tuner["hyperparams"],
            "tuner.hyperparams",
        )
        _require(
            all(v is not None for v in tuner["hyperparams"].values()),
            "tuner.hyperparams must set every field",
        )
    cfg["tuner"] = tuner
    if cfg["model"] == "untuned":
        _require(
            tuner["kind"] == "none",
            "the untuned model takes no tuner; set tuner.kind to 'none'",
        )

    train = _merge_section(DEFAULT_CONFIG["train"], doc.get("train", {}), "train")
    for key in ("batch_size", "max_epochs"):
        _require(isinstance(train[key], int) and train[key] >= 1,
                 f"train.{key} must be a positive integer")
    if train["early_stop_patience"] is not None:
        _require(
            isinstance(train["early_stop_patience"], int)
            and train["early_stop_patience"] >= 1,
            "train.early_stop_patience must be a positive integer or null",
        )
    cfg["train"] = train

    cv = _merge_section(DEFAULT_CONFIG["cv"], doc.get("cv", {}), "cv")
    _require(isinstance(cv["k"], int) and cv["k"] >= 2, "cv.k must be an integer >= 2")
    parse_inner_policy(cv["inner"])
    cfg["cv"] = cv

    _require(isinstance(doc.get("seed", cfg["seed"]), int), "seed must be an integer")
    cfg["seed"] = doc.get("seed", cfg["seed"])
    out_dir = doc.get("out_dir", cfg["out_dir"])
    _require(isinstance(out_dir, str) and out_dir, "out_dir must be a nonempty string")
    cfg["out_dir"] = out_dir
    jobs = doc.get("jobs", cfg["jobs"])
    _require(isinstance(jobs, int) and jobs >= 1, "jobs must be a positive integer")
    cfg["jobs"] = jobs
    return cfg


def load_config(path: str) -> dict:
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return resolve_config(doc)


def parse_lag_policy(text: str):
    try:
        kind, _, arg = str(text).partition(":")
        if kind == "fixed":
            return FixedLag(int(arg))
        if kind == "bic":
            return BicLag(int(arg))
    except (ValueError, DataError) as exc:
        raise ConfigError(f"bad lag policy {text!r}: {exc}") from None
    raise ConfigError(f"bad lag policy {text!r}: expected fixed:<k> or bic:<max_lag>")


def feature_config(cfg: dict) -> FeatureConfig:
    feats = cfg["features"]
    return FeatureConfig(
        kind=feats["kind"],
        alpha=feats["alpha"],
        lag_policy=parse_lag_policy(feats["lag_policy"]),
        raw_width=feats["raw_width"],
        zscore=feats["zscore"],
    )


def tuner_budgets(cfg: dict) -> TunerBudgets:
    t = cfg["tuner"]
    return TunerBudgets(
        n_trials=t["n_trials"],
        resource_epochs=t["resource_epochs"],
        max_resource=t["max_resource"],
        eta=t["eta"],
        n_init=t["n_init"],
        n_iter=t["n_iter"],
    )


def train_settings(cfg: dict) -> TrainSettings:
    t = cfg["train"]
    return TrainSettings(
        batch_size=t["batch_size"],
        max_epochs=t["max_epochs"],
        early_stop_patience=t["early_stop_patience"],
    )


def fixed_hyperparams(cfg: dict) -> HyperParams | None:
    hp = cfg["tuner"]["hyperparams"]
    if hp is None:
        return None
    return HyperParams(
        dropout_a=float(hp["dropout_a"]),
        dropout_b=float(hp["dropout_b"]),
        dropout_c=float(hp["dropout_c"]),
        dense_units=int(hp["dense_units"]),
        activation=str(hp["activation"]),
        learning_rate=float(hp["learning_rate"]),
    )


def config_hash(cfg: dict) -> str:
    """Hash of everything that shapes the result (out_dir and jobs do not)."""
    doc = {k: v for k, v in cfg.items() if k not in ("out_dir", "jobs")}
    return hashlib.sha256(
        json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()
