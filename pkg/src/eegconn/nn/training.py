"""Adam training loop, evaluation, checkpoints, and history export."""

from __future__ import annotations

import copy
import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DataError, NumericError
from .model import Model, ModelSpec, backward, forward, init_model, spec_from_dict, spec_to_dict

CHECKPOINT_FORMAT_VERSION = 1


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 8
    max_epochs: int = 100
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    early_stop_patience: int | None = 10
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ConfigError("batch_size and max_epochs must be >= 1")
        for name in ("adam_beta1", "adam_beta2"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise ConfigError(f"{name} must be in (0, 1), got {v}")
        if self.adam_epsilon <= 0:
            raise ConfigError("adam_epsilon must be positive")
        if self.early_stop_patience is not None and self.early_stop_patience < 1:
            raise ConfigError("early_stop_patience must be >= 1 or None")


def zero_like_params(params):
    return [{k: np.zeros_like(v) for k, v in p.items()} for p in params]


def adam_step(params, grads, m, v, t, cfg: TrainConfig):
    """One bias-corrected Adam update; params and both moment stores are
    modified in place. t is the 1-based step index."""
    if t < 1:
        raise ConfigError("Adam step index t must be >= 1")
    b1, b2, eps = cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    for p, g, mi, vi in zip(params, grads, m, v):
        for key in p:
            gk = g[key]
            mi[key] *= b1
            mi[key] += (1.0 - b1) * gk
            vi[key] *= b2
            vi[key] += (1.0 - b2) * gk * gk
            p[key] -= cfg.learning_rate * (mi[key] / c1) / (np.sqrt(vi[key] / c2) + eps)


def evaluate(model: Model, x, y):
    """Inference-mode (loss, accuracy) on a labeled set."""
    y_idx = np.asarray(y)
    probs, _ = forward(model, x, training=False)
    eps = 1e-12
    if model.spec.loss == "categorical_cross_entropy":
        picked = np.clip(probs[np.arange(len(y_idx)), y_idx], eps, 1.0)
        loss = float(-np.mean(np.log(picked)))
        pred = probs.argmax(axis=1)
    else:
        p = np.clip(probs[:, 0], eps, 1.0 - eps)
        loss = float(
            -np.mean(y_idx * np.log(p) + (1.0 - y_idx) * np.log(1.0 - p))
        )
        pred = (probs[:, 0] >= 0.5).astype(int)
    acc = float(np.mean(pred == y_idx))
    return loss, acc


def train(spec: ModelSpec, train_set, val_set, cfg: TrainConfig):
    """Fit a fresh model; deterministic given cfg.seed.

    train_set/val_set are (X, y) pairs with X shaped [n, H, W, C] and y in
    {0, 1}. Early stopping watches validation loss when val_set is given and
    patience is set, restoring the best-validation weights. Returns
    (model, history) where history has one row per completed epoch.
    """
    x_train, y_train = train_set
    x_train = np.asarray(x_train, dtype=np.float64)
    y_train = np.asarray(y_train)
    if x_train.shape[0] == 0:
        raise DataError("empty training set")
    if not np.isin(y_train, (0, 1)).all():
        raise DataError("training labels must be 0 or 1")
    rng = np.random.default_rng(cfg.seed)
    model = init_model(spec, seed=int(rng.integers(2**31 - 1)))
    model.rng_seed = cfg.seed
    m = zero_like_params(model.params)
    v = zero_like_params(model.params)
    n = x_train.shape[0]
    t = 0
    history = []
    best_val = math.inf
    best_params = None
    stale = 0
    for epoch in range(1, cfg.max_epochs + 1):
        perm = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            try:
                loss, grads, _ = backward(model, x_train[idx], y_train[idx], rng=rng)
            except NumericError as exc:
                raise NumericError(f"epoch {epoch}: {exc}") from None
            t += 1
            adam_step(model.params, grads, m, v, t, cfg)
        train_loss, train_acc = evaluate(model, x_train, y_train)
        row = {"epoch": epoch, "train_loss": train_loss, "train_acc": train_acc,
               "val_loss": None, "val_acc": None}
        if val_set is not None:
            val_loss, val_acc = evaluate(model, *val_set)
            row["val_loss"], row["val_acc"] = val_loss, val_acc
            if val_loss < best_val - 1e-12:
                best_val = val_loss
                best_params = copy.deepcopy(model.params)
                stale = 0
            else:
                stale += 1
        history.append(row)
        if not math.isfinite(train_loss):
            raise NumericError(f"epoch {epoch}: training loss diverged")
        if (
            val_set is not None
            and cfg.early_stop_patience is not None
            and stale >= cfg.early_stop_patience
        ):
            break
    if best_params is not None:
        model.params = best_params
    return model, history


def history_to_csv(history, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "train_acc", "val_loss", "val_acc"])
        for row in history:
            writer.writerow(
                [
                    row["epoch"],
                    repr(row["train_loss"]),
                    repr(row["train_acc"]),
                    "" if row["val_loss"] is None else repr(row["val_loss"]),
                    "" if row["val_acc"] is None else repr(row["val_acc"]),
                ]
            )


def save_model(model: Model, path):
    """Self-describing .npz checkpoint: spec JSON + flat parameter buffers."""
    header = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "spec": spec_to_dict(model.spec),
        "rng_seed": model.rng_seed,
    }
    arrays = {"__header__": np.frombuffer(json.dumps(header).encode(), dtype=np.uint8)}
    for i, p in enumerate(model.params):
        for key, arr in p.items():
            arrays[f"layer{i}_{key}"] = arr
    np.savez(path, **arrays)


def load_model(path) -> Model:
    if not os.path.isfile(path):
        raise DataError(f"checkpoint not found: {path}")
    with np.load(path) as bundle:
        try:
            header = json.loads(bytes(bundle["__header__"]).decode())
        except (KeyError, json.JSONDecodeError) as exc:
            raise DataError(f"{path}: not an eegconn checkpoint ({exc})") from None
        if header.get("format_version") != CHECKPOINT_FORMAT_VERSION:
            raise DataError(
                f"{path}: unsupported checkpoint version {header.get('format_version')}"
            )
        spec = spec_from_dict(header["spec"])
        params = []
        for i in range(len(spec.layers)):
            p = {}
            for key in ("w", "b"):
                name = f"layer{i}_{key}"
                if name in bundle:
                    p[key] = bundle[name].astype(np.float64)
            params.append(p)
    model = Model(spec=spec, params=params, rng_seed=int(header["rng_seed"]))
    expected = init_model(spec, seed=0)
    for i, (got, want) in enumerate(zip(model.params, expected.params)):
        if {k: a.shape for k, a in got.items()} != {k: a.shape for k, a in want.items()}:
            raise DataError(f"{path}: layer {i} parameter shapes do not match the spec")
    return model
