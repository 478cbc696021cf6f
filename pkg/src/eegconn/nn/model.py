"""Model descriptions, shape inference, parameter init, forward/backward.

A ModelSpec is an input shape plus an ordered layer list plus a loss; shape
inference is total (it either yields the full shape trace or raises before
any allocation). Model couples a spec with concrete parameter arrays.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from ..errors import ConfigError, DataError, NumericError
from . import layers as L

LOSSES = ("categorical_cross_entropy", "binary_cross_entropy")


@dataclass(frozen=True)
class Conv2D:
    n_filters: int
    kernel_size: int
    padding: int = 0
    kind: str = field(default="conv2d", init=False)


@dataclass(frozen=True)
class MaxPool2D:
    pool_size: int
    stride: int
    padding: str = "valid"  # valid | same
    kind: str = field(default="maxpool2d", init=False)


@dataclass(frozen=True)
class Dropout:
    rate: float
    kind: str = field(default="dropout", init=False)


@dataclass(frozen=True)
class Flatten:
    kind: str = field(default="flatten", init=False)


@dataclass(frozen=True)
class Dense:
    units: int
    activation: str = "linear"
    kind: str = field(default="dense", init=False)


LayerSpec = Union[Conv2D, MaxPool2D, Dropout, Flatten, Dense]


@dataclass
class ModelSpec:
    input_shape: tuple  # (H, W, C)
    layers: list
    loss: str

    def __post_init__(self):
        self.input_shape = tuple(int(v) for v in self.input_shape)
        if len(self.input_shape) != 3 or min(self.input_shape) < 1:
            raise ConfigError(
                f"input_shape must be three positive ints (H, W, C), "
                f"got {self.input_shape}"
            )
        if self.loss not in LOSSES:
            raise ConfigError(f"unknown loss {self.loss!r}")
        infer_shapes(self)  # validates the whole stack eagerly


def infer_shapes(spec: ModelSpec) -> list[tuple]:
    """Shape after every layer, starting from spec.input_shape.

    Raises ConfigError if any layer cannot accept its input, including the
    final-layer/loss pairing (2-unit softmax for categorical cross-entropy,
    1-unit sigmoid for binary cross-entropy).
    """
    shape = spec.input_shape
    trace = []
    for idx, layer in enumerate(spec.layers):
        where = f"layer {idx} ({layer.kind})"
        if isinstance(layer, Conv2D):
            if len(shape) != 3:
                raise ConfigError(f"{where}: needs [H,W,C] input, has {shape}")
            h = shape[0] + 2 * layer.padding - layer.kernel_size + 1
            w = shape[1] + 2 * layer.padding - layer.kernel_size + 1
            if h < 1 or w < 1:
                raise ConfigError(
                    f"{where}: kernel {layer.kernel_size} does not fit input "
                    f"{shape[0]}x{shape[1]} with padding {layer.padding}"
                )
            shape = (h, w, layer.n_filters)
        elif isinstance(layer, MaxPool2D):
            if len(shape) != 3:
                raise ConfigError(f"{where}: needs [H,W,C] input, has {shape}")
            try:
                _, _, h = L._pool_pads(shape[0], layer.pool_size, layer.stride, layer.padding)
                _, _, w = L._pool_pads(shape[1], layer.pool_size, layer.stride, layer.padding)
            except ConfigError as exc:
                raise ConfigError(f"{where}: {exc}") from None
            shape = (h, w, shape[2])
        elif isinstance(layer, Dropout):
            if not (0.0 <= layer.rate < 1.0):
                raise ConfigError(f"{where}: rate must be in [0, 1), got {layer.rate}")
        elif isinstance(layer, Flatten):
            shape = (int(np.prod(shape)),)
        elif isinstance(layer, Dense):
            if len(shape) != 1:
                raise ConfigError(
                    f"{where}: needs flat input, has {shape}; add a flatten layer"
                )
            if layer.units < 1:
                raise ConfigError(f"{where}: units must be >= 1")
            if layer.activation not in L.ACTIVATIONS:
                raise ConfigError(f"{where}: unknown activation {layer.activation!r}")
            if layer.activation == "softmax" and idx != len(spec.layers) - 1:
                raise ConfigError(f"{where}: softmax is only supported as the final layer")
            shape = (layer.units,)
        else:
            raise ConfigError(f"{where}: unknown layer kind")
        trace.append(shape)
    if not spec.layers or not isinstance(spec.layers[-1], Dense):
        raise ConfigError("model must end in a dense layer")
    last = spec.layers[-1]
    if spec.loss == "categorical_cross_entropy" and not (
        last.units == 2 and last.activation == "softmax"
    ):
        raise ConfigError("categorical cross-entropy needs a final dense(2, softmax)")
    if spec.loss == "binary_cross_entropy" and not (
        last.units == 1 and last.activation == "sigmoid"
    ):
        raise ConfigError("binary cross-entropy needs a final dense(1, sigmoid)")
    return trace


def layer_param_counts(spec: ModelSpec) -> list[int]:
    """Trainable parameter count per layer (0 for pool/dropout/flatten)."""
    counts = []
    shape = spec.input_shape
    for layer, out_shape in zip(spec.layers, infer_shapes(spec)):
        if isinstance(layer, Conv2D):
            counts.append(
                layer.n_filters * (layer.kernel_size**2 * shape[2]) + layer.n_filters
            )
        elif isinstance(layer, Dense):
            counts.append(shape[0] * layer.units + layer.units)
        else:
            counts.append(0)
        shape = out_shape
    return counts


def param_count(spec: ModelSpec) -> int:
    return sum(layer_param_counts(spec))


# -- canonical architectures ---------------------------------------------------


def _as_hw(input_hw) -> tuple[int, int]:
    if isinstance(input_hw, (tuple, list)):
        h, w = int(input_hw[0]), int(input_hw[1])
    else:
        h = w = int(input_hw)
    return h, w


def build_tuned_spec(input_hw, hp) -> ModelSpec:
    """The tunable backbone: two 16-filter 3x3 convs, pool, dropout, two
    32-filter 3x3 convs, pool, dropout, dense(hp.dense_units), dropout,
    dense(2, softmax). hp supplies the three dropout rates, the hidden
    width, and the hidden activation."""
    h, w = _as_hw(input_hw)
    layers = [
        Conv2D(16, 3),
        Conv2D(16, 3),
        MaxPool2D(2, 2),
        Dropout(hp.dropout_a),
        Conv2D(32, 3),
        Conv2D(32, 3),
        MaxPool2D(2, 2),
        Dropout(hp.dropout_b),
        Flatten(),
        Dense(hp.dense_units, hp.activation),
        Dropout(hp.dropout_c),
        Dense(2, "softmax"),
    ]
    return ModelSpec(input_shape=(h, w, 1), layers=layers,
                     loss="categorical_cross_entropy")


def build_untuned_spec(input_hw) -> ModelSpec:
    """The fixed small model: 2x2 valid convs (32 then 16 filters), each
    followed by a shape-preserving stride-1 max pool, then dense(10, relu)
    and dense(1, sigmoid)."""
    h, w = _as_hw(input_hw)
    layers = [
        Conv2D(32, 2),
        MaxPool2D(2, 1, "same"),
        Conv2D(16, 2),
        MaxPool2D(2, 1, "same"),
        Flatten(),
        Dense(10, "relu"),
        Dense(1, "sigmoid"),
    ]
    return ModelSpec(input_shape=(h, w, 1), layers=layers, loss="binary_cross_entropy")


# -- parameters ----------------------------------------------------------------


@dataclass
class Model:
    spec: ModelSpec
    params: list  # one dict per layer: {"w": ..., "b": ...} or {}
    rng_seed: int

    def stored_param_count(self) -> int:
        return sum(int(a.size) for p in self.params for a in p.values())


def init_model(spec: ModelSpec, seed: int) -> Model:
    """He-uniform init for relu layers, Glorot-uniform otherwise; zero biases."""
    rng = np.random.default_rng(seed)
    params = []
    shape = spec.input_shape
    for layer, out_shape in zip(spec.layers, infer_shapes(spec)):
        if isinstance(layer, Conv2D):
            k, cin, f = layer.kernel_size, shape[2], layer.n_filters
            fan_in = k * k * cin
            fan_out = k * k * f
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            params.append(
                {
                    "w": rng.uniform(-limit, limit, size=(k, k, cin, f)),
                    "b": np.zeros(f),
                }
            )
        elif isinstance(layer, Dense):
            fan_in, fan_out = shape[0], layer.units
            if layer.activation == "relu":
                limit = math.sqrt(6.0 / fan_in)
            else:
                limit = math.sqrt(6.0 / (fan_in + fan_out))
            params.append(
                {
                    "w": rng.uniform(-limit, limit, size=(fan_in, fan_out)),
                    "b": np.zeros(fan_out),
                }
            )
        else:
            params.append({})
        shape = out_shape
    return Model(spec=spec, params=params, rng_seed=seed)


# -- forward / backward ----------------------------------------------------------


def forward(model: Model, x, training=False, rng=None, dropout_masks=None):
    """Run the network on a batch x [B, H, W, C].

    Returns (output, caches). In training mode dropout masks come from rng
    unless dropout_masks (one entry per dropout layer, None allowed) pins
    them; inference mode is a pure function of (model, x).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 3:
        x = x[None]
    if x.shape[1:] != model.spec.input_shape:
        raise DataError(
            f"batch shape {x.shape[1:]} does not match model input "
            f"{model.spec.input_shape}"
        )
    caches = []
    drop_i = 0
    act = x
    for layer, p in zip(model.spec.layers, model.params):
        if isinstance(layer, Conv2D):
            act, patches = L.conv2d_batch_forward(act, p["w"], p["b"], layer.padding)
            caches.append(("conv2d", patches))
        elif isinstance(layer, MaxPool2D):
            act, cache = L.maxpool2d_batch_forward(
                act, layer.pool_size, layer.stride, layer.padding
            )
            caches.append(("maxpool2d", cache))
        elif isinstance(layer, Dropout):
            pinned = dropout_masks[drop_i] if dropout_masks is not None else None
            act, mask = L.dropout_batch_apply(act, layer.rate, training, rng, pinned)
            caches.append(("dropout", mask))
            drop_i += 1
        elif isinstance(layer, Flatten):
            caches.append(("flatten", act.shape))
            act = act.reshape(act.shape[0], -1)
        elif isinstance(layer, Dense):
            x_in = act
            act, z = L.dense_batch_forward(act, p["w"], p["b"], layer.activation)
            caches.append(("dense", (x_in, z, act)))
    return act, caches


def predict_proba(model: Model, x):
    """Inference-mode class probabilities: [B,2] softmax or [B,1] sigmoid."""
    out, _ = forward(model, x, training=False)
    return out


def score_class1(model: Model, x):
    """Probability assigned to class 1, as a 1-D vector."""
    probs = predict_proba(model, x)
    if probs.shape[1] == 2:
        return probs[:, 1]
    return probs[:, 0]


def _loss_value(probs, y_idx, loss):
    eps = 1e-12
    n = probs.shape[0]
    if loss == "categorical_cross_entropy":
        picked = np.clip(probs[np.arange(n), y_idx], eps, 1.0)
        return float(-np.mean(np.log(picked)))
    p = np.clip(probs[:, 0], eps, 1.0 - eps)
    y = y_idx.astype(np.float64)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def backward(model: Model, x, y, rng=None, dropout_masks=None, training=True):
    """Mean-batch loss and its gradient for every parameter.

    y holds class indices in {0, 1}. Returns (loss, grads, masks) where
    grads mirrors model.params and masks lists the dropout masks actually
    used (for replaying the same stochastic forward pass).
    """
    x = np.asarray(x, dtype=np.float64)
    y_idx = np.asarray(y)
    if x.shape[0] == 0:
        raise DataError("empty batch")
    if not np.isin(y_idx, (0, 1)).all():
        raise DataError("labels must be 0 or 1")
    probs, caches = forward(model, x, training=training, rng=rng,
                            dropout_masks=dropout_masks)
    loss = _loss_value(probs, y_idx, model.spec.loss)
    if not math.isfinite(loss):
        raise NumericError("non-finite training loss (divergence)")
    n = x.shape[0]
    # Fused loss+activation gradient at the output: dL/dz = (p - y) / n.
    if model.spec.loss == "categorical_cross_entropy":
        onehot = np.zeros_like(probs)
        onehot[np.arange(n), y_idx] = 1.0
        delta = (probs - onehot) / n
    else:
        delta = (probs - y_idx.reshape(-1, 1).astype(np.float64)) / n

    grads = [dict() for _ in model.params]
    masks_used = []
    for i in range(len(model.spec.layers) - 1, -1, -1):
        layer = model.spec.layers[i]
        kind, cache = caches[i]
        if kind == "dense":
            x_in, z, a = cache
            if layer.activation == "softmax":
                dz = delta  # fused with the loss above
            elif i == len(model.spec.layers) - 1 and layer.activation == "sigmoid":
                dz = delta  # fused with binary cross-entropy
            else:
                dz = L.activation_backward(delta, z, a, layer.activation)
            delta, grads[i]["w"], grads[i]["b"] = L.dense_batch_backward(
                dz, x_in, model.params[i]["w"]
            )
        elif kind == "flatten":
            delta = delta.reshape(cache)
        elif kind == "dropout":
            mask = cache
            masks_used.append(mask)
            if mask is not None:
                delta = delta * mask / (1.0 - layer.rate)
        elif kind == "maxpool2d":
            delta = L.maxpool2d_batch_backward(delta, cache)
        elif kind == "conv2d":
            delta, grads[i]["w"], grads[i]["b"] = L.conv2d_batch_backward(
                delta, model.params[i]["w"], cache, layer.padding
            )
    masks_used.reverse()
    return loss, grads, masks_used


def loss_only(model: Model, x, y, dropout_masks=None, training=False):
    """Loss of a (possibly mask-pinned) forward pass; used by gradient checks."""
    probs, _ = forward(model, x, training=training, dropout_masks=dropout_masks)
    return _loss_value(probs, np.asarray(y), model.spec.loss)


# -- (de)serialization ---------------------------------------------------------


def spec_to_dict(spec: ModelSpec) -> dict:
    layers = []
    for layer in spec.layers:
        d = {"kind": layer.kind}
        for name in layer.__dataclass_fields__:
            if name != "kind":
                d[name] = getattr(layer, name)
        layers.append(d)
    return {"input_shape": list(spec.input_shape), "layers": layers, "loss": spec.loss}


_LAYER_KINDS = {
    "conv2d": Conv2D,
    "maxpool2d": MaxPool2D,
    "dropout": Dropout,
    "flatten": Flatten,
    "dense": Dense,
}


def spec_from_dict(doc: dict) -> ModelSpec:
    try:
        layers = []
        for d in doc["layers"]:
            kwargs = {k: v for k, v in d.items() if k != "kind"}
            layers.append(_LAYER_KINDS[d["kind"]](**kwargs))
        return ModelSpec(
            input_shape=tuple(doc["input_shape"]), layers=layers, loss=doc["loss"]
        )
    except (KeyError, TypeError) as exc:
        raise DataError(f"malformed model description: {exc}") from None
