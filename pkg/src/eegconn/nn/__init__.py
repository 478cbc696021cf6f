"""From-scratch dense/convolutional network engine (float64, stride-1 convs)."""

from .layers import (
    conv2d_forward,
    dense_forward,
    dropout_apply,
    maxpool2d_forward,
    relu,
    sigmoid,
    softmax,
)
from .model import (
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    MaxPool2D,
    Model,
    ModelSpec,
    backward,
    build_tuned_spec,
    build_untuned_spec,
    forward,
    infer_shapes,
    init_model,
    layer_param_counts,
    param_count,
    predict_proba,
    score_class1,
)
from .training import (
    TrainConfig,
    adam_step,
    evaluate,
    history_to_csv,
    load_model,
    save_model,
    train,
)

__all__ = [
    "Conv2D",
    "Dense",
    "Dropout",
    "Flatten",
    "MaxPool2D",
    "Model",
    "ModelSpec",
    "TrainConfig",
    "adam_step",
    "backward",
    "build_tuned_spec",
    "build_untuned_spec",
    "conv2d_forward",
    "dense_forward",
    "dropout_apply",
    "evaluate",
    "forward",
    "history_to_csv",
    "infer_shapes",
    "init_model",
    "layer_param_counts",
    "load_model",
    "maxpool2d_forward",
    "param_count",
    "predict_proba",
    "relu",
    "save_model",
    "score_class1",
    "sigmoid",
    "softmax",
    "train",
]
