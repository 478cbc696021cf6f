"""Layer primitives: forward and backward passes on float64 arrays.

Batched internals operate on [B, H, W, C] / [B, n]; the public single-example
helpers at the bottom mirror the per-layer contracts ([H, W, C] in, [H', W', F]
out, etc.). Convolutions use cross-correlation semantics (no kernel flip) and
stride 1.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ConfigError, DataError

# -- activations ------------------------------------------------------------


def relu(z):
    return np.maximum(z, 0.0)


def sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(z):
    shifted = z - z.max(axis=-1, keepdims=True)
    ez = np.exp(shifted)
    return ez / ez.sum(axis=-1, keepdims=True)


ACTIVATIONS = ("relu", "tanh", "sigmoid", "softmax", "linear")


def apply_activation(z, name):
    if name == "relu":
        return relu(z)
    if name == "tanh":
        return np.tanh(z)
    if name == "sigmoid":
        return sigmoid(z)
    if name == "softmax":
        return softmax(z)
    if name == "linear":
        return z
    raise ConfigError(f"unknown activation {name!r}")


def activation_backward(da, z, a, name):
    """Gradient through the activation: da -> dz. Softmax is excluded here;
    it is always fused with the cross-entropy loss at the output."""
    if name == "relu":
        return da * (z > 0)
    if name == "tanh":
        return da * (1.0 - a * a)
    if name == "sigmoid":
        return da * a * (1.0 - a)
    if name == "linear":
        return da
    raise ConfigError(f"no standalone backward for activation {name!r}")


# -- conv2d ------------------------------------------------------------------


def conv2d_batch_forward(x, kernels, bias, padding=0):
    """x [B,H,W,C], kernels [kh,kw,C,F], bias [F] -> ([B,H',W',F], cache).

    Accumulates one channel-axis matmul per kernel offset, which keeps every
    inner product a contiguous BLAS call at these small kernel sizes.
    """
    kh, kw = kernels.shape[:2]
    if x.shape[1] + 2 * padding < kh or x.shape[2] + 2 * padding < kw:
        raise ConfigError(
            f"kernel {kh}x{kw} larger than padded input "
            f"{x.shape[1] + 2 * padding}x{x.shape[2] + 2 * padding}"
        )
    if x.shape[3] != kernels.shape[2]:
        raise ConfigError(
            f"input has {x.shape[3]} channels, kernels expect {kernels.shape[2]}"
        )
    xp = x
    if padding:
        xp = np.pad(x, ((0, 0), (padding, padding), (padding, padding), (0, 0)))
    b, hp, wp, _ = xp.shape
    ho, wo = hp - kh + 1, wp - kw + 1
    out = np.zeros((b, ho, wo, kernels.shape[3]))
    for p in range(kh):
        for q in range(kw):
            out += xp[:, p : p + ho, q : q + wo, :] @ kernels[p, q]
    return out + bias, xp


def conv2d_batch_backward(dy, kernels, xp, padding=0):
    """Returns (dx, dkernels, dbias) for the forward above (xp is the padded
    input kept in the forward cache)."""
    kh, kw = kernels.shape[:2]
    _, ho, wo, _ = dy.shape
    dbias = dy.sum(axis=(0, 1, 2))
    dk = np.empty_like(kernels)
    dxp = np.zeros(xp.shape)
    for p in range(kh):
        for q in range(kw):
            window = xp[:, p : p + ho, q : q + wo, :]
            dk[p, q] = np.tensordot(window, dy, axes=((0, 1, 2), (0, 1, 2)))
            dxp[:, p : p + ho, q : q + wo, :] += dy @ kernels[p, q].T
    if padding:
        dxp = dxp[:, padding:-padding, padding:-padding, :]
    return dxp, dk, dbias


# -- maxpool2d ---------------------------------------------------------------


def _pool_pads(size, pool, stride, mode):
    """Returns (pad_before, pad_after, out_size) for one spatial dim."""
    if mode == "valid":
        if pool > size:
            raise ConfigError(f"pool window {pool} larger than input {size}")
        return 0, 0, (size - pool) // stride + 1
    if mode == "same":
        out = -(-size // stride)  # ceil
        total = max(0, (out - 1) * stride + pool - size)
        return total // 2, total - total // 2, out
    raise ConfigError(f"unknown pooling padding mode {mode!r}")


def maxpool2d_batch_forward(x, pool, stride, padding="valid"):
    """x [B,H,W,F] -> ([B,Ho,Wo,F], cache). Output dims are
    floor((dim-pool)/stride)+1 in valid mode, ceil(dim/stride) in same mode
    (pad cells are -inf and can never win the max)."""
    if pool < 1 or stride < 1:
        raise ConfigError("pool_size and stride must be >= 1")
    B, H, W, F = x.shape
    ph0, ph1, Ho = _pool_pads(H, pool, stride, padding)
    pw0, pw1, Wo = _pool_pads(W, pool, stride, padding)
    xp = x
    if ph0 or ph1 or pw0 or pw1:
        xp = np.pad(
            x, ((0, 0), (ph0, ph1), (pw0, pw1), (0, 0)), constant_values=-np.inf
        )
    v = sliding_window_view(xp, (pool, pool), axis=(1, 2))[:, ::stride, ::stride]
    flat = v.reshape(B, Ho, Wo, F, pool * pool)
    arg = flat.argmax(axis=-1)
    out = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]
    cache = (arg, xp.shape, (ph0, pw0), pool, stride, (H, W))
    return out, cache


def maxpool2d_batch_backward(dy, cache):
    """Routes each output gradient to the argmax cell of its window."""
    arg, xp_shape, (ph0, pw0), pool, stride, (H, W) = cache
    B, Ho, Wo, F = dy.shape
    dxp = np.zeros(xp_shape)
    rows = np.arange(Ho)[None, :, None, None] * stride + arg // pool
    cols = np.arange(Wo)[None, None, :, None] * stride + arg % pool
    bidx = np.arange(B)[:, None, None, None]
    fidx = np.arange(F)[None, None, None, :]
    np.add.at(dxp, (bidx, rows, cols, fidx), dy)
    return dxp[:, ph0 : ph0 + H, pw0 : pw0 + W, :]


# -- dropout -----------------------------------------------------------------


def dropout_batch_apply(x, rate, training, rng=None, mask=None):
    """Zero units with probability rate and scale survivors by 1/(1-rate)
    during training; identity at inference. Returns (out, mask)."""
    if not (0.0 <= rate < 1.0):
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x, None
    if mask is None:
        if rng is None:
            raise ConfigError("training-mode dropout needs an rng or a mask")
        mask = rng.random(x.shape) >= rate
    return x * mask / (1.0 - rate), mask


# -- dense -------------------------------------------------------------------


def dense_batch_forward(x, weights, bias, activation):
    """x [B,n], weights [n,m], bias [m] -> (activation(x @ W + b), z)."""
    if x.shape[1] != weights.shape[0]:
        raise ConfigError(
            f"dense input width {x.shape[1]} does not match weights "
            f"{weights.shape}"
        )
    z = x @ weights + bias
    return apply_activation(z, activation), z


def dense_batch_backward(dz, x, weights):
    """Gradients given dL/dz: returns (dx, dweights, dbias)."""
    dw = x.T @ dz
    db = dz.sum(axis=0)
    dx = dz @ weights.T
    return dx, dw, db


# -- single-example wrappers (the per-layer public contracts) -----------------


def conv2d_forward(input, kernels, bias, padding=0):
    """[H,W,C] cross-correlated with [k,k,C,F] kernels -> [H',W',F]."""
    x = np.asarray(input, dtype=np.float64)
    if x.ndim != 3:
        raise DataError(f"conv2d input must be [H,W,C], got shape {x.shape}")
    out, _ = conv2d_batch_forward(
        x[None],
        np.asarray(kernels, dtype=np.float64),
        np.asarray(bias, dtype=np.float64),
        padding,
    )
    return out[0]


def maxpool2d_forward(input, pool_size, stride):
    """[H,W,F] -> max over pool windows; dims floor((dim-pool)/stride)+1."""
    x = np.asarray(input, dtype=np.float64)
    if x.ndim != 3:
        raise DataError(f"maxpool input must be [H,W,F], got shape {x.shape}")
    out, _ = maxpool2d_batch_forward(x[None], pool_size, stride, "valid")
    return out[0]


def dropout_apply(input, rate, training, rng=None):
    x = np.asarray(input, dtype=np.float64)
    out, _ = dropout_batch_apply(x, rate, training, rng)
    return out


def dense_forward(input, weights, bias, activation="linear"):
    """[n] -> activation([n] @ [n,m] + [m])."""
    x = np.asarray(input, dtype=np.float64)
    if x.ndim != 1:
        raise DataError(f"dense input must be 1-D, got shape {x.shape}")
    out, _ = dense_batch_forward(
        x[None],
        np.asarray(weights, dtype=np.float64),
        np.asarray(bias, dtype=np.float64),
        activation,
    )
    return out[0]
