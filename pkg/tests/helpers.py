"""Independent oracles used across the test suite.

These deliberately re-derive results from first principles (textbook
formulas, exhaustive pair counting, finite differences) rather than calling
the library's own code paths.
"""

import math

import numpy as np

from eegconn.nn.model import loss_only


def pearson_brute(data: np.ndarray) -> np.ndarray:
    """Double loop over channel pairs, covariance/variance formula per pair."""
    n_ch = data.shape[0]
    out = np.empty((n_ch, n_ch))
    for i in range(n_ch):
        for j in range(n_ch):
            a = data[i] - data[i].mean()
            b = data[j] - data[j].mean()
            out[i, j] = float((a * b).sum() / math.sqrt((a * a).sum() * (b * b).sum()))
    return out


def rank_brute(x: np.ndarray) -> np.ndarray:
    """Hand-rolled average ranks: walk runs of equal sorted values."""
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x))
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and x[order[j + 1]] == x[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for t in range(i, j + 1):
            ranks[order[t]] = avg
        i = j + 1
    return ranks


def spearman_brute(data: np.ndarray) -> np.ndarray:
    return pearson_brute(np.vstack([rank_brute(row) for row in data]))


def auc_pairs(scores, labels) -> float:
    """Exhaustive O(n^2) Mann-Whitney statistic, ties counted half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    num = 0
    for p in pos:
        for n in neg:
            if p > n:
                num += 2
            elif p == n:
                num += 1
    return num / (2 * len(pos) * len(neg))


def finite_diff_grads(model, x, y, masks, h=1e-5):
    """Central finite differences of the batch loss w.r.t. every parameter,
    with dropout masks pinned so both evaluations see the same network."""
    grads = []
    for p in model.params:
        layer_grads = {}
        for key, arr in p.items():
            g = np.zeros_like(arr)
            flat_param = arr.ravel()
            flat_grad = g.ravel()
            for idx in range(flat_param.size):
                orig = flat_param[idx]
                flat_param[idx] = orig + h
                lp = loss_only(model, x, y, dropout_masks=masks, training=True)
                flat_param[idx] = orig - h
                lm = loss_only(model, x, y, dropout_masks=masks, training=True)
                flat_param[idx] = orig
                flat_grad[idx] = (lp - lm) / (2 * h)
            layer_grads[key] = g
        grads.append(layer_grads)
    return grads


def max_rel_error(analytic, numeric) -> float:
    """Worst normwise relative error over parameter arrays:
    ||a - n|| / max(||a||, ||n||). Normwise (not entrywise) because central
    differences carry ~1e-10 absolute roundoff, which would swamp a strict
    entrywise ratio on near-zero gradient entries."""
    worst = 0.0
    for pa, pn in zip(analytic, numeric):
        for key in pn:
            a = pa[key].ravel()
            n = pn[key].ravel()
            denom = max(np.linalg.norm(a), np.linalg.norm(n), 1e-12)
            worst = max(worst, float(np.linalg.norm(a - n) / denom))
    return worst


def hyperband_schedule_brute(max_resource: int, eta: int):
    """Iterative successive-halving enumerator (independent of the library's
    closed-form version): repeatedly divide the survivor count by eta and
    multiply the resource, bracket by bracket."""
    s_max = 0
    while eta ** (s_max + 1) <= max_resource:
        s_max += 1
    brackets = []
    for s in range(s_max, -1, -1):
        n = math.ceil((s_max + 1) * eta**s / (s + 1))
        r = max_resource / eta**s
        rungs = []
        ni, ri = n, r
        for _ in range(s + 1):
            rungs.append((ni, ri))
            ni = ni // eta
            ri = ri * eta
        brackets.append((s, rungs))
    return brackets
