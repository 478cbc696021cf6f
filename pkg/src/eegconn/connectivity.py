"""Connectivity estimators: Pearson, Spearman, and pairwise Granger causality.

Pearson/Spearman produce symmetric real matrices with unit diagonal; the
Granger estimator runs a bivariate F-test per ordered channel pair and
binarizes at a significance level, yielding a directed 0/1 matrix whose
entry (i, j) = 1 means channel j helps predict channel i.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc

from .errors import DataError, NumericError
from .recording import Recording

DEFAULT_ALPHA = 0.05
DEFAULT_MAX_LAG = 8


@dataclass
class ConnectivityMatrix:
    """N x N connectivity values plus estimation provenance.

    alpha is set only for the granger method; lag_policy describes how the
    autoregression order was chosen for each pair.
    """

    values: np.ndarray
    method: str
    directed: bool
    channel_labels: list[str]
    alpha: float | None = None
    lag_policy: str | None = None
    subject_id: str | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        n = len(self.channel_labels)
        if self.values.shape != (n, n):
            raise DataError(
                f"connectivity matrix shape {self.values.shape} does not match "
                f"{n} channel labels"
            )


@dataclass
class FixedLag:
    """Use the same autoregression order for every pair."""

    lag: int

    def __post_init__(self):
        if self.lag < 1:
            raise DataError(f"lag must be >= 1, got {self.lag}")

    def describe(self) -> str:
        return f"fixed({self.lag})"


@dataclass
class BicLag:
    """Pick the order per pair by minimizing BIC over 1..max_lag."""

    max_lag: int = DEFAULT_MAX_LAG

    def __post_init__(self):
        if self.max_lag < 1:
            raise DataError(f"max_lag must be >= 1, got {self.max_lag}")

    def describe(self) -> str:
        return f"bic({self.max_lag})"


@dataclass
class VarFit:
    """Result of one restricted-vs-unrestricted autoregression F-test."""

    lag_order: int
    rss_restricted: float
    rss_unrestricted: float
    n_obs: int
    f_statistic: float
    p_value: float


def _check_no_constant_channel(rec: Recording) -> None:
    sd = rec.data.std(axis=1)
    flat = np.flatnonzero(sd == 0.0)
    if flat.size:
        ch = rec.channel_labels[int(flat[0])]
        raise DataError(
            f"recording {rec.subject_id!r}: channel {ch!r} is constant"
        )


def pearson_matrix(rec: Recording) -> ConnectivityMatrix:
    """Sample Pearson correlation between every pair of channels."""
    _check_no_constant_channel(rec)
    x = rec.data - rec.data.mean(axis=1, keepdims=True)
    cov = x @ x.T
    norm = np.sqrt(np.diag(cov))
    r = cov / np.outer(norm, norm)
    r = np.clip((r + r.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(r, 1.0)
    return ConnectivityMatrix(
        values=r,
        method="pearson",
        directed=False,
        channel_labels=list(rec.channel_labels),
        subject_id=rec.subject_id,
    )


def rank_transform(series: np.ndarray) -> np.ndarray:
    """Average ranks (1-based); ties get the midpoint of their rank range."""
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise DataError("rank_transform expects a nonempty 1-D series")
    _, inverse, counts = np.unique(x, return_inverse=True, return_counts=True)
    upper = np.cumsum(counts)
    avg = upper - (counts - 1) / 2.0
    return avg[inverse]


def spearman_matrix(rec: Recording) -> ConnectivityMatrix:
    """Pearson correlation of average-rank-transformed channels."""
    _check_no_constant_channel(rec)
    ranked = np.vstack([rank_transform(row) for row in rec.data])
    out = pearson_matrix(
        Recording(
            subject_id=rec.subject_id,
            channel_labels=rec.channel_labels,
            sample_rate_hz=rec.sample_rate_hz,
            data=ranked,
            label=rec.label,
        )
    )
    out.method = "spearman"
    return out


def _lagged_design(target: np.ndarray, driver: np.ndarray | None, lag: int):
    """Rows t = lag..T-1: [1, target[t-1..t-lag], (driver[t-1..t-lag])]."""
    T = target.shape[0]
    n_obs = T - lag
    cols = [np.ones(n_obs)]
    for i in range(1, lag + 1):
        cols.append(target[lag - i : T - i])
    if driver is not None:
        for i in range(1, lag + 1):
            cols.append(driver[lag - i : T - i])
    return np.column_stack(cols), target[lag:]


def _ols_rss(design: np.ndarray, y: np.ndarray) -> float:
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        raise NumericError(
            "singular design matrix in autoregression fit "
            "(constant or collinear inputs)"
        )
    resid = y - design @ coef
    return float(resid @ resid)


def f_sf(f_stat: float, d1: int, d2: int) -> float:
    """Upper tail of the F distribution via the regularized incomplete beta."""
    if math.isinf(f_stat):
        return 0.0
    if f_stat <= 0.0:
        return 1.0
    return float(betainc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f_stat)))


def fit_var_pair(target: np.ndarray, driver: np.ndarray, lag: int) -> VarFit:
    """F-test of whether driver's past improves prediction of target.

    The restricted model regresses target[t] on its own lag lags plus an
    intercept; the unrestricted model adds the driver's lags. Both are fit
    by OLS on the common sample of n_obs = T - lag rows, and
    F = ((rss_r - rss_u)/lag) / (rss_u/(n_obs - 2*lag - 1)).
    """
    target = np.asarray(target, dtype=np.float64)
    driver = np.asarray(driver, dtype=np.float64)
    if target.shape != driver.shape or target.ndim != 1:
        raise DataError("target and driver must be 1-D series of equal length")
    if lag < 1:
        raise DataError(f"lag must be >= 1, got {lag}")
    T = target.shape[0]
    n_obs = T - lag
    dof2 = n_obs - 2 * lag - 1
    if dof2 <= 0:
        raise DataError(
            f"series of length {T} too short for lag {lag}: need "
            f"T - lag > 2*lag + 1"
        )
    design_r, y = _lagged_design(target, None, lag)
    design_u, _ = _lagged_design(target, driver, lag)
    rss_r = _ols_rss(design_r, y)
    rss_u = _ols_rss(design_u, y)
    rss_u = min(rss_u, rss_r)  # nested models; guard float round-off
    if rss_u == 0.0:
        f_stat = math.inf
    else:
        f_stat = max(0.0, ((rss_r - rss_u) / lag) / (rss_u / dof2))
    return VarFit(
        lag_order=lag,
        rss_restricted=rss_r,
        rss_unrestricted=rss_u,
        n_obs=n_obs,
        f_statistic=f_stat,
        p_value=f_sf(f_stat, lag, dof2),
    )


def select_lag(target: np.ndarray, driver: np.ndarray, max_lag: int) -> int:
    """BIC-minimizing order of the unrestricted model over 1..max_lag.

    All candidates are scored on the common sample left after dropping
    max_lag initial points, so their likelihoods are comparable. Ties go
    to the smaller lag.
    """
    target = np.asarray(target, dtype=np.float64)
    driver = np.asarray(driver, dtype=np.float64)
    if max_lag < 1:
        raise DataError(f"max_lag must be >= 1, got {max_lag}")
    T = target.shape[0]
    n_obs = T - max_lag
    if n_obs - 2 * max_lag - 1 <= 0:
        raise DataError(
            f"series of length {T} too short for max_lag {max_lag}"
        )
    best_lag, best_bic = 1, math.inf
    for lag in range(1, max_lag + 1):
        # Trim the front so every candidate predicts the same n_obs points.
        off = max_lag - lag
        design, y = _lagged_design(target[off:], driver[off:], lag)
        rss = _ols_rss(design, y)
        k = 2 * lag + 1
        if rss <= 0.0:
            bic = -math.inf
        else:
            bic = n_obs * math.log(rss / n_obs) + k * math.log(n_obs)
        if bic < best_bic:
            best_lag, best_bic = lag, bic
    return best_lag


def granger_matrix(
    rec: Recording,
    alpha: float = DEFAULT_ALPHA,
    lag_policy: FixedLag | BicLag | None = None,
) -> ConnectivityMatrix:
    """Directed binary matrix: entry (i, j) = 1 iff driver channel j predicts
    target channel i with p strictly below alpha."""
    if not (0.0 < alpha < 1.0):
        raise DataError(f"alpha must be in (0, 1), got {alpha}")
    if lag_policy is None:
        lag_policy = BicLag()
    _check_no_constant_channel(rec)
    n = rec.n_channels
    values = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            target, driver = rec.data[i], rec.data[j]
            try:
                if isinstance(lag_policy, FixedLag):
                    lag = lag_policy.lag
                else:
                    lag = select_lag(target, driver, lag_policy.max_lag)
                fit = fit_var_pair(target, driver, lag)
            except (DataError, NumericError) as exc:
                pair = f"{rec.channel_labels[j]!r} -> {rec.channel_labels[i]!r}"
                raise type(exc)(
                    f"granger fit failed for channel pair {pair}: {exc}"
                ) from exc
            if fit.p_value < alpha:
                values[i, j] = 1.0
    return ConnectivityMatrix(
        values=values,
        method="granger",
        directed=True,
        channel_labels=list(rec.channel_labels),
        alpha=alpha,
        lag_policy=lag_policy.describe(),
        subject_id=rec.subject_id,
    )


def compute_matrix(
    rec: Recording,
    method: str,
    alpha: float = DEFAULT_ALPHA,
    lag_policy: FixedLag | BicLag | None = None,
) -> ConnectivityMatrix:
    """Dispatch by method name: pearson | spearman | granger."""
    if method == "pearson":
        return pearson_matrix(rec)
    if method == "spearman":
        return spearman_matrix(rec)
    if method == "granger":
        return granger_matrix(rec, alpha=alpha, lag_policy=lag_policy)
    raise DataError(f"unknown connectivity method {method!r}")


def save_matrix(mat: ConnectivityMatrix, path: str) -> None:
    """Write the matrix as CSV (header = channel labels) plus a JSON sidecar
    <path>.meta.json with method/alpha/lag policy/subject provenance."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(mat.channel_labels)
        for row in mat.values:
            writer.writerow([repr(float(v)) for v in row])
    meta = {
        "method": mat.method,
        "directed": mat.directed,
        "alpha": mat.alpha,
        "lag_policy": mat.lag_policy,
        "subject_id": mat.subject_id,
        "channel_labels": mat.channel_labels,
    }
    with open(path + ".meta.json", "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def load_matrix(path: str) -> ConnectivityMatrix:
    """Inverse of save_matrix."""
    if not os.path.isfile(path):
        raise DataError(f"matrix file not found: {path}")
    meta_path = path + ".meta.json"
    if not os.path.isfile(meta_path):
        raise DataError(f"matrix metadata not found: {meta_path}")
    with open(meta_path) as fh:
        meta = json.load(fh)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        labels = next(reader)
        rows = [[float(c) for c in row] for row in reader if row]
    return ConnectivityMatrix(
        values=np.asarray(rows),
        method=meta["method"],
        directed=meta["directed"],
        channel_labels=labels,
        alpha=meta.get("alpha"),
        lag_policy=meta.get("lag_policy"),
        subject_id=meta.get("subject_id"),
    )
