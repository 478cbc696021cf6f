"""Turn cohorts into model-ready feature images.

Connectivity methods map each recording to its N x N matrix; the raw
pathway subsamples the [channels x samples] matrix along time so the same
2-D engine handles both.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .connectivity import BicLag, FixedLag, compute_matrix
from .errors import ConfigError, DataError
from .recording import Cohort, Recording, zscore

FEATURE_KINDS = ("pearson", "spearman", "granger", "raw")


@dataclass
class FeatureConfig:
    kind: str = "pearson"
    alpha: float = 0.05
    lag_policy: FixedLag | BicLag | None = None  # granger only
    raw_width: int = 128
    zscore: bool = True

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise ConfigError(f"unknown feature kind {self.kind!r}")
        if self.raw_width < 4:
            raise ConfigError(f"raw_width must be >= 4, got {self.raw_width}")

    def describe(self) -> dict:
        d = {"kind": self.kind, "zscore": self.zscore}
        if self.kind == "granger":
            d["alpha"] = self.alpha
            d["lag_policy"] = (self.lag_policy or BicLag()).describe()
        if self.kind == "raw":
            d["raw_width"] = self.raw_width
        return d


def subsample_columns(n_samples: int, width: int) -> np.ndarray:
    """Strided column picks: every (n_samples // width)-th sample."""
    if n_samples < width:
        raise DataError(
            f"recording has {n_samples} samples, fewer than raw width {width}"
        )
    stride = n_samples // width
    return np.arange(width) * stride


def subject_image(rec: Recording, cfg: FeatureConfig) -> np.ndarray:
    """One [H, W, 1] float image for a recording under the given features."""
    if cfg.zscore:
        rec = zscore(rec)
    if cfg.kind == "raw":
        cols = subsample_columns(rec.n_samples, cfg.raw_width)
        return rec.data[:, cols][:, :, None].astype(np.float64)
    mat = compute_matrix(rec, cfg.kind, alpha=cfg.alpha, lag_policy=cfg.lag_policy)
    return mat.values[:, :, None]


def _image_task(args):
    rec, cfg = args
    return subject_image(rec, cfg)


def featurize_cohort(cohort: Cohort, cfg: FeatureConfig, jobs: int = 1):
    """Feature images for every recording.

    Returns (x [n,H,W,1], y class indices, subject_ids). Per-subject feature
    computation is label-free, so doing it before any split cannot leak.
    """
    tasks = [(rec, cfg) for rec in cohort.recordings]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            images = list(pool.map(_image_task, tasks))
    else:
        images = [_image_task(t) for t in tasks]
    x = np.stack(images)
    y = np.asarray([cohort.class_index(rec.label) for rec in cohort.recordings])
    subject_ids = [rec.subject_id for rec in cohort.recordings]
    return x, y, subject_ids
