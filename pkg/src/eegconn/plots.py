"""ROC rendering: pooled per-class, micro- and macro-average curves."""

from __future__ import annotations

import csv
import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .metrics import roc_auc


def pooled_curves(report) -> dict:
    """Named ROC curves over all outer-fold test scores.

    Returns {name: (fpr, tpr, thresholds, auc)}; the macro curve averages
    the per-class curves on a shared fpr grid, so it carries no thresholds.
    """
    if hasattr(report, "to_dict"):
        report = report.to_dict()
    scores = np.concatenate([np.asarray(f["scores"]) for f in report["folds"]])
    labels = np.concatenate([np.asarray(f["labels"]) for f in report["folds"]])
    class_names = report["class_names"]
    per_class_scores = {0: 1.0 - scores, 1: scores}
    out = {}
    for idx in (0, 1):
        curve, auc = roc_auc(per_class_scores[idx], (labels == idx).astype(int))
        fpr = np.asarray([p[0] for p in curve.points])
        tpr = np.asarray([p[1] for p in curve.points])
        out[f"class_{class_names[idx]}"] = (fpr, tpr, list(curve.thresholds), auc)
    micro_curve, micro = roc_auc(
        np.concatenate([per_class_scores[0], per_class_scores[1]]),
        np.concatenate([(labels == 0).astype(int), (labels == 1).astype(int)]),
    )
    out["micro_average"] = (
        np.asarray([p[0] for p in micro_curve.points]),
        np.asarray([p[1] for p in micro_curve.points]),
        list(micro_curve.thresholds),
        micro,
    )
    keys = [k for k in out if k.startswith("class_")]
    grid = np.unique(np.concatenate([out[k][0] for k in keys]))
    mean_tpr = np.mean([np.interp(grid, out[k][0], out[k][1]) for k in keys], axis=0)
    macro = float(np.trapezoid(mean_tpr, grid))
    out["macro_average"] = (grid, mean_tpr, [math.nan] * len(grid), macro)
    return out


def write_roc_csv(report, path: str) -> None:
    """Long-form CSV: curve, threshold, fpr, tpr."""
    curves = pooled_curves(report)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["curve", "threshold", "fpr", "tpr"])
        for name, (fpr, tpr, thresholds, _) in curves.items():
            for t, f, r in zip(thresholds, fpr, tpr):
                if isinstance(t, float) and math.isnan(t):
                    cell = ""
                elif math.isinf(t):
                    cell = "inf"
                else:
                    cell = repr(float(t))
                writer.writerow([name, cell, repr(float(f)), repr(float(r))])


def write_roc_svg(report, path: str, title: str = "ROC") -> None:
    curves = pooled_curves(report)
    fig, ax = plt.subplots(figsize=(6, 5))
    styles = {
        "micro_average": {"linestyle": "--", "linewidth": 2},
        "macro_average": {"linestyle": ":", "linewidth": 2},
    }
    for name, (fpr, tpr, _, auc) in curves.items():
        ax.plot(fpr, tpr, label=f"{name} (AUC={auc:.3f})", **styles.get(name, {}))
    ax.plot([0, 1], [0, 1], color="grey", linewidth=0.8, label="chance")
    ax.set_xlabel("False positive rate")
    ax.set_ylabel("True positive rate")
    ax.set_title(title)
    ax.legend(loc="lower right", fontsize=8)
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
