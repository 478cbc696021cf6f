"""End-to-end experiment orchestration and artifact writing.

Each run writes to a fresh timestamped subdirectory of out_dir: resolved
config, EvalReport JSON, trial log CSV, ROC CSV/SVG, and a manifest that is
sufficient to reproduce the run (config + seeds + report digest).
"""

from __future__ import annotations

import csv
import datetime
import json
import os
import time
from dataclasses import dataclass

from . import __version__
from .connectivity import compute_matrix, save_matrix
from .crossval import EvalReport, nested_cv
from .errors import ConfigError, DataError, EegConnError
from .features import FeatureConfig, featurize_cohort
from .plots import write_roc_csv, write_roc_svg
from .recording import Cohort, load_manifest, save_cohort, zscore
from .runconfig import (
    config_hash,
    feature_config,
    fixed_hyperparams,
    train_settings,
    tuner_budgets,
)
from .synthgen import generate_cohort, preset, save_ground_truth


def make_run_dir(out_dir: str, prefix: str = "run") -> str:
    """Fresh timestamped subdirectory; never reuses or overwrites one."""
    os.makedirs(out_dir, exist_ok=True)
    stamp = datetime.datetime.now(datetime.timezone.utc).strftime("%Y%m%d_%H%M%S")
    for i in range(10000):
        suffix = f"_{i:03d}" if i else ""
        path = os.path.join(out_dir, f"{prefix}_{stamp}{suffix}")
        try:
            os.mkdir(path)
            return path
        except FileExistsError:
            continue
    raise DataError(f"could not allocate a fresh run directory under {out_dir}")


def resolve_cohort(cfg: dict):
    """Materialize the input section: a synthetic preset or a manifest.

    Returns (cohort, truth-or-None).
    """
    inp = cfg["input"]
    if inp["kind"] == "manifest":
        return load_manifest(inp["path"]), None
    spec = preset(
        inp["preset"],
        n_subjects_per_class=inp["n_subjects_per_class"],
        seed=cfg["seed"],
        jitter=inp["jitter"],
    )
    return generate_cohort(spec)


@dataclass
class RunResult:
    report: EvalReport
    manifest: dict
    run_dir: str


def run_experiment(cfg: dict, quiet: bool = False) -> RunResult:
    """cmd_run: cohort -> features -> nested CV -> report + artifacts."""
    say = (lambda *a: None) if quiet else print
    run_dir = make_run_dir(cfg["out_dir"])
    timings = {}
    t0 = time.perf_counter()
    cohort, _truth = resolve_cohort(cfg)
    timings["input_s"] = time.perf_counter() - t0
    say(f"[input] {len(cohort.recordings)} recordings, "
        f"{len(cohort.channel_labels)} channels, classes {cohort.class_names}")

    fcfg = feature_config(cfg)
    t0 = time.perf_counter()
    x, y, subject_ids = featurize_cohort(cohort, fcfg, jobs=cfg["jobs"])
    timings["features_s"] = time.perf_counter() - t0
    say(f"[features] {fcfg.kind}: images {x.shape[1]}x{x.shape[2]}")

    t0 = time.perf_counter()
    report = nested_cv(
        x,
        y,
        subject_ids,
        cohort.class_names,
        model=cfg["model"],
        tuner=cfg["tuner"]["kind"],
        budgets=tuner_budgets(cfg),
        settings=train_settings(cfg),
        k=cfg["cv"]["k"],
        inner_policy=cfg["cv"]["inner"],
        seed=cfg["seed"],
        fixed_hp=fixed_hyperparams(cfg),
        config_hash=config_hash(cfg),
        jobs=cfg["jobs"],
    )
    timings["nested_cv_s"] = time.perf_counter() - t0
    agg = report.aggregate
    say(f"[cv] mean test accuracy {agg['accuracy_mean']:.3f}  "
        f"mean test AUC {agg['auc_mean']:.3f}  "
        f"micro {agg['micro_auc']:.3f}  macro {agg['macro_auc']:.3f}")

    t0 = time.perf_counter()
    outputs = _write_run_artifacts(run_dir, cfg, report)
    timings["write_s"] = time.perf_counter() - t0
    manifest = {
        "version": __version__,
        "config": cfg,
        "seed": cfg["seed"],
        "config_hash": config_hash(cfg),
        "report_digest": report.digest(),
        "stage_wall_times_s": {k: round(v, 3) for k, v in timings.items()},
        "outputs": outputs,
    }
    manifest_path = os.path.join(run_dir, "run_manifest.json")
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    say(f"[done] artifacts in {run_dir}")
    return RunResult(report=report, manifest=manifest, run_dir=run_dir)


def _write_run_artifacts(run_dir: str, cfg: dict, report: EvalReport) -> list:
    outputs = []

    def emit(name):
        outputs.append(name)
        return os.path.join(run_dir, name)

    with open(emit("config.json"), "w") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(emit("report.json"), "w") as fh:
        fh.write(report.to_json())
    rows = []
    for fr in report.folds:
        for row in fr.trial_rows:
            rows.append({"fold": fr.fold, **row})
    if rows:
        with open(emit("trials.csv"), "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
    write_roc_csv(report, emit("roc.csv"))
    write_roc_svg(report, emit("roc.svg"))
    outputs.append("run_manifest.json")
    return outputs


def run_connectivity(cfg: dict, quiet: bool = False) -> str:
    """cmd_connectivity: one matrix CSV + metadata sidecar per recording."""
    say = (lambda *a: None) if quiet else print
    fcfg = feature_config(cfg)
    if fcfg.kind == "raw":
        raise ConfigError("connectivity export needs a connectivity method, not raw")
    cohort, _ = resolve_cohort(cfg)
    run_dir = make_run_dir(cfg["out_dir"], prefix="connectivity")
    failures = []
    written = 0
    for rec in cohort.recordings:
        try:
            use = zscore(rec) if fcfg.zscore else rec
            mat = compute_matrix(
                use, fcfg.kind, alpha=fcfg.alpha, lag_policy=fcfg.lag_policy
            )
            save_matrix(mat, os.path.join(run_dir, f"{rec.subject_id}_{fcfg.kind}.csv"))
            written += 1
        except EegConnError as exc:
            failures.append((rec.subject_id, str(exc)))
    say(f"[{fcfg.kind}] wrote {written}/{len(cohort.recordings)} matrices to {run_dir}")
    for sid, msg in failures:
        say(f"[fail] subject {sid}: {msg}")
    if failures:
        raise DataError(
            f"connectivity failed for {len(failures)} subject(s): "
            + ", ".join(sid for sid, _ in failures)
        )
    return run_dir


def run_synth(preset_name: str, out_dir: str, n_subjects=None, seed=0,
              jitter=0.1, quiet=False) -> str:
    """cmd_synth: write cohort CSVs, a manifest, and the ground-truth JSON."""
    say = (lambda *a: None) if quiet else print
    spec = preset(preset_name, n_subjects_per_class=n_subjects, seed=seed, jitter=jitter)
    cohort, truth = generate_cohort(spec)
    os.makedirs(out_dir, exist_ok=True)
    manifest_path = save_cohort(cohort, out_dir)
    save_ground_truth(truth, os.path.join(out_dir, "ground_truth.json"))
    say(f"[synth] {preset_name}: {len(cohort.recordings)} recordings -> {out_dir}")
    return manifest_path


def compare_runs(cfg_a: dict, cfg_b: dict, allow_seed_mismatch: bool = False,
                 quiet: bool = False) -> dict:
    """cmd_compare: run both configs on the identical cohort and seed, then
    report side-by-side aggregates and the mean-test-AUC difference (A - B)."""
    if cfg_a["input"] != cfg_b["input"]:
        raise ConfigError(
            "compare requires identical input sections (same cohort); "
            f"got {cfg_a['input']} vs {cfg_b['input']}"
        )
    if cfg_a["seed"] != cfg_b["seed"] and not allow_seed_mismatch:
        raise ConfigError(
            f"compare requires identical seeds ({cfg_a['seed']} vs {cfg_b['seed']}); "
            "pass --allow-seed-mismatch to override"
        )
    res_a = run_experiment(cfg_a, quiet=quiet)
    res_b = run_experiment(cfg_b, quiet=quiet)
    agg_a, agg_b = res_a.report.aggregate, res_b.report.aggregate
    comparison = {
        "a": {"features": cfg_a["features"]["kind"], "model": cfg_a["model"],
              "run_dir": res_a.run_dir, "aggregate": agg_a},
        "b": {"features": cfg_b["features"]["kind"], "model": cfg_b["model"],
              "run_dir": res_b.run_dir, "aggregate": agg_b},
        "delta_auc_mean": agg_a["auc_mean"] - agg_b["auc_mean"],
    }
    if not quiet:
        print(format_comparison(comparison))
    return comparison


def format_comparison(comparison: dict) -> str:
    a, b = comparison["a"], comparison["b"]
    rows = [
        ("metric", f"A ({a['features']}/{a['model']})", f"B ({b['features']}/{b['model']})"),
    ]
    for key in ("accuracy_mean", "precision_mean", "recall_mean", "auc_mean",
                "micro_auc", "macro_auc"):
        rows.append((key, f"{a['aggregate'][key]:.4f}", f"{b['aggregate'][key]:.4f}"))
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) for row in rows]
    lines.append(f"delta mean test AUC (A - B): {comparison['delta_auc_mean']:+.4f}")
    return "\n".join(lines)


def format_report(report_doc: dict) -> str:
    """Human-readable table for an EvalReport JSON document."""
    lines = [
        f"classes: {report_doc['class_names']}  k={report_doc['k']}  "
        f"inner={report_doc['inner_policy']}  seed={report_doc['seed']}",
        "fold  acc     prec    recall  auc     test subjects",
    ]
    for f in report_doc["folds"]:
        lines.append(
            f"{f['fold']:>4}  {f['accuracy']:.3f}   {f['precision']:.3f}   "
            f"{f['recall']:.3f}   {f['auc']:.3f}   {','.join(f['test_subjects'])}"
        )
    agg = report_doc["aggregate"]
    lines.append(
        f"mean  {agg['accuracy_mean']:.3f}   {agg['precision_mean']:.3f}   "
        f"{agg['recall_mean']:.3f}   {agg['auc_mean']:.3f}"
    )
    lines.append(
        f"micro AUC {agg['micro_auc']:.4f}   macro AUC {agg['macro_auc']:.4f}"
    )
    return "\n".join(lines)
