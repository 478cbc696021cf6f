"""Subject-level stratified folds and the nested cross-validation harness.

Outer folds estimate generalization; hyperparameters are chosen by a tuner
that only ever sees inner splits of the outer-training subjects, so no
example influences both its own tuning and its own evaluation. All splits
are by subject: windows cut from one recording can never straddle folds.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .metrics import (
    ConfusionCounts,
    RocCurve,
    confusion,
    micro_macro_auc,
    precision_recall_accuracy,
    roc_auc,
)
from .nn import (
    TrainConfig,
    build_tuned_spec,
    build_untuned_spec,
    evaluate,
    predict_proba,
    score_class1,
    train,
)
from .seeds import derive_seed
from .tuning import (
    DEFAULT_HYPERPARAMS,
    HyperParams,
    SearchSpace,
    bayes_opt,
    hyperband,
    random_search,
    trials_to_rows,
)

REPORT_SCHEMA_VERSION = 1


@dataclass
class FoldPlan:
    """Outer fold assignment per subject plus the inner-split recipe."""

    k: int
    outer_assignments: dict
    inner_policy: str
    seed: int

    def fold_subjects(self, fold: int) -> list[str]:
        return sorted(s for s, f in self.outer_assignments.items() if f == fold)


def parse_inner_policy(text: str):
    """"kfold:3" -> ("kfold", 3); "holdout:0.25" -> ("holdout", 0.25)."""
    try:
        kind, _, arg = text.partition(":")
        if kind == "kfold":
            m = int(arg)
            if m < 2:
                raise ValueError("inner k must be >= 2")
            return "kfold", m
        if kind == "holdout":
            frac = float(arg)
            if not (0.0 < frac < 1.0):
                raise ValueError("holdout fraction must be in (0, 1)")
            return "holdout", frac
    except ValueError as exc:
        raise ConfigError(f"bad inner policy {text!r}: {exc}") from None
    raise ConfigError(f"bad inner policy {text!r}: expected kfold:<k> or holdout:<frac>")


def stratified_folds(
    subject_labels: dict,
    k: int,
    seed: int,
    inner_policy: str = "kfold:3",
) -> FoldPlan:
    """Assign subjects to k folds with sizes within 1 of each other and
    per-class counts per fold within 1 (greedy: each class hands its
    remainder subjects to the currently smallest folds)."""
    if k < 2:
        raise ConfigError(f"k must be >= 2, got {k}")
    if k > len(subject_labels):
        raise ConfigError(
            f"k={k} exceeds the {len(subject_labels)} available subjects"
        )
    classes = sorted(set(subject_labels.values()))
    if len(classes) < 2:
        raise DataError("stratification needs subjects of both classes")
    parse_inner_policy(inner_policy)
    rng = np.random.default_rng(seed)
    fold_sizes = [0] * k
    assignments: dict = {}
    for cls in classes:
        subjects = sorted(s for s, c in subject_labels.items() if c == cls)
        rng.shuffle(subjects)
        base, extra = divmod(len(subjects), k)
        tie_break = list(rng.permutation(k))
        order = sorted(range(k), key=lambda f: (fold_sizes[f], tie_break[f]))
        quota = {f: base for f in range(k)}
        for f in order[:extra]:
            quota[f] += 1
        it = iter(subjects)
        for f in range(k):
            for _ in range(quota[f]):
                assignments[next(it)] = f
                fold_sizes[f] += 1
    return FoldPlan(k=k, outer_assignments=assignments, inner_policy=inner_policy, seed=seed)


def inner_splits(subject_labels: dict, policy: str, seed: int):
    """Concrete (train_subjects, val_subjects) pairs for one outer-train set."""
    kind, arg = parse_inner_policy(policy)
    classes = sorted(set(subject_labels.values()))
    if kind == "kfold":
        m = min(arg, min(sum(1 for c in subject_labels.values() if c == cls) for cls in classes))
        if m < 2:
            raise DataError("too few subjects per class for an inner k-fold split")
        plan = stratified_folds(subject_labels, m, seed, inner_policy="holdout:0.5")
        out = []
        for f in range(m):
            val = set(plan.fold_subjects(f))
            tr = sorted(s for s in subject_labels if s not in val)
            out.append((tr, sorted(val)))
        return out
    # stratified holdout: round up so every class contributes >= 1 validation subject
    rng = np.random.default_rng(seed)
    val = []
    for cls in classes:
        subjects = sorted(s for s, c in subject_labels.items() if c == cls)
        if len(subjects) < 2:
            raise DataError(f"class {cls!r} needs >= 2 subjects for a holdout split")
        rng.shuffle(subjects)
        n_val = min(len(subjects) - 1, max(1, math.ceil(arg * len(subjects))))
        val.extend(subjects[:n_val])
    val_set = set(val)
    tr = sorted(s for s in subject_labels if s not in val_set)
    return [(tr, sorted(val_set))]


# -- budgets and model families ---------------------------------------------------


@dataclass
class TunerBudgets:
    """Per-optimizer search budgets; resource_epochs is also the epoch budget
    random search and Bayesian optimization grant every trial."""

    n_trials: int = 20
    resource_epochs: int = 30
    max_resource: int = 81
    eta: int = 3
    n_init: int = 5
    n_iter: int = 15


@dataclass
class TrainSettings:
    batch_size: int = 8
    max_epochs: int = 100
    early_stop_patience: int | None = 10


def _train_config(hp: HyperParams, settings: TrainSettings, epochs: int, seed: int,
                  patience=None) -> TrainConfig:
    return TrainConfig(
        learning_rate=hp.learning_rate,
        batch_size=settings.batch_size,
        max_epochs=epochs,
        early_stop_patience=patience,
        seed=seed,
    )


def _build_spec(model_kind: str, input_hw, hp: HyperParams):
    if model_kind == "tuned":
        return build_tuned_spec(input_hw, hp)
    if model_kind == "untuned":
        return build_untuned_spec(input_hw)
    raise ConfigError(f"unknown model kind {model_kind!r}")


# -- report -------------------------------------------------------------------


@dataclass
class FoldResult:
    fold: int
    test_subjects: list
    counts: ConfusionCounts
    accuracy: float
    precision: float
    recall: float
    precision_defined: bool
    recall_defined: bool
    roc: RocCurve
    auc: float
    scores: list
    labels: list
    chosen_hp: dict | None
    trial_rows: list = field(default_factory=list)


@dataclass
class EvalReport:
    class_names: tuple
    seed: int
    k: int
    inner_policy: str
    fold_assignments: dict
    folds: list
    aggregate: dict
    config_hash: str | None = None
    schema_version: int = REPORT_SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "class_names": list(self.class_names),
            "seed": self.seed,
            "k": self.k,
            "inner_policy": self.inner_policy,
            "config_hash": self.config_hash,
            "fold_assignments": {s: int(f) for s, f in sorted(self.fold_assignments.items())},
            "folds": [
                {
                    "fold": fr.fold,
                    "test_subjects": list(fr.test_subjects),
                    "confusion": {
                        "tp": fr.counts.tp,
                        "fp": fr.counts.fp,
                        "tn": fr.counts.tn,
                        "fn": fr.counts.fn,
                    },
                    "accuracy": fr.accuracy,
                    "precision": fr.precision,
                    "recall": fr.recall,
                    "precision_defined": fr.precision_defined,
                    "recall_defined": fr.recall_defined,
                    "auc": fr.auc,
                    "roc": {
                        "thresholds": [_json_float(t) for t in fr.roc.thresholds],
                        "fpr": [p[0] for p in fr.roc.points],
                        "tpr": [p[1] for p in fr.roc.points],
                    },
                    "scores": list(fr.scores),
                    "labels": [int(v) for v in fr.labels],
                    "chosen_hyperparams": fr.chosen_hp,
                }
                for fr in self.folds
            ],
            "aggregate": self.aggregate,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode()
        ).hexdigest()


def _json_float(v: float):
    return "inf" if math.isinf(v) else v


def _aggregate(folds: list) -> dict:
    def stats(vals):
        arr = np.asarray(vals, dtype=np.float64)
        return float(arr.mean()), float(arr.std())

    acc_m, acc_s = stats([f.accuracy for f in folds])
    pre_m, pre_s = stats([f.precision for f in folds])
    rec_m, rec_s = stats([f.recall for f in folds])
    auc_m, auc_s = stats([f.auc for f in folds])
    pooled_scores = np.concatenate([np.asarray(f.scores) for f in folds])
    pooled_labels = np.concatenate([np.asarray(f.labels) for f in folds])
    micro, macro = micro_macro_auc(
        (1.0 - pooled_scores, pooled_scores), pooled_labels
    )
    return {
        "accuracy_mean": acc_m,
        "accuracy_std": acc_s,
        "precision_mean": pre_m,
        "precision_std": pre_s,
        "recall_mean": rec_m,
        "recall_std": rec_s,
        "auc_mean": auc_m,
        "auc_std": auc_s,
        "micro_auc": micro,
        "macro_auc": macro,
    }


# -- nested CV ------------------------------------------------------------------


def _subject_table(subject_ids, y, class_names):
    table: dict = {}
    for sid, yi in zip(subject_ids, y):
        label = class_names[int(yi)]
        if table.setdefault(sid, label) != label:
            raise DataError(f"subject {sid!r} appears with two different labels")
    return table


def _rows_for(subject_ids, wanted) -> np.ndarray:
    wanted = set(wanted)
    return np.asarray([i for i, s in enumerate(subject_ids) if s in wanted], dtype=int)


def _predict_classes(probs: np.ndarray) -> np.ndarray:
    if probs.shape[1] == 2:
        return probs.argmax(axis=1)
    return (probs[:, 0] >= 0.5).astype(int)


def _run_outer_fold(payload: dict) -> FoldResult:
    """One outer fold: tune on inner splits of the training subjects, retrain
    on all of them, evaluate on the held-out subjects. Top-level and driven
    by plain data so folds can run in worker processes."""
    x = payload["x"]
    y = payload["y"]
    subject_ids = payload["subject_ids"]
    class_names = payload["class_names"]
    plan: FoldPlan = payload["plan"]
    fold = payload["fold"]
    model_kind = payload["model_kind"]
    tuner_kind = payload["tuner_kind"]
    budgets: TunerBudgets = payload["budgets"]
    settings: TrainSettings = payload["settings"]
    seed = payload["seed"]
    fixed_hp = payload["fixed_hp"]

    input_hw = (x.shape[1], x.shape[2])
    test_subjects = plan.fold_subjects(fold)
    train_subjects = sorted(set(subject_ids) - set(test_subjects))
    train_labels = {
        s: class_names[int(y[_rows_for(subject_ids, [s])[0]])] for s in train_subjects
    }
    splits = inner_splits(train_labels, plan.inner_policy, derive_seed(seed, fold, 1))
    split_rows = [
        (_rows_for(subject_ids, tr), _rows_for(subject_ids, val)) for tr, val in splits
    ]

    def objective(hp: HyperParams, resource: int, obj_seed: int) -> float:
        accs = []
        for si, (tr_rows, val_rows) in enumerate(split_rows):
            cfg = _train_config(hp, settings, resource, derive_seed(obj_seed, si))
            spec = _build_spec(model_kind, input_hw, hp)
            model, _ = train(spec, (x[tr_rows], y[tr_rows]), (x[val_rows], y[val_rows]), cfg)
            _, acc = evaluate(model, x[val_rows], y[val_rows])
            accs.append(acc)
        return float(np.mean(accs))

    tuner_seed = derive_seed(seed, fold, 2)
    trial_rows: list = []
    if tuner_kind == "none" or model_kind == "untuned":
        best_hp = fixed_hp or DEFAULT_HYPERPARAMS
        chosen = None if model_kind == "untuned" else best_hp.as_dict()
    else:
        space = payload["space"]
        if tuner_kind == "random":
            best, trials = random_search(
                objective, space, budgets.n_trials, tuner_seed,
                resource=budgets.resource_epochs,
            )
        elif tuner_kind == "hyperband":
            best, trials = hyperband(
                objective, space, budgets.max_resource, budgets.eta, tuner_seed
            )
        elif tuner_kind == "bayes":
            best, trials = bayes_opt(
                objective, space, budgets.n_init, budgets.n_iter, tuner_seed,
                resource=budgets.resource_epochs,
            )
        else:
            raise ConfigError(f"unknown tuner {tuner_kind!r}")
        best_hp = best.hp
        chosen = best_hp.as_dict()
        trial_rows = trials_to_rows(trials)

    # Retrain on the full outer-training portion with the chosen hyperparameters.
    retrain_rows = _rows_for(subject_ids, train_subjects)
    cfg = _train_config(best_hp, settings, settings.max_epochs, derive_seed(seed, fold, 3))
    spec = _build_spec(model_kind, input_hw, best_hp)
    try:
        model, _ = train(spec, (x[retrain_rows], y[retrain_rows]), None, cfg)
        test_rows = _rows_for(subject_ids, test_subjects)
        probs = predict_proba(model, x[test_rows])
    except (ConfigError, DataError) as exc:
        raise type(exc)(f"outer fold {fold}: {exc}") from exc
    scores = probs[:, 1] if probs.shape[1] == 2 else probs[:, 0]
    preds = _predict_classes(probs)
    labels = y[test_rows]
    counts = confusion(labels, preds)
    rates = precision_recall_accuracy(counts)
    try:
        roc, auc = roc_auc(scores, labels)
    except DataError as exc:
        raise DataError(f"outer fold {fold}: {exc}") from None
    return FoldResult(
        fold=fold,
        test_subjects=test_subjects,
        counts=counts,
        accuracy=rates.accuracy,
        precision=rates.precision,
        recall=rates.recall,
        precision_defined=rates.precision_defined,
        recall_defined=rates.recall_defined,
        roc=roc,
        auc=auc,
        scores=[float(v) for v in scores],
        labels=[int(v) for v in labels],
        chosen_hp=chosen,
        trial_rows=trial_rows,
    )


def nested_cv(
    x,
    y,
    subject_ids,
    class_names,
    *,
    model: str = "tuned",
    tuner: str = "random",
    budgets: TunerBudgets | None = None,
    settings: TrainSettings | None = None,
    k: int = 10,
    inner_policy: str = "kfold:3",
    seed: int = 0,
    fixed_hp: HyperParams | None = None,
    space: SearchSpace | None = None,
    config_hash: str | None = None,
    jobs: int = 1,
) -> EvalReport:
    """Nested k-fold evaluation of one feature/model/tuner configuration.

    x: [n, H, W, 1] feature images; y: class indices; subject_ids aligns with
    rows (repeats allowed for windowed data). Deterministic given seed; outer
    folds may run in parallel without changing the result.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=int)
    if x.ndim != 4 or x.shape[0] != len(y) or len(subject_ids) != len(y):
        raise DataError("x, y and subject_ids must align on the first axis")
    if model == "untuned" and tuner not in ("none",):
        raise ConfigError("the untuned model has no tunable hyperparameters; use tuner='none'")
    if model == "tuned" and tuner == "none" and fixed_hp is None:
        fixed_hp = DEFAULT_HYPERPARAMS
    budgets = budgets or TunerBudgets()
    settings = settings or TrainSettings()
    table = _subject_table(subject_ids, y, class_names)
    plan = stratified_folds(table, k, derive_seed(seed, 0), inner_policy=inner_policy)
    payloads = [
        {
            "x": x,
            "y": y,
            "subject_ids": list(subject_ids),
            "class_names": tuple(class_names),
            "plan": plan,
            "fold": fold,
            "model_kind": model,
            "tuner_kind": tuner,
            "budgets": budgets,
            "settings": settings,
            "seed": seed,
            "fixed_hp": fixed_hp,
            "space": space or SearchSpace(),
        }
        for fold in range(k)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            folds = list(pool.map(_run_outer_fold, payloads))
    else:
        folds = [_run_outer_fold(p) for p in payloads]
    folds.sort(key=lambda fr: fr.fold)
    return EvalReport(
        class_names=tuple(class_names),
        seed=seed,
        k=k,
        inner_policy=inner_policy,
        fold_assignments=plan.outer_assignments,
        folds=folds,
        aggregate=_aggregate(folds),
        config_hash=config_hash,
    )
