"""Synthetic two-class cohorts from coupled first-order autoregressions.

Each channel follows x[t] = self_coeff * x[t-1] + adjacency @ x[t-1] + noise,
with adjacency entry (i, j) the weight of the directed coupling j -> i. The
two classes differ only in coupling topology, so both correlation- and
causality-based detectors have real signal to find, and the planted edges
give every end-to-end test a known ground truth.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericError
from .recording import Cohort, Recording
from .seeds import derive_rng

MONTAGE_19 = [
    "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "T3", "C3", "Cz",
    "C4", "T4", "T5", "P3", "Pz", "P4", "T6", "O1", "O2",
]
MONTAGE_16 = [
    "F7", "F3", "F4", "F8", "T3", "C3", "Cz", "C4",
    "T4", "T5", "P3", "Pz", "P4", "T6", "O1", "O2",
]

PRESET_NAMES = ("ad_like", "sz_like", "null_like")


def spectral_radius(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(matrix))))


@dataclass
class VarNetworkSpec:
    """Generating network for one class."""

    n_channels: int
    adjacency: np.ndarray
    self_coeff: float
    noise_sd: float
    n_samples: int
    burn_in: int = 200

    def __post_init__(self):
        self.adjacency = np.asarray(self.adjacency, dtype=np.float64)
        if self.adjacency.shape != (self.n_channels, self.n_channels):
            raise ConfigError(
                f"adjacency shape {self.adjacency.shape} does not match "
                f"{self.n_channels} channels"
            )
        if np.any(np.diag(self.adjacency) != 0.0):
            raise ConfigError("adjacency diagonal must be zero (self term is separate)")
        if not (-1.0 < self.self_coeff < 1.0):
            raise ConfigError(f"self_coeff must be in (-1, 1), got {self.self_coeff}")
        if self.noise_sd <= 0:
            raise ConfigError("noise_sd must be positive")
        if self.n_samples < 1 or self.burn_in < 0:
            raise ConfigError("n_samples must be >= 1 and burn_in >= 0")
        rho = spectral_radius(self.transition())
        if rho >= 1.0:
            raise ConfigError(
                f"non-stationary network: spectral radius {rho:.3f} >= 1"
            )

    def transition(self) -> np.ndarray:
        return self.self_coeff * np.eye(self.n_channels) + self.adjacency


def simulate_var(
    spec: VarNetworkSpec,
    rng: np.random.Generator,
    subject_id: str = "sim",
    label: str | None = None,
    channel_labels: list | None = None,
    sample_rate_hz: float = 128.0,
) -> Recording:
    """Run the process past burn-in and return the last n_samples ticks."""
    m = spec.transition()
    n = spec.n_channels
    total = spec.burn_in + spec.n_samples
    noise = rng.normal(0.0, spec.noise_sd, size=(total, n))
    data = np.empty((total, n))
    state = noise[0]
    data[0] = state
    for t in range(1, total):
        state = m @ state + noise[t]
        data[t] = state
    if channel_labels is None:
        channel_labels = [f"ch{i:02d}" for i in range(n)]
    return Recording(
        subject_id=subject_id,
        channel_labels=list(channel_labels),
        sample_rate_hz=sample_rate_hz,
        data=data[spec.burn_in :].T.copy(),
        label=label,
    )


@dataclass
class CohortSpec:
    class_a: VarNetworkSpec
    class_b: VarNetworkSpec
    n_subjects_per_class: int
    seed: int
    inter_subject_jitter: float = 0.1
    class_names: tuple = ("control", "patient")
    channel_labels: list | None = None
    sample_rate_hz: float = 128.0

    def __post_init__(self):
        if self.class_a.n_channels != self.class_b.n_channels:
            raise ConfigError("both classes must share n_channels")
        if self.class_a.n_samples != self.class_b.n_samples:
            raise ConfigError("both classes must share n_samples")
        if self.n_subjects_per_class < 1:
            raise ConfigError("n_subjects_per_class must be >= 1")
        if self.inter_subject_jitter < 0:
            raise ConfigError("inter_subject_jitter must be >= 0")


@dataclass
class CohortTruth:
    """Audit record: what actually generated each subject."""

    class_adjacency: dict
    per_subject_adjacency: dict
    delta_edges: list  # sorted (i, j) pairs, meaning channel j -> channel i

    def to_dict(self) -> dict:
        return {
            "class_adjacency": {
                name: adj.tolist() for name, adj in self.class_adjacency.items()
            },
            "per_subject_adjacency": {
                sid: adj.tolist() for sid, adj in sorted(self.per_subject_adjacency.items())
            },
            "delta_edges": [list(e) for e in self.delta_edges],
        }


def ground_truth_delta(spec: CohortSpec) -> set:
    """Exact symmetric difference of the two classes' nonzero couplings."""
    a = spec.class_a.adjacency != 0.0
    b = spec.class_b.adjacency != 0.0
    rows, cols = np.nonzero(a ^ b)
    return {(int(i), int(j)) for i, j in zip(rows, cols)}


def _subject_spec(base: VarNetworkSpec, jitter: float, rng: np.random.Generator):
    """Per-subject coupling weights: base * (1 + jitter * gaussian), redrawn
    (bounded) if the jittered system drifts toward instability."""
    if jitter == 0.0:
        return base.adjacency.copy()
    for _ in range(20):
        adj = base.adjacency * (1.0 + jitter * rng.standard_normal(base.adjacency.shape))
        rho = spectral_radius(base.self_coeff * np.eye(base.n_channels) + adj)
        if rho < 0.98:
            return adj
    raise NumericError(
        "could not draw a stationary jittered network in 20 attempts; "
        "lower inter_subject_jitter or the coupling weights"
    )


def generate_cohort(spec: CohortSpec):
    """Returns (Cohort, CohortTruth); bit-identical for identical specs.

    Every subject gets an rng derived from (seed, class index, subject
    index), so generation order cannot change the data.
    """
    labels = spec.channel_labels
    if labels is not None and len(labels) != spec.class_a.n_channels:
        raise ConfigError("channel_labels length does not match n_channels")
    recordings = []
    per_subject = {}
    for ci, (name, class_spec) in enumerate(
        zip(spec.class_names, (spec.class_a, spec.class_b))
    ):
        for si in range(spec.n_subjects_per_class):
            rng = derive_rng(spec.seed, ci, si)
            adj = _subject_spec(class_spec, spec.inter_subject_jitter, rng)
            subject_spec = VarNetworkSpec(
                n_channels=class_spec.n_channels,
                adjacency=adj,
                self_coeff=class_spec.self_coeff,
                noise_sd=class_spec.noise_sd,
                n_samples=class_spec.n_samples,
                burn_in=class_spec.burn_in,
            )
            sid = f"{name}_{si:02d}"
            recordings.append(
                simulate_var(
                    subject_spec,
                    rng,
                    subject_id=sid,
                    label=name,
                    channel_labels=labels,
                    sample_rate_hz=spec.sample_rate_hz,
                )
            )
            per_subject[sid] = adj
    truth = CohortTruth(
        class_adjacency={
            spec.class_names[0]: spec.class_a.adjacency.copy(),
            spec.class_names[1]: spec.class_b.adjacency.copy(),
        },
        per_subject_adjacency=per_subject,
        delta_edges=sorted(ground_truth_delta(spec)),
    )
    return Cohort(recordings=recordings, class_names=spec.class_names), truth


def save_ground_truth(truth: CohortTruth, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(truth.to_dict(), fh, indent=2)
        fh.write("\n")


# -- presets -----------------------------------------------------------------


def _ring_adjacency(n: int, weight: float) -> np.ndarray:
    adj = np.zeros((n, n))
    for i in range(n):
        adj[(i + 1) % n, i] = weight
    return adj


_AD_DELTA_EDGES = [(10, 0), (12, 2), (14, 4), (16, 6), (18, 8), (11, 1)]
_SZ_DELTA_EDGES = [(8, 0), (10, 2), (12, 4), (14, 6), (9, 1), (11, 3)]


def _with_edges(adj: np.ndarray, edges, weight: float) -> np.ndarray:
    out = adj.copy()
    for i, j in edges:
        out[i, j] = weight
    return out


def preset(
    name: str,
    n_subjects_per_class: int | None = None,
    seed: int = 0,
    jitter: float = 0.1,
) -> CohortSpec:
    """Built-in cohort layouts.

    ad_like: 19 channels x 1024 samples, 6 extra couplings in the patient
    class. sz_like: 16 channels x 7680 samples, likewise. null_like: the
    ad_like layout with identical classes (no signal at all).
    """
    if name not in PRESET_NAMES:
        raise ConfigError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    if name == "sz_like":
        n, t, montage = 16, 7680, MONTAGE_16
        base = _ring_adjacency(n, 0.3)
        delta = _with_edges(base, _SZ_DELTA_EDGES, 0.45)
        subjects = n_subjects_per_class or 20
    else:
        n, t, montage = 19, 1024, MONTAGE_19
        base = _ring_adjacency(n, 0.3)
        delta = base if name == "null_like" else _with_edges(base, _AD_DELTA_EDGES, 0.45)
        subjects = n_subjects_per_class or 24
    mk = lambda adj: VarNetworkSpec(
        n_channels=n,
        adjacency=adj,
        self_coeff=0.5,
        noise_sd=1.0,
        n_samples=t,
        burn_in=200,
    )
    return CohortSpec(
        class_a=mk(base),
        class_b=mk(delta),
        n_subjects_per_class=subjects,
        seed=seed,
        inter_subject_jitter=jitter,
        channel_labels=montage,
    )
