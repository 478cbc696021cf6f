"""Multichannel recordings: loading, validation, preprocessing, windowing.

A recording is one subject's [n_channels x n_samples] matrix plus channel
labels and a sampling rate. Cohorts group labeled recordings of two classes
and are described on disk by a JSON manifest pointing at per-subject CSVs.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataError

DEFAULT_SAMPLE_RATE_HZ = 128.0


@dataclass
class Recording:
    """One subject's multichannel time series.

    data is float64 with shape [n_channels, n_samples]; row i belongs to
    channel_labels[i]. label is a free class tag or None for unlabeled data.
    """

    subject_id: str
    channel_labels: list[str]
    sample_rate_hz: float
    data: np.ndarray
    label: str | None = None

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise DataError(
                f"recording {self.subject_id!r}: data must be 2-D "
                f"[channels x samples], got shape {self.data.shape}"
            )
        n_ch, n_s = self.data.shape
        if n_ch != len(self.channel_labels):
            raise DataError(
                f"recording {self.subject_id!r}: {n_ch} data rows but "
                f"{len(self.channel_labels)} channel labels"
            )
        if len(set(self.channel_labels)) != len(self.channel_labels):
            dupes = sorted(
                {c for c in self.channel_labels if self.channel_labels.count(c) > 1}
            )
            raise DataError(
                f"recording {self.subject_id!r}: duplicate channel labels {dupes}"
            )
        if n_s < 2:
            raise DataError(
                f"recording {self.subject_id!r}: needs at least 2 samples, got {n_s}"
            )
        if not (self.sample_rate_hz > 0):
            raise DataError(
                f"recording {self.subject_id!r}: sample rate must be positive"
            )
        if not np.all(np.isfinite(self.data)):
            raise DataError(f"recording {self.subject_id!r}: non-finite sample values")

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]


@dataclass
class Cohort:
    """Two-class collection of recordings sharing one channel layout."""

    recordings: list[Recording]
    class_names: tuple[str, str]

    def __post_init__(self):
        self.class_names = tuple(self.class_names)
        if len(self.class_names) != 2 or self.class_names[0] == self.class_names[1]:
            raise DataError(f"class_names must be two distinct names, got {self.class_names}")
        if not self.recordings:
            raise DataError("cohort has no recordings")
        ref = self.recordings[0]
        for rec in self.recordings:
            if rec.label not in self.class_names:
                raise DataError(
                    f"recording {rec.subject_id!r} has label {rec.label!r}, "
                    f"expected one of {self.class_names}"
                )
            if rec.channel_labels != ref.channel_labels:
                raise DataError(
                    f"recording {rec.subject_id!r} has a different channel layout "
                    f"than {ref.subject_id!r}"
                )
            if rec.sample_rate_hz != ref.sample_rate_hz:
                raise DataError(
                    f"recording {rec.subject_id!r} has sample rate "
                    f"{rec.sample_rate_hz}, expected {ref.sample_rate_hz}"
                )
        for name in self.class_names:
            if not any(r.label == name for r in self.recordings):
                raise DataError(f"cohort has no recordings of class {name!r}")

    @property
    def channel_labels(self) -> list[str]:
        return self.recordings[0].channel_labels

    def class_index(self, label: str) -> int:
        return self.class_names.index(label)

    def subjects_by_class(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {name: [] for name in self.class_names}
        for rec in self.recordings:
            out[rec.label].append(rec.subject_id)
        return out


def load_recording(
    path: str,
    label: str | None = None,
    subject_id: str | None = None,
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
) -> Recording:
    """Read a recording from CSV: header row of channel labels, one column
    per channel, one row per sample tick. Data is transposed to
    [channels x samples]."""
    if not os.path.isfile(path):
        raise DataError(f"recording file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        labels = [c.strip() for c in header]
        if any(not c for c in labels):
            raise DataError(f"{path}: empty channel label in header")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(labels):
                raise DataError(
                    f"{path}:{lineno}: ragged row ({len(row)} cells, "
                    f"expected {len(labels)})"
                )
            try:
                rows.append([float(cell) for cell in row])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: non-numeric cell ({exc})") from None
    if subject_id is None:
        subject_id = os.path.splitext(os.path.basename(path))[0]
    data = np.asarray(rows, dtype=np.float64)
    if data.size == 0:
        raise DataError(f"{path}: no sample rows")
    return Recording(
        subject_id=subject_id,
        channel_labels=labels,
        sample_rate_hz=sample_rate_hz,
        data=data.T,
        label=label,
    )


def save_recording(rec: Recording, path: str) -> None:
    """Write the CSV form read back by load_recording. Values are written
    with repr so reloading round-trips float64 bit-exactly."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(rec.channel_labels)
        for row in rec.data.T:
            writer.writerow([repr(float(v)) for v in row])


def zscore(rec: Recording) -> Recording:
    """Standardize each channel to mean 0 and sample (ddof=1) SD 1."""
    mean = rec.data.mean(axis=1, keepdims=True)
    sd = rec.data.std(axis=1, ddof=1, keepdims=True)
    flat = np.flatnonzero(sd[:, 0] == 0.0)
    if flat.size:
        ch = rec.channel_labels[int(flat[0])]
        raise DataError(
            f"recording {rec.subject_id!r}: channel {ch!r} is constant, "
            "cannot z-score"
        )
    return replace(rec, data=(rec.data - mean) / sd)


def window(rec: Recording, length: int, stride: int) -> list[Recording]:
    """Slice a recording into fixed-length windows.

    Returns floor((n_samples - length) / stride) + 1 windows. Each window
    keeps the parent subject_id and label so cross-validation can still
    split by subject.
    """
    if length < 1:
        raise DataError(f"window length must be >= 1, got {length}")
    if stride < 1:
        raise DataError(f"window stride must be >= 1, got {stride}")
    if length > rec.n_samples:
        raise DataError(
            f"window length {length} exceeds recording length {rec.n_samples}"
        )
    out = []
    for start in range(0, rec.n_samples - length + 1, stride):
        out.append(replace(rec, data=rec.data[:, start : start + length].copy()))
    return out


def load_manifest(path: str) -> Cohort:
    """Load a cohort manifest: JSON with class_names, sample_rate_hz and a
    list of {path, label, subject_id} entries. Recording paths are resolved
    relative to the manifest's directory."""
    if not os.path.isfile(path):
        raise DataError(f"manifest not found: {path}")
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON ({exc})") from None
    for key in ("class_names", "recordings"):
        if key not in doc:
            raise DataError(f"{path}: manifest missing {key!r}")
    if not doc["recordings"]:
        raise DataError(f"{path}: manifest lists no recordings")
    rate = float(doc.get("sample_rate_hz", DEFAULT_SAMPLE_RATE_HZ))
    base = os.path.dirname(os.path.abspath(path))
    recs = []
    for i, entry in enumerate(doc["recordings"]):
        for key in ("path", "label", "subject_id"):
            if key not in entry:
                raise DataError(f"{path}: recordings[{i}] missing {key!r}")
        rec_path = entry["path"]
        if not os.path.isabs(rec_path):
            rec_path = os.path.join(base, rec_path)
        recs.append(
            load_recording(
                rec_path,
                label=entry["label"],
                subject_id=entry["subject_id"],
                sample_rate_hz=rate,
            )
        )
    return Cohort(recordings=recs, class_names=tuple(doc["class_names"]))


def save_cohort(cohort: Cohort, out_dir: str, manifest_name: str = "manifest.json") -> str:
    """Write one CSV per recording plus the manifest; returns manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    for rec in cohort.recordings:
        fname = f"{rec.subject_id}.csv"
        save_recording(rec, os.path.join(out_dir, fname))
        entries.append({"path": fname, "label": rec.label, "subject_id": rec.subject_id})
    manifest = {
        "class_names": list(cohort.class_names),
        "sample_rate_hz": cohort.recordings[0].sample_rate_hz,
        "recordings": entries,
    }
    manifest_path = os.path.join(out_dir, manifest_name)
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return manifest_path
