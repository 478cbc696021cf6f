import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eegconn.errors import DataError
from eegconn.recording import (
    Cohort,
    Recording,
    load_manifest,
    load_recording,
    save_cohort,
    save_recording,
    window,
    zscore,
)


def make_rec(data, labels=None, subject="s0", label=None):
    data = np.asarray(data, dtype=float)
    if labels is None:
        labels = [f"ch{i}" for i in range(data.shape[0])]
    return Recording(subject_id=subject, channel_labels=labels,
                     sample_rate_hz=128.0, data=data, label=label)


class TestLoadRecording:
    def test_shape_bookkeeping(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("a,b,c\n1,2,3\n4,5,6\n7,8,9\n10,11,12\n")
        rec = load_recording(str(path))
        assert rec.data.shape == (3, 4)
        assert rec.channel_labels == ["a", "b", "c"]
        # columns become rows
        assert rec.data[0].tolist() == [1, 4, 7, 10]
        assert rec.subject_id == "r"

    def test_duplicate_labels_rejected(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("Fp1,Fp1,Cz\n1,2,3\n4,5,6\n")
        with pytest.raises(DataError, match="duplicate"):
            load_recording(str(path))

    def test_ad_layout_file(self, tmp_path):
        rng = np.random.default_rng(0)
        labels = [f"c{i}" for i in range(19)]
        path = tmp_path / "ad.csv"
        lines = [",".join(labels)]
        for row in rng.normal(size=(1024, 19)):
            lines.append(",".join(repr(float(v)) for v in row))
        path.write_text("\n".join(lines) + "\n")
        rec = load_recording(str(path))
        assert rec.data.shape == (19, 1024)
        assert rec.n_samples / rec.sample_rate_hz == 8.0

    def test_missing_file(self):
        with pytest.raises(DataError, match="not found"):
            load_recording("/no/such/file.csv")

    def test_non_numeric_cell(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("a,b\n1,2\n3,oops\n")
        with pytest.raises(DataError, match="non-numeric"):
            load_recording(str(path))

    def test_ragged_rows(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("a,b\n1,2\n3\n")
        with pytest.raises(DataError, match="ragged"):
            load_recording(str(path))

    def test_too_few_samples(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(DataError, match="at least 2"):
            load_recording(str(path))

    def test_roundtrip_bit_identical(self, tmp_path):
        rng = np.random.default_rng(1)
        rec = make_rec(rng.normal(size=(4, 50)))
        path = tmp_path / "rt.csv"
        save_recording(rec, str(path))
        back = load_recording(str(path))
        assert np.array_equal(back.data, rec.data)


class TestRecordingInvariants:
    def test_label_count_mismatch(self):
        with pytest.raises(DataError, match="channel labels"):
            make_rec(np.zeros((3, 5)), labels=["a", "b"])

    def test_nonfinite_rejected(self):
        data = np.zeros((2, 4))
        data[1, 2] = np.nan
        with pytest.raises(DataError, match="non-finite"):
            make_rec(data)


class TestZscore:
    def test_basic(self):
        rec = zscore(make_rec([[1.0, 2.0, 3.0]]))
        assert abs(rec.data[0].mean()) < 1e-12
        assert abs(rec.data[0].std(ddof=1) - 1.0) < 1e-12

    def test_idempotent(self):
        rng = np.random.default_rng(2)
        rec = zscore(make_rec(rng.normal(2.0, 3.0, size=(5, 77))))
        again = zscore(rec)
        assert np.allclose(again.data, rec.data, atol=1e-10)

    def test_constant_channel_named(self):
        with pytest.raises(DataError, match="ch1"):
            zscore(make_rec([[1.0, 2.0, 3.0], [5.0, 5.0, 5.0]]))


class TestWindow:
    def test_identity_window(self):
        rec = make_rec(np.arange(1024.0).reshape(1, -1))
        wins = window(rec, 1024, 1)
        assert len(wins) == 1
        assert np.array_equal(wins[0].data, rec.data)

    def test_counts_and_starts(self):
        rec = make_rec(np.arange(1024.0).reshape(1, -1))
        wins = window(rec, 512, 256)
        assert len(wins) == 3
        assert [w.data[0, 0] for w in wins] == [0.0, 256.0, 512.0]

    def test_too_long(self):
        rec = make_rec(np.arange(1024.0).reshape(1, -1))
        with pytest.raises(DataError, match="exceeds"):
            window(rec, 2000, 1)

    def test_provenance_kept(self):
        rec = make_rec(np.arange(20.0).reshape(2, 10), subject="subj7", label="patient")
        for w in window(rec, 5, 5):
            assert w.subject_id == "subj7"
            assert w.label == "patient"

    @given(
        n=st.integers(8, 64),
        length=st.integers(2, 16),
    )
    @settings(max_examples=50, deadline=None)
    def test_full_cover_reconstructs(self, n, length):
        # non-overlapping full cover: stride == length, n a multiple of length
        n = max(2, n // length) * length
        data = np.arange(float(n)).reshape(1, -1)
        wins = window(make_rec(data), length, length)
        rebuilt = np.concatenate([w.data for w in wins], axis=1)
        assert np.array_equal(rebuilt, data)


class TestCohort:
    def _cohort(self):
        rng = np.random.default_rng(3)
        recs = [
            make_rec(rng.normal(size=(3, 16)), subject=f"s{i}",
                     label="control" if i < 2 else "patient")
            for i in range(4)
        ]
        return Cohort(recordings=recs, class_names=("control", "patient"))

    def test_manifest_roundtrip(self, tmp_path):
        cohort = self._cohort()
        manifest = save_cohort(cohort, str(tmp_path))
        back = load_manifest(manifest)
        assert back.class_names == cohort.class_names
        assert [r.subject_id for r in back.recordings] == [
            r.subject_id for r in cohort.recordings
        ]
        for a, b in zip(back.recordings, cohort.recordings):
            assert np.array_equal(a.data, b.data)

    def test_unknown_label_rejected(self):
        rng = np.random.default_rng(4)
        recs = [
            make_rec(rng.normal(size=(2, 8)), subject="a", label="control"),
            make_rec(rng.normal(size=(2, 8)), subject="b", label="mystery"),
        ]
        with pytest.raises(DataError, match="mystery"):
            Cohort(recordings=recs, class_names=("control", "patient"))

    def test_single_class_rejected(self):
        rng = np.random.default_rng(5)
        recs = [make_rec(rng.normal(size=(2, 8)), subject="a", label="control")]
        with pytest.raises(DataError, match="patient"):
            Cohort(recordings=recs, class_names=("control", "patient"))

    def test_layout_mismatch_rejected(self):
        rng = np.random.default_rng(6)
        recs = [
            make_rec(rng.normal(size=(2, 8)), labels=["x", "y"], subject="a",
                     label="control"),
            make_rec(rng.normal(size=(2, 8)), labels=["y", "x"], subject="b",
                     label="patient"),
        ]
        with pytest.raises(DataError, match="layout"):
            Cohort(recordings=recs, class_names=("control", "patient"))
