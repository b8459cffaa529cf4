"""Converter behavior: round trips, completeness, atomicity."""

import numpy as np
import pytest
import scipy.io

import matconvert
from matconvert import ConversionError, convert, main, read_source, scan
from semgnet.dataio import read_emgb


def make_archive(root, subject=1, gestures=3, trials=2, samples=50,
                 seed=0, key="data", with_fields=True):
    """One MAT file per gesture-trial, values reproducible from the seed."""
    rng = np.random.default_rng(seed)
    values = {}
    root.mkdir(parents=True, exist_ok=True)
    for g in range(1, gestures + 1):
        for t in range(1, trials + 1):
            block = rng.normal(scale=1.5, size=(samples, 128))
            values[(g, t)] = block.astype(np.float32)
            payload = {key: block}
            if with_fields:
                payload.update(subject=subject, gesture=g, trial=t)
            scipy.io.savemat(
                root / f"{subject:03d}-{g:03d}-{t:03d}.mat", payload)
    return values


def test_round_trip_through_primary_reader(tmp_path):
    source = make_archive(tmp_path / "mat", gestures=3, trials=2, samples=50)
    written, _ = convert(tmp_path / "mat", tmp_path / "out")
    assert [p.name for p in written] == ["subject_1.emgb"]

    recordings, index = read_emgb(written[0])
    assert (index.gestures, index.trials, index.samples_per_trial) == (3, 2, 50)
    assert index.subject_id == 1
    for rec in recordings:
        expected = source[(rec.gesture, rec.trial)]
        assert rec.values.dtype == np.float32
        assert np.array_equal(rec.values, expected)


def test_gesture_major_order_regardless_of_discovery_order(tmp_path):
    make_archive(tmp_path / "mat", gestures=2, trials=2, samples=10)
    # scrambled extra copy is not needed: rglob sorts, but the packer
    # must still place cells by id, so shuffle the manifest by renaming
    (tmp_path / "mat" / "001-002-002.mat").rename(
        tmp_path / "mat" / "zzz.mat")  # falls back to embedded fields
    written, _ = convert(tmp_path / "mat", tmp_path / "out")
    recordings, _ = read_emgb(written[0])
    order = [(r.gesture, r.trial) for r in recordings]
    assert order == [(1, 1), (1, 2), (2, 1), (2, 2)]


def test_values_pass_through_untouched(tmp_path):
    root = tmp_path / "mat"
    root.mkdir()
    ramp = np.linspace(-40.0, 40.0, 20 * 128).reshape(20, 128)
    for g in (1, 2):
        scipy.io.savemat(root / f"001-00{g}-001.mat",
                         {"data": ramp * g, "subject": 1, "gesture": g,
                          "trial": 1})
    written, _ = convert(root, tmp_path / "out")
    recordings, _ = read_emgb(written[0])
    # no clamping, no filtering, only the float32 representation
    assert np.array_equal(recordings[0].values, (ramp * 1).astype(np.float32))
    assert np.array_equal(recordings[1].values, (ramp * 2).astype(np.float32))


def test_missing_trial_lists_the_gap(tmp_path):
    make_archive(tmp_path / "mat", gestures=3, trials=2)
    (tmp_path / "mat" / "001-002-001.mat").unlink()
    with pytest.raises(ConversionError) as info:
        scan(tmp_path / "mat")
    assert "gesture 2 trial 1" in str(info.value)


def test_incomplete_archive_exits_nonzero_without_output(tmp_path, capsys):
    make_archive(tmp_path / "mat", gestures=3, trials=2)
    (tmp_path / "mat" / "001-003-002.mat").unlink()
    out = tmp_path / "out"
    code = main(["--in", str(tmp_path / "mat"), "--out", str(out)])
    assert code != 0
    assert "missing" in capsys.readouterr().err
    assert not out.exists() or not any(out.iterdir())


def test_wrong_channel_count_is_rejected(tmp_path):
    root = tmp_path / "mat"
    root.mkdir()
    scipy.io.savemat(root / "001-001-001.mat",
                     {"data": np.zeros((50, 64)), "subject": 1,
                      "gesture": 1, "trial": 1})
    with pytest.raises(ConversionError) as info:
        read_source(root / "001-001-001.mat")
    assert "(50, 64)" in str(info.value)


def test_inconsistent_sample_counts_rejected(tmp_path):
    root = tmp_path / "mat"
    root.mkdir()
    for t, samples in ((1, 50), (2, 60)):
        scipy.io.savemat(root / f"001-001-00{t}.mat",
                         {"data": np.zeros((samples, 128)), "subject": 1,
                          "gesture": 1, "trial": t})
    with pytest.raises(ConversionError) as info:
        scan(root)
    assert "[50, 60]" in str(info.value)


def test_manifest_logs_matched_matrix_keys(tmp_path):
    make_archive(tmp_path / "mat", gestures=2, trials=1, key="emg_window")
    written, log_path = convert(tmp_path / "mat", tmp_path / "out")
    assert written
    log = log_path.read_text()
    import json
    manifest = json.loads(log)
    entries = manifest["subjects"]["1"]
    assert all(e["matrix_key"] == "emg_window" for e in entries)
    assert all(e["samples"] == 50 for e in entries)
    assert [(e["gesture"], e["trial"]) for e in entries] == [(1, 1), (2, 1)]


def test_filename_fallback_when_fields_absent(tmp_path):
    make_archive(tmp_path / "mat", subject=7, gestures=2, trials=1,
                 with_fields=False)
    manifest = scan(tmp_path / "mat")
    assert sorted(manifest.subjects) == [7]


def test_subject_filter(tmp_path):
    root = tmp_path / "mat"
    make_archive(root, subject=1, gestures=2, trials=1, seed=1)
    make_archive(root, subject=2, gestures=2, trials=1, seed=2)
    written, _ = convert(root, tmp_path / "out", subjects={2})
    assert [p.name for p in written] == ["subject_2.emgb"]
    _, index = read_emgb(written[0])
    assert index.subject_id == 2


def test_two_subjects_two_files(tmp_path):
    root = tmp_path / "mat"
    make_archive(root, subject=1, gestures=2, trials=2, seed=1)
    make_archive(root, subject=3, gestures=2, trials=2, seed=3)
    written, _ = convert(root, tmp_path / "out")
    assert [p.name for p in written] == ["subject_1.emgb", "subject_3.emgb"]
    for path in written:
        assert not path.with_suffix(".emgb.tmp").exists()


def test_cli_happy_path_prints_outputs(tmp_path, capsys):
    make_archive(tmp_path / "mat")
    code = main(["--in", str(tmp_path / "mat"), "--out",
                 str(tmp_path / "out")])
    assert code == 0
    out = capsys.readouterr().out
    assert "subject_1.emgb" in out and "manifest" in out


def test_empty_directory_is_an_error(tmp_path):
    (tmp_path / "mat").mkdir()
    code = main(["--in", str(tmp_path / "mat"), "--out",
                 str(tmp_path / "out")])
    assert code == 1


def test_duplicate_cell_rejected(tmp_path):
    root = tmp_path / "mat"
    make_archive(root, gestures=1, trials=1)
    # same gesture/trial under a different name
    scipy.io.savemat(root / "extra.mat",
                     {"data": np.zeros((50, 128)), "subject": 1,
                      "gesture": 1, "trial": 1})
    with pytest.raises(ConversionError) as info:
        scan(root)
    assert "duplicate" in str(info.value)
