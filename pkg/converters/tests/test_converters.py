"""Converter scripts: shape-faithful fixtures in, validated JSONL out.

The real archives are not bundled, so the fixtures rebuild their exact
shapes: a truncated native pickle for the radio archive and a full-shape
synthetic directory tree for the EEG corpus. The converted output is pushed
through the toolkit's own `convert-validate` subcommand in a subprocess,
which is the only coupling the converters have with the toolkit.
"""

import json
import pickle
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

SCRIPTS_DIR = Path(__file__).resolve().parent.parent
RADIO = SCRIPTS_DIR / "convert_radioml.py"
EEG = SCRIPTS_DIR / "convert_eeg.py"


def run_script(script, *args):
    return subprocess.run(
        [sys.executable, str(script), *map(str, args)],
        capture_output=True,
        text=True,
    )


def validate_with_toolkit(path):
    return subprocess.run(
        [sys.executable, "-m", "vistra", "convert-validate", "--in", str(path)],
        capture_output=True,
        text=True,
    )


@pytest.fixture(scope="module")
def radio_archive(tmp_path_factory):
    """Truncated native archive: two (modulation, snr) keys, float32 blocks."""
    rng = np.random.default_rng(11)
    archive = {
        ("QPSK", -2): rng.standard_normal((2, 2, 128)).astype(np.float32),
        ("GFSK", 18): rng.standard_normal((3, 2, 128)).astype(np.float32),
    }
    path = tmp_path_factory.mktemp("radio") / "archive.pkl"
    path.write_bytes(pickle.dumps(archive))
    return path, archive


@pytest.fixture(scope="module")
def bonn_dir(tmp_path_factory):
    """Full-shape EEG tree: 5 set-code directories x 100 files x 4096 ints."""
    root = tmp_path_factory.mktemp("bonn")
    rng = np.random.default_rng(23)
    for code in ("Z", "O", "N", "F", "S"):
        folder = root / code
        folder.mkdir()
        for i in range(100):
            vals = rng.integers(-200, 200, 4096)
            (folder / f"{code}{i + 1:03d}.txt").write_text(
                "\n".join(str(v) for v in vals) + "\n")
    return root


class TestRadio:
    def test_converts_and_validates(self, radio_archive, tmp_path):
        path, archive = radio_archive
        out = tmp_path / "radio.jsonl"
        proc = run_script(RADIO, "--archive", path, "--out", out)
        assert proc.returncode == 0, proc.stderr
        assert "5 records" in proc.stdout
        lines = out.read_text().splitlines()
        assert len(lines) == 5
        labels = set()
        for line in lines:
            rec = json.loads(line)
            assert len(rec["channels"]["I"]) == 128
            assert len(rec["channels"]["Q"]) == 128
            assert rec["dt"] == 1.0
            assert rec["snr_db"] in (-2.0, 18.0)
            labels.add(rec["label"])
        assert labels == {"QPSK", "GFSK"}
        check = validate_with_toolkit(out)
        assert check.returncode == 0, check.stderr
        assert "5" in check.stdout

    def test_lossless_and_ordered(self, radio_archive, tmp_path):
        path, archive = radio_archive
        out = tmp_path / "radio.jsonl"
        assert run_script(RADIO, "--archive", path, "--out", out).returncode == 0
        recs = [json.loads(line) for line in out.read_text().splitlines()]
        # sorted key order: GFSK block first, then QPSK; samples in order
        assert [r["label"] for r in recs] == ["GFSK"] * 3 + ["QPSK"] * 2
        first = archive[("GFSK", 18)][0]
        assert recs[0]["channels"]["I"] == [float(v) for v in first[0]]
        assert recs[0]["channels"]["Q"] == [float(v) for v in first[1]]

    def test_missing_archive(self, tmp_path):
        proc = run_script(RADIO, "--archive", tmp_path / "nope.pkl",
                          "--out", tmp_path / "o.jsonl")
        assert proc.returncode == 2
        assert "not found" in proc.stderr

    def test_corrupt_archive(self, tmp_path):
        bad = tmp_path / "bad.pkl"
        bad.write_bytes(b"this is not a pickle")
        proc = run_script(RADIO, "--archive", bad, "--out", tmp_path / "o.jsonl")
        assert proc.returncode == 2
        assert "unpickle" in proc.stderr

    def test_unknown_label_rejected(self, tmp_path):
        bad = tmp_path / "bad.pkl"
        bad.write_bytes(pickle.dumps({("16QAM", 0): np.zeros((1, 2, 128))}))
        proc = run_script(RADIO, "--archive", bad, "--out", tmp_path / "o.jsonl")
        assert proc.returncode == 2
        assert "16QAM" in proc.stderr

    def test_wrong_shape_rejected(self, tmp_path):
        bad = tmp_path / "bad.pkl"
        bad.write_bytes(pickle.dumps({("QPSK", 0): np.zeros((1, 3, 128))}))
        proc = run_script(RADIO, "--archive", bad, "--out", tmp_path / "o.jsonl")
        assert proc.returncode == 2
        assert "shape" in proc.stderr

    def test_odd_snr_rejected(self, tmp_path):
        bad = tmp_path / "bad.pkl"
        bad.write_bytes(pickle.dumps({("QPSK", 7): np.zeros((1, 2, 128))}))
        proc = run_script(RADIO, "--archive", bad, "--out", tmp_path / "o.jsonl")
        assert proc.returncode == 2

    def test_failed_conversion_leaves_no_output(self, tmp_path):
        bad = tmp_path / "bad.pkl"
        bad.write_bytes(pickle.dumps({("16QAM", 0): np.zeros((1, 2, 128))}))
        out = tmp_path / "o.jsonl"
        assert run_script(RADIO, "--archive", bad, "--out", out).returncode == 2
        assert not out.exists()


class TestEeg:
    def test_full_tree_converts_and_validates(self, bonn_dir, tmp_path):
        out = tmp_path / "eeg.jsonl"
        proc = run_script(EEG, "--dir", bonn_dir, "--out", out, "--segments", "4")
        assert proc.returncode == 0, proc.stderr
        assert "2000 records" in proc.stdout
        lines = out.read_text().splitlines()
        assert len(lines) == 2000
        counts = {}
        for line in lines:
            rec = json.loads(line)
            assert len(rec["channels"]["x"]) == 1024
            assert rec["snr_db"] is None
            assert rec["dt"] == 1.0 / 173.61
            counts[rec["label"]] = counts.get(rec["label"], 0) + 1
        assert counts == {c: 400 for c in "ABCDE"}
        check = validate_with_toolkit(out)
        assert check.returncode == 0, check.stderr
        assert "2000" in check.stdout

    def test_single_segment_keeps_whole_signals(self, bonn_dir, tmp_path):
        out = tmp_path / "eeg1.jsonl"
        proc = run_script(EEG, "--dir", bonn_dir, "--out", out, "--segments", "1")
        assert proc.returncode == 0, proc.stderr
        lines = out.read_text().splitlines()
        assert len(lines) == 500
        assert len(json.loads(lines[0])["channels"]["x"]) == 4096

    def test_lossless_and_ordered(self, bonn_dir, tmp_path):
        out = tmp_path / "eeg.jsonl"
        assert run_script(EEG, "--dir", bonn_dir, "--out", out,
                          "--segments", "4").returncode == 0
        first = json.loads(out.read_text().splitlines()[0])
        # category A maps from the Z directory; files in sorted name order
        source = [int(v) for v in
                  (bonn_dir / "Z" / "Z001.txt").read_text().split()]
        assert first["label"] == "A"
        assert first["channels"]["x"] == source[:1024]

    def test_bad_line_count_names_file(self, tmp_path):
        root = tmp_path / "tree"
        (root / "A").mkdir(parents=True)
        (root / "A" / "A001.txt").write_text("\n".join(["1"] * 4095) + "\n")
        proc = run_script(EEG, "--dir", root, "--out", tmp_path / "o.jsonl")
        assert proc.returncode == 2
        assert "A001.txt" in proc.stderr
        assert "4095" in proc.stderr

    def test_non_integer_sample_names_file(self, tmp_path):
        root = tmp_path / "tree"
        (root / "B").mkdir(parents=True)
        (root / "B" / "B001.txt").write_text("\n".join(["1"] * 4095) + "\nx\n")
        proc = run_script(EEG, "--dir", root, "--out", tmp_path / "o.jsonl")
        assert proc.returncode == 2
        assert "B001.txt" in proc.stderr

    def test_unknown_category_rejected(self, tmp_path):
        root = tmp_path / "tree"
        (root / "Q").mkdir(parents=True)
        (root / "Q" / "Q001.txt").write_text("\n".join(["1"] * 4096) + "\n")
        proc = run_script(EEG, "--dir", root, "--out", tmp_path / "o.jsonl")
        assert proc.returncode == 2
        assert "Q" in proc.stderr

    @pytest.mark.parametrize("segments", ["0", "3"])
    def test_bad_segment_count_rejected(self, bonn_dir, tmp_path, segments):
        proc = run_script(EEG, "--dir", bonn_dir, "--out", tmp_path / "o.jsonl",
                          "--segments", segments)
        assert proc.returncode == 2
        assert "segments" in proc.stderr

    def test_letter_directories_used_verbatim(self, tmp_path):
        root = tmp_path / "tree"
        (root / "E").mkdir(parents=True)
        (root / "E" / "E001.txt").write_text(
            "\n".join(str(v % 7) for v in range(4096)) + "\n")
        out = tmp_path / "o.jsonl"
        proc = run_script(EEG, "--dir", root, "--out", out, "--segments", "2")
        assert proc.returncode == 0, proc.stderr
        recs = [json.loads(line) for line in out.read_text().splitlines()]
        assert len(recs) == 2
        assert {r["label"] for r in recs} == {"E"}
        assert len(recs[0]["channels"]["x"]) == 2048
