import json
import os
import subprocess
import sys

import numpy as np
import pytest

from vistra import read_signal_records
from vistra.cli import main
from vistra.io import read_graph_dir
from vistra.pipeline import read_feature_csv


def run(*argv):
    return main(list(argv))


@pytest.fixture()
def signals_file(tmp_path):
    path = tmp_path / "signals.jsonl"
    assert (
        run(
            "generate",
            "--kind",
            "sin",
            "--n",
            "80",
            "--count",
            "6",
            "--seed",
            "3",
            "--snr-db",
            "25",
            "--out",
            str(path),
        )
        == 0
    )
    return path


@pytest.fixture()
def graphs_dir(tmp_path, signals_file):
    out = tmp_path / "graphs"
    assert (
        run(
            "transform",
            "--method",
            "clpvg",
            "--m",
            "1",
            "--alpha",
            "10",
            "--in",
            str(signals_file),
            "--out-dir",
            str(out),
        )
        == 0
    )
    return out


class TestGenerate:
    def test_records_shape_and_label(self, signals_file):
        records = read_signal_records(signals_file)
        assert len(records) == 6
        for rec in records:
            assert rec.label == "sin"
            assert rec.snr_db == 25.0
            assert set(rec.channels) == {"x"}
            assert len(rec.channels["x"]) == 80
            assert rec.channels["x"].dt == 0.01

    def test_kind_default_dt(self, tmp_path):
        out = tmp_path / "r.jsonl"
        assert run("generate", "--kind", "rossler", "--n", "40", "--out", str(out)) == 0
        assert read_signal_records(out)[0].channels["x"].dt == 0.1

    def test_deterministic_per_seed(self, tmp_path):
        a, b, c = (tmp_path / n for n in ("a.jsonl", "b.jsonl", "c.jsonl"))
        for path in (a, b):
            run("generate", "--kind", "lorenz", "--n", "50", "--count", "3",
                "--seed", "7", "--out", str(path))
        run("generate", "--kind", "lorenz", "--n", "50", "--count", "3",
            "--seed", "8", "--out", str(c))
        assert a.read_bytes() == b.read_bytes()
        assert a.read_bytes() != c.read_bytes()

    def test_explicit_init_and_label(self, tmp_path):
        out = tmp_path / "l.jsonl"
        assert (
            run("generate", "--kind", "lorenz", "--n", "30", "--init", "2,2,20",
                "--label", "classA", "--out", str(out))
            == 0
        )
        rec = read_signal_records(out)[0]
        assert rec.label == "classA"
        assert rec.channels["x"].values[0] == 2.0

    def test_sin_phase_init(self, tmp_path):
        out = tmp_path / "s.jsonl"
        assert run("generate", "--kind", "sin", "--n", "10", "--init", "0", "--out", str(out)) == 0
        rec = read_signal_records(out)[0]
        assert rec.channels["x"].values[0] == 0.0

    def test_overflow_exit_code(self, tmp_path):
        out = tmp_path / "boom.jsonl"
        code = run("generate", "--kind", "lorenz", "--n", "60", "--dt", "1000",
                   "--init", "2,2,20", "--out", str(out))
        assert code == 3

    def test_bad_flag_usage_error(self, tmp_path):
        assert run("generate", "--kind", "triangle", "--out", str(tmp_path / "x.jsonl")) == 1

    def test_bad_init_usage_error(self, tmp_path):
        assert (
            run("generate", "--kind", "lorenz", "--init", "1,2", "--out",
                str(tmp_path / "x.jsonl"))
            == 1
        )


class TestConvertValidate:
    def test_valid_file(self, signals_file, capsys):
        assert run("convert-validate", "--in", str(signals_file)) == 0
        assert "6" in capsys.readouterr().out

    def test_missing_file(self, tmp_path):
        assert run("convert-validate", "--in", str(tmp_path / "nope.jsonl")) == 2

    def test_malformed_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"label": "a"}\n')
        assert run("convert-validate", "--in", str(bad)) == 2
        assert "line 1" in capsys.readouterr().err


class TestCompress:
    def test_output_has_times(self, tmp_path, signals_file):
        out = tmp_path / "w3.jsonl"
        assert run("compress", "--in", str(signals_file), "--w", "3", "--out", str(out)) == 0
        records = read_signal_records(out)
        assert len(records) == 6
        for rec in records:
            ts = rec.channels["x"]
            assert ts.times is not None
            assert len(ts) < 80

    def test_too_wide_window_is_data_error(self, tmp_path, signals_file):
        out = tmp_path / "w99.jsonl"
        assert run("compress", "--in", str(signals_file), "--w", "99", "--out", str(out)) == 2


class TestTransform:
    def test_graph_dir_layout(self, graphs_dir):
        index, graphs = read_graph_dir(graphs_dir)
        assert index.method == "clpvg"
        assert index.m == 1
        assert index.alpha == {"x": 10.0}
        assert index.order == 0
        assert len(graphs) == 6
        assert all(e.channel == "x" for e in index.entries)
        assert all(e.snr_db == 25.0 for e in index.entries)
        assert sorted(e.file for e in index.entries) == [e.file for e in index.entries]

    def test_per_channel_alpha_syntax(self, tmp_path, signals_file):
        out = tmp_path / "g2"
        assert (
            run("transform", "--method", "clpvg", "--m", "0", "--alpha", "x=-2.5",
                "--in", str(signals_file), "--out-dir", str(out))
            == 0
        )
        index, _ = read_graph_dir(out)
        assert index.alpha == {"x": -2.5}

    def test_unknown_channel_is_data_error(self, tmp_path, signals_file):
        assert (
            run("transform", "--method", "vg", "--in", str(signals_file),
                "--channel", "Q", "--out-dir", str(tmp_path / "gq"))
            == 2
        )

    def test_vg_method_ignores_alpha(self, tmp_path, signals_file):
        out = tmp_path / "gvg"
        assert run("transform", "--method", "vg", "--in", str(signals_file),
                   "--out-dir", str(out)) == 0
        index, _ = read_graph_dir(out)
        assert index.method == "vg"
        assert index.alpha is None


class TestSgn:
    def test_order_increments(self, tmp_path, graphs_dir):
        out = tmp_path / "sgn"
        assert run("sgn", "--in-dir", str(graphs_dir), "--out-dir", str(out)) == 0
        base_index, base_graphs = read_graph_dir(graphs_dir)
        index, graphs = read_graph_dir(out)
        assert index.order == base_index.order + 1
        for g0, g1 in zip(base_graphs, graphs):
            assert g1.n == g0.m_edges

    def test_node_mapping_sidecar(self, tmp_path, graphs_dir):
        out = tmp_path / "sgnmap"
        assert run("sgn", "--in-dir", str(graphs_dir), "--out-dir", str(out), "--mapping") == 0
        index, _ = read_graph_dir(out)
        first = index.entries[0].file
        sidecar = out / first.replace(".edges", "_nodes.json")
        assert sidecar.is_file()
        mapping = json.loads(sidecar.read_text())
        _, base_graphs = read_graph_dir(graphs_dir)
        assert len(mapping) == base_graphs[0].m_edges
        assert mapping[0] == list(base_graphs[0].edges[0])


class TestMetrics:
    def test_csv_and_histograms(self, tmp_path, graphs_dir, capsys):
        csv_path = tmp_path / "metrics.csv"
        hist_dir = tmp_path / "hists"
        assert (
            run("metrics", "--in-dir", str(graphs_dir), "--out-csv", str(csv_path),
                "--hist-dir", str(hist_dir))
            == 0
        )
        lines = csv_path.read_text().splitlines()
        assert lines[0] == "signal,channel,method,order,label,n,m_edges,avg_clustering"
        assert len(lines) == 7
        hists = sorted(hist_dir.glob("*_degree_hist.csv"))
        assert len(hists) == 6
        head = hists[0].read_text().splitlines()
        assert head[0] == "degree,count"


class TestEmbed:
    def test_fused_width_with_sgn(self, tmp_path, graphs_dir):
        out = tmp_path / "features.csv"
        assert (
            run("embed", "--in-dir", str(graphs_dir), "--h", "2", "--dim", "16",
                "--out", str(out))
            == 0
        )
        fm = read_feature_csv(out)
        assert fm.shape == (6, 2 * 1 * 16)
        assert fm.labels == ["sin"] * 6
        assert fm.snr_db == [25.0] * 6

    def test_without_sgn(self, tmp_path, graphs_dir):
        out = tmp_path / "f0.csv"
        assert (
            run("embed", "--in-dir", str(graphs_dir), "--h", "2", "--dim", "16",
                "--no-sgn", "--out", str(out))
            == 0
        )
        assert read_feature_csv(out).shape == (6, 16)


class TestPcaCli:
    def test_exclusive_flags(self, tmp_path, graphs_dir):
        feats = tmp_path / "f.csv"
        run("embed", "--in-dir", str(graphs_dir), "--dim", "8", "--out", str(feats))
        out = tmp_path / "p.csv"
        assert run("pca", "--in", str(feats), "--out", str(out)) == 1
        assert (
            run("pca", "--in", str(feats), "--theta", "2", "--variance", "0.9",
                "--out", str(out))
            == 1
        )

    def test_theta_projection(self, tmp_path, graphs_dir):
        feats = tmp_path / "f.csv"
        run("embed", "--in-dir", str(graphs_dir), "--dim", "8", "--out", str(feats))
        out = tmp_path / "p.csv"
        model_out = tmp_path / "pca.json"
        assert (
            run("pca", "--in", str(feats), "--theta", "3", "--out", str(out),
                "--model-out", str(model_out))
            == 0
        )
        fm = read_feature_csv(out)
        assert fm.shape == (6, 3)
        assert fm.column_meta == ["pc0", "pc1", "pc2"]
        payload = json.loads(model_out.read_text())
        assert len(payload["components"]) == 3


class TestClassifyCli:
    def make_features(self, tmp_path):
        # two separable labeled groups, enough rows per class to split
        rows = []
        labels = []
        rng = np.random.default_rng(0)
        for i in range(10):
            rows.append(rng.standard_normal(4) + (0.0 if i % 2 == 0 else 10.0))
            labels.append("lo" if i % 2 == 0 else "hi")
        from vistra import FeatureMatrix
        from vistra.pipeline import write_feature_csv

        path = tmp_path / "feat.csv"
        write_feature_csv(path, FeatureMatrix(np.asarray(rows), labels,
                                              [f"c{i}" for i in range(4)]))
        return path

    def test_split_mode(self, tmp_path, capsys):
        feats = self.make_features(tmp_path)
        report_path = tmp_path / "report.json"
        assert (
            run("classify", "--in", str(feats), "--mode", "split", "--ratio", "0.8",
                "--trees", "10", "--seed", "0", "--report", str(report_path))
            == 0
        )
        payload = json.loads(report_path.read_text())
        assert payload["accuracy"] == 1.0
        out = capsys.readouterr().out
        assert "accuracy" in out

    def test_cv_mode(self, tmp_path, capsys):
        feats = self.make_features(tmp_path)
        report_path = tmp_path / "cv.json"
        assert (
            run("classify", "--in", str(feats), "--mode", "cv", "--k", "5",
                "--trees", "10", "--seed", "0", "--report", str(report_path))
            == 0
        )
        payload = json.loads(report_path.read_text())
        assert len(payload["fold_accuracies"]) == 5


class TestPlotData:
    def test_accuracy_vs_snr_and_hists(self, tmp_path):
        # two labeled groups at two noise levels, through the full chain
        part_a = tmp_path / "a.jsonl"
        part_b = tmp_path / "b.jsonl"
        run("generate", "--kind", "sin", "--n", "60", "--count", "4", "--seed", "1",
            "--snr-db", "15", "--label", "a", "--out", str(part_a))
        run("generate", "--kind", "sin", "--n", "60", "--count", "4", "--seed", "2",
            "--snr-db", "30", "--label", "b", "--out", str(part_b))
        signals = tmp_path / "both.jsonl"
        signals.write_text(part_a.read_text() + part_b.read_text())
        graphs = tmp_path / "graphs"
        run("transform", "--in", str(signals), "--method", "vg", "--out-dir", str(graphs))
        feats = tmp_path / "f.csv"
        run("embed", "--in-dir", str(graphs), "--dim", "8", "--out", str(feats))
        report_path = tmp_path / "report.json"
        assert (
            run("classify", "--in", str(feats), "--mode", "split", "--ratio", "0.5",
                "--trees", "5", "--seed", "0", "--report", str(report_path))
            == 0
        )
        out_dir = tmp_path / "plots"
        assert (
            run("plot-data", "--report", str(report_path), "--graphs-dir",
                str(graphs), "--out-dir", str(out_dir))
            == 0
        )
        acc = (out_dir / "accuracy_vs_snr.csv").read_text().splitlines()
        assert acc[0] == "snr_db,count,accuracy"
        assert len(acc) == 3  # one row per SNR level
        assert acc[1].startswith("15.0,")
        assert acc[2].startswith("30.0,")
        # stratified halves: two test samples per class, one class per level
        assert [line.split(",")[1] for line in acc[1:]] == ["2", "2"]
        assert len(list(out_dir.glob("*_degree_hist.csv"))) == 8

    def test_requires_some_input(self, tmp_path):
        assert run("plot-data", "--out-dir", str(tmp_path / "p")) == 1


class TestSubprocessEntry:
    """The installed console path: real process, real exit codes."""

    def test_module_invocation_ok(self, tmp_path):
        out = tmp_path / "sig.jsonl"
        proc = subprocess.run(
            [sys.executable, "-m", "vistra", "generate", "--kind", "sin", "--n", "40",
             "--out", str(out)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert out.is_file()

    def test_module_invocation_data_error(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "vistra", "convert-validate", "--in",
             str(tmp_path / "missing.jsonl")],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 2
        assert proc.stderr

    def test_usage_error(self):
        proc = subprocess.run(
            [sys.executable, "-m", "vistra", "transform", "--method", "banana"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 1


class TestThreadPool:
    def test_thread_count_does_not_change_output(self, tmp_path, signals_file):
        outs = []
        for threads in ("1", "4"):
            out = tmp_path / f"g{threads}"
            env_backup = os.environ.get("VISTRA_THREADS")
            os.environ["VISTRA_THREADS"] = threads
            try:
                assert (
                    run("transform", "--method", "lpvg", "--m", "2",
                        "--in", str(signals_file), "--out-dir", str(out))
                    == 0
                )
            finally:
                if env_backup is None:
                    del os.environ["VISTRA_THREADS"]
                else:
                    os.environ["VISTRA_THREADS"] = env_backup
            outs.append((out / "index.json").read_bytes())
        assert outs[0] == outs[1]

    def test_pool_size_env(self, monkeypatch):
        from vistra.pipeline import pool_size

        monkeypatch.setenv("VISTRA_THREADS", "3")
        assert pool_size() == 3
        monkeypatch.setenv("VISTRA_THREADS", "0")
        with pytest.raises(ValueError):
            pool_size()
        monkeypatch.delenv("VISTRA_THREADS")
        assert pool_size() >= 1
