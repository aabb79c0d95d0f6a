import json
import subprocess
import sys

import numpy as np
import pytest
from click.testing import CliRunner

from fcc import FccConfig, evaluate, fcc_run
from fcc.cli import main
from fcc.fileio import read_match_file, write_match_file

from conftest import DEMO_EDGES


@pytest.fixture
def runner():
    return CliRunner()


def _invoke(runner, *args):
    return runner.invoke(main, list(args), catch_exceptions=False)


def _write_demo_file(path):
    lines = ["4 8", "2 2 2 2"]
    lines += [f"{a} {k} {b} {l}" for a, k, b, l in DEMO_EDGES]
    path.write_text("\n".join(lines) + "\n")


class TestGenerate:
    def test_tiny_round_trip(self, runner, tmp_path):
        out = tmp_path / "m.txt"
        truth = tmp_path / "t.txt"
        res = _invoke(runner, "generate", "-m", "4", "-n", "3", "--pair-prob", "1",
                      "--min-common", "1", "--seed", "5",
                      "--out", str(out), "--truth-out", str(truth))
        assert res.exit_code == 0
        g = read_match_file(out)
        t = read_match_file(truth)
        assert t.edge_set() <= g.edge_set()
        rewritten = tmp_path / "m2.txt"
        write_match_file(rewritten, g)
        assert rewritten.read_bytes() == out.read_bytes()

    def test_same_seed_byte_identical(self, runner, tmp_path):
        args = ["generate", "-m", "10", "-n", "6", "--pair-prob", "0.8",
                "--corruption", "replace:0.5", "--min-common", "2", "--seed", "9"]
        a_out, a_truth = tmp_path / "a.txt", tmp_path / "at.txt"
        b_out, b_truth = tmp_path / "b.txt", tmp_path / "bt.txt"
        assert _invoke(runner, *args, "--out", str(a_out), "--truth-out", str(a_truth)).exit_code == 0
        assert _invoke(runner, *args, "--out", str(b_out), "--truth-out", str(b_truth)).exit_code == 0
        assert a_out.read_bytes() == b_out.read_bytes()
        assert a_truth.read_bytes() == b_truth.read_bytes()

    def test_edge_count_matches_in_memory(self, runner, tmp_path):
        from fcc import ReplaceCorruption, SyntheticConfig, generate_instance

        out, truth = tmp_path / "m.txt", tmp_path / "t.txt"
        res = _invoke(runner, "generate", "-m", "30", "-n", "12",
                      "--corruption", "replace:0.5", "--seed", "3",
                      "--out", str(out), "--truth-out", str(truth))
        assert res.exit_code == 0
        inst = generate_instance(SyntheticConfig(
            num_points=30, num_cameras=12, corruption=ReplaceCorruption(0.5), seed=3))
        g = read_match_file(out)
        assert g == inst.graph
        assert len(out.read_text().splitlines()) - 2 == inst.graph.nnz // 2


class TestFilter:
    def test_demo_file_drops_bad_edge(self, runner, tmp_path):
        src = tmp_path / "demo.txt"
        _write_demo_file(src)
        out = tmp_path / "filtered.txt"
        scores = tmp_path / "scores.txt"
        res = _invoke(runner, "filter", "-i", str(src), "--q", "2", "--r", "1",
                      "--s", "1", "-T", "1", "--tau", "0.25",
                      "--out", str(out), "--scores-out", str(scores))
        assert res.exit_code == 0
        kept = read_match_file(out)
        src_graph = read_match_file(src)
        assert kept.edge_set() == src_graph.edge_set() - {(0, 3)}
        assert "0 0 1 1" not in out.read_text().splitlines()
        score_lines = scores.read_text().splitlines()
        assert "0 0 1 1 0.000000" in score_lines

    def test_empty_input_empty_output(self, runner, tmp_path):
        src = tmp_path / "empty.txt"
        src.write_text("2 3\n2 1\n")
        out = tmp_path / "out.txt"
        res = _invoke(runner, "filter", "-i", str(src), "--out", str(out))
        assert res.exit_code == 0
        assert read_match_file(out).nnz == 0

    def test_repeat_runs_byte_identical(self, runner, tmp_path):
        src = tmp_path / "m.txt"
        truth = tmp_path / "t.txt"
        _invoke(runner, "generate", "-m", "20", "-n", "8", "--corruption",
                "replace:0.5", "--seed", "2", "--out", str(src),
                "--truth-out", str(truth))
        outs = []
        for tag, workers in (("1", "1"), ("2", "2"), ("3", "1")):
            out = tmp_path / f"f{tag}.txt"
            sc = tmp_path / f"s{tag}.txt"
            res = _invoke(runner, "filter", "-i", str(src), "-T", "3",
                          "--workers", workers, "--out", str(out),
                          "--scores-out", str(sc))
            assert res.exit_code == 0
            outs.append((out.read_bytes(), sc.read_bytes()))
        assert outs[0] == outs[1] == outs[2]


class TestEval:
    def test_perfect_and_disjoint(self, runner, tmp_path):
        src = tmp_path / "demo.txt"
        _write_demo_file(src)
        report = tmp_path / "r.json"
        res = _invoke(runner, "eval", "--est", str(src), "--truth", str(src),
                      "--input", str(src), "--report", str(report))
        assert res.exit_code == 0
        data = json.loads(report.read_text())
        assert data["metrics"]["jd"] == 0.0
        assert data["metrics"]["pr"] == 1.0
        assert data["metrics"]["retention"] == 1.0

        # estimate = only the bad edge, truth = only the good edges: disjoint
        bad_only = tmp_path / "bad_only.txt"
        bad_only.write_text("4 8\n2 2 2 2\n0 0 1 1\n")
        good_only = tmp_path / "good_only.txt"
        good_only.write_text(
            "4 8\n2 2 2 2\n" +
            "\n".join(f"{a} {k} {b} {l}" for a, k, b, l in DEMO_EDGES
                      if (a, k, b, l) != (0, 0, 1, 1)) + "\n"
        )
        res = _invoke(runner, "eval", "--est", str(bad_only), "--truth", str(good_only),
                      "--input", str(src), "--report", str(report))
        assert res.exit_code == 0
        data = json.loads(report.read_text())
        assert data["metrics"]["pr"] == 0.0

    def test_matches_library_call(self, runner, tmp_path):
        from fcc import ReplaceCorruption, SyntheticConfig, generate_instance

        inst = generate_instance(SyntheticConfig(
            num_points=20, num_cameras=8, corruption=ReplaceCorruption(0.5), seed=6))
        src, truth = tmp_path / "m.txt", tmp_path / "t.txt"
        est = tmp_path / "f.txt"
        write_match_file(src, inst.graph)
        from fcc.graph import MatchGraph

        rows, cols, _ = inst.graph.edge_arrays()
        truth_graph = MatchGraph.from_global_edges(
            inst.partition, rows[inst.good_mask].astype(np.int64),
            cols[inst.good_mask].astype(np.int64))
        write_match_file(truth, truth_graph)
        result = fcc_run(inst.graph, FccConfig(iterations=3))
        write_match_file(est, result.filtered)
        report = tmp_path / "r.json"
        res = _invoke(runner, "eval", "--est", str(est), "--truth", str(truth),
                      "--input", str(src), "--report", str(report))
        assert res.exit_code == 0
        data = json.loads(report.read_text())["metrics"]
        direct = evaluate(result.filtered.edge_set(), truth_graph.edge_set(),
                          inst.graph.edge_set())
        assert data["jd"] == pytest.approx(direct.jd)
        assert data["pr"] == pytest.approx(direct.pr)
        assert data["true_positives"] == direct.true_positives

    def test_header_mismatch(self, runner, tmp_path):
        src = tmp_path / "demo.txt"
        _write_demo_file(src)
        other = tmp_path / "other.txt"
        other.write_text("2 2\n1 1\n0 0 1 0\n")
        report = tmp_path / "r.json"
        res = runner.invoke(main, ["eval", "--est", str(other), "--truth", str(src),
                                   "--input", str(src), "--report", str(report)])
        assert res.exit_code == 2


class TestHist:
    def test_mirrors_library_histogram(self, runner, tmp_path):
        src = tmp_path / "demo.txt"
        _write_demo_file(src)
        truth = tmp_path / "truth.txt"
        truth.write_text(
            "4 8\n2 2 2 2\n" +
            "\n".join(f"{a} {k} {b} {l}" for a, k, b, l in DEMO_EDGES
                      if (a, k, b, l) != (0, 0, 1, 1)) + "\n"
        )
        filtered = tmp_path / "f.txt"
        scores = tmp_path / "s.txt"
        _invoke(runner, "filter", "-i", str(src), "--q", "2", "--r", "1", "--s", "1",
                "-T", "1", "--tau", "0.25", "--out", str(filtered),
                "--scores-out", str(scores))
        out = tmp_path / "h.csv"
        res = _invoke(runner, "hist", "--scores", str(scores), "--truth", str(truth),
                      "--bins", "2", "--out", str(out))
        assert res.exit_code == 0
        assert out.read_text() == (
            "bin_lo,bin_hi,good,bad\n"
            "0.000000,0.500000,0,1\n"
            "0.500000,1.000000,10,0\n"
        )


class TestBench:
    def test_single_size_row(self, runner, tmp_path):
        out = tmp_path / "b.json"
        res = _invoke(runner, "bench", "--sizes", "8", "--seed", "1", "--out", str(out))
        assert res.exit_code == 0
        data = json.loads(out.read_text())
        assert len(data["rows"]) == 1
        row = data["rows"][0]
        assert row["cameras"] == 8
        assert row["nnz_x"] >= 0
        assert all(np.isfinite(t) for t in row["seconds_per_iteration"])
        assert np.isfinite(row["seconds_generate"])

    def test_doubling_cameras_roughly_doubles_edges(self, runner, tmp_path):
        out = tmp_path / "b.json"
        res = _invoke(runner, "bench", "--sizes", "60,120", "--seed", "4",
                      "--out", str(out))
        assert res.exit_code == 0
        rows = json.loads(out.read_text())["rows"]
        ratio = rows[1]["nnz_x"] / rows[0]["nnz_x"]
        assert ratio <= 4.0  # doubling within a 2x slack of the 2x target
        assert ratio >= 1.0

    def test_sizes_must_ascend(self, runner, tmp_path):
        res = runner.invoke(main, ["bench", "--sizes", "20,10",
                                   "--out", str(tmp_path / "b.json")])
        assert res.exit_code == 3


class TestExitCodes:
    def test_parse_error_is_2(self, runner, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("garbage\n")
        res = runner.invoke(main, ["filter", "-i", str(bad),
                                   "--out", str(tmp_path / "o.txt")])
        assert res.exit_code == 2

    def test_config_error_is_3(self, runner, tmp_path):
        src = tmp_path / "demo.txt"
        _write_demo_file(src)
        res = runner.invoke(main, ["filter", "-i", str(src), "--q", "4", "--r", "1",
                                   "--s", "1", "--out", str(tmp_path / "o.txt")])
        assert res.exit_code == 3
        res = runner.invoke(main, ["generate", "--corruption", "bogus:1",
                                   "--out", str(tmp_path / "m.txt"),
                                   "--truth-out", str(tmp_path / "t.txt")])
        assert res.exit_code == 3

    def test_io_error_is_4(self, runner, tmp_path):
        src = tmp_path / "demo.txt"
        _write_demo_file(src)
        res = runner.invoke(main, ["filter", "-i", str(src),
                                   "--out", "/nonexistent-dir/deep/o.txt"])
        assert res.exit_code == 4

    def test_missing_input_is_io_error(self, runner, tmp_path):
        res = runner.invoke(main, ["filter", "-i", str(tmp_path / "nope.txt"),
                                   "--out", str(tmp_path / "o.txt")])
        assert res.exit_code == 4


def test_console_script_installed():
    proc = subprocess.run([sys.executable, "-m", "fcc.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    for sub in ("generate", "filter", "eval", "hist", "bench"):
        assert sub in proc.stdout
