import json
import os
import subprocess
import sys

import numpy as np
import pytest

from nme import GradedElement, GradingSpec
from nme.cli import EXIT_MATH, EXIT_OK, EXIT_USAGE, dumps, main, parse_target

SPEC = GradingSpec(16, 4)


def run(tmp_path, *args):
    report = tmp_path / "report.json"
    code = main(list(args) + ["--out-report", str(report)])
    data = json.loads(report.read_text()) if report.exists() else None
    return code, data


class TestParseTarget:
    def test_terms(self):
        y = parse_target("sin:1:0.5+cos:3:0.1", SPEC)
        expect = GradedElement.mode(SPEC, "sin", 1, 0.5) + GradedElement.mode(SPEC, "cos", 3, 0.1)
        assert np.array_equal(y.coeffs, expect.coeffs)

    def test_file(self, tmp_path):
        y = GradedElement.mode(SPEC, "cos", 2, 0.25)
        path = tmp_path / "y.json"
        path.write_text(json.dumps(y.to_dict()))
        assert np.array_equal(parse_target(str(path), SPEC).coeffs, y.coeffs)

    @pytest.mark.parametrize("text", ["sin:0:1", "tan:1:1", "sin:17:1", "sin:1", "cos:a:1"])
    def test_bad(self, text):
        assert main(["solve", "--y", text]) == EXIT_USAGE


class TestDumps:
    def test_round_trip_17_digits(self):
        v = 0.1 + 0.2
        assert json.loads(dumps({"v": v}))["v"] == v

    def test_non_finite(self):
        assert json.loads(dumps({"a": float("inf"), "b": float("nan")})) == {"a": "inf", "b": "nan"}


class TestSolve:
    def test_identity(self, tmp_path):
        code, rep = run(tmp_path, "solve", "--problem", "identity", "--y", "sin:1:0.5",
                        "--eps", "1e-9")
        assert code == EXIT_OK and rep["success"]
        x = GradedElement.from_dict(rep["x_final"], SPEC)
        assert np.array_equal(x.coeffs, GradedElement.mode(SPEC, "sin", 1, 0.5).coeffs)

    def test_quadratic(self, tmp_path):
        code, rep = run(tmp_path, "solve", "--problem", "quadratic", "--mu", "1",
                        "--y", "sin:1:0.1", "--eps", "1e-6")
        assert code == EXIT_OK
        assert all(rep["certified_residual"])

    def test_guard_exit(self, tmp_path):
        code, rep = run(tmp_path, "solve", "--problem", "quadratic", "--mu", "1",
                        "--y", "sin:1:10")
        assert code == EXIT_MATH and rep["error"] == "GuardExit"

    def test_trace_file(self, tmp_path):
        trace = tmp_path / "trace.csv"
        code, _ = run(tmp_path, "solve", "--problem", "smoothing", "--y", "sin:3:1",
                      "--levels", "3", "--out-trace", str(trace))
        assert code == EXIT_OK
        lines = trace.read_text().splitlines()
        assert lines[0].startswith("t,r,accepted,defect_0")
        assert len(lines) >= 2

    def test_byte_identical(self, tmp_path):
        outs = []
        for i in range(2):
            d = tmp_path / str(i)
            d.mkdir()
            args = ["solve", "--problem", "quadratic", "--y", "sin:1:0.1+cos:2:0.02",
                    "--eps", "1e-4", "--levels", "1", "--seed", "3",
                    "--out-trace", str(d / "t.csv"), "--out-report", str(d / "r.json")]
            assert main(args) == EXIT_OK
            outs.append(((d / "t.csv").read_bytes(), (d / "r.json").read_bytes()))
        assert outs[0] == outs[1]

    def test_seed_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NME_SEED", "7")
        _, rep = run(tmp_path, "solve", "--problem", "identity")
        assert rep["seed"] == 7
        _, rep = run(tmp_path, "solve", "--problem", "identity", "--seed", "2")
        assert rep["seed"] == 2
        monkeypatch.setenv("NME_SEED", "x")
        assert main(["solve", "--problem", "identity"]) == EXIT_USAGE

    def test_config_file(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"problem": "smoothing", "K": 8, "N": 3}))
        code, rep = run(tmp_path, "solve", "--config", str(cfg), "--y", "cos:2:1")
        assert code == EXIT_OK and rep["problem"] == "smoothing" and rep["K"] == 8

    @pytest.mark.parametrize("args", [
        ["solve", "--problem", "nope"],
        ["solve", "--eps", "-1"],
        ["solve", "--levels", "9"],
        ["solve", "--config", "/nonexistent.json"],
        ["frobnicate"],
    ])
    def test_usage_errors(self, args):
        assert main(args) == EXIT_USAGE


class TestVerify:
    def test_identity(self, tmp_path):
        code, rep = run(tmp_path, "verify", "--problem", "identity", "--y", "sin:2:0.3")
        assert code == EXIT_OK and rep["pass"]

    def test_smoothing_ratios(self, tmp_path):
        code, rep = run(tmp_path, "verify", "--problem", "smoothing", "--y", "sin:3:1",
                        "--eps", "1e-9", "--levels", "4")
        assert code == EXIT_OK
        assert rep["bounds"]["ratios"][:4] == pytest.approx([2 / 3] * 4, rel=1e-12)

    def test_corrupted_constants(self, tmp_path):
        code, rep = run(tmp_path, "verify", "--problem", "smoothing", "--y", "sin:3:1",
                        "--c", "0.1")
        assert code == EXIT_MATH and not rep["pass"]
        assert rep["bounds"]["bound_ok"][:4] == [False] * 4

    def test_bad_constants(self):
        assert main(["verify", "--problem", "smoothing", "--c", "1,2"]) == EXIT_USAGE


def test_props_pass(tmp_path):
    code, rep = run(tmp_path, "props")
    assert code == EXIT_OK and rep["pass"]
    names = {p["name"] for p in rep["properties"]}
    assert {"metric_triangle", "sampled_box_inclusion", "derivative_fd_ladder"} <= names


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "nme", "solve", "--problem", "identity",
                          "--y", "cos:1:1"], capture_output=True, text=True,
                         env=dict(os.environ))
    assert out.returncode == 0
    assert json.loads(out.stdout)["success"] is True
