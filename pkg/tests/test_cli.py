"""Command-line pipeline: artifacts, exit codes, determinism, and the
re-verification path."""

import json

import pytest

from lllcolor.cli import main
from lllcolor.streams import parse_coloring, parse_manifest

ARTIFACTS = {
    "audit.json",
    "coloring.txt",
    "config.json",
    "family.txt",
    "sparsity.csv",
    "sparsity.json",
    "stream.txt",
}


def run_cli(*args):
    return main([str(a) for a in args])


class TestRun:
    def test_comp_pipeline(self, tmp_path, capsys):
        out = tmp_path / "comp"
        rc = run_cli("run", "--mode", "comp", "--f", "sum", "--seed", "7",
                     "--horizon", "2048", "--members", "12", "--out", out)
        assert rc == 0
        assert {p.name for p in out.iterdir()} == ARTIFACTS
        audit = json.loads((out / "audit.json").read_text())
        assert audit["violations_total"] == 0
        config = json.loads((out / "config.json").read_text())
        assert config["M"] == 4 and config["mode"] == "comp"

    def test_main_pipeline(self, tmp_path):
        out = tmp_path / "main"
        rc = run_cli("run", "--mode", "main", "--f", "sum", "--seed", "3",
                     "--horizon", "2048", "--members", "5", "--out", out)
        assert rc == 0
        audit = json.loads((out / "audit.json").read_text())
        assert audit["ok"] and audit["bound_rule"] == "1*(M+i)"

    def test_M_below_least_names_value(self, tmp_path, capsys):
        rc = run_cli("run", "--mode", "main", "--f", "absdiff", "--M", "10",
                     "--seed", "1", "--horizon", "2048", "--members", "3",
                     "--out", tmp_path / "x")
        assert rc == 2
        err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert err["least_valid"] == 19

    def test_horizon_floor(self, tmp_path, capsys):
        rc = run_cli("run", "--mode", "comp", "--f", "sum", "--seed", "1",
                     "--horizon", "8", "--members", "3", "--out", tmp_path / "x")
        assert rc == 2
        capsys.readouterr()

    def test_comp_requires_sum(self, tmp_path, capsys):
        rc = run_cli("run", "--mode", "comp", "--f", "absdiff", "--seed", "1",
                     "--horizon", "2048", "--members", "3", "--out", tmp_path / "x")
        assert rc == 2
        capsys.readouterr()

    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            rc = run_cli("run", "--mode", "comp", "--f", "sum", "--seed", "7",
                         "--horizon", "2048", "--members", "12", "--out", out)
            assert rc == 0
        for name in ARTIFACTS:
            assert (a / name).read_bytes() == (b / name).read_bytes(), name

    def test_custom_q_plumbs_through(self, tmp_path):
        out = tmp_path / "q25"
        rc = run_cli("run", "--mode", "comp", "--f", "sum", "--q", "2/5",
                     "--seed", "4", "--horizon", "2048", "--members", "6",
                     "--out", out)
        assert rc == 0
        config = json.loads((out / "config.json").read_text())
        assert config["q"] == "2/5"
        assert config["M"] == 8  # least admissible at q = 2/5
        assert run_cli("verify", "--coloring", out / "coloring.txt",
                       "--stream", out / "stream.txt") == 0

    def test_construction_failure_exits_three(self, tmp_path, monkeypatch, capsys):
        import lllcolor.cli as cli
        from lllcolor.errors import ConstructionFailureError

        def boom(stream, horizon, seed):
            raise ConstructionFailureError(2, (5,), "synthetic")

        monkeypatch.setattr(cli, "color_prefix", boom)
        rc = run_cli("run", "--mode", "comp", "--f", "sum", "--seed", "1",
                     "--horizon", "2048", "--members", "3", "--out", tmp_path / "x")
        assert rc == 3
        err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert err["error"] == "ConstructionFailureError"
        assert err["phase"] == 2

    def test_env_out_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("LLLCOLOR_OUT", str(tmp_path / "envout"))
        rc = run_cli("run", "--mode", "main", "--f", "sum", "--seed", "3",
                     "--horizon", "2048", "--members", "4")
        assert rc == 0
        produced = list((tmp_path / "envout").iterdir())
        assert len(produced) == 1 and produced[0].name.startswith("main-sum-")


class TestVerify:
    @pytest.fixture()
    def artifacts(self, tmp_path):
        out = tmp_path / "run"
        rc = run_cli("run", "--mode", "comp", "--f", "sum", "--seed", "5",
                     "--horizon", "2048", "--members", "10", "--out", out)
        assert rc == 0
        return out

    def test_fresh_artifacts_verify(self, artifacts):
        assert run_cli("verify", "--coloring", artifacts / "coloring.txt",
                       "--stream", artifacts / "stream.txt") == 0

    def test_bit_flip_detected(self, tmp_path):
        # a two-element set whose coloring is exactly dichromatic: flipping
        # either bit makes it constant
        stream_text = "stream sets M 2 q 1/2\nitem 0 2 0 1\n"
        coloring_text = "coloring 2 0\n01\n"
        (tmp_path / "stream.txt").write_text(stream_text)
        (tmp_path / "coloring.txt").write_text(coloring_text)
        assert run_cli("verify", "--coloring", tmp_path / "coloring.txt",
                       "--stream", tmp_path / "stream.txt") == 0
        (tmp_path / "coloring.txt").write_text("coloring 2 0\n00\n")
        assert run_cli("verify", "--coloring", tmp_path / "coloring.txt",
                       "--stream", tmp_path / "stream.txt") == 1

    def test_fingerprint_mismatch_warns(self, artifacts, tmp_path, capsys):
        other = tmp_path / "other"
        rc = run_cli("run", "--mode", "comp", "--f", "sum", "--seed", "6",
                     "--horizon", "2048", "--members", "10", "--out", other)
        assert rc == 0
        rc = run_cli("verify", "--coloring", artifacts / "coloring.txt",
                     "--stream", other / "stream.txt")
        err = capsys.readouterr().err
        assert "fingerprint" in err

    def test_truncated_stream_is_parse_error(self, artifacts, capsys):
        text = (artifacts / "stream.txt").read_text().splitlines()
        (artifacts / "stream.txt").write_text("\n".join(text[: len(text) // 2]) + " 1\n")
        rc = run_cli("verify", "--coloring", artifacts / "coloring.txt",
                     "--stream", artifacts / "stream.txt")
        assert rc == 2
        capsys.readouterr()


class TestRoundTrips:
    def test_artifacts_reload(self, tmp_path):
        out = tmp_path / "run"
        run_cli("run", "--mode", "main", "--f", "absdiff", "--seed", "2",
                "--horizon", "2048", "--members", "3", "--out", out)
        stream = parse_manifest((out / "stream.txt").read_text())
        coloring = parse_coloring((out / "coloring.txt").read_text())
        assert coloring.stream_fingerprint == stream.fingerprint()
        assert coloring.committed_len >= 2048
        assert stream.provenance is not None


class TestDemos:
    def test_pigeonhole(self, capsys):
        assert run_cli("demo", "pigeonhole") == 0
        out = capsys.readouterr().out
        assert "forced for all s <= 12" in out
        assert "0110" in out

    def test_baseline(self, capsys):
        assert run_cli("demo", "baseline") == 0
        out = capsys.readouterr().out
        assert "0011" in out
        assert "homogeneous translates in window: 0" in out

    def test_lll_cert(self, capsys):
        assert run_cli("demo", "lll-cert") == 0
        out = capsys.readouterr().out
        assert "q = 1/1: accept" in out
        assert "q = 3/4: refuse" in out
        assert "-5/216" in out
