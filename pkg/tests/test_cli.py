"""CLI: subcommands, config handling, exit codes, and output files."""

from __future__ import annotations

import json
from fractions import Fraction

import pytest

from hetdapac import cli
from hetdapac.errors import RetrievalFailure


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    return code, capsys.readouterr()


HET1_FLAGS = ("--scheme", "het1", "--n", "3", "--d", "2", "--k", "2",
              "--length", "2")


class TestRun:
    def test_single_run_prints_exact_and_decimal(self, capsys):
        code, out = run_cli(capsys, "run", *HET1_FLAGS,
                            "--seed", "7", "--vstar", "1,2,2")
        assert code == 0
        assert "rate                 1/3 (0.3333333333)" in out.out
        assert "load_ratio           1/4 (0.25)" in out.out
        assert "matches store: True" in out.out
        echo = json.loads(out.out.splitlines()[0])
        assert echo["config"]["seed"] == 7

    def test_transcript_file_is_reproducible(self, capsys, tmp_path):
        path = tmp_path / "transcript.jsonl"
        args = ("run", *HET1_FLAGS, "--seed", "3", "--vstar", "2,1,1",
                "--out", str(path))
        run_cli(capsys, *args)
        first = path.read_text()
        run_cli(capsys, *args)
        assert path.read_text() == first
        lines = [json.loads(line) for line in first.splitlines()]
        assert "config" in lines[0]
        assert [r["seq"] for r in lines[1:]] == list(range(len(lines) - 1))

    def test_sweep_covers_every_vector(self, capsys, tmp_path):
        path = tmp_path / "sweep.jsonl"
        code, out = run_cli(capsys, "run", *HET1_FLAGS, "--out", str(path))
        assert code == 0
        runs = [line for line in out.out.splitlines() if line.startswith("v*=")]
        assert len(runs) == 8
        assert all("match True" in line for line in runs)
        lines = path.read_text().splitlines()
        assert len(lines) == 9  # config echo plus one record per vector

    def test_mix_needs_lambda(self, capsys):
        code, out = run_cli(capsys, "run", "--scheme", "mix", "--n", "3",
                            "--d", "2", "--k", "2", "--length", "12")
        assert code == 2
        assert "lambda" in out.err

    def test_mix_run_works(self, capsys):
        code, out = run_cli(capsys, "run", "--scheme", "mix", "--n", "3",
                            "--d", "2", "--k", "2", "--length", "12",
                            "--lambda", "1/2", "--vstar", "1,1,1")
        assert code == 0
        assert "rate                 2/7" in out.out

    def test_het2_needs_three_dedicated_servers(self, capsys):
        code, out = run_cli(capsys, "run", "--scheme", "het2", "--n", "3",
                            "--d", "2", "--k", "2", "--length", "6")
        assert code == 2
        assert "D >= 3" in out.err

    def test_bad_length_names_smallest_valid(self, capsys):
        code, out = run_cli(capsys, "run", *HET1_FLAGS[:-1], "3")
        assert code == 2
        assert "smallest valid length: 2" in out.err

    def test_missing_parameters_are_listed(self, capsys):
        code, out = run_cli(capsys, "run", "--scheme", "het1", "--n", "3")
        assert code == 2
        assert "d" in out.err and "length" in out.err

    def test_wrong_vstar_arity(self, capsys):
        code, out = run_cli(capsys, "run", *HET1_FLAGS, "--vstar", "1,2")
        assert code == 2
        assert "vstar" in out.err

    def test_decode_failure_exit_code(self, capsys, monkeypatch):
        def explode(*a, **kw):
            raise RetrievalFailure("decode failed after 8 attempts", attempts=8)
        monkeypatch.setattr(cli, "run_protocol", explode)
        code, out = run_cli(capsys, "run", *HET1_FLAGS, "--vstar", "1,1,1")
        assert code == 4
        assert "decode failure" in out.err


class TestConfigFile:
    def test_flags_override_file(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"scheme": "het1", "n": 3, "d": 2, "k": 2,
                                   "length": 2, "seed": 1}))
        code, out = run_cli(capsys, "run", "--config", str(cfg),
                            "--seed", "9", "--vstar", "1,1,1")
        assert code == 0
        echo = json.loads(out.out.splitlines()[0])
        assert echo["config"]["seed"] == 9

    def test_bad_scheme_in_file(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"scheme": "nope"}))
        code, out = run_cli(capsys, "run", "--config", str(cfg))
        assert code == 2

    def test_file_must_hold_an_object(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("[1, 2]")
        code, _ = run_cli(capsys, "run", "--config", str(cfg))
        assert code == 2


class TestAudit:
    def test_point_privacy_audit(self, capsys):
        code, out = run_cli(capsys, "audit", "--suite", "privacy",
                            "--scheme", "het1", "--n", "3", "--d", "2",
                            "--k", "2", "--q", "3", "--length", "2")
        assert code == 0
        for server in (1, 2, 3):
            assert f"PASS privacy het1 server {server} (max TV 0)" in out.out
        assert "PASS overall" in out.out

    def test_counts_suite_report_file(self, capsys, tmp_path):
        path = tmp_path / "report.json"
        code, out = run_cli(capsys, "audit", "--suite", "counts",
                            "--out", str(path))
        assert code == 0
        assert out.out.count("PASS counts") == 16
        report = json.loads(path.read_text())
        assert report["pass"] is True
        assert report["suites"][0]["suite"] == "counts"

    def test_secrecy_refusal_exit_code(self, capsys):
        code, out = run_cli(capsys, "audit", "--suite", "secrecy",
                            "--scheme", "het1", "--n", "3", "--d", "2",
                            "--k", "2", "--q", "3", "--length", "20")
        assert code == 3
        assert "estimated enumeration size" in out.err

    def test_unknown_suite_in_config(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"suite": "bogus"}))
        code, out = run_cli(capsys, "audit", "--config", str(cfg))
        assert code == 2
        assert "unknown suite" in out.err

    def test_point_counts_audit(self, capsys):
        code, out = run_cli(capsys, "audit", "--suite", "counts",
                            "--scheme", "dapac", "--n", "3", "--d", "3",
                            "--k", "2", "--length", "3")
        assert code == 0
        assert "PASS counts dapac" in out.out


def read_curve(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# ")
    header = lines[1].split(",")
    return header, [dict(zip(header, line.split(","))) for line in lines[2:]]


class TestCurve:
    def test_anchor_rows_and_dominance(self, capsys, tmp_path):
        path = tmp_path / "curve.csv"
        code, _ = run_cli(capsys, "curve", "--d", "4", "--k", "3",
                          "--out", str(path))
        assert code == 0
        header, rows = read_curve(path)
        assert header[:7] == list(cli.CURVE_COLUMNS)
        by_tag = {r["lambda_or_mix"]: r for r in rows}
        assert by_tag["het1"]["load_ratio_exact"] == "1/12"
        assert by_tag["het1"]["rate_frontier_exact"] == "1/4"
        assert by_tag["het2"]["load_ratio_exact"] == "3/4"
        assert by_tag["het2"]["rate_frontier_exact"] == "5/24"
        assert by_tag["dapac"]["load_ratio_exact"] == "inf"
        assert by_tag["dapac"]["rate_frontier_exact"] == "1/6"
        assert len(rows) == 3 + 13  # anchors plus lambda grid 0..12
        for row in rows:
            ts = Fraction(row["rate_timeshare_exact"])
            fr = Fraction(row["rate_frontier_exact"])
            assert fr >= ts

    def test_two_server_curve_has_no_het2(self, capsys, tmp_path):
        path = tmp_path / "curve2.csv"
        code, _ = run_cli(capsys, "curve", "--d", "2", "--k", "2",
                          "--grid", "4", "--out", str(path))
        assert code == 0
        _, rows = read_curve(path)
        tags = [r["lambda_or_mix"] for r in rows]
        assert "het2" not in tags
        for row in rows:
            assert row["rate_frontier_exact"] == row["rate_timeshare_exact"]

    def test_quarter_row_matches_executable_mix(self, capsys, tmp_path):
        # the D=2, K=2 grid row at 1/4 must agree with the executed mix
        path = tmp_path / "curve2.csv"
        run_cli(capsys, "curve", "--d", "2", "--k", "2", "--grid", "4",
                "--out", str(path))
        _, rows = read_curve(path)
        row = next(r for r in rows if r["lambda_or_mix"] == "1/4")
        assert row["rate_timeshare_exact"] == "4/13"
        assert row["load_ratio_exact"] == "7/12"

    def test_missing_dimension(self, capsys):
        code, out = run_cli(capsys, "curve", "--k", "3")
        assert code == 2
        assert "--d" in out.err

    def test_stdout_when_no_out_file(self, capsys):
        code, out = run_cli(capsys, "curve", "--d", "3", "--k", "2",
                            "--grid", "2")
        assert code == 0
        assert out.out.splitlines()[1].startswith("lambda_or_mix,")
