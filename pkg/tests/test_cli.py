import json

import pytest

from synthdyna import cli
from synthdyna.harness import read_metrics_csv


def run_cli(args):
    return cli.main([str(a) for a in args])


def test_run_writes_expected_rows(tmp_path):
    out = tmp_path / "m.csv"
    code = run_cli(["run", "--algo", "modelfree", "--trials", "2", "--episodes", "100",
                    "--seed", "7", "--out", out])
    assert code == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "trial,episode,regime,mse"
    assert len(lines) == 201
    summary = json.loads((tmp_path / "m_summary.json").read_text(encoding="utf-8"))
    assert summary["algorithms"]["modelfree"]["trials"] == 2


def test_run_repeats_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert run_cli(["run", "--algo", "stableexp", "--trials", "2", "--episodes", "50",
                        "--seed", "3", "--out", out]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_oracle_export(tmp_path):
    out = tmp_path / "v.csv"
    assert run_cli(["oracle", "--out", out]) == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "regime,row,col,value"
    assert len(lines) == 31
    start = [l for l in lines if l.startswith("PlusTop,1,0,")]
    assert start == ["PlusTop,1,0,0.225534375"]


def test_demo_theorem_report(tmp_path, capsys):
    report = tmp_path / "demo.txt"
    assert run_cli(["demo-theorem", "--k", "4", "--alpha", "0.1", "--eps", "0.01",
                    "--out", report]) == 0
    text = report.read_text(encoding="utf-8")
    assert "env_calls=176" in text
    assert "agg_calls=10" in text
    assert "env_calls=176" in capsys.readouterr().out


def test_gradcheck_passes(capsys):
    assert run_cli(["gradcheck", "--trials", "2"]) == 0
    out = capsys.readouterr().out
    assert "primitives" in out and "meta-loss" in out and "FAIL" not in out


def test_negative_alpha_rejected(tmp_path):
    with pytest.raises(SystemExit, match="alpha"):
        run_cli(["run", "--algo", "modelfree", "--alpha", "-0.1", "--trials", "1",
                 "--episodes", "10", "--out", tmp_path / "x.csv"])


def test_unknown_flag_rejected(tmp_path, capsys):
    with pytest.raises(SystemExit):
        run_cli(["run", "--algo", "modelfree", "--frobnicate", "1",
                 "--out", tmp_path / "x.csv"])


def test_unknown_algorithm_rejected(tmp_path):
    with pytest.raises(SystemExit):
        run_cli(["run", "--algo", "mystery", "--out", tmp_path / "x.csv"])


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "exp.ini"
    cfg.write_text("[experiment]\nepisodes = 40\n[modelfree]\nalpha = 0.2\n",
                   encoding="utf-8")
    out = tmp_path / "m.csv"
    assert run_cli(["run", "--algo", "modelfree", "--trials", "1", "--config", cfg,
                    "--alpha", "0.3", "--out", out, "--show-config"]) == 0
    shown = capsys.readouterr().out
    assert "alpha = 0.3" in shown       # flag wins over file
    assert "episodes = 40" in shown     # file wins over default
    assert len(read_metrics_csv(out)) == 40


def test_config_file_unknown_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "exp.ini"
    cfg.write_text("[modelfree]\nwhatever = 1\n", encoding="utf-8")
    code = run_cli(["run", "--algo", "modelfree", "--config", cfg,
                    "--out", tmp_path / "m.csv"])
    assert code == 1
    assert "whatever" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    code = run_cli(["run", "--algo", "modelfree", "--config", tmp_path / "nope.ini",
                    "--out", tmp_path / "m.csv"])
    assert code == 1
    assert "not found" in capsys.readouterr().err


def test_grid_subcommand(tmp_path, capsys):
    out = tmp_path / "grid.csv"
    assert run_cli(["grid", "--algo", "modelfree", "--trials", "2", "--episodes", "60",
                    "--regime-period", "0", "--window", "30",
                    "--vary", "alpha=0.05,0.1", "--out", out]) == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "alpha,score,failed"
    assert len(lines) == 3
    assert "best:" in capsys.readouterr().out


def test_compare_subcommand(tmp_path):
    outdir = tmp_path / "cmp"
    assert run_cli(["compare", "--trials", "2", "--episodes", "30", "--seed", "1",
                    "--window", "20", "--outdir", outdir]) == 0
    for algo in ("modelfree", "allexp", "stableexp", "synthdyna"):
        assert (outdir / f"{algo}.csv").exists()
    summary = json.loads((outdir / "summary.json").read_text(encoding="utf-8"))
    assert len(summary["pairwise_tests"]) == 6
    assert set(summary["algorithms"]) == {"modelfree", "allexp", "stableexp", "synthdyna"}


def test_help_for_every_subcommand(capsys):
    for sub in ("run", "compare", "grid", "oracle", "demo-theorem", "gradcheck"):
        with pytest.raises(SystemExit) as exc:
            run_cli([sub, "--help"])
        assert exc.value.code == 0
        assert capsys.readouterr().out
