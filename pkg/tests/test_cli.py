import json
import os

import pytest

from snmcache import experiments
from snmcache.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, build_parser, main

HERE = os.path.dirname(__file__)
CONFIGS = os.path.join(HERE, "..", "configs")


def write_config(tmp_path, raw, name="exp.json"):
    path = tmp_path / name
    path.write_text(json.dumps(raw))
    return str(path)


def curve_raw(**overrides):
    raw = {
        "mode": "curve-hit",
        "model": {"mu_bar": 20.0, "alpha": 0.8, "gamma_c": 0.1},
        "grid": {"mu_bar_T": [0.001, 0.01]},
    }
    raw.update(overrides)
    return raw


# ---- parser surface ----------------------------------------------------------

def test_help_matches_golden_file(monkeypatch):
    monkeypatch.setenv("COLUMNS", "80")
    with open(os.path.join(HERE, "data", "cli_help.txt")) as f:
        golden = f.read()
    assert build_parser().format_help() == golden


def test_common_flags_parse():
    parser = build_parser()
    for verb in ("generate", "thresholds", "curve", "simulate"):
        args = parser.parse_args(
            [verb, "--config", "c.json", "--out", "d", "--seed", "5",
             "--jobs", "2"])
        assert (args.command, args.config, args.out, args.seed, args.jobs) == \
            (verb, "c.json", "d", 5, 2)
    args = parser.parse_args(["reproduce", "fig4", "--scale", "paper"])
    assert (args.figure, args.scale) == ("fig4", "paper")
    assert parser.parse_args(["reproduce", "fig3"]).scale == "desk"


def test_version_and_usage_exits():
    with pytest.raises(SystemExit) as err:
        main(["--version"])
    assert err.value.code == 0
    with pytest.raises(SystemExit) as err:
        main([])  # a verb is required
    assert err.value.code == 2


# ---- validate ------------------------------------------------------------------

def test_validate_ok(tmp_path, capsys):
    path = write_config(tmp_path, curve_raw())
    assert main(["validate", "--config", path]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "ok"


def test_validate_reports_every_violation(tmp_path, capsys):
    raw = curve_raw(bogus=1)
    raw["model"]["alpha"] = 1.0
    path = write_config(tmp_path, raw)
    assert main(["validate", "--config", path]) == EXIT_CONFIG
    captured = capsys.readouterr()
    assert "bogus" in captured.out and "alpha" in captured.out
    record = json.loads(captured.err)
    assert record["error"]["code"] == EXIT_CONFIG
    assert len(record["error"]["detail"]) == 2


def test_validate_missing_and_malformed_files(tmp_path, capsys):
    assert main(["validate", "--config", str(tmp_path / "no.json")]) == \
        EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["validate", "--config", str(bad)]) == EXIT_CONFIG
    err_lines = capsys.readouterr().err.strip().splitlines()
    assert "not valid JSON" in json.loads(err_lines[-1])["error"]["detail"][0]


def test_repo_fixtures_validate_through_cli(capsys):
    for name in sorted(os.listdir(CONFIGS)):
        path = os.path.join(CONFIGS, name)
        assert main(["validate", "--config", path]) == EXIT_OK, name
    capsys.readouterr()


# ---- run verbs -------------------------------------------------------------------

def test_thresholds_verb_writes_and_prints_paths(tmp_path, capsys):
    raw = {"mode": "thresholds",
           "model": {"mu_bar": 20.0, "alpha": 0.8, "gamma_c": 0.1,
                     "shot_duration": 1.0}}
    path = write_config(tmp_path, raw)
    out = tmp_path / "art"
    assert main(["thresholds", "--config", path, "--out", str(out)]) == EXIT_OK
    printed = capsys.readouterr().out.strip().splitlines()
    assert printed == [str(out / "thresholds.json"),
                       str(out / "thresholds.csv"),
                       str(out / "manifest.json")]
    for line in printed:
        assert os.path.exists(line)


def test_verb_mode_mismatch_is_config_error(tmp_path, capsys):
    path = write_config(tmp_path, curve_raw())
    assert main(["simulate", "--config", path, "--out", str(tmp_path / "o")]) \
        == EXIT_CONFIG
    record = json.loads(capsys.readouterr().err)
    assert "expects one of simulate" in record["error"]["detail"][0]
    assert not (tmp_path / "o").exists()


def test_invalid_config_blocks_run(tmp_path, capsys):
    raw = curve_raw()
    raw["grid"]["mu_bar_T"] = []
    path = write_config(tmp_path, raw)
    assert main(["curve", "--config", path, "--out", str(tmp_path / "o")]) == \
        EXIT_CONFIG
    assert not (tmp_path / "o").exists()
    capsys.readouterr()


def test_curve_verb_runs_with_seed_and_jobs(tmp_path, capsys):
    path = write_config(tmp_path, curve_raw())
    out = tmp_path / "curves"
    code = main(["curve", "--config", path, "--out", str(out),
                 "--seed", "11", "--jobs", "2"])
    assert code == EXIT_OK
    capsys.readouterr()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 11
    assert set(manifest["outputs"]) == {"curves.csv", "curves.json"}


def test_numeric_failure_exit_code(tmp_path, capsys, monkeypatch):
    def explode(*args, **kwargs):
        raise FloatingPointError("quadrature blew up")

    monkeypatch.setattr(experiments, "asymptotic_hit", explode)
    path = write_config(tmp_path, curve_raw())
    code = main(["curve", "--config", path, "--out", str(tmp_path / "o")])
    assert code == EXIT_NUMERIC
    record = json.loads(capsys.readouterr().err)
    assert record["error"]["type"] == "FloatingPointError"


def test_reproduce_fig3_smoke(tmp_path, capsys):
    out = tmp_path / "fig3"
    assert main(["reproduce", "fig3", "--out", str(out)]) == EXIT_OK
    printed = capsys.readouterr().out.strip().splitlines()
    assert str(out / "fig3_thresholds.csv") in printed
    assert (out / "manifest.json").exists()
