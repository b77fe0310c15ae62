import json

import pytest

from staircases.cli import (ConfigError, RunConfig, main, parse_direction, parse_range,
                            read_config)


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def read(path):
    return path.read_bytes()


def test_build_periodic_ten(tmp_path):
    assert run(tmp_path, "build", "--surface", "periodic:10", "--kind", "square",
               "--levels=-4:4") == 0
    data = json.loads((tmp_path / "surface.json").read_text())
    assert data["config"]["surface"] == "periodic:10"
    assert (tmp_path / "surface.svg").read_text().startswith("<svg")
    assert len(data["cells"]) == 9


def test_recur_with_zero_n(tmp_path):
    assert run(tmp_path, "recur", "--N", "0", "--samples", "10", "--direction", "2,1") == 0
    data = json.loads((tmp_path / "recur.json").read_text())
    assert data["fractionReturned"] in (0, "0")
    assert data["cornerProximity"] is None


def test_cocycle_holonomy_field(tmp_path):
    assert run(tmp_path, "cocycle", "--surface", "periodic:10", "--direction", "1,1",
               "--iterations", "100", "--starts", "10") == 0
    data = json.loads((tmp_path / "cocycle.json").read_text())
    assert data["holonomy"] == "0" and data["holonomyZero"] is True
    assert (tmp_path / "excursions.csv").read_text().count("\n") == 11


def test_trace_writes_events(tmp_path):
    assert run(tmp_path, "trace", "--direction", "2,1", "--start", "0,1/3") == 0
    rows = (tmp_path / "trace.csv").read_text().splitlines()
    assert len(rows) > 2


def test_trace_budget_exit(tmp_path):
    assert run(tmp_path, "trace", "--direction", "1,1", "--levels=-200:200",
               "--budget", "5") == 3
    assert (tmp_path / "trace.csv").exists()


def test_cylinders_table(tmp_path):
    assert run(tmp_path, "cylinders", "--direction", "1,0;1,1") == 0
    rows = (tmp_path / "cylinders.csv").read_text().splitlines()
    assert rows[0].startswith("direction,")
    assert len(rows) == 1 + 1 + 2


def test_periodic_scan_with_qmax(tmp_path):
    assert run(tmp_path, "periodic-scan", "--qmax", "1", "--span", "2") == 0
    data = json.loads((tmp_path / "scan.json").read_text())
    verdicts = {r["direction"]: r["verdict"] for r in data["results"]}
    assert len(verdicts) == 8
    assert "Inconclusive" in verdicts.values() and "PurelyPeriodicOnWindow" in verdicts.values()


def test_compare_no_match_exit(tmp_path):
    assert run(tmp_path, "compare", "--surface", "periodic:110", "--approximant", "periodic:10",
               "--match-n", "4", "--search", "20") == 3


def test_compare_match(tmp_path):
    assert run(tmp_path, "compare", "--surface", "eventually:10|111|10", "--approximant",
               "periodic:10", "--match-n", "3", "--search", "50", "--direction", "1,2",
               "--samples", "10") == 0
    data = json.loads((tmp_path / "compare.json").read_text())
    assert data["violations"] == 0


@pytest.mark.parametrize("args", [["build", "--surface", "nonsense:1"],
                                  ["build", "--levels", "5"],
                                  ["trace", "--direction", "a,b"],
                                  ["recur", "--N", "many"],
                                  ["cocycle", "--surface", "bernoulli:p=1/2,seed=1"]])
def test_config_errors_exit_two(tmp_path, args, capsys):
    assert run(tmp_path, *args) == 2
    assert "config error" in capsys.readouterr().err


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# recurrence\nN = 5\nsamples = 8\ndirection = 1,2\nseed = 3\n")
    out = tmp_path / "o"
    assert main(["recur", "--config", str(cfg), "--samples", "6", "--out", str(out)]) == 0
    echo = json.loads((out / "recur.json").read_text())["config"]
    assert echo["N"] == 5 and echo["samples"] == 6 and echo["direction"] == "1,2"


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = red\n")
    with pytest.raises(ConfigError):
        read_config(str(cfg))
    assert main(["build", "--config", str(cfg), "--out", str(tmp_path)]) == 2


@pytest.mark.parametrize("args,files", [
    (["recur", "--N", "20", "--samples", "20", "--sampler", "random", "--seed", "9",
      "--direction", "1,2"], ["recur.json", "recur.csv"]),
    (["cocycle", "--surface", "periodic:110", "--direction", "2,3", "--iterations", "200",
      "--starts", "7", "--seed", "4"], ["cocycle.json", "excursions.csv"]),
    (["build", "--surface", "periodic:110"], ["surface.json", "surface.svg"]),
    (["cylinders", "--surface", "periodic:1100", "--qmax", "2"], ["cylinders.csv", "cylinders.json"]),
])
def test_reruns_are_byte_identical(tmp_path, args, files):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main([*args, "--out", str(a)]) == main([*args, "--out", str(b)]) == 0
    for f in files:
        assert read(a / f) == read(b / f)


def test_worker_count_does_not_change_output(tmp_path):
    args = ["cylinders", "--surface", "periodic:110", "--qmax", "2"]
    main([*args, "--out", str(tmp_path / "a")])
    main([*args, "--workers", "2", "--out", str(tmp_path / "b")])
    assert read(tmp_path / "a" / "cylinders.csv") == read(tmp_path / "b" / "cylinders.csv")


def test_parsers():
    assert parse_range("-3:4") == range(-3, 5)
    assert parse_direction("2,1").exact and not parse_direction("1.0,0.5").exact
    assert RunConfig().echo()["surface"] == "periodic:10"
