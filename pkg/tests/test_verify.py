import json
import subprocess
import sys
from pathlib import Path

import pytest

from sipduality.cli import EXIT_CAPACITY, EXIT_FAIL, EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, main, run
from sipduality.scenario import (
    DEFAULT_THRESHOLDS,
    CheckRecord,
    Report,
    Scenario,
    ScenarioValidationError,
    default_scenario,
    load_scenarios,
)

SMALL = {
    "schema_version": 1,
    "name": "small",
    "space": {"alpha": [1.0, 1.0], "p": 0.3},
    "kernel": {"type": "constant", "value": 1.0},
    "n_max": 14,
    "convergence": [6, 10, 14],
    "exact_n_max": 6,
    "intertwine_n_max": 4,
    "times": [0.5],
    "mc_samples": 4000,
    "gillespie_replicas": 500,
    "random_trials": 3,
    "seed": 7,
    # truncation-sensitive checks are loose at this n_max
    "thresholds": {"theorem": 0.1, "transform": 0.1},
}


def write(tmp_path, payload, name="scenario.json"):
    path = tmp_path / name
    path.write_text(payload if isinstance(payload, str) else json.dumps(payload))
    return path


@pytest.fixture(scope="module")
def small_report():
    return run(Scenario.from_dict(SMALL))


def test_small_scenario_passes(small_report):
    failed = [r.name for r in small_report.records if not r.passed]
    assert failed == []
    assert {r.suite for r in small_report.records} == set(small_report.suites)


def test_records_are_sorted_and_unique(small_report):
    keys = [(r.suite, r.name) for r in small_report.records]
    assert keys == sorted(keys) and len(set(keys)) == len(keys)
    for r in small_report.records:
        assert r.anchor and "§" not in r.anchor
        assert r.passed == CheckRecord.judge(r.statistic, r.threshold, r.comparison)


def test_json_round_trip(small_report):
    text = small_report.to_json()
    again = Report.from_json(text)
    assert again == small_report
    assert again.to_json() == text


def test_same_seed_gives_identical_report(small_report):
    again = run(Scenario.from_dict(SMALL))
    assert again.to_json(runtime=False) == small_report.to_json(runtime=False)
    other = run(Scenario.from_dict({**SMALL, "seed": 8}))
    assert other.to_json(runtime=False) != small_report.to_json(runtime=False)


def test_judge_semantics():
    assert CheckRecord.judge(1e-13, 1e-12, "le")
    assert not CheckRecord.judge(float("nan"), 1e-12, "le")
    assert CheckRecord.judge(0.5, 1.0, "lt") and not CheckRecord.judge(1.0, 1.0, "lt")
    assert CheckRecord.judge(3e-3, 1e-6, "ge")
    with pytest.raises(ValueError):
        CheckRecord.judge(1.0, 1.0, "eq")


def test_cli_writes_json_and_tables(tmp_path, capsys):
    path = write(tmp_path, SMALL)
    out = tmp_path / "out"
    assert main(["run", str(path), "--out", str(out)]) == EXIT_OK
    report = Report.from_json((out / "report.json").read_text())
    assert report.passed and report.seed == 7
    rows = (out / "convergence.csv").read_text().strip().splitlines()
    assert len(rows) - 1 == len(SMALL["convergence"])
    assert rows[0].startswith("n_max,coverage")
    trajectory = (out / "trajectory.csv").read_text().splitlines()
    assert trajectory[0] == "replica,time,from_site,to_site"
    lines = capsys.readouterr().out.splitlines()
    assert sum(line.startswith("PASS ") for line in lines) == len(report.records)


def test_cli_csv_format_and_suite_subset(tmp_path):
    path = write(tmp_path, SMALL)
    out = tmp_path / "csv"
    assert main(["run", str(path), "--out", str(out), "--format", "csv", "--suites", "algebra,meixner"]) == EXIT_OK
    rows = (out / "report.csv").read_text().strip().splitlines()
    header = rows[0].split(",")
    assert header[:3] == ["suite", "name", "anchor"]
    assert {r.split(",")[0] for r in rows[1:]} == {"algebra", "meixner"}
    assert not (out / "convergence.csv").exists()


def test_empty_suite_list_is_an_empty_success(tmp_path):
    path = write(tmp_path, {**SMALL, "suites": []})
    out = tmp_path / "empty"
    assert main(["run", str(path), "--out", str(out)]) == EXIT_OK
    report = Report.from_json((out / "report.json").read_text())
    assert report.records == () and report.passed
    assert main(["run", str(write(tmp_path, SMALL, "s2.json")), "--out", str(out), "--suites", ""]) == EXIT_OK


def test_seed_override(tmp_path):
    path = write(tmp_path, SMALL)
    out = tmp_path / "seeded"
    assert main(["run", str(path), "--out", str(out), "--suites", "algebra", "--seed", "99"]) == EXIT_OK
    assert json.loads((out / "report.json").read_text())["seed"] == 99


def test_env_var_sets_output_directory(tmp_path, monkeypatch):
    path = write(tmp_path, SMALL)
    monkeypatch.setenv("SIPDUALITY_OUT", str(tmp_path / "from_env"))
    assert main(["run", str(path), "--suites", "algebra"]) == EXIT_OK
    assert (tmp_path / "from_env" / "report.json").exists()
    # the flag still wins
    assert main(["run", str(path), "--suites", "algebra", "--out", str(tmp_path / "flag")]) == EXIT_OK
    assert (tmp_path / "flag" / "report.json").exists()


def test_multiple_scenarios_go_to_subdirectories(tmp_path):
    second = {k: v for k, v in SMALL.items() if k != "schema_version"}
    payload = {"schema_version": 1, "scenarios": [{**second, "name": "a"}, {**second, "name": "b", "seed": 3}]}
    path = write(tmp_path, payload)
    out = tmp_path / "multi"
    assert main(["run", str(path), "--out", str(out), "--suites", "algebra"]) == EXIT_OK
    assert json.loads((out / "a" / "report.json").read_text())["seed"] == 7
    assert json.loads((out / "b" / "report.json").read_text())["seed"] == 3
    dup = write(tmp_path, {"scenarios": [second, second]}, "dup.json")
    assert main(["run", str(dup), "--out", str(out)]) == EXIT_VALIDATION


def test_failing_threshold_gives_failure_exit(tmp_path, capsys):
    path = write(tmp_path, {**SMALL, "thresholds": {"theorem": 1e-8, "transform": 1e-7}})
    assert main(["run", str(path), "--out", str(tmp_path / "fail"), "--suites", "unitary"]) == EXIT_FAIL
    report = Report.from_json((tmp_path / "fail" / "report.json").read_text())
    assert not report.passed
    assert any(line.startswith("FAIL unitary/theorem_") for line in capsys.readouterr().out.splitlines())


@pytest.mark.parametrize(
    "change",
    [
        {"space": {"alpha": [1.0, 1.0], "p": 1.2}},
        {"space": {"alpha": [1.0, -1.0], "p": 0.3}},
        {"suites": ["algebra", "plotting"]},
        {"kernel": {"type": "matrix", "value": [[0, 1], [2, 0]]}},
        {"kernel": {"type": "banana"}},
        {"thresholds": {"theorem": -1}},
        {"thresholds": {"unknown": 1}},
        {"n_max": 1},
        {"times": [-1.0]},
        {"convergence": [10, 5]},
        {"seed": -3},
        {"schema_version": 2},
    ],
)
def test_out_of_range_parameters_are_validation_errors(tmp_path, change):
    path = write(tmp_path, {**SMALL, **change})
    assert main(["run", str(path), "--out", str(tmp_path / "x")]) == EXIT_VALIDATION


def test_unknown_suite_on_command_line(tmp_path):
    path = write(tmp_path, SMALL)
    assert main(["run", str(path), "--out", str(tmp_path / "x"), "--suites", "nope"]) == EXIT_VALIDATION


@pytest.mark.parametrize("text", ["{not json", "", "[1, 2"])
def test_malformed_file_is_a_parse_error(tmp_path, text):
    assert main(["run", str(write(tmp_path, text)), "--out", str(tmp_path / "x")]) == EXIT_PARSE


def test_missing_file_is_a_parse_error(tmp_path):
    assert main(["run", str(tmp_path / "absent.json"), "--out", str(tmp_path / "x")]) == EXIT_PARSE


def test_oversized_basis_is_a_capacity_error(tmp_path):
    path = write(tmp_path, {**SMALL, "space": {"alpha": [1.0] * 12, "p": 0.3}, "exact_n_max": 20})
    assert main(["run", str(path), "--out", str(tmp_path / "x"), "--suites", "algebra"]) == EXIT_CAPACITY
    # the dense unitary suite has a lower ceiling
    path = write(tmp_path, {**SMALL, "space": {"alpha": [1.0] * 4, "p": 0.3}, "n_max": 30, "convergence": [10, 30]})
    assert main(["run", str(path), "--out", str(tmp_path / "x"), "--suites", "unitary"]) == EXIT_CAPACITY


def test_scenario_defaults_and_overrides():
    sc = default_scenario()
    assert sc.alpha == (1.0, 1.0) and sc.p == 0.3 and sc.n_max == 40 and sc.seed == 42
    assert sc.thresholds == DEFAULT_THRESHOLDS
    assert sc.with_overrides(suites=["meixner", "algebra"]).suites == ("algebra", "meixner")
    with pytest.raises(ScenarioValidationError):
        sc.with_overrides(suites=["nope"])
    product = Scenario.from_dict({**SMALL, "kernel": {"type": "product", "phi": [1.0, 0.5]}})
    assert product.rate_kernel.c[0, 1] == pytest.approx(1.0)


def test_bundled_default_scenario_loads():
    path = Path(__file__).resolve().parents[1] / "demos" / "scenarios" / "default.json"
    (sc,) = load_scenarios(path)
    assert sc == default_scenario(**json.loads(path.read_text()))


def test_module_entry_point(tmp_path):
    path = write(tmp_path, {**SMALL, "space": {"alpha": [1.0], "p": 2.0}})
    proc = subprocess.run([sys.executable, "-m", "sipduality", "run", str(path), "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == EXIT_VALIDATION and "error" in proc.stderr
