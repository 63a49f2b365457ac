import json

import pytest

from src.core import storage
from src.ui.cli import EXIT_INFEASIBLE, EXIT_IO, EXIT_OK, EXIT_USAGE, main

from factories import line_instance


@pytest.fixture
def instance_file(tmp_path):
    return storage.write_instance(tmp_path / "instance.json", line_instance(n_seg=3, n_vehicles=2, budget=1e6))


def _plan(tmp_path, instance_file, *extra):
    return main(["plan", "--instance", str(instance_file), "--restarts", "3",
                 "--out-dir", str(tmp_path), *extra])


def test_generate_prints_segment_count(tmp_path, capsys):
    assert main(["generate", "--seed", "1", "--d-max", "500", "--out-dir", str(tmp_path)]) == EXIT_OK
    instance = storage.read_instance(tmp_path / "instance.json")
    assert capsys.readouterr().out.strip() == f"n_seg={instance.n_seg}"
    manifest = json.loads((tmp_path / "manifest_generate.json").read_text())
    assert manifest["seeds"] == [1]
    assert manifest["instance_hash"] == storage.instance_hash(instance)


def test_generate_is_deterministic(tmp_path):
    for name in ("a", "b"):
        main(["generate", "--seed", "4", "--d-max", "600", "--out-dir", str(tmp_path / name)])
    assert (tmp_path / "a" / "instance.json").read_bytes() == (tmp_path / "b" / "instance.json").read_bytes()


def test_missing_flag_is_a_usage_error(tmp_path):
    assert main(["generate", "--seed", "1", "--out-dir", str(tmp_path)]) == EXIT_USAGE
    assert main(["plan", "--instance", "x.json", "--cost", "cheapest"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE


def test_plan_writes_feasible_plan(tmp_path, instance_file, capsys):
    assert _plan(tmp_path, instance_file, "--trace") == EXIT_OK
    record = json.loads((tmp_path / "plan.json").read_text())
    assert record["feasible"] is True
    assert record["cost_function"] == "combined"
    assert (tmp_path / "trace.csv").read_text().count("\n") == 4
    out = capsys.readouterr().out
    assert "battery_percent" in out and "feasible=True" in out


def test_plan_output_is_byte_identical(tmp_path, instance_file):
    _plan(tmp_path / "one", instance_file, "--repeat", "2")
    _plan(tmp_path / "two", instance_file, "--repeat", "2", "--workers", "2")
    assert (tmp_path / "one" / "plan.json").read_bytes() == (tmp_path / "two" / "plan.json").read_bytes()


def test_infeasible_plan_is_still_written(tmp_path, instance_file):
    assert _plan(tmp_path, instance_file, "--budget", "1") == EXIT_INFEASIBLE
    record = json.loads((tmp_path / "plan.json").read_text())
    assert record["feasible"] is False
    assert record["violations"]


def test_missing_instance_is_an_io_error(tmp_path):
    assert main(["plan", "--instance", str(tmp_path / "none.json"), "--out-dir", str(tmp_path)]) == EXIT_IO


def test_window_and_simulate(tmp_path, instance_file, capsys):
    _plan(tmp_path, instance_file)
    plan = str(tmp_path / "plan.json")
    common = ["--instance", str(instance_file), "--plan", plan, "--replan-restarts", "2", "--out-dir", str(tmp_path)]

    capsys.readouterr()
    assert main(["window", *common, "--dt", "30", "--html", "window.html"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "window_percent=100.00" in out
    window = json.loads((tmp_path / "window.json").read_text())
    assert window["window_percent"] == 100.0
    assert (tmp_path / "window_samples.csv").exists() and (tmp_path / "window.html").exists()

    assert main(["simulate", *common, "--fail-vehicle", "1", "--fail-time", "50%"]) == EXIT_OK
    result = json.loads((tmp_path / "replan.json").read_text())
    assert result["success"] is True
    assert sorted(result["inspected"] + result["uninspected"]) == [0, 1, 2]
    assert (tmp_path / "timeline_before.csv").exists() and (tmp_path / "timeline_after.csv").exists()

    assert main(["simulate", *common, "--fail-vehicle", "0", "--fail-time", "0%"]) == EXIT_OK
    assert main(["simulate", *common, "--fail-vehicle", "0", "--fail-time", "101%"]) == EXIT_USAGE


def test_window_output_is_byte_identical(tmp_path, instance_file):
    _plan(tmp_path, instance_file)
    args = ["window", "--instance", str(instance_file), "--plan", str(tmp_path / "plan.json"),
            "--replan-restarts", "2", "--dt", "30"]
    main([*args, "--out-dir", str(tmp_path / "one")])
    main([*args, "--out-dir", str(tmp_path / "two"), "--workers", "2"])
    assert (tmp_path / "one" / "window.json").read_bytes() == (tmp_path / "two" / "window.json").read_bytes()


def test_window_refuses_plan_of_other_instance(tmp_path, instance_file):
    _plan(tmp_path, instance_file)
    other = storage.write_instance(tmp_path / "other.json", line_instance(n_seg=3, n_vehicles=2, budget=500.0))
    code = main(["window", "--instance", str(other), "--plan", str(tmp_path / "plan.json"),
                 "--out-dir", str(tmp_path)])
    assert code == EXIT_USAGE


def test_single_vehicle_failure_is_reported(tmp_path):
    instance_file = storage.write_instance(tmp_path / "solo.json", line_instance(n_seg=2, budget=1e6))
    _plan(tmp_path, instance_file)
    code = main(["simulate", "--instance", str(instance_file), "--plan", str(tmp_path / "plan.json"),
                 "--fail-vehicle", "0", "--fail-time", "20%", "--out-dir", str(tmp_path)])
    assert code == EXIT_INFEASIBLE
    result = json.loads((tmp_path / "replan.json").read_text())
    assert result["success"] is False and result["replan"] is None


def test_oracle(tmp_path, capsys):
    instance_file = storage.write_instance(tmp_path / "tiny.json", line_instance(n_seg=2))
    assert main(["oracle", "--instance", str(instance_file), "--cost", "minmax", "--out-dir", str(tmp_path)]) == EXIT_OK
    assert "enumerated=8" in capsys.readouterr().out
    big = storage.write_instance(tmp_path / "big.json", line_instance(n_seg=9))
    assert main(["oracle", "--instance", str(big), "--out-dir", str(tmp_path)]) == EXIT_USAGE


def test_compare(tmp_path, instance_file):
    code = main(["compare", "--instance", str(instance_file), "--repeat", "1", "--restarts", "1",
                 "--replan-restarts", "1", "--dt", "60", "--costs", "minmax", "combined", "--out-dir", str(tmp_path)])
    assert code == EXIT_OK
    summary = (tmp_path / "compare_summary.csv").read_text().splitlines()
    assert summary[0].startswith("cost_function,")
    assert len(summary) == 3
