import json

import numpy as np
import pytest

from pwdlab import cli
from pwdlab.errors import ConfigError
from pwdlab.harness.config import (
    bundled_scenario,
    bundled_scenario_names,
    load_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
)
from pwdlab.harness.runner import (
    REPORT_COLUMNS,
    report_csv_text,
    run_experiment,
    run_trial,
    success_fraction,
    worker_count,
)
from pwdlab.harness.verify import check_lab_identity, verify_suite


def _tiny_scenario_doc(tmp_path=None, **overrides):
    doc = {
        "name": "tiny-forward",
        "pipeline": "forward",
        "n": 4,
        "k": 2,
        "family": "bernoulli-product",
        "lam": 0.01,
        "concept": {"kind": "monotone-conjunction", "variables": [1, 2]},
        "context": {"kind": "uniform"},
        "p0": {"biases": 0.2},
        "p1": {"biases": 0.8},
        "epsilon": 0.2,
        "delta": 0.2,
        "gamma": 0.3,
        "trials": 2,
        "seed": 77,
        "params": {
            "m_p": 100, "m_cn": 100, "m_sel": 400, "xi": 0.5,
            "epsilon_cn": 0.2, "side_floor": 0.25, "n_cap": 4000,
            "draw_budget": 2_000_000,
        },
    }
    doc.update(overrides)
    return doc


def test_bundled_scenarios_parse_and_roundtrip():
    names = bundled_scenario_names()
    assert {
        "forward-product-easy",
        "forward-product-degenerate",
        "reverse-gaussian-easy",
        "reverse-gaussian-unhealthy",
    } <= set(names)
    for name in names:
        spec = bundled_scenario(name)
        doc = scenario_to_dict(spec)
        again = scenario_from_dict(doc)
        assert again == spec
        assert scenario_to_dict(again) == doc


def test_scenario_file_roundtrip(tmp_path):
    spec = scenario_from_dict(_tiny_scenario_doc())
    path = tmp_path / "tiny.json"
    save_scenario(spec, path)
    assert load_scenario(path) == spec


def test_config_bias_broadcast():
    spec = scenario_from_dict(_tiny_scenario_doc())
    assert np.all(spec.p0.biases == 0.2)
    assert spec.p0.biases.shape == (2,)


def test_config_validation_names_fields():
    doc = _tiny_scenario_doc()
    doc["p0"] = {"biases": [0.2, 1.5]}
    with pytest.raises(ConfigError) as exc:
        scenario_from_dict(doc)
    assert exc.value.field == "p0"

    doc = _tiny_scenario_doc()
    doc["concept"] = {"kind": "monotone-conjunction", "variables": [1, 9]}
    with pytest.raises(ConfigError) as exc:
        scenario_from_dict(doc)
    assert "concept" in exc.value.field

    doc = _tiny_scenario_doc()
    del doc["epsilon"]
    with pytest.raises(ConfigError) as exc:
        scenario_from_dict(doc)
    assert exc.value.field == "epsilon"

    doc = _tiny_scenario_doc()
    doc["params"] = {"bogus_knob": 3}
    with pytest.raises(ConfigError) as exc:
        scenario_from_dict(doc)
    assert exc.value.field == "params.bogus_knob"


def test_config_unknown_pipeline():
    doc = _tiny_scenario_doc(pipeline="sideways")
    with pytest.raises(ConfigError):
        scenario_from_dict(doc)


def test_run_trial_deterministic_and_csv_stable():
    spec = scenario_from_dict(_tiny_scenario_doc(trials=1))
    rows1 = run_experiment(spec)
    rows2 = run_experiment(spec)
    assert rows1 == rows2
    assert report_csv_text(rows1) == report_csv_text(rows2)


def test_csv_header_and_schema_token():
    spec = scenario_from_dict(_tiny_scenario_doc(trials=1))
    text = report_csv_text(run_experiment(spec))
    lines = text.strip().split("\n")
    assert lines[0] == "# schema: pwdlab.report/1"
    assert lines[1] == ",".join(REPORT_COLUMNS)
    assert len(lines) == 3
    # runtime_ms is zero unless timing was requested
    assert lines[2].split(",")[-1] == "0"


def test_success_fraction():
    spec = scenario_from_dict(_tiny_scenario_doc(trials=2))
    rows = run_experiment(spec)
    frac = success_fraction(rows, 1e9)
    assert frac == 1.0


def test_worker_count_env(monkeypatch):
    monkeypatch.delenv("PWDLAB_WORKERS", raising=False)
    assert worker_count() == 1
    monkeypatch.setenv("PWDLAB_WORKERS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("PWDLAB_WORKERS", "zap")
    with pytest.raises(ValueError):
        worker_count()


def test_verify_single_suite_runs():
    results = verify_suite("lab-identity")
    assert len(results) == 1 and results[0].passed


def test_verify_all_within_time_budget():
    import time

    t0 = time.perf_counter()
    results = verify_suite("all")
    elapsed = time.perf_counter() - t0
    assert [r.name for r in results] == list(
        (
            "lab-identity", "noise-bounds", "admit", "approxdist",
            "event-classes", "logsum", "lecam", "robustness", "ml-select",
            "decomposition",
        )
    )
    assert all(r.passed for r in results)
    assert elapsed < 600.0


def test_verify_unknown_suite():
    with pytest.raises(ValueError):
        verify_suite("no-such-suite")


# -- CLI ---------------------------------------------------------------------------


def test_cli_run_writes_csv_and_accepts(tmp_path):
    cfg = tmp_path / "tiny.json"
    cfg.write_text(json.dumps(_tiny_scenario_doc(trials=1)))
    out = tmp_path / "report.csv"
    code = cli.main(["run", "--config", str(cfg), "--out", str(out), "--assert"])
    assert code == 0
    text = out.read_text()
    assert text.startswith("# schema: pwdlab.report/1\n")


def test_cli_seed_and_trials_overrides(tmp_path):
    cfg = tmp_path / "tiny.json"
    cfg.write_text(json.dumps(_tiny_scenario_doc(trials=1)))
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    assert cli.main(["run", "--config", str(cfg), "--out", str(out1), "--seed", "99"]) == 0
    assert cli.main(["run", "--config", str(cfg), "--out", str(out2), "--seed", "99"]) == 0
    assert out1.read_text() == out2.read_text()


def test_cli_config_error_exit_code(tmp_path):
    cfg = tmp_path / "bad.json"
    doc = _tiny_scenario_doc()
    doc["p0"] = {"biases": [0.2, 2.0]}
    cfg.write_text(json.dumps(doc))
    assert cli.main(["run", "--config", str(cfg)]) == 2


def test_cli_events_csv(tmp_path):
    cfg = tmp_path / "tiny.json"
    cfg.write_text(json.dumps(_tiny_scenario_doc()))
    out = tmp_path / "events.csv"
    assert cli.main(["events", "--config", str(cfg), "--out", str(out)]) == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "# schema: pwdlab.events/1"
    assert lines[1] == "event_id,kind,j,t,sep_exact,sep_bound"
    assert len(lines) == 2 + 4  # k*b = 4 events


def test_cli_verify_subcommand(tmp_path):
    out = tmp_path / "verify.json"
    code = cli.main(["verify", "lab-identity", "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == "pwdlab.verify/1"
    assert doc["all_passed"] is True


def test_cli_usage_error_exit_2():
    with pytest.raises(SystemExit) as exc:
        cli.main(["run"])  # missing --config
    assert exc.value.code == 2


def test_workers_parallel_rows_match_serial(tmp_path, monkeypatch):
    doc = _tiny_scenario_doc(trials=2, pipeline="direct")
    spec = scenario_from_dict(doc)
    serial = run_experiment(spec, workers=1)
    monkeypatch.setenv("PWDLAB_BACKEND", "numpy")
    parallel = run_experiment(spec, workers=2)
    assert serial == parallel
