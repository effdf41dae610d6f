import json

import pytest

from recenv import __version__
from recenv.cli import main


def run_cli(tmp_path, command, cfg, *extra, name="out"):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / name
    code = main([command, "--config", str(path), "--out", str(out), *extra])
    report = json.loads((out / "report.json").read_text()) if (out / "report.json").exists() else None
    return code, report, out


def strip_volatile(text):
    data = json.loads(text)
    data.pop("timestamp")
    data["config"].pop("output")
    return data


FBF = {"kind": "fbf", "H": 0.5, "d": 2}


def test_conditions_example(tmp_path):
    code, rep, out = run_cli(tmp_path, "conditions", {"kernel": FBF, "thresholds": {"epsilon": 1.0}})
    assert code == 0
    assert rep["verdict"] == "satisfied"
    assert rep["report"]["values"]["condition_i_value"] == pytest.approx(2.28319, abs=1e-4)
    assert rep["version"] == __version__
    assert rep["config"]["kernel"] == {"kind": "fbf", "H": 0.5, "d": 2, "axes": None, "values": None}
    assert (out / "curves" / "decay.csv").read_text().startswith("t,value\n")


def test_conditions_violated_exit_code(tmp_path):
    code, rep, _ = run_cli(tmp_path, "conditions", {"kernel": FBF, "thresholds": {"epsilon": 5.0}})
    assert code == 2 and rep["verdict"] == "violated"


def test_inconclusive_exit_code(tmp_path):
    cfg = {"kernel": FBF, "geometry": {"domain": "shell", "resolution": 60},
           "decay": {"t_max": 15, "resolution": 60}}
    code, rep, _ = run_cli(tmp_path, "conditions", cfg)
    assert code == 3 and rep["verdict"] == "inconclusive"


def test_malformed_value_names_field(tmp_path, capsys):
    code, rep, _ = run_cli(tmp_path, "conditions", {"kernel": {"kind": "fbf", "H": "0.5", "d": 2}})
    assert code == 1 and rep is None
    assert "kernel.H" in capsys.readouterr().err


def test_unknown_key_rejected(tmp_path, capsys):
    code, _, _ = run_cli(tmp_path, "conditions", {"kernel": FBF, "thresholds": {"epsilom": 1.0}})
    assert code == 1
    assert "thresholds.epsilom" in capsys.readouterr().err


def test_invalid_json_reports_line(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "kernel": {"kind": "fbf",\n}')
    assert main(["conditions", "--config", str(path), "--out", str(tmp_path / "o")]) == 1
    assert "line 3" in capsys.readouterr().err


def test_missing_section_is_config_error(tmp_path, capsys):
    code, _, _ = run_cli(tmp_path, "simulate", {"kernel": FBF})
    assert code == 1
    assert "sim" in capsys.readouterr().err


def test_kernel_check(tmp_path):
    code, rep, _ = run_cli(tmp_path, "kernel-check", {"kernel": {"kind": "fbf", "H": 0.2, "d": 3}})
    assert code == 0
    assert all(c["verdict"] == "satisfied" for c in rep["report"]["comparisons"])


def test_sample_writes_field(tmp_path):
    cfg = {"kernel": FBF, "sample": {"target": "grid", "L": 2.0, "grid_nodes": 9}}
    code, rep, out = run_cli(tmp_path, "sample", cfg)
    assert code == 0
    lines = (out / "field.csv").read_text().splitlines()
    assert lines[0] == "x1,x2,value" and len(lines) == 82
    assert json.loads((out / "field.json").read_text())["seed"] == 0


def test_seed_override(tmp_path):
    cfg = {"kernel": FBF, "sample": {"target": "sphere"}, "geometry": {"sphere_resolution": 32}}
    _, _, a = run_cli(tmp_path, "sample", cfg, "--seed", "4", name="a")
    _, rep, _ = run_cli(tmp_path, "sample", cfg, "--seed", "5", name="b")
    assert rep["config"]["seeds"]["master"] == 5
    assert (a / "field.csv").read_text() != (tmp_path / "b" / "field.csv").read_text()


def test_shell_integral_closed_form(tmp_path):
    cfg = {"shell_integral": {"R": 100.0, "environment": "zero"}, "kernel": {"kind": "zero", "d": 3}}
    code, rep, out = run_cli(tmp_path, "shell-integral", cfg)
    assert code == 0 and rep["verdict"] == "completed"
    assert rep["report"]["values"]["integral"] == pytest.approx(0.99 / (4 * 3.141592653589793), abs=1e-3)
    assert (out / "curves" / "shell_integral.csv").exists()


def test_lemma11_zero_environment(tmp_path):
    cfg = {"kernel": {"kind": "zero", "d": 2}, "lemma11": {"n_max": 5, "environment": "zero"},
           "thresholds": {"c": 1.0}}
    code, rep, _ = run_cli(tmp_path, "lemma11", cfg)
    assert code == 0
    assert rep["report"]["values"]["occurrences"] == [1, 2, 3, 4, 5]


def test_ergodic_small(tmp_path):
    cfg = {"kernel": FBF, "ergodic": {"T": 4.0, "environments": 10, "trials": 500}}
    code, rep, _ = run_cli(tmp_path, "ergodic", cfg)
    assert code in (0, 3)
    assert 0.0 <= rep["report"]["values"]["mean_time_average"] <= 1.0


def test_simulate_writes_paths(tmp_path):
    cfg = {"sim": {"h": 0.01, "T": 2.0, "x0": [0.5, 0.0], "trials": 50, "environment": "zero",
                   "record_paths": 2}}
    code, rep, out = run_cli(tmp_path, "simulate", cfg)
    assert code == 0
    assert rep["report"]["values"]["tau_strictly_increasing"] == [True, True]
    assert (out / "paths" / "path_1.csv").read_text().startswith("t,x1,x2\n")


RECURRENCE = {
    "kernel": FBF,
    "sim": {"h": 0.01, "T": 5.0, "x0": [2.0, 0.0], "trials": 1500, "rho_in": 1.0, "rho_out": 5.0,
            "L": 6.0, "grid_nodes": 25},
    "seeds": {"master": 1, "count": 2},
}


def test_recurrence_mc_deterministic_across_threads(tmp_path):
    _, _, a = run_cli(tmp_path, "recurrence-mc", RECURRENCE, "--threads", "1", name="a")
    _, _, b = run_cli(tmp_path, "recurrence-mc", RECURRENCE, "--threads", "1", name="b")
    _, _, c = run_cli(tmp_path, "recurrence-mc", RECURRENCE, "--threads", "4", name="c")
    ref = strip_volatile((a / "report.json").read_text())
    for other in (b, c):
        assert strip_volatile((other / "report.json").read_text()) == ref
        assert (other / "recurrence.csv").read_bytes() == (a / "recurrence.csv").read_bytes()
    assert (a / "recurrence.csv").read_text().splitlines()[1].startswith("1,")


def test_threads_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("RECENV_THREADS", "3")
    code, _, _ = run_cli(tmp_path, "recurrence-mc", {**RECURRENCE, "seeds": {"count": 1}})
    assert code in (0, 3)


def test_command_mismatch(tmp_path):
    code, _, _ = run_cli(tmp_path, "sample", {"command": "conditions", "kernel": FBF})
    assert code == 1
