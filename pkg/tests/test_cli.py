import csv
import json
import subprocess
import sys

import pytest

from vascutherm.cli import main
from vascutherm.config import bundled_config_text


def coarse(name, n=40, **subs):
    text = bundled_config_text(name).replace("nx = 100", f"nx = {n}").replace("ny = 100", f"ny = {n}")
    for old, new in subs.items():
        text = text.replace(old, new)
    return text


@pytest.fixture
def cfg(tmp_path):
    def make(text, name="run.cfg"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return make


def run(tmp_path, *argv):
    return main([*argv, "--output-dir", str(tmp_path / "out"), "--quiet"])


def load(tmp_path, name):
    return json.loads((tmp_path / "out" / name).read_text())


def test_solve_warm_inlet(tmp_path, capsys):
    assert run(tmp_path, "solve", "warm_inlet") == 0
    m = load(tmp_path, "metrics.json")
    assert m["theta_outlet"] < m["theta_inlet"] == 315.0
    assert m["verification"]["minimum-principle"]["status"] == "pass"
    assert m["verification"]["special-case-bounds"]["status"] == "not-applicable"
    for name in ("field.csv", "field.vtk"):
        assert (tmp_path / "out" / name).stat().st_size > 0
    err = capsys.readouterr().err
    assert "Peclet number 167" in err


def test_solve_cold_inlet_coefficient_of_performance_above_one(tmp_path):
    assert run(tmp_path, "solve", "cold_inlet") == 0
    m = load(tmp_path, "metrics.json")
    assert m["coefficient_of_performance"] > 1.0
    assert m["regime"] == "cooling"


def test_zero_flow_outlet_is_hss(tmp_path, cfg):
    path = cfg(coarse("reference", 20, **{"mass_flow_rate = 11.564e-3 kg/min": "mass_flow_rate = 0 kg/s"}))
    assert run(tmp_path, "solve", path) == 0
    m = load(tmp_path, "metrics.json")
    assert m["theta_outlet"] == pytest.approx(m["theta_hss"], abs=1e-8)


def test_outputs_are_byte_identical(tmp_path, cfg):
    path = cfg(coarse("warm_inlet", 30))
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["solve", path, "--output-dir", str(a), "--quiet"]) == 0
    assert main(["solve", path, "--output-dir", str(b), "--quiet"]) == 0
    for name in ("field.csv", "field.vtk", "metrics.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_parse_error_exit_code(tmp_path, cfg, capsys):
    path = cfg("[geometry]\nlength = 1 K\n")
    assert run(tmp_path, "solve", path) == 2
    doc = json.loads(capsys.readouterr().err)
    assert doc["error"] == "parse" and doc["line"] == 2
    assert load(tmp_path, "error.json") == doc


def test_missing_file_is_parse_error(tmp_path):
    assert run(tmp_path, "solve", str(tmp_path / "nope.cfg")) == 2


def test_validation_error_exit_code(tmp_path, cfg):
    path = cfg(coarse("reference", 10, **{"emissivity = 0.95": "emissivity = 1.2"}))
    assert run(tmp_path, "solve", path) == 3
    doc = load(tmp_path, "error.json")
    assert doc["issues"][0]["code"] == "emissivity-out-of-range"


def test_solver_error_exit_code(tmp_path, cfg):
    text = coarse("reference", 10, **{"convection_coefficient = 13 W/m^2/K": "convection_coefficient = 0",
                                   "radiation = true": "radiation = false"})
    text = text[:text.index("[vasculature]")] + text[text.index("[source]"):]
    assert run(tmp_path, "solve", cfg(text)) == 4
    assert load(tmp_path, "error.json")["error"] == "singular-system"


def test_verify_single(tmp_path, cfg):
    assert run(tmp_path, "verify", cfg(coarse("warm_inlet", 40))) == 0
    doc = load(tmp_path, "verification.json")
    assert doc["reports"]["minimum-principle"]["status"] == "pass"
    assert doc["reports"]["special-case-bounds"]["status"] == "not-applicable"
    assert doc["reports"]["radiative-uniqueness"]["status"] == "pass"


def test_verify_failure_exit_code(tmp_path, cfg):
    # coarse serpentine at high Peclet undershoots the inlet temperature
    assert run(tmp_path, "verify", cfg(coarse("cold_inlet", 20))) == 5
    doc = load(tmp_path, "verification.json")
    # the undershoot below the inlet temperature breaks both lower bounds
    assert doc["failed"] == ["minimum-principle", "special-case-bounds"]
    assert doc["reports"]["maximum-principle"]["status"] == "not-applicable"


def test_verify_ordered_and_inverted_pairs(tmp_path, cfg):
    low = cfg(coarse("reference", 20, **{"value = 500": "value = 400"}), "low.cfg")
    high = cfg(coarse("reference", 20), "high.cfg")
    assert run(tmp_path, "verify", low, high) == 0
    assert load(tmp_path, "verification.json")["reports"]["comparison-principle"]["status"] == "pass"
    assert run(tmp_path, "verify", high, low) == 0
    assert load(tmp_path, "verification.json")["reports"]["comparison-principle"]["status"] == "not-applicable"


def test_verify_mismatched_meshes(tmp_path, cfg):
    a = cfg(coarse("reference", 10), "a.cfg")
    b = cfg(coarse("reference", 20), "b.cfg")
    assert run(tmp_path, "verify", a, b) == 3
    assert load(tmp_path, "error.json")["error"] == "invalid-argument"


def read_sweep(tmp_path):
    with (tmp_path / "out" / "sweep.csv").open() as fh:
        return list(csv.DictReader(fh))


def test_sweep_mass_flow(tmp_path, cfg):
    path = cfg(coarse("reference", 20))
    assert run(tmp_path, "sweep", path, "--param", "mass_flow_rate", "--values", "0,1e-5,1e-4,1e-3") == 0
    rows = read_sweep(tmp_path)
    assert [r["status"] for r in rows] == ["ok"] * 4
    assert float(rows[0]["theta_mean"]) == pytest.approx(float(rows[0]["theta_hss"]), abs=1e-8)


def test_sweep_inlet_across_hss_switches_regime(tmp_path, cfg):
    path = cfg(coarse("reference", 20))
    assert run(tmp_path, "sweep", path, "--param", "inlet_temperature", "--values", "290,310,330,350") == 0
    rows = read_sweep(tmp_path)
    assert [r["regime"] for r in rows] == ["cooling", "cooling", "heating", "heating"]
    assert rows[0]["cooling_efficiency"] and not rows[0]["heating_efficiency"]
    assert rows[-1]["heating_efficiency"] and not rows[-1]["cooling_efficiency"]


def test_sweep_marks_failures_and_continues(tmp_path, cfg):
    path = cfg(coarse("reference", 10))
    assert run(tmp_path, "sweep", path, "--param", "inlet_temperature", "--values=-5,300") == 0
    rows = read_sweep(tmp_path)
    assert rows[0]["status"] == "failed" and rows[0]["error"] == "validation"
    assert rows[1]["status"] == "ok"


def test_sweep_unknown_parameter(tmp_path):
    assert run(tmp_path, "sweep", "reference", "--param", "viscosity", "--values", "1") == 2


def test_hss_command(tmp_path, capsys):
    assert main(["hss", "reference", "--output-dir", str(tmp_path)]) == 0
    assert "theta_hss = 321.04" in capsys.readouterr().out
    assert json.loads((tmp_path / "hss.json").read_text())["theta_hss"] == pytest.approx(321.04, abs=0.01)


def test_console_script_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "vascutherm.cli", "hss", "reference", "--output-dir", str(tmp_path)],
                         capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert out.stdout.startswith("theta_hss")
