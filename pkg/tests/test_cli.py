import csv
import io
import json

import numpy as np
import pytest
import yaml

from nvreflector.cli.main import EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, preset_names, run
from nvreflector.cli.output import config_hash
from nvreflector.photometry import EmitterModel, expected_histogram

TINY_FDTD = {
    "seed": 1,
    "device": {"kind": "paraboloid", "focal_length_nm": 100, "height_um": 0.8},
    "source": {"orientation": [1, 0, 0]},
    "wavelengths_nm": [637],
    "resolution": 10,
    "padding_nm": 300,
    "monitor_gap_nm": 150,
}


def invoke(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def write_yaml(path, data):
    path.write_text(yaml.safe_dump(data))
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def manifest(out):
    return json.loads((out / "manifest.json").read_text())


# ---------------------------------------------------------------- common behaviour

def test_geo_runs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        code, _, err = invoke("simulate-geo", "--rays", 1000, "--seed", 7, "--out", out)
        assert code == EXIT_OK, err
    for name in ("efficiency.csv", "angular.csv", "summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    ma, mb = manifest(a), manifest(b)
    assert ma["config_hash"] == mb["config_hash"]
    assert ma["config_hash"] == config_hash(ma["config"])
    assert set(ma["outputs"]) == {p.name for p in a.iterdir()}


def test_geo_efficiency_table(tmp_path):
    code, stdout, _ = invoke("simulate-geo", "--rays", 2000, "--seed", 3, "--out", tmp_path)
    assert code == EXIT_OK
    assert str(tmp_path / "manifest.json") in stdout
    header, rows = read_csv(tmp_path / "efficiency.csv")
    assert header == ["na", "eta", "stderr"]
    assert rows[:, 0].tolist() == [0.5, 1.3]
    assert rows[1, 1] >= rows[0, 1]
    header, angular = read_csv(tmp_path / "angular.csv")
    assert header[0] == "theta_deg"
    assert np.all(np.diff(angular[:, 2]) >= 0)


def test_different_seed_changes_hash(tmp_path):
    invoke("simulate-geo", "--rays", 1000, "--seed", 7, "--out", tmp_path / "a")
    invoke("simulate-geo", "--rays", 1000, "--seed", 8, "--out", tmp_path / "b")
    assert manifest(tmp_path / "a")["config_hash"] != manifest(tmp_path / "b")["config_hash"]


def test_seed_is_mandatory(tmp_path):
    code, _, err = invoke("simulate-geo", "--rays", 1000, "--out", tmp_path / "o")
    assert code == EXIT_VALIDATION
    assert "seed" in err
    assert not (tmp_path / "o").exists()


def test_unknown_key_names_the_key(tmp_path):
    cfg = write_yaml(tmp_path / "c.yaml", {"seed": 1, "device": {"focal_lenght_nm": 100}})
    code, _, err = invoke("simulate-geo", "--config", cfg, "--out", tmp_path / "o")
    assert code == EXIT_VALIDATION
    assert "device.focal_lenght_nm" in err


def test_aperture_beyond_oil_index_rejected(tmp_path):
    cfg = write_yaml(tmp_path / "c.yaml", {"seed": 1, "numerical_apertures": [1.6]})
    code, _, err = invoke("simulate-geo", "--config", cfg)
    assert code == EXIT_VALIDATION
    assert "numerical_apertures" in err


def test_config_for_other_command_rejected(tmp_path):
    cfg = write_yaml(tmp_path / "c.yaml", {"seed": 1, "command": "fabsim"})
    code, _, err = invoke("simulate-geo", "--config", cfg)
    assert code == EXIT_VALIDATION


def test_flags_override_config(tmp_path):
    cfg = write_yaml(tmp_path / "c.yaml", {"seed": 1, "rays": 5000, "output_dir": str(tmp_path / "x")})
    code, _, _ = invoke("simulate-geo", "--config", cfg, "--rays", 1000, "--seed", 2, "--out", tmp_path / "y")
    assert code == EXIT_OK
    m = manifest(tmp_path / "y")
    assert m["config"]["rays"] == 1000 and m["config"]["seed"] == 2
    assert not (tmp_path / "x").exists()


def test_presets_listed_and_loadable():
    names = preset_names()
    assert {"fig1b", "fig1f", "fig1g", "fig1h", "fig2", "fig3d", "fig3e"} <= set(names)


def test_unknown_preset(tmp_path):
    code, _, err = invoke("fabsim", "--preset", "nope", "--seed", 0)
    assert code == EXIT_VALIDATION
    assert "fig2" in err


# ---------------------------------------------------------------- fdtd

def test_empty_wavelength_list_rejected(tmp_path):
    cfg = write_yaml(tmp_path / "c.yaml", dict(TINY_FDTD, wavelengths_nm=[]))
    code, _, err = invoke("simulate-fdtd", "--config", cfg, "--out", tmp_path / "o")
    assert code == EXIT_VALIDATION
    assert "wavelengths_nm" in err


def test_memory_budget_aborts_before_compute(tmp_path):
    cfg = write_yaml(tmp_path / "c.yaml", dict(TINY_FDTD, memory_budget_gb=1e-6))
    code, _, err = invoke("simulate-fdtd", "--config", cfg, "--out", tmp_path / "o")
    assert code == EXIT_RUNTIME
    assert "memory estimate" in err and "MemoryError" in err
    assert not (tmp_path / "o").exists() or not any((tmp_path / "o").iterdir())


def test_vertical_sweep_has_five_rows(tmp_path):
    cfg = write_yaml(tmp_path / "c.yaml", TINY_FDTD)
    code, _, err = invoke("simulate-fdtd", "--config", cfg, "--out", tmp_path / "o",
                          "--sweep", "vertical", "0:200:50")
    assert code == EXIT_OK, err
    header, rows = read_csv(tmp_path / "o" / "sweep.csv")
    assert header == ["offset_nm", "eta"]
    assert rows[:, 0].tolist() == [0, 50, 100, 150, 200]
    assert np.all((rows[:, 1] > 0) & (rows[:, 1] < 1))


def test_malformed_sweep_range(tmp_path):
    cfg = write_yaml(tmp_path / "c.yaml", TINY_FDTD)
    code, _, err = invoke("simulate-fdtd", "--config", cfg, "--sweep", "vertical", "0:200")
    assert code == EXIT_VALIDATION
    assert "sweep" in err


# ---------------------------------------------------------------- fabsim

def test_fabsim_default_preset(tmp_path):
    code, _, err = invoke("fabsim", "--preset", "fig2", "--seed", 0, "--out", tmp_path)
    assert code == EXIT_OK, err
    fit = json.loads((tmp_path / "fit.json").read_text())
    assert fit["final_depth_nm"] == pytest.approx(5000.0, abs=1e-3)
    assert "rmse_nm" in fit["fit"]
    header, final = read_csv(tmp_path / "profile_iv_diamond.csv")
    assert header == ["r_nm", "z_nm"]
    assert set(manifest(tmp_path)["outputs"]) == {p.name for p in tmp_path.iterdir()}


def test_selectivity_one_copies_mask_shape(tmp_path):
    code, _, err = invoke("fabsim", "--preset", "selectivity1", "--seed", 0, "--out", tmp_path)
    assert code == EXIT_OK, err
    _, mask = read_csv(tmp_path / "profile_iii_hard_mask.csv")
    _, final = read_csv(tmp_path / "profile_iv_diamond.csv")
    np.testing.assert_array_equal(mask[:, 0], final[:, 0])
    shape = final[:, 1] - mask[:, 1]
    np.testing.assert_allclose(shape, shape[0], atol=1e-6)


def test_external_profile_fit(tmp_path):
    r = np.arange(0.0, 1501.0, 5.0)
    z = -r**2 / (4 * 250.0) + 12.0
    scan = tmp_path / "afm.csv"
    scan.write_text("r_nm,z_nm\n" + "".join(f"{a:.6f},{b:.9f}\n" for a, b in zip(r, z)))
    cfg = write_yaml(tmp_path / "c.yaml", {"seed": 0, "profile_csv": str(scan)})
    code, _, err = invoke("fabsim", "--config", cfg, "--out", tmp_path / "o")
    assert code == EXIT_OK, err
    fit = json.loads((tmp_path / "o" / "fit.json").read_text())["fit"]
    assert fit["focal_length_nm"] == pytest.approx(250.0, rel=1e-6)
    assert fit["rmse_nm"] < 1e-6
    assert fit["opening"] == "down"


def test_missing_input_file_leaves_nothing(tmp_path):
    cfg = write_yaml(tmp_path / "c.yaml", {"seed": 0, "profile_csv": str(tmp_path / "absent.csv")})
    code, _, err = invoke("fabsim", "--config", cfg, "--out", tmp_path / "o")
    assert code == EXIT_VALIDATION
    assert "profile_csv" in err
    assert not (tmp_path / "o").exists()


def test_runtime_failure_leaves_no_outputs(tmp_path):
    cfg = write_yaml(tmp_path / "c.yaml", {"seed": 0, "stack": {"resist_thickness_nm": 1e-300}})
    code, _, err = invoke("fabsim", "--config", cfg, "--out", tmp_path / "o")
    assert code == EXIT_RUNTIME
    assert "UnboundedFocalLengthError" in err
    assert not (tmp_path / "o").exists()


# ---------------------------------------------------------------- photometry

def test_fit_saturation_reports_both_paths(tmp_path):
    code, _, err = invoke("fit-saturation", "--preset", "fig3d", "--seed", 0, "--out", tmp_path)
    assert code == EXIT_OK, err
    report = json.loads((tmp_path / "fit.json").read_text())
    lin, g2 = report["linear_background"], report["g2_background"]
    assert lin["F_sat_cps"] > 0 and g2["F_sat_cps"] > 0
    assert report["linear_background_exceeds_g2_background"] == (lin["F_sat_cps"] >= g2["F_sat_cps"])
    assert report["linear_background_exceeds_g2_background"]
    header, _ = read_csv(tmp_path / "model_curve.csv")
    assert header[0] == "power_mW"


def test_fit_saturation_from_csv(tmp_path):
    p = np.geomspace(0.02, 3.0, 10)
    f = 1.5e6 * p / (p + 0.4) + 1e5 * p
    data = tmp_path / "sat.csv"
    data.write_text("P_mW,F_cps\n" + "".join(f"{a:.12g},{b:.12g}\n" for a, b in zip(p, f)))
    cfg = write_yaml(tmp_path / "c.yaml", {"seed": 0, "data_csv": str(data), "g2_zero": 0.1,
                                           "g2_power_mw": 0.4, "repetition_rate_hz": 4.88e6})
    code, _, err = invoke("fit-saturation", "--config", cfg, "--out", tmp_path / "o")
    assert code == EXIT_OK, err
    report = json.loads((tmp_path / "o" / "fit.json").read_text())
    assert report["linear_background"]["F_sat_cps"] == pytest.approx(1.5e6, rel=1e-6)
    assert report["linear_background"]["P_sat_mW"] == pytest.approx(0.4, rel=1e-6)


def test_fit_saturation_needs_g2_for_csv(tmp_path):
    data = tmp_path / "sat.csv"
    data.write_text("1,2\n2,3\n3,4\n4,5\n")
    cfg = write_yaml(tmp_path / "c.yaml", {"seed": 0, "data_csv": str(data), "g2_power_mw": 1.0})
    code, _, err = invoke("fit-saturation", "--config", cfg, "--out", tmp_path / "o")
    assert code == EXIT_VALIDATION
    assert "g2_zero" in err


def test_hbt_then_analyze(tmp_path):
    cfg = write_yaml(tmp_path / "c.yaml", {"emitter": {"purity": 0.9015, "emission_probability": 0.12},
                                           "duration_s": 1.0})
    code, _, err = invoke("simulate-hbt", "--config", cfg, "--seed", 0, "--out", tmp_path / "h")
    assert code == EXIT_OK, err
    report = json.loads((tmp_path / "h" / "report.json").read_text())
    g2 = report["g2"]
    assert abs(g2["g2_zero"] - 0.1873) < 3 * g2["g2_error"]

    hist_cfg = write_yaml(tmp_path / "a.yaml", {"seed": 0, "repetition_rate_hz": 4.88e6,
                                                "histogram_csv": str(tmp_path / "h" / "histogram.csv")})
    code, _, err = invoke("analyze-g2", "--config", hist_cfg, "--out", tmp_path / "a")
    assert code == EXIT_OK, err
    again = json.loads((tmp_path / "a" / "g2.json").read_text())
    assert again["g2_zero"] == pytest.approx(g2["g2_zero"], rel=1e-6)


def test_lifetime_command(tmp_path):
    hist = expected_histogram(EmitterModel(0.3, 5e4, 12.67e-9, 4.88e6), 10.0)
    path = tmp_path / "hist.csv"
    path.write_text("delay_ns,counts\n" + "".join(
        f"{d * 1e9:.12g},{c:.12g}\n" for d, c in zip(hist.delays, hist.counts)))
    cfg = write_yaml(tmp_path / "c.yaml", {"seed": 0, "repetition_rate_hz": 4.88e6,
                                           "histogram_csv": str(path)})
    code, _, err = invoke("lifetime", "--config", cfg, "--out", tmp_path / "o")
    assert code == EXIT_OK, err
    tau = json.loads((tmp_path / "o" / "lifetime.json").read_text())["lifetime_s"]
    assert tau == pytest.approx(12.67e-9, rel=1e-5)
