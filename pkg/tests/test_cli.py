import json
import os

import numpy as np
import pytest

from mfl_lab.cli import main

TWO_PI = 6.283185307179586


def run_cli(*args):
    return main(list(args))


def write_cfg(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def mfld_config(n=128, kernel_amp=0.0, t_final=4.0, **extra):
    cfg = {
        "seed": 0,
        "system": {
            "variant": "mfld",
            "tau": 1.0,
            "grids": [{"dim": 1, "n": n, "period": TWO_PI}],
            "potentials": [[{"wavevector": [1], "amplitude": 1.0}]],
        },
        "initialization": {"kind": "eigenfunction", "index": 1, "scale": 0.1},
        "stepper": {"t_final": t_final, "diag_stride": 128},
        "analysis": {"regime": "mfld_quadratic", "epsilon": 0.25},
    }
    if kernel_amp:
        cfg["system"]["kernel"] = [{"p": [1], "q": [-1], "amplitude": kernel_amp}]
    cfg.update(extra)
    return cfg


class TestSpectrumCommand:
    def test_uniform_gap_near_one(self, tmp_path):
        cfg = {
            "system": {"variant": "mfld", "tau": 1.0,
                       "grids": [{"dim": 1, "n": 256, "period": TWO_PI}]},
        }
        path = write_cfg(tmp_path, cfg)
        out = str(tmp_path / "out")
        assert run_cli("spectrum", "--config", path, "--out", out, "--quiet") == 0
        payload = json.loads((tmp_path / "out" / "spectrum.json").read_text())
        h = TWO_PI / 256
        assert payload["c_pi"] == pytest.approx(1.0, abs=2 * h**2)
        assert payload["schema_version"] == 1
        assert payload["tau0"] == pytest.approx(0.0, abs=1e-10)
        assert payload["m11"] == 0.0

    def test_negative_kernel_tau0(self, tmp_path):
        cfg = {
            "system": {"variant": "mfld", "tau": 1.0,
                       "grids": [{"dim": 1, "n": 128, "period": TWO_PI}],
                       "kernel": [{"p": [1], "q": [-1], "amplitude": -1.0}]},
        }
        path = write_cfg(tmp_path, cfg)
        out = str(tmp_path / "o")
        assert run_cli("spectrum", "--config", path, "--out", out, "--quiet") == 0
        payload = json.loads((tmp_path / "o" / "spectrum.json").read_text())
        assert payload["tau0"] == pytest.approx(0.5, abs=1e-8)

    def test_malformed_json_exit_2(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert run_cli("spectrum", "--config", str(path), "--out", str(tmp_path)) == 2

    def test_missing_key_exit_2(self, tmp_path):
        path = write_cfg(tmp_path, {"system": {"variant": "mfld"}})
        assert run_cli("spectrum", "--config", path, "--out", str(tmp_path)) == 2

    def test_bad_grid_exit_2(self, tmp_path):
        cfg = {"system": {"variant": "mfld", "tau": 1.0,
                          "grids": [{"dim": 1, "n": 4, "period": TWO_PI}]}}
        path = write_cfg(tmp_path, cfg)
        assert run_cli("spectrum", "--config", path, "--out", str(tmp_path)) == 2


class TestSimulateCommand:
    def test_outputs_and_header(self, tmp_path):
        path = write_cfg(tmp_path, mfld_config(kernel_amp=0.3))
        out = str(tmp_path / "run")
        assert run_cli("simulate", "--config", path, "--out", out, "--quiet") == 0
        lines = (tmp_path / "run" / "trajectory.csv").read_text().splitlines()
        assert lines[0] == "t,chi2_total,kl_total,hm1sq_total,lyapunov,energy_gap,w2sq,chi2_1"
        assert (tmp_path / "run" / "rate.json").exists()
        assert (tmp_path / "run" / "decay.svg").read_text().startswith("<svg")
        rate = json.loads((tmp_path / "run" / "rate.json").read_text())
        assert rate["converged"] is True
        assert rate["verdicts"]["meets_lower_bound"] is True

    def test_equilibrium_start_stays_flat(self, tmp_path):
        cfg = mfld_config()
        cfg["initialization"] = {"kind": "eigenfunction", "index": 1, "scale": 0.0}
        cfg["stepper"]["t_final"] = 1.0
        path = write_cfg(tmp_path, cfg)
        out = str(tmp_path / "flat")
        # without decay there is no fit window, which is fine
        assert run_cli("simulate", "--config", path, "--out", out, "--quiet") == 0
        rows = (tmp_path / "flat" / "trajectory.csv").read_text().splitlines()[1:]
        chi2 = [float(r.split(",")[1]) for r in rows]
        assert max(chi2) <= 1e-8

    def test_byte_identical_reruns(self, tmp_path):
        path = write_cfg(tmp_path, mfld_config(kernel_amp=0.3, t_final=2.0))
        out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
        assert run_cli("simulate", "--config", path, "--out", out1, "--quiet") == 0
        assert run_cli("simulate", "--config", path, "--out", out2, "--quiet") == 0
        for name in ("trajectory.csv", "rate.json", "decay.svg"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_chi2_target_initialization(self, tmp_path):
        cfg = mfld_config(t_final=1.0)
        cfg["initialization"] = {"kind": "eigenfunction", "index": 1, "chi2_target": 0.01}
        path = write_cfg(tmp_path, cfg)
        out = str(tmp_path / "t")
        assert run_cli("simulate", "--config", path, "--out", out, "--quiet") == 0
        rows = (tmp_path / "t" / "trajectory.csv").read_text().splitlines()[1:]
        first_chi2 = float(rows[0].split(",")[1])
        assert first_chi2 == pytest.approx(0.01, rel=1e-6)


class TestConstantsCommand:
    def test_reference_values(self, tmp_path):
        cfg = {"constants": [
            {"regime": "mfld_quadratic", "tau": 1.0, "tau0": 0.0, "c_pi": 1.0,
             "epsilon": 0.5, "m11": 1.0},
            {"regime": "mfld_general", "tau": 1.0, "tau0": 0.0, "c_pi": 1.0,
             "epsilon": 0.125, "m11": 1.0},
        ]}
        path = write_cfg(tmp_path, cfg)
        out = str(tmp_path / "c")
        assert run_cli("constants", "--config", path, "--out", out, "--quiet") == 0
        payload = json.loads((tmp_path / "c" / "constants.json").read_text())
        quad, gen = payload["results"]
        assert quad["radius"] == 0.0625 and quad["prefactor"] == 5.0 and quad["rate"] == 1.0
        assert gen["lyapunov_gamma"] == 1.0 / 8192.0

    def test_bad_regime_exit_2(self, tmp_path):
        path = write_cfg(tmp_path, {"constants": [{"regime": "nope", "tau": 1.0,
                                                   "epsilon": 0.5}]})
        assert run_cli("constants", "--config", path, "--out", str(tmp_path)) == 2


class TestCheckCommand:
    def test_full_suite_passes(self, tmp_path):
        path = write_cfg(tmp_path, {"seed": 0, "checks": {"n_small": 64, "n_big": 128}})
        out = str(tmp_path / "chk")
        assert run_cli("check", "--config", path, "--out", out, "--quiet") == 0
        payload = json.loads((tmp_path / "chk" / "check.json").read_text())
        assert payload["passed"] is True
        names = {c["name"] for c in payload["checks"]}
        assert "operator_duality_gap" in names
        assert "kl_below_chi2" in names


class TestSweepCommand:
    def test_two_runs(self, tmp_path):
        cfg = {
            "workers": 2,
            "sweep": [
                {"command": "constants", "name": "consts",
                 "config": {"constants": [{"regime": "mflda", "tau": 1.0, "c_x": 1.0,
                                           "c_y": 1.0, "epsilon": 0.5, "m11": 1.0}]}},
                {"command": "simulate", "name": "relax",
                 "config": mfld_config(n=64, t_final=2.0)},
            ],
        }
        path = write_cfg(tmp_path, cfg)
        out = str(tmp_path / "sweep")
        assert run_cli("sweep", "--config", path, "--out", out, "--quiet") == 0
        assert (tmp_path / "sweep" / "run_000_consts" / "constants.json").exists()
        assert (tmp_path / "sweep" / "run_001_relax" / "trajectory.csv").exists()

    def test_empty_sweep_rejected(self, tmp_path):
        path = write_cfg(tmp_path, {"sweep": []})
        assert run_cli("sweep", "--config", path, "--out", str(tmp_path)) == 2


class TestMfldaConfig:
    def test_two_timescale_pipeline(self, tmp_path):
        cfg = {
            "seed": 3,
            "system": {
                "variant": "mflda",
                "tau": 1.0,
                "gamma": 2.0,
                "grids": [{"dim": 1, "n": 64, "period": TWO_PI},
                          {"dim": 1, "n": 64, "period": TWO_PI}],
                "payoff": [{"p": [1], "q": [-1], "amplitude": 1.0}],
            },
            "initialization": {"kind": "eigenfunction", "index": 1, "scale": 0.05},
            "stepper": {"t_final": 2.0, "diag_stride": 64},
            "analysis": {"regime": "two_timescale", "epsilon": 0.25},
        }
        path = write_cfg(tmp_path, cfg)
        out = str(tmp_path / "da")
        assert run_cli("simulate", "--config", path, "--out", out, "--quiet") == 0
        lines = (tmp_path / "da" / "trajectory.csv").read_text().splitlines()
        assert lines[0].endswith("chi2_1,chi2_2")
        rate = json.loads((tmp_path / "da" / "rate.json").read_text())
        assert rate["theorem_constants"]["regime"] == "two_timescale"
        # energy gap and w2 are not defined for the two-species run
        row = lines[1].split(",")
        assert row[5] == "nan" and row[6] == "nan"


def test_kernel_negative_initialization(tmp_path):
    cfg = {
        "system": {"variant": "mfld", "tau": 1.0,
                   "grids": [{"dim": 1, "n": 64, "period": TWO_PI}],
                   "kernel": [{"p": [1], "q": [-1], "amplitude": -3.0}]},
        "initialization": {"kind": "kernel_negative", "scale": 0.02},
        "stepper": {"t_final": 1.0, "diag_stride": 32},
    }
    path = write_cfg(tmp_path, cfg)
    out = str(tmp_path / "kn")
    assert run_cli("simulate", "--config", path, "--out", out, "--quiet") == 0
    rows = (tmp_path / "kn" / "trajectory.csv").read_text().splitlines()[1:]
    chi2 = [float(r.split(",")[1]) for r in rows]
    # supercritical attraction: the perturbation grows instead of decaying
    assert chi2[-1] > chi2[0]


def test_random_initialization_seeded(tmp_path):
    cfg = mfld_config(n=64, t_final=0.5)
    cfg["initialization"] = {"kind": "random", "scale": 0.05, "n_modes": 2}
    path = write_cfg(tmp_path, cfg)
    out1, out2 = str(tmp_path / "r1"), str(tmp_path / "r2")
    assert run_cli("simulate", "--config", path, "--out", out1, "--quiet") == 0
    assert run_cli("simulate", "--config", path, "--out", out2, "--quiet") == 0
    a = (tmp_path / "r1" / "trajectory.csv").read_bytes()
    assert a == (tmp_path / "r2" / "trajectory.csv").read_bytes()
    # a different seed shifts the starting point
    assert run_cli("simulate", "--config", path, "--out", str(tmp_path / "r3"),
                   "--seed", "7", "--quiet") == 0
    assert a != (tmp_path / "r3" / "trajectory.csv").read_bytes()


def test_two_dimensional_spectrum_and_simulate(tmp_path):
    cfg = {
        "system": {"variant": "mfld", "tau": 1.0,
                   "grids": [{"dim": 2, "n": 16, "period": TWO_PI}],
                   "potentials": [[{"wavevector": [1, 0], "amplitude": 1.0},
                                   {"wavevector": [0, 1], "amplitude": 0.5}]]},
        "initialization": {"kind": "eigenfunction", "index": 1, "scale": 0.1},
        "stepper": {"t_final": 1.0, "diag_stride": 16},
    }
    path = write_cfg(tmp_path, cfg)
    out = str(tmp_path / "d2")
    assert run_cli("spectrum", "--config", path, "--out", out, "--quiet") == 0
    assert run_cli("simulate", "--config", path, "--out", out, "--quiet") == 0
    payload = json.loads((tmp_path / "d2" / "spectrum.json").read_text())
    assert 0.0 < payload["c_pi"] < 2.0
    rows = (tmp_path / "d2" / "trajectory.csv").read_text().splitlines()[1:]
    chi2 = [float(r.split(",")[1]) for r in rows]
    assert chi2[-1] < chi2[0]
