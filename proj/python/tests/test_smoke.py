import json

import numpy as np
import pytest

import bosedyn


def test_harmonic_levels():
    vals, funcs, warn = bosedyn.eigenpairs(bosedyn.Grid(1, 128, 10.0), bosedyn.Trap(2.0), 5)
    np.testing.assert_allclose(vals, [1, 3, 5, 7, 9], atol=1e-8)
    assert funcs.shape == (128, 5)
    assert not warn


def test_thermal_formulas():
    trap = bosedyn.Trap(2.0)
    assert bosedyn.alpha_exponent(2.0) == pytest.approx(3.0)
    ct = bosedyn.critical_temperature(trap, 1000.0)
    g = bosedyn.condensate_fraction(0.5 * ct["t_c"], trap)
    assert g == pytest.approx(0.875)
    sc = bosedyn.semiclassical_condensate_fraction(trap, 1000.0, 0.5 * ct["T_c"])
    assert sc == pytest.approx(g, rel=0.05)


def test_heat_kernel_bound():
    r = bosedyn.heat_kernel_check(bosedyn.Grid(3, 8, 4.0), bosedyn.Trap(2.0), 1.0)
    assert r["l1_mass"] <= r["bound"]
    assert r["min_kernel"] >= -r["truncation_estimate"]


def test_fock_identities():
    assert bosedyn.fock_dim(1, 3, "total") == 10
    w = bosedyn.verify_weyl_shift(np.array([0.3 + 0j]), 16)
    assert w.passed and w.max_deviation <= 1e-8
    b = bosedyn.verify_bogoliubov_pdm(np.array([[0.25 + 0j]]))
    assert b.passed and b.max_deviation <= 1e-9
    k = bosedyn.verify_wick(np.array([[0.25 + 0j]]), np.array([0.3 + 0j]))
    assert k.passed
    c = bosedyn.commutator_identity(seed=4, cutoff=9)
    assert c["passed"] and c["max_deviation"] <= 1e-10 and c["hermiticity"] <= 1e-10


def test_truncation_refusal():
    with pytest.raises(bosedyn.ConfigError):
        bosedyn.verify_bogoliubov_pdm(np.array([[0.25 + 0j]]), cap="total")


def test_run_thermal_build(tmp_path):
    cfg = {
        "mode": "thermal_build",
        "grid": {"dim": 1, "n": 64, "half_length": 10.0},
        "thermal": {"N_total": 100, "lambda_over_tc": 0.5},
        "integrator": {"M_cap": 0},
    }
    r = bosedyn.run(cfg, tmp_path)
    assert r["exit_code"] == 0
    assert r["summary"]["particle_total"] == pytest.approx(100.0, rel=1e-6)
    assert r["summary"]["schema_version"] == bosedyn.schema_version
    assert r["manifest"]["status"] == "ok"
    on_disk = json.loads((tmp_path / "summary.json").read_text())
    assert on_disk == r["summary"]


def test_verify_fock_deterministic(tmp_path):
    cfg = {"mode": "fock_verify", "seed": 5, "fock": {"generator_seeds": 1}}
    a = bosedyn.verify_fock(cfg, tmp_path / "a")
    b = bosedyn.verify_fock(cfg, tmp_path / "b")
    assert a["exit_code"] == 0
    assert (tmp_path / "a" / "summary.json").read_bytes() == (tmp_path / "b" / "summary.json").read_bytes()


def test_invalid_config():
    with pytest.raises(bosedyn.ConfigError):
        bosedyn.validate_config({"mode": "thermal_build", "trap": {"s": -1}})
    with pytest.raises(bosedyn.ConfigError):
        bosedyn.validate_config({"mode": "thermal_build", "extra": 1})
    with pytest.raises(ValueError):
        bosedyn.validate_config("{ not json")
