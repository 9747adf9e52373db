import json
import math

import numpy as np
import pytest

import wkam


def test_model_values():
    m = wkam.ModelManifold.cosh(4, 2.0)
    assert m.rate == pytest.approx(1.0)
    assert m.warp(1.0) == pytest.approx(math.cosh(1.0), rel=1e-14)
    assert m.g(1.0) == pytest.approx(math.cosh(1.0) ** -2, rel=1e-14)
    rm = m.ricci_margin(0.0)
    assert rm["radial"] == pytest.approx(-3.0)
    assert rm["tangential"] == pytest.approx(-1.0)
    assert rm["margin"] == pytest.approx(0.0, abs=1e-12)


def test_bad_model_raises():
    with pytest.raises(ValueError):
        wkam.ModelManifold.cosh(2, 1.0)


def test_eigen_residual_small():
    assert wkam.eigen_residual(wkam.ModelManifold.cosh(3, 1.0), -3.0, 3.0, 0.01) < 1e-3


def test_exp_orbit():
    m = wkam.ModelManifold.exp(4, 2.0)
    out = wkam.integrate(m, 0.0, 1.0, 2.0, 1e-3)
    t, r = out["t"], out["r"]
    assert np.max(np.abs(r - np.log(3 * t + 1) / 3)) < 1e-8
    assert np.max(np.abs(out["H"])) < 1e-10


def test_solve_matches_reference():
    m = wkam.ModelManifold.exp(4, 2.0)
    res = wkam.solve(m, 0.0, 3.0, 0.02, 0.04, tol=1e-8)
    assert res["converged"]
    r, F, valid = res["r"], res["values"], res["valid"]
    core = valid & (r >= 0.5) & (r <= 2.5)
    exact = np.exp(-3 * r[core]) / 3
    assert np.max(np.abs(F[core] - exact)) < 0.02
    assert wkam.reference_weak_kam(m, 0.5) == pytest.approx(math.exp(-1.5) / 3)


def test_fundamental_matrix():
    M = wkam.fundamental_matrix_rigid(4, 2.0, 0.7)
    assert M.shape == (2, 2)
    assert np.linalg.det(M) == pytest.approx(1.0, abs=1e-12)


def test_config_round_trip():
    cfg = wkam.ExperimentConfig.from_string("[model]\nn = 5\n")
    assert cfg.get("model.n") == "5"
    assert wkam.ExperimentConfig.from_string(cfg.to_ini()) == cfg
    cfg.set("solver.tol=1e-9")
    assert len(cfg.hash()) == 8
    with pytest.raises(wkam.ConfigError):
        cfg.set("model.warp=sinh")


def test_run_flow(tmp_path):
    cfg = wkam.ExperimentConfig.from_string("[model]\nwarp = exp\n[flow]\nT = 1\n")
    assert wkam.run("flow", cfg, str(tmp_path)) == 0
    header = (tmp_path / "trajectory.csv").read_text().splitlines()[0]
    assert header == "t,r,u,H"
    assert json.loads((tmp_path / "flow.json").read_text())


def test_verify_fast_criteria():
    report = wkam.verify(criteria=[1, 2, 3])
    assert report["pass"]
    assert sorted(report["criteria"]) == ["1", "2", "3"]
    assert all(c["pass"] for c in report["criteria"].values())
