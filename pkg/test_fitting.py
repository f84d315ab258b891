#!/usr/bin/env python3
"""
Tests for peak datasets and the dispersion fitter
"""

import numpy as np
import pytest

from app.services.fitting.dataset import PeakDataset, check_determined, read_dataset, write_dataset
from app.services.fitting.fitter import (
    DEFAULT_BOUNDS,
    FIT_PARAMS,
    FitConfig,
    clip_to_bounds,
    fit_dispersion,
    initial_guess,
    objective,
    params_of,
    residuals,
    synthesize_dataset,
)
from app.services.polariton.dispersion import AngleGrid, CavityModel, branch_dispersion
from app.services.polariton.hopfield import CouplingParams, ModelKind, solve_quadratic_dispersion
from app.utils.errors import DatasetError, DispersionError, FitError, ValidationError

TRUE_P = CouplingParams(e_x=1.22, rabi=0.50)
TRUE_M = CavityModel(e0=1.00, n_eff=1.5)
GRID = AngleGrid.from_range(0, 60, 5)


def _truth() -> dict:
    return params_of(TRUE_P, TRUE_M)


def _start(d: PeakDataset, cfg: FitConfig) -> dict:
    return clip_to_bounds(initial_guess(d), cfg)


def test_dataset_invariants():
    theta = np.array([0.0, 10.0, 20.0, 30.0])
    lp = np.array([1.0, 1.01, 1.03, np.nan])
    up = np.array([1.5, np.nan, 1.55, 1.6])
    d = PeakDataset(theta, lp, up)
    assert d.weight.tolist() == [1.0, 1.0, 1.0, 1.0]
    assert d.lp_count == 3 and d.up_count == 3 and d.observation_count == 6

    with pytest.raises(DatasetError):
        PeakDataset(np.array([0.0, 0.0, 20.0, 30.0]), lp, up)
    with pytest.raises(DatasetError):
        PeakDataset(theta[:3], lp[:3], up[:3])
    with pytest.raises(DatasetError):
        PeakDataset(theta, np.array([1.0, np.nan, np.nan, np.nan]), np.array([1.5, np.nan, np.nan, np.nan]))
    with pytest.raises(DatasetError):
        PeakDataset(theta, lp, up, np.array([1.0, -1.0, 1.0, 1.0]))


def test_dataset_rows_sorted_by_theta():
    d = PeakDataset(np.array([30.0, 0.0, 20.0, 10.0]), np.array([1.3, 1.0, 1.2, 1.1]), np.full(4, np.nan))
    assert d.theta.tolist() == [0.0, 10.0, 20.0, 30.0]
    assert d.e_lp.tolist() == [1.0, 1.1, 1.2, 1.3]


def test_check_determined_names_counts():
    d = PeakDataset(np.arange(4) * 10.0, np.full(4, 1.0), np.full(4, np.nan))
    check_determined(d, 4)
    with pytest.raises(DatasetError, match="4 LP \\+ 0 UP"):
        check_determined(d, 5)


def test_dataset_csv(tmp_path):
    path = tmp_path / "peaks.csv"
    path.write_text("theta_deg,e_lp_ev,e_up_ev,weight\n0,1.0,1.5,1\n10,1.02,,\n20,,1.56,2\n30,1.05,1.6,1\n",
                    encoding="utf-8")
    d = read_dataset(path)
    assert np.isnan(d.e_up[1]) and np.isnan(d.e_lp[2])
    assert d.weight.tolist() == [1.0, 1.0, 2.0, 1.0]

    out = write_dataset(d, tmp_path / "copy.csv")
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "theta_deg,e_lp_ev,e_up_ev,weight"
    assert lines[2] == "10,1.02,,1"

    bad = tmp_path / "bad.csv"
    bad.write_text("angle,lp,up\n0,1,2\n", encoding="utf-8")
    with pytest.raises(DatasetError):
        read_dataset(bad)
    with pytest.raises(DatasetError):
        read_dataset(tmp_path / "missing.csv")


def test_residuals_examples():
    print("🧪 Testing residuals...")
    d = synthesize_dataset(TRUE_P, TRUE_M, GRID, ModelKind.FULL_HOPFIELD)
    r = residuals(TRUE_P, TRUE_M, d, ModelKind.FULL_HOPFIELD)
    assert r.size == 26
    assert np.all(np.abs(r) <= 1e-12)

    shifted = PeakDataset(d.theta, d.e_lp + 0.005, d.e_up + 0.005, d.weight)
    r = residuals(TRUE_P, TRUE_M, shifted, ModelKind.FULL_HOPFIELD)
    assert np.allclose(r, -0.005, atol=1e-12)

    partial = PeakDataset(d.theta, d.e_lp, np.where(d.theta > 30, np.nan, d.e_up), d.weight)
    assert residuals(TRUE_P, TRUE_M, partial).size == partial.observation_count == 13 + 7


def test_residuals_name_the_evanescent_row():
    # sin^2 of an angle this close to 90 deg rounds to exactly 1
    d = PeakDataset(np.array([0.0, 89.9999999]), np.array([1.0, 1.2]), np.array([1.5, 1.6]))
    grazing = CavityModel(e0=1.0, n_eff=1.0)
    with pytest.raises(DispersionError, match="row 1"):
        residuals(TRUE_P, grazing, d)
    assert residuals(TRUE_P, CavityModel(e0=1.0, n_eff=1.5), d).size == 4


def test_residual_order_lp_before_up():
    d = PeakDataset(np.arange(4) * 10.0, np.full(4, 1.0), np.full(4, 2.0))
    r = residuals(TRUE_P, TRUE_M, d)
    table = branch_dispersion(TRUE_P, TRUE_M, AngleGrid.from_values([0, 10, 20, 30]))
    assert r[0] == pytest.approx(table["lp_ev"][0] - 1.0)
    assert r[1] == pytest.approx(table["up_ev"][0] - 2.0)


def test_synthesize_dataset():
    d = synthesize_dataset(TRUE_P, TRUE_M, GRID)
    table = branch_dispersion(TRUE_P, TRUE_M, GRID)
    assert np.array_equal(d.e_lp, table["lp_ev"].to_numpy())
    assert np.array_equal(d.e_up, table["up_ev"].to_numpy())

    a = synthesize_dataset(TRUE_P, TRUE_M, GRID, noise_sigma=0.005, seed=3)
    b = synthesize_dataset(TRUE_P, TRUE_M, GRID, noise_sigma=0.005, seed=3)
    c = synthesize_dataset(TRUE_P, TRUE_M, GRID, noise_sigma=0.005, seed=4)
    assert np.array_equal(a.e_lp, b.e_lp) and np.array_equal(a.e_up, b.e_up)
    assert not (np.array_equal(a.e_lp, c.e_lp) and np.array_equal(a.e_up, c.e_up))
    with pytest.raises(ValidationError):
        synthesize_dataset(TRUE_P, TRUE_M, GRID, noise_sigma=-1.0)
    with pytest.raises(ValidationError, match="seed"):
        synthesize_dataset(TRUE_P, TRUE_M, GRID, noise_sigma=0.005, seed=-2)


def test_fit_config_invariants():
    with pytest.raises(ValidationError):
        FitConfig(free=())
    with pytest.raises(ValidationError):
        FitConfig(free=("g",))
    with pytest.raises(ValidationError):
        FitConfig(bounds={"rabi": (1.0, 0.5)})
    with pytest.raises(ValidationError):
        FitConfig(bounds={"e0": (0.1, float("inf"))})
    with pytest.raises(ValidationError, match="seed"):
        FitConfig(seed=-1)
    cfg = FitConfig(free=("n_eff", "rabi"))
    assert cfg.free == ("rabi", "n_eff")
    assert cfg.bounds["e_x"] == DEFAULT_BOUNDS["e_x"]


def test_initial_guess():
    d = synthesize_dataset(TRUE_P, TRUE_M, GRID)
    guess = initial_guess(d)
    both = d.e_up - d.e_lp
    i = int(np.argmin(both))
    assert guess["rabi"] == pytest.approx(both[i])
    assert guess["e_x"] == pytest.approx((d.e_lp[i] + d.e_up[i]) / 2)
    assert guess["e0"] == pytest.approx(d.e_lp[0])
    assert guess["n_eff"] == 1.7


def test_objective_global_minimum():
    d = synthesize_dataset(TRUE_P, TRUE_M, GRID)
    at_truth = objective(_truth(), d)
    rng = np.random.default_rng(1)
    for _ in range(100):
        point = {name: rng.uniform(*DEFAULT_BOUNDS[name]) for name in FIT_PARAMS}
        assert at_truth <= objective(point, d)
    assert objective({"e_x": 1.0, "rabi": 2.5, "e0": 1.0, "n_eff": 1.5}, d) == 1e12


def test_noiseless_round_trip():
    print("🧪 Testing noiseless fit round trip...")
    d = synthesize_dataset(TRUE_P, TRUE_M, GRID)
    cfg = FitConfig()
    result = fit_dispersion(d, _start(d, cfg), cfg)
    assert result.coupling.rabi == pytest.approx(0.50, rel=0.01)
    assert result.coupling.e_x == pytest.approx(1.22, rel=0.01)
    assert result.rms < 1e-4
    assert result.residuals.size == 26
    assert 0 <= result.best_restart <= cfg.restarts
    for name, value in result.params.items():
        lo, hi = cfg.bounds[name]
        assert lo <= value <= hi


def test_noisy_round_trip_over_seeds():
    cfg = FitConfig()
    hits = 0
    for seed in range(20):
        d = synthesize_dataset(TRUE_P, TRUE_M, GRID, noise_sigma=0.005, seed=seed)
        result = fit_dispersion(d, _start(d, cfg), cfg)
        hits += abs(result.coupling.rabi - 0.50) <= 0.05 * 0.50
    assert hits >= 18


def test_single_parameter_matches_resonance_inversion():
    """Only rabi free, quadratic model, cavity pinned at resonance"""
    p = CouplingParams(1.22, 0.50)
    m = CavityModel(e0=1.22, n_eff=1.7)
    d = synthesize_dataset(p, m, AngleGrid.from_values([0.0, 0.01, 0.02, 0.03]), ModelKind.QUADRATIC)
    cfg = FitConfig(free=("rabi",), model=ModelKind.QUADRATIC)
    init = {"e_x": 1.22, "rabi": 0.3, "e0": 1.22, "n_eff": 1.7}
    result = fit_dispersion(d, init, cfg)

    at_resonance = solve_quadratic_dispersion(1.22, p)
    inverted = (at_resonance.up ** 2 - at_resonance.lp ** 2) / (2 * 1.22)
    assert result.coupling.rabi == pytest.approx(inverted, abs=1e-6)
    assert result.cavity.e0 == 1.22 and result.coupling.e_x == 1.22


def test_fit_invariant_under_row_permutation():
    d = synthesize_dataset(TRUE_P, TRUE_M, GRID, noise_sigma=0.003, seed=2)
    order = np.random.default_rng(0).permutation(len(d))
    shuffled = PeakDataset(d.theta[order], d.e_lp[order], d.e_up[order], d.weight[order])
    cfg = FitConfig(restarts=2)
    init = _start(d, cfg)
    a = fit_dispersion(d, init, cfg)
    b = fit_dispersion(shuffled, init, cfg)
    for name in FIT_PARAMS:
        assert a.params[name] == pytest.approx(b.params[name], abs=1e-12)


def test_zero_weight_rows_do_not_matter():
    d = synthesize_dataset(TRUE_P, TRUE_M, GRID, noise_sigma=0.003, seed=5)
    extra = PeakDataset(np.append(d.theta, 62.5), np.append(d.e_lp, 0.7), np.append(d.e_up, 2.4),
                        np.append(d.weight, 0.0))
    cfg = FitConfig(restarts=2)
    init = _start(d, cfg)
    a = fit_dispersion(d, init, cfg)
    b = fit_dispersion(extra, init, cfg)
    for name in FIT_PARAMS:
        assert a.params[name] == pytest.approx(b.params[name], abs=1e-10)


def test_fit_rejects_bad_start():
    d = synthesize_dataset(TRUE_P, TRUE_M, GRID)
    with pytest.raises(ValidationError):
        fit_dispersion(d, {"e_x": 5.0, "rabi": 0.5, "e0": 1.0, "n_eff": 1.5})
    with pytest.raises(ValidationError):
        fit_dispersion(d, {"e_x": 1.2, "rabi": 0.5})


def test_all_restarts_failing_raises():
    d = synthesize_dataset(TRUE_P, TRUE_M, GRID)
    cfg = FitConfig(free=("e0",), restarts=2)
    with pytest.raises(FitError):
        fit_dispersion(d, {"e_x": 0.5, "rabi": 1.2, "e0": 1.0, "n_eff": 1.5}, cfg)


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    for name, fn in list(globals().items()):
        if name.startswith("test_") and callable(fn):
            if "tmp_path" in fn.__code__.co_varnames[:fn.__code__.co_argcount]:
                fn(Path(tempfile.mkdtemp()))
            else:
                fn()
    print("✅ Fitting tests passed")
