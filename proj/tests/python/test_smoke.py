import math
import os
import sys

import pytest

_build = os.environ.get("PLANTMF_BUILD_DIR")
if _build:
    sys.path.insert(0, os.path.join(_build, "python"))

plantmf = pytest.importorskip("plantmf")
np = pytest.importorskip("numpy")

SMALL = """
seed = 7
solver.t_end = 2
solver.snapshots = 5
meanfield.T = 2
meanfield.N = 200
meanfield.K = 200
converge.t_grid = 0,2
converge.probes = 20
"""


def test_closed_forms():
    assert plantmf.competition_potential(0.1, 0.2, 0.0) > 0.0
    assert plantmf.gompertz(0.1, 0.0, 1.0, 0.5) == pytest.approx(0.1, rel=1e-15)
    assert plantmf.gompertz(0.1, 2.0, 1.0, 0.5) == pytest.approx(0.42866750067806063, rel=1e-14)
    assert plantmf.feature_count(3, 5) == 56
    assert plantmf.polynomial_features([2.0, 3.0], 2) == [1.0, 2.0, 4.0, 3.0, 6.0, 9.0]


def test_sampling_is_reproducible():
    cfg = plantmf.Config(SMALL)
    a = plantmf.sample_mu0(cfg, 30)
    b = plantmf.sample_mu0(cfg, 30)
    assert a.shape == (30, 5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, plantmf.sample_mu0(cfg, 30, seed=8))


def test_simulate_keeps_bounds():
    cfg = plantmf.Config(SMALL)
    out = plantmf.simulate(cfg, n=20)
    sizes, samples = out["sizes"], out["samples"]
    assert sizes.shape == (5, 20)
    assert list(out["times"]) == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert np.all(sizes > cfg.params.s_m)
    assert np.all(sizes < samples[:, 3])
    assert np.all((out["competition"] >= 0.0) & (out["competition"] <= 1.0))


def test_train_flow_and_round_trip():
    cfg = plantmf.Config(SMALL)
    model = plantmf.train(cfg)
    assert model.stage_count == 2
    assert min(model.r2_test) > 0.8
    free = plantmf.gompertz(0.2, 2.0, 0.8, 1.0)
    assert model.flow(2.0, 0.2, 0.0, 0.0, 0.8, 1.0) < free
    back = plantmf.MeanFieldModel.from_json(model.to_json())
    assert back.to_json() == model.to_json()
    surf = model.surface("-1,1,-1,1,3")
    assert surf.shape == (9, 6)
    with pytest.raises(plantmf.DomainError):
        model.flow(3.0, 0.2, 0.0, 0.0, 0.8, 1.0)


def test_converge_rows():
    cfg = plantmf.Config(SMALL)
    model = plantmf.train(cfg)
    rows = plantmf.converge(cfg, model, n_list=[20, 40])
    assert [(r["N"], r["t"]) for r in rows] == [(20, 0.0), (20, 2.0), (40, 0.0), (40, 2.0)]
    assert all(r["w1_size"] >= 0.0 and math.isfinite(r["flow_gap"]) for r in rows)


def test_transport():
    a = np.array([1.0, 2.0, 3.0])
    assert plantmf.w1_sorted_1d(a, a + 0.5) == pytest.approx(0.5)
    atoms = plantmf.sample_mu0(plantmf.Config("seed = 1"), 8)
    assert plantmf.w1_matching(atoms, atoms) == 0.0
    assert plantmf.w1_matching(atoms, atoms[::-1].copy()) == 0.0


def test_errors():
    with pytest.raises(plantmf.ConfigError):
        plantmf.Config("bogus = 1")
    with pytest.raises(ValueError):
        plantmf.sample_mu0(plantmf.Config(), 3)
    with pytest.raises(plantmf.ConfigError):
        plantmf.w1_matching(np.zeros((3, 4)), np.zeros((3, 4)))
