"""Smoke tests for the Python bindings."""

import numpy as np
import pytest

import lowrank


def test_rank_truncation_and_split():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((8, 3)) @ rng.standard_normal((3, 6))
    u, s, v = lowrank.rank_r_truncate(x, 3)
    np.testing.assert_allclose(u @ np.diag(s) @ v.T, x, atol=1e-10)
    a, b = lowrank.balanced_split(u, s, v)
    np.testing.assert_allclose(a.T @ a, b.T @ b, atol=1e-10)
    assert lowrank.balance_penalty(a, b) < 1e-20


def test_procrustes_recovers_rotation():
    rng = np.random.default_rng(1)
    u, v = rng.standard_normal((7, 2)), rng.standard_normal((5, 2))
    q, _ = np.linalg.qr(rng.standard_normal((2, 2)))
    rot, dist = lowrank.procrustes_align(u @ q, v @ q, u, v)
    np.testing.assert_allclose(rot, q, atol=1e-10)
    assert dist < 1e-10


def test_completion_recovery():
    truth = lowrank.gen_ground_truth(40, 30, 2, seed=3)
    obs = lowrank.gen_completion(truth, 0.6, seed=4)
    u0, v0 = lowrank.initialize(obs, rank=2)
    out = lowrank.run_gd(u0, v0, obs, max_iters=300, truth=truth)
    x = out["u"] @ out["v"].T
    err = np.linalg.norm(x - truth.x_star) ** 2 / np.linalg.norm(truth.x_star) ** 2
    assert err < 1e-6
    assert out["trace"][0]["iter"] == 0
    assert "distance" in out["trace"][-1]


def test_gradient_matches_finite_differences():
    truth = lowrank.gen_ground_truth(5, 4, 1, seed=2)
    obs = lowrank.gen_onebit(truth, 0.9, link="logistic", seed=3)
    x = np.random.default_rng(5).standard_normal((5, 4))
    g = lowrank.gradient(x, obs)
    h = 1e-6
    e = np.zeros_like(x)
    e[1, 2] = h
    fd = (lowrank.loss(x + e, obs) - lowrank.loss(x - e, obs)) / (2 * h)
    assert abs(fd - g[1, 2]) < 1e-6


def test_experiment_config_and_errors():
    cfg = lowrank.ExperimentConfig({"model": "completion", "d1": "12", "d2": "10", "rank": "2",
                                    "p": "0.7", "trials": "2", "max-iters": "50"})
    rows = lowrank.run_experiment(cfg)
    assert [r["seed"] for r in rows] == [1, 2]
    with pytest.raises(ValueError):
        lowrank.ExperimentConfig({"model": "regression"})
    with pytest.raises(ValueError):
        lowrank.project_row_norm(np.ones((2, 2)), -1.0)
    bounds = lowrank.link_bounds("logistic", 1.0)
    assert bounds["l_alpha"] == pytest.approx(0.25)
