import json
import math

import numpy as np
import pytest

import framescope as fs


def unbalanced():
    return fs.DiscreteMeasure(np.eye(2), np.array([0.75, 0.25]))


def test_measure_roundtrip_and_validation():
    mu = unbalanced()
    assert mu.size == 2 and mu.dim == 2
    back = fs.DiscreteMeasure.from_json(mu.to_json())
    np.testing.assert_array_equal(back.points, mu.points)
    with pytest.raises(fs.FramescopeError):
        fs.DiscreteMeasure(np.eye(2), np.array([0.5, 0.6]))


def test_potentials_known_values():
    mu = unbalanced()
    assert fs.pfp(mu) == pytest.approx(0.625, abs=1e-15)
    report = fs.tightness_potential(mu)
    assert report["value"] == pytest.approx(0.125, abs=1e-15)
    assert report["operator_norm"] == pytest.approx(0.25, abs=1e-15)
    np.testing.assert_allclose(fs.frame_operator(mu), np.diag([0.75, 0.25]), atol=1e-15)
    assert fs.cp_constant(2, 4) == pytest.approx(3 / 8)
    np.testing.assert_allclose(
        fs.pframe_barycenter(fs.DiscreteMeasure(np.array([[1.0, 0.0]]), np.array([1.0])), np.array([2.0, 0.0]), 4),
        [64.0, 0.0],
    )


def test_tp_gradient_matches_finite_differences():
    mu = fs.generate("perturbed-onb", d=3, n=6, seed=4, magnitude=0.3)
    grad = fs.tp_gradient(mu)
    h = 1e-6
    x = np.array(mu.points)
    for i in range(x.shape[0]):
        for c in range(x.shape[1]):
            xp, xm = x.copy(), x.copy()
            xp[i, c] += h
            xm[i, c] -= h
            fd = (fs.tp(fs.DiscreteMeasure(xp, mu.weights)) - fs.tp(fs.DiscreteMeasure(xm, mu.weights))) / (2 * h)
            assert abs(fd - grad[i, c]) <= 1e-5 * max(1.0, abs(grad[i, c]))


def test_wasserstein_exact_and_entropic():
    rng = np.random.default_rng(0)
    a = fs.DiscreteMeasure(rng.random((5, 2)), np.full(5, 0.2))
    b = fs.DiscreteMeasure(rng.random((5, 2)), np.full(5, 0.2))
    d, plan = fs.wasserstein(a, b, 2.0)
    np.testing.assert_allclose(plan.sum(axis=1), 0.2, atol=1e-12)
    de, _ = fs.wasserstein(a, b, 2.0, reg=1e-3)
    assert d <= de <= d * math.sqrt(1.01)
    assert fs.wasserstein(a, a)[0] == 0.0


def test_flow_converges_and_is_monotone():
    mu0 = fs.generate("perturbed-onb", d=2, n=2, seed=1)
    traj = fs.run_flow(mu0, json.dumps({"dt": 0.01}))
    assert traj.termination == "Converged"
    assert all(b <= a for a, b in zip(traj.tp, traj.tp[1:]))
    assert fs.diagnostics(traj.final_state).is_tight
    assert traj.energy_holds(0, len(traj.tp) - 1)

    jko = fs.run_flow(mu0, json.dumps({"scheme": "jko", "tau": 0.05, "max_steps": 20}))
    assert all(b <= a for a, b in zip(jko.tp, jko.tp[1:]))


def test_verify_suite_passes():
    failures, results = fs.run_suite(["all"], 5, 0)
    assert failures == 0
    assert all(r["holds"] for r in results)
