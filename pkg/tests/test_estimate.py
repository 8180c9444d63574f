import itertools

import numpy as np
import pytest
from sklearn.base import clone

from pomaint.estimate import (
    CovariateHMM,
    ZeroLikelihoodError,
    Posteriors,
    default_template,
    estimate_q_matrix,
    fit,
    forward_backward,
    frozen_rows,
    m_step,
    multi_start_fit,
    parameter_count,
    posteriors,
)
from pomaint.model import SystemModel
from pomaint.simulate import Trajectory, TrajectorySet, simulate_trajectories


def brute_force_loglik(model, x1, z):
    """Likelihood by enumerating every hidden path (x2 starts at 0)."""
    n = len(z)
    total = 0.0
    for path in itertools.product(range(model.L2 + 1), repeat=n):
        p = 1.0
        prev = 0
        for k in range(n):
            p *= model.P[x1[k], prev, path[k]] * model.B[path[k], z[k]]
            prev = path[k]
        total += p
    return np.log(total)


def test_forward_one_step_hand_values(small_model):
    traj = Trajectory(x1=[0, 0], z=[0])
    phi, xi, loglik = forward_backward(small_model, traj)
    # unnormalized alpha_1 = (0.64, 0.04) so the one-step likelihood is 0.68
    assert np.isclose(np.exp(loglik), 0.68, atol=1e-12)
    assert np.allclose(phi[1], [16 / 17, 1 / 17], atol=1e-12)
    assert np.allclose(phi[0], [1.0, 0.0])
    assert np.allclose(xi[0].sum(), 1.0)


def test_identity_emissions_give_point_mass_posteriors(small_model):
    model = small_model.replace(B=np.eye(2))
    data = simulate_trajectories(model, T=5, n=12, seed=3, reveal_hidden=True)
    for t, traj in enumerate(data):
        phi, _, _ = forward_backward(model, traj)
        expected = np.eye(2)[data.z[t]]
        assert np.allclose(phi[1:], expected, atol=1e-12)


def test_posteriors_normalized_for_random_inputs(rng):
    for _ in range(20):
        L1 = int(rng.integers(1, 4))
        M = int(rng.integers(1, 4))
        model = SystemModel(L1=L1, L2=1, M=M,
                            Q=rng.dirichlet(np.ones(L1 + 1), size=L1 + 1),
                            P=rng.dirichlet(np.ones(2), size=(L1 + 1, 2)),
                            B=rng.dirichlet(np.ones(M + 1), size=2))
        n = int(rng.integers(2, 9))
        x1 = np.concatenate([[0], rng.integers(0, L1 + 1, size=n)])
        z = rng.integers(0, M + 1, size=n)
        phi, xi, _ = forward_backward(model, Trajectory(x1=x1, z=z))
        assert np.allclose(phi.sum(axis=1), 1.0, atol=1e-9)
        assert np.allclose(xi.sum(axis=(1, 2)), 1.0, atol=1e-9)
        # pairwise posteriors must be row-consistent with the marginals
        assert np.allclose(xi.sum(axis=2), phi[:-1], atol=1e-9)


def test_forward_matches_brute_force(small_model, rng):
    for _ in range(40):
        n = int(rng.integers(1, 7))
        x1 = np.concatenate([[0], rng.integers(0, 3, size=n)])
        z = rng.integers(0, 2, size=n)
        _, _, loglik = forward_backward(small_model, Trajectory(x1=x1, z=z))
        expected = brute_force_loglik(small_model, x1[:-1], z)
        assert abs(loglik - expected) < 1e-10 * abs(expected)


def test_scaled_loglik_matches_unscaled_recursion(small_model, rng):
    for _ in range(10):
        n = int(rng.integers(5, 21))
        data = simulate_trajectories(small_model, T=1, n=n, seed=int(rng.integers(1e6)))
        traj = data.trajectory(0)
        alpha = small_model.P[traj.x1[0], 0, :] * small_model.B[:, traj.z[0]]
        for k in range(2, n + 1):
            Pk = small_model.P[traj.x1[k - 1]]
            alpha = (alpha @ Pk) * small_model.B[:, traj.z[k - 1]]
        _, _, loglik = forward_backward(small_model, traj)
        assert abs(loglik - np.log(alpha.sum())) < 1e-9


def test_zero_likelihood_step_names_epoch(small_model):
    model = small_model.replace(B=np.eye(2))  # signal 1 impossible from state 0
    bad = Trajectory(x1=[0, 0, 0], z=[0, 1])  # hidden chain cannot jump back
    model = model.replace(P=np.array([[[1, 0], [0, 1]]] * 3))
    with pytest.raises(ZeroLikelihoodError, match="epoch 2"):
        forward_backward(model, bad)


def test_estimate_q_counting_example():
    data = TrajectorySet(x1=np.array([[0, 0, 1, 2, 2]]),
                         z=np.zeros((1, 4), dtype=int), x2=None, seed=0)
    Q, counts, flags = estimate_q_matrix(data, n_states=3)
    assert np.allclose(Q, [[0.5, 0.5, 0], [0, 0, 1], [0, 0, 1]])
    assert counts.sum() == 4
    assert flags == ()


def test_estimate_q_flags_unvisited_rows():
    data = TrajectorySet(x1=np.zeros((3, 6), dtype=int),
                         z=np.zeros((3, 5), dtype=int), x2=None, seed=0)
    Q, _, flags = estimate_q_matrix(data, n_states=3)
    assert Q[0, 0] == 1.0
    assert np.allclose(Q[1:], np.eye(3)[1:])
    assert len(flags) == 2


def test_estimate_q_on_simulated_walkthrough(small_model):
    data = simulate_trajectories(small_model, T=200, n=50, seed=42)
    Q, _, _ = estimate_q_matrix(data, n_states=3)
    assert abs(Q[0, 0] - 0.778) < 0.02
    assert abs(Q[0, 1] - 0.222) < 0.02
    assert abs(Q[1, 1] - 0.678) < 0.02


def test_m_step_with_indicator_posteriors_reduces_to_counting(small_model):
    data = simulate_trajectories(small_model, T=30, n=20, seed=8, reveal_hidden=True)
    T, n = data.T, data.n
    d = 2
    phi = np.zeros((T, n + 1, d))
    phi[np.arange(T)[:, None], np.arange(n + 1)[None, :], data.x2] = 1.0
    xi = np.zeros((T, n, d, d))
    xi[np.arange(T)[:, None], np.arange(n)[None, :], data.x2[:, :-1], data.x2[:, 1:]] = 1.0
    post = Posteriors(phi=phi, xi=xi, logliks=np.zeros(T), loglik=0.0)
    theta, flags = m_step(post, data, small_model)
    # empirical count ratios per covariate
    for j in range(3):
        sel = data.x1[:, :-1] == j
        from0 = sel & (data.x2[:, :-1] == 0)
        if from0.sum():
            emp = (data.x2[:, 1:][from0] == 1).mean()
            assert np.isclose(theta.P[j, 0, 1], emp, atol=1e-12)
    for i in range(2):
        at = data.x2[:, 1:] == i
        emp = (data.z[at] == 1).mean()
        assert np.isclose(theta.B[i, 1], emp, atol=1e-12)


def test_m_step_keeps_frozen_absorbing_rows(small_model):
    data = simulate_trajectories(small_model, T=20, n=20, seed=4)
    post = posteriors(small_model, data)
    theta, _ = m_step(post, data, small_model)
    for j in range(3):
        assert theta.P[j, 1].tolist() == [0.0, 1.0]


def test_m_step_flags_zero_mass_rows(small_model):
    # covariate state 2 never visited -> its free row keeps previous values
    x1 = np.tile([0, 0, 0, 0], (5, 1))
    z = np.zeros((5, 3), dtype=int)
    data = TrajectorySet(x1=x1, z=z, x2=None, seed=0)
    post = posteriors(small_model, data)
    theta, flags = m_step(post, data, small_model)
    assert any("P[2] row 0" in f for f in flags)
    assert np.allclose(theta.P[2], small_model.P[2])


def test_frozen_rows_masks(small_model):
    frozen_P, frozen_B = frozen_rows(small_model)
    assert frozen_P.tolist() == [[False, True]] * 3
    assert frozen_B.tolist() == [False, False]
    _, frozen_B2 = frozen_rows(small_model, freeze_absorbing_emissions=True)
    assert frozen_B2.tolist() == [False, True]


def test_fit_trace_monotone_and_q_decoupled(small_model):
    data = simulate_trajectories(small_model, T=60, n=30, seed=12)
    result = fit(data, small_model, max_iter=20)
    assert (np.diff(result.loglik_trace) > -1e-8).all()
    Q_direct, _, _ = estimate_q_matrix(data, n_states=3)
    assert np.allclose(result.theta_hat.Q, Q_direct)


def test_fit_from_truth_is_near_stationary(small_model):
    data = simulate_trajectories(small_model, T=200, n=50, seed=42)
    result = fit(data, small_model, max_iter=3)
    trace = result.loglik_trace
    first_step = trace[1] - trace[0]
    assert 0.0 <= first_step < 0.01 * abs(trace[0])


def test_single_trajectory_degeneracy(small_model):
    # one path whose signals never suggest hidden degradation: the upward
    # transition estimate collapses toward zero
    x1 = np.zeros((1, 31), dtype=int)
    z = np.zeros((1, 30), dtype=int)
    data = TrajectorySet(x1=x1, z=z, x2=None, seed=0)
    result = fit(data, small_model, max_iter=30)
    assert result.theta_hat.P[0, 0, 1] < 0.05


def test_multi_start_single_restart_has_zero_sd(small_model):
    data = simulate_trajectories(small_model, T=40, n=25, seed=6)
    res = multi_start_fit(data, small_model, restarts=1, seed=5, max_iter=10)
    assert np.allclose(res.P_sd, 0.0)
    assert np.allclose(res.B_sd, 0.0)


def test_multi_start_q_identical_across_restarts(small_model):
    data = simulate_trajectories(small_model, T=40, n=25, seed=6)
    res = multi_start_fit(data, small_model, restarts=4, seed=5, max_iter=10)
    for f in res.fits:
        assert np.array_equal(f.theta_hat.Q, res.fits[0].theta_hat.Q)
    assert res.best.loglik_trace[-1] == res.final_logliks.max()


def test_freeze_absorbing_emissions_pins_row(small_model):
    data = simulate_trajectories(small_model, T=60, n=30, seed=9)
    res = multi_start_fit(data, small_model, restarts=3, seed=2, max_iter=10,
                          freeze_absorbing_emissions=True)
    assert np.allclose(res.B_mean[1], small_model.B[1])
    assert np.allclose(res.B_sd[1], 0.0)


def test_consistency_trend_sd_decreases_with_more_trajectories(small_model):
    sds = []
    for T in (50, 200, 800):
        entries = []
        for rep in range(10):
            data = simulate_trajectories(small_model, T=T, n=50, seed=1000 + rep)
            res = fit(data, small_model, max_iter=15)
            entries.append(res.theta_hat.P[0, 0, 0])
        sds.append(np.std(entries))
    assert sds[0] >= sds[1] >= sds[2]


def test_default_template_structure():
    tpl = default_template(2, 1, 1)
    assert tpl.P[0, 1].tolist() == [0.0, 1.0]
    assert np.allclose(tpl.P[:, 0, :], 0.5)


def test_parameter_count_reports_both_conventions():
    pc = parameter_count(2, 1, 1)
    assert pc["Q"] == 6 and pc["P"] == 6 and pc["B"] == 2
    assert pc["total"] == 14
    assert "convention" in pc["note"]


def test_covariate_hmm_sklearn_interface(small_model):
    data = simulate_trajectories(small_model, T=50, n=30, seed=21)
    est = CovariateHMM(n_hidden_states=2, n_signals=2, restarts=2, max_iter=8,
                       random_state=3, template=small_model)
    cloned = clone(est)
    assert cloned.get_params()["restarts"] == 2
    est.fit(data)
    assert est.Q_.shape == (3, 3)
    assert est.P_.shape == (3, 2, 2)
    assert est.loglik_trace_.ndim == 1
    assert np.isclose(est.score(data), est.loglik_trace_[-1], atol=1e-6)
    proba = est.predict_proba(data)
    assert proba.shape == (50, 31, 2)
    assert np.allclose(proba.sum(axis=2), 1.0, atol=1e-9)


def test_covariate_hmm_default_template_from_data(small_model):
    data = simulate_trajectories(small_model, T=30, n=20, seed=22)
    est = CovariateHMM(restarts=1, max_iter=5).fit(data)
    assert est.P_[0, 1].tolist() == [0.0, 1.0]  # absorbing failure row kept
