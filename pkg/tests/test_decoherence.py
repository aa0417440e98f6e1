import numpy as np
import pytest

from gravqm.decoherence import (NoiseSpec, Trajectory, TwoBranchState,
                                ensemble_offdiagonal, evolve_master,
                                fit_decoherence_rate, sample_ensemble,
                                sample_trajectory)

EQUAL = np.array([1.0, 1.0]) / np.sqrt(2.0)


def equal_superposition_state(t=0.0):
    return TwoBranchState(np.full((2, 2), 0.5, dtype=complex), t)


# ---------------------------------------------------------------------------
# master equation

def test_master_damps_coherence_to_closed_form():
    out = evolve_master(equal_superposition_state(), tau_d=1.0, t_final=1.0)
    assert out.rho[0, 1].real == pytest.approx(np.exp(-1.0) / 2.0, rel=1e-12)
    assert out.t == 1.0


def test_master_zero_time_is_identity():
    s = equal_superposition_state()
    out = evolve_master(s, tau_d=2.0, t_final=0.0)
    np.testing.assert_array_equal(out.rho, s.rho)


def test_master_preserves_diagonal_trace_hermiticity():
    rho = np.array([[0.3, 0.2 + 0.1j], [0.2 - 0.1j, 0.7]])
    out = evolve_master(TwoBranchState(rho), tau_d=0.5, t_final=4.0)
    assert out.rho[0, 0] == 0.3 and out.rho[1, 1] == 0.7
    assert np.trace(out.rho) == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(out.rho, out.rho.conj().T, atol=1e-15)


def test_master_rejects_backwards_time():
    with pytest.raises(ValueError):
        evolve_master(equal_superposition_state(t=2.0), tau_d=1.0, t_final=1.0)


def test_state_validation():
    with pytest.raises(ValueError):
        TwoBranchState(np.array([[0.5, 0.6], [0.1, 0.5]]))  # not hermitian
    with pytest.raises(ValueError):
        TwoBranchState(np.array([[0.6, 0.0], [0.0, 0.6]]))  # trace != 1
    with pytest.raises(ValueError):
        TwoBranchState(np.array([[1.4, 0.0], [0.0, -0.4]]))  # bad populations


def test_noise_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec(tau_d=1.0, dt=0.02)  # coarser than tau_d/100
    with pytest.raises(ValueError):
        NoiseSpec(tau_d=-1.0, dt=1e-3)
    NoiseSpec(tau_d=1.0, dt=0.01)


# ---------------------------------------------------------------------------
# trajectories

def test_trajectory_preserves_moduli_and_norm():
    spec = NoiseSpec(tau_d=1.0, dt=0.005, seed=1)
    tr = sample_trajectory(spec, EQUAL, t_final=1.0)
    mods = np.abs(tr.states) ** 2
    np.testing.assert_allclose(mods, 0.5, atol=1e-12)
    norms = np.sum(np.abs(tr.states) ** 2, axis=1)
    np.testing.assert_allclose(norms, 1.0, atol=1e-12)


def test_trajectory_bitwise_reproducible():
    spec = NoiseSpec(tau_d=2.0, dt=0.01, seed=9)
    a = sample_trajectory(spec, EQUAL, 1.0, traj_index=3)
    b = sample_trajectory(spec, EQUAL, 1.0, traj_index=3)
    np.testing.assert_array_equal(a.states, b.states)


def test_trajectory_order_independent_streams():
    spec = NoiseSpec(tau_d=1.0, dt=0.01, seed=4)
    ensemble = sample_ensemble(spec, EQUAL, 0.5, 5)
    alone = sample_trajectory(spec, EQUAL, 0.5, traj_index=3)
    np.testing.assert_array_equal(ensemble[3].states, alone.states)


def test_trajectory_rejects_unnormalized_or_coarse():
    spec = NoiseSpec(tau_d=1.0, dt=0.01)
    with pytest.raises(ValueError):
        sample_trajectory(spec, np.array([1.0, 1.0]), 1.0)
    with pytest.raises(ValueError):
        sample_trajectory(spec, EQUAL, t_final=0.0135)  # not a step multiple


def test_phase_moments_match_noise_model():
    # E[theta] = 0 within 3 se; Var[theta] = 2 t / tau_d within 5 %
    spec = NoiseSpec(tau_d=1.0, dt=0.002, seed=21)
    t_final = 0.2
    ensemble = sample_ensemble(spec, EQUAL, t_final, 10_000)
    theta = np.array([tr.phases[-1] for tr in ensemble])
    expected_var = 2.0 * t_final / spec.tau_d
    se_mean = theta.std(ddof=1) / np.sqrt(len(theta))
    assert abs(theta.mean()) < 3.0 * se_mean
    assert theta.var(ddof=1) == pytest.approx(expected_var, rel=0.05)


# ---------------------------------------------------------------------------
# ensemble statistics

def test_duplicated_trajectory_mean_and_zero_stderr():
    spec = NoiseSpec(tau_d=1.0, dt=0.01, seed=2)
    tr = sample_trajectory(spec, EQUAL, 1.0)
    times, mean, stderr = ensemble_offdiagonal([tr] * 10)
    np.testing.assert_allclose(mean, tr.states[:, 0] * np.conj(tr.states[:, 1]),
                               rtol=1e-15, atol=0)
    np.testing.assert_allclose(stderr, 0.0, atol=1e-15)


def test_mismatched_grids_rejected():
    spec = NoiseSpec(tau_d=1.0, dt=0.01, seed=2)
    a = sample_trajectory(spec, EQUAL, 1.0)
    b = sample_trajectory(spec, EQUAL, 0.5)
    with pytest.raises(ValueError):
        ensemble_offdiagonal([a, b])
    with pytest.raises(ValueError):
        ensemble_offdiagonal([a])


def test_ensemble_mean_matches_master_equation():
    # mean coherence at t = tau_d equals exp(-1)/2 within 3 MC standard errors
    spec = NoiseSpec(tau_d=1.0, dt=0.01, seed=17)
    ensemble = sample_ensemble(spec, EQUAL, 1.0, 4000)
    times, mean, stderr = ensemble_offdiagonal(ensemble)
    closed = evolve_master(equal_superposition_state(), 1.0, 1.0).rho[0, 1]
    assert abs(mean[-1] - closed) < 3.0 * stderr[-1]


def test_fitted_rate_recovers_inverse_tau():
    spec = NoiseSpec(tau_d=2.0, dt=0.02, seed=30)
    ensemble = sample_ensemble(spec, EQUAL, 4.0, 3000)
    times, mean, _ = ensemble_offdiagonal(ensemble)
    rate = fit_decoherence_rate(times, mean)
    assert rate == pytest.approx(1.0 / spec.tau_d, rel=0.10)


def test_populations_constant_across_ensemble():
    spec = NoiseSpec(tau_d=1.0, dt=0.01, seed=8)
    psi0 = np.array([np.sqrt(0.3), np.sqrt(0.7) * 1j])
    for tr in sample_ensemble(spec, psi0, 1.0, 50):
        pops = np.abs(tr.states) ** 2
        assert np.max(np.abs(pops[:, 0] - 0.3)) < 1e-12
        assert np.max(np.abs(pops[:, 1] - 0.7)) < 1e-12
