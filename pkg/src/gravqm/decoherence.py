"""Two-branch decoherence: closed-form master-equation damping and the
stochastic pure-state unravelling that reproduces it on ensemble average.

The two branches are metastable placements with equal internal energy, so
the Hamiltonian drops out and the master equation acts as pure dephasing:
populations are untouched and the coherence decays as exp(-t/tau_d).  The
unravelling reduces the spatially correlated noise field to one scalar
white-noise process for the branch potential difference; the phase between
the branches then accumulates Gaussian increments of variance 2*dt/tau_d,
which is exactly the rate that reproduces the master equation.  Phase noise
is applied multiplicatively, so each trajectory keeps unit norm regardless
of the step size and never transfers population between branches.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class TwoBranchState:
    """2x2 density matrix over the two placements, tagged with its time."""

    rho: np.ndarray = field(repr=False)
    t: float = 0.0

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (2, 2):
            raise ValueError("rho must be 2x2")
        if not np.allclose(rho, rho.conj().T, atol=1e-12):
            raise ValueError("rho must be Hermitian")
        if abs(np.trace(rho).real - 1.0) > 1e-12:
            raise ValueError("rho must have unit trace")
        diag = rho.diagonal().real
        if np.any(diag < -1e-15) or np.any(diag > 1.0 + 1e-15):
            raise ValueError("branch populations must lie in [0, 1]")
        object.__setattr__(self, "rho", rho)


@dataclass(frozen=True)
class NoiseSpec:
    """Damping time, step size, and master seed of the scalar noise process."""

    tau_d: float
    dt: float
    seed: int = 0

    def __post_init__(self):
        if self.tau_d <= 0 or self.dt <= 0:
            raise ValueError("tau_d and dt must be > 0")
        if self.dt > self.tau_d / 100.0:
            raise ValueError(f"dt = {self.dt:g} too coarse; need dt <= tau_d/100 "
                             f"= {self.tau_d / 100.0:g}")


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray = field(repr=False)
    states: np.ndarray = field(repr=False)   # (n_times, 2) complex amplitudes
    phases: np.ndarray = field(repr=False)   # accumulated branch-relative phase


def evolve_master(state: TwoBranchState, tau_d: float, t_final: float) -> TwoBranchState:
    """Closed-form dephasing: off-diagonals damped by exp(-(t_final - t)/tau_d)."""
    if tau_d <= 0:
        raise ValueError("tau_d must be > 0")
    if t_final < state.t:
        raise ValueError("t_final must be >= the state's current time")
    damp = np.exp(-(t_final - state.t) / tau_d)
    rho = state.rho.copy()
    rho[0, 1] *= damp
    rho[1, 0] *= damp
    return TwoBranchState(rho, t_final)


def _steps_for(spec: NoiseSpec, t_final: float) -> int:
    n = int(round(t_final / spec.dt))
    if abs(n * spec.dt - t_final) > 1e-9 * max(t_final, spec.dt):
        raise ValueError("t_final must be an integer number of steps")
    return n


def sample_trajectory(spec: NoiseSpec, psi0, t_final: float,
                      traj_index: int = 0) -> Trajectory:
    """One pure-state trajectory of the scalar dephasing unravelling.

    The relative phase takes Gaussian increments of variance 2*dt/tau_d per
    step and is applied as exp(i*theta) on the second branch, so branch
    populations are exactly constant.  The RNG stream is derived from
    (master seed, trajectory index), making ensembles order-independent.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (2,):
        raise ValueError("psi0 must be a 2-vector")
    if abs(np.vdot(psi0, psi0).real - 1.0) > 1e-10:
        raise ValueError("psi0 must be normalized")
    n = _steps_for(spec, t_final)
    rng = np.random.default_rng((spec.seed, traj_index))
    sigma = np.sqrt(2.0 * spec.dt / spec.tau_d)
    theta = np.concatenate([[0.0], np.cumsum(rng.normal(0.0, sigma, size=n))])
    states = np.empty((n + 1, 2), dtype=complex)
    states[:, 0] = psi0[0]
    states[:, 1] = psi0[1] * np.exp(1j * theta)
    return Trajectory(np.arange(n + 1) * spec.dt, states, theta)


def sample_ensemble(spec: NoiseSpec, psi0, t_final: float,
                    n_traj: int) -> list[Trajectory]:
    """Independent trajectories indexed 0..n_traj-1 under one master seed."""
    return [sample_trajectory(spec, psi0, t_final, i) for i in range(n_traj)]


def ensemble_offdiagonal(trajectories) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mean coherence psi0 * conj(psi1) across trajectories, with standard error.

    Returns (times, mean, stderr).
    """
    if len(trajectories) < 2:
        raise ValueError("need at least 2 trajectories")
    times = trajectories[0].times
    for tr in trajectories[1:]:
        if tr.times.shape != times.shape or not np.array_equal(tr.times, times):
            raise ValueError("trajectories must share one time grid")
    coh = np.array([tr.states[:, 0] * np.conj(tr.states[:, 1]) for tr in trajectories])
    mean = coh.mean(axis=0)
    m = len(trajectories)
    spread = np.abs(coh - mean) ** 2
    stderr = np.sqrt(spread.sum(axis=0) / (m - 1) / m)
    return times, mean, stderr


def fit_decoherence_rate(times: np.ndarray, mean_coherence: np.ndarray) -> float:
    """Decay rate from a weighted linear fit of log|mean coherence| vs t."""
    mag = np.abs(np.asarray(mean_coherence))
    mask = mag > 0
    if mask.sum() < 2:
        raise ValueError("not enough nonzero coherence samples to fit")
    # weight by |c|: constant absolute noise means log-noise ~ 1/|c|
    slope, _ = np.polyfit(np.asarray(times)[mask], np.log(mag[mask]), 1,
                          w=mag[mask])
    return -slope
