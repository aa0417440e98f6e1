"""Self-gravitating single-particle dynamics and independent-branch potentials.

The wave equation evolved here is the standard linear Schrodinger equation
plus a Newtonian potential sourced by the expectation of the mass density.
With ``include_self`` enabled the branch's own density contributes (the
nonlinear self-attraction); disabled, only the other branches do (ordinary
Hartree mean field), which for a single particle means free evolution.

Dimensionless runs use hbar = m = G = 1; the stationary problem collapses to
a one-parameter family under m -> lambda m, so physical runs only rescale
the dimensionless solution (length hbar^2/(G m^3), energy G^2 m^5 / hbar^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import fft as sfft
from scipy.integrate import solve_ivp

from .constants import PhysicalConstants
from .poisson import radial_poisson, solve_poisson


class SolverError(RuntimeError):
    """Iteration budget exhausted; carries the best estimate reached."""

    def __init__(self, message: str, best: float):
        super().__init__(message)
        self.best = best


# ---------------------------------------------------------------------------
# fields

@dataclass(frozen=True)
class WaveField:
    """Complex amplitude on a uniform grid (1-D line, 3-D box, or radial profile).

    ``extent`` is the physical length per axis.  For radial profiles the
    values live on r_j = (j+1) h with h = extent / (n+1), so the DST-I
    boundary conditions u(0) = u(extent) = 0 apply.
    """

    values: np.ndarray = field(repr=False)
    extent: float
    t: float = 0.0
    radial: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim not in (1, 3):
            raise ValueError("values must be 1-D or 3-D")
        if self.radial and v.ndim != 1:
            raise ValueError("radial profiles are 1-D")
        for n in v.shape:
            if n < 2 or (n & (n - 1)) != 0:
                raise ValueError(f"grid size {n} is not a power of two")
        if self.extent <= 0:
            raise ValueError("extent must be > 0")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def spacing(self) -> float:
        if self.radial:
            return self.extent / (self.n + 1)
        return self.extent / self.n

    @property
    def r(self) -> np.ndarray:
        if not self.radial:
            raise ValueError("not a radial profile")
        return (np.arange(self.n) + 1) * self.spacing

    def axis(self, i: int = 0) -> np.ndarray:
        return (np.arange(self.values.shape[i]) + 0.5) * self.spacing


def norm(fieldv: WaveField) -> float:
    v = fieldv.values
    if fieldv.radial:
        return float(np.sqrt(4.0 * np.pi * np.sum(np.abs(v) ** 2 * fieldv.r**2)
                             * fieldv.spacing))
    return float(np.sqrt(np.sum(np.abs(v) ** 2) * fieldv.spacing ** v.ndim))


def normalize(fieldv: WaveField) -> WaveField:
    return replace(fieldv, values=fieldv.values / norm(fieldv))


def gaussian_packet(n: int, extent: float, sigma: float, center=None,
                    k0=None) -> WaveField:
    """Normalized Gaussian on a 1-D or 3-D grid (3-D when center has 3 entries)."""
    center = np.atleast_1d(np.asarray(center if center is not None
                                      else extent / 2.0, dtype=float))
    dim = len(center)
    h = extent / n
    x = (np.arange(n) + 0.5) * h
    if dim == 1:
        g = np.exp(-((x - center[0]) ** 2) / (4.0 * sigma**2)).astype(complex)
        if k0 is not None:
            g *= np.exp(1j * k0 * x)
    else:
        X = np.meshgrid(*([x] * 3), indexing="ij")
        r2 = sum((Xi - ci) ** 2 for Xi, ci in zip(X, center))
        g = np.exp(-r2 / (4.0 * sigma**2)).astype(complex)
    return normalize(WaveField(g, extent))


def rms_width(fieldv: WaveField) -> float:
    """Root-mean-square spread sqrt(<x^2> - <x>^2) along the first axis."""
    p = np.abs(fieldv.values) ** 2
    if fieldv.values.ndim == 3:
        p = p.sum(axis=(1, 2))
    p = p / p.sum()
    x = fieldv.axis(0)
    mean = float(np.sum(p * x))
    return math.sqrt(float(np.sum(p * (x - mean) ** 2)))


# ---------------------------------------------------------------------------
# parameters

@dataclass(frozen=True)
class SNParams:
    """Particle mass, constants, and the self-interaction switch.

    ``masses`` lists the branch masses in independent-branch mode and
    defaults to the single mass [m].
    """

    m: float = 1.0
    constants: PhysicalConstants = PhysicalConstants.dimensionless()
    include_self: bool = True
    masses: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.m <= 0:
            raise ValueError("mass must be > 0")
        if self.masses is not None:
            ms = tuple(float(v) for v in self.masses)
            if any(v <= 0 for v in ms):
                raise ValueError("all branch masses must be > 0")
            object.__setattr__(self, "masses", ms)

    def branch_masses(self) -> tuple[float, ...]:
        return self.masses if self.masses is not None else (self.m,)


# ---------------------------------------------------------------------------
# effective potential (independent-branch coupling)

def effective_potential(fields: list[WaveField], params: SNParams,
                        s: int) -> np.ndarray:
    """Potential energy (J) felt by branch s on its grid.

    V_s = -G m_s sum_u m_u int |psi_u|^2 / |x - x'|, the sum running over all
    branches when ``include_self`` and over u != s otherwise; evaluated by the
    free-space Poisson solve of the summed mass density.
    """
    masses = params.branch_masses()
    if len(masses) != len(fields):
        raise ValueError("one mass per branch field is required")
    if not 0 <= s < len(fields):
        raise ValueError(f"branch index {s} out of range")
    ref = fields[s]
    if ref.values.ndim != 3:
        raise ValueError("effective potentials require 3-D Cartesian fields")
    source = np.zeros(ref.values.shape)
    for u, (f, m_u) in enumerate(zip(fields, masses)):
        if u == s and not params.include_self:
            continue
        if f.values.shape != ref.values.shape or f.extent != ref.extent:
            raise ValueError("branch fields must share one grid")
        source += m_u * np.abs(f.values) ** 2
    if not source.any():
        return np.zeros(ref.values.shape)
    phi = solve_poisson(source, ref.spacing, G=params.constants.G)
    return masses[s] * phi


# ---------------------------------------------------------------------------
# split-step evolution

def _kinetic_phase(shape, spacing, dt, m, hbar):
    ks = [2.0 * np.pi * np.fft.fftfreq(n, d=spacing) for n in shape]
    k2 = ks[0] ** 2 if len(shape) == 1 else (
        ks[0][:, None, None] ** 2 + ks[1][None, :, None] ** 2
        + ks[2][None, None, :] ** 2)
    return np.exp(-1j * hbar * k2 * dt / (2.0 * m))


def _check_potential_step(v_max, dt, hbar):
    if v_max * dt / hbar > np.pi / 4.0:
        raise ValueError(
            f"potential phase per step {v_max * dt / hbar:.3g} rad exceeds "
            "pi/4; reduce dt")


def evolve_branches(fields: list[WaveField], params: SNParams, dt: float,
                    n_steps: int) -> list[WaveField]:
    """Strang split-step evolution of coupled branch fields.

    One potential rebuild per step: the half-steps of consecutive Strang
    triples are merged, with the potential recomputed from the post-kinetic
    densities, which keeps the scheme second order without sub-iteration.
    Phases are unitary, so norms are conserved to round-off.
    """
    if dt <= 0 or n_steps < 1:
        raise ValueError("dt must be > 0 and n_steps >= 1")
    hbar = params.constants.hbar
    masses = params.branch_masses()
    vals = [f.values.copy() for f in fields]

    def potentials():
        if params.constants.G == 0.0:
            return None
        if len(fields) == 1 and not params.include_self:
            return None
        cur = [replace(f, values=v) for f, v in zip(fields, vals)]
        return [effective_potential(cur, params, s) for s in range(len(fields))]

    def apply_potential(vs, factor):
        if vs is None:
            return
        for i, v in enumerate(vs):
            _check_potential_step(float(np.max(np.abs(v))), dt, hbar)
            vals[i] *= np.exp(-1j * v * dt * factor / hbar)

    if any(f.values.ndim != 3 for f in fields) and potentials() is not None:
        raise ValueError("self-gravitating evolution requires 3-D fields")

    kin = [_kinetic_phase(f.values.shape, f.spacing, dt, m_s, hbar)
           for f, m_s in zip(fields, masses)]
    apply_potential(potentials(), 0.5)
    for step in range(n_steps):
        for i in range(len(vals)):
            vals[i] = sfft.ifftn(kin[i] * sfft.fftn(vals[i]))
        apply_potential(potentials(), 1.0 if step < n_steps - 1 else 0.5)
    return [replace(f, values=v, t=f.t + n_steps * dt)
            for f, v in zip(fields, vals)]


def evolve_split_step(fieldv: WaveField, params: SNParams, dt: float,
                      n_steps: int) -> WaveField:
    """Single-field split-step evolution (see :func:`evolve_branches`)."""
    return evolve_branches([fieldv], params, dt, n_steps)[0]


def sn_energy(fieldv: WaveField, params: SNParams) -> float:
    """Conserved energy functional: kinetic plus half the pair potential."""
    hbar, m = params.constants.hbar, params.m
    v = fieldv.values
    h = fieldv.spacing
    psi_k = sfft.fftn(v)
    ks = [2.0 * np.pi * np.fft.fftfreq(n, d=h) for n in v.shape]
    k2 = ks[0] ** 2 if v.ndim == 1 else (
        ks[0][:, None, None] ** 2 + ks[1][None, :, None] ** 2
        + ks[2][None, None, :] ** 2)
    kin = (hbar**2 / (2.0 * m)
           * float(np.sum(k2 * np.abs(psi_k) ** 2)) * h**v.ndim / v.size)
    if params.constants.G == 0.0 or (not params.include_self
                                     and len(params.branch_masses()) == 1):
        return kin
    pot_arr = effective_potential([fieldv], params, 0)
    pot = float(np.sum(pot_arr * np.abs(v) ** 2)) * h**v.ndim
    return kin + 0.5 * pot


# ---------------------------------------------------------------------------
# radial machinery shared by the ground-state routes

class _RadialGrid:
    """Interior DST-I grid for u(r) = r psi(r) with u(0) = u(r_max) = 0."""

    def __init__(self, n: int = 2048, r_max: float = 20.0, k_src: float = 1.0):
        self.n = n
        self.r_max = r_max
        self.k_src = k_src
        self.h = r_max / (n + 1)
        self.r = (np.arange(n) + 1) * self.h
        self.k = np.pi * (np.arange(n) + 1) / r_max

    def unit_norm(self, u):
        return u / np.sqrt(4.0 * np.pi * self.h * np.sum(u * u))

    def potential(self, u):
        rho = self.k_src * (u / self.r) ** 2
        return radial_poisson(rho, self.r, G=1.0)

    def kinetic(self, u):
        return sfft.idst(0.5 * self.k**2 * sfft.dst(u, type=1, norm="ortho"),
                         type=1, norm="ortho")

    def energy(self, u, v):
        kin = 4.0 * np.pi * self.h * float(np.sum(u * self.kinetic(u)))
        pot = 4.0 * np.pi * self.h * float(np.sum(v * u * u))
        return kin + pot

    def residual(self, u, v, energy):
        r = self.kinetic(u) + v * u - energy * u
        return math.sqrt(4.0 * np.pi * self.h * float(np.sum(np.abs(r) ** 2)))


def stationary_residual(profile: WaveField, energy: float,
                        k_src: float = 1.0) -> float:
    """L2 norm of (H - E) psi for a radial profile, H rebuilt from the profile.

    Dimensionless units; the potential is regenerated self-consistently from
    the profile itself, so a converged ground state gives a residual at the
    discrete fixed-point level.
    """
    grid = _RadialGrid(profile.n, profile.extent, k_src)
    u = profile.values.real * grid.r
    u = grid.unit_norm(u)
    return grid.residual(u, grid.potential(u), energy)


def _imaginary_time(grid: _RadialGrid, tol: float, max_iter: int,
                    deep: bool) -> tuple[float, np.ndarray]:
    """Diffusive relaxation with per-step renormalization.

    The time step anneals downward; convergence is declared when the energy
    moves less than ``tol`` per step at the smallest step size.  ``deep``
    additionally polishes with inverse-power iterations on the discrete
    self-consistent Hamiltonian until the residual stops improving, which is
    what the gauge-invariance residual check needs.
    """
    u = grid.unit_norm(grid.r * np.exp(-grid.r))
    dtau_ladder = [0.5, 0.2, 0.05]
    e_prev = np.inf
    iters = 0
    for dtau in dtau_ladder:
        kin_half = np.exp(-0.5 * grid.k**2 * dtau / 2.0)
        while True:
            v = grid.potential(u)
            u = np.exp(-0.5 * v * dtau) * u
            u = sfft.idst(kin_half * sfft.dst(u, type=1, norm="ortho"),
                          type=1, norm="ortho")
            u = np.exp(-0.5 * v * dtau) * u
            u = grid.unit_norm(u)
            iters += 1
            e = grid.energy(u, grid.potential(u))
            done = abs(e - e_prev) < tol
            e_prev = e
            if done:
                break
            if iters >= max_iter:
                raise SolverError(
                    f"imaginary-time relaxation used {iters} iterations "
                    f"without the energy settling to {tol:g} per step "
                    f"(best estimate {e:.8e})", e)
    if deep:
        # polish to the discrete self-consistent fixed point: the split-step
        # state carries an O(dtau^2) bias, so finish with a preconditioned
        # eigensolve of H[u] per self-consistency sweep
        from scipy.sparse.linalg import LinearOperator, lobpcg
        precond = LinearOperator(
            (grid.n, grid.n),
            matvec=lambda x: sfft.idst(
                sfft.dst(x, type=1, norm="ortho") / (0.5 * grid.k**2 + 1.0),
                type=1, norm="ortho"))
        for _ in range(60):
            v = grid.potential(u)
            op = LinearOperator((grid.n, grid.n),
                                matvec=lambda x: grid.kinetic(x) + v * x)
            w, vec = lobpcg(op, u[:, None].copy(), M=precond, largest=False,
                            tol=1e-13, maxiter=400)
            u_new = vec[:, 0] * np.sign(np.sum(vec[:, 0] * u))
            u_new = grid.unit_norm(u_new)
            drift = float(np.max(np.abs(u_new - u)))
            u = u_new
            if drift < 1e-13:
                break
        e_prev = grid.energy(u, grid.potential(u))
    return e_prev, np.abs(u)


# ---------------------------------------------------------------------------
# radial shooting

def _shoot_once(phi0: float, k_src: float, r_max: float, psi0: float = 1.0):
    """Integrate u'' = 2 (w/r) u, w'' = 4 pi k_src u^2 / r outward.

    Returns the solve_ivp solution; events flag a node (u = 0) or runaway
    growth, which bracket the nodeless decaying solution.
    """
    r0 = 1e-6

    def rhs(r, y):
        u, du, w, dw = y
        return [du, 2.0 * (w / r) * u, dw, 4.0 * np.pi * k_src * u * u / r]

    y0 = [psi0 * (r0 + phi0 * r0**3 / 3.0),
          psi0 * (1.0 + phi0 * r0**2),
          phi0 * r0 + 2.0 * np.pi / 3.0 * k_src * psi0**2 * r0**3,
          phi0 + 2.0 * np.pi * k_src * psi0**2 * r0**2]

    def node(r, y):
        return y[0]
    node.terminal = True
    node.direction = -1

    def runaway(r, y):
        return y[0] - 50.0
    runaway.terminal = True

    return solve_ivp(rhs, (r0, r_max), y0, rtol=1e-10, atol=1e-12,
                     events=(node, runaway), dense_output=True, max_step=0.05)


def _classify(sol) -> str:
    if sol.t_events[0].size:
        return "node"
    return "runaway"


def _ground_state_shooting(grid: _RadialGrid, bisect_tol: float = 1e-12
                           ) -> tuple[float, np.ndarray]:
    """Bisection on the central potential offset for the nodeless solution."""
    k_src = grid.k_src
    r_span = 30.0
    # bracket: very negative offsets overbind (node), shallow ones blow up
    lo, hi = -6.0, -0.5
    sol_lo = _shoot_once(lo, k_src, r_span)
    sol_hi = _shoot_once(hi, k_src, r_span)
    if not (_classify(sol_lo) == "node" and _classify(sol_hi) == "runaway"):
        raise SolverError("shooting bracket does not enclose the ground state",
                          math.nan)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo < bisect_tol:
            break
        if _classify(_shoot_once(mid, k_src, r_span)) == "node":
            lo = mid
        else:
            hi = mid
    sol = _shoot_once(0.5 * (lo + hi), k_src, r_span)

    # sample densely and truncate where exponential contamination sets in:
    # past the physical peak (first down-turn of u), |u| decays to a floor
    # and then grows again; cut at the floor
    r = np.linspace(1e-6, sol.t[-1], 20000)
    u, du, w, dw = sol.sol(r)
    down = np.nonzero(du < 0)[0]
    if down.size == 0:
        raise SolverError("no turning point: shooting solution never decays",
                          math.nan)
    peak = int(down[0])
    cut = peak + int(np.argmin(np.abs(u[peak:])))
    r_cut, u_cut = r[cut], abs(u[cut])
    phi_cut = w[cut] / r_cut
    if phi_cut <= 0:
        raise SolverError("outer matching failed: potential offset not positive",
                          math.nan)
    kappa = math.sqrt(2.0 * phi_cut)

    # norm including the matched exponential tail u(r) = u_cut e^{-kappa (r-rc)}
    nrm = 4.0 * np.pi * (np.trapezoid(u[:cut + 1] ** 2, r[:cut + 1])
                         + u_cut**2 / (2.0 * kappa))
    # eigenvalue from the asymptotic slope of w = r (phi - E), fitted over a
    # window clear of both the cloud and the contaminated tail
    win = (r > 0.7 * r_cut) & (r <= 0.95 * r_cut)
    slope, intercept = np.polyfit(r[win], w[win], 1)
    e_shoot = -slope
    mass_out = -intercept
    if abs(mass_out - k_src * nrm) > 0.02 * k_src * nrm:
        raise SolverError("far-field mass inconsistent with the profile norm",
                          e_shoot / nrm**2)

    lam = 1.0 / nrm
    energy = e_shoot * lam**2

    # unit-norm profile on the target radial grid: psi(r) = lam^2 psi_s(lam r)
    rs = lam * grid.r
    inside = rs <= r_cut
    psi = np.empty(grid.n)
    psi[inside] = sol.sol(rs[inside])[0] / rs[inside]
    psi[~inside] = (u_cut * np.exp(-kappa * (rs[~inside] - r_cut))) / rs[~inside]
    psi = lam**2 * psi
    u_grid = grid.unit_norm(psi * grid.r)  # absorb residual quadrature error
    return energy, u_grid


# ---------------------------------------------------------------------------
# public ground-state entry point

def ground_state(params: SNParams, method: str = "imaginary_time",
                 n: int = 2048, r_max: float = 20.0, tol: float = 1e-8,
                 max_iter: int = 200_000, deep: bool = False
                 ) -> tuple[float, WaveField]:
    """Ground state of the self-gravitating stationary problem.

    Returns (energy, radial profile).  In dimensionless mode (all constants
    1) energy and radii are dimensionless; with physical constants the
    dimensionless solution is rescaled by hbar^2/(G m^3) in length and
    G^2 m^5 / hbar^2 in energy.
    """
    c, m = params.constants, params.m
    masses = params.branch_masses()
    mu = sum(masses) if params.include_self else sum(masses) - m
    if mu <= 0:
        raise ValueError("no attractive source: a lone Hartree particle has "
                         "no bound state")
    grid = _RadialGrid(n, r_max, k_src=mu / m)
    if method == "imaginary_time":
        energy, u = _imaginary_time(grid, tol, max_iter, deep)
    elif method == "radial_shooting":
        energy, u = _ground_state_shooting(grid)
    else:
        raise ValueError("method must be 'imaginary_time' or 'radial_shooting'")

    length_scale = c.hbar**2 / (c.G * m**3)
    energy_scale = c.G**2 * m**5 / c.hbar**2
    psi = (u / grid.r).astype(complex) / math.sqrt(length_scale**3)
    profile = WaveField(psi, extent=r_max * length_scale, radial=True)
    return energy * energy_scale, profile


# ---------------------------------------------------------------------------
# gauge rephasing

def gauge_rephase(fields: list[WaveField], cs,
                  constants: PhysicalConstants = PhysicalConstants.dimensionless()
                  ) -> list[WaveField]:
    """Apply per-branch phases exp(i c_s t / hbar); the constants must sum to
    zero so the reconstructed product wavefunction is unchanged."""
    cs = np.asarray(cs, dtype=float)
    if len(cs) != len(fields):
        raise ValueError("one constant per branch is required")
    scale = max(1.0, float(np.sum(np.abs(cs))))
    if abs(float(np.sum(cs))) > 1e-12 * scale:
        raise ValueError("rephasing constants must sum to zero")
    return [replace(f, values=f.values * np.exp(1j * c * f.t / constants.hbar))
            for f, c in zip(fields, cs)]
