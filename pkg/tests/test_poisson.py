import numpy as np
import pytest
from scipy import integrate

from gravqm.poisson import (radial_poisson, solve_poisson, solve_poisson_direct)


def test_point_mass_far_field():
    n, cell, M = 48, 1.0, 3.0
    rho = np.zeros((n, n, n))
    rho[n // 2, n // 2, n // 2] = M / cell**3
    phi = solve_poisson(rho, cell, G=1.0)
    r = 10 * cell
    assert phi[n // 2 + 10, n // 2, n // 2] == pytest.approx(-M / r, rel=0.01)
    # diagonal direction too
    k = n // 2 + 6
    rdiag = 6 * np.sqrt(3.0) * cell
    assert phi[k, k, k] == pytest.approx(-M / rdiag, rel=0.01)


def sphere_density(n, cell, R, rho0):
    g = (np.arange(n) + 0.5 - n / 2) * cell
    X, Y, Z = np.meshgrid(g, g, g, indexing="ij")
    return np.where(X**2 + Y**2 + Z**2 <= R * R, rho0, 0.0)


def test_uniform_sphere_center_against_radial_oracle():
    n, cell = 64, 1.0 / 16.0
    R, rho0 = 1.0, 1.0
    rho = sphere_density(n, cell, R, rho0)
    phi = solve_poisson(rho, cell, G=1.0)
    M = rho.sum() * cell**3

    # closed form -(3/2) G M / R, re-derived by 1-D shell quadrature
    oracle = -(integrate.quad(lambda s: 4 * np.pi * rho0 * s, 0, R)[0])
    assert oracle == pytest.approx(-1.5 * (4 * np.pi / 3 * rho0 * R**3) / R, rel=1e-12)

    center = phi[n // 2, n // 2, n // 2]
    # compare against the sphere actually represented on the grid (mass M)
    assert center == pytest.approx(-1.5 * M / R, rel=0.02)


def test_sphere_far_field():
    n, cell = 32, 1.0 / 8.0
    rho = sphere_density(n, cell, 1.0, 1.0)
    phi = solve_poisson(rho, cell, G=1.0)
    M = rho.sum() * cell**3
    r = (n / 2 - 0.5) * cell  # outermost cell center along +x
    assert phi[-1, n // 2, n // 2] == pytest.approx(-M / r, rel=0.02)


def test_linearity_exact():
    rng = np.random.default_rng(5)
    a = rng.random((12, 12, 12))
    b = rng.random((12, 12, 12))
    pa = solve_poisson(a, 0.3)
    pb = solve_poisson(b, 0.3)
    pab = solve_poisson(a + b, 0.3)
    np.testing.assert_allclose(pab, pa + pb, rtol=1e-12, atol=1e-13)


def test_fft_matches_direct_sum():
    rng = np.random.default_rng(7)
    rho = rng.random((8, 8, 8))
    fast = solve_poisson(rho, 0.5, G=2.0)
    slow = solve_poisson_direct(rho, 0.5, G=2.0)
    np.testing.assert_allclose(fast, slow, rtol=1e-11, atol=1e-11)


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        solve_poisson(-np.ones((4, 4, 4)), 1.0)
    with pytest.raises(ValueError):
        solve_poisson(np.ones((4, 4)), 1.0)
    with pytest.raises(ValueError):
        solve_poisson(np.ones((4, 4, 4)), 0.0)


def test_radial_poisson_uniform_sphere():
    r = np.linspace(1e-3, 4.0, 4000)
    R = 1.0
    rho = np.where(r <= R, 1.0, 0.0)
    phi = radial_poisson(rho, r, G=1.0)
    M = 4.0 * np.pi / 3.0 * R**3
    inside = r < 0.9
    expect_in = -M * (3 * R**2 - r[inside] ** 2) / (2 * R**3)
    np.testing.assert_allclose(phi[inside], expect_in, rtol=2e-3)
    outside = r > 1.5
    np.testing.assert_allclose(phi[outside], -M / r[outside], rtol=2e-3)
