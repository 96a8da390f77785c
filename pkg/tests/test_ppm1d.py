"""Oracle tests for the 1D piecewise-parabolic advection engine."""

import numpy as np
import pytest
from scipy.integrate import quad

from advecta.ppm1d import (Profile1D, advect_step_1d, edge_values,
                           parabola_flux_fraction, ppm_fluxes, split_courant)


def gaussian_profile(n, dx=None, periodic=True):
    dx = 1.0 / n if dx is None else dx
    x = (np.arange(n) + 0.5) * dx
    return Profile1D(np.exp(-80.0 * (x - 0.5) ** 2), dx, periodic)


def test_edge_values_constant():
    prof = Profile1D(np.full(12, 3.7), 0.5)
    assert np.allclose(edge_values(prof), 3.7, rtol=0, atol=1e-14)


def test_edge_values_linear_interior():
    # away from the wrap the 4-point formula lands on the midpoint exactly
    prof = Profile1D(np.arange(16, dtype=float), 1.0)
    edges = edge_values(prof)
    expect = np.arange(17) - 0.5
    assert np.allclose(edges[2:-2], expect[2:-2], rtol=0, atol=1e-13)


def test_edge_values_spike():
    values = np.zeros(16)
    values[8] = 1.0
    edges = edge_values(Profile1D(values, 1.0))
    assert edges[8] == pytest.approx(7.0 / 12.0)
    assert edges[9] == pytest.approx(7.0 / 12.0)
    assert edges[7] == pytest.approx(-1.0 / 12.0)
    assert edges[10] == pytest.approx(-1.0 / 12.0)


def test_parabola_fraction_endpoints():
    prof = gaussian_profile(32)
    edges = edge_values(prof)
    assert parabola_flux_fraction(prof, edges, 10, 0.0, +1) == 0.0
    full = parabola_flux_fraction(prof, edges, 10, 1.0, +1)
    assert full == pytest.approx(prof.values[10] * prof.dx, rel=1e-13)
    full = parabola_flux_fraction(prof, edges, 21, 1.0, -1)
    assert full == pytest.approx(prof.values[21] * prof.dx, rel=1e-13)


def test_parabola_fraction_quadrature_oracle():
    # integrate the reconstructed parabola directly and compare
    prof = gaussian_profile(40)
    edges = edge_values(prof)
    for cell in (12, 19, 25):
        pl, pr = edges[cell], edges[cell + 1]
        q6 = 6.0 * (prof.values[cell] - 0.5 * (pl + pr))
        dp = pr - pl

        def parabola(xi):
            return pl + xi * (dp + q6 * (1.0 - xi))

        c_r = 0.37
        right, _ = quad(parabola, 1.0 - c_r, 1.0, epsabs=1e-14)
        left, _ = quad(parabola, 0.0, c_r, epsabs=1e-14)
        got_r = parabola_flux_fraction(prof, edges, cell, c_r, +1)
        got_l = parabola_flux_fraction(prof, edges, cell, c_r, -1)
        assert got_r == pytest.approx(right * prof.dx, rel=1e-12)
        assert got_l == pytest.approx(left * prof.dx, rel=1e-12)


def test_split_courant_convention():
    split = split_courant(2.5, 1.0, 1.0)
    assert (split.c_n, split.c_r, split.positive) == (2, 0.5, True)
    assert split.departure_cell(10) == 7

    split = split_courant(-0.25, 1.0, 1.0)
    assert split.c_n == 0
    assert split.c_r == pytest.approx(0.25)
    assert not split.positive
    assert split.departure_cell(10) == 10

    still = split_courant(0.0, 1.0, 1.0)
    assert (still.c_n, still.c_r) == (0, 0.0)


def test_flux_constancy():
    prof = Profile1D(np.ones(24), 0.1)
    u = np.full(25, 0.73)
    flux = ppm_fluxes(prof, u, dt=0.9)
    assert np.allclose(flux, 0.73, rtol=0, atol=1e-13)


def test_integer_courant_is_circular_shift():
    rng = np.random.default_rng(7)
    values = rng.normal(size=32)
    prof = Profile1D(values.copy(), 1.0)
    u = np.full(33, 3.0)
    stepped = advect_step_1d(prof, u, dt=1.0)
    assert np.allclose(stepped.values, np.roll(values, 3), rtol=0, atol=1e-12)

    u = np.full(33, -5.0)
    stepped = advect_step_1d(prof, u, dt=1.0)
    assert np.allclose(stepped.values, np.roll(values, -5), rtol=0, atol=1e-12)


def quadrature_flux_oracle(prof, u, dt):
    """Integrate the piecewise parabolas over each swept interval."""
    n, dx = prof.n, prof.dx
    edges = edge_values(prof)

    def parabola(cell, xi):
        cell = cell % n
        pl, pr = edges[cell], edges[cell + 1]
        q6 = 6.0 * (prof.values[cell] - 0.5 * (pl + pr))
        return pl + xi * ((pr - pl) + q6 * (1.0 - xi))

    flux = np.zeros(n + 1)
    for f in range(n + 1):
        a, b = f * dx - u[f] * dt, f * dx
        lo, hi = min(a, b), max(a, b)
        mass = 0.0
        cell = int(np.floor(lo / dx + 1e-13))
        while cell * dx < hi - 1e-13:
            seg_lo = max(lo, cell * dx)
            seg_hi = min(hi, (cell + 1) * dx)
            part, _ = quad(lambda x: parabola(cell, x / dx - cell),
                           seg_lo, seg_hi, epsabs=1e-14)
            mass += part
            cell += 1
        flux[f] = np.sign(u[f]) * mass / dt
    return flux


@pytest.mark.parametrize("c", [0.5, 2.37, -1.6])
def test_flux_quadrature_oracle(c):
    prof = gaussian_profile(48)
    u = np.full(prof.n + 1, 1.0 if c > 0 else -1.0)
    dt = abs(c) * prof.dx
    got = ppm_fluxes(prof, u, dt)
    want = quadrature_flux_oracle(prof, u, dt)
    assert np.allclose(got, want, rtol=0, atol=1e-10)


def test_mass_conservation_large_courant():
    rng = np.random.default_rng(11)
    prof = Profile1D(rng.uniform(0.5, 1.5, size=40), 0.25)
    mass0 = prof.values.sum() * prof.dx
    u = np.full(41, 1.0)
    dt = 2.7 * prof.dx
    for _ in range(50):
        prof = advect_step_1d(prof, u, dt)
    assert prof.values.sum() * prof.dx == pytest.approx(mass0, rel=1e-12)


def test_constant_fixed_point():
    prof = Profile1D(np.full(20, 2.5), 1.0)
    u = np.full(21, 0.8)
    for _ in range(10):
        prof = advect_step_1d(prof, u, dt=1.7)
    assert np.allclose(prof.values, 2.5, rtol=0, atol=1e-12)


def test_courant_exceeding_row_length_raises():
    prof = Profile1D(np.ones(8), 1.0)
    u = np.full(9, 1.0)
    with pytest.raises(ValueError):
        ppm_fluxes(prof, u, dt=9.0)


def test_gaussian_return_third_order():
    errors = {}
    for n in (50, 100, 200, 400):
        prof = gaussian_profile(n)
        start = prof.values.copy()
        u = np.full(n + 1, 1.0)
        dt = 0.5 * prof.dx
        for _ in range(2 * n):  # one full domain revolution at c = 0.5
            prof = advect_step_1d(prof, u, dt)
        errors[n] = np.sqrt(np.mean((prof.values - start) ** 2))
    slopes = [np.log2(errors[a] / errors[2 * a]) for a in (50, 100, 200)]
    assert min(slopes) >= 3.0, slopes
