"""Diagnostics tests with hand-derived integrals and brute-force cross-checks."""

import numpy as np
import pytest

from cmflow import (GridSpec, SpectralWorkspace, cross_helicity, energies, eoc, linf_error,
                    lowpass, shell_spectrum, spectrum_fit, squared_potential)
from cmflow.diagnostics import TimeSeriesRecord


def grids(n=64):
    g = GridSpec(n, n)
    X, Y = g.nodes()
    return g, X, Y


class TestEnergies:
    def test_single_mode_hand_integral(self):
        # mean(sin^2 x) = 1/2, so E_kin = 1/4
        g, X, Y = grids()
        z = np.zeros(g.shape)
        e_kin, e_pot, e_tot = energies(np.sin(X), z, z, z)
        assert abs(e_kin - 0.25) < 1e-14
        assert e_pot == 0.0
        assert abs(e_tot - 0.25) < 1e-14

    def test_zero_fields(self):
        g, X, Y = grids(16)
        z = np.zeros(g.shape)
        assert energies(z, z, z, z) == (0.0, 0.0, 0.0)

    def test_ot_initial_closed_form(self):
        # u0 = (-sin 2y, sin 2x):      E_kin = (1/2)(1/2 + 1/2) = 1/2
        # B0 = (-2 sin 2y, 4 sin x):   E_pot = (1/2)(4/2 + 16/2) = 5
        g, X, Y = grids()
        ux, uy = -np.sin(2 * Y), np.sin(2 * X)
        bx, by = -2.0 * np.sin(2 * Y), 4.0 * np.sin(X)
        e_kin, e_pot, e_tot = energies(ux, uy, bx, by)
        assert abs(e_kin - 0.5) < 1e-13
        assert abs(e_pot - 5.0) < 1e-13
        assert abs(e_tot - 5.5) < 1e-13

    def test_total_is_sum(self):
        g, X, Y = grids(16)
        rng = np.random.default_rng(20)
        f = [rng.standard_normal(g.shape) for _ in range(4)]
        e_kin, e_pot, e_tot = energies(*f)
        assert abs(e_tot - (e_kin + e_pot)) < 1e-14


class TestHelicityPotential:
    def test_orthogonal_patterns(self):
        g, X, Y = grids()
        # <sin x, sin 2x> = 0 over the period
        assert abs(cross_helicity(np.sin(X), np.zeros(g.shape),
                                  np.sin(2 * X), np.zeros(g.shape))) < 1e-14

    def test_ot_initial_cross_helicity(self):
        # mean(2 sin^2 2y) = 1; the second component integrates to zero
        g, X, Y = grids()
        h = cross_helicity(-np.sin(2 * Y), np.sin(2 * X),
                           -2.0 * np.sin(2 * Y), 4.0 * np.sin(X))
        assert abs(h - 1.0) < 1e-13

    def test_squared_potential_hand_value(self):
        # B = (-sin y, 0): j = cos y, a = inv_lap(j) = -cos y,
        # A_sq = 1/2 mean(cos^2) = 1/4
        g, X, Y = grids()
        ws = SpectralWorkspace(g)
        a_sq = squared_potential(-np.sin(Y), np.zeros(g.shape), ws)
        assert abs(a_sq - 0.25) < 1e-13

    def test_squared_potential_brute_force_quadrature(self):
        # independent route: solve for the potential by brute-force Fourier
        # series on a coarse grid
        g = GridSpec(16, 16)
        X, Y = g.nodes()
        ws = SpectralWorkspace(g)
        bx = lowpass(np.cos(2 * Y) + 0.3 * np.sin(X) * np.sin(Y), 0.4, ws)
        by = lowpass(0.3 * np.cos(X) * np.cos(Y), 0.4, ws)
        got = squared_potential(bx, by, ws)
        n = 16
        ks = np.fft.fftfreq(n, 1.0 / n).astype(int)
        j = np.zeros(g.shape)
        for kx in ks:
            for ky in ks:
                phase = np.exp(-1j * (kx * X + ky * Y))
                cx = np.sum(bx * phase) / n**2
                cy = np.sum(by * phase) / n**2
                jk = 1j * kx * cy - 1j * ky * cx
                j = j + (jk * np.conj(phase)).real
        a = np.zeros(g.shape)
        for kx in ks:
            for ky in ks:
                if kx == 0 and ky == 0:
                    continue
                phase = np.exp(-1j * (kx * X + ky * Y))
                jk = np.sum(j * phase) / n**2
                a = a + (-jk / (kx**2 + ky**2) * np.conj(phase)).real
        ref = 0.5 * np.mean(a**2)
        assert abs(got - ref) < 1e-12

    def test_ot_initial_squared_potential(self):
        # a = -(4 cos x + cos 2y): A_sq = 1/2 (16/2 + 1/2) = 4.25
        g, X, Y = grids()
        ws = SpectralWorkspace(g)
        a_sq = squared_potential(-2.0 * np.sin(2 * Y), 4.0 * np.sin(X), ws)
        assert abs(a_sq - 4.25) < 1e-12


class TestNormsEoc:
    def test_linf_identical(self):
        a = np.ones((8, 8))
        assert linf_error(a, a) == 0.0

    def test_linf_single_node(self):
        a = np.zeros((8, 8))
        b = a.copy()
        b[3, 5] = 1e-3
        assert abs(linf_error(a, b) - 1e-3) < 1e-18

    def test_linf_brute_force(self):
        rng = np.random.default_rng(21)
        a = rng.standard_normal((10, 10))
        b = rng.standard_normal((10, 10))
        ref = max(abs(a[i, j] - b[i, j]) for i in range(10) for j in range(10))
        assert linf_error(a, b) == ref

    def test_linf_shape_mismatch(self):
        with pytest.raises(ValueError):
            linf_error(np.zeros((4, 4)), np.zeros((5, 4)))

    def test_eoc_cubic(self):
        assert np.allclose(eoc([8.0, 1.0]), [3.0])

    def test_eoc_halving(self):
        assert np.allclose(eoc([4.0, 2.0, 1.0]), [1.0, 1.0])

    def test_eoc_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            eoc([1.0, 0.0])


class TestSpectrumFit:
    def test_power_law(self):
        k = np.arange(33, dtype=float)
        E = np.zeros(33)
        E[1:] = k[1:] ** -2.0
        assert abs(spectrum_fit(E, 1, 14) - -2.0) < 1e-12

    def test_flat(self):
        E = np.full(33, 0.7)
        assert abs(spectrum_fit(E, 2, 10)) < 1e-12

    def test_skips_empty_shells(self):
        E = np.zeros(33)
        E[2] = 4.0
        E[4] = 1.0
        # slope from (2, 4) double: log(1/4)/log(2) = -2
        assert abs(spectrum_fit(E, 1, 8) - -2.0) < 1e-12

    def test_bad_range(self):
        with pytest.raises(ValueError):
            spectrum_fit(np.ones(33), 5, 5)

    def test_parseval_consistency_with_energy(self):
        g = GridSpec(64, 64)
        ws = SpectralWorkspace(g)
        rng = np.random.default_rng(22)
        ux = lowpass(rng.standard_normal(g.shape), 0.5, ws)
        uy = lowpass(rng.standard_normal(g.shape), 0.5, ws)
        e_kin = energies(ux, uy, np.zeros(g.shape), np.zeros(g.shape))[0]
        E = shell_spectrum((ux, uy), ws)
        assert abs(E.sum() - e_kin) <= 1e-10 * max(e_kin, 1.0)


class TestRecord:
    def test_columns_order(self):
        cols = TimeSeriesRecord.columns()
        assert cols[0] == "t"
        assert "e_tot" in cols and "n_submaps" in cols

    def test_total_energy_definitional(self):
        r = TimeSeriesRecord(t=0.0, dt=0.1, e_kin=0.5, e_pot=5.0, e_tot=5.5, h_c=1.0,
                             a_sq=4.25, max_u=1.0, max_j=8.0, n_submaps=1)
        assert abs(r.e_tot - (r.e_kin + r.e_pot)) < 1e-14
