"""Dyadic-shell machinery: cutoffs, projections, Bony splitting, commutators, Bernstein."""

import numpy as np
import pytest

from emhdbox.initial_data import random_band
from emhdbox.littlewood_paley import (
    BernsteinBracketError,
    ResolutionError,
    ShellSupportError,
    bernstein_check,
    bony_decompose,
    chi_eval,
    commutator_curl,
    commutator_curl_gain,
    commutator_scalar,
    dyadic_sobolev_norm,
    low_pass,
    lp_project,
    phi_eval,
    read_shell_csv,
    reconstruct,
    shell_range,
    shell_spectrum,
    tilde_block,
    write_shell_csv,
)
from emhdbox.spectral import (
    Grid3,
    SpectralScalarField,
    SpectralVectorField,
    _reflect,
    curl,
    dealiased_cross,
    dealiased_scalar_product,
    sobolev_norm,
)

GRID = Grid3(16)
GRID32 = Grid3(32)


def random_field(seed, grid=GRID, band_hi=None, amp=1.0):
    band_hi = band_hi if band_hi is not None else grid.dealias_cutoff * 0.9
    return random_band(grid, seed, 1.0, band_hi, amplitude=amp, norm_sigma=0.0)


def random_scalar(seed, grid=GRID, band_hi=None):
    band_hi = band_hi if band_hi is not None else grid.dealias_cutoff * 0.9
    rng = np.random.Generator(np.random.Philox(seed))
    n = grid.n_per_axis
    c = rng.standard_normal((n, n, n)) + 1j * rng.standard_normal((n, n, n))
    c *= grid.k_mag <= band_hi
    c = 0.5 * (c + np.conj(_reflect(c)))
    c[0, 0, 0] = 0.0
    return SpectralScalarField(grid, c)


def single_mode(grid, k_index, component=0):
    F = SpectralVectorField.zeros(grid)
    idx = tuple(np.mod(k_index, grid.n_per_axis))
    neg = tuple(np.mod([-k for k in k_index], grid.n_per_axis))
    F.coeffs[(component,) + idx] = 0.5
    F.coeffs[(component,) + neg] = 0.5
    return F


class TestCutoffProfile:
    def test_plateau_and_support(self):
        assert chi_eval(0.5) == 1.0
        assert chi_eval(0.75) == 1.0
        assert chi_eval(1.0) == 0.0
        assert chi_eval(1.2) == 0.0

    def test_transition_monotone(self):
        xs = np.linspace(0.75, 1.0, 101)
        vals = chi_eval(xs)
        assert np.all(np.diff(vals) <= 0.0)
        assert 0.0 < chi_eval(0.875) < 1.0
        assert chi_eval(0.8) > chi_eval(0.9)

    def test_phi_ring(self):
        assert phi_eval(0.74) == 0.0
        assert phi_eval(2.0) == 0.0
        assert phi_eval(1.0) == 1.0   # chi(1/2) - chi(1)
        assert phi_eval(1.25) == 1.0  # inner plateau
        xs = np.linspace(0.01, 3.0, 500)
        assert np.all(phi_eval(xs) >= 0.0)

    def test_partition_of_unity_on_lattice(self):
        for grid in (GRID, Grid3(16, box_length=4 * np.pi)):
            j_min, j_max = shell_range(grid)
            total = np.zeros_like(grid.k_mag)
            for j in range(j_min, j_max + 1):
                total += phi_eval(grid.k_mag * 2.0**-j)
            nz = grid.k_mag > 0
            assert float(np.max(np.abs(total[nz] - 1.0))) < 1e-12


class TestProjections:
    def test_unit_mode_lives_in_shell_zero(self):
        F = single_mode(GRID, (0, 0, 1))
        assert (lp_project(F, 0) - F).l2_norm() < 1e-15
        assert lp_project(F, 1).l2_norm() == 0.0
        assert lp_project(F, -1).l2_norm() == 0.0

    def test_support_ring_exact(self):
        F = random_field(1)
        for j in (0, 1, 2):
            piece = lp_project(F, j)
            outside = ~((GRID.k_mag >= 0.75 * 2.0**j) & (GRID.k_mag <= 2.0**(j + 1)))
            assert np.max(np.abs(piece.coeffs[:, outside])) == 0.0

    def test_disjoint_support_killed(self):
        F = single_mode(GRID, (0, 0, 1))  # |k| = 1 < 2^{j-1} for j = 2
        assert lp_project(F, 2).l2_norm() == 0.0

    def test_reconstruction(self):
        F = random_field(2)
        err = (reconstruct(F) - F).l2_norm() / F.l2_norm()
        assert err < 1e-10

    def test_low_pass_telescoping(self):
        F = random_field(3)
        _, j_max = shell_range(GRID)
        for k in (0, 1, 2):
            total = low_pass(F, k)
            for j in range(k + 1, j_max + 1):
                total = total + lp_project(F, j)
            assert (total - F).l2_norm() / F.l2_norm() < 1e-10

    def test_low_pass_extremes(self):
        F = random_field(4)
        assert (low_pass(F, 50) - F).l2_norm() / F.l2_norm() < 1e-12
        assert low_pass(F, -10).l2_norm() == 0.0

    def test_tilde_block_covers_shell(self):
        F = random_field(5)
        for j in (0, 1, 2):
            a = lp_project(tilde_block(F, j), j)
            b = lp_project(F, j)
            assert (a - b).l2_norm() <= 1e-12 * max(b.l2_norm(), 1.0)

    def test_tilde_block_unit_mode(self):
        F = single_mode(GRID, (0, 0, 1))
        assert (tilde_block(F, 0) - F).l2_norm() < 1e-15
        assert tilde_block(SpectralVectorField.zeros(GRID), 0).l2_norm() == 0.0


class TestShellSpectrum:
    def test_masses_reconstruct_l2(self):
        F = random_field(6)
        spec = shell_spectrum(F)
        # smooth cutoffs overlap, so the mass sum is close to, not exactly, ||F||^2;
        # the sharp statement is the reconstruction identity
        assert (reconstruct(F) - F).l2_norm() / F.l2_norm() < 1e-10
        assert spec.total_mass() == pytest.approx(F.l2_norm() ** 2, rel=0.2)

    def test_csv_round_trip(self, tmp_path):
        F = random_field(7)
        spec = shell_spectrum(F)
        path = tmp_path / "shells_000012.csv"
        write_shell_csv(spec, path, sigma=1.5)
        loaded, weighted = read_shell_csv(path)
        np.testing.assert_array_equal(loaded.js, spec.js)
        np.testing.assert_allclose(loaded.masses, spec.masses, rtol=0, atol=0)
        np.testing.assert_allclose(weighted, spec.weighted_masses(1.5), rtol=0, atol=0)


class TestBony:
    def test_three_terms_reconstruct_scalar(self):
        u = random_scalar(10, GRID32, band_hi=8.0)
        v = random_scalar(11, GRID32, band_hi=8.0)
        for j in (1, 2, 3):
            lh, hl, hh = bony_decompose(u, v, j)
            direct = lp_project(dealiased_scalar_product(u, v), j)
            err = ((lh + hl + hh) - direct).l2_norm()
            assert err <= 1e-10 * max(direct.l2_norm(), 1e-6)

    def test_three_terms_reconstruct_cross(self):
        for seed in range(3):
            u = random_field(20 + seed, GRID32, band_hi=8.0)
            v = random_field(30 + seed, GRID32, band_hi=8.0)
            lh, hl, hh = bony_decompose(u, v, 2)
            direct = lp_project(dealiased_cross(u, v), 2)
            err = ((lh + hl + hh) - direct).l2_norm() / direct.l2_norm()
            assert err < 1e-10

    def test_constant_factor_rides_low_high(self):
        u = SpectralScalarField(GRID32, np.zeros((32,) * 3, dtype=complex))
        u.coeffs[0, 0, 0] = 2.5  # constant function
        v = random_scalar(12, GRID32, band_hi=6.0)
        j = 2
        lh, hl, hh = bony_decompose(u, v, j)
        direct = lp_project(dealiased_scalar_product(u, v), j)
        assert ((lh + hl + hh) - direct).l2_norm() < 1e-12
        assert hl.l2_norm() < 1e-14
        assert hh.l2_norm() < 1e-14
        assert (lh - direct).l2_norm() < 1e-12

    def test_separated_modes_single_term(self):
        u = single_mode(GRID32, (0, 0, 1), component=0)   # shell 0
        v = single_mode(GRID32, (8, 0, 0), component=1)   # shell 3
        lh, hl, hh = bony_decompose(u, v, 3, product="cross")
        direct = lp_project(dealiased_cross(u, v), 3)
        assert ((lh + hl + hh) - direct).l2_norm() < 1e-14
        assert hl.l2_norm() == 0.0
        assert hh.l2_norm() == 0.0
        assert (lh - direct).l2_norm() < 1e-14

    def test_resolution_guard(self):
        # raw fields with support at |m| = 7: the product band wraps into the
        # retained modes of a 16^3 grid
        u = single_mode(GRID, (7, 0, 0))
        v = single_mode(GRID, (0, 7, 0))
        with pytest.raises(ResolutionError):
            bony_decompose(u, v, 2)


class TestCommutators:
    def test_literal_identity(self):
        g = random_field(40, GRID32, band_hi=8.0)
        f = random_field(41, GRID32, band_hi=8.0)
        j = 2
        comm = commutator_curl(g, f, j)
        lhs = comm + dealiased_cross(g, curl(lp_project(f, j)))
        rhs = lp_project(dealiased_cross(g, curl(f)), j)
        assert (lhs - rhs).l2_norm() <= 1e-12 * rhs.l2_norm()

    def test_constant_g_commutes(self):
        g = SpectralVectorField.zeros(GRID32)
        g.coeffs[:, 0, 0, 0] = [1.0, -2.0, 0.5]
        f = random_field(42, GRID32, band_hi=8.0)
        assert commutator_curl(g, f, 2).l2_norm() < 1e-12

    def test_zero_f(self):
        g = random_field(43, GRID32, band_hi=8.0)
        assert commutator_curl(g, SpectralVectorField.zeros(GRID32), 2).l2_norm() == 0.0

    def test_derivative_gain_constant_bounded(self):
        # the commutator costs one derivative less than the raw product:
        # the normalized constant stays O(1) in j instead of growing like 2^j
        for j in (1, 2, 3):
            gains = [commutator_curl_gain(random_field(50 + s, GRID32, band_hi=8.0),
                                          random_field(60 + s, GRID32, band_hi=8.0), j)
                     for s in range(3)]
            assert all(0.0 < c < 2.0 for c in gains)

    def test_scalar_commutator(self):
        g = random_scalar(44, GRID32, band_hi=8.0)
        f = random_scalar(45, GRID32, band_hi=8.0)
        j = 2
        comm = commutator_scalar(g, f, j)
        lhs = comm + dealiased_scalar_product(g, lp_project(f, j))
        rhs = lp_project(dealiased_scalar_product(g, f), j)
        assert (lhs - rhs).l2_norm() <= 1e-12 * rhs.l2_norm()
        const = SpectralScalarField(GRID32, np.zeros((32,) * 3, dtype=complex))
        const.coeffs[0, 0, 0] = 3.0
        assert commutator_scalar(const, f, j).l2_norm() < 1e-12

    def test_gevrey_weighted_commutator(self):
        from emhdbox.gevrey import GevreyParams, gevrey_apply
        g = random_field(46, GRID32, band_hi=8.0)
        f = random_field(47, GRID32, band_hi=8.0)
        j = 2
        gp = GevreyParams(alpha=1.0, lam=0.02)
        comm = commutator_curl(g, f, j, gevrey=gp)
        lhs = comm + dealiased_cross(g, curl(gevrey_apply(lp_project(f, j), gp)))
        rhs = gevrey_apply(lp_project(dealiased_cross(g, curl(f)), j), gp)
        assert (lhs - rhs).l2_norm() <= 1e-12 * rhs.l2_norm()


class TestNorms:
    def test_unit_mode_dyadic_equals_direct(self):
        F = single_mode(GRID, (0, 0, 1))
        for sigma in (0.0, 0.7, 1.5):
            assert dyadic_sobolev_norm(F, sigma) == pytest.approx(sobolev_norm(F, sigma), rel=1e-12)

    def test_zero_field(self):
        assert dyadic_sobolev_norm(SpectralVectorField.zeros(GRID), 1.0) == 0.0

    def test_equivalence_bracket(self):
        for sigma in (0.0, 0.5, 1.0, 1.5):
            for seed in (70, 71, 72):
                F = random_field(seed, GRID32, band_hi=9.0)
                ratio = dyadic_sobolev_norm(F, sigma) / sobolev_norm(F, sigma)
                assert 0.5 < ratio < 2.0


class TestBernstein:
    def test_single_mode_gradient_ratio_is_one(self):
        F = single_mode(GRID, (0, 0, 2))  # |k| = 2^1 exactly
        for p, q in ((2.0, np.inf), (4.0, np.inf)):
            r = bernstein_check(F, 1, p, q)
            assert r["ratio_gradient"] == pytest.approx(1.0, abs=1e-12)

    def test_random_shells_in_bracket(self):
        for j in (1, 2, 3):
            F = lp_project(random_field(80 + j, GRID32), j)
            for q in (4.0, np.inf):
                r = bernstein_check(F, j, 2.0, q)
                assert 1 / 8 <= r["ratio_gradient"] <= 8
                assert 1 / 8 <= r["ratio_embedding"] <= 8

    def test_support_violation_raises(self):
        F = random_field(90)  # broadband
        with pytest.raises(ShellSupportError):
            bernstein_check(F, 2, 2.0, np.inf)

    def test_zero_field_rejected(self):
        with pytest.raises(ShellSupportError):
            bernstein_check(SpectralVectorField.zeros(GRID), 1, 2.0, np.inf)


def test_mutated_plateau_is_detected(monkeypatch):
    """Sanity: the invariant suite bites if the cutoff plateau constant is corrupted.

    The ring function is built as a telescoping difference of the same chi,
    so the partition of unity survives any (consistent) corruption; what a
    3/4 -> 0.7 corruption breaks is the shell-support invariant, since the
    ring then leaks below 3/4 * 2^j.
    """
    import emhdbox.littlewood_paley as lp_mod
    from emhdbox.verify import check_partition_of_unity, check_shell_support
    monkeypatch.setattr(lp_mod, "_PLATEAU", 0.7)
    ok_partition, _ = check_partition_of_unity(16)
    ok_support, _ = check_shell_support(16)
    assert ok_partition          # telescoping makes this one corruption-proof
    assert not ok_support        # the leak is caught here
