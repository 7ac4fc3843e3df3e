"""Spectral-calculus contracts: transforms, multipliers, projections, products, norms."""

import numpy as np
import pytest

from emhdbox.initial_data import random_band
from emhdbox.spectral import (
    Grid3,
    HermitianSymmetryError,
    MeanModeError,
    GridMismatchError,
    PhysicalVectorField,
    SpectralScalarField,
    SpectralVectorField,
    cross_product,
    curl,
    dealias,
    divergence,
    forward_transform,
    fractional_laplacian,
    gradient,
    inverse_transform,
    l2_inner,
    leray_project,
    sobolev_norm,
    support_radius,
)

GRID = Grid3(16)


def random_field(seed, grid=GRID, band_hi=5.0, amp=1.0):
    return random_band(grid, seed, 1.0, band_hi, amplitude=amp, norm_sigma=0.0)


def cos_z_field(grid=GRID):
    """f(x) = (cos z, 0, 0) on the collocation grid."""
    _, _, z = grid.meshgrid()
    vals = np.zeros((3,) + z.shape)
    vals[0] = np.cos(z)
    return PhysicalVectorField(grid, vals)


class TestGrid:
    def test_requires_even_positive_n(self):
        with pytest.raises(ValueError):
            Grid3(15)
        with pytest.raises(ValueError):
            Grid3(-4)

    def test_default_cutoff_is_third(self):
        assert GRID.dealias_cutoff == pytest.approx(16 / 3)

    def test_cutoff_capped_at_nyquist(self):
        with pytest.raises(ValueError):
            Grid3(16, dealias_cutoff=9.0)

    def test_wavenumber_lattice_is_integer_for_default_box(self):
        assert np.allclose(GRID.kx.ravel(), np.fft.fftfreq(16, d=1 / 16))
        assert abs(GRID.k_max_mag - np.sqrt(3.0) * 8.0) < 1e-12


class TestTransforms:
    def test_single_mode_cosine(self):
        F = forward_transform(cos_z_field())
        # cos z = (e^{iz} + e^{-iz}) / 2: coefficient 1/2 at k_z = +-1, component 1
        assert F.coeffs[0, 0, 0, 1] == pytest.approx(0.5)
        assert F.coeffs[0, 0, 0, -1] == pytest.approx(0.5)
        masked = F.coeffs.copy()
        masked[0, 0, 0, 1] = masked[0, 0, 0, -1] = 0.0
        assert np.max(np.abs(masked)) < 1e-15

    def test_zero_field(self):
        f = PhysicalVectorField(GRID, np.zeros((3, 16, 16, 16)))
        assert forward_transform(f).l2_norm() == 0.0

    def test_round_trip_random(self):
        F = random_field(1)
        back = forward_transform(inverse_transform(F))
        assert (back - F).l2_norm() / F.l2_norm() < 1e-12

    def test_inverse_single_mode_is_cosine(self):
        F = SpectralVectorField.zeros(GRID)
        F.coeffs[0, 0, 0, 1] = 0.5
        F.coeffs[0, 0, 0, -1] = 0.5
        vals = inverse_transform(F).values
        np.testing.assert_allclose(vals, cos_z_field().values, atol=1e-14)

    def test_inverse_rejects_broken_symmetry(self):
        F = SpectralVectorField.zeros(GRID)
        F.coeffs[0, 0, 0, 1] = 1.0  # no conjugate partner
        with pytest.raises(HermitianSymmetryError):
            inverse_transform(F)

    def test_parseval(self):
        F = random_field(2)
        assert inverse_transform(F).l2_norm() == pytest.approx(F.l2_norm(), rel=1e-12)


class TestFractionalLaplacian:
    def test_unit_shell_fixed_point(self):
        F = SpectralVectorField.zeros(GRID)
        F.coeffs[1, 0, 0, 1] = 0.5
        F.coeffs[1, 0, 0, -1] = 0.5
        for beta in (-0.7, 0.4, 2.0):
            assert (fractional_laplacian(F, beta) - F).l2_norm() < 1e-15

    def test_single_mode_power(self):
        F = SpectralVectorField.zeros(GRID)
        F.coeffs[0, 0, 2, 0] = 1.0
        F.coeffs[0, 0, -2, 0] = 1.0
        out = fractional_laplacian(F, 1.5)
        assert out.coeffs[0, 0, 2, 0] == pytest.approx(2.0**1.5)

    def test_beta_zero_is_identity(self):
        F = random_field(3)
        assert (fractional_laplacian(F, 0.0) - F).l2_norm() == 0.0

    def test_negative_beta_requires_zero_mean(self):
        F = random_field(4)
        F.coeffs[:, 0, 0, 0] = 1.0
        with pytest.raises(MeanModeError):
            fractional_laplacian(F, -0.5)

    def test_power_composition_on_mean_free(self):
        F = random_field(5)
        once = fractional_laplacian(F, 0.5)
        twice = fractional_laplacian(fractional_laplacian(F, 1.3), -0.8)
        assert (once - twice).l2_norm() / once.l2_norm() < 1e-12

    def test_commutes_with_curl(self):
        F = random_field(6)
        a = fractional_laplacian(curl(F), 1.1)
        b = curl(fractional_laplacian(F, 1.1))
        assert (a - b).l2_norm() / a.l2_norm() < 1e-12


class TestCurlDivergence:
    def test_beltrami_eigenfield(self):
        # curl(sin z, cos z, 0) = (sin z, cos z, 0), derived by hand:
        # curl = (d_y 0 - d_z cos z, d_z sin z - d_x 0, d_x cos z - d_y sin z)
        from emhdbox.initial_data import beltrami
        B = beltrami(GRID)
        assert (curl(B) - B).l2_norm() < 1e-15
        assert float(np.max(np.abs(divergence(B).coeffs))) < 1e-15

    def test_curl_of_gradient_vanishes(self):
        rng = np.random.Generator(np.random.Philox(7))
        coeffs = rng.standard_normal((16, 16, 16)) * (GRID.k_mag < 5)
        f = SpectralScalarField(GRID, coeffs.astype(complex), reality_flag=False)
        assert curl(gradient(f)).l2_norm() < 1e-12

    def test_divergence_of_curl_vanishes(self):
        F = random_field(8)
        assert float(np.max(np.abs(divergence(curl(F)).coeffs))) < 1e-12

    def test_divergence_of_gradient_is_laplacian(self):
        rng = np.random.Generator(np.random.Philox(9))
        coeffs = (rng.standard_normal((16, 16, 16)) * (GRID.k_mag < 5)).astype(complex)
        f = SpectralScalarField(GRID, coeffs, reality_flag=False)
        lap = divergence(gradient(f))
        expected = -GRID.k_sq * f.coeffs
        assert np.max(np.abs(lap.coeffs - expected)) < 1e-12


class TestLerayProjection:
    def test_kills_gradient_fields(self):
        rng = np.random.Generator(np.random.Philox(10))
        coeffs = (rng.standard_normal((16, 16, 16)) * (GRID.k_mag < 5)).astype(complex)
        f = SpectralScalarField(GRID, coeffs, reality_flag=False)
        assert leray_project(gradient(f)).l2_norm() < 1e-12

    def test_fixes_divergence_free_fields(self):
        F = random_field(11)  # random_band output is already projected
        assert (leray_project(F) - F).l2_norm() / F.l2_norm() < 1e-12

    def test_output_divergence_free(self):
        rng = np.random.Generator(np.random.Philox(12))
        raw = rng.standard_normal((3, 16, 16, 16)).astype(complex)
        F = SpectralVectorField(GRID, raw, reality_flag=False)
        out = leray_project(F)
        assert float(np.max(np.abs(divergence(out).coeffs))) < 1e-12

    def test_idempotent_and_self_adjoint(self):
        F = random_field(13)
        G = random_field(14)
        PF = leray_project(F)
        assert (leray_project(PF) - PF).l2_norm() < 1e-12
        assert abs(l2_inner(PF, G) - l2_inner(F, leray_project(G))) < 1e-12


class TestCrossProduct:
    def test_self_cross_vanishes(self):
        f = inverse_transform(random_field(15))
        assert cross_product(f, f).l2_norm() < 1e-14

    def test_unit_vectors(self):
        ones = np.ones((16, 16, 16))
        ex = PhysicalVectorField(GRID, np.stack([ones, 0 * ones, 0 * ones]))
        ey = PhysicalVectorField(GRID, np.stack([0 * ones, ones, 0 * ones]))
        ez = cross_product(ex, ey)
        np.testing.assert_allclose(ez.values[2], 1.0)
        assert np.max(np.abs(ez.values[:2])) == 0.0

    def test_antisymmetry(self):
        f = inverse_transform(random_field(16))
        g = inverse_transform(random_field(17))
        fg = cross_product(f, g)
        gf = cross_product(g, f)
        assert np.max(np.abs(fg.values + gf.values)) < 1e-14

    def test_grid_mismatch_rejected(self):
        f = inverse_transform(random_field(18))
        g = inverse_transform(random_field(18, grid=Grid3(32), band_hi=5.0))
        with pytest.raises(GridMismatchError):
            cross_product(f, g)


class TestDealias:
    def test_inside_band_unchanged(self):
        F = random_field(19, band_hi=4.0)
        assert (dealias(F) - F).l2_norm() == 0.0

    def test_outside_band_zeroed(self):
        F = SpectralVectorField.zeros(GRID)
        F.coeffs[0, 7, 0, 0] = 1.0  # |m_x| = 7 > 16/3
        F.coeffs[0, -7, 0, 0] = 1.0
        assert dealias(F).l2_norm() == 0.0

    def test_idempotent(self):
        F = random_field(20, band_hi=8.0)
        once = dealias(F)
        assert (dealias(once) - once).l2_norm() == 0.0

    def test_support_radius(self):
        F = SpectralVectorField.zeros(GRID)
        F.coeffs[1, 0, 3, 0] = 1.0
        assert support_radius(F) == 3
        assert support_radius(SpectralVectorField.zeros(GRID)) == 0


class TestSobolevNorm:
    def test_single_mode_weight(self):
        F = SpectralVectorField.zeros(GRID)
        # unit L2 mass split over the conjugate pair at |k| = 2
        F.coeffs[0, 0, 2, 0] = np.sqrt(0.5)
        F.coeffs[0, 0, -2, 0] = np.sqrt(0.5)
        assert sobolev_norm(F, 1.0) == pytest.approx(2.0)
        # sigma_c(s=0, kappa=2) = 1.5: weight 2^1.5
        assert sobolev_norm(F, 1.5) == pytest.approx(2.0**1.5)

    def test_sigma_zero_is_parseval_l2(self):
        F = random_field(21)
        assert sobolev_norm(F, 0.0) == pytest.approx(inverse_transform(F).l2_norm(), rel=1e-12)

    def test_negative_sigma_needs_mean_free(self):
        F = random_field(22)
        F.coeffs[:, 0, 0, 0] = 2.0
        with pytest.raises(MeanModeError):
            sobolev_norm(F, -0.5)
