"""Reproducible initial conditions: Beltrami eigenfield, seeded random bands, power-law spectra.

Random fields use a counter-based generator (Philox) keyed by the config
seed, so a given (seed, grid) pair yields the same coefficients on every
machine.  The recipe is fixed: draw i.i.d. complex unit normals on the
requested band, conjugate-symmetrize, kill the mean mode, project onto
divergence-free fields, dealias, then rescale to the target critical-norm
amplitude.
"""

from __future__ import annotations

import numpy as np

from .spectral import (
    Grid3,
    SpectralVectorField,
    _reflect,
    dealias,
    leray_project,
    sobolev_norm,
)


def beltrami(grid: Grid3, amplitude: float = 1.0) -> SpectralVectorField:
    """amplitude * (sin z, cos z, 0): a curl eigenfield with eigenvalue one.

    Single-shell data (|k| = 1) that annihilates the quadratic term, so the
    full evolution reduces to exact exponential decay.  Built directly in
    spectral space.
    """
    F = SpectralVectorField.zeros(grid)
    n = grid.n_per_axis
    # sin z -> -i/2 at k_z=+1, +i/2 at k_z=-1; cos z -> 1/2 at both
    F.coeffs[0, 0, 0, 1] = -0.5j * amplitude
    F.coeffs[0, 0, 0, n - 1] = 0.5j * amplitude
    F.coeffs[1, 0, 0, 1] = 0.5 * amplitude
    F.coeffs[1, 0, 0, n - 1] = 0.5 * amplitude
    return F


def _symmetrize(coeffs: np.ndarray) -> np.ndarray:
    return 0.5 * (coeffs + np.conj(_reflect(coeffs)))


def _finalize(grid: Grid3, coeffs: np.ndarray, amplitude: float,
              norm_sigma: float) -> SpectralVectorField:
    coeffs = _symmetrize(coeffs)
    coeffs[:, 0, 0, 0] = 0.0
    F = dealias(leray_project(SpectralVectorField(grid, coeffs)))
    F.coeffs[:, 0, 0, 0] = 0.0
    current = sobolev_norm(F, norm_sigma)
    if current == 0.0:
        raise ValueError("degenerate random draw: zero field after projection")
    return (amplitude / current) * F


def random_band(grid: Grid3, seed: int, band_lo: float = 1.0, band_hi: float = 4.0,
                amplitude: float = 1.0, norm_sigma: float = 0.0) -> SpectralVectorField:
    """Divergence-free white noise on the ring band_lo <= |k| <= band_hi.

    Rescaled so the Sobolev norm of order norm_sigma equals amplitude.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    n = grid.n_per_axis
    raw = rng.standard_normal((3, n, n, n)) + 1j * rng.standard_normal((3, n, n, n))
    band = (grid.k_mag >= band_lo) & (grid.k_mag <= band_hi)
    return _finalize(grid, raw * band, amplitude, norm_sigma)


def power_law_spectrum(grid: Grid3, seed: int, slope: float, amplitude: float = 1.0,
                       norm_sigma: float = 0.0, band_hi: float | None = None) -> SpectralVectorField:
    """Random phases under the envelope |k|^{-slope}, up to band_hi (default: the dealias cutoff).

    Broad algebraic spectra are the natural seed for smoothing-rate and
    decay-exponent measurements; a Gaussian or single-mode spectrum has no
    scaling range to fit.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    n = grid.n_per_axis
    raw = rng.standard_normal((3, n, n, n)) + 1j * rng.standard_normal((3, n, n, n))
    with np.errstate(divide="ignore"):
        envelope = np.where(grid.k_mag > 0.0, grid.k_mag, 1.0) ** (-slope)
    if band_hi is None:
        band_hi = grid.dealias_cutoff * (2.0 * np.pi / grid.box_length)
    mask = (grid.k_mag >= grid.k_min_mag * 0.5) & (grid.k_mag <= band_hi)
    phases = raw / np.maximum(np.abs(raw), 1e-300)
    return _finalize(grid, phases * envelope * mask, amplitude, norm_sigma)
