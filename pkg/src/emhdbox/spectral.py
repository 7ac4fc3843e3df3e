"""Fourier representation of periodic vector fields and the exact spectral calculus.

Everything downstream (frequency-shell analysis, the Hall nonlinearity, the
time steppers) is built on the operations here: discrete Fourier transforms
with a fixed normalization, Fourier-multiplier powers of the Laplacian, curl
and divergence, the divergence-free (Leray) projection, pointwise products
with 2/3-rule dealiasing, and homogeneous Sobolev norms as lattice sums.

Conventions, stated once so results are bit-comparable:

* the domain is the periodic box [0, box_length)^3 sampled on an even
  n-per-axis collocation grid;
* the forward transform carries the 1/N^3 factor, so a plane wave
  cos(z) has coefficients 1/2 at k = (0, 0, +-1);
* wavenumbers are 2*pi/box_length times the integer FFT lattice, so for the
  default box length 2*pi they are integers;
* the L2 norm of a physical field is the root mean square over collocation
  points, which matches the plain coefficient sum by Parseval.

All operations are pure functions; fields are value-semantic.  Reductions use
numpy's deterministic summation order so repeated runs are bit-identical.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

_FFT_WORKERS = max(1, min(4, os.cpu_count() or 1))


def _fftn(a: np.ndarray) -> np.ndarray:
    return sfft.fftn(a, axes=(-3, -2, -1), norm="forward", workers=_FFT_WORKERS)


def _ifftn(a: np.ndarray) -> np.ndarray:
    return sfft.ifftn(a, axes=(-3, -2, -1), norm="forward", workers=_FFT_WORKERS)


class GridMismatchError(ValueError):
    """Operands live on different grids."""


class MeanModeError(ValueError):
    """A negative Laplacian power or negative-order norm met a nonzero mean mode."""


class HermitianSymmetryError(ValueError):
    """Coefficients claimed to represent a real field are not conjugate-symmetric."""


class Grid3:
    """Periodic-box discretization: collocation points and the wavenumber lattice.

    Parameters
    ----------
    n_per_axis:
        Grid points per axis, even and positive.
    box_length:
        Physical period, default 2*pi (integer wavenumbers).
    dealias_cutoff:
        Largest retained integer mode index per axis for nonlinear products,
        default n_per_axis/3 (the 2/3 rule).  Must not exceed n_per_axis/2.
    """

    def __init__(self, n_per_axis: int, box_length: float = 2.0 * np.pi,
                 dealias_cutoff: float | None = None):
        if n_per_axis <= 0 or n_per_axis % 2 != 0:
            raise ValueError(f"n_per_axis must be positive and even, got {n_per_axis}")
        if box_length <= 0:
            raise ValueError(f"box_length must be positive, got {box_length}")
        if dealias_cutoff is None:
            dealias_cutoff = n_per_axis / 3.0
        if not 0 < dealias_cutoff <= n_per_axis / 2:
            raise ValueError(f"dealias_cutoff must lie in (0, n_per_axis/2], got {dealias_cutoff}")
        self.n_per_axis = int(n_per_axis)
        self.box_length = float(box_length)
        self.dealias_cutoff = float(dealias_cutoff)

        n = self.n_per_axis
        # Integer mode indices in numpy FFT order: 0, 1, ..., n/2-1, -n/2, ..., -1.
        modes = np.fft.fftfreq(n, d=1.0 / n)
        scale = 2.0 * np.pi / self.box_length
        self.modes_1d = modes
        self.kx = (scale * modes)[:, None, None]
        self.ky = (scale * modes)[None, :, None]
        self.kz = (scale * modes)[None, None, :]
        self.k_sq = self.kx**2 + self.ky**2 + self.kz**2
        self.k_mag = np.sqrt(self.k_sq)
        self.k_min_mag = scale  # smallest nonzero |k|
        self.k_max_mag = float(self.k_mag.max())
        absm = np.abs(modes)
        keep = absm <= self.dealias_cutoff
        self.dealias_mask = keep[:, None, None] & keep[None, :, None] & keep[None, None, :]
        x = np.arange(n) * (self.box_length / n)
        self.x1d = x
        self._frac_mult_cache: dict[float, np.ndarray] = {}

    def frac_mult(self, beta: float) -> np.ndarray:
        """Cached |k|^beta table with the k=0 entry fixed to 0 (1 for beta = 0)."""
        key = float(beta)
        if key not in self._frac_mult_cache:
            if key == 0.0:
                mult = np.ones_like(self.k_mag)
            else:
                with np.errstate(divide="ignore"):
                    mult = np.where(self.k_mag > 0.0, self.k_mag, 1.0) ** key
                mult[0, 0, 0] = 0.0
            self._frac_mult_cache[key] = mult
        return self._frac_mult_cache[key]

    def __eq__(self, other):
        return (isinstance(other, Grid3)
                and self.n_per_axis == other.n_per_axis
                and self.box_length == other.box_length
                and self.dealias_cutoff == other.dealias_cutoff)

    def __hash__(self):
        return hash((self.n_per_axis, self.box_length, self.dealias_cutoff))

    def __repr__(self):
        return (f"Grid3(n_per_axis={self.n_per_axis}, box_length={self.box_length!r}, "
                f"dealias_cutoff={self.dealias_cutoff!r})")

    def meshgrid(self):
        """Collocation coordinates (X, Y, Z), each shaped (n, n, n)."""
        return np.meshgrid(self.x1d, self.x1d, self.x1d, indexing="ij")


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise GridMismatchError(f"grid mismatch: {a.grid} vs {b.grid}")


@dataclass
class SpectralVectorField:
    """Three-component Fourier coefficient array indexed (component, kx, ky, kz)."""

    grid: Grid3
    coeffs: np.ndarray
    reality_flag: bool = True

    def __post_init__(self):
        n = self.grid.n_per_axis
        if self.coeffs.shape != (3, n, n, n):
            raise ValueError(f"coeffs must have shape (3, {n}, {n}, {n}), got {self.coeffs.shape}")
        if self.coeffs.dtype != np.complex128:
            self.coeffs = self.coeffs.astype(np.complex128)

    @classmethod
    def zeros(cls, grid: Grid3, reality_flag: bool = True) -> "SpectralVectorField":
        n = grid.n_per_axis
        return cls(grid, np.zeros((3, n, n, n), dtype=np.complex128), reality_flag)

    def copy(self) -> "SpectralVectorField":
        return SpectralVectorField(self.grid, self.coeffs.copy(), self.reality_flag)

    def __add__(self, other):
        _check_same_grid(self, other)
        return SpectralVectorField(self.grid, self.coeffs + other.coeffs,
                                   self.reality_flag and other.reality_flag)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return SpectralVectorField(self.grid, self.coeffs - other.coeffs,
                                   self.reality_flag and other.reality_flag)

    def __mul__(self, scalar: float):
        return SpectralVectorField(self.grid, self.coeffs * float(scalar), self.reality_flag)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralVectorField(self.grid, -self.coeffs, self.reality_flag)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def mean_mode(self) -> np.ndarray:
        return self.coeffs[:, 0, 0, 0]


@dataclass
class SpectralScalarField:
    """Scalar Fourier coefficient array on the same lattice."""

    grid: Grid3
    coeffs: np.ndarray
    reality_flag: bool = True

    def __post_init__(self):
        n = self.grid.n_per_axis
        if self.coeffs.shape != (n, n, n):
            raise ValueError(f"coeffs must have shape ({n}, {n}, {n}), got {self.coeffs.shape}")
        if self.coeffs.dtype != np.complex128:
            self.coeffs = self.coeffs.astype(np.complex128)

    def copy(self) -> "SpectralScalarField":
        return SpectralScalarField(self.grid, self.coeffs.copy(), self.reality_flag)

    def __add__(self, other):
        _check_same_grid(self, other)
        return SpectralScalarField(self.grid, self.coeffs + other.coeffs,
                                   self.reality_flag and other.reality_flag)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return SpectralScalarField(self.grid, self.coeffs - other.coeffs,
                                   self.reality_flag and other.reality_flag)

    def __mul__(self, scalar: float):
        return SpectralScalarField(self.grid, self.coeffs * float(scalar), self.reality_flag)

    __rmul__ = __mul__

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))


@dataclass
class PhysicalVectorField:
    """Collocation values of a real 3-component field, indexed (component, x, y, z)."""

    grid: Grid3
    values: np.ndarray

    def __post_init__(self):
        n = self.grid.n_per_axis
        if self.values.shape != (3, n, n, n):
            raise ValueError(f"values must have shape (3, {n}, {n}, {n}), got {self.values.shape}")

    def l2_norm(self) -> float:
        """Root mean square over collocation points; equals the spectral L2 norm."""
        return float(np.sqrt(np.mean(np.sum(self.values**2, axis=0))))


@dataclass
class PhysicalScalarField:
    grid: Grid3
    values: np.ndarray

    def __post_init__(self):
        n = self.grid.n_per_axis
        if self.values.shape != (n, n, n):
            raise ValueError(f"values must have shape ({n}, {n}, {n}), got {self.values.shape}")


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------

def _reflect(c: np.ndarray) -> np.ndarray:
    """Evaluate an array indexed by FFT modes at -k (the index map m -> -m mod n)."""
    axes = tuple(range(c.ndim - 3, c.ndim))
    out = c
    for ax in axes:
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return out


def hermitian_defect(F: SpectralVectorField | SpectralScalarField) -> float:
    """Max deviation of coeffs(-k) from conj(coeffs(k)), relative to the largest coefficient."""
    c = F.coeffs
    scale = float(np.max(np.abs(c)))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(_reflect(c) - np.conj(c)))) / scale


def forward_transform(f: PhysicalVectorField) -> SpectralVectorField:
    """Per-component DFT with forward 1/N^3 normalization; marks the result real-valued."""
    return SpectralVectorField(f.grid, _fftn(f.values), reality_flag=True)


def inverse_transform(F: SpectralVectorField, symmetry_tol: float = 1e-10,
                      check: bool = True) -> PhysicalVectorField:
    """Inverse DFT back to collocation values.

    When the field claims to represent a real-valued function, conjugate
    symmetry is verified first and the (tiny) imaginary residue discarded.
    check=False skips the verification for hot loops whose inputs are
    Hermitian by construction.
    """
    if check and F.reality_flag:
        defect = hermitian_defect(F)
        if defect > symmetry_tol:
            raise HermitianSymmetryError(
                f"Hermitian symmetry violated: relative defect {defect:.3e} > {symmetry_tol:.1e}")
    return PhysicalVectorField(F.grid, _ifftn(F.coeffs).real)


def scalar_forward_transform(f: PhysicalScalarField) -> SpectralScalarField:
    return SpectralScalarField(f.grid, _fftn(f.values), reality_flag=True)


def scalar_inverse_transform(F: SpectralScalarField, symmetry_tol: float = 1e-10,
                             check: bool = True) -> PhysicalScalarField:
    if check and F.reality_flag:
        defect = hermitian_defect(F)
        if defect > symmetry_tol:
            raise HermitianSymmetryError(
                f"Hermitian symmetry violated: relative defect {defect:.3e} > {symmetry_tol:.1e}")
    return PhysicalScalarField(F.grid, _ifftn(F.coeffs).real)


# ---------------------------------------------------------------------------
# Fourier multipliers
# ---------------------------------------------------------------------------

def _require_mean_free(F, what: str):
    c = F.coeffs
    mean = float(np.max(np.abs(c[..., 0, 0, 0])))
    scale = max(1.0, float(np.max(np.abs(c))))
    if mean > 1e-12 * scale:
        raise MeanModeError(f"{what} requires a zero mean mode, got |mean| = {mean:.3e}")


def fractional_laplacian_multiplier(grid: Grid3, beta: float) -> np.ndarray:
    """The array |k|^beta with the k=0 entry fixed to 0 (1 for beta = 0)."""
    return grid.frac_mult(beta)


def fractional_laplacian(F, beta: float):
    """Apply |k|^beta mode by mode.  beta < 0 demands a mean-free field."""
    if beta < 0:
        _require_mean_free(F, f"fractional power beta={beta}")
    if beta == 0.0:
        return F.copy()
    return type(F)(F.grid, F.coeffs * F.grid.frac_mult(beta), F.reality_flag)


def curl(F: SpectralVectorField) -> SpectralVectorField:
    """Coefficientwise i*k x F."""
    g = F.grid
    cx, cy, cz = F.coeffs[0], F.coeffs[1], F.coeffs[2]
    out = np.empty_like(F.coeffs)
    out[0] = 1j * (g.ky * cz - g.kz * cy)
    out[1] = 1j * (g.kz * cx - g.kx * cz)
    out[2] = 1j * (g.kx * cy - g.ky * cx)
    return SpectralVectorField(g, out, F.reality_flag)


def divergence(F: SpectralVectorField) -> SpectralScalarField:
    """Coefficientwise i*k . F."""
    g = F.grid
    coeffs = 1j * (g.kx * F.coeffs[0] + g.ky * F.coeffs[1] + g.kz * F.coeffs[2])
    return SpectralScalarField(g, coeffs, F.reality_flag)


def gradient(f: SpectralScalarField) -> SpectralVectorField:
    g = f.grid
    out = np.empty((3,) + f.coeffs.shape, dtype=np.complex128)
    out[0] = 1j * g.kx * f.coeffs
    out[1] = 1j * g.ky * f.coeffs
    out[2] = 1j * g.kz * f.coeffs
    return SpectralVectorField(g, out, f.reality_flag)


def leray_project(F: SpectralVectorField) -> SpectralVectorField:
    """Remove the gradient part: F - k (k.F)/|k|^2 for k != 0, mean mode untouched."""
    g = F.grid
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_ksq = np.where(g.k_sq > 0.0, 1.0 / g.k_sq, 0.0)
    kdotF = g.kx * F.coeffs[0] + g.ky * F.coeffs[1] + g.kz * F.coeffs[2]
    factor = kdotF * inv_ksq
    out = np.empty_like(F.coeffs)
    out[0] = F.coeffs[0] - g.kx * factor
    out[1] = F.coeffs[1] - g.ky * factor
    out[2] = F.coeffs[2] - g.kz * factor
    return SpectralVectorField(g, out, F.reality_flag)


def dealias(F):
    """Zero every coefficient with any axis index beyond the grid's dealias cutoff."""
    coeffs = F.coeffs * F.grid.dealias_mask
    return type(F)(F.grid, coeffs, F.reality_flag)


def support_radius(F) -> int:
    """Largest per-axis |mode index| carrying a nonzero coefficient (0 for the zero field)."""
    c = np.abs(F.coeffs)
    if c.ndim == 4:
        c = c.sum(axis=0)
    nz = c > 0.0
    if not nz.any():
        return 0
    absm = np.abs(F.grid.modes_1d).astype(int)
    r = 0
    for ax in range(3):
        other = tuple(a for a in range(3) if a != ax)
        line = nz.any(axis=other)
        r = max(r, int(absm[line].max()))
    return r


# ---------------------------------------------------------------------------
# products and inner products
# ---------------------------------------------------------------------------

def cross_product(F: PhysicalVectorField, G: PhysicalVectorField) -> PhysicalVectorField:
    """Pointwise 3D cross product."""
    _check_same_grid(F, G)
    a, b = F.values, G.values
    out = np.empty_like(a)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return PhysicalVectorField(F.grid, out)


def dealiased_cross(F: SpectralVectorField, G: SpectralVectorField) -> SpectralVectorField:
    """Pseudospectral cross product: transform, multiply pointwise, transform back, dealias."""
    _check_same_grid(F, G)
    f = inverse_transform(F)
    g = inverse_transform(G)
    return dealias(forward_transform(cross_product(f, g)))


def dealiased_scalar_product(f: SpectralScalarField, g: SpectralScalarField) -> SpectralScalarField:
    _check_same_grid(f, g)
    a = scalar_inverse_transform(f)
    b = scalar_inverse_transform(g)
    prod = PhysicalScalarField(f.grid, a.values * b.values)
    return dealias(scalar_forward_transform(prod))


def dealiased_dot(F: SpectralVectorField, G: SpectralVectorField) -> SpectralScalarField:
    _check_same_grid(F, G)
    f = inverse_transform(F)
    g = inverse_transform(G)
    prod = PhysicalScalarField(F.grid, np.sum(f.values * g.values, axis=0))
    return dealias(scalar_forward_transform(prod))


def l2_inner(F, G) -> float:
    """Real L2 inner product from coefficients (Parseval pairing)."""
    _check_same_grid(F, G)
    return float(np.real(np.sum(F.coeffs * np.conj(G.coeffs))))


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def sobolev_norm(F, sigma: float) -> float:
    """Homogeneous Sobolev norm (sum_k |k|^{2 sigma} |coeff|^2)^{1/2} over the lattice.

    sigma = 0 is the plain L2 norm (mean mode included); negative sigma
    requires a mean-free field.
    """
    if sigma == 0.0:
        return float(np.sqrt(np.sum(np.abs(F.coeffs) ** 2)))
    if sigma < 0:
        _require_mean_free(F, f"Sobolev norm of order {sigma}")
    w2 = F.grid.frac_mult(2.0 * sigma)
    return float(np.sqrt(np.sum(w2 * np.abs(F.coeffs) ** 2)))


def lp_norm(values: np.ndarray, p: float) -> float:
    """Mean-normalized L^p norm of pointwise magnitudes; p = inf gives the max."""
    mag = values
    if np.isinf(p):
        return float(np.max(mag))
    return float(np.mean(mag**p) ** (1.0 / p))
