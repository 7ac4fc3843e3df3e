"""Dyadic frequency-shell machinery: smooth cutoffs, shell projections, paraproducts.

The shell decomposition splits a field into pieces supported on frequency
rings |k| ~ 2^j via a smooth radial cutoff.  The cutoff profile chi is 1 on
[0, 3/4], 0 on [1, inf), and in between follows the integral of the standard
bump exp(-1/(t(1-t))) rescaled to [3/4, 1] so that every implementation of
this recipe produces the same numbers.  The ring function phi(x) =
chi(x/2) - chi(x) then tiles frequency space: sums over j telescope exactly,
which is what makes the partition-of-unity and reconstruction checks hold to
near machine precision rather than merely approximately.

Also here: the three-term low/high frequency product decomposition (Bony
splitting), the two commutators used to exhibit derivative gain in the
quadratic term, Bernstein-ratio checks for ring-supported fields, and the
shell-equivalent Sobolev norm.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import csv
import math

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline

from .spectral import (
    Grid3,
    SpectralScalarField,
    SpectralVectorField,
    _check_same_grid,
    curl,
    dealiased_cross,
    dealiased_dot,
    dealiased_scalar_product,
    inverse_transform,
    lp_norm,
    support_radius,
)


class ResolutionError(ValueError):
    """The grid cannot hold the product band without aliasing into retained modes."""


class ShellSupportError(ValueError):
    """Input not supported on the required frequency ring."""


class BernsteinBracketError(AssertionError):
    """A Bernstein ratio fell outside the fixed sanity bracket [1/8, 8]."""


# ---------------------------------------------------------------------------
# cutoff profile
# ---------------------------------------------------------------------------

_SMOOTHSTEP_NODES = 4097
_smoothstep_spline = None


def _smoothstep():
    """Normalized integral of exp(-1/(t(1-t))) on [0,1]: 0 -> 1, flat at both ends.

    Tabulated once on a uniform grid (trapezoid sums converge beyond any
    polynomial order for this bump since all derivatives vanish at the ends)
    and interpolated with a clamped cubic spline; evaluation is deterministic.
    """
    global _smoothstep_spline
    if _smoothstep_spline is None:
        t = np.linspace(0.0, 1.0, _SMOOTHSTEP_NODES)
        inner = t * (1.0 - t)
        with np.errstate(divide="ignore", over="ignore"):
            bump = np.where(inner > 0.0, np.exp(-1.0 / np.where(inner > 0.0, inner, 1.0)), 0.0)
        ramp = cumulative_trapezoid(bump, t, initial=0.0)
        ramp /= ramp[-1]
        _smoothstep_spline = CubicSpline(t, ramp, bc_type="clamped")
    return _smoothstep_spline


_PLATEAU = 0.75  # chi is identically 1 up to here
_SUPPORT = 1.0   # and identically 0 from here on


def chi_eval(xi_mag):
    """Radial cutoff: 1 for |xi| <= 3/4, 0 for |xi| >= 1, smooth monotone between."""
    x = np.asarray(xi_mag, dtype=np.float64)
    out = np.ones_like(x)
    out[x >= _SUPPORT] = 0.0
    trans = (x > _PLATEAU) & (x < _SUPPORT)
    if np.any(trans):
        s = _smoothstep()((x[trans] - _PLATEAU) / (_SUPPORT - _PLATEAU))
        out[trans] = 1.0 - s
    if np.isscalar(xi_mag) or np.ndim(xi_mag) == 0:
        return float(out)
    return out


def phi_eval(xi_mag):
    """Ring function chi(xi/2) - chi(xi): nonnegative, supported in 3/4 <= |xi| <= 2."""
    x = np.asarray(xi_mag, dtype=np.float64)
    out = chi_eval(x / 2.0) - chi_eval(x)
    return out


@dataclass(frozen=True)
class CutoffProfile:
    """Handle bundling the cutoff pair for callers that want an object, not functions."""

    chi = staticmethod(chi_eval)
    phi = staticmethod(phi_eval)


def shell_range(grid: Grid3) -> tuple[int, int]:
    """Dyadic indices that can carry energy on this lattice.

    j below the range has its ring entirely under the smallest nonzero |k|;
    j above has it beyond the largest.  Sums over [j_min, j_max] telescope to
    exactly 1 on every nonzero lattice mode.
    """
    j_min = math.floor(math.log2(grid.k_min_mag)) - 1
    j_max = math.ceil(math.log2(grid.k_max_mag)) + 1
    return j_min, j_max


def _shell_multiplier(grid: Grid3, j: int) -> np.ndarray:
    cache = getattr(grid, "_shell_mult_cache", None)
    if cache is None:
        cache = {}
        grid._shell_mult_cache = cache
    if j not in cache:
        cache[j] = phi_eval(grid.k_mag * 2.0**(-j))
    return cache[j]


def _lowpass_multiplier(grid: Grid3, j: int) -> np.ndarray:
    """Sum of ring multipliers up to j, telescoped to chi(2^{-(j+1)} |k|).

    chi(0) = 1, so the mean mode rides along: that makes the telescoping
    identity low_pass(F, j) + sum_{i > j} shell_i(F) = F exact for every
    field, and products against constants decompose the way they should.
    """
    cache = getattr(grid, "_lowpass_mult_cache", None)
    if cache is None:
        cache = {}
        grid._lowpass_mult_cache = cache
    if j not in cache:
        cache[j] = chi_eval(grid.k_mag * 2.0**(-(j + 1)))
    return cache[j]


def lp_project(F, j: int):
    """Shell projection: multiply coefficients by phi(2^{-j} |k|)."""
    coeffs = F.coeffs * _shell_multiplier(F.grid, j)
    return type(F)(F.grid, coeffs, F.reality_flag)


def low_pass(F, j: int):
    """Partial sum of shells up to j, in telescoped closed form (mean mode kept)."""
    coeffs = F.coeffs * _lowpass_multiplier(F.grid, j)
    return type(F)(F.grid, coeffs, F.reality_flag)


def tilde_block(F, j: int):
    """Sum of the three adjacent shells j-1, j, j+1; covers shell j's support."""
    mult = (_shell_multiplier(F.grid, j - 1) + _shell_multiplier(F.grid, j)
            + _shell_multiplier(F.grid, j + 1))
    return type(F)(F.grid, F.coeffs * mult, F.reality_flag)


def reconstruct(F):
    """Sum of all shells: equals F minus its mean mode, up to cutoff roundoff."""
    j_min, j_max = shell_range(F.grid)
    total = np.zeros_like(F.coeffs)
    for j in range(j_min, j_max + 1):
        total = total + F.coeffs * _shell_multiplier(F.grid, j)
    return type(F)(F.grid, total, F.reality_flag)


# ---------------------------------------------------------------------------
# shell spectrum
# ---------------------------------------------------------------------------

@dataclass
class ShellSpectrum:
    """Per-shell squared L2 masses of a field's dyadic pieces."""

    j_min: int
    j_max: int
    masses: np.ndarray = field(repr=False)

    def __post_init__(self):
        if len(self.masses) != self.j_max - self.j_min + 1:
            raise ValueError("masses length inconsistent with j range")
        if np.any(np.asarray(self.masses) < 0):
            raise ValueError("shell masses must be nonnegative")

    @property
    def js(self) -> np.ndarray:
        return np.arange(self.j_min, self.j_max + 1)

    def weighted_masses(self, sigma: float) -> np.ndarray:
        return self.masses * 4.0 ** (sigma * self.js)

    def total_mass(self) -> float:
        return float(np.sum(self.masses))


def shell_spectrum(F) -> ShellSpectrum:
    j_min, j_max = shell_range(F.grid)
    masses = np.array([lp_project(F, j).l2_norm() ** 2 for j in range(j_min, j_max + 1)])
    return ShellSpectrum(j_min, j_max, masses)


def write_shell_csv(spec: ShellSpectrum, path, sigma: float = 0.0):
    """Columns (j, mass, sobolev_weighted_mass), one row per shell."""
    weighted = spec.weighted_masses(sigma)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["j", "mass", "sobolev_weighted_mass"])
        for j, m, w in zip(spec.js, spec.masses, weighted):
            writer.writerow([int(j), repr(float(m)), repr(float(w))])


def read_shell_csv(path) -> tuple[ShellSpectrum, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    js = [int(r[0]) for r in rows[1:]]
    masses = np.array([float(r[1]) for r in rows[1:]])
    weighted = np.array([float(r[2]) for r in rows[1:]])
    return ShellSpectrum(js[0], js[-1], masses), weighted


# ---------------------------------------------------------------------------
# products: Bony splitting and commutators
# ---------------------------------------------------------------------------

def _product_fn(u, v, kind: str):
    if isinstance(u, SpectralScalarField) and isinstance(v, SpectralScalarField):
        if kind not in ("auto", "mul"):
            raise ValueError(f"product kind {kind!r} undefined for scalar fields")
        return dealiased_scalar_product
    if isinstance(u, SpectralVectorField) and isinstance(v, SpectralVectorField):
        if kind in ("auto", "cross"):
            return dealiased_cross
        if kind == "dot":
            return dealiased_dot
        raise ValueError(f"product kind {kind!r} undefined for vector fields")
    raise TypeError("operands must both be scalar or both vector spectral fields")


def _check_product_resolution(u, v):
    g = u.grid
    su, sv = support_radius(u), support_radius(v)
    if su + sv > g.n_per_axis - math.floor(g.dealias_cutoff):
        raise ResolutionError(
            f"product band {su}+{sv} aliases into retained modes on n={g.n_per_axis} "
            f"(cutoff {g.dealias_cutoff})")


def bony_decompose(u, v, j: int, product: str = "auto"):
    """Split the j-th shell of a product into (low_high, high_low, high_high).

    low_high pairs low modes of u against shell-k of v for k within 2 of j,
    high_low is the mirror image, and high_high pairs comparable shells of
    both factors for k >= j - 2.  The three pieces sum to the j-th shell of
    the full product exactly when the factors fit the grid's product band.
    """
    _check_same_grid(u, v)
    _check_product_resolution(u, v)
    prod = _product_fn(u, v, product)
    g = u.grid
    _, j_max = shell_range(g)
    if prod is dealiased_dot or isinstance(u, SpectralScalarField):
        zero = SpectralScalarField(g, np.zeros((g.n_per_axis,) * 3, dtype=np.complex128))
    else:
        zero = SpectralVectorField.zeros(g)
    low_high = zero
    high_low = zero
    for k in range(j - 2, j + 3):
        lo_u = low_pass(u, k - 2)
        lo_v = low_pass(v, k - 2)
        low_high = low_high + lp_project(prod(lo_u, lp_project(v, k)), j)
        high_low = high_low + lp_project(prod(lp_project(u, k), lo_v), j)
    high_high = zero
    for k in range(j - 2, j_max + 1):
        high_high = high_high + lp_project(prod(tilde_block(u, k), lp_project(v, k)), j)
    return low_high, high_low, high_high


def commutator_curl(g_field: SpectralVectorField, f_field: SpectralVectorField, j: int,
                    gevrey=None) -> SpectralVectorField:
    """Shell-projection/cross-with-curl commutator, evaluated literally.

    Returns P(g x curl f) - g x curl(P f) where P is the j-th shell
    projection, optionally composed with a Gevrey weight.  Both products are
    dealiased pseudospectral cross products.
    """
    _check_same_grid(g_field, f_field)
    _check_product_resolution(g_field, f_field)

    def project(X):
        Y = lp_project(X, j)
        if gevrey is not None:
            from .gevrey import gevrey_apply
            Y = gevrey_apply(Y, gevrey)
        return Y

    whole = project(dealiased_cross(g_field, curl(f_field)))
    piecewise = dealiased_cross(g_field, curl(project(f_field)))
    return whole - piecewise


def commutator_scalar(g_field: SpectralScalarField, f_field: SpectralScalarField,
                      j: int) -> SpectralScalarField:
    """Shell-projection/multiplication commutator for scalar fields."""
    _check_same_grid(g_field, f_field)
    _check_product_resolution(g_field, f_field)
    whole = lp_project(dealiased_scalar_product(g_field, f_field), j)
    piecewise = dealiased_scalar_product(g_field, lp_project(f_field, j))
    return whole - piecewise


def commutator_curl_gain(g_field: SpectralVectorField, f_field: SpectralVectorField,
                         j: int) -> float:
    """Fitted constant in the one-derivative gain of the curl commutator.

    Ratio of the commutator's L2 norm to 2^{-j} * max|grad g| * ||curl f||_L2;
    the derivative falls on the low factor, so the ratio stays O(1) while the
    naive product bound grows like 2^j.
    """
    comm = commutator_curl(g_field, f_field, j)
    num = comm.l2_norm()
    grad_mag = _max_gradient_magnitude(g_field)
    den = 2.0 ** (-j) * grad_mag * curl(f_field).l2_norm()
    if den == 0.0:
        return 0.0
    return num / den


def _max_gradient_magnitude(F: SpectralVectorField) -> float:
    """Pointwise sup of the Frobenius norm of grad F, via spectral derivatives."""
    g = F.grid
    total = np.zeros((g.n_per_axis,) * 3)
    for kaxis, kmul in ((0, g.kx), (1, g.ky), (2, g.kz)):
        dF = SpectralVectorField(g, 1j * kmul * F.coeffs, F.reality_flag)
        total += np.sum(inverse_transform(dF).values ** 2, axis=0)
    return float(np.sqrt(total.max()))


# ---------------------------------------------------------------------------
# norms and Bernstein ratios
# ---------------------------------------------------------------------------

def dyadic_sobolev_norm(F, sigma: float) -> float:
    """Shell-equivalent Sobolev norm (sum_j 4^{sigma j} ||shell_j||^2)^{1/2}."""
    spec = shell_spectrum(F)
    return float(np.sqrt(np.sum(spec.weighted_masses(sigma))))


def bernstein_check(F: SpectralVectorField, j: int, p: float, q: float) -> dict:
    """Bernstein ratios for a field supported on the ring of shell j.

    Returns the derivative ratio ||grad F||_p / (2^j ||F||_p) and the
    embedding ratio ||F||_q / (2^{3 (1/p - 1/q) j} ||F||_p), and asserts both
    lie in [1/8, 8].  Requires 1 <= p < q <= inf and ring support.
    """
    if not (1 <= p < q):
        raise ValueError("need 1 <= p < q")
    mult = _shell_multiplier(F.grid, j)
    outside = (mult == 0.0)
    if float(np.max(np.abs(F.coeffs[:, outside]))) > 1e-13 * max(1.0, F.l2_norm()):
        raise ShellSupportError(f"field carries coefficients outside shell {j}")
    if F.l2_norm() == 0.0:
        raise ShellSupportError("zero field has no Bernstein ratios")

    vals = inverse_transform(F).values
    mag = np.sqrt(np.sum(vals**2, axis=0))
    g = F.grid
    grad_sq = np.zeros_like(mag)
    for kmul in (g.kx, g.ky, g.kz):
        dF = SpectralVectorField(g, 1j * kmul * F.coeffs, F.reality_flag)
        grad_sq += np.sum(inverse_transform(dF).values ** 2, axis=0)
    grad_mag = np.sqrt(grad_sq)

    ratio_grad = lp_norm(grad_mag, p) / (2.0**j * lp_norm(mag, p))
    inv_q = 0.0 if np.isinf(q) else 1.0 / q
    gain = 2.0 ** (3.0 * (1.0 / p - inv_q) * j)
    ratio_embed = lp_norm(mag, q) / (gain * lp_norm(mag, p))

    result = {"ratio_gradient": ratio_grad, "ratio_embedding": ratio_embed}
    for name, r in result.items():
        if not (1.0 / 8.0 <= r <= 8.0):
            raise BernsteinBracketError(f"{name} = {r:.4g} outside [1/8, 8] at j={j}, p={p}, q={q}")
    return result
