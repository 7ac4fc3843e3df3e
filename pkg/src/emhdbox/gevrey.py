"""Gevrey-class multipliers: exponential frequency weights and their averaged variant.

A field is Gevrey-regular of order alpha with radius lambda when its
coefficients survive multiplication by exp(lambda |k|^alpha); alpha = 1 is
real analyticity and lambda the analyticity radius.  The averaged operator
(integral over tau in [0,1] of exp(lambda tau |k|^alpha)) shows up when
differentiating the weight in time; its multiplier is (e^z - 1)/z with
z = lambda |k|^alpha, computed with a short series for small z to dodge
cancellation.

Weights grow fast, so every application is guarded: lambda * k_max^alpha
beyond 600 is rejected up front (double-precision exp overflows near 709)
rather than silently producing infs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import fractional_laplacian_multiplier, sobolev_norm

OVERFLOW_GUARD = 600.0


class RadiusError(ValueError):
    """Requested radius would overflow the exponential weight on this lattice."""


@dataclass(frozen=True)
class GevreyParams:
    """Order alpha in (0, 1], radius lam >= 0, and the rate used for lam(t) = rate * t^{alpha/kappa}."""

    alpha: float = 1.0
    lam: float = 0.0
    epsilon_rate: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.lam < 0.0:
            raise ValueError(f"radius must be nonnegative, got {self.lam}")
        if self.epsilon_rate <= 0.0:
            raise ValueError(f"epsilon_rate must be positive, got {self.epsilon_rate}")

    def at_time(self, t: float, kappa: float) -> "GevreyParams":
        """Radius along the smoothing schedule lam(t) = rate * t^{alpha/kappa}."""
        lam = self.epsilon_rate * t ** (self.alpha / kappa)
        return GevreyParams(self.alpha, lam, self.epsilon_rate)


def _guard(grid, p: GevreyParams):
    top = p.lam * grid.k_max_mag**p.alpha
    if top > OVERFLOW_GUARD:
        raise RadiusError(
            f"lambda * k_max^alpha = {top:.3g} exceeds the overflow guard {OVERFLOW_GUARD}")


def gevrey_multiplier(grid, p: GevreyParams) -> np.ndarray:
    _guard(grid, p)
    return np.exp(p.lam * fractional_laplacian_multiplier(grid, p.alpha))


def e_multiplier(grid, p: GevreyParams) -> np.ndarray:
    """Averaged weight (e^z - 1)/z at z = lam |k|^alpha, with z = 0 mapping to 1."""
    _guard(grid, p)
    z = p.lam * fractional_laplacian_multiplier(grid, p.alpha)
    out = np.ones_like(z)
    small = (z > 0.0) & (z < 1e-4)
    big = z >= 1e-4
    zs = z[small]
    # (e^z - 1)/z = 1 + z/2 + z^2/6 + z^3/24 + z^4/120 + z^5/720
    out[small] = 1.0 + zs / 2.0 + zs**2 / 6.0 + zs**3 / 24.0 + zs**4 / 120.0 + zs**5 / 720.0
    out[big] = np.expm1(z[big]) / z[big]
    return out


def gevrey_apply(F, p: GevreyParams):
    """Multiply coefficients by exp(lam |k|^alpha)."""
    if p.lam == 0.0:
        return F.copy()
    mult = gevrey_multiplier(F.grid, p)
    return type(F)(F.grid, F.coeffs * mult, F.reality_flag)


def e_operator_apply(F, p: GevreyParams):
    """Multiply coefficients by the averaged weight; the identity at lam = 0."""
    if p.lam == 0.0:
        return F.copy()
    mult = e_multiplier(F.grid, p)
    return type(F)(F.grid, F.coeffs * mult, F.reality_flag)


def gevrey_norm(F, p: GevreyParams, sigma: float) -> float:
    """Sobolev norm of the exponentially weighted field."""
    return sobolev_norm(gevrey_apply(F, p), sigma)


def derivative_bound_check(F, p: GevreyParams, sigma: float, beta: tuple[int, int, int],
                           slack: float = 1e-10) -> bool:
    """Check the factorial derivative bound implied by a finite Gevrey norm.

    Evaluates || d^beta F ||_{H^sigma} against
    (beta! / (lam * alpha)^{|beta|})^{1/alpha} times the Gevrey norm on the
    lattice and reports whether the inequality holds up to a small slack.
    """
    if p.lam <= 0.0:
        raise ValueError("derivative bound needs a positive radius")
    g = F.grid
    mult = np.ones_like(g.k_mag)
    for power, karr in zip(beta, (g.kx, g.ky, g.kz)):
        if power:
            mult = mult * np.abs(karr) ** power
    dF = type(F)(g, F.coeffs * mult, F.reality_flag)
    lhs = sobolev_norm(dF, sigma)
    fact = math.factorial(beta[0]) * math.factorial(beta[1]) * math.factorial(beta[2])
    order = beta[0] + beta[1] + beta[2]
    const = (fact / (p.lam * p.alpha) ** order) ** (1.0 / p.alpha)
    rhs = const * gevrey_norm(F, p, sigma)
    return lhs <= rhs * (1.0 + slack) + slack
