"""The generalized electron-MHD model: parameters, admissibility, and the right-hand side.

The evolution is

    dB/dt = -mu * Lambda^kappa B - eps_visc * Lambda^4 B - curl( (curl Lambda^{-s} B) x q ),

self-coupled when q = B and linearized when q is a frozen trajectory.  The
scaling symmetry of the self-coupled equation pins the critical Sobolev
exponent sigma_c = 3.5 - s - kappa; local well-posedness holds for
-1/2 < s < 1/2 and 2 - 2s < kappa < 2.5 - s, while a wider supercritical
band 1 < kappa < 2 is of independent interest, so admissibility is labeled
rather than enforced.

The quadratic term is evaluated pseudospectrally (transform, pointwise cross
product, transform back) with 2/3-rule dealiasing: O(N^3 log N) instead of
the O(N^6) direct convolution.  Its output is a curl, hence exactly
divergence- and mean-free, and it annihilates Lambda^{-s} B in the L2
pairing, the cancellation behind the energy inequality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import (
    SpectralVectorField,
    _check_same_grid,
    _fftn,
    _ifftn,
    _require_mean_free,
    fractional_laplacian,
)


@dataclass(frozen=True)
class ModelParams:
    """Nonlocality exponent s, dissipation order kappa, resistivity mu, optional hyperviscosity."""

    s: float
    kappa: float
    mu: float = 1.0
    eps_visc: float = 0.0

    def __post_init__(self):
        if self.kappa <= 0.0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.mu <= 0.0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if self.eps_visc < 0.0:
            raise ValueError(f"eps_visc must be nonnegative, got {self.eps_visc}")

    @property
    def sigma_c(self) -> float:
        return 3.5 - self.s - self.kappa

    @property
    def theorem_admissible(self) -> bool:
        return (-0.5 < self.s < 0.5) and (2.0 - 2.0 * self.s < self.kappa < 2.5 - self.s)


def critical_exponent(p: ModelParams) -> float:
    """Scaling-critical homogeneous Sobolev exponent 3.5 - s - kappa."""
    return p.sigma_c


def check_admissible(p: ModelParams) -> str:
    """Label the parameter point: 'theorem_range', 'intro_range_only', or 'outside'.

    Never rejects; exploratory sweeps deliberately cross both boundaries.
    """
    if p.theorem_admissible:
        return "theorem_range"
    if 1.0 < p.kappa < 2.0:
        return "intro_range_only"
    return "outside"


def hall_nonlinearity(B: SpectralVectorField, q: SpectralVectorField,
                      p: ModelParams) -> SpectralVectorField:
    """The quadratic term -curl( (curl Lambda^{-s} B) x q ).

    B and q must share a grid and be mean-free (Lambda^{-s} with s > 0 is
    undefined on the mean).  The result is a curl of a dealiased product:
    exactly mean-free and divergence-free to rounding.
    """
    _check_same_grid(B, q)
    g = B.grid
    if p.s > 0.0:
        _require_mean_free(B, f"nonlocal current with s={p.s}")
    bc = B.coeffs if p.s == 0.0 else B.coeffs * g.frac_mult(-p.s)
    jc = np.empty_like(B.coeffs)
    jc[0] = 1j * (g.ky * bc[2] - g.kz * bc[1])
    jc[1] = 1j * (g.kz * bc[0] - g.kx * bc[2])
    jc[2] = 1j * (g.kx * bc[1] - g.ky * bc[0])
    jv = _ifftn(jc).real
    qv = _ifftn(q.coeffs).real
    w = np.empty_like(jv)
    w[0] = jv[1] * qv[2] - jv[2] * qv[1]
    w[1] = jv[2] * qv[0] - jv[0] * qv[2]
    w[2] = jv[0] * qv[1] - jv[1] * qv[0]
    wc = _fftn(w)
    wc *= g.dealias_mask
    out = np.empty_like(wc)
    out[0] = -1j * (g.ky * wc[2] - g.kz * wc[1])
    out[1] = -1j * (g.kz * wc[0] - g.kx * wc[2])
    out[2] = -1j * (g.kx * wc[1] - g.ky * wc[0])
    return SpectralVectorField(g, out, B.reality_flag and q.reality_flag)


def rhs(B: SpectralVectorField, q: SpectralVectorField, p: ModelParams) -> SpectralVectorField:
    """Full right-hand side: dissipation, optional hyperviscosity, Hall term."""
    out = hall_nonlinearity(B, q, p)
    out = out - p.mu * fractional_laplacian(B, p.kappa)
    if p.eps_visc > 0.0:
        out = out - p.eps_visc * fractional_laplacian(B, 4.0)
    return out
