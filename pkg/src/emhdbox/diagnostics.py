"""Measurements that put the theory's verifiable claims against simulation output.

Each diagnostic turns a statement about the continuum flow into a property of
recorded norm series or snapshots:

* energy_balance: the discrete residual of d/dt ||B||^2 + 2 mu ||B||^2_{H^{kappa/2}},
  which at s = 0 is pure time-discretization error and shrinks at the
  integrator's order;
* gevrey_radius_fit / gevrey_rate_check: the analyticity radius read off the
  exponential tail of shell amplitudes, which should grow like t^{alpha/kappa}
  from rough data;
* decay_fit: algebraic decay exponents of derivative norms on the window
  before the box's lowest mode forces exponential decay (the lattice has a
  spectral gap, so power-law fits are only honest on t <= 0.2/mu);
* scaling_symmetry_check: two runs related by the equation's exact dilation
  symmetry, compared after mapping one lattice onto the other;
* stability_check: perturbation growth against the Gronwall envelope, plus
  linear-response scaling in the perturbation size;
* smallness_sweep: amplitude scan recording boundedness of the critical norm
  and contraction of the successive-substitution iteration.

All diagnostics are pure post-processing over immutable records.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dynamics import ModelParams
from .gevrey import GevreyParams, gevrey_norm
from .initial_data import random_band
from .littlewood_paley import ResolutionError, lp_project, shell_range, shell_spectrum
from .records import RunRecord, TrajectorySeries
from .solvers import (
    BlowUpError,
    PicardConfig,
    PicardDivergenceError,
    StepperConfig,
    evolve,
    picard_solve,
)
from .spectral import Grid3, SpectralVectorField, sobolev_norm, support_radius

SPECTRAL_GAP_WINDOW = 0.2  # t <= this / mu keeps power-law fits ahead of the k=1 exponential


class FitError(ValueError):
    """Not enough usable shells or samples for a least-squares fit."""


class WindowError(ValueError):
    """Requested fit window violates the spectral-gap rule or holds too little data."""


class InsufficientDataError(ValueError):
    """Record does not carry what the diagnostic needs."""


def _linfit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares line y ~ a + b x; returns (slope, intercept, r_squared)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    if sxx == 0.0:
        raise FitError("degenerate abscissa in fit")
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    ss_res = float(np.sum((y - slope * x - intercept) ** 2))
    ss_tot = float(np.sum((y - ym) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return slope, intercept, r2


# ---------------------------------------------------------------------------
# energy balance
# ---------------------------------------------------------------------------

def energy_balance(record: RunRecord, p: ModelParams, tolerance: float = 1e-6) -> dict:
    """Discrete residual of the energy law, interval by interval.

    Uses the trapezoid average of the dissipation so the residual carries the
    quadrature's second-order error, not a first-order endpoint bias.  At
    s = 0 the continuum residual vanishes identically and PASS/FAIL against
    the tolerance is meaningful; for s != 0 only the sign profile is
    reported.
    """
    if len(record.times) < 3:
        raise InsufficientDataError(f"need at least 3 snapshots, got {len(record.times)}")
    t = np.asarray(record.times)
    energy = np.asarray(record.series["l2"]) ** 2
    dissip = np.asarray(record.series["hs_half_kappa"]) ** 2
    dt = np.diff(t)
    residual = np.diff(energy) / dt + p.mu * (dissip[:-1] + dissip[1:])
    max_pos = float(np.max(residual.clip(min=0.0)))
    report = {
        "s": p.s,
        "max_positive_excursion": max_pos,
        "min_excursion": float(residual.min()),
        "fraction_positive": float(np.mean(residual > 0.0)),
        "tolerance": tolerance,
        "passed": bool(max_pos <= tolerance) if p.s == 0.0 else None,
    }
    return report


# ---------------------------------------------------------------------------
# analyticity-radius estimation
# ---------------------------------------------------------------------------

def _shell_amplitudes(snapshot: SpectralVectorField) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    j_min, j_max = shell_range(snapshot.grid)
    js, amps, masses = [], [], []
    for j in range(j_min, j_max + 1):
        piece = lp_project(snapshot, j)
        mass = piece.l2_norm() ** 2
        amp = float(np.max(np.abs(piece.coeffs)))
        js.append(j)
        amps.append(amp)
        masses.append(mass)
    return np.array(js), np.array(amps), np.array(masses)


def gevrey_radius_fit(snapshot: SpectralVectorField, alpha: float,
                      mass_floor: float = 1e-24, exclude_top: int = 2,
                      min_shells: int = 4) -> tuple[float, float]:
    """Fit log(shell amplitude) against -(2^j)^alpha; the slope is the radius.

    Shell amplitudes are the max coefficient magnitude per dyadic piece (the
    slowest-decaying direction sets the radius, so masses would blur it).
    Shells below the mass floor are out, as are the top two retained shells,
    which sit against the dealiasing boundary.
    """
    js, amps, masses = _shell_amplitudes(snapshot)
    eligible = (masses > mass_floor) & (amps > 0.0)
    js, amps = js[eligible], amps[eligible]
    if exclude_top > 0 and len(js) > exclude_top:
        js, amps = js[:-exclude_top], amps[:-exclude_top]
    if len(js) < min_shells:
        raise FitError(f"only {len(js)} usable shells, need {min_shells}")
    x = -((2.0**js) ** alpha)
    y = np.log(amps)
    slope, _intercept, r2 = _linfit(x, y)
    return max(slope, 0.0), r2


@dataclass
class GevreyFit:
    """Fitted radius per snapshot time, and the quality of each fit."""

    times: np.ndarray
    lambda_hat: np.ndarray
    alpha: float
    fit_band: tuple[int, int]
    r_squared: np.ndarray


def gevrey_rate_check(record: RunRecord, p: ModelParams, alpha: float,
                      delta: float = 0.01, window: tuple[float, float] | None = None) -> dict:
    """Fit the radius along a run and compare its growth law with t^{alpha/kappa}.

    Reports whether lambda_hat is increasing, the log-log slope over the
    window, and the early-time ratio lambda_hat(t1)/lambda_hat(t_end); single-
    shell (or otherwise unfittable) spectra come back marked not applicable.
    """
    if record.snapshots is None or len(record.snapshots) < 3:
        raise InsufficientDataError("record carries no snapshot fields to fit")
    times, fits, r2s = [], [], []
    for t, F in zip(record.snapshots.times, record.snapshots.fields):
        if t <= 0.0:
            continue
        if window is not None and not (window[0] <= t <= window[1]):
            continue
        try:
            lam, r2 = gevrey_radius_fit(F, alpha)
        except FitError:
            continue
        times.append(float(t))
        fits.append(lam)
        r2s.append(r2)
    if len(times) < 3:
        return {"applicable": False, "reason": "fewer than 3 fittable snapshots (degenerate spectrum)"}
    times_a = np.array(times)
    lam_a = np.array(fits)
    increasing = bool(np.all(np.diff(lam_a) > 0.0))
    positive = lam_a > 0.0
    if positive.sum() >= 3:
        slope, _b, _r2 = _linfit(np.log(times_a[positive]), np.log(lam_a[positive]))
    else:
        slope = float("nan")
    report = {
        "applicable": True,
        "times": times,
        "lambda_hats": fits,
        "r_squared": r2s,
        "increasing": increasing,
        "loglog_slope": slope,
        "expected_slope": alpha / p.kappa,
        "early_to_late_ratio": float(lam_a[0] / lam_a[-1]) if lam_a[-1] > 0 else float("inf"),
        "delta": delta,
    }
    return report


@dataclass
class XTNorm:
    """Sup over snapshots of t^{delta/kappa} times the radius-weighted Sobolev norm."""

    value: float
    time_of_sup: float


def xt_norm(record: RunRecord, p: ModelParams, alpha: float, delta: float,
            eps_rate: float) -> XTNorm:
    """Weighted sup norm with the radius schedule lam(t) = eps_rate * t^{alpha/kappa}."""
    if record.snapshots is None:
        raise InsufficientDataError("record carries no snapshot fields")
    best, best_t = 0.0, 0.0
    gparams = GevreyParams(alpha=alpha, epsilon_rate=eps_rate)
    sigma = p.sigma_c + delta
    found = False
    for t, F in zip(record.snapshots.times, record.snapshots.fields):
        if t <= 0.0:
            continue
        found = True
        weighted = t ** (delta / p.kappa) * gevrey_norm(F, gparams.at_time(t, p.kappa), sigma)
        if weighted >= best:
            best, best_t = weighted, float(t)
    if not found:
        raise InsufficientDataError("all snapshots are at t = 0")
    return XTNorm(value=best, time_of_sup=best_t)


# ---------------------------------------------------------------------------
# decay exponents
# ---------------------------------------------------------------------------

@dataclass
class DecayFit:
    k_order: int
    delta: float
    window: tuple[float, float]
    slope: float
    slope_expected: float
    r_squared: float
    n_snapshots: int


def decay_fit(record: RunRecord, p: ModelParams, k_order: int, delta: float,
              window: tuple[float, float]) -> DecayFit:
    """Log-log slope of || Lambda^k B(t) ||_{H^{sigma_c + delta}} over the window.

    The full-gradient power Lambda^k stands in for any k-th derivative (it is
    the rotation-invariant choice).  The window must end by 0.2/mu, hold at
    least 6 snapshots, and the data must spread over several shells; a
    single-shell spectrum decays exponentially from t = 0 and has no
    power-law regime at all.
    """
    t_lo, t_hi = window
    if not t_lo < t_hi:
        raise WindowError(f"empty window {window}")
    if t_hi > SPECTRAL_GAP_WINDOW / p.mu + 1e-12:
        raise WindowError(
            f"window end {t_hi} exceeds the spectral-gap bound {SPECTRAL_GAP_WINDOW / p.mu:.3g}")
    if record.snapshots is None:
        raise InsufficientDataError("record carries no snapshot fields")
    sel = [(float(t), F) for t, F in zip(record.snapshots.times, record.snapshots.fields)
           if t_lo <= t <= t_hi and t > 0.0]
    if len(sel) < 6:
        raise WindowError(f"only {len(sel)} snapshots inside {window}, need 6")
    first_field = sel[0][1]
    spec = shell_spectrum(first_field)
    if int(np.sum(spec.masses > 1e-24)) < 3:
        raise WindowError("spectral-gap dominated: spectrum concentrated in fewer than 3 shells")
    times = np.array([t for t, _ in sel])
    vals = np.array([sobolev_norm(F, p.sigma_c + delta + k_order) for _, F in sel])
    if np.any(vals <= 0.0):
        raise FitError("zero norm inside window")
    slope, _b, r2 = _linfit(np.log(times), np.log(vals))
    return DecayFit(k_order=k_order, delta=delta, window=(t_lo, t_hi), slope=slope,
                    slope_expected=-(k_order + delta) / p.kappa, r_squared=r2,
                    n_snapshots=len(sel))


# ---------------------------------------------------------------------------
# scaling symmetry
# ---------------------------------------------------------------------------

def _dilate(F: SpectralVectorField, lam: int, fine: Grid3, factor: float) -> SpectralVectorField:
    """Map mode k to lam * k on the refined lattice and scale coefficients."""
    coarse_n = F.grid.n_per_axis
    modes = np.fft.fftfreq(coarse_n, d=1.0 / coarse_n).astype(int)
    idx = (lam * modes) % fine.n_per_axis
    out = SpectralVectorField.zeros(fine)
    out.coeffs[np.ix_(range(3), idx, idx, idx)] = factor * F.coeffs
    return out


def scaling_symmetry_check(B0: SpectralVectorField, p: ModelParams, lambda_scale: int,
                           stepper: StepperConfig) -> dict:
    """Two-run dilation test: evolve data and its rescaling, compare exactly.

    Run (a) evolves B0 on the original grid to lambda^kappa * t_end; run (b)
    evolves the dilated, amplitude-rescaled data on the lambda-times-finer
    grid to t_end.  The dilation image of (a)'s endpoint should match (b)'s
    endpoint; the reported relative L2 discrepancy is pure time-truncation
    error since the two lattices correspond exactly.
    """
    if lambda_scale < 2 or int(lambda_scale) != lambda_scale:
        raise ValueError("lambda_scale must be an integer >= 2")
    lam = int(lambda_scale)
    coarse = B0.grid
    fine = Grid3(lam * coarse.n_per_axis, coarse.box_length, lam * coarse.dealias_cutoff)
    if lam * support_radius(B0) > fine.dealias_cutoff:
        raise ResolutionError("dilated data does not fit the refined grid's retained band")

    factor = float(lam) ** (p.kappa + p.s - 2.0)
    t_star = stepper.t_end
    cfg_a = replace(stepper, t_end=lam**p.kappa * t_star, snapshot_every=10**9)
    cfg_b = replace(stepper, t_end=t_star, snapshot_every=10**9)

    rec_a = evolve(B0, p, cfg_a, keep_snapshot_fields=False)
    B0_fine = _dilate(B0, lam, fine, factor)
    rec_b = evolve(B0_fine, p, cfg_b, keep_snapshot_fields=False)

    mapped = _dilate(rec_a.snapshots.final, lam, fine, factor)
    ref = rec_b.snapshots.final
    denom = ref.l2_norm()
    diff = (mapped - ref).l2_norm()
    rel = diff / denom if denom > 0.0 else diff
    return {
        "lambda_scale": lam,
        "t_star": t_star,
        "relative_l2_discrepancy": float(rel),
        "coarse_n": coarse.n_per_axis,
        "fine_n": fine.n_per_axis,
    }


# ---------------------------------------------------------------------------
# stability / uniqueness
# ---------------------------------------------------------------------------

def stability_check(B0: SpectralVectorField, perturbation_size: float, p: ModelParams,
                    stepper: StepperConfig, perturbation: SpectralVectorField | None = None,
                    seed: int = 123, growth_bound: float = 10.0) -> dict:
    """Evolve B0 and a perturbed copy; track the separation against the Gronwall envelope.

    Reports per-snapshot growth factors of the L2 separation, the fitted
    envelope constant (log separation growth per unit of the accumulated
    squared H^{sigma_c + kappa/2} norm of the base run), and whether the
    growth stayed under the bound.
    """
    grid = B0.grid
    if perturbation is None:
        band_hi = min(4.0, grid.dealias_cutoff * 2.0 * np.pi / grid.box_length)
        perturbation = random_band(grid, seed, 1.0, band_hi, amplitude=1.0, norm_sigma=0.0)
    B_pert0 = B0 + perturbation_size * perturbation

    base = evolve(B0, p, stepper)
    pert = evolve(B_pert0, p, stepper)
    times = np.asarray(base.times)
    seps = np.array([(fp - fb).l2_norm() for fb, fp in
                     zip(base.snapshots.fields, pert.snapshots.fields)])
    sep0 = seps[0]
    if sep0 == 0.0:
        return {"eta": perturbation_size, "max_growth": 0.0, "growth_factors": [0.0] * len(seps),
                "c_fit": None, "bounded": True, "times": list(map(float, times))}
    growth = seps / sep0
    dissip_sq = np.asarray(base.series["hs_sigma_c_half_kappa"]) ** 2
    integral = np.concatenate([[0.0], np.cumsum(0.5 * (dissip_sq[:-1] + dissip_sq[1:]) * np.diff(times))])
    with np.errstate(divide="ignore", invalid="ignore"):
        log_ratio_sq = 2.0 * np.log(growth[1:])
        c_vals = log_ratio_sq / integral[1:]
    c_fit = float(np.max(c_vals)) if len(c_vals) else None
    return {
        "eta": perturbation_size,
        "times": list(map(float, times)),
        "growth_factors": list(map(float, growth)),
        "max_growth": float(growth.max()),
        "c_fit": c_fit,
        "bounded": bool(growth.max() <= growth_bound),
        "final_separation": float(seps[-1]),
    }


# ---------------------------------------------------------------------------
# smallness sweep
# ---------------------------------------------------------------------------

_VERDICT_RANK = {"bounded": 0, "grew": 1, "blew_up": 2}


def smallness_sweep(amplitudes, p: ModelParams, stepper: StepperConfig,
                    t_end: float | None = None, shape: SpectralVectorField | None = None,
                    grid: Grid3 | None = None, seed: int = 7) -> dict:
    """Amplitude scan: does the critical norm stay bounded and the iteration contract?

    Each row records the sup of ||B(t)||_{H^{sigma_c}} relative to its initial
    value, the second successive-substitution ratio, and a verdict; blow-ups
    become rows, not failures.  Rows are flagged when verdicts are not
    monotone in amplitude.
    """
    if shape is None:
        if grid is None:
            raise ValueError("need either a data shape or a grid to build one")
        band_hi = min(4.0, grid.dealias_cutoff * 2.0 * np.pi / grid.box_length)
        shape = random_band(grid, seed, 1.0, band_hi, amplitude=1.0, norm_sigma=p.sigma_c)
    cfg = stepper if t_end is None else replace(stepper, t_end=t_end)

    rows = []
    for amp in amplitudes:
        row = {"amplitude": float(amp), "sup_critical_ratio": None,
               "contraction_ratio": None, "verdict": None}
        if amp == 0.0:
            row.update(sup_critical_ratio=1.0, contraction_ratio=0.0, verdict="bounded")
            rows.append(row)
            continue
        B0 = float(amp) * shape
        initial = sobolev_norm(B0, p.sigma_c)
        try:
            rec = evolve(B0, p, cfg, keep_snapshot_fields=False)
            sup_ratio = float(np.max(rec.series["hs_sigma_c"]) / initial)
            row["sup_critical_ratio"] = sup_ratio
        except BlowUpError as err:
            row["verdict"] = "blew_up"
            row["sup_critical_ratio"] = float("inf")
            row["blowup_time"] = err.time_reached
            rows.append(row)
            continue
        try:
            _traj, trace = picard_solve(B0, p, PicardConfig(max_outer=3, contraction_tol=1e-12), cfg)
            ratios = [r for r in trace.ratios if r is not None]
            row["contraction_ratio"] = float(ratios[-1]) if ratios else 0.0
        except (PicardDivergenceError, BlowUpError):
            row["contraction_ratio"] = float("inf")
        contracted = row["contraction_ratio"] is not None and row["contraction_ratio"] < 0.5
        row["verdict"] = "bounded" if (sup_ratio <= 2.0 and contracted) else "grew"
        rows.append(row)

    by_amp = sorted(rows, key=lambda r: r["amplitude"])
    ranks = [_VERDICT_RANK[r["verdict"]] for r in by_amp]
    non_monotone = any(ranks[i] > ranks[i + 1] for i in range(len(ranks) - 1))
    return {"rows": rows, "non_monotone": non_monotone}
