"""End-to-end invariant suite: every module's contract at fixed seeds and sizes.

``fast`` runs on 16^3 grids and finishes well under a minute; ``full`` adds
32^3 and 64^3 checks, convergence-order fits, the two-grid dilation test,
and the smoothing-rate control run.  Each check prints one PASS/FAIL line
with the measured value so a regression is visible at a glance, and the
suite's return code is nonzero if anything fails.
"""

from __future__ import annotations

import sys
import time

import numpy as np

from . import littlewood_paley as lp
from .diagnostics import (
    decay_fit,
    energy_balance,
    gevrey_radius_fit,
    gevrey_rate_check,
    scaling_symmetry_check,
    stability_check,
)
from .dynamics import ModelParams, hall_nonlinearity, rhs
from .gevrey import GevreyParams, e_multiplier, gevrey_apply, gevrey_multiplier, derivative_bound_check
from .initial_data import beltrami, power_law_spectrum, random_band
from .records import TrajectorySeries
from .solvers import (
    PicardConfig,
    StepperConfig,
    evolve,
    heat_semigroup,
    heat_trajectory,
    linear_mild_solve,
    picard_solve,
)
from .spectral import (
    Grid3,
    SpectralVectorField,
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
)


def _rand_field(grid, seed, band_hi=None, sigma=0.0, amp=1.0):
    band_hi = band_hi or grid.dealias_cutoff * 0.8
    return random_band(grid, seed, 1.0, band_hi, amplitude=amp, norm_sigma=sigma)


# each check returns (ok, measured-string)

def check_round_trip(n):
    grid = Grid3(n)
    F = _rand_field(grid, 10)
    back = forward_transform(inverse_transform(F))
    err = (back - F).l2_norm() / F.l2_norm()
    return err < 1e-12, f"relative round-trip error {err:.2e}"


def check_parseval(n):
    grid = Grid3(n)
    F = _rand_field(grid, 11)
    phys = inverse_transform(F).l2_norm()
    spec = F.l2_norm()
    err = abs(phys - spec) / spec
    return err < 1e-12, f"physical/spectral L2 mismatch {err:.2e}"


def check_leray(n):
    grid = Grid3(n)
    F = _rand_field(grid, 12)
    G = _rand_field(grid, 13)
    PF = leray_project(F)
    twice = (leray_project(PF) - PF).l2_norm()
    adj = abs(l2_inner(PF, G) - l2_inner(F, leray_project(G)))
    div = float(np.max(np.abs(divergence(PF).coeffs)))
    ok = twice < 1e-12 and adj < 1e-12 and div < 1e-12
    return ok, f"idempotence {twice:.2e}, self-adjointness {adj:.2e}, divergence {div:.2e}"


def check_multiplier_algebra(n):
    grid = Grid3(n)
    F = _rand_field(grid, 14)
    a = fractional_laplacian(curl(F), 1.3)
    b = curl(fractional_laplacian(F, 1.3))
    commute = (a - b).l2_norm() / max(a.l2_norm(), 1e-300)
    c = fractional_laplacian(fractional_laplacian(F, 0.7), -0.2)
    d = fractional_laplacian(F, 0.5)
    compose = (c - d).l2_norm() / d.l2_norm()
    ok = commute < 1e-12 and compose < 1e-12
    return ok, f"curl commutation {commute:.2e}, power composition {compose:.2e}"


def check_cutoff_profile(_n):
    plateau = np.concatenate([np.linspace(0.0, 0.7, 15), [0.705, 0.72, 0.73, 0.74, 0.75]])
    support = np.array([1.0, 1.01, 1.05, 1.2, 2.0, 7.5])
    plateau_ok = bool(np.all(lp.chi_eval(plateau) == 1.0))
    support_ok = bool(np.all(lp.chi_eval(support) == 0.0))
    trans = lp.chi_eval(np.linspace(0.75, 1.0, 101))
    monotone = bool(np.all(np.diff(trans) <= 0.0))
    ring_ok = lp.phi_eval(1.0) == 1.0 and lp.phi_eval(0.74) == 0.0 and lp.phi_eval(2.0) == 0.0
    ok = plateau_ok and support_ok and monotone and ring_ok
    return ok, (f"plateau exact {plateau_ok}, support exact {support_ok}, "
                f"monotone {monotone}, ring values {ring_ok}")


def check_partition_of_unity(n):
    grid = Grid3(n)
    j_min, j_max = lp.shell_range(grid)
    total = np.zeros_like(grid.k_mag)
    for j in range(j_min, j_max + 1):
        total += lp.phi_eval(grid.k_mag * 2.0**(-j))
    nz = grid.k_mag > 0
    err = float(np.max(np.abs(total[nz] - 1.0)))
    return err < 1e-12, f"max |sum phi - 1| = {err:.2e}"


def check_reconstruction(n):
    grid = Grid3(n)
    F = _rand_field(grid, 15)
    err = (lp.reconstruct(F) - F).l2_norm() / F.l2_norm()
    return err < 1e-10, f"relative reconstruction error {err:.2e}"


def check_shell_support(n):
    grid = Grid3(n)
    F = _rand_field(grid, 16)
    worst = 0.0
    for j in range(0, 3):
        piece = lp.lp_project(F, j)
        ring = (grid.k_mag >= 0.75 * 2.0**j) & (grid.k_mag <= 2.0**(j + 1))
        outside = float(np.max(np.abs(piece.coeffs[:, ~ring])))
        worst = max(worst, outside)
    return worst == 0.0, f"max coefficient outside ring {worst:.2e}"


def check_bony(n):
    grid = Grid3(n)
    worst = 0.0
    for seed in range(20, 25):
        u = _rand_field(grid, seed, band_hi=grid.dealias_cutoff / 2)
        v = _rand_field(grid, seed + 100, band_hi=grid.dealias_cutoff / 2)
        j = 2
        lh, hl, hh = lp.bony_decompose(u, v, j)
        from .spectral import dealiased_cross
        direct = lp.lp_project(dealiased_cross(u, v), j)
        denom = max(direct.l2_norm(), 1e-300)
        err = ((lh + hl + hh) - direct).l2_norm() / denom
        worst = max(worst, err)
    return worst < 1e-10, f"worst three-term reconstruction error {worst:.2e}"


def check_commutator(n):
    grid = Grid3(n)
    g = _rand_field(grid, 30, band_hi=grid.dealias_cutoff / 2)
    f = _rand_field(grid, 31, band_hi=grid.dealias_cutoff / 2)
    j = 2
    comm = lp.commutator_curl(g, f, j)
    from .spectral import dealiased_cross
    lhs = comm + dealiased_cross(g, curl(lp.lp_project(f, j)))
    rhs_ = lp.lp_project(dealiased_cross(g, curl(f)), j)
    ident = (lhs - rhs_).l2_norm() / max(rhs_.l2_norm(), 1e-300)
    const = SpectralVectorField.zeros(grid)
    const.coeffs[:, 0, 0, 0] = [1.0, -0.5, 0.25]
    comm_const = lp.commutator_curl(const, f, j).l2_norm()
    gain = lp.commutator_curl_gain(g, f, j)
    ok = ident < 1e-12 and comm_const < 1e-12 and np.isfinite(gain)
    return ok, f"literal identity {ident:.2e}, constant-g norm {comm_const:.2e}, fitted gain C {gain:.3g}"


def check_bernstein(n):
    grid = Grid3(n)
    ratios = []
    ok = True
    for j in (1, 2):
        F = lp.lp_project(_rand_field(grid, 40 + j), j)
        try:
            r = lp.bernstein_check(F, j, 2.0, np.inf)
            ratios.append(r["ratio_gradient"])
        except lp.BernsteinBracketError:
            ok = False
    return ok, f"gradient ratios {['%.3f' % r for r in ratios]}"


def check_gevrey_ops(n):
    grid = Grid3(n)
    F = _rand_field(grid, 50)
    p1 = GevreyParams(alpha=0.8, lam=0.05)
    p2 = GevreyParams(alpha=0.8, lam=0.07)
    p12 = GevreyParams(alpha=0.8, lam=0.12)
    semigroup = (gevrey_apply(gevrey_apply(F, p1), p2) - gevrey_apply(F, p12)).l2_norm() \
        / gevrey_apply(F, p12).l2_norm()
    dominance = float(np.max(e_multiplier(grid, p12) - gevrey_multiplier(grid, p12)))
    bound_ok = all(
        derivative_bound_check(F, GevreyParams(alpha=1.0, lam=0.05), 0.5, beta)
        for beta in [(1, 0, 0), (0, 1, 1), (2, 1, 0), (1, 1, 1)])
    ok = semigroup < 1e-12 and dominance <= 0.0 and bound_ok
    return ok, f"semigroup defect {semigroup:.2e}, max(E-G) {dominance:.2e}, derivative bounds {bound_ok}"


def check_beltrami_hall(n):
    grid = Grid3(n)
    B = beltrami(grid)
    worst = 0.0
    for s in (-0.4, 0.0, 0.4):
        p = ModelParams(s=s, kappa=2.0)
        worst = max(worst, hall_nonlinearity(B, B, p).l2_norm())
    return worst < 1e-12, f"worst Hall norm on the curl eigenfield {worst:.2e}"


def check_twisted_cancellation(n):
    grid = Grid3(n)
    worst = 0.0
    for s in (-0.4, 0.0, 0.4):
        p = ModelParams(s=s, kappa=2.0)
        for seed in (60, 61, 62):
            B = _rand_field(grid, seed, band_hi=grid.dealias_cutoff * 0.9)
            hall = hall_nonlinearity(B, B, p)
            tw = fractional_laplacian(B, -s)
            val = abs(l2_inner(hall, tw)) / (hall.l2_norm() * tw.l2_norm())
            worst = max(worst, val)
    return worst < 1e-10, f"worst normalized twisted pairing {worst:.2e}"


def check_hall_divergence_and_bilinearity(n):
    grid = Grid3(n)
    p = ModelParams(s=0.2, kappa=1.8)
    B = _rand_field(grid, 70)
    q = _rand_field(grid, 71)
    out = rhs(B, q, p)
    div = float(np.max(np.abs(divergence(out).coeffs)))
    scaled = hall_nonlinearity(2.0 * B, -3.0 * q, p)
    linear = -6.0 * hall_nonlinearity(B, q, p)
    bil = (scaled - linear).l2_norm() / max(linear.l2_norm(), 1e-300)
    ok = div < 1e-12 and bil < 1e-12
    return ok, f"rhs divergence {div:.2e}, bilinearity defect {bil:.2e}"


def check_heat_semigroup(n):
    grid = Grid3(n)
    p = ModelParams(s=0.0, kappa=1.5)
    F = _rand_field(grid, 80)
    comp = (heat_semigroup(heat_semigroup(F, 0.3, p), 0.45, p) - heat_semigroup(F, 0.75, p)).l2_norm()
    mono = all(sobolev_norm(heat_semigroup(F, 0.5, p), s) <= sobolev_norm(F, s) + 1e-13
               for s in (0.0, 1.0, 1.7))
    ok = comp < 1e-13 * F.l2_norm() and mono
    return ok, f"semigroup composition defect {comp:.2e}, norm monotone {mono}"


def check_beltrami_evolution(n):
    grid = Grid3(n)
    p = ModelParams(s=0.3, kappa=1.6)
    cfg = StepperConfig(dt=1e-3, t_end=0.25, snapshot_every=50)
    rec = evolve(beltrami(grid), p, cfg)
    worst = max(abs(l2 - np.exp(-t)) for t, l2 in zip(rec.times, rec.series["l2"]))
    return worst < 1e-8, f"worst |L2(t) - exp(-t)| = {worst:.2e}"


def check_energy_law(n, full=False):
    grid = Grid3(n)
    p = ModelParams(s=0.0, kappa=2.0)
    B0 = _rand_field(grid, 90, band_hi=4.0, sigma=p.sigma_c, amp=0.5)
    excursions = []
    dts = (4e-3, 2e-3, 1e-3) if full else (4e-3, 2e-3)
    for dt in dts:
        rec = evolve(B0, p, StepperConfig(dt=dt, t_end=0.2, snapshot_every=1),
                     keep_snapshot_fields=False)
        excursions.append(energy_balance(rec, p)["max_positive_excursion"])
    if full:
        order = float(np.polyfit(np.log(dts), np.log(excursions), 1)[0])
        return order >= 1.7, f"excursions {['%.2e' % e for e in excursions]}, measured order {order:.2f}"
    shrink = excursions[1] < excursions[0]
    return shrink, f"excursions {['%.2e' % e for e in excursions]} (shrinking: {shrink})"


def check_picard(n):
    grid = Grid3(n)
    p = ModelParams(s=0.2, kappa=1.8)
    B0 = _rand_field(grid, 100, band_hi=4.0, sigma=p.sigma_c, amp=1e-2)
    cfg = StepperConfig(dt=5e-3, t_end=0.2)
    traj, trace = picard_solve(B0, p, PicardConfig(), cfg)
    ratios = [r for r in trace.ratios if r is not None]
    ratio = max(ratios[:3]) if ratios else 0.0
    direct = evolve(B0, p, cfg, keep_snapshot_fields=False)
    err = (traj.final - direct.snapshots.final).l2_norm()
    ok = ratio < 0.5 and err < 1e-6
    return ok, f"max early ratio {ratio:.3g}, limit vs direct L2 {err:.2e}"


def check_determinism(n):
    grid = Grid3(n)
    p = ModelParams(s=0.1, kappa=1.9)
    cfg = StepperConfig(dt=2e-3, t_end=0.05)
    B0 = _rand_field(grid, 110, band_hi=4.0, sigma=p.sigma_c, amp=0.1)
    r1 = evolve(B0, p, cfg, keep_snapshot_fields=False)
    r2 = evolve(B0, p, cfg, keep_snapshot_fields=False)
    same = r1.series == r2.series and np.array_equal(
        r1.snapshots.final.coeffs, r2.snapshots.final.coeffs)
    return bool(same), f"repeat run bit-identical: {same}"


def check_mild_solve(n):
    grid = Grid3(n)
    p = ModelParams(s=0.2, kappa=1.8, eps_visc=1e-3)
    B0 = _rand_field(grid, 120, band_hi=2.5, sigma=p.sigma_c, amp=0.05)
    cfg = StepperConfig(dt=2e-3, t_end=0.1)
    q = heat_trajectory(B0, np.arange(0.0, 0.1 + 1e-12, 2e-3), ModelParams(s=p.s, kappa=p.kappa))
    traj, info = linear_mild_solve(B0, q, p, cfg)
    ok = len(traj) == 51 and all(s > 0 for s in info["sweeps"])
    return ok, f"windows {info['windows']}, halvings {info['halvings']}, sweeps {info['sweeps'][:5]}"


def check_etd_orders(n):
    grid = Grid3(n)
    p = ModelParams(s=0.2, kappa=1.8)
    B0 = _rand_field(grid, 130, band_hi=4.0, sigma=p.sigma_c, amp=1.0)
    out = []
    ok = True
    for scheme, expected in (("etd1", 1.0), ("etd2rk", 2.0)):
        ref = evolve(B0, p, StepperConfig(dt=2.5e-4, t_end=0.1, scheme=scheme),
                     keep_snapshot_fields=False).snapshots.final
        errs = []
        dts = (4e-3, 2e-3, 1e-3)
        for dt in dts:
            got = evolve(B0, p, StepperConfig(dt=dt, t_end=0.1, scheme=scheme),
                         keep_snapshot_fields=False).snapshots.final
            errs.append((got - ref).l2_norm())
        slope = float(np.polyfit(np.log(dts), np.log(errs), 1)[0])
        out.append(f"{scheme} order {slope:.2f}")
        ok = ok and expected / 2.0 <= slope <= expected * 2.0
    return ok, ", ".join(out)


def check_scaling(n):
    grid = Grid3(n)
    p = ModelParams(s=0.2, kappa=1.8)
    B0 = _rand_field(grid, 140, band_hi=4.0, sigma=p.sigma_c, amp=0.3)
    rep = scaling_symmetry_check(B0, p, 2, StepperConfig(dt=2e-3, t_end=0.1))
    return rep["relative_l2_discrepancy"] < 1e-4, \
        f"relative discrepancy {rep['relative_l2_discrepancy']:.2e}"


def check_gevrey_rate(n):
    grid = Grid3(n)
    p = ModelParams(s=0.0, kappa=2.0)
    B0 = power_law_spectrum(grid, 150, slope=3.0, amplitude=1.0, norm_sigma=p.sigma_c)
    times = np.geomspace(5e-3, 1.2, 25)
    fields = [heat_semigroup(B0, float(t), p) for t in times]
    from .records import RunRecord
    rec = RunRecord(model=p, times=list(times), snapshots=TrajectorySeries(times, fields))
    rep = gevrey_rate_check(rec, p, alpha=1.0, window=(0.05, 1.2))
    slope = rep["loglog_slope"]
    want = rep["expected_slope"]
    ok = rep["applicable"] and rep["increasing"] and abs(slope - want) <= 0.3 * want
    return ok, f"radius growth slope {slope:.3f} vs alpha/kappa {want:.3f}, increasing {rep['increasing']}"


def check_decay_slopes(n):
    grid = Grid3(n)
    p = ModelParams(s=0.0, kappa=2.0)
    B0 = power_law_spectrum(grid, 160, slope=p.sigma_c + 1.5, amplitude=1e-2, norm_sigma=p.sigma_c)
    cfg = StepperConfig(dt=1e-3, t_end=0.2, snapshot_every=10)
    rec = evolve(B0, p, cfg)
    f0 = decay_fit(rec, p, 0, 0.01, (0.02, 0.2))
    f1 = decay_fit(rec, p, 1, 0.01, (0.02, 0.2))
    diff = f1.slope - f0.slope
    ok = abs(diff - (-1.0 / p.kappa)) <= 0.3
    return ok, f"k=1 minus k=0 slope {diff:.3f} vs -1/kappa {-1.0 / p.kappa:.3f}"


def check_stability(n):
    grid = Grid3(n)
    p = ModelParams(s=0.2, kappa=1.8)
    B0 = _rand_field(grid, 170, band_hi=4.0, sigma=p.sigma_c, amp=0.05)
    rep = stability_check(B0, 1e-6, p, StepperConfig(dt=2e-3, t_end=0.2, snapshot_every=10))
    return rep["bounded"], f"max separation growth {rep['max_growth']:.3f} (bound 10)"


def check_radius_fit_inversion(n):
    grid = Grid3(n)
    lam0 = 0.3
    coeffs = np.exp(-lam0 * np.where(grid.k_mag > 0, grid.k_mag, np.inf))
    F = SpectralVectorField(grid, np.broadcast_to(coeffs, (3,) + coeffs.shape).copy())
    F = dealias(F)
    lam_hat, r2 = gevrey_radius_fit(F, alpha=1.0)
    ok = abs(lam_hat - lam0) < 0.02 and r2 > 0.99
    return ok, f"recovered radius {lam_hat:.4f} vs {lam0} (r2 {r2:.4f})"


FAST_CHECKS = [
    ("transform round trip", check_round_trip),
    ("Parseval identity", check_parseval),
    ("Leray projector", check_leray),
    ("multiplier algebra", check_multiplier_algebra),
    ("partition of unity", check_partition_of_unity),
    ("shell reconstruction", check_reconstruction),
    ("shell support", check_shell_support),
    ("Bony three-term split", check_bony),
    ("curl commutator", check_commutator),
    ("Bernstein brackets", check_bernstein),
    ("Gevrey operators", check_gevrey_ops),
    ("curl eigenfield annihilates Hall", check_beltrami_hall),
    ("twisted cancellation", check_twisted_cancellation),
    ("rhs divergence and bilinearity", check_hall_divergence_and_bilinearity),
    ("heat semigroup", check_heat_semigroup),
    ("exact single-shell evolution", check_beltrami_evolution),
    ("energy law residual", check_energy_law),
    ("Picard contraction", check_picard),
    ("run determinism", check_determinism),
    ("regularized mild solve", check_mild_solve),
    ("radius fit inversion", check_radius_fit_inversion),
]

FULL_CHECKS = [
    ("integrator convergence orders", check_etd_orders),
    ("two-grid dilation symmetry", check_scaling),
    ("smoothing-rate control run", check_gevrey_rate),
    ("decay-slope difference", check_decay_slopes),
    ("perturbation stability", check_stability),
]


def run_suite(level: str = "fast", stream=None) -> bool:
    """Run the invariant checks; print one PASS/FAIL line each; True if all pass."""
    if level not in ("fast", "full"):
        raise ValueError(f"level must be 'fast' or 'full', got {level!r}")
    stream = stream or sys.stdout
    all_ok = True
    t_start = time.perf_counter()

    def run_one(name, fn, n, **kw):
        nonlocal all_ok
        t0 = time.perf_counter()
        try:
            ok, measured = fn(n, **kw) if kw else fn(n)
        except Exception as exc:  # a crashed check is a failed check
            ok, measured = False, f"raised {type(exc).__name__}: {exc}"
        all_ok = all_ok and ok
        status = "PASS" if ok else "FAIL"
        print(f"{status}  {name:<38s} {measured}  [{time.perf_counter() - t0:.1f}s]",
              file=stream)

    n_fast = 16
    for name, fn in FAST_CHECKS:
        if level == "full" and fn is check_energy_law:
            run_one(name, fn, 32, full=True)
        elif level == "full" and fn is check_picard:
            run_one(name, fn, 32)
        else:
            run_one(name, fn, n_fast)
    if level == "full":
        for name, fn in FULL_CHECKS:
            n = 64 if fn is check_gevrey_rate else 32
            if fn is check_etd_orders:
                n = 16
            run_one(name, fn, n)

    total = time.perf_counter() - t_start
    print(f"{'OK' if all_ok else 'FAILED'}  ({level} level, {total:.1f}s total)", file=stream)
    return all_ok
