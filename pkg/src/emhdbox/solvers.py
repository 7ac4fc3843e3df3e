"""Time evolution: exact fractional heat semigroup, exponential integrators,
successive-substitution construction, and the regularized mild-solution solver.

The linear part is diagonal in Fourier space, so the semigroup
exp(-(mu |k|^kappa + eps |k|^4) t) is applied exactly and the nonlinearity is
integrated with exponential time differencing: etd1 is the first-order
Duhamel rule, etd2rk the standard two-stage predictor-corrector
(Cox-Matthews).  The phi-weights (e^z - 1)/z and (e^z - 1 - z)/z^2 switch to
a 6-term Taylor series below |z| = 1e-4, the usual guard against
cancellation.

picard_solve builds the approximating sequence: the zeroth iterate is the
pure heat flow, and each next iterate solves the linearized equation against
the previous trajectory, until the successive difference in the
L^3-in-time / H^{2 kappa/3}-in-space norm stops mattering.  Non-contraction
(three consecutive ratio >= 1) aborts with the trace attached, the symptom of
data too large or a horizon too long.

linear_mild_solve runs the frozen-coefficient equation with an added
eps * Lambda^4 hyperviscosity by fixed-point sweeps on the discrete Duhamel
map (left-endpoint quadrature), continuing window by window and halving any
window on which the sweeps fail to settle.

Steppers are sequential loops; within a step all work is multiplier algebra
and FFTs.  Independent runs share no mutable state.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass, field as dc_field, replace

import numpy as np

from .dynamics import ModelParams, hall_nonlinearity
from .records import RunRecord, TrajectorySeries
from .spectral import (
    SpectralVectorField,
    dealias,
    fractional_laplacian_multiplier,
    leray_project,
    sobolev_norm,
)

BLOWUP_THRESHOLD = 1e12


class BlowUpError(RuntimeError):
    """State left the resolvable regime (non-finite or enormous norm)."""

    def __init__(self, time_reached: float, partial_record: RunRecord | None = None):
        super().__init__(f"blow-up detected at t = {time_reached:.6g}")
        self.time_reached = time_reached
        self.partial_record = partial_record


class PicardDivergenceError(RuntimeError):
    """Successive-substitution ratios failed to contract."""

    def __init__(self, trace: "ConvergenceTrace"):
        super().__init__("successive-difference ratio >= 1 for 3 consecutive iterations")
        self.trace = trace


class WindowTooLongError(RuntimeError):
    """Mild-solution sweeps would not contract even after repeated window halving."""


@dataclass
class StepperConfig:
    dt: float
    t_end: float
    scheme: str = "etd2rk"
    snapshot_every: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_end <= self.dt:
            raise ValueError(f"t_end must exceed dt, got t_end={self.t_end}, dt={self.dt}")
        if self.scheme not in ("etd1", "etd2rk"):
            raise ValueError(f"scheme must be 'etd1' or 'etd2rk', got {self.scheme!r}")
        if self.snapshot_every < 1:
            raise ValueError("snapshot_every must be a positive integer")


@dataclass
class PicardConfig:
    max_outer: int = 12
    contraction_tol: float = 1e-6
    diff_norm_sigma: float | None = None  # None means 2*kappa/3
    diff_norm_time_p: float = 3.0

    def __post_init__(self):
        if self.max_outer < 1:
            raise ValueError("max_outer must be positive")
        if self.contraction_tol <= 0:
            raise ValueError("contraction_tol must be positive")

    def sigma(self, p: ModelParams) -> float:
        return 2.0 * p.kappa / 3.0 if self.diff_norm_sigma is None else self.diff_norm_sigma


@dataclass
class ConvergenceTrace:
    """Per-iteration successive-difference norms, ratios, and critical-norm sups."""

    diff_norms: list = dc_field(default_factory=list)
    ratios: list = dc_field(default_factory=list)
    sup_critical_norms: list = dc_field(default_factory=list)
    wall_times: list = dc_field(default_factory=list)

    def append(self, diff, ratio, sup_crit, wall):
        self.diff_norms.append(diff)
        self.ratios.append(ratio)
        self.sup_critical_norms.append(sup_crit)
        self.wall_times.append(wall)

    def as_dict(self) -> dict:
        # wall times are machine-dependent and deliberately left out
        return {"diff_norms": list(self.diff_norms),
                "ratios": [None if r is None else float(r) for r in self.ratios],
                "sup_critical_norms": list(self.sup_critical_norms)}


# ---------------------------------------------------------------------------
# exact linear flow
# ---------------------------------------------------------------------------

def _linear_symbol(grid, p: ModelParams) -> np.ndarray:
    sym = p.mu * fractional_laplacian_multiplier(grid, p.kappa)
    if p.eps_visc > 0.0:
        sym = sym + p.eps_visc * fractional_laplacian_multiplier(grid, 4.0)
    return sym


def heat_semigroup(B: SpectralVectorField, t: float, p: ModelParams) -> SpectralVectorField:
    """Exact solution of the linear flow: multiply by exp(-(mu |k|^kappa + eps |k|^4) t)."""
    if t < 0:
        raise ValueError(f"semigroup time must be nonnegative, got {t}")
    if t == 0.0:
        return B.copy()
    decay = np.exp(-_linear_symbol(B.grid, p) * t)
    return SpectralVectorField(B.grid, B.coeffs * decay, B.reality_flag)


def _phi1_of_neg(z: np.ndarray) -> np.ndarray:
    """(1 - e^{-z})/z for z >= 0, series below 1e-4."""
    out = np.empty_like(z)
    small = z < 1e-4
    zs = z[small]
    out[small] = (1.0 - zs / 2.0 + zs**2 / 6.0 - zs**3 / 24.0
                  + zs**4 / 120.0 - zs**5 / 720.0)
    zb = z[~small]
    out[~small] = -np.expm1(-zb) / zb
    return out


def _phi2_of_neg(z: np.ndarray) -> np.ndarray:
    """(e^{-z} - 1 + z)/z^2 for z >= 0, series below 1e-4."""
    out = np.empty_like(z)
    small = z < 1e-4
    zs = z[small]
    out[small] = (0.5 - zs / 6.0 + zs**2 / 24.0 - zs**3 / 120.0
                  + zs**4 / 720.0 - zs**5 / 5040.0)
    zb = z[~small]
    out[~small] = (np.expm1(-zb) + zb) / zb**2
    return out


class _EtdStepper:
    """Precomputed multiplier tables for one (grid, model, dt, scheme) combination."""

    def __init__(self, grid, p: ModelParams, dt: float, scheme: str):
        self.dt = dt
        self.scheme = scheme
        z = _linear_symbol(grid, p) * dt
        self.decay = np.exp(-z)
        self.phi1dt = dt * _phi1_of_neg(z)
        self.phi2dt = dt * _phi2_of_neg(z) if scheme == "etd2rk" else None

    def step(self, B: SpectralVectorField, nonlin, t: float) -> SpectralVectorField:
        n1 = nonlin(B, t)
        pred = self.decay * B.coeffs + self.phi1dt * n1.coeffs
        if self.scheme == "etd1":
            out = pred
        else:
            pred_field = SpectralVectorField(B.grid, pred, B.reality_flag)
            n2 = nonlin(pred_field, t + self.dt)
            out = pred + self.phi2dt * (n2.coeffs - n1.coeffs)
        return _sanitize(SpectralVectorField(B.grid, out, B.reality_flag))


def _sanitize(B: SpectralVectorField) -> SpectralVectorField:
    """Enforce the state invariants: zero mean, divergence-free, dealiased."""
    out = dealias(leray_project(B))
    out.coeffs[:, 0, 0, 0] = 0.0
    return out


def _step_times(cfg: StepperConfig) -> np.ndarray:
    """Uniform dt steps landing exactly on t_end (last step may be shorter)."""
    n_full = int(np.floor(cfg.t_end / cfg.dt + 1e-9))
    times = cfg.dt * np.arange(n_full + 1)
    if times[-1] < cfg.t_end - 1e-9 * cfg.t_end:
        times = np.append(times, cfg.t_end)
    else:
        times[-1] = cfg.t_end
    return times


# ---------------------------------------------------------------------------
# evolution
# ---------------------------------------------------------------------------

def etd_step(B: SpectralVectorField, q_provider, p: ModelParams, cfg: StepperConfig,
             t: float = 0.0) -> SpectralVectorField:
    """One exponential-integrator step against a frozen-coefficient provider.

    q_provider(time) returns the field the nonlinearity couples to; pass
    ``lambda _t: B_current`` style callables or a TrajectorySeries.at bound
    method.  None means self-coupled.
    """
    if q_provider is None:
        def nonlin(state, _t):
            return hall_nonlinearity(state, state, p)
    else:
        def nonlin(state, stage_t):
            return hall_nonlinearity(state, q_provider(stage_t), p)
    stepper = _EtdStepper(B.grid, p, cfg.dt, cfg.scheme)
    out = stepper.step(_sanitize(B), nonlin, t)
    _check_state(out, t + cfg.dt)
    return out


def _check_state(B: SpectralVectorField, t: float, record: RunRecord | None = None):
    l2 = B.l2_norm()
    if not np.isfinite(l2) or l2 > BLOWUP_THRESHOLD:
        raise BlowUpError(t, record)


def evolve(B0: SpectralVectorField, p: ModelParams, cfg: StepperConfig,
           mode: str = "self_coupled", q_series: TrajectorySeries | None = None,
           config_snapshot: dict | None = None,
           keep_snapshot_fields: bool = True) -> RunRecord:
    """Step from 0 to t_end, emitting snapshots and the norm series.

    mode 'self_coupled' evolves the full equation; 'frozen' couples the
    nonlinearity to q_series with piecewise-constant-in-time (left endpoint)
    interpolation.  Raises BlowUpError carrying the partial record if the
    state escapes.  keep_snapshot_fields=False records the norm series only
    (plus the final state), which keeps long runs out of memory trouble.
    """
    if mode not in ("self_coupled", "frozen"):
        raise ValueError(f"mode must be 'self_coupled' or 'frozen', got {mode!r}")
    if mode == "frozen" and q_series is None:
        raise ValueError("frozen mode needs a q_series")

    if mode == "self_coupled":
        def nonlin(state, _t):
            return hall_nonlinearity(state, state, p)
    else:
        def nonlin(state, stage_t):
            return hall_nonlinearity(state, q_series.at(stage_t), p)

    times = _step_times(cfg)
    sigma_c = p.sigma_c
    record = RunRecord(model=p, config=config_snapshot, status="completed")
    record.series = {k: [] for k in ("l2", "hs_sigma_c", "hs_sigma_c_half_kappa", "hs_half_kappa")}
    snap_times: list[float] = []
    snap_fields: list[SpectralVectorField] = []

    def take_snapshot(t, B, keep_field):
        record.times.append(float(t))
        record.series["l2"].append(sobolev_norm(B, 0.0))
        record.series["hs_sigma_c"].append(sobolev_norm(B, sigma_c))
        record.series["hs_sigma_c_half_kappa"].append(sobolev_norm(B, sigma_c + p.kappa / 2.0))
        record.series["hs_half_kappa"].append(sobolev_norm(B, p.kappa / 2.0))
        if keep_field:
            snap_times.append(float(t))
            snap_fields.append(B.copy())

    B = _sanitize(B0.copy())
    take_snapshot(0.0, B, keep_snapshot_fields)

    steppers: dict[float, _EtdStepper] = {}
    for m in range(len(times) - 1):
        dt_m = float(times[m + 1] - times[m])
        key = round(dt_m, 15)
        if key not in steppers:
            steppers[key] = _EtdStepper(B.grid, p, dt_m, cfg.scheme)
        B = steppers[key].step(B, nonlin, float(times[m]))
        t_now = float(times[m + 1])
        try:
            _check_state(B, t_now)
        except BlowUpError:
            record.status = "blew_up"
            record.blowup_time = t_now
            record.snapshots = TrajectorySeries(np.asarray(snap_times), snap_fields)
            raise BlowUpError(t_now, record) from None
        if (m + 1) % cfg.snapshot_every == 0 or m == len(times) - 2:
            is_last = m == len(times) - 2
            take_snapshot(t_now, B, keep_snapshot_fields or is_last)

    record.snapshots = TrajectorySeries(np.asarray(snap_times), snap_fields)
    return record


# ---------------------------------------------------------------------------
# successive substitution
# ---------------------------------------------------------------------------

def time_lp_norm(times: np.ndarray, values: np.ndarray, p_time: float) -> float:
    """Composite-trapezoid L^p norm in time of a sampled nonnegative function."""
    vals = np.asarray(values, dtype=np.float64)
    if np.isinf(p_time):
        return float(vals.max())
    return float(np.trapezoid(vals**p_time, np.asarray(times)) ** (1.0 / p_time))


def trajectory_diff_norm(a: TrajectorySeries, b: TrajectorySeries, sigma: float,
                         p_time: float = 3.0) -> float:
    """L^p-in-time norm of the Sobolev distance between two sampled trajectories."""
    if len(a) != len(b) or not np.allclose(a.times, b.times):
        raise ValueError("trajectories must share snapshot times")
    g = np.array([sobolev_norm(fa - fb, sigma) for fa, fb in zip(a.fields, b.fields)])
    return time_lp_norm(a.times, g, p_time)


def heat_trajectory(B0: SpectralVectorField, times: np.ndarray, p: ModelParams) -> TrajectorySeries:
    """The zeroth iterate: exact linear flow sampled on the step grid."""
    B = _sanitize(B0.copy())
    fields = [heat_semigroup(B, float(t), p) for t in times]
    return TrajectorySeries(np.asarray(times, dtype=np.float64), fields)


def picard_solve(B0: SpectralVectorField, p: ModelParams, cfg: PicardConfig,
                 stepper: StepperConfig) -> tuple[TrajectorySeries, ConvergenceTrace]:
    """Iterate the linearized equation against its own previous trajectory.

    Snapshots are forced to every step so each iterate sees its predecessor
    at full time resolution.  Stops when the successive-difference norm drops
    below contraction_tol times the first difference, or raises
    PicardDivergenceError after three consecutive non-contracting ratios.
    """
    inner = replace(stepper, snapshot_every=1)
    times = _step_times(inner)
    sigma = cfg.sigma(p)
    prev = heat_trajectory(B0, times, p)
    trace = ConvergenceTrace()
    first_diff = None
    consecutive_bad = 0
    # successive differences at rounding level count as converged outright
    abs_floor = 1e-14 * max(1.0, B0.l2_norm())

    for _n in range(1, cfg.max_outer + 1):
        t0 = _time.perf_counter()
        rec = evolve(B0, p, inner, mode="frozen", q_series=prev)
        current = rec.snapshots
        diff = trajectory_diff_norm(current, prev, sigma, cfg.diff_norm_time_p)
        sup_crit = float(np.max(rec.series["hs_sigma_c"]))
        wall = _time.perf_counter() - t0

        if first_diff is None:
            first_diff = diff
            ratio = 0.0 if diff <= abs_floor else None
        else:
            ratio = diff / trace.diff_norms[-1] if trace.diff_norms[-1] > 0 else 0.0
        trace.append(diff, ratio, sup_crit, wall)

        if ratio is not None and ratio >= 1.0:
            consecutive_bad += 1
            if consecutive_bad >= 3:
                raise PicardDivergenceError(trace)
        else:
            consecutive_bad = 0

        if diff <= max(cfg.contraction_tol * first_diff, abs_floor):
            return current, trace
        prev = current

    return prev, trace


# ---------------------------------------------------------------------------
# regularized mild solution
# ---------------------------------------------------------------------------

def linear_mild_solve(B0: SpectralVectorField, q_series: TrajectorySeries, p: ModelParams,
                      stepper: StepperConfig, fp_tol: float = 1e-10,
                      max_halvings: int = 20) -> tuple[TrajectorySeries, dict]:
    """Fixed-point sweeps on the discrete Duhamel map of the hyperviscous equation.

    The eps * Lambda^4 term rides the semigroup; dissipation and the frozen
    nonlinearity sit in the integral, discretized by the left-endpoint rule
    on the stepper grid.  Sweeps repeat until the sup-in-time L2 successive
    difference drops below fp_tol (relative to the data's size); a window on
    which sweeps grow three times in a row is halved and retried, up to
    max_halvings overall.

    Returns the trajectory on the full step grid and an info dict with the
    window/halving/sweep accounting.
    """
    if p.eps_visc <= 0.0:
        raise ValueError("linear_mild_solve needs eps_visc > 0")

    grid = B0.grid
    times = _step_times(stepper)
    n_steps = len(times) - 1
    sym_eps = p.eps_visc * fractional_laplacian_multiplier(grid, 4.0)
    kappa_mult = p.mu * fractional_laplacian_multiplier(grid, p.kappa)
    scale = max(1.0, B0.l2_norm())
    decay_cache: dict[float, np.ndarray] = {}

    def decay_for(dt: float) -> np.ndarray:
        key = round(dt, 15)
        if key not in decay_cache:
            decay_cache[key] = np.exp(-sym_eps * dt)
        return decay_cache[key]

    def integrand(field: SpectralVectorField, t: float) -> np.ndarray:
        hall = hall_nonlinearity(field, q_series.at(t), p)
        return hall.coeffs - kappa_mult * field.coeffs

    out_fields = [_sanitize(B0.copy())]
    out_times = [0.0]
    info = {"halvings": 0, "windows": 0, "sweeps": []}

    start_idx = 0
    window = n_steps
    B_start = out_fields[0]
    while start_idx < n_steps:
        m_count = min(window, n_steps - start_idx)
        window_times = times[start_idx:start_idx + m_count + 1]
        traj = [B_start.copy()]
        for m in range(1, m_count + 1):  # initial guess: pure hyperviscous flow
            decay_m = np.exp(-sym_eps * float(window_times[m] - window_times[0]))
            traj.append(SpectralVectorField(grid, B_start.coeffs * decay_m, True))

        converged = False
        grew = 0
        prev_diff = None
        sweeps = 0
        max_sweeps = 2 * m_count + 50
        while sweeps < max_sweeps:
            sweeps += 1
            forcing = [integrand(traj[m], float(window_times[m])) for m in range(m_count)]
            new_traj = [traj[0]]
            acc = traj[0].coeffs
            for m in range(m_count):
                dt_m = float(window_times[m + 1] - window_times[m])
                acc = decay_for(dt_m) * (acc + dt_m * forcing[m])
                new_traj.append(SpectralVectorField(grid, acc, True))
            diff = max(float(np.sqrt(np.sum(np.abs(new_traj[m].coeffs - traj[m].coeffs) ** 2)))
                       for m in range(1, m_count + 1))
            traj = new_traj
            if not np.isfinite(diff) or (prev_diff is not None and diff > prev_diff):
                grew += 1
                if grew >= 3 or not np.isfinite(diff):
                    break
            else:
                grew = 0
            prev_diff = diff
            if diff < fp_tol * scale:
                converged = True
                break

        if not converged:
            if window == 1 or info["halvings"] >= max_halvings:
                raise WindowTooLongError(
                    f"no contraction after {info['halvings']} halvings (window {window} steps)")
            info["halvings"] += 1
            window = max(1, window // 2)
            continue

        info["windows"] += 1
        info["sweeps"].append(sweeps)
        for m in range(1, m_count + 1):
            out_fields.append(_sanitize(traj[m]))
            out_times.append(float(window_times[m]))
        B_start = out_fields[-1]
        start_idx += m_count

    return TrajectorySeries(np.asarray(out_times), out_fields), info
