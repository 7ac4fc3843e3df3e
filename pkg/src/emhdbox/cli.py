"""Command-line surface: run, picard, sweep, analyze, verify.

Every config key doubles as a dotted flag (``--stepper.dt 1e-3`` overrides
the file), so sweeps and scripts can mutate runs without editing text.  The
EMHDBOX_OUTPUT_ROOT environment variable prefixes relative output
directories.

Exit codes: 0 success, 1 verify failure, 2 blow-up, 3 configuration or
missing-input error, 4 non-contracting iteration.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .config import (
    SCHEMA,
    ConfigError,
    SimConfig,
    build_grid,
    build_initial_data,
    build_model,
    build_stepper,
    default_config,
    load_config,
    serialize_config,
)
from .diagnostics import (
    InsufficientDataError,
    WindowError,
    decay_fit,
    energy_balance,
    gevrey_radius_fit,
    gevrey_rate_check,
    scaling_symmetry_check,
    smallness_sweep,
    stability_check,
)
from .dynamics import check_admissible
from .records import load_run, save_run
from .solvers import (
    BlowUpError,
    PicardConfig,
    PicardDivergenceError,
    evolve,
    picard_solve,
)

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_BLOWUP = 2
EXIT_CONFIG = 3
EXIT_NO_CONTRACTION = 4


def _add_config_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="path to a key = value config file")
    for key in SCHEMA:
        parser.add_argument(f"--{key}", dest=key, default=None, metavar="V",
                            help=argparse.SUPPRESS)


def _gather_config(args) -> SimConfig:
    cfg = load_config(args.config) if args.config else default_config()
    overrides = {key: vars(args)[key] for key in SCHEMA if vars(args).get(key) is not None}
    return cfg.with_overrides(overrides)


def _output_dir(cfg: SimConfig) -> Path:
    out = Path(cfg["output_dir"])
    root = os.environ.get("EMHDBOX_OUTPUT_ROOT")
    if root and not out.is_absolute():
        out = Path(root) / out
    return out


def _attach_gevrey_fits(record, cfg):
    """Per-snapshot radius fits for the JSONL fit columns; null when unfittable."""
    from .diagnostics import FitError
    lams, r2s = [], []
    snaps = record.snapshots
    by_time = {float(t): F for t, F in zip(snaps.times, snaps.fields)} if snaps else {}
    for t in record.times:
        F = by_time.get(float(t))
        if F is None or t <= 0.0:
            lams.append(None)
            r2s.append(None)
            continue
        try:
            lam, r2 = gevrey_radius_fit(F, cfg["diagnostics.alpha"])
        except FitError:
            lam, r2 = None, None
        lams.append(lam)
        r2s.append(r2)
    record.series["gevrey_lambda_hat"] = lams
    record.series["gevrey_r_squared"] = r2s


def cmd_run(args) -> int:
    try:
        cfg = _gather_config(args)
        grid = build_grid(cfg)
        model = build_model(cfg)
        stepper = build_stepper(cfg)
        B0 = build_initial_data(cfg, grid, model)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = _output_dir(cfg)
    label = check_admissible(model)
    try:
        record = evolve(B0, model, stepper, config_snapshot=dict(cfg.values))
    except BlowUpError as err:
        record = err.partial_record
        _attach_gevrey_fits(record, cfg)
        record.report = {"status": "blew_up", "blowup_time": err.time_reached,
                         "admissibility": label}
        save_run(record, out, serialize_config(cfg))
        print(f"blow-up at t = {err.time_reached:.6g}; partial record in {out}", file=sys.stderr)
        return EXIT_BLOWUP

    _attach_gevrey_fits(record, cfg)
    record.report = {
        "status": record.status,
        "admissibility": label,
        "sigma_c": model.sigma_c,
        "final_l2": record.series["l2"][-1],
        "final_hs_sigma_c": record.series["hs_sigma_c"][-1],
    }
    save_run(record, out, serialize_config(cfg))
    print(f"completed: {len(record.times)} snapshots in {out} (admissibility: {label})")
    return EXIT_OK


def cmd_picard(args) -> int:
    try:
        cfg = _gather_config(args)
        grid = build_grid(cfg)
        model = build_model(cfg)
        stepper = build_stepper(cfg)
        B0 = build_initial_data(cfg, grid, model)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = _output_dir(cfg)
    pcfg = PicardConfig(max_outer=args.max_outer, contraction_tol=args.contraction_tol)
    try:
        traj, trace = picard_solve(B0, model, pcfg, stepper)
    except PicardDivergenceError as err:
        out.mkdir(parents=True, exist_ok=True)
        (out / "picard_trace.json").write_text(
            json.dumps(err.trace.as_dict(), sort_keys=True, indent=2) + "\n")
        print(f"no contraction; trace in {out}", file=sys.stderr)
        return EXIT_NO_CONTRACTION
    except BlowUpError as err:
        print(f"blow-up at t = {err.time_reached:.6g}", file=sys.stderr)
        return EXIT_BLOWUP

    # persist the converged trajectory as an ordinary run record
    from .records import RunRecord
    from .spectral import sobolev_norm
    record = RunRecord(model=model, config=dict(cfg.values),
                       times=[float(t) for t in traj.times],
                       snapshots=traj, traces={"picard": trace.as_dict()})
    record.series = {
        "l2": [sobolev_norm(F, 0.0) for F in traj.fields],
        "hs_sigma_c": [sobolev_norm(F, model.sigma_c) for F in traj.fields],
        "hs_sigma_c_half_kappa": [sobolev_norm(F, model.sigma_c + model.kappa / 2) for F in traj.fields],
        "hs_half_kappa": [sobolev_norm(F, model.kappa / 2) for F in traj.fields],
    }
    record.report = {"iterations": len(trace.diff_norms),
                     "diff_norms": trace.diff_norms,
                     "ratios": [r if r is None else float(r) for r in trace.ratios]}
    save_run(record, out, serialize_config(cfg))
    (out / "picard_trace.json").write_text(
        json.dumps(trace.as_dict(), sort_keys=True, indent=2) + "\n")
    ratios = [r for r in trace.ratios if r is not None]
    print(f"converged in {len(trace.diff_norms)} iterations; "
          f"last ratio {ratios[-1] if ratios else 0.0:.3g}; record in {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        cfg = _gather_config(args)
        values = [float(v) for v in args.values.split(",") if v.strip() != ""]
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    rows = []
    if args.axis == "amplitude":
        grid = build_grid(cfg)
        model = build_model(cfg)
        stepper = build_stepper(cfg)
        table = smallness_sweep(values, model, stepper, grid=grid,
                                seed=cfg.get("initial_data.seed") or 7)
        for row in table["rows"]:
            row["s"] = model.s
            row["kappa"] = model.kappa
            row["admissibility"] = check_admissible(model)
            rows.append(row)
        non_monotone = table["non_monotone"]
    else:
        non_monotone = False
        for v in values:
            sub = cfg.with_overrides({f"model.{args.axis}": v})
            grid = build_grid(sub)
            model = build_model(sub)
            stepper = build_stepper(sub)
            table = smallness_sweep([sub["initial_data.amplitude"]], model, stepper,
                                    grid=grid, seed=sub.get("initial_data.seed") or 7)
            row = table["rows"][0]
            row["s"] = model.s
            row["kappa"] = model.kappa
            row["admissibility"] = check_admissible(model)
            rows.append(row)

    fieldnames = ["amplitude", "s", "kappa", "admissibility", "sup_critical_ratio",
                  "contraction_ratio", "verdict"]

    def emit(handle):
        writer = csv.DictWriter(handle, fieldnames=fieldnames, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)

    if args.out:
        with open(args.out, "w", newline="") as fh:
            emit(fh)
    else:
        emit(sys.stdout)
    if non_monotone:
        print("warning: verdicts are not monotone in amplitude", file=sys.stderr)
    return EXIT_OK


def cmd_analyze(args) -> int:
    record_dir = Path(args.record)
    try:
        record = load_run(record_dir)
    except FileNotFoundError as exc:
        print(f"missing record: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    cfg = default_config()
    if record.config and "text" in record.config:
        from .config import parse_config
        cfg = parse_config(record.config["text"])
    model = build_model(cfg)
    alpha = cfg["diagnostics.alpha"]
    delta = cfg["diagnostics.delta"]

    try:
        if args.which == "energy":
            report = energy_balance(record, model)
        elif args.which == "gevrey":
            lo, hi = cfg["diagnostics.gevrey_window_lo"], cfg["diagnostics.gevrey_window_hi"]
            window = (lo, hi) if hi > lo else None
            report = gevrey_rate_check(record, model, alpha, delta, window=window)
        elif args.which == "decay":
            window = (cfg["diagnostics.decay_window_lo"], cfg["diagnostics.decay_window_hi"])
            fits = {k: decay_fit(record, model, k, delta, window) for k in (0, 1)}
            report = {f"k{k}": vars(f) for k, f in fits.items()}
            report["slope_difference"] = fits[1].slope - fits[0].slope
            report["expected_difference"] = -1.0 / model.kappa
        elif args.which == "scaling":
            grid = build_grid(cfg)
            B0 = build_initial_data(cfg, grid, model)
            report = scaling_symmetry_check(B0, model, args.lambda_scale, build_stepper(cfg))
        elif args.which == "stability":
            grid = build_grid(cfg)
            B0 = build_initial_data(cfg, grid, model)
            report = stability_check(B0, args.eta, model, build_stepper(cfg))
        else:
            raise ValueError(f"unknown analysis {args.which!r}")
    except (WindowError, InsufficientDataError) as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    def _default(o):
        if isinstance(o, (np.floating, np.integer)):
            return float(o)
        if isinstance(o, tuple):
            return list(o)
        raise TypeError(f"not serializable: {type(o)}")

    text = json.dumps(report, sort_keys=True, indent=2, default=_default)
    out_json = record_dir / f"analysis_{args.which}.json"
    out_json.write_text(text + "\n")
    out_txt = record_dir / f"analysis_{args.which}.txt"
    out_txt.write_text(_render_text(args.which, report))
    print(text)
    return EXIT_OK


def _render_text(which: str, report) -> str:
    lines = [f"analysis: {which}"]
    stack = [("", report)]
    while stack:
        prefix, obj = stack.pop(0)
        if isinstance(obj, dict):
            for key in sorted(obj):
                stack.append((f"{prefix}{key}.", obj[key]) if isinstance(obj[key], dict)
                             else (f"{prefix}{key}", obj[key]))
        else:
            name, val = prefix, obj
            if isinstance(val, float):
                lines.append(f"  {name:<32s} {val:.6g}")
            elif isinstance(val, list) and len(val) > 8:
                lines.append(f"  {name:<32s} [{len(val)} values]")
            else:
                lines.append(f"  {name:<32s} {val}")
    return "\n".join(lines) + "\n"


def cmd_verify(args) -> int:
    from .verify import run_suite
    ok = run_suite(args.level)
    return EXIT_OK if ok else EXIT_VERIFY_FAIL


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="emhdbox",
                                     description="periodic-box electron-MHD simulator and analysis toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="evolve an initial condition and persist the record")
    _add_config_flags(p_run)
    p_run.set_defaults(fn=cmd_run)

    p_pic = sub.add_parser("picard", help="successive-substitution construction of the solution")
    _add_config_flags(p_pic)
    p_pic.add_argument("--max-outer", type=int, default=12)
    p_pic.add_argument("--contraction-tol", type=float, default=1e-6)
    p_pic.set_defaults(fn=cmd_picard)

    p_sweep = sub.add_parser("sweep", help="scan amplitude or a model exponent; emit a CSV table")
    _add_config_flags(p_sweep)
    p_sweep.add_argument("--axis", choices=("amplitude", "s", "kappa"), required=True)
    p_sweep.add_argument("--values", required=True, help="comma-separated list")
    p_sweep.add_argument("--out", help="CSV path (default: stdout)")
    p_sweep.set_defaults(fn=cmd_sweep)

    p_an = sub.add_parser("analyze", help="post-process a persisted run record")
    p_an.add_argument("--record", required=True, help="run directory")
    p_an.add_argument("--which", choices=("gevrey", "decay", "energy", "scaling", "stability"),
                      required=True)
    p_an.add_argument("--lambda-scale", type=int, default=2)
    p_an.add_argument("--eta", type=float, default=1e-6)
    p_an.set_defaults(fn=cmd_analyze)

    p_ver = sub.add_parser("verify", help="run the invariant suite")
    p_ver.add_argument("--level", choices=("fast", "full"), default="fast")
    p_ver.set_defaults(fn=cmd_verify)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
