"""Command-line entry point: design, check-gain, simulate, sweep, and the
two worked-example runners.

All commands are configuration-driven (JSON, versioned schema) with
repeatable ``--set key.path=value`` overrides that are type-checked before
any computation. Outputs are deterministic given the config and seed:
floats print with 17 significant digits so reruns are byte-identical.

Exit codes: 0 success, 2 configuration error, 3 invariant violation under
``--strict``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .analysis import (
    check_ios_bound,
    default_fit_window,
    fit_decay_rate,
    lyapunov_oracle,
    run_example_31,
    run_example_32,
)
from .config import (
    apply_overrides,
    build_design,
    build_scenario,
    load_config,
    resolve_kappa,
    validate_config,
)
from .errors import ConfigError, DecayedToFloor, ParobsError
from .observer_design import (
    certificate_summary,
    design_to_json,
    small_gain_predictor,
    small_gain_zoh,
)
from .simulator import Trajectory, simulate
from .sturm_liouville import basis_to_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VIOLATION = 3


def _fmt(v) -> str:
    return format(float(v), ".17g")


def _write_json(path: str, doc: dict) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_trajectory_csv(path: str, traj: Trajectory) -> None:
    m = traj.zeta.shape[1]
    header = ["t", "err_l2", "err_sup"] + [f"zeta_{i + 1}" for i in range(m)] + ["sample_flag"]
    lines = [",".join(header)]
    for k in range(traj.times.size):
        row = [_fmt(traj.times[k]), _fmt(traj.error_l2[k]), _fmt(traj.error_sup[k])]
        row += [_fmt(traj.zeta[k, i]) for i in range(m)]
        row.append("1" if traj.sample_flag[k] else "0")
        lines.append(",".join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_margins_csv(path: str, traj: Trajectory, ios=None, lyap=None) -> None:
    header = ["t", "err_l2"]
    cols = [traj.times, traj.error_l2]
    if ios is not None:
        header += ["ios_rhs", "ios_margin"]
        cols += [ios.rhs, ios.margins]
    if lyap is not None:
        header += ["lyapunov_V", "lyapunov_rhs"]
        cols += [lyap.V, lyap.rhs]
    lines = [",".join(header)]
    for k in range(traj.times.size):
        lines.append(",".join(_fmt(c[k]) for c in cols))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_fields(outdir: str, traj: Trajectory) -> None:
    os.makedirs(outdir, exist_ok=True)
    for k in range(traj.times.size):
        lines = ["x,u,w"]
        for i in range(traj.grid.size):
            lines.append(f"{_fmt(traj.grid[i])},{_fmt(traj.u[k, i])},{_fmt(traj.w[k, i])}")
        with open(os.path.join(outdir, f"snapshot_{k:05d}.csv"), "w") as fh:
            fh.write("\n".join(lines) + "\n")


def _gain_report(cfg: dict, design):
    variant = cfg.get("observer", {}).get("variant", "predictor")
    gain_cfg = cfg.get("gain", {})
    h = float(gain_cfg.get("h", cfg.get("schedule", {}).get("h", 0.0)))
    if h <= 0.0:
        raise ConfigError("gain.h", "need a positive sampling diameter")
    kappa = resolve_kappa(cfg, design)
    fn = small_gain_predictor if variant == "predictor" else small_gain_zoh
    return fn(design, h, kappa)


def _report_to_dict(report) -> dict:
    return {
        "variant": report.variant,
        "h": report.h,
        "kappa": report.kappa,
        "gamma": report.gamma,
        "omega": report.omega,
        "feasible": report.feasible,
        "mu": report.mu,
        "g_tilde": report.g_tilde,
        "coefficients": {
            "initial": report.coefficients.initial,
            "noise": list(map(float, np.atleast_1d(report.coefficients.noise))),
            "mismatch": report.coefficients.mismatch,
        },
    }


def cmd_design(args) -> int:
    cfg = apply_overrides(load_config(args.config), args.set or [])
    validate_config(cfg)
    design = build_design(cfg)
    reports = []
    if "gain" in cfg:
        reports.append(_gain_report(cfg, design))
    summary = certificate_summary(design, reports)
    print(summary)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        basis_ref = os.path.join(args.out, "basis.csv")
        basis_to_csv(design.basis, basis_ref)
        _write_json(os.path.join(args.out, "design.json"), design_to_json(design, basis_ref))
        with open(os.path.join(args.out, "certificate.txt"), "w") as fh:
            fh.write(summary + "\n")
    return EXIT_OK


def cmd_check_gain(args) -> int:
    cfg = apply_overrides(load_config(args.config), args.set or [])
    validate_config(cfg)
    design = build_design(cfg)
    report = _gain_report(cfg, design)
    print(f"Omega = {_fmt(report.omega)}")
    print(f"feasible = {str(report.feasible).lower()}")
    print(f"gamma = {_fmt(report.gamma)}  mu = {_fmt(report.mu)}  kappa = {_fmt(report.kappa)}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write_json(os.path.join(args.out, "gain.json"), _report_to_dict(report))
    if args.strict and not report.feasible:
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = apply_overrides(load_config(args.config), args.set or [])
    validate_config(cfg, need_schedule=True)
    design = build_design(cfg)
    scenario = build_scenario(cfg, design=design, seed=args.seed)
    report = None
    try:
        report = _gain_report(
            {**cfg, "gain": cfg.get("gain", {"h": scenario.schedule.diameter})}, design
        )
    except ParobsError:
        pass
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        traj = simulate(scenario)

    doc: dict = {
        "label": scenario.label,
        "variant": scenario.variant,
        "final_error_l2": float(traj.error_l2[-1]),
        "initial_error_l2": float(traj.error_l2[0]),
        "snapshots": int(traj.times.size),
        "samples": len(traj.events),
    }
    violated = False
    ios = None
    lyap = None
    if report is not None:
        doc["gain"] = _report_to_dict(report)
        if report.feasible:
            ios = check_ios_bound(traj, report, scenario.disturbances)
            doc["ios"] = {
                "violations": ios.violations,
                "worst_relative_margin": ios.worst_relative_margin,
            }
            violated = violated or ios.violations > 0
            if cfg.get("analysis", {}).get("lyapunov", False):
                lyap = lyapunov_oracle(
                    traj,
                    design,
                    int(cfg.get("analysis", {}).get("lyapunov_tail", 20)),
                    nonlinearity=scenario.nonlinearity,
                    disturbances=scenario.disturbances,
                )
                doc["lyapunov"] = {
                    "violations": lyap.violations,
                    "error_le_V": lyap.e_le_V_ok,
                    "v0_bound": lyap.v0_bound_ok,
                    "parseval_deficit": lyap.parseval_deficit,
                }
                violated = violated or lyap.violations > 0 or not lyap.e_le_V_ok
    try:
        fit = fit_decay_rate(
            traj.times, traj.error_l2, default_fit_window(traj, scenario.schedule.diameter)
        )
        doc["fitted_rate"] = fit.rate
        doc["fitted_rate_ci"] = fit.ci_halfwidth
    except (DecayedToFloor, ValueError):
        pass

    print(
        f"simulated {scenario.variant} observer: ||e(0)|| = {_fmt(traj.error_l2[0])}, "
        f"||e(T)|| = {_fmt(traj.error_l2[-1])}"
    )
    if "ios" in doc:
        print(f"ios violations = {doc['ios']['violations']}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write_trajectory_csv(os.path.join(args.out, "trajectory.csv"), traj)
        _write_json(os.path.join(args.out, "report.json"), doc)
        _write_margins_csv(os.path.join(args.out, "margins.csv"), traj, ios, lyap)
        if cfg.get("output", {}).get("fields", False):
            _write_fields(os.path.join(args.out, "fields"), traj)
    if args.strict and violated:
        return EXIT_VIOLATION
    return EXIT_OK


def _sweep_row(packed) -> dict:
    index, cfg, param, value, do_sim, seed = packed
    cfg = json.loads(cfg)
    if param == "h":
        cfg.setdefault("gain", {})["h"] = value
        if "schedule" in cfg:
            cfg["schedule"]["h"] = value
    elif param == "kappa":
        cfg.setdefault("gain", {})["kappa"] = value
        cfg["gain"].pop("omega", None)
    elif param == "Q":
        cfg.setdefault("design", {})["Q"] = value
    elif param == "noise_amplitude":
        xi = cfg.setdefault("disturbances", {}).setdefault(
            "xi", {"kind": "sinusoid", "amplitude": 0.0, "omega": 2.0}
        )
        if isinstance(xi, list):
            for x in xi:
                x["amplitude"] = value
        else:
            xi["amplitude"] = value
    design = build_design(cfg)
    row = {"index": index, "parameter": param, "value": value}
    try:
        report = _gain_report(cfg, design)
        row["omega"] = report.omega
        row["feasible"] = report.feasible
    except ParobsError as exc:
        row["omega"] = float("nan")
        row["feasible"] = False
        row["error"] = type(exc).__name__
        report = None
    if do_sim:
        scenario = build_scenario(cfg, design=design, seed=seed)
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            traj = simulate(scenario)
        row["final_error_l2"] = float(traj.error_l2[-1])
        try:
            fit = fit_decay_rate(
                traj.times, traj.error_l2, default_fit_window(traj, scenario.schedule.diameter)
            )
            row["fitted_rate"] = fit.rate
        except (DecayedToFloor, ValueError):
            row["fitted_rate"] = float("nan")
        if report is not None and report.feasible:
            ios = check_ios_bound(traj, report, scenario.disturbances)
            row["ios_violations"] = ios.violations
            row["worst_relative_margin"] = ios.worst_relative_margin
    return row


def cmd_sweep(args) -> int:
    cfg = apply_overrides(load_config(args.config), args.set or [])
    validate_config(cfg, need_schedule=cfg.get("sweep", {}).get("simulate", False))
    sweep = cfg.get("sweep")
    if not sweep:
        raise ConfigError("sweep", "missing sweep section")
    param = sweep["parameter"]
    values = [float(v) for v in sweep["values"]]
    do_sim = bool(sweep.get("simulate", False))
    seed = int(cfg.get("seed", 0)) if args.seed is None else args.seed
    workers = int(sweep.get("workers", 1))
    base = json.dumps(cfg)
    tasks = [(i, base, param, v, do_sim, seed) for i, v in enumerate(values)]
    if workers > 1 and do_sim:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_row, tasks))
    else:
        rows = [_sweep_row(t) for t in tasks]
    rows.sort(key=lambda r: r["index"])  # ordering by grid index, not completion

    columns = ["index", "parameter", "value", "omega", "feasible"]
    extras = ["final_error_l2", "fitted_rate", "ios_violations", "worst_relative_margin", "error"]
    for c in extras:
        if any(c in r for r in rows):
            columns.append(c)
    lines = [",".join(columns)]
    for r in rows:
        cells = []
        for c in columns:
            v = r.get(c, "")
            if isinstance(v, bool):
                cells.append(str(v).lower())
            elif isinstance(v, float):
                cells.append(_fmt(v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    print(text, end="")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "sweep.csv"), "w") as fh:
            fh.write(text)
    return EXIT_OK


def _noise_spec(args):
    if args.noise_amplitude <= 0.0:
        return None
    return {
        "kind": args.noise_kind,
        "amplitude": args.noise_amplitude,
        "omega": args.noise_omega,
        "seed": args.seed or 0,
    }


def cmd_example31(args) -> int:
    rep = run_example_31(
        p=args.p,
        h=args.h,
        omega=args.omega,
        variant=args.variant,
        noise=_noise_spec(args),
        mismatch=args.mismatch,
        horizon=args.horizon,
        nodes=args.nodes,
        dt=args.dt,
        lyapunov=args.lyapunov,
    )
    doc = rep.to_dict()
    print(f"Omega = {_fmt(rep.report.omega)} (feasible = {str(rep.report.feasible).lower()})")
    print(f"max diameter h* = {_fmt(rep.h_star)}")
    if rep.fit is not None:
        print(f"fitted decay rate = {_fmt(rep.fit.rate)} (certified kappa = {_fmt(rep.kappa)})")
    print(f"verdict = {rep.verdict}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write_json(os.path.join(args.out, "report.json"), doc)
        _write_trajectory_csv(os.path.join(args.out, "trajectory.csv"), rep.trajectory)
        _write_margins_csv(os.path.join(args.out, "margins.csv"), rep.trajectory, rep.ios, rep.lyapunov)
    if args.strict:
        bad = (rep.ios is not None and rep.ios.violations > 0) or (
            rep.lyapunov is not None and not rep.lyapunov.e_le_V_ok
        )
        if bad:
            return EXIT_VIOLATION
    return EXIT_OK


def cmd_example32(args) -> int:
    rep = run_example_32(
        p=args.p,
        q=args.q,
        h=args.h,
        omega=args.omega,
        noise=_noise_spec(args),
        horizon=args.horizon,
        nodes=args.nodes,
        dt=args.dt,
    )
    doc = rep.to_dict()
    print(f"Omega = {_fmt(rep.report.omega)} (feasible = {str(rep.report.feasible).lower()})")
    print(f"max diameter h* = {_fmt(rep.h_star)}, using h = {_fmt(rep.h)}")
    print(f"theta = {_fmt(rep.theta)}")
    if rep.fit is not None:
        print(f"fitted sup-norm decay rate = {_fmt(rep.fit.rate)} (kappa = {_fmt(rep.kappa)})")
    if rep.noise_bound is not None:
        print(
            f"sup error <= theta * sup|xi| = {_fmt(rep.noise_bound)}: "
            f"{'holds' if rep.noise_bound_ok else 'violated'}"
        )
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write_json(os.path.join(args.out, "report.json"), doc)
        _write_trajectory_csv(os.path.join(args.out, "trajectory.csv"), rep.trajectory)
        _write_margins_csv(os.path.join(args.out, "margins.csv"), rep.trajectory, rep.ios)
    if args.strict:
        bad = (rep.ios is not None and rep.ios.violations > 0) or (
            rep.noise_bound_ok is False
        )
        if bad:
            return EXIT_VIOLATION
    return EXIT_OK


def _add_common(sp, with_config=True):
    if with_config:
        sp.add_argument("--config", required=True, help="path to the JSON run configuration")
        sp.add_argument(
            "--set",
            action="append",
            metavar="KEY=VALUE",
            help="override a config field (dotted path, JSON value); repeatable",
        )
    sp.add_argument("--out", default=None, help="output directory")
    sp.add_argument("--seed", type=int, default=None, help="override the config seed")
    sp.add_argument("--strict", action="store_true", help="exit 3 on invariant violations")


def _add_example_common(sp):
    sp.add_argument("--p", type=float, default=1.0, help="diffusion constant")
    sp.add_argument("--omega", type=float, default=0.0, help="decay fraction kappa/mu in [0,1)")
    sp.add_argument("--noise-kind", default="sinusoid", choices=["constant", "sinusoid", "random"])
    sp.add_argument("--noise-amplitude", type=float, default=0.0)
    sp.add_argument("--noise-omega", type=float, default=2.0)
    sp.add_argument("--horizon", type=float, default=None)
    sp.add_argument("--nodes", type=int, default=201)
    sp.add_argument("--dt", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parobs",
        description="sampled-data observer design and verification for 1-D parabolic plants",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("design", help="synthesize a design and emit its certificate")
    _add_common(sp)
    sp.set_defaults(fn=cmd_design)

    sp = sub.add_parser("check-gain", help="evaluate the small-gain value only (no simulation)")
    _add_common(sp)
    sp.set_defaults(fn=cmd_check_gain)

    sp = sub.add_parser("simulate", help="co-simulate plant and observer, check bounds")
    _add_common(sp)
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("sweep", help="evaluate a parameter grid into a long-format CSV")
    _add_common(sp)
    sp.set_defaults(fn=cmd_sweep)

    sp = sub.add_parser("example31", help="run the Neumann-ends worked design end to end")
    _add_common(sp, with_config=False)
    _add_example_common(sp)
    sp.add_argument("--h", type=float, default=0.5, help="sampling diameter")
    sp.add_argument("--variant", default="predictor", choices=["predictor", "zoh"])
    sp.add_argument("--mismatch", type=float, default=0.0, help="||v - v~|| of a constant input mismatch")
    sp.add_argument("--lyapunov", action="store_true", help="also run the decay-functional oracle")
    sp.set_defaults(fn=cmd_example31)

    sp = sub.add_parser("example32", help="run the boundary-measurement worked design end to end")
    _add_common(sp, with_config=False)
    _add_example_common(sp)
    sp.add_argument("--q", type=float, default=0.0, help="reaction constant")
    sp.add_argument("--h", type=float, default=None, help="sampling diameter (default: h*/2)")
    sp.set_defaults(fn=cmd_example32)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ParobsError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
