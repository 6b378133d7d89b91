"""Command-line entry point.

Subcommands:
    run       execute one scenario file, write trace CSV + plot script
    suite     execute a suite manifest, write per-scenario traces + summary
    analyze   rootlocus or design-condition tables
    metrics   recompute metrics from an exported trace

Exit codes: 0 success, 2 configuration error, 3 numeric/simulation error,
4 I/O error. Errors also emit one JSON line on stderr with a machine-readable
category.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis
from .config_io import (
    condition_job_from_ini,
    rootlocus_job_from_ini,
    scenario_from_ini,
    suite_from_ini,
)
from .controllers import L1Config
from .harness import (
    ConfigError,
    ScenarioConfig,
    SimulationDivergence,
    compute_metrics,
    run_scenario,
    run_suite,
    summary_table,
)
from .nominal import build_nominal_model, build_rrc_gains
from .traceio import export_plotscript, export_table, export_trace, import_trace

_EXIT_CONFIG = 2
_EXIT_NUMERIC = 3
_EXIT_IO = 4


def _fail(category: str, detail: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": category, "detail": detail}) + "\n")
    return code


def _apply_overrides(cfg: ScenarioConfig, args) -> ScenarioConfig:
    overrides = {}
    if args.ts is not None:
        overrides["T_s"] = args.ts
    if args.t_filter is not None:
        overrides["T"] = args.t_filter
    if args.ka is not None:
        overrides["K_a"] = args.ka
    if args.decimate is not None:
        overrides["decimate"] = args.decimate
    return cfg.with_overrides(**overrides) if overrides else cfg


def _warn_condition(cfg: ScenarioConfig):
    if cfg.controller == "rrc":
        return
    params = cfg.make_params()
    model = build_nominal_model(params, build_rrc_gains(params))
    budget = analysis.StabilityBudget.from_envelope(
        params,
        [cfg.mass],
        max_contact_stiffness=cfg.contact_stiffness,
        gravity_comp=cfg.gravity_on and cfg.controller == "l1ac",
    )
    report = analysis.check_stability_condition(
        model, L1Config(T_s=cfg.T_s, T=cfg.T, K_a=cfg.K_a), budget,
        qd_peak=abs(cfg.q_d_amplitude),
    )
    if not report.satisfied:
        sys.stderr.write(
            f"warning: filter design condition violated for {cfg.name!r} "
            f"(margin={report.margin:.3g}); running anyway\n"
        )


def _cmd_run(args) -> int:
    cfg = _apply_overrides(scenario_from_ini(args.scenario), args)
    if args.check_condition:
        _warn_condition(cfg)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        trace = run_scenario(cfg)
    except SimulationDivergence as exc:
        if exc.partial_trace is not None:
            export_trace(exc.partial_trace, out_dir / f"{cfg.name}_partial.csv")
        raise
    csv_path = export_trace(trace, out_dir / f"{cfg.name}.csv")
    export_plotscript(csv_path.name, out_dir / f"plot_{cfg.name}.py")
    report = compute_metrics(trace, cfg)
    print(f"trace: {csv_path}")
    print(f"metrics: {report}")
    return 0


def _cmd_suite(args) -> int:
    suite = suite_from_ini(args.manifest)
    if any((args.ts, args.t_filter, args.ka, args.decimate)):
        suite = type(suite)(
            name=suite.name,
            scenarios=tuple(_apply_overrides(s, args) for s in suite.scenarios),
        )
    if args.check_condition:
        for scen in suite.scenarios:
            _warn_condition(scen)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = run_suite(suite)
    for name, trace in result.traces.items():
        csv_path = export_trace(trace, out_dir / f"{name}.csv")
        export_plotscript(csv_path.name, out_dir / f"plot_{name}.py")
    rows = summary_table(suite, result)
    export_table(rows, out_dir / f"{suite.name}_summary.csv")
    for row in rows:
        print(",".join(str(v) for v in row))
    if not result.ok:
        failed = ", ".join(sorted(result.errors))
        return _fail("numeric", f"scenarios failed: {failed}", _EXIT_NUMERIC)
    return 0


def _cmd_analyze(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.what == "rootlocus":
        job = rootlocus_job_from_ini(args.config)
        if job["log_scale"]:
            grid = np.logspace(
                np.log10(job["lambda_min"]), np.log10(job["lambda_max"]), job["points"])
        else:
            grid = np.linspace(job["lambda_min"], job["lambda_max"], job["points"])
        if job["include_zero"]:
            grid = np.concatenate([[0.0], grid])
        result = analysis.root_locus(job["params"].omega, grid)
        path = export_table(result.csv_rows(), out_dir / "rootlocus.csv")
        print(f"rootlocus table: {path}")
        return 0
    job = condition_job_from_ini(args.config)
    params = job["params"]
    model = build_nominal_model(params, build_rrc_gains(params))
    budget = analysis.StabilityBudget.from_envelope(
        params, job["masses"],
        max_contact_stiffness=job["max_contact_stiffness"],
        gravity_comp=job["gravity_comp"],
    )
    rows = [[
        "T_s", "T", "K_a", "satisfied", "margin", "lhs", "rhs_best", "rho_best",
        "norm_G1", "norm_G2", "norm_Gd", "reason",
    ]]
    all_ok = True
    for T in job["time_constants"]:
        cfg = L1Config(T_s=job["sample_period"], T=T, K_a=job["filter_gain"])
        rep = analysis.check_stability_condition(model, cfg, budget, qd_peak=job["qd_peak"])
        all_ok &= rep.satisfied
        rows.append([
            cfg.T_s, T, cfg.K_a, int(rep.satisfied), rep.margin, rep.lhs,
            rep.rhs_best, rep.rho_best, rep.norm_g1, rep.norm_g2, rep.norm_gd,
            rep.reason,
        ])
    path = export_table(rows, out_dir / "condition.csv")
    for row in rows:
        print(",".join(str(v) for v in row))
    print(f"condition table: {path}")
    return 0


def _cmd_metrics(args) -> int:
    trace = import_trace(args.trace)
    report = compute_metrics(trace)
    print(json.dumps({
        "static_error_rad": report.static_error_rad,
        "overshoot_pct": report.overshoot_pct,
        "settling_time_s": report.settling_time_s,
        "peak_current_permil": report.peak_current_permil,
        "rise_delay_s": report.rise_delay_s,
        "peak_speed_after_contact": report.peak_speed_after_contact,
    }))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sea-l1ac",
        description="Elastic-joint position control simulation and analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--out-dir", default="results", help="output directory")
        p.add_argument("--decimate", type=int, default=None,
                       help="record every Nth controller step")
        p.add_argument("--ts", type=float, default=None, help="override sample period T_s")
        p.add_argument("--t-filter", type=float, default=None,
                       help="override filter time constant T")
        p.add_argument("--ka", type=float, default=None, help="override filter gain K_a")
        p.add_argument("--check-condition", action="store_true",
                       help="evaluate the filter design condition first (warn only)")

    p_run = sub.add_parser("run", help="run one scenario file")
    p_run.add_argument("scenario")
    add_common(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_suite = sub.add_parser("suite", help="run a suite manifest")
    p_suite.add_argument("manifest")
    add_common(p_suite)
    p_suite.set_defaults(func=_cmd_suite)

    p_an = sub.add_parser("analyze", help="design analysis tables")
    p_an.add_argument("what", choices=["rootlocus", "condition"])
    p_an.add_argument("config")
    p_an.add_argument("--out-dir", default="results")
    p_an.set_defaults(func=_cmd_analyze)

    p_met = sub.add_parser("metrics", help="metrics from an exported trace")
    p_met.add_argument("trace")
    p_met.set_defaults(func=_cmd_metrics)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail("config", str(exc), _EXIT_CONFIG)
    except SimulationDivergence as exc:
        return _fail("numeric", str(exc), _EXIT_NUMERIC)
    except (ArithmeticError, analysis.UnstableSystemError, np.linalg.LinAlgError) as exc:
        return _fail("numeric", str(exc), _EXIT_NUMERIC)
    except OSError as exc:
        return _fail("io", str(exc), _EXIT_IO)
    except ValueError as exc:
        return _fail("config", str(exc), _EXIT_CONFIG)


if __name__ == "__main__":
    raise SystemExit(main())
