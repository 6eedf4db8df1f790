"""Command line front end: scenario ingestion and CSV emission.

Subcommands::

    ussir simulate --config table1.scn [--out DIR] [--seed N] [--dt X] [--horizon T]
    ussir ensemble --config table2.scn [--paths P] [--slack S] [...]
    ussir criteria --config table3.scn [...]
    ussir validate --config table1.scn [...]

``--config`` takes a filesystem path or the name of a bundled scenario
(``table1`` .. ``table7``).  Flag overrides beat file values.  Exit status:
0 success, 1 error (including failed validation), 2 theory-versus-simulation
verdict "inconsistent".

``simulate`` writes the stochastic trajectory plus panel companions: the
deterministic run (all noise zeroed) and, where the model carries that kind
of noise, drift-free diffusion-only and jumps-only runs.  All outputs are
plain CSV with fixed formatting, so rerunning a scenario with the same seed
reproduces every file byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from . import __version__
from .criteria import CRITERIA_CSV_HEADER, report_for_model
from .models import SIMPLEX, suppress, check_conservation, check_positivity_ratios
from .montecarlo import run_ensemble, verdict, write_ensemble_csv
from .integrator import simulate
from .scenario import (
    ScenarioConfig,
    ScenarioError,
    build_model,
    bundled_scenario_path,
    bundled_scenarios,
    load_scenario,
    sim_config,
)

__all__ = ["main"]


def _resolve_config(name: str) -> Path:
    path = Path(name)
    if path.is_file():
        return path
    return bundled_scenario_path(name)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="scenario file or bundled scenario name")
    parser.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--dt", type=float, default=None, help="override the time step")
    parser.add_argument("--horizon", type=float, default=None, help="override the horizon")
    parser.add_argument("--paths", type=int, default=None, help="override the path count")


def _out_dir(args, cfg: ScenarioConfig) -> Path:
    out = args.out or cfg.out_dir or "ussir_out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load(args) -> ScenarioConfig:
    return load_scenario(_resolve_config(args.config))


def cmd_simulate(args) -> int:
    cfg = _load(args)
    model = build_model(cfg)
    sim = sim_config(cfg, seed=args.seed, dt=args.dt, horizon=args.horizon)
    out = _out_dir(args, cfg)
    panels = [
        ("stochastic", model),
        ("deterministic", suppress(model)),
    ]
    if model.has_diffusion:
        panels.append(("diffusion_only", suppress(model, drift=True, diffusion=False)))
    if model.has_small_jumps or model.has_large_jumps:
        panels.append(
            ("jumps_only", suppress(model, drift=True, small_jumps=False, large_jumps=False))
        )
    for label, variant in panels:
        traj = simulate(variant, cfg.initial_state, sim)
        target = out / f"{cfg.stem}_{label}.csv"
        traj.write_csv(target)
        print(f"wrote {target} (floor_hits={traj.floor_hits})")
    return 0


def cmd_ensemble(args) -> int:
    cfg = _load(args)
    model = build_model(cfg)
    sim = sim_config(cfg, seed=args.seed, dt=args.dt, horizon=args.horizon)
    paths = args.paths if args.paths is not None else cfg.paths
    out = _out_dir(args, cfg)
    stats = run_ensemble(model, cfg.initial_state, sim, paths, y_extinct=cfg.y_extinct)
    target = out / f"{cfg.stem}_ensemble.csv"
    write_ensemble_csv(stats, target)
    print(f"wrote {target}")
    try:
        report = report_for_model(model)
    except ValueError:
        print("verdict: inapplicable (no closed-form criterion for this model)")
        return 0
    outcome = verdict(stats, report, slack=args.slack)
    summary = stats.summary()
    print(f"classification: {report.classification}")
    print(f"median_lyapunov: {summary['lyapunov_median']:.6g}")
    print(f"median_tail_mean_infected: {summary['tail_mean_infected_median']:.6g}")
    print(f"verdict: {outcome}")
    return 2 if outcome == "inconsistent" else 0


def cmd_criteria(args) -> int:
    cfg = _load(args)
    model = build_model(cfg)
    report = report_for_model(model)
    out = _out_dir(args, cfg)
    text_target = out / f"{cfg.stem}_criteria.txt"
    text_target.write_text(report.to_text())
    csv_target = out / f"{cfg.stem}_criteria.csv"
    with open(csv_target, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CRITERIA_CSV_HEADER)
        writer.writerow(report.to_csv_row())
    sys.stdout.write(report.to_text())
    print(f"wrote {text_target}")
    print(f"wrote {csv_target}")
    return 0


def cmd_validate(args) -> int:
    cfg = _load(args)
    model = build_model(cfg)
    ok = True
    if model.domain == SIMPLEX:
        report = check_conservation(model)
        print(
            f"conservation: max_deviation={report.max_abs_deviation:.3e} "
            f"tolerance={report.tolerance:.1e} passed={report.passed}"
        )
        for name, value in report.breakdown.items():
            print(f"  {name}: {value:.3e}")
        ok = ok and report.passed
    else:
        print("conservation: not applicable (octant domain)")
    positivity = check_positivity_ratios(model)
    print(f"positivity: min_ratio={positivity.min_ratio:.6g} passed={positivity.passed}")
    ok = ok and positivity.passed
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ussir",
        description="Stochastic SIR scenarios: simulate, ensemble statistics, "
        "closed-form criteria, and model validation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="one stochastic path plus noise-panel companions")
    _add_common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_ens = sub.add_parser("ensemble", help="seeded path ensemble, statistics, and verdict")
    _add_common(p_ens)
    p_ens.add_argument("--slack", type=float, default=0.5, help="comparator slack (default 0.5)")
    p_ens.set_defaults(func=cmd_ensemble)

    p_cri = sub.add_parser("criteria", help="closed-form extinction/persistence report")
    _add_common(p_cri)
    p_cri.set_defaults(func=cmd_criteria)

    p_val = sub.add_parser("validate", help="conservation and jump-positivity checks")
    _add_common(p_val)
    p_val.set_defaults(func=cmd_validate)

    sub.add_parser("scenarios", help="list bundled scenarios").set_defaults(
        func=lambda args: (print("\n".join(bundled_scenarios())), 0)[1]
    )

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
