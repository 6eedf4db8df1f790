"""Closed-form extinction/persistence thresholds for all bundled scenarios.

Each report is a pure function of the coefficient bounds: an extinction
rate lower bound, or a persistence pair whose ratio bounds the long-run
average infected level, with every gate listed alongside.
"""

from ussir import report_for_model
from ussir.scenario import build_model, bundled_scenario_path, bundled_scenarios, load_scenario


def main():
    for name in bundled_scenarios():
        cfg = load_scenario(bundled_scenario_path(name))
        report = report_for_model(build_model(cfg))
        print(f"=== {name} ({cfg.model_id}) -> {report.classification}")
        if report.extinction_rate_lb is not None:
            print(f"    decay rate lower bound: {report.extinction_rate_lb:.6g}")
        if report.mean_infected_lb is not None:
            print(
                f"    persistence pair: lambda0={report.lambda0:.6g} "
                f"lambda={report.lam:.6g} -> mean infected >= {report.mean_infected_lb:.6g}"
            )
        if report.r_tilde is not None:
            print(f"    threshold value: {report.r_tilde:.6g}")
        if report.invariant_set_bound is not None:
            print(f"    invariant set: total population <= {report.invariant_set_bound:.6g}")
        for cond in report.side_conditions:
            mark = "ok " if cond.satisfied else "NOT"
            print(f"    [{mark}] {cond.name}: lhs={cond.lhs:.6g} rhs={cond.rhs:.6g}")
        print()


if __name__ == "__main__":
    main()
