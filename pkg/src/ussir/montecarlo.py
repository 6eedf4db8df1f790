"""Seeded path ensembles and theory-versus-simulation comparison.

Per path the empirical counterpart of the exponential rate is the finite
horizon log slope (ln Y_T - ln Y_0) / T; the persistence counterpart is the
trapezoidal time average of the infected component, over the full window or
its tail half.  The closed-form criteria bound asymptotic quantities, so a
finite-horizon comparison always carries slack; the comparator makes that
slack explicit instead of pretending the constants are sharp.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .criteria import EXTINCT, INDETERMINATE, PERSISTENT, CriteriaReport
from .integrator import SimConfig, Trajectory, _path_key, path_key_hex, run_paths
from .models import SIMPLEX, ModelSpec

__all__ = [
    "EnsembleStats",
    "lyapunov_estimate",
    "run_ensemble",
    "time_average_infected",
    "verdict",
    "write_ensemble_csv",
]

FULL = "full"
TAIL_HALF = "tail_half"

# below roughly one individual at the scales the bundled scenarios use
Y_EXTINCT_SIMPLEX = 1e-6
Y_EXTINCT_OCTANT = 1e-3


def lyapunov_estimate(traj: Trajectory) -> float:
    """Finite-horizon log slope (ln Y_T - ln Y_0) / T of the infected
    component; the positivity floor keeps the logs defined."""
    horizon = traj.times[-1] - traj.times[0]
    if horizon <= 0:
        raise ValueError("trajectory must span a positive horizon")
    return float((np.log(traj.y[-1]) - np.log(traj.y[0])) / horizon)


def time_average_infected(traj: Trajectory, window: str = FULL) -> float:
    """Trapezoidal time average of the infected component over the full
    recorded window or its tail half."""
    if window not in (FULL, TAIL_HALF):
        raise ValueError(f"window must be {FULL!r} or {TAIL_HALF!r}")
    times, values = traj.times, traj.y
    if window == TAIL_HALF:
        cut = times[0] + 0.5 * (times[-1] - times[0])
        start = int(np.searchsorted(times, cut))
        if start > 0 and times[start - 1] >= cut:
            start -= 1
        times, values = times[start:], values[start:]
    if len(times) < 2:
        return float(values[-1])
    return float(np.trapezoid(values, times) / (times[-1] - times[0]))


@dataclass(frozen=True)
class EnsembleStats:
    """Per-path statistics of one seeded ensemble plus its thresholds."""

    master_seed: int
    path_seeds: tuple[str, ...]
    lyapunov: np.ndarray
    mean_infected: np.ndarray
    tail_mean_infected: np.ndarray
    y_final: np.ndarray
    y_extinct: float

    @property
    def paths(self) -> int:
        return len(self.path_seeds)

    @property
    def extinction_fraction(self) -> float:
        return float(np.mean(self.y_final < self.y_extinct))

    def summary(self) -> dict[str, float]:
        out: dict[str, float] = {
            "paths": float(self.paths),
            "y_extinct": self.y_extinct,
            "extinction_fraction": self.extinction_fraction,
        }
        for name, arr in (
            ("lyapunov", self.lyapunov),
            ("mean_infected", self.mean_infected),
            ("tail_mean_infected", self.tail_mean_infected),
        ):
            q25, q75 = np.percentile(arr, [25.0, 75.0])
            out[f"{name}_mean"] = float(arr.mean())
            out[f"{name}_median"] = float(np.median(arr))
            out[f"{name}_iqr"] = float(q75 - q25)
        return out


def run_ensemble(
    model: ModelSpec,
    s0,
    cfg: SimConfig,
    paths: int,
    y_extinct: Optional[float] = None,
) -> EnsembleStats:
    """Run ``paths`` independent paths under ``cfg.seed``.

    Path i draws from the stream keyed by hash(seed, i), so the ensemble is
    reproducible and each path matches a solo run of the same stream.
    """
    if paths < 1:
        raise ValueError("paths must be positive")
    if y_extinct is None:
        y_extinct = Y_EXTINCT_SIMPLEX if model.domain == SIMPLEX else Y_EXTINCT_OCTANT
    keys = [_path_key(cfg.seed, i) for i in range(paths)]
    bundle = run_paths(model, s0, cfg, keys)
    trajectories = [bundle.trajectory(i) for i in range(paths)]
    return EnsembleStats(
        master_seed=cfg.seed,
        path_seeds=tuple(path_key_hex(cfg.seed, i) for i in range(paths)),
        lyapunov=np.array([lyapunov_estimate(tr) for tr in trajectories]),
        mean_infected=np.array([time_average_infected(tr, FULL) for tr in trajectories]),
        tail_mean_infected=np.array([time_average_infected(tr, TAIL_HALF) for tr in trajectories]),
        y_final=np.array([tr.y[-1] for tr in trajectories]),
        y_extinct=float(y_extinct),
    )


def verdict(stats: EnsembleStats, report: CriteriaReport, slack: float) -> str:
    """Compare ensemble medians against the report's one-sided bounds.

    Extinct reports require the median log slope at most
    -rate*(1-slack) + slack; persistent reports require the median tail
    average at least bound*(1-slack).  Indeterminate reports admit no
    comparison.
    """
    if slack <= 0:
        raise ValueError("slack must be positive")
    if report.classification == INDETERMINATE:
        return "inapplicable"
    if report.classification == EXTINCT:
        threshold = -report.extinction_rate_lb * (1.0 - slack) + slack
        ok = float(np.median(stats.lyapunov)) <= threshold
    elif report.classification == PERSISTENT:
        threshold = report.mean_infected_lb * (1.0 - slack)
        ok = float(np.median(stats.tail_mean_infected)) >= threshold
    else:
        raise ValueError(f"unknown classification {report.classification!r}")
    return "consistent" if ok else "inconsistent"


def write_ensemble_csv(stats: EnsembleStats, path) -> None:
    """One row per path, then the summary block as trailing comment lines."""
    lines = ["path,seed,lyapunov,mean_infected,tail_mean_infected,Y_T"]
    for i in range(stats.paths):
        lines.append(
            f"{i},{stats.path_seeds[i]},{stats.lyapunov[i]:.17g},"
            f"{stats.mean_infected[i]:.17g},{stats.tail_mean_infected[i]:.17g},"
            f"{stats.y_final[i]:.17g}"
        )
    for key, value in stats.summary().items():
        lines.append(f"# {key} = {value:.17g}")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
