"""One stochastic path next to its noise-decomposed companions.

The same seed drives four runs of the extinction scenario: the full
dynamics, the noise-free drift, and the two drift-free noise panels.
Writes CSVs to ./demo_out and prints where each run ends up.  If
matplotlib is importable, also saves a quick picture.
"""

from pathlib import Path

from ussir import SimConfig, simulate
from ussir.models import suppress
from ussir.scenario import build_model, bundled_scenario_path, load_scenario

OUT = Path("demo_out")


def main():
    cfg = load_scenario(bundled_scenario_path("table1"))
    model = build_model(cfg)
    sim = SimConfig(horizon=30.0, dt=cfg.dt, seed=cfg.seed, record_stride=20)

    panels = {
        "full dynamics": model,
        "drift only": suppress(model),
        "diffusion only": suppress(model, drift=True, diffusion=False),
        "jumps only": suppress(model, drift=True, small_jumps=False, large_jumps=False),
    }

    OUT.mkdir(exist_ok=True)
    trajectories = {}
    for label, variant in panels.items():
        traj = simulate(variant, cfg.initial_state, sim)
        trajectories[label] = traj
        stem = label.replace(" ", "_")
        traj.write_csv(OUT / f"{stem}.csv")
        print(
            f"{label:16s} final (X, Y, Z) = "
            f"({traj.x[-1]:.4f}, {traj.y[-1]:.3e}, {traj.z[-1]:.4f})"
        )

    print(f"\nCSV files in {OUT.resolve()}")

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not installed; skipping the picture")
        return

    fig, axes = plt.subplots(len(panels), 1, figsize=(8, 10), sharex=True)
    for ax, (label, traj) in zip(axes, trajectories.items()):
        ax.plot(traj.times, traj.x, label="susceptible")
        ax.plot(traj.times, traj.y, label="infected")
        ax.plot(traj.times, traj.z, label="recovered")
        ax.set_ylabel(label, fontsize=8)
    axes[0].legend(loc="upper right", fontsize=8)
    axes[-1].set_xlabel("t")
    fig.tight_layout()
    fig.savefig(OUT / "panels.png", dpi=120)
    print(f"picture saved to {OUT / 'panels.png'}")


if __name__ == "__main__":
    main()
