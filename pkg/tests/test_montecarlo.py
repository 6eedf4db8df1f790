import numpy as np
import pytest

from ussir.criteria import CriteriaReport
from ussir.integrator import SimConfig, Trajectory, simulate
from ussir.models import suppress
from ussir.montecarlo import (
    EnsembleStats,
    lyapunov_estimate,
    run_ensemble,
    time_average_infected,
    verdict,
    write_ensemble_csv,
)


def _traj(times, ys):
    times = np.asarray(times, dtype=float)
    ys = np.asarray(ys, dtype=float)
    states = np.stack([np.full_like(ys, 0.5), ys, np.full_like(ys, 0.5)], axis=-1)
    return Trajectory(times=times, states=states, floor_hits=0, simplex_drift=None)


def _stats(lyapunov=(), tail=()):
    lyap = np.asarray(lyapunov, dtype=float)
    tail = np.asarray(tail, dtype=float) if len(tail) else np.zeros_like(lyap)
    n = max(len(lyap), len(tail))
    return EnsembleStats(
        master_seed=0,
        path_seeds=tuple(f"{i:032x}" for i in range(n)),
        lyapunov=lyap if len(lyap) else np.zeros(n),
        mean_infected=np.zeros(n),
        tail_mean_infected=tail,
        y_final=np.full(n, 0.1),
        y_extinct=1e-6,
    )


class TestLyapunov:
    def test_constant_is_zero(self):
        assert lyapunov_estimate(_traj([0, 1, 2], [0.3, 0.3, 0.3])) == 0.0

    def test_exact_exponential(self):
        times = np.linspace(0.0, 10.0, 101)
        traj = _traj(times, np.exp(-0.2 * times))
        assert lyapunov_estimate(traj) == pytest.approx(-0.2, abs=1e-12)

    def test_needs_positive_horizon(self):
        with pytest.raises(ValueError):
            lyapunov_estimate(_traj([1.0], [0.5]))


class TestTimeAverage:
    def test_constant(self):
        assert time_average_infected(_traj([0, 1, 2], [0.4, 0.4, 0.4])) == pytest.approx(0.4)

    def test_linear_exact(self):
        times = np.linspace(0.0, 1.0, 11)
        assert time_average_infected(_traj(times, times)) == pytest.approx(0.5, abs=1e-15)

    def test_tail_half_of_linear(self):
        times = np.linspace(0.0, 1.0, 11)
        assert time_average_infected(_traj(times, times), "tail_half") == pytest.approx(0.75, abs=1e-15)

    def test_unknown_window(self):
        with pytest.raises(ValueError):
            time_average_infected(_traj([0, 1], [1, 1]), "quarter")


class TestRunEnsemble:
    def test_single_path_summaries_match_path(self, scenario):
        cfg, model = scenario("table1")
        sim = SimConfig(horizon=1.0, dt=0.001, seed=5, record_stride=10)
        stats = run_ensemble(model, cfg.initial_state, sim, paths=1)
        assert stats.paths == 1
        summary = stats.summary()
        assert summary["lyapunov_median"] == stats.lyapunov[0]
        assert summary["tail_mean_infected_median"] == stats.tail_mean_infected[0]
        assert summary["lyapunov_iqr"] == 0.0

    def test_same_seed_reproduces_everything(self, scenario):
        cfg, model = scenario("table1")
        sim = SimConfig(horizon=0.5, dt=0.001, seed=17, record_stride=10)
        s1 = run_ensemble(model, cfg.initial_state, sim, paths=4)
        s2 = run_ensemble(model, cfg.initial_state, sim, paths=4)
        assert np.array_equal(s1.lyapunov, s2.lyapunov)
        assert np.array_equal(s1.mean_infected, s2.mean_infected)
        assert np.array_equal(s1.y_final, s2.y_final)
        assert s1.path_seeds == s2.path_seeds

    def test_noise_free_reduction_reproduces_deterministic_path(self, scenario):
        cfg, model = scenario("table1")
        silent = suppress(model)
        sim = SimConfig(horizon=1.0, dt=0.001, seed=3, record_stride=100)
        stats = run_ensemble(silent, cfg.initial_state, sim, paths=5)
        solo = simulate(silent, cfg.initial_state, sim)
        expected = lyapunov_estimate(solo)
        assert np.all(stats.lyapunov == expected)
        assert np.all(stats.y_final == solo.y[-1])

    def test_extinction_fraction_uses_threshold(self):
        stats = _stats(lyapunov=[0.0, 0.0])
        assert stats.extinction_fraction == 0.0  # y_final 0.1 above 1e-6

    def test_paths_must_be_positive(self, scenario):
        cfg, model = scenario("table1")
        with pytest.raises(ValueError):
            run_ensemble(model, cfg.initial_state, SimConfig(horizon=1.0), paths=0)


class TestVerdict:
    def test_extinct_consistent(self):
        report = CriteriaReport(model_id="x", classification="extinct", extinction_rate_lb=0.16)
        stats = _stats(lyapunov=[-0.2, -0.2, -0.2])
        assert verdict(stats, report, slack=0.5) == "consistent"

    def test_persistent_inconsistent(self):
        report = CriteriaReport(
            model_id="x", classification="persistent", lambda0=1.0, lam=0.14, mean_infected_lb=0.14
        )
        stats = _stats(lyapunov=[0, 0, 0], tail=[0.05, 0.05, 0.05])
        assert verdict(stats, report, slack=0.3) == "inconsistent"

    def test_indeterminate_inapplicable(self):
        report = CriteriaReport(model_id="x", classification="indeterminate")
        assert verdict(_stats(lyapunov=[0.0]), report, slack=0.5) == "inapplicable"

    def test_slack_must_be_positive(self):
        report = CriteriaReport(model_id="x", classification="indeterminate")
        with pytest.raises(ValueError):
            verdict(_stats(lyapunov=[0.0]), report, slack=0.0)


class TestEnsembleCsv:
    def test_deterministic_bytes_and_layout(self, tmp_path):
        stats = _stats(lyapunov=[-0.1, -0.2], tail=[0.3, 0.4])
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_ensemble_csv(stats, p1)
        write_ensemble_csv(stats, p2)
        assert p1.read_bytes() == p2.read_bytes()
        lines = p1.read_text().splitlines()
        assert lines[0] == "path,seed,lyapunov,mean_infected,tail_mean_infected,Y_T"
        assert len([l for l in lines if not l.startswith("#")]) == 3
        assert any(l.startswith("# lyapunov_median") for l in lines)
