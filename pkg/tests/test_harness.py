"""Alignment, ensemble averaging, and the convergence report machinery."""

import numpy as np
import pytest

from dynsir import (
    AlignmentError,
    ConditioningError,
    ExperimentConfig,
    align_trajectory,
    aligned_ensemble,
    pinned_limit,
    run_convergence,
    simulate_model3,
    write_convergence_csvs,
    write_report_text,
)


@pytest.fixture(scope="module")
def mini_report(spec_slow_edge):
    """Small but real convergence run shared by the reporting tests."""
    cfg = ExperimentConfig(spec=spec_slow_edge, n_list=(300, 900),
                          runs_per_n=12, master_seed=7,
                          window=(-1.0, 4.0), grid_step=0.1)
    return cfg, run_convergence(cfg)


class TestExperimentConfig:
    def test_u_grid_covers_window_inclusively(self, spec_slow_edge):
        cfg = ExperimentConfig(spec_slow_edge, (100,), 1, 0,
                              window=(-2.0, 8.0), grid_step=0.01)
        u = cfg.u_grid()
        assert u[0] == -2.0
        assert u[-1] == pytest.approx(8.0)
        assert len(u) == 1001

    def test_n_list_must_increase(self, spec_slow_edge):
        with pytest.raises(ValueError, match="strictly increasing"):
            ExperimentConfig(spec_slow_edge, (900, 300), 1, 0)

    def test_n_list_must_be_positive(self, spec_slow_edge):
        with pytest.raises(ValueError, match="positive"):
            ExperimentConfig(spec_slow_edge, (0, 300), 1, 0)

    def test_runs_floor(self, spec_slow_edge):
        with pytest.raises(ValueError, match="runs_per_n"):
            ExperimentConfig(spec_slow_edge, (300,), 0, 0)

    def test_pin_level_open_interval(self, spec_slow_edge):
        with pytest.raises(ValueError, match="pin_level"):
            ExperimentConfig(spec_slow_edge, (300,), 1, 0, pin_level=1.0)

    def test_window_nonempty(self, spec_slow_edge):
        with pytest.raises(ValueError, match="window"):
            ExperimentConfig(spec_slow_edge, (300,), 1, 0, window=(2.0, 2.0))

    def test_grid_step_positive(self, spec_slow_edge):
        with pytest.raises(ValueError, match="grid_step"):
            ExperimentConfig(spec_slow_edge, (300,), 1, 0, grid_step=0.0)


class TestAlignment:
    def test_pin_is_a_crossing_time(self, spec_slow_edge):
        traj = simulate_model3(spec_slow_edge, 500, 3)
        if not traj.outbreak:
            pytest.skip("minor outbreak draw")
        t_star = align_trajectory(traj, 0.01)
        # infected fraction at t* is >= level, just before it is below
        from dynsir import curves_at
        i_at = curves_at(traj, np.array([t_star]))[1][0, 0]
        i_before = curves_at(traj, np.array([np.nextafter(t_star, 0.0)]))[1][0, 0]
        assert i_at >= 0.01 - 1e-12
        assert i_before < 0.01

    def test_never_reaching_level_raises(self, spec_slow_edge):
        traj = simulate_model3(spec_slow_edge, 500, 3)
        with pytest.raises(AlignmentError, match="never reaching"):
            align_trajectory(traj, 0.999)


class TestPinnedLimit:
    def test_pin_matches_curve_level(self, spec_slow_edge):
        u = np.linspace(-2.0, 8.0, 101)
        curves, t_pin = pinned_limit(spec_slow_edge, 0.01, u)
        i_at_pin = curves.sample("i", np.array([t_pin]))[0, 0]
        assert i_at_pin == pytest.approx(0.01, abs=1e-6)

    def test_horizon_grows_to_cover_late_pins(self, spec_slow_edge):
        # a very low pin level is hit early; a late window forces extension
        u = np.linspace(0.0, 70.0, 71)
        curves, t_pin = pinned_limit(spec_slow_edge, 0.01, u)
        assert curves.t[-1] >= t_pin + 70.0


class TestAlignedEnsemble:
    def test_shapes_and_determinism(self, spec_slow_edge):
        u = np.linspace(-1.0, 3.0, 41)
        out1 = aligned_ensemble(spec_slow_edge, 300, 8, 11, u)
        out2 = aligned_ensemble(spec_slow_edge, 300, 8, 11, u)
        mean, se, sups, discards, events, finals = out1
        assert mean["s"].shape == (1, 41)
        assert se["i"].shape == (1, 41)
        assert sups == []  # no limit passed in
        assert len(events) == len(finals) == 8
        assert all(0.0 < f <= 1.0 for f in finals)
        for c in ("s", "i", "r"):
            assert np.array_equal(mean[c], out2[0][c])

    def test_sup_tracking_against_limit(self, spec_slow_edge):
        u = np.linspace(-1.0, 3.0, 41)
        curves, t_pin = pinned_limit(spec_slow_edge, 0.01, u)
        limit = {c: curves.sample(c, t_pin + u) for c in ("s", "i", "r")}
        mean, se, sups, *_ = aligned_ensemble(
            spec_slow_edge, 300, 8, 11, u, limit_samples=limit)
        assert len(sups) == 8
        # ensemble-mean gap can never exceed the worst single run
        worst_mean_gap = max(float(np.max(np.abs(mean[c] - limit[c])))
                             for c in ("s", "i", "r"))
        assert worst_mean_gap <= max(sups) + 1e-12


class TestRunConvergence:
    def test_subcritical_is_rejected_up_front(self, spec_subcritical):
        cfg = ExperimentConfig(spec_subcritical, (300,), 4, 0)
        with pytest.raises(ConditioningError, match="supercritical") as ei:
            run_convergence(cfg)
        assert ei.value.discards == 0

    def test_report_structure(self, mini_report):
        cfg, report = mini_report
        assert [st.n for st in report.stats] == [300, 900]
        assert report.u_grid.shape == report.limit["s"][0].shape
        for st in report.stats:
            assert st.runs == 12
            assert 0.0 < st.acceptance_fraction <= 1.0
            assert 0.0 < st.final_mean <= 1.0
            assert st.final_se > 0.0
            assert st.events_max >= st.events_mean
            q10, q50, q90 = st.per_run_sup_quantiles
            assert q10 <= q50 <= q90
        assert set(report.monotone_detail) == {"s", "i", "r"}
        assert all(len(v) == 1 for v in report.monotone_detail.values())

    def test_ensemble_tracks_limit_loosely(self, mini_report):
        # 12 runs at n=900 already land within ~0.1 of the limit curve
        _, report = mini_report
        st = report.stats[-1]
        for c in ("s", "i", "r"):
            assert float(np.max(st.sup_dist[c])) < 0.15


class TestWriters:
    def test_csvs_byte_deterministic(self, mini_report, tmp_path):
        _, report = mini_report
        dir_a = tmp_path / "a"
        dir_b = tmp_path / "b"
        paths_a = write_convergence_csvs(report, dir_a)
        paths_b = write_convergence_csvs(report, dir_b)
        assert [p.name for p in paths_a] == [
            "convergence_curves_n300.csv", "convergence_curves_n900.csv",
            "convergence_summary.csv"]
        for pa, pb in zip(paths_a, paths_b):
            assert pa.read_bytes() == pb.read_bytes()

    def test_summary_header_and_rows(self, mini_report, tmp_path):
        _, report = mini_report
        (path,) = [p for p in write_convergence_csvs(report, tmp_path)
                   if p.name.endswith("summary.csv")]
        lines = path.read_text().splitlines()
        header = lines[0].split(",")
        assert header[:6] == ["n", "runs", "discards", "acceptance_fraction",
                              "final_mean", "final_se"]
        assert "per_run_sup_q50" in header
        assert len(lines) == 1 + len(report.stats)
        first = lines[1].split(",")
        assert first[0] == "300"
        assert float(first[4]) == pytest.approx(report.stats[0].final_mean)

    def test_curves_csv_matches_report(self, mini_report, tmp_path):
        _, report = mini_report
        paths = write_convergence_csvs(report, tmp_path)
        rows = paths[0].read_text().splitlines()
        assert rows[0].split(",")[0] == "u"
        # spot-check one interior value against the in-memory report
        col = rows[7].split(",")
        assert float(col[0]) == pytest.approx(report.u_grid[6])
        assert float(col[1]) == pytest.approx(report.stats[0].mean["s"][0, 6])

    def test_report_text_deterministic_and_complete(self, mini_report, tmp_path):
        _, report = mini_report
        p1 = write_report_text(report, tmp_path / "r1.txt")
        p2 = write_report_text(report, tmp_path / "r2.txt")
        assert p1.read_bytes() == p2.read_bytes()
        text = p1.read_text()
        assert "n=300" in text and "n=900" in text
        assert "final fraction" in text
        assert text.strip().endswith(("True", "False"))
