"""Command-line surface: exit codes, printed summaries, artifact files."""

import json

import pytest

from dynsir.cli import cli_main


def run(capsys, *argv):
    code = cli_main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


class TestExitCodes:
    def test_no_arguments_is_usage_error(self, capsys):
        code, _, err = run(capsys)
        assert code == 1
        assert "usage" in err

    def test_unknown_command(self, capsys):
        code, _, err = run(capsys, "frobnicate")
        assert code == 1

    def test_help_exits_zero(self, capsys):
        code, out, _ = run(capsys, "--help")
        assert code == 0
        assert "classify" in out and "convergence" in out

    def test_missing_config_flag(self, capsys):
        code, _, err = run(capsys, "classify")
        assert code == 1
        assert "--config" in err

    def test_nonexistent_config_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "classify", "--config",
                           str(tmp_path / "nope.toml"))
        assert code == 1
        assert "not found" in err

    def test_numerical_failure_is_exit_two(self, capsys, canonical_toml):
        # kernel truncation horizon (~23.4) exceeds this grid: refuse, code 2
        code, _, err = run(capsys, "renewal", "--config", str(canonical_toml),
                           "--t-max", "20", "--grid-step", "0.05")
        assert code == 2
        assert "extend the grid" in err

    def test_conditioning_failure_is_exit_three(self, capsys, write_config):
        path = write_config("""
            [model]
            k = 1
            lambda = 1.0
            mu = 1.0
            beta = 1.0
            gamma = 1.0
            kappa_beta = -1.0
        """)  # R0 = 0.5: conditioning can never succeed
        code, _, err = run(capsys, "convergence", "--config", str(path))
        assert code == 3
        assert "supercritical" in err


class TestClassify:
    def test_canonical_line_and_json(self, capsys, canonical_toml, tmp_path):
        code, out, _ = run(capsys, "classify", "--config", str(canonical_toml),
                           "--out", str(tmp_path))
        assert code == 0
        assert "case 6b, non-homogeneous, R0=2.000000" in out
        assert "decay-rate inequalities: True" in out
        payload = json.loads((tmp_path / "classify.json").read_text())
        assert payload["k"] == 1
        assert payload["overall_ok"] is True
        assert payload["pairs"][0]["case_label"] == "6b"

    def test_two_type_reports_each_pair(self, capsys, write_config, tmp_path):
        path = write_config("""
            [model]
            k = 2
            p = [0.5, 0.5]
            lambda = [[3.0, 2.0], [2.0, 3.0]]
            mu = 1.0
            beta = [[1.0, 1.5], [1.5, 1.0]]
            gamma = [1.0, 1.2]
            kappa_lambda = [[-1.0, 0.0], [0.0, -1.0]]
            kappa_beta = [[0.0, -1.0], [-1.0, 0.0]]
        """)
        code, out, _ = run(capsys, "classify", "--config", str(path),
                           "--out", str(tmp_path))
        assert code == 0
        assert "pair (0,0):" in out and "pair (1,1):" in out
        assert len(json.loads((tmp_path / "classify.json").read_text())["pairs"]) == 4


class TestScalarCommands:
    def test_finalsize_line(self, capsys, canonical_toml):
        code, out, _ = run(capsys, "finalsize", "--config", str(canonical_toml))
        assert code == 0
        assert "s_inf=0.203188, attack=0.796812" in out

    def test_imax_line(self, capsys, canonical_toml):
        code, out, _ = run(capsys, "imax", "--config", str(canonical_toml))
        assert code == 0
        assert "i_max=0.153426 (R0=2.000000)" in out

    def test_imax_rejects_multitype(self, capsys, write_config):
        path = write_config("""
            [model]
            k = 2
            lambda = 3.0
            mu = 1.0
            beta = 1.0
            gamma = 1.0
            kappa_lambda = [[-1.0, -1.0], [-1.0, -1.0]]
        """)
        code, _, err = run(capsys, "imax", "--config", str(path))
        assert code == 1
        assert "single-type" in err

    def test_imax_subcritical_is_numerical_failure(self, capsys, write_config):
        path = write_config("""
            [model]
            k = 1
            lambda = 1.0
            mu = 1.0
            beta = 1.0
            gamma = 1.0
            kappa_beta = -1.0
        """)  # R0 = 0.5: no peak above the initial condition
        code, _, err = run(capsys, "imax", "--config", str(path))
        assert code == 2


class TestSimulate:
    def test_writes_events_and_repeats_byte_identical(self, capsys,
                                                      canonical_toml, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            code, txt, _ = run(capsys, "simulate", "--config", str(canonical_toml),
                               "--out", str(out), "--n", "200")
            assert code == 0
            assert "M3 n=200" in txt
        fa, fb = a / "events_m3_n200.csv", b / "events_m3_n200.csv"
        assert fa.read_bytes() == fb.read_bytes()

    def test_gzip_artifact(self, capsys, canonical_toml, tmp_path):
        code, _, _ = run(capsys, "simulate", "--config", str(canonical_toml),
                         "--out", str(tmp_path), "--n", "200", "--gzip", "--quiet")
        assert code == 0
        assert (tmp_path / "events_m3_n200.csv.gz").exists()

    def test_seed_override_changes_output(self, capsys, canonical_toml, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run(capsys, "simulate", "--config", str(canonical_toml),
            "--out", str(a), "--n", "200", "--quiet")
        run(capsys, "simulate", "--config", str(canonical_toml),
            "--out", str(b), "--n", "200", "--seed", "1234", "--quiet")
        assert (a / "events_m3_n200.csv").read_bytes() != \
               (b / "events_m3_n200.csv").read_bytes()

    def test_pairwise_model_and_conditioning(self, capsys, canonical_toml, tmp_path):
        code, out, _ = run(capsys, "simulate", "--config", str(canonical_toml),
                           "--out", str(tmp_path), "--n", "150", "--model", "1",
                           "--condition")
        assert code == 0
        assert "M1 n=150" in out and "outbreak=True" in out
        assert "discards=" in out
        assert (tmp_path / "events_m1_n150.csv").exists()

    def test_quiet_suppresses_chatter(self, capsys, canonical_toml, tmp_path):
        code, out, _ = run(capsys, "simulate", "--config", str(canonical_toml),
                           "--out", str(tmp_path), "--n", "200", "--quiet")
        assert code == 0
        assert out == ""


class TestCurveCommands:
    @pytest.mark.parametrize("system", ["weak", "strong", "mixed"])
    def test_ode_artifacts(self, capsys, canonical_toml, tmp_path, system):
        code, out, _ = run(capsys, "ode", "--config", str(canonical_toml),
                           "--out", str(tmp_path), "--system", system,
                           "--t-max", "15", "--grid-step", "0.01")
        assert code == 0
        assert "final s:" in out
        csv_path = tmp_path / f"ode_{system}.csv"
        lines = csv_path.read_text().splitlines()
        assert lines[0].startswith("t,")
        assert len(lines) == 1502

    def test_renewal_artifact(self, capsys, canonical_toml, tmp_path):
        code, out, _ = run(capsys, "renewal", "--config", str(canonical_toml),
                           "--out", str(tmp_path), "--t-max", "30",
                           "--grid-step", "0.01")
        assert code == 0
        assert (tmp_path / "renewal.csv").exists()
        # final s close to the known ultimate susceptible fraction
        s_end = float(out.split("final s: ")[1].split()[0])
        assert s_end == pytest.approx(0.203188, abs=5e-3)

    def test_psi_artifact(self, capsys, canonical_toml, tmp_path):
        code, out, _ = run(capsys, "psi", "--config", str(canonical_toml),
                           "--out", str(tmp_path))
        assert code == 0
        assert "growth rate 1.30277" in out
        lines = (tmp_path / "psi.csv").read_text().splitlines()
        assert lines[0] == "z,psi_0"


class TestEnsembleCommands:
    def test_compare_artifacts(self, capsys, canonical_toml, tmp_path):
        code, out, _ = run(capsys, "compare", "--config", str(canonical_toml),
                           "--out", str(tmp_path), "--n", "300", "--runs", "6",
                           "--quiet")
        assert code == 0
        csv_lines = (tmp_path / "compare.csv").read_text().splitlines()
        assert csv_lines[0] == "u,s_sim_0,i_sim_0,r_sim_0,s_limit_0,i_limit_0,r_limit_0"
        assert len(csv_lines) == 42  # 41 grid points for window [-1, 3] step 0.1
        gp = (tmp_path / "compare.gp").read_text()
        assert "plot" in gp and "compare.csv" in gp

    def test_convergence_artifacts_reproducible(self, capsys, canonical_toml,
                                                tmp_path):
        names = ["convergence_curves_n300.csv", "convergence_curves_n900.csv",
                 "convergence_summary.csv", "convergence_report.txt"]
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            code, txt, _ = run(capsys, "convergence", "--config",
                               str(canonical_toml), "--out", str(out), "--quiet")
            assert code == 0
        for name in names:
            assert (a / name).read_bytes() == (b / name).read_bytes()
