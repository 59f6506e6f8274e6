import json

import pytest

from nonlocalopt.cli import DEFAULTS, load_config, run_cli
from nonlocalopt.errors import ConfigError
from nonlocalopt.reporting import read_trace_csv


class TestLoadConfig:
    def test_empty_file_gives_defaults(self, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text("{}")
        cfg = load_config(p)
        assert cfg == DEFAULTS

    def test_override_beats_file(self, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps({"kernel": {"n": 4}}))
        cfg = load_config(p, ["kernel.n=32"])
        assert cfg["kernel"]["n"] == 32

    def test_unknown_key_named_in_error(self, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps({"kernell": {"n": 4}}))
        with pytest.raises(ConfigError, match="kernell"):
            load_config(p)

    def test_unknown_nested_key_named(self):
        with pytest.raises(ConfigError, match="kernel.sigma"):
            load_config(None, ["kernel.sigma=3"])

    def test_json_values_parsed(self):
        cfg = load_config(None, ["check.n_values=[2,4]", "field=sin"])
        assert cfg["check"]["n_values"] == [2, 4]
        assert cfg["field"] == "sin"


class TestExitCodes:
    def test_no_arguments_usage_error(self, capsys):
        assert run_cli([]) == 2

    def test_unknown_command_usage_error(self):
        assert run_cli(["frobnicate"]) == 2

    def test_bad_override_is_config_error(self, tmp_path):
        code = run_cli(
            ["grad-check", "--out", str(tmp_path), "--set", "kernell.n=2"]
        )
        assert code == 2

    def test_grad_check_quadratic_passes(self, tmp_path):
        code = run_cli(
            ["grad-check", "--field", "quadratic", "--n", "16", "--out", str(tmp_path)]
        )
        assert code == 0
        assert (tmp_path / "grad_check.csv").exists()
        assert (tmp_path / "manifest.json").exists()
        assert (tmp_path / "config.resolved.json").exists()

    def test_grad_check_failing_tolerance(self, tmp_path):
        code = run_cli(
            [
                "grad-check", "--field", "sin", "--n", "2", "--out", str(tmp_path),
                "--set", "check.tolerance=1e-12",
            ]
        )
        assert code == 1

    def test_hess_check_central(self, tmp_path):
        code = run_cli(
            [
                "hess-check", "--field", "quadratic", "--n", "8", "--out", str(tmp_path),
                "--set", "check.tolerance=1e-5",
            ]
        )
        assert code == 0

    def test_sweep_unknown_check_rejected(self, tmp_path):
        code = run_cli(["sweep", "--check", "bogus", "--out", str(tmp_path)])
        assert code == 2

    def test_sweep_gradient_localization(self, tmp_path):
        code = run_cli(
            [
                "sweep", "--check", "gradient-localization", "--out", str(tmp_path),
                "--set", "check.n_values=[4,8]", "--set", "check.probes=10",
            ]
        )
        assert code == 0
        assert (tmp_path / "sweep_gradient-localization.csv").exists()


class TestRunsAndArtifacts:
    def test_descend_writes_trace(self, tmp_path):
        code = run_cli(
            [
                "descend", "--field", "quadratic", "--out", str(tmp_path),
                "--set", "descend.max_iters=20",
            ]
        )
        assert code == 0
        cols = read_trace_csv(tmp_path / "trace.csv")
        assert "x" in cols and "objective" in cols
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["command"] == "descend"
        assert "trace.csv" in manifest["outputs"]

    def test_sgd_run(self, tmp_path):
        code = run_cli(
            [
                "sgd", "--field", "quadratic", "--out", str(tmp_path),
                "--set", "sgd.K=30",
                "--set", 'domain={"dim":1,"lower":[-1.0],"upper":[1.0]}',
            ]
        )
        assert code == 0
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["summary"]["gap_bound"] > 0

    def test_newton_run(self, tmp_path):
        code = run_cli(
            [
                "newton", "--field", "quartic", "--out", str(tmp_path),
                "--set", "kernel.n=16", "--set", "newton.max_iters=8",
            ]
        )
        assert code == 0

    def test_descend_dispatches_all_run_spec_methods(self, tmp_path):
        # the run-spec method strings all route through the descend command
        common = [
            "--set", "descend.max_iters=10",
            "--set", "descend.x0=[0.4]",
            "--set", "descend.schedule.alpha=0.05",
            "--set", 'domain={"dim":1,"lower":[-1.0],"upper":[1.0]}',
            "--set", "sgd.K=10",
            "--set", "newton.x0=[0.4]", "--set", "newton.max_iters=5",
        ]
        for i, method in enumerate(["nlgd", "nlgd-ls", "esgd", "nl-newton", "gd", "newton"]):
            out = tmp_path / f"m{i}"
            code = run_cli(
                ["descend", "--field", "quadratic", "--out", str(out),
                 "--set", f'descend.method="{method}"'] + common
            )
            assert code == 0, method
            assert (out / "trace.csv").exists()

    def test_pv_epsilon_config_accepted(self, tmp_path):
        code = run_cli(
            [
                "grad-check", "--field", "quadratic", "--n", "8", "--out", str(tmp_path),
                "--set", "quadrature.pv_epsilon=1e-6",
            ]
        )
        assert code == 0

    def test_midpoint_scheme_accepted(self, tmp_path):
        code = run_cli(
            [
                "grad-check", "--field", "quadratic", "--n", "8", "--out", str(tmp_path),
                "--set", "quadrature.scheme=midpoint",
                "--set", "quadrature.resolution=512",
                "--set", "check.tolerance=1e-5",
            ]
        )
        assert code == 0

    def test_bad_scheme_rejected(self, tmp_path):
        code = run_cli(
            [
                "grad-check", "--out", str(tmp_path),
                "--set", "quadrature.scheme=simpson",
            ]
        )
        assert code == 2

    def test_inconsistent_domain_dim_rejected(self, tmp_path):
        code = run_cli(
            ["descend", "--out", str(tmp_path), "--set", "domain.dim=2"]
        )
        assert code == 2

    def test_pulse_artifacts_and_parseback(self, tmp_path):
        code = run_cli(
            [
                "pulse", "--out", str(tmp_path),
                "--set", 'pulse.families=["gaussian"]',
                "--set", "pulse.n_values=[1,2]",
            ]
        )
        assert code == 0
        for n in (1, 2):
            cols = read_trace_csv(tmp_path / f"pulse_gaussian_n{n}.csv")
            assert abs(cols["theta"][-1] - 0.5) <= 0.02
        assert (tmp_path / "pulse_convergence.svg").exists()

    def test_pulse_from_config_file(self, tmp_path):
        import xml.etree.ElementTree as ET

        cfg = tmp_path / "pulse.json"
        cfg.write_text(
            json.dumps({"pulse": {"families": ["bump"], "n_values": [3], "max_iters": 150}})
        )
        out = tmp_path / "run"
        code = run_cli(["pulse", "--config", str(cfg), "--out", str(out)])
        assert code == 0
        cols = read_trace_csv(out / "pulse_bump_n3.csv")
        assert len(cols["theta"]) >= 2
        ET.parse(out / "pulse_convergence.svg")
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["pulse"]["families"] == ["bump"]
        assert "pulse_bump_n3.csv" in manifest["outputs"]

    def test_deterministic_outputs(self, tmp_path):
        args = [
            "descend", "--field", "sin", "--seed", "3",
            "--set", "descend.max_iters=15",
            "--set", "descend.x0=[0.6]", "--set", "descend.schedule.alpha=0.02",
        ]
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert run_cli(args + ["--out", str(out1)]) == 0
        assert run_cli(args + ["--out", str(out2)]) == 0
        assert (out1 / "trace.csv").read_bytes() == (out2 / "trace.csv").read_bytes()

    def test_resolved_config_reproduces_run(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert run_cli(
            [
                "descend", "--field", "quadratic", "--out", str(out1),
                "--set", "descend.max_iters=12", "--set", "kernel.n=4",
            ]
        ) == 0
        resolved = out1 / "config.resolved.json"
        assert run_cli(["descend", "--config", str(resolved), "--out", str(out2)]) == 0
        assert (out1 / "trace.csv").read_bytes() == (out2 / "trace.csv").read_bytes()
        assert (
            json.loads((out1 / "config.resolved.json").read_text())
            == json.loads((out2 / "config.resolved.json").read_text())
        )
