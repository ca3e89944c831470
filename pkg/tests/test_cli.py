"""Command-line interface: dispatch, exit codes, persistence, determinism."""

import json

import pytest

from chemobound.cli import main
from chemobound.config import (apply_overrides, config_hash,
                               parse_config_text)
from chemobound.errors import ConfigError

BLOWUP_CONFIG = """
model.chi = 10.0
model.xi = 0.5
grid.shells = 48
profile.kind = gaussian
profile.amplitude = 1e4
profile.width = 0.15
solver.t_final = 1.0
solver.grow_after = 1
solver.cfl = 0.2
solver.blowup_threshold = 1e6
solver.sample_every = 5
bound.corollary = 2
verify.samples = 200
"""


class TestConfigParsing:
    def test_defaults_filled(self):
        cfg, axes = parse_config_text("")
        assert cfg["model.dim"] == 3
        assert axes == {}

    def test_comments_and_blanks(self):
        cfg, _ = parse_config_text("# comment\n\nmodel.chi = 2.5 # inline\n")
        assert cfg["model.chi"] == 2.5

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            parse_config_text("model.typo = 1\n")

    def test_bad_value_rejected(self):
        with pytest.raises(ConfigError):
            parse_config_text("grid.shells = many\n")

    def test_sweep_axis(self):
        _, axes = parse_config_text("sweep.model.chi = 5, 10, 20\n")
        assert axes == {"model.chi": [5.0, 10.0, 20.0]}

    def test_unknown_sweep_key_rejected(self):
        with pytest.raises(ConfigError):
            parse_config_text("sweep.model.typo = 1,2\n")

    def test_overrides(self):
        cfg, _ = parse_config_text("")
        apply_overrides(cfg, ["model.chi=7"])
        assert cfg["model.chi"] == 7.0
        with pytest.raises(ConfigError):
            apply_overrides(cfg, ["nonsense=1"])

    def test_hash_stability(self):
        a, _ = parse_config_text("model.chi = 1.0\n")
        b, _ = parse_config_text("model.chi = 1.0\n")
        c, _ = parse_config_text("model.chi = 2.0\n")
        assert config_hash(a) == config_hash(b) != config_hash(c)


class TestCheckParams:
    def test_admissible_exit_zero(self, capsys):
        code = main(["check-params", "-n", "3", "-p", "3", "-q", "6",
                     "--s1", "4", "--s2", "2"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["admissible"] is True
        assert "config_hash" in payload

    def test_inadmissible_exit_one(self, capsys):
        code = main(["check-params", "-n", "3", "-p", "2", "-q", "3",
                     "--s1", "3", "--s2", "1.5"])
        assert code == 1

    def test_missing_indices_usage_error(self, capsys):
        assert main(["check-params", "-n", "3"]) == 2

    def test_bad_override_usage_error(self, capsys):
        code = main(["check-params", "-n", "3", "-p", "2", "-q", "4",
                     "--s1", "3", "--s2", "1.5", "--set", "model.nope=1"])
        assert code == 2


class TestBound:
    def test_corollary2_exponents(self, capsys):
        code = main(["bound", "-n", "3", "--corollary", "2", "--E0", "1",
                     "--set", "bound.C_GN=1"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["indices"]["eta"] == [1.5] * 4
        assert payload["indices"]["k_eta"] == pytest.approx([3.0] * 4)
        assert payload["t_lower"] > 0

    def test_missing_E0_usage_error(self, capsys):
        code = main(["bound", "-n", "3", "--corollary", "2",
                     "--set", "bound.C_GN=1"])
        assert code == 2

    def test_estimated_constant_recorded(self, capsys):
        code = main(["bound", "-n", "3", "--corollary", "2", "--E0", "1",
                     "--set", "verify.samples=100",
                     "--set", "verify.ascent_steps=0"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["C_GN_source"] == "estimated"
        assert payload["C_GN_safety"] == 2.0

    def test_optimize_dominates_corollary1(self, capsys):
        common = ["-n", "3", "-p", "2", "--E0", "1", "--set", "bound.C_GN=1"]
        assert main(["bound", "--corollary", "1"] + common) == 0
        reference = json.loads(capsys.readouterr().out)["t_lower"]
        code = main(["optimize-bound", "-q", "4",
                     "--set", "opt.coarse_grid=4", "--set", "opt.eps_grid=4",
                     "--set", "opt.refine_iters=20"] + common)
        assert code == 0
        optimized = json.loads(capsys.readouterr().out)["t_lower"]
        assert optimized >= reference * (1.0 - 1e-12)


class TestRegion:
    def test_row_values(self, capsys, tmp_path):
        code = main(["region", "-n", "3", "-o", str(tmp_path),
                     "--set", "region.p_min=2", "--set", "region.p_max=3",
                     "--set", "region.p_step=1"])
        assert code == 0
        lines = (tmp_path / "region.csv").read_text().splitlines()
        assert lines[0] == "p,q_low,q_high"
        assert lines[1] == "2.0,3.0,6.0"
        assert lines[2] == "3.0,3.0,inf"


class TestSimulate:
    def test_blowup_report_and_csv(self, capsys, tmp_path):
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text(BLOWUP_CONFIG)
        code = main(["simulate", "--config", str(cfg_file),
                     "-o", str(tmp_path / "out")])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["blew_up"] is True
        assert payload["trigger"] == "linf_threshold"
        csv_text = (tmp_path / "out" / "trajectory.csv").read_text()
        assert csv_text.startswith("t,E_pq,")
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert "timestamp" in report["metadata"]

    def test_output_root_env(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("CHEMOBOUND_OUTPUT_ROOT", str(tmp_path / "root"))
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text(BLOWUP_CONFIG + "solver.t_final = 1e-4\n"
                            "solver.blowup_threshold = 1e12\n")
        assert main(["simulate", "--config", str(cfg_file)]) == 0
        assert (tmp_path / "root" / "report.json").exists()


class TestVerifySubcommands:
    def test_verify_equivalence(self, capsys):
        code = main(["verify-equivalence", "-n", "4",
                     "--set", "verify.trials=2000"])
        assert code == 0
        assert json.loads(capsys.readouterr().out)["violations"] == 0

    def test_verify_gn(self, capsys):
        code = main(["verify-gn", "-n", "3", "--eta", "1.5",
                     "--set", "verify.samples=100",
                     "--set", "verify.ascent_steps=0",
                     "--set", "grid.shells=32"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["inflated"] == pytest.approx(2.0 * payload["estimate"])

    def test_verify_embed(self, capsys):
        code = main(["verify-embed", "-n", "3", "--eta", "1.5",
                     "--set", "verify.samples=200",
                     "--set", "grid.shells=32"])
        assert code == 0
        assert json.loads(capsys.readouterr().out)["violations"] == 0

    def test_verify_odi_decay_run(self, capsys):
        code = main(["verify-odi", "-n", "3", "--corollary", "2",
                     "--set", "model.chi=0", "--set", "model.xi=0",
                     "--set", "grid.shells=32",
                     "--set", "profile.amplitude=5",
                     "--set", "profile.width=0.2",
                     "--set", "solver.t_final=0.02",
                     "--set", "solver.dt_max=1e-3",
                     "--set", "solver.sample_every=1",
                     "--set", "verify.samples=100",
                     "--set", "verify.ascent_steps=0"])
        assert code == 0
        assert json.loads(capsys.readouterr().out)["violations"] == 0


class TestSweep:
    def _run(self, tmp_path, name):
        cfg_file = tmp_path / "sweep.cfg"
        cfg_file.write_text(BLOWUP_CONFIG
                            + "sweep.model.chi = 5, 10, 20\n"
                            + "verify.ascent_steps = 0\n"
                            + f"output.dir = {tmp_path / name}\n")
        assert main(["sweep", "--config", str(cfg_file)]) == 0
        return (tmp_path / name / "summary.csv").read_text()

    def test_summary_shape_and_margin(self, capsys, tmp_path):
        summary = self._run(tmp_path, "a")
        lines = summary.splitlines()
        assert lines[0] == "run_id,blew_up,t_detect,t_lower,margin"
        assert len(lines) == 4
        for line in lines[1:]:
            run_id, blew_up, t_detect, t_lower, margin = line.split(",")
            if blew_up == "true":
                assert float(margin) >= 0.0

    def test_deterministic_summary(self, capsys, tmp_path):
        assert self._run(tmp_path, "a") == self._run(tmp_path, "b")

    def test_sweep_without_axes_is_usage_error(self, capsys, tmp_path):
        cfg_file = tmp_path / "sweep.cfg"
        cfg_file.write_text(f"output.dir = {tmp_path / 'x'}\n")
        assert main(["sweep", "--config", str(cfg_file)]) == 2
