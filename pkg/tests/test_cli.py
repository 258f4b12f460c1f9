import json

import numpy as np
import pytest

from awareplan.cli import main
from awareplan.config_io import (
    ConfigError,
    load_scenario,
    scenario_from_dict,
    serialize_scenario,
)
from awareplan.scenario import PRESETS


class TestPresets:
    def test_paper_sec4_block(self):
        c = load_scenario("paper-sec4")
        assert c.human.theta1 == ((1.0, 0.0), (0.0, 1.0))
        assert c.human.theta2 == ((1.0, 0.0), (0.0, 1.0))
        assert c.human.theta3 == 2.5
        assert c.human.theta4 == 8e-3
        assert c.robot.theta5 == ((100.0, 0.0), (0.0, 100.0))
        assert c.robot.theta6 == ((0.06, 0.0), (0.0, 0.06))
        assert c.omega_h == 0.5
        assert c.robot.p_threshold == 0.05
        assert c.prior_p_concerned == 0.5
        assert c.x_r0 == (0.0, -10.0)
        assert c.x_h0 == (-5.0, 0.0)
        assert c.human.v_nominal == 0.5
        assert c.human.goal == (5.0, 0.0)
        assert c.robot.goal == (0.0, 10.0)

    def test_paper_sec5_block(self):
        c = load_scenario("paper-sec5")
        assert c.robot.horizon == 2
        assert c.human.horizon == 2
        assert c.robot.input_box == ((-0.1, 0.1), (-0.1, 0.1))
        assert c.robot.goal == (0.0, -3.0)
        assert c.human.goal == (-2.0, 0.0)
        assert c.x_r0 == (0.0, 3.0)
        assert c.x_h0 == (2.0, 0.0)
        assert c.robot.p_threshold == 0.05

    def test_desk_variants_exist(self):
        assert "sec4-desk" in PRESETS and "sec5-desk" in PRESETS


class TestConfigIO:
    def test_round_trip(self, tmp_path):
        c = load_scenario("paper-sec4")
        path = tmp_path / "cfg.json"
        serialize_scenario(c, path)
        again = load_scenario(str(path))
        assert again == c

    def test_p_threshold_out_of_range_rejected(self):
        d = json.loads(serialize_scenario(load_scenario("paper-sec4")))
        d["robot"]["p_threshold"] = 1.5
        with pytest.raises(ConfigError, match="p_threshold"):
            scenario_from_dict(d)

    def test_unknown_keys_rejected(self):
        d = json.loads(serialize_scenario(load_scenario("paper-sec4")))
        d["unknown_knob"] = 3
        with pytest.raises(ConfigError):
            scenario_from_dict(d)

    def test_start_outside_grid_rejected(self):
        d = json.loads(serialize_scenario(load_scenario("paper-sec4")))
        d["x_h0"] = [99.0, 0.0]
        with pytest.raises(ConfigError, match="outside"):
            scenario_from_dict(d)

    def test_missing_file(self):
        with pytest.raises(FileNotFoundError):
            load_scenario("/nonexistent/path.json")


class TestCli:
    def test_unknown_subcommand_exits_2(self, capsys):
        assert main(["frobnicate"]) == 2

    def test_run_writes_trace(self, tmp_path):
        rc = main(["--out-dir", str(tmp_path), "run", "--scenario", "sec4-desk",
                   "--seed", "7", "--out", "trace.json"])
        assert rc == 0
        data = json.loads((tmp_path / "trace.json").read_text())
        assert data["config"]["seed"] == 7
        assert len(data["ticks"]) >= 1
        assert (tmp_path / "trace.csv").exists()

    def test_run_determinism_byte_identical(self, tmp_path):
        for name in ("a.json", "b.json"):
            main(["--out-dir", str(tmp_path), "run", "--scenario", "sec4-desk",
                  "--seed", "7", "--out", name])
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_plot_emits_data(self, tmp_path):
        main(["--out-dir", str(tmp_path), "run", "--scenario", "sec4-desk",
              "--out", "trace.json"])
        rc = main(["--out-dir", str(tmp_path), "plot", "--trace",
                   str(tmp_path / "trace.json")])
        assert rc == 0
        data = json.loads((tmp_path / "trace-plotdata.json").read_text())
        assert len(data["human_path"]) == len(data["robot_path"])
        assert data["grid"]["cell_size"] > 0

    def test_bad_scenario_errors(self, capsys):
        assert main(["run", "--scenario", "/no/such/file.json"]) == 1
        assert "error" in capsys.readouterr().err

    def test_outdir_env_var(self, tmp_path, monkeypatch):
        monkeypatch.setenv("AWAREPLAN_OUTDIR", str(tmp_path / "envout"))
        rc = main(["run", "--scenario", "sec4-desk", "--out", "t.json"])
        assert rc == 0
        assert (tmp_path / "envout" / "t.json").exists()

    def test_serialized_indices_recomputable(self, tmp_path):
        main(["--out-dir", str(tmp_path), "run", "--scenario", "sec4-desk",
              "--out", "trace.json"])
        data = json.loads((tmp_path / "trace.json").read_text())
        g_r = np.array(data["config"]["robot"]["goal"])
        g_h = np.array(data["config"]["human"]["goal"])
        r = np.array([t["x_r"] for t in data["ticks"]] + [data["final_x_r"]])
        h = np.array([t["x_h"] for t in data["ticks"]] + [data["final_x_h"]])
        pi_r = float(np.sum((r - g_r) ** 2))
        pi_h = float(np.sum((h - g_h) ** 2))
        assert abs(pi_r - data["indices"]["pi_r"]) <= 1e-9
        assert abs(pi_h - data["indices"]["pi_h"]) <= 1e-9
        assert abs(pi_r + pi_h - data["indices"]["pi_t"]) <= 1e-9
