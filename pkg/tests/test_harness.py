import json

import pytest

from renego.harness import (
    ConfigError,
    ExperimentConfig,
    default_config,
    run_ftpl,
    run_match,
    run_matrix,
)
from renego.harness.cli import main as cli_main


def small_config(**overrides):
    config = default_config()
    config.run = {"episodes": 3, "seeds": [0, 1], "out_dir": "runs"}
    config.matrix = {"personas": ["rational", "desperate"], "episodes": 2, "seeds": [0]}
    config.bon = {"n_candidates": 3, "generation_mode": "brainstorm", "rollouts": 2}
    for key, value in overrides.items():
        setattr(config, key, value)
    return config


class TestConfig:
    def test_round_trip_identity(self):
        config = default_config()
        text = config.to_json()
        assert ExperimentConfig.from_json(text).to_json() == text

    def test_unknown_section_rejected(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_json('{"nonsense": {}}')

    def test_bad_provider_kind_rejected(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_json(json.dumps(
                {"agents": {"agent1": {"kind": "wizard"}}}))

    def test_empty_seed_list_rejected(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_json(json.dumps({"run": {"seeds": []}}))

    def test_paper_defaults_load(self):
        config = default_config()
        spec = config.build_spec()
        assert spec.production_cost == 43.0
        assert spec.budget == 63.0
        assert spec.horizon == 10
        assert config.run["episodes"] == 20
        assert config.build_bon_config().n_candidates == 5

    def test_exchange_norm_defaults_to_extractable_max(self):
        config = small_config(game={
            "variant": "resource_exchange",
            "horizon": 6,
            "n1x": 25, "n1y": 5, "n2x": 25, "n2y": 5,
            "v1x": 0.5, "v1y": 2.5, "v2x": 2.5, "v2y": 0.5,
        })
        spec = config.build_spec()
        assert spec.exchange_norm == pytest.approx(12.0)


class TestRunMatch:
    def test_single_episode_deterministic_rewards(self, tmp_path):
        config = small_config()
        config.run = {"episodes": 1, "seeds": [7], "out_dir": str(tmp_path)}
        config.agents = {
            "agent1": {"kind": "persona", "family": "rational",
                       "params": {"temperature": 0.0}},
            "agent2": {"kind": "persona", "family": "desperate",
                       "params": {"temperature": 0.0}},
        }
        log_a = run_match(config, 7, tmp_path)
        log_b = run_match(config, 7, tmp_path)
        assert log_a.records == log_b.records

    def test_byte_identical_outputs(self, tmp_path):
        config = small_config()
        config.run = {"episodes": 4, "seeds": [3], "out_dir": str(tmp_path)}
        run_match(config, 3, tmp_path / "first")
        run_match(config, 3, tmp_path / "second")
        for name in ("trajectories.jsonl", "matchlog.json", "metrics/rewards.csv",
                     "metrics/dispersion.csv"):
            a = (tmp_path / "first" / f"{config.name}-seed3" / name).read_bytes()
            b = (tmp_path / "second" / f"{config.name}-seed3" / name).read_bytes()
            assert a == b, name

    def test_no_partial_outputs_on_failure(self, tmp_path):
        config = small_config()
        config.agents = {
            "agent1": {"kind": "persona", "family": "rational"},
            "agent2": {"kind": "bridge_subprocess", "argv": ["/nonexistent-binary"]},
        }
        with pytest.raises(Exception):
            run_match(config, 0, tmp_path)
        assert not any(p.suffix == ".tmp" for p in tmp_path.rglob("*"))
        assert not list(tmp_path.rglob("*.csv"))

    def test_missing_opponent_section_errors(self, tmp_path):
        config = small_config()
        config.agents = {"agent1": {"kind": "persona", "family": "rational"}}
        with pytest.raises(ConfigError):
            run_match(config, 0, tmp_path)


class TestRunMatrix:
    def test_single_persona_validation(self, tmp_path):
        config = small_config(matrix={"personas": ["rational"]})
        with pytest.raises(ConfigError):
            run_matrix(config, tmp_path)

    def test_writes_matrix_csv(self, tmp_path):
        config = small_config()
        result = run_matrix(config, tmp_path)
        assert (tmp_path / f"{config.name}-matrix" / "metrics" /
                "pairwise_matrix.csv").exists()
        assert len(result.personas) == 2


class TestRunFtpl:
    def test_inline_matrix_and_traces(self, tmp_path):
        config = small_config(sfp={
            "noise_kind": "gaussian", "eta_scale": 1.0,
            "game_matrix": {"reward_1": [[1.0, 0.0], [0.0, 1.0]],
                            "reward_2": [[0.0, 1.0], [1.0, 0.0]]},
        })
        config.run = {"episodes": 50, "seeds": [0, 1], "out_dir": str(tmp_path)}
        summary = run_ftpl(config, tmp_path)
        assert set(summary["seeds"]) == {"0", "1"}
        trace = tmp_path / f"{config.name}-ftpl" / "metrics" / "trace-seed0.csv"
        assert trace.read_text().startswith("episode,action_1,action_2")


class TestCli:
    def test_run_bon_with_missing_opponent_exits_nonzero(self, tmp_path):
        config = small_config()
        config.agents = {"agent1": {"kind": "persona", "family": "rational"}}
        path = tmp_path / "bad.json"
        path.write_text(config.to_json())
        assert cli_main(["run-bon", "--config", str(path), "--out", str(tmp_path)]) != 0

    def test_run_matrix_single_persona_exits_nonzero(self, tmp_path):
        config = small_config(matrix={"personas": ["rational"]})
        path = tmp_path / "bad.json"
        path.write_text(config.to_json())
        assert cli_main(["run-matrix", "--config", str(path), "--out", str(tmp_path)]) != 0

    def test_run_bon_runs_with_defaults(self, tmp_path, capsys):
        config = small_config()
        config.run = {"episodes": 2, "seeds": [0], "out_dir": str(tmp_path)}
        path = tmp_path / "ok.json"
        path.write_text(config.to_json())
        assert cli_main(["run-bon", "--config", str(path), "--out", str(tmp_path)]) == 0
        assert "seed 0" in capsys.readouterr().out
