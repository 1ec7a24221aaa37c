"""
实验配置: 读取、覆盖项、校验与构造
"""

import json
from pathlib import Path

import pytest

from app.models.experiment import (
    ContestModel,
    ExperimentConfig,
    apply_overrides,
    build_contest,
    load_experiment,
)
from app.processors.br_dynamics.selection import Alternating, FlooredRandom
from app.processors.discounted_sum.processor import DissumBestCase
from app.utils.exceptions import ConfigError


class TestOverrides:
    def test_nested_values_parse_as_json(self) -> None:
        doc = apply_overrides({"stop": {"epsilon": 1e-8}}, ["stop.max_steps=10", "seeds=[3, 4]"])
        assert doc == {"stop": {"epsilon": 1e-8, "max_steps": 10}, "seeds": [3, 4]}

    def test_non_json_stays_a_string(self) -> None:
        assert apply_overrides({}, ["output.format=jsonl"]) == {"output": {"format": "jsonl"}}

    def test_creates_missing_sections(self) -> None:
        assert apply_overrides({}, ["contest.cost.kind=linear"]) == {
            "contest": {"cost": {"kind": "linear"}}
        }

    @pytest.mark.parametrize("item", ["novalue", "=3"])
    def test_malformed(self, item: str) -> None:
        with pytest.raises(ConfigError):
            apply_overrides({}, [item])

    def test_cannot_cross_scalar(self) -> None:
        with pytest.raises(ConfigError):
            apply_overrides({"name": "x"}, ["name.first=1"])


class TestLoad:
    def test_file_with_overrides(self, write_config, simulate_document) -> None:
        path = write_config(simulate_document)
        config = load_experiment(str(path), ["stop.max_steps=5"])
        assert config.stop is not None
        assert config.stop.max_steps == 5
        assert config.seeds == [0]

    def test_source_document_untouched(self, simulate_document) -> None:
        before = json.dumps(simulate_document, sort_keys=True)
        load_experiment(document=simulate_document, overrides=["seeds=[7]"])
        assert json.dumps(simulate_document, sort_keys=True) == before

    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(ConfigError):
            load_experiment(str(tmp_path / "absent.json"))

    def test_invalid_json(self, tmp_path: Path) -> None:
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_experiment(str(path))

    def test_no_source_gives_defaults(self) -> None:
        config = load_experiment(None)
        assert config.contest is None
        assert config.output.format == "csv"

    @pytest.mark.parametrize(
        "override",
        [
            "seeds=[]",
            "contest.n=1",
            "output.format=xml",
            "policy.kind=sometimes",
            "x0=[-1, 1]",
            "unknown_key=1",
            "stop.epsilon=0",
        ],
    )
    def test_validation_errors(self, simulate_document, override: str) -> None:
        with pytest.raises(ConfigError):
            load_experiment(document=simulate_document, overrides=[override])

    def test_contest_needs_exactly_one_cost_source(self, simulate_document) -> None:
        with pytest.raises(ConfigError):
            load_experiment(
                document=simulate_document,
                overrides=['contest.costs=[{"kind": "linear"}, {"kind": "linear"}]'],
            )


class TestBuild:
    def test_homogeneous_contest(self, simulate_document) -> None:
        config = load_experiment(document=simulate_document)
        cfg = build_contest(config.require_contest())
        assert cfg.n == 2
        assert cfg.normalized
        assert cfg.kappa == pytest.approx(4.0)

    def test_heterogeneous_contest(self) -> None:
        model = ContestModel.model_validate(
            {
                "n": 2,
                "costs": [
                    {"kind": "scaled-power", "coeff": 2.0, "r": 1.0},
                    {"kind": "linear", "coeff": 0.5},
                ],
            }
        )
        cfg = build_contest(model)
        assert not cfg.normalized
        assert not cfg.is_homogeneous

    def test_policies(self, simulate_document) -> None:
        config = load_experiment(document=simulate_document)
        policy = config.policy.build(2)
        assert isinstance(policy, Alternating)
        floored = load_experiment(
            document=simulate_document, overrides=["policy.kind=floored"]
        ).policy.build(4)
        assert isinstance(floored, FlooredRandom)

    def test_explicit_policy_needs_schedule(self, simulate_document) -> None:
        config = load_experiment(document=simulate_document, overrides=["policy.kind=explicit"])
        with pytest.raises(ConfigError):
            config.policy.build(2)

    def test_stop_rule(self, simulate_document) -> None:
        config = load_experiment(document=simulate_document)
        rule = config.require_stop().build(2)
        assert rule.epsilon == 1e-8
        assert rule.max_steps == 200
        assert config.require_stop().build(2, epsilon=1e-3).epsilon == 1e-3

    def test_cycle_settings_pass_through(self) -> None:
        config = ExperimentConfig.model_validate(
            {"stop": {"max_steps": 50, "detect_cycle": True, "cycle_tol": 5e-4, "cycle_repeats": 4}}
        )
        rule = config.require_stop().build(2)
        assert rule.detect_cycle
        assert (rule.cycle_tol, rule.cycle_repeats) == (5e-4, 4)
        with pytest.raises(ConfigError):
            load_experiment(document={"stop": {"max_steps": 5, "cycle_repeats": 1}})

    def test_l1_target_defaults_to_ones(self) -> None:
        config = ExperimentConfig.model_validate({"stop": {"l1_epsilon": 1e-6}})
        rule = config.require_stop().build(3)
        assert rule.l1_target == (1.0, 1.0, 1.0)

    def test_initial_profile(self, simulate_document) -> None:
        config = load_experiment(document=simulate_document)
        assert config.initial_profile(2) == [0.5, 0.5]
        with pytest.raises(ConfigError):
            config.initial_profile(3)
        assert ExperimentConfig().initial_profile(3) == [1.0, 1.0, 1.0]

    def test_missing_sections(self) -> None:
        config = ExperimentConfig()
        with pytest.raises(ConfigError):
            config.require_contest()
        with pytest.raises(ConfigError):
            config.require_stop()
        with pytest.raises(ConfigError):
            config.require_dissum()

    def test_dissum_section(self) -> None:
        config = ExperimentConfig.model_validate(
            {"dissum": {"n": 6, "eps": 1e-6, "selection": {"kind": "best_case"}}}
        )
        dissum = config.require_dissum()
        assert dissum.B == 0.5
        assert isinstance(dissum.build_selection(6), DissumBestCase)

    def test_dissum_needs_start_and_bound(self) -> None:
        with pytest.raises(ConfigError):
            load_experiment(document={"dissum": {"eps": 1e-6}})
        with pytest.raises(ConfigError):
            load_experiment(document={"dissum": {"n": 4}})


CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.json")), ids=lambda p: p.stem)
def test_bundled_configs_validate(path: Path) -> None:
    config = load_experiment(str(path))
    if config.contest is not None:
        cfg = build_contest(config.contest)
        assert len(config.initial_profile(cfg.n)) == cfg.n
    else:
        assert config.require_dissum().eps is not None
