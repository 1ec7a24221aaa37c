"""
实验服务: 单次运行、扫描与汇总
"""

import json
from pathlib import Path
from typing import Any, Dict

import pytest

from app.models.dynamics import StopReason
from app.models.experiment import load_experiment
from app.processors.sweep import ExperimentService, exit_code_for, run_cell
from app.utils.exceptions import ConfigError, SweepCellError


@pytest.fixture
def sweep_document() -> Dict[str, Any]:
    return {
        "name": "grid",
        "contest": {"n": 2, "cost": {"kind": "linear"}},
        "x0_value": 0.5,
        "policy": {"kind": "round_robin"},
        "stop": {"epsilon": 1e-6, "max_steps": 2000},
        "seeds": [0, 1],
        "sweep": {"n": [2, 3], "eps": [1e-2, 1e-4]},
    }


def _service(document: Dict[str, Any], *overrides: str, jobs: int = 1) -> ExperimentService:
    return ExperimentService(load_experiment(document=document, overrides=overrides), jobs=jobs)


class TestExitCodes:
    def test_mapping(self) -> None:
        assert exit_code_for(StopReason.EPSILON_EQUILIBRIUM) == 0
        assert exit_code_for(StopReason.L1_DISTANCE) == 0
        assert exit_code_for(StopReason.MAX_STEPS) == 2
        assert exit_code_for(StopReason.SCHEDULE_END) == 2
        assert exit_code_for(StopReason.CYCLE) == 3


class TestSingleRuns:
    def test_simulate(self, simulate_document) -> None:
        trace = _service(simulate_document).simulate()
        assert trace.summary.stop_reason is StopReason.EPSILON_EQUILIBRIUM

    def test_simulate_rejects_policy_for_n(self, simulate_document) -> None:
        service = _service(simulate_document, "contest.n=3", "x0=[1, 1, 1]")
        with pytest.raises(ConfigError):
            service.simulate()

    def test_simulate_needs_stop(self, simulate_document) -> None:
        del simulate_document["stop"]
        with pytest.raises(ConfigError):
            _service(simulate_document).simulate()

    def test_cycle_default_instance(self) -> None:
        trace = ExperimentService(load_experiment(None)).cycle()
        assert trace.summary.stop_reason is StopReason.CYCLE
        assert trace.summary.cycle is not None
        assert trace.summary.cycle.period == 4

    def test_dissum_random_start_is_seeded(self) -> None:
        document = {"dissum": {"n": 5, "eps": 1e-6}, "seeds": [3]}
        first = ExperimentService(load_experiment(document=document)).dissum()
        second = ExperimentService(load_experiment(document=document)).dissum()
        assert first.summary.converged
        assert (first.states == second.states).all()

    def test_write_trace_returns_text_without_path(self, simulate_document) -> None:
        service = _service(simulate_document)
        text = service.write_trace(service.simulate(), None)
        assert text.startswith("t,mover,x_0,x_1\n")

    def test_write_trace_to_configured_path(self, simulate_document, tmp_path: Path) -> None:
        target = tmp_path / "trace.jsonl"
        service = _service(simulate_document, f"output.path={target}", "output.format=jsonl")
        assert service.write_trace(service.simulate(), None) == str(target)
        assert json.loads(target.read_text(encoding="utf-8").splitlines()[-1])["summary"]

    def test_jobs_must_be_positive(self, simulate_document) -> None:
        with pytest.raises(ConfigError):
            _service(simulate_document, jobs=0)


class TestSweep:
    def test_grid(self, sweep_document, tmp_path: Path) -> None:
        report = _service(sweep_document).sweep(str(tmp_path))
        assert report["complete"]
        assert len(report["cells"]) == 8
        assert [c["index"] for c in report["cells"]] == list(range(8))
        groups = report["groups"]
        assert [(g["n"], g["eps"]) for g in groups] == [
            (2, 1e-2), (2, 1e-4), (3, 1e-2), (3, 1e-4)
        ]
        assert all(g["runs"] == 2 and g["converged"] == 2 for g in groups)
        written = json.loads((tmp_path / "sweep.json").read_text(encoding="utf-8"))
        assert written["groups"] == json.loads(json.dumps(groups))
        assert len(list((tmp_path / "cells").glob("cell-*.json"))) == 8

    def test_parallel_matches_serial(self, sweep_document, tmp_path: Path) -> None:
        serial = _service(sweep_document).sweep(str(tmp_path / "serial"))
        parallel = _service(sweep_document, jobs=2).sweep(str(tmp_path / "parallel"))
        assert serial["cells"] == parallel["cells"]

    def test_two_agent_fit(self, tmp_path: Path) -> None:
        document = {
            "contest": {"n": 2, "cost": {"kind": "linear"}},
            "x0_value": 0.5,
            "policy": {"kind": "alternating", "first": 1},
            "stop": {"epsilon": 1e-2, "max_steps": 200},
            "sweep": {"eps": [1e-2, 1e-4, 1e-8], "fit": "two_agent"},
        }
        report = _service(document).sweep(str(tmp_path))
        assert [g["quantiles"]["0.5"] for g in report["groups"]] == [2.0, 3.0, 4.0]
        fit = report["fits"][0]
        assert fit["model"] == "two_agent"
        assert fit["additive"] == pytest.approx(-0.7321, abs=1e-3)

    def test_failed_cells_leave_partial_report(self, sweep_document, tmp_path: Path) -> None:
        service = _service(sweep_document, "sweep.n=[2, 1]")
        with pytest.raises(SweepCellError):
            service.sweep(str(tmp_path))
        report = json.loads((tmp_path / "sweep.json").read_text(encoding="utf-8"))
        assert not report["complete"]
        assert len(report["failed_cells"]) == 4
        assert {c["n"] for c in report["failed_cells"]} == {1}
        assert len(report["cells"]) == 4

    def test_dissum_sweep(self, tmp_path: Path) -> None:
        document = {
            "dissum": {"n": 4, "eps": 1e-6},
            "sweep": {"n": [4, 8]},
            "seeds": [0, 1],
        }
        report = _service(document).sweep(str(tmp_path))
        assert [g["n"] for g in report["groups"]] == [4, 8]
        assert all(c["kind"] == "dissum" and c["converged"] for c in report["cells"])

    def test_needs_sweep_section(self, simulate_document, tmp_path: Path) -> None:
        with pytest.raises(ConfigError):
            _service(simulate_document).sweep(str(tmp_path))

    def test_run_cell_is_plain_data(self, sweep_document) -> None:
        document = load_experiment(document=sweep_document).model_dump(mode="json")
        cell = {"index": 0, "kind": "br", "n": 3, "cost": None, "cost_index": 0,
                "eps": 1e-2, "seed": 0}
        result = run_cell(document, cell)
        assert json.loads(json.dumps(result)) == result
        assert result["n"] == 3
