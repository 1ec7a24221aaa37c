"""
命令行: 退出码、确定性输出与校验套件
"""

import json
from pathlib import Path
from typing import Any, Dict, Iterator

import pytest
from typer.testing import CliRunner

from app.cli import app
from app.processors.analysis import verify
from app.processors.discounted_sum import weak_potential
from app.utils.logger import setup_logger

runner = CliRunner()


@pytest.fixture(autouse=True)
def _restore_logger() -> Iterator[None]:
    """CliRunner 替换了 stderr; 测试结束后把日志重新指向真实的 stderr"""
    yield
    setup_logger()


class TestSimulate:
    def test_equilibrium_start_exits_zero(self, write_config, simulate_document, tmp_path: Path) -> None:
        simulate_document["x0"] = [1.0, 1.0]
        config = write_config(simulate_document)
        out = tmp_path / "trace.csv"
        result = runner.invoke(app, ["simulate", str(config), "--out", str(out)])
        assert result.exit_code == 0
        assert out.read_text(encoding="utf-8").splitlines() == ["t,mover,x_0,x_1", "0,,1,1"]
        summary = json.loads((tmp_path / "trace.csv.summary.json").read_text(encoding="utf-8"))
        assert summary["converged"]

    def test_step_cap_exits_two(self, write_config, simulate_document, tmp_path: Path) -> None:
        config = write_config(simulate_document)
        result = runner.invoke(
            app,
            ["simulate", str(config), "--set", "stop.max_steps=0", "--out", str(tmp_path / "t.csv")],
        )
        assert result.exit_code == 2

    def test_repeated_runs_are_byte_identical(
        self, write_config, simulate_document, tmp_path: Path
    ) -> None:
        simulate_document["policy"] = {"kind": "uniform"}
        config = write_config(simulate_document)
        outputs = []
        for name in ("a.jsonl", "b.jsonl"):
            out = tmp_path / name
            args = ["simulate", str(config), "--seed", "11", "--format", "jsonl", "--out", str(out)]
            assert runner.invoke(app, args).exit_code == 0
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]
        last = json.loads(outputs[0].decode("utf-8").splitlines()[-1])
        assert last["summary"]["stop_reason"] == "epsilon_equilibrium"

    def test_trace_on_stdout(self, write_config, simulate_document) -> None:
        config = write_config(simulate_document)
        result = runner.invoke(app, ["simulate", str(config)])
        assert result.exit_code == 0
        assert "t,mover,x_0,x_1" in result.output

    @pytest.mark.parametrize(
        "args",
        [
            ["--set", "seeds=[]"],
            ["--format", "xml"],
            ["--set", "contest.n=1"],
            ["--set", "x0=[1, 1, 1]"],
        ],
    )
    def test_config_errors_exit_64(self, write_config, simulate_document, args) -> None:
        config = write_config(simulate_document)
        result = runner.invoke(app, ["simulate", str(config), *args])
        assert result.exit_code == 64

    def test_missing_config_file(self, tmp_path: Path) -> None:
        result = runner.invoke(app, ["simulate", str(tmp_path / "absent.json")])
        assert result.exit_code == 64


class TestOtherCommands:
    def test_cycle_without_config_exits_three(self, tmp_path: Path) -> None:
        out = tmp_path / "cycle.csv"
        result = runner.invoke(app, ["cycle", "--out", str(out)])
        assert result.exit_code == 3
        summary = json.loads((tmp_path / "cycle.csv.summary.json").read_text(encoding="utf-8"))
        assert summary["cycle"]["period"] == 4

    def test_dissum(self, write_config, tmp_path: Path) -> None:
        document: Dict[str, Any] = {"dissum": {"z0": [1.0, -1.0, 0.5], "eps": 1e-6}}
        out = tmp_path / "dissum.jsonl"
        result = runner.invoke(
            app, ["dissum", str(write_config(document)), "--format", "jsonl", "--out", str(out)]
        )
        assert result.exit_code == 0
        assert json.loads(out.read_text(encoding="utf-8").splitlines()[0])["f"] == 1.5

    def test_sweep(self, write_config, simulate_document, tmp_path: Path) -> None:
        simulate_document["sweep"] = {"eps": [1e-2, 1e-4]}
        result = runner.invoke(
            app, ["sweep", str(write_config(simulate_document)), "--out", str(tmp_path / "s")]
        )
        assert result.exit_code == 0
        report = json.loads((tmp_path / "s" / "sweep.json").read_text(encoding="utf-8"))
        assert report["complete"]
        assert len(report["groups"]) == 2

    def test_sweep_cell_failure_exits_one(self, write_config, simulate_document, tmp_path: Path) -> None:
        simulate_document["sweep"] = {"n": [2, 3]}
        result = runner.invoke(
            app, ["sweep", str(write_config(simulate_document)), "--out", str(tmp_path / "s")]
        )
        # the two-entry x0 does not fit the three-agent cells
        assert result.exit_code == 1
        report = json.loads((tmp_path / "s" / "sweep.json").read_text(encoding="utf-8"))
        assert not report["complete"]


class TestVerify:
    def test_unknown_suite(self) -> None:
        assert runner.invoke(app, ["verify", "everything"]).exit_code == 64

    def test_core_quick_passes(self, tmp_path: Path) -> None:
        out = tmp_path / "verify.json"
        result = runner.invoke(app, ["verify", "core", "--quick", "--out", str(out)])
        report = json.loads(out.read_text(encoding="utf-8"))
        assert result.exit_code == 0, report["failed"]
        assert report["passed"]

    def test_sign_flip_in_potential_is_caught(self, monkeypatch, tmp_path: Path) -> None:
        original = weak_potential.potential

        def flipped(z):
            value = original(z)
            return weak_potential.PotentialValue(value.V, -value.W)

        checks = verify.CHECKS["dissum"]
        monkeypatch.setitem(verify.CHECKS, "dissum", [checks[0], verify._stall])
        out = tmp_path / "verify.json"
        assert runner.invoke(app, ["verify", "dissum", "--quick", "--out", str(out)]).exit_code == 0

        monkeypatch.setattr(weak_potential, "potential", flipped)
        result = runner.invoke(app, ["verify", "dissum", "--quick", "--out", str(out)])
        assert result.exit_code == 1
        report = json.loads(out.read_text(encoding="utf-8"))
        assert "potential_examples" in report["failed"]
