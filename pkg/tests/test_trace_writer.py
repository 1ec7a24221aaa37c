"""
轨迹写入器: CSV / JSON-lines 渲染与原子写入
"""

import json
from pathlib import Path

import pytest

from app.models.contest import ContestConfig
from app.models.dynamics import StoppingRule
from app.outputs.trace.writer import TraceWriter, atomic_write_text, dumps, write_json
from app.processors.br_dynamics.processor import run
from app.processors.br_dynamics.selection import Alternating, RoundRobin
from app.processors.discounted_sum.beta import AdversarialMaxBeta
from app.processors.discounted_sum.processor import run_dissum
from app.utils.exceptions import InvalidInputError


@pytest.fixture
def pair_trace(linear_pair: ContestConfig):
    return run(linear_pair, [0.5, 0.5], Alternating(first=1), StoppingRule.steps(3))


class TestDumps:
    def test_sorted_keys(self) -> None:
        assert dumps({"b": 1, "a": [1.5, 2]}) == '{"a": [1.5, 2], "b": 1}'

    def test_non_finite_written_as_strings(self) -> None:
        assert dumps({"x": float("inf"), "y": [float("nan")]}) == '{"x": "inf", "y": ["nan"]}'


class TestRender:
    def test_csv(self, pair_trace) -> None:
        lines = TraceWriter("csv").render(pair_trace).splitlines()
        assert lines[0] == "t,mover,x_0,x_1"
        assert lines[1] == "0,,0.5,0.5"
        assert len(lines) == 5
        assert lines[2].startswith("1,1,0.5,")

    def test_csv_full_precision(self, pair_trace) -> None:
        row = TraceWriter("csv").render(pair_trace).splitlines()[2]
        assert float(row.split(",")[3]) == float(pair_trace.states[1, 1])

    def test_jsonl(self, pair_trace) -> None:
        lines = TraceWriter("jsonl").render(pair_trace).splitlines()
        records = [json.loads(line) for line in lines]
        assert len(records) == 5
        assert records[0] == {"mover": None, "t": 0, "x": [0.5, 0.5]}
        assert records[-1]["summary"]["stop_reason"] == "max_steps"
        assert records[-1]["summary"]["steps"] == 3

    def test_dissum_records_potential(self) -> None:
        trace = run_dissum([1.0, -0.5, 0.25], 0.5, AdversarialMaxBeta(), RoundRobin(), max_steps=4)
        text = TraceWriter("csv").render(trace)
        assert text.splitlines()[0] == "t,mover,f,z_0,z_1,z_2"
        records = [json.loads(line) for line in TraceWriter("jsonl").render(trace).splitlines()]
        assert records[0]["f"] == 1.25
        assert records[0]["z"] == [1.0, -0.5, 0.25]

    def test_unknown_format(self) -> None:
        with pytest.raises(InvalidInputError):
            TraceWriter("parquet")


class TestWrite:
    def test_csv_writes_summary_sidecar(self, pair_trace, tmp_path: Path) -> None:
        target = TraceWriter("csv").write(pair_trace, tmp_path / "run.csv")
        assert target == tmp_path / "run.csv"
        sidecar = tmp_path / "run.csv.summary.json"
        assert json.loads(sidecar.read_text(encoding="utf-8")) == json.loads(
            dumps(pair_trace.summary.to_dict())
        )

    def test_jsonl_has_no_sidecar(self, pair_trace, tmp_path: Path) -> None:
        TraceWriter("jsonl").write(pair_trace, tmp_path / "run.jsonl")
        assert sorted(p.name for p in tmp_path.iterdir()) == ["run.jsonl"]

    def test_repeated_writes_are_identical(self, pair_trace, tmp_path: Path) -> None:
        writer = TraceWriter("jsonl")
        first = writer.write(pair_trace, tmp_path / "a.jsonl").read_bytes()
        second = writer.write(pair_trace, tmp_path / "b.jsonl").read_bytes()
        assert first == second

    def test_atomic_write_leaves_no_temp_files(self, tmp_path: Path) -> None:
        target = atomic_write_text(tmp_path / "nested" / "out.txt", "one")
        atomic_write_text(target, "two")
        assert target.read_text(encoding="utf-8") == "two"
        assert [p.name for p in target.parent.iterdir()] == ["out.txt"]

    def test_write_json(self, tmp_path: Path) -> None:
        path = write_json(tmp_path / "r.json", {"steps": 3, "bound": float("inf")})
        assert path.read_text(encoding="utf-8") == '{"bound": "inf", "steps": 3}\n'
