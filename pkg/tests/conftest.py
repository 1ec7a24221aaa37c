"""
测试公共夹具
"""

import json
from pathlib import Path
from typing import Any, Callable, Dict

import pytest

from app.models.contest import ContestConfig
from app.models.cost import CostSpec


@pytest.fixture
def linear_pair() -> ContestConfig:
    """两人归一化线性成本竞赛"""
    return ContestConfig.homogeneous(2, CostSpec.linear())


@pytest.fixture
def linear_trio() -> ContestConfig:
    return ContestConfig.homogeneous(3, CostSpec.linear())


@pytest.fixture
def write_config(tmp_path: Path) -> Callable[[Dict[str, Any]], Path]:
    """把实验配置文档写入临时 JSON 文件"""

    def _write(document: Dict[str, Any], name: str = "experiment.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(document), encoding="utf-8")
        return path

    return _write


@pytest.fixture
def simulate_document() -> Dict[str, Any]:
    return {
        "name": "pair",
        "contest": {"n": 2, "cost": {"kind": "linear"}},
        "x0": [0.5, 0.5],
        "policy": {"kind": "alternating", "first": 1},
        "stop": {"epsilon": 1e-8, "max_steps": 200},
        "seeds": [0],
    }
