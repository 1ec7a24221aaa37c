"""
实验配置文档
单个 JSON 文档描述竞赛、选择策略、停止规则、种子、扫描轴和输出;
命令行的 ``--set a.b=value`` 在校验之前写入原始文档
"""

import json
import math
from typing import Any, Dict, List, Literal, Optional, Sequence

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from app.models.contest import ContestConfig
from app.models.cost import CostSpec
from app.models.dynamics import StoppingRule
from app.processors.br_dynamics.selection import (
    Alternating,
    BestCaseGreedy,
    ExplicitSchedule,
    FlooredRandom,
    RoundRobin,
    SelectionPolicy,
    UniformRandom,
)
from app.processors.contest.normalization import normalize_homogeneous
from app.processors.discounted_sum.beta import (
    AdversarialMaxBeta,
    BetaPolicy,
    ConstantBeta,
    UniformBeta,
)
from app.processors.discounted_sum.processor import DissumBestCase
from app.utils.exceptions import ConfigError, ContestError


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class CostModel(_Strict):
    """成本函数: 幂函数族按边际成本 c'(z) = coeff * z**r 描述"""

    kind: Literal["linear", "power", "scaled-power", "monomial"]
    r: float = Field(default=0.0, ge=0.0)
    coeff: float = Field(default=1.0, gt=0.0)
    p: Optional[float] = Field(default=None, ge=1.0)
    lipschitz_interval: Optional[List[float]] = None

    def to_spec(self) -> CostSpec:
        return CostSpec.from_dict(self.model_dump(exclude_none=True))


class ContestModel(_Strict):
    """竞赛配置: ``cost`` 为同质竞赛的基础成本, ``costs`` 为逐个体成本"""

    n: int = Field(ge=2)
    cost: Optional[CostModel] = None
    costs: Optional[List[CostModel]] = None
    a: Optional[float] = Field(default=None, gt=0.0, lt=1.0)
    normalize: bool = Field(default=False, description="按 n 把原始成本归一化, 使均衡位于全1")

    @model_validator(mode="after")
    def _one_cost_source(self) -> "ContestModel":
        if (self.cost is None) == (self.costs is None):
            raise ValueError("exactly one of 'cost' and 'costs' is required")
        if self.costs is not None and len(self.costs) != self.n:
            raise ValueError(f"'costs' needs {self.n} entries, got {len(self.costs)}")
        if self.costs is not None and self.normalize:
            raise ValueError("'normalize' applies to homogeneous contests only")
        return self

    def build(self) -> ContestConfig:
        if self.costs is not None:
            return ContestConfig.heterogeneous([c.to_spec() for c in self.costs], a=self.a)
        assert self.cost is not None
        base = self.cost.to_spec()
        if self.normalize:
            base, _ = normalize_homogeneous(base, self.n)
        return ContestConfig.homogeneous(self.n, base, a=self.a)


class PolicyModel(_Strict):
    kind: Literal["uniform", "round_robin", "alternating", "floored", "explicit", "best_case"] = (
        "uniform"
    )
    first: int = 1
    floor: Optional[float] = Field(default=None, gt=0.0)
    schedule: Optional[List[int]] = None
    repeat: bool = False

    def build(self, n: int) -> SelectionPolicy:
        if self.kind == "uniform":
            return UniformRandom()
        if self.kind == "round_robin":
            return RoundRobin()
        if self.kind == "alternating":
            return Alternating(first=self.first)
        if self.kind == "floored":
            return FlooredRandom(1.0 / (2 * n) if self.floor is None else self.floor)
        if self.kind == "explicit":
            if not self.schedule:
                raise ConfigError("explicit policy needs a non-empty 'schedule'")
            return ExplicitSchedule(self.schedule, repeat=self.repeat)
        return BestCaseGreedy()


class StopModel(_Strict):
    epsilon: Optional[float] = Field(default=None, gt=0.0)
    l1_epsilon: Optional[float] = Field(default=None, gt=0.0)
    l1_target: Optional[List[float]] = None
    max_steps: Optional[int] = Field(default=None, ge=0)
    detect_cycle: bool = False
    cycle_tol: Optional[float] = Field(default=None, gt=0.0)
    cycle_max_period: Optional[int] = Field(default=None, ge=2)
    cycle_repeats: Optional[int] = Field(default=None, ge=2)

    def build(self, n: int, epsilon: Optional[float] = None) -> StoppingRule:
        """``epsilon`` (扫描轴上的取值) 覆盖文档中的 epsilon"""
        extra: Dict[str, Any] = {}
        if self.cycle_tol is not None:
            extra["cycle_tol"] = self.cycle_tol
        if self.cycle_max_period is not None:
            extra["cycle_max_period"] = self.cycle_max_period
        if self.cycle_repeats is not None:
            extra["cycle_repeats"] = self.cycle_repeats
        l1_target = self.l1_target
        if self.l1_epsilon is not None and l1_target is None:
            l1_target = [1.0] * n
        return StoppingRule(
            epsilon=self.epsilon if epsilon is None else epsilon,
            l1_epsilon=self.l1_epsilon,
            l1_target=None if l1_target is None else tuple(l1_target),
            max_steps=self.max_steps,
            detect_cycle=self.detect_cycle,
            **extra,
        )


class BetaModel(_Strict):
    kind: Literal["constant", "uniform", "adversarial_max"] = "adversarial_max"
    value: Optional[float] = Field(default=None, ge=0.0)

    def build(self) -> BetaPolicy:
        if self.kind == "constant":
            return ConstantBeta(self.value)
        if self.kind == "uniform":
            return UniformBeta()
        return AdversarialMaxBeta()


class DissumModel(_Strict):
    """折扣和动力学: 给出 ``z0``, 或给出 ``n`` 由种子随机生成 z0 ~ U[-1, 1]^n"""

    z0: Optional[List[float]] = None
    n: Optional[int] = Field(default=None, ge=1)
    B: float = Field(default=0.5, ge=0.0, lt=1.0)
    beta: BetaModel = Field(default_factory=BetaModel)
    selection: PolicyModel = Field(default_factory=PolicyModel)
    eps: Optional[float] = Field(default=None, gt=0.0)
    max_steps: Optional[int] = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _start(self) -> "DissumModel":
        if self.z0 is None and self.n is None:
            raise ValueError("dissum needs 'z0' or 'n'")
        if self.eps is None and self.max_steps is None:
            raise ValueError("dissum needs 'eps' or 'max_steps'")
        return self

    def build_selection(self, n: int) -> SelectionPolicy:
        if self.selection.kind == "best_case":
            return DissumBestCase()
        return self.selection.build(n)


class SweepModel(_Strict):
    """扫描轴: 与种子做笛卡尔积, 空轴表示沿用文档中的单一取值"""

    eps: List[float] = Field(default_factory=list)
    n: List[int] = Field(default_factory=list)
    costs: List[CostModel] = Field(default_factory=list)
    fit: Optional[Literal["two_agent", "n_agent_random", "n_agent_best"]] = None

    @field_validator("eps")
    @classmethod
    def _eps_in_unit_interval(cls, values: List[float]) -> List[float]:
        for e in values:
            if not 0.0 < e < 1.0:
                raise ValueError(f"sweep eps values must lie in (0, 1), got {e}")
        return values

    @field_validator("n")
    @classmethod
    def _n_at_least_one(cls, values: List[int]) -> List[int]:
        if any(v < 1 for v in values):
            raise ValueError("sweep n values must be >= 1")
        return values


class OutputModel(_Strict):
    path: Optional[str] = None
    format: Literal["csv", "jsonl"] = "csv"


class ExperimentConfig(_Strict):
    """一次实验的完整描述"""

    name: str = "experiment"
    contest: Optional[ContestModel] = None
    x0: Optional[List[float]] = None
    x0_value: Optional[float] = Field(default=None, ge=0.0, description="x0 全部取同一值")
    policy: PolicyModel = Field(default_factory=PolicyModel)
    stop: Optional[StopModel] = None
    seeds: List[int] = Field(default_factory=lambda: [0])
    sweep: Optional[SweepModel] = None
    dissum: Optional[DissumModel] = None
    output: OutputModel = Field(default_factory=OutputModel)

    @field_validator("seeds")
    @classmethod
    def _at_least_one_seed(cls, values: List[int]) -> List[int]:
        if not values:
            raise ValueError("at least one seed is required")
        return values

    @model_validator(mode="after")
    def _finite_start(self) -> "ExperimentConfig":
        if self.x0 is not None and not all(math.isfinite(v) and v >= 0 for v in self.x0):
            raise ValueError("x0 entries must be finite and >= 0")
        return self

    def initial_profile(self, n: int) -> List[float]:
        if self.x0 is not None:
            if len(self.x0) != n:
                raise ConfigError(f"x0 has {len(self.x0)} entries, contest has {n} agents")
            return list(self.x0)
        return [1.0 if self.x0_value is None else self.x0_value] * n

    def require_contest(self) -> ContestModel:
        if self.contest is None:
            raise ConfigError("this command needs a 'contest' section")
        return self.contest

    def require_stop(self) -> StopModel:
        if self.stop is None:
            raise ConfigError("this command needs a 'stop' section")
        return self.stop

    def require_dissum(self) -> DissumModel:
        if self.dissum is None:
            raise ConfigError("this command needs a 'dissum' section")
        return self.dissum


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_overrides(document: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """把 ``a.b.c=value`` 写入文档; value 能按 JSON 解析时取解析结果, 否则保留字符串"""
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        node = document
        parts = key.split(".")
        for part in parts[:-1]:
            child = node.get(part)
            if child is None:
                child = node[part] = {}
            if not isinstance(child, dict):
                raise ConfigError(f"override path {key!r} crosses a non-object at {part!r}")
            node = child
        node[parts[-1]] = _parse_value(raw)
    return document


def load_experiment(
    source: Optional[str] = None,
    overrides: Sequence[str] = (),
    document: Optional[Dict[str, Any]] = None,
) -> ExperimentConfig:
    """读取 JSON 文件 (或直接给定文档), 应用覆盖后校验

    Raises:
        ConfigError: 文件不可读、JSON 格式错误或校验失败
    """
    if document is None:
        if source is None:
            document = {}
        else:
            try:
                with open(source, encoding="utf-8") as fh:
                    document = json.load(fh)
            except OSError as e:
                raise ConfigError(f"cannot read config {source}: {e}") from e
            except json.JSONDecodeError as e:
                raise ConfigError(f"config {source} is not valid JSON: {e}") from e
    if not isinstance(document, dict):
        raise ConfigError("config document must be a JSON object")
    document = apply_overrides(json.loads(json.dumps(document)), overrides)
    try:
        return ExperimentConfig.model_validate(document)
    except ValidationError as e:
        raise ConfigError(f"invalid config: {e}") from e


def build_contest(model: ContestModel) -> ContestConfig:
    """构造竞赛; 领域层的校验错误统一转成配置错误"""
    try:
        return model.build()
    except ContestError as e:
        raise ConfigError(f"invalid contest: {e}") from e
