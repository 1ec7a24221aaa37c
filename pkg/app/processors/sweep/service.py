"""
实验服务
整合动力学处理器、分析模块和轨迹写入器, 提供单次运行、扫描和循环检测的业务接口
"""

import itertools
import json
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from app.models.contest import ContestConfig
from app.models.dynamics import StoppingRule, StopReason, Trace
from app.models.experiment import (
    ContestModel,
    CostModel,
    ExperimentConfig,
    build_contest,
)
from app.outputs.trace.writer import TraceWriter, write_json
from app.processors.analysis.gamma import gamma_lower_bound_n, gamma_two_agent
from app.processors.analysis.rates import RatePrediction, fit_rate
from app.processors.br_dynamics.cycles import heterogeneous_cycle_example
from app.processors.br_dynamics.processor import run
from app.processors.br_dynamics.selection import SelectionPolicy
from app.processors.discounted_sum.processor import run_dissum
from app.utils.exceptions import (
    ConfigError,
    ContestError,
    FitError,
    InvalidInputError,
    SweepCellError,
)
from app.utils.logger import get_logger

logger = get_logger("sweep.service")

EXIT_CODES = {
    StopReason.EPSILON_EQUILIBRIUM: 0,
    StopReason.L1_DISTANCE: 0,
    StopReason.MAX_STEPS: 2,
    StopReason.SCHEDULE_END: 2,
    StopReason.CYCLE: 3,
}


def exit_code_for(reason: StopReason) -> int:
    return EXIT_CODES[reason]


def _quantiles(values: List[float]) -> Dict[str, float]:
    if not values:
        return {}
    arr = np.asarray(values, dtype=float)
    return {q: float(np.quantile(arr, float(q))) for q in ("0.1", "0.5", "0.9")}


# ------------------------------------------------------------------------- cells


def _contest_for_cell(config: ExperimentConfig, cell: Dict[str, Any]) -> ContestConfig:
    contest = config.require_contest()
    update: Dict[str, Any] = {"n": cell["n"]}
    if cell.get("cost") is not None:
        update["cost"] = CostModel.model_validate(cell["cost"])
        update["costs"] = None
    try:
        model = ContestModel.model_validate({**contest.model_dump(), **update})
    except ValidationError as e:
        raise ConfigError(f"invalid contest for sweep cell: {e}") from e
    return build_contest(model)


def _br_cell(config: ExperimentConfig, cell: Dict[str, Any]) -> Dict[str, Any]:
    cfg = _contest_for_cell(config, cell)
    stop = config.require_stop().build(cfg.n, cell.get("eps"))
    x0 = config.initial_profile(cfg.n)
    trace = run(cfg, x0, config.policy.build(cfg.n), stop, seed=cell["seed"])
    summary = trace.summary
    return {
        "converged": summary.converged,
        "stop_reason": summary.stop_reason.value,
        "steps": summary.steps,
        "convergence_step": summary.convergence_step,
        "warmup_time": summary.warmup_time,
    }


def _dissum_cell(config: ExperimentConfig, cell: Dict[str, Any]) -> Dict[str, Any]:
    model = config.require_dissum()
    if model.z0 is not None and cell["n"] == len(model.z0):
        z0 = np.asarray(model.z0, dtype=float)
    else:
        z0 = np.random.default_rng(cell["seed"]).uniform(-1.0, 1.0, cell["n"])
    trace = run_dissum(
        z0,
        model.B,
        model.beta.build(),
        model.build_selection(cell["n"]),
        eps=cell.get("eps") if cell.get("eps") is not None else model.eps,
        max_steps=model.max_steps,
        seed=cell["seed"],
    )
    summary = trace.summary
    return {
        "converged": summary.converged,
        "stop_reason": summary.stop_reason.value,
        "steps": summary.steps,
        "convergence_step": summary.convergence_step,
    }


def run_cell(document: Dict[str, Any], cell: Dict[str, Any]) -> Dict[str, Any]:
    """单个扫描单元; 进程池中执行, 参数和返回值均为纯 JSON 数据"""
    config = ExperimentConfig.model_validate(document)
    body = _dissum_cell(config, cell) if cell["kind"] == "dissum" else _br_cell(config, cell)
    return {**cell, **body}


# ----------------------------------------------------------------------- service


class ExperimentService:
    """实验服务"""

    def __init__(self, config: ExperimentConfig, jobs: int = 1):
        """
        初始化服务

        Args:
            config: 已校验的实验配置
            jobs: 扫描时的最大并行进程数
        """
        if jobs < 1:
            raise ConfigError(f"--jobs must be >= 1, got {jobs}")
        self.config = config
        self.jobs = jobs

    # --------------------------------------------------------------- single runs

    def simulate(self, seed: Optional[int] = None) -> Trace:
        """按配置运行一次最优反应动力学"""
        config = self.config
        cfg = build_contest(config.require_contest())
        stop = config.require_stop().build(cfg.n)
        seed = config.seeds[0] if seed is None else seed
        try:
            logger.info(
                f"simulate {config.name}: n={cfg.n} policy={config.policy.kind} seed={seed}"
            )
            policy = config.policy.build(cfg.n)
            trace = run(cfg, config.initial_profile(cfg.n), policy, stop, seed)
        except InvalidInputError as e:
            logger.error(f"simulate {config.name} rejected: {e}")
            raise ConfigError(str(e)) from e
        logger.info(
            f"simulate {config.name} finished: {trace.summary.stop_reason.value} "
            f"after {trace.summary.steps} steps"
        )
        return trace

    def dissum(self, seed: Optional[int] = None) -> Trace:
        """按配置运行一次折扣和动力学"""
        model = self.config.require_dissum()
        seed = self.config.seeds[0] if seed is None else seed
        if model.z0 is not None:
            z0 = np.asarray(model.z0, dtype=float)
        else:
            assert model.n is not None
            z0 = np.random.default_rng(seed).uniform(-1.0, 1.0, model.n)
        try:
            logger.info(f"dissum {self.config.name}: n={z0.size} B={model.B} seed={seed}")
            trace = run_dissum(
                z0,
                model.B,
                model.beta.build(),
                model.build_selection(z0.size),
                eps=model.eps,
                max_steps=model.max_steps,
                seed=seed,
            )
        except InvalidInputError as e:
            logger.error(f"dissum {self.config.name} rejected: {e}")
            raise ConfigError(str(e)) from e
        logger.info(
            f"dissum {self.config.name} finished: {trace.summary.stop_reason.value} "
            f"after {trace.summary.steps} steps"
        )
        return trace

    def cycle(self, seed: Optional[int] = None) -> Trace:
        """带循环检测的运行; 没有 contest 段时使用两人异质成本的循环实例"""
        config = self.config
        stop_model = config.stop
        policy: SelectionPolicy
        if config.contest is None:
            cfg, x0, policy = heterogeneous_cycle_example()
            start: List[float] = list(x0)
        else:
            cfg = build_contest(config.contest)
            start = config.initial_profile(cfg.n)
            policy = config.policy.build(cfg.n)
        if stop_model is None:
            stop = StoppingRule.cycle(max_steps=1000, tol=5e-4)
        else:
            stop = stop_model.model_copy(update={"detect_cycle": True}).build(cfg.n)
        seed = config.seeds[0] if seed is None else seed
        trace = run(cfg, start, policy, stop, seed)
        cycle = trace.summary.cycle
        if cycle is not None:
            logger.info(f"cycle of period {cycle.period} from t={cycle.start_t}")
        else:
            logger.info(f"no cycle found: {trace.summary.stop_reason.value}")
        return trace

    def write_trace(
        self, trace: Trace, path: Optional[str], fmt: Optional[str] = None
    ) -> str:
        """写入轨迹文件并返回路径; 未给出路径时返回渲染后的文本 (由调用方写入 stdout)"""
        writer = TraceWriter(fmt or self.config.output.format)
        target = path or self.config.output.path
        if target is None:
            return writer.render(trace)
        return str(writer.write(trace, target))

    # -------------------------------------------------------------------- sweeps

    def _cells(self) -> List[Dict[str, Any]]:
        config = self.config
        sweep = config.sweep
        if sweep is None:
            raise ConfigError("sweep needs a 'sweep' section")
        if config.contest is not None:
            kind = "br"
            n_axis = sweep.n or [config.contest.n]
            cost_axis: List[Optional[Dict[str, Any]]] = [
                c.model_dump(exclude_none=True) for c in sweep.costs
            ] or [None]
            eps_axis: List[Optional[float]] = list(sweep.eps) or [None]
            config.require_stop()
        elif config.dissum is not None:
            kind = "dissum"
            dissum = config.dissum
            default_n = dissum.n or (len(dissum.z0) if dissum.z0 else None)
            n_axis = sweep.n or ([default_n] if default_n else [])
            cost_axis = [None]
            eps_axis = list(sweep.eps) or [None]
        else:
            raise ConfigError("sweep needs a 'contest' or a 'dissum' section")
        if not n_axis:
            raise ConfigError("sweep axes must be nonempty")

        grid = itertools.product(n_axis, enumerate(cost_axis), eps_axis, config.seeds)
        return [
            {
                "index": index,
                "kind": kind,
                "n": n,
                "cost": cost,
                "cost_index": cost_index,
                "eps": eps,
                "seed": seed,
            }
            for index, (n, (cost_index, cost), eps, seed) in enumerate(grid)
        ]

    def sweep(self, out_dir: str) -> Dict[str, Any]:
        """
        运行扫描: 坐标轴与种子的笛卡尔积

        每个单元的结果先原子写入 ``<out_dir>/cells/``, 全部完成后按编号合并为
        ``<out_dir>/sweep.json``. 任一单元失败时仍写出部分结果, 然后抛出 SweepCellError.
        """
        cells = self._cells()
        out = Path(out_dir)
        cell_dir = out / "cells"
        cell_dir.mkdir(parents=True, exist_ok=True)
        for stale in cell_dir.glob("cell-*.json"):
            stale.unlink()
        document = self.config.model_dump(mode="json")
        failures: List[Dict[str, Any]] = []
        logger.info(f"sweep {self.config.name}: {len(cells)} cells, jobs={self.jobs}")

        def store(cell: Dict[str, Any], result: Dict[str, Any]) -> None:
            write_json(cell_dir / f"cell-{cell['index']:05d}.json", result)
            logger.debug(f"sweep cell {cell['index']} done: {result['stop_reason']}")

        def fail(cell: Dict[str, Any], error: Exception) -> None:
            logger.error(f"sweep cell {cell['index']} failed: {error!r}")
            failures.append({**cell, "error": repr(error)})

        if self.jobs == 1:
            for cell in cells:
                try:
                    store(cell, run_cell(document, cell))
                except Exception as e:
                    fail(cell, e)
        else:
            with ProcessPoolExecutor(max_workers=self.jobs) as pool:
                futures = {pool.submit(run_cell, document, cell): cell for cell in cells}
                for future in as_completed(futures):
                    cell = futures[future]
                    try:
                        store(cell, future.result())
                    except Exception as e:
                        fail(cell, e)

        results = [self._read_cell(path) for path in sorted(cell_dir.glob("cell-*.json"))]
        report = self.aggregate(results)
        report["failed_cells"] = sorted(failures, key=lambda c: c["index"])
        report["complete"] = not failures
        target = write_json(out / "sweep.json", report)
        logger.info(f"sweep report written: {target}")
        if failures:
            raise SweepCellError(
                f"{len(failures)} of {len(cells)} sweep cells failed; see {target}"
            )
        return report

    @staticmethod
    def _read_cell(path: Path) -> Dict[str, Any]:
        with open(path, encoding="utf-8") as fh:
            data: Dict[str, Any] = json.load(fh)
        return data

    def aggregate(self, results: List[Dict[str, Any]]) -> Dict[str, Any]:
        """按 (n, cost, eps) 分组汇总步数分位数, 并按需拟合收敛速率"""
        groups: Dict[Tuple[int, int, Optional[float]], List[Dict[str, Any]]] = {}
        for r in results:
            groups.setdefault((r["n"], r["cost_index"], r["eps"]), []).append(r)

        rows = []
        for (n, cost_index, eps), members in sorted(
            groups.items(), key=lambda kv: _group_key(kv[0])
        ):
            converged = [m["steps"] for m in members if m["converged"]]
            rows.append(
                {
                    "n": n,
                    "cost_index": cost_index,
                    "cost": members[0]["cost"],
                    "eps": eps,
                    "runs": len(members),
                    "converged": len(converged),
                    "steps": [m["steps"] for m in members],
                    "quantiles": _quantiles(converged),
                    "mean": float(np.mean(converged)) if converged else None,
                }
            )
        return {
            "name": self.config.name,
            "cells": results,
            "groups": rows,
            "fits": self._fits(rows),
        }

    def _fits(self, rows: List[Dict[str, Any]]) -> List[Dict[str, Any]]:
        sweep = self.config.sweep
        if sweep is None or sweep.fit is None or self.config.contest is None:
            return []
        fits = []
        by_instance: Dict[Tuple[int, int], List[Dict[str, Any]]] = {}
        for row in rows:
            if row["eps"] is not None and row["quantiles"]:
                by_instance.setdefault((row["n"], row["cost_index"]), []).append(row)
        for (n, cost_index), members in sorted(by_instance.items()):
            members.sort(key=lambda r: -r["eps"])
            measured = [(r["eps"], r["quantiles"]["0.5"]) for r in members]
            entry: Dict[str, Any] = {"n": n, "cost_index": cost_index, "model": sweep.fit}
            try:
                cfg = _contest_for_cell(self.config, {"n": n, "cost": members[0]["cost"]})
                entry.update(fit_rate(measured, self._prediction(cfg)).to_dict())
            except (FitError, ContestError) as e:
                logger.warning(f"fit for n={n} cost #{cost_index} skipped: {e}")
                entry["error"] = str(e)
            fits.append(entry)
        return fits

    def _prediction(self, cfg: ContestConfig) -> RatePrediction:
        sweep = self.config.sweep
        assert sweep is not None
        x0 = self.config.initial_profile(cfg.n)
        if sweep.fit == "two_agent":
            first = self.config.policy.first if self.config.policy.kind == "alternating" else 1
            gamma = gamma_two_agent(cfg, x0[1 - first]).gamma
            return RatePrediction.two_agent(min(gamma, 1.0))
        gamma = min(gamma_lower_bound_n(cfg, x0).gamma, 1.0)
        if sweep.fit == "n_agent_best":
            return RatePrediction.n_agent_best(cfg.n, gamma)
        return RatePrediction.n_agent_random(cfg.n, gamma)


def _group_key(key: Tuple[int, int, Optional[float]]) -> Tuple[int, int, float]:
    n, cost_index, eps = key
    return n, cost_index, -(eps if eps is not None else 1.0)
