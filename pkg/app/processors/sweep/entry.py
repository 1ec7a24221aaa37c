"""
实验入口
命令行使用的便捷函数: 读取配置、调用服务、返回结果和退出码
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence

from app.config.settings import settings
from app.models.dynamics import Trace
from app.models.experiment import load_experiment
from app.processors.analysis.verify import VerifyReport, run_suite
from app.processors.sweep.service import ExperimentService, exit_code_for
from app.utils.logger import get_logger

logger = get_logger("sweep.entry")


@dataclass
class RunOutcome:
    """单次运行的结果: ``text`` 为未指定输出路径时渲染的轨迹"""

    trace: Trace
    exit_code: int
    path: Optional[str] = None
    text: Optional[str] = None


def _service(
    source: Optional[str],
    overrides: Sequence[str],
    seed: Optional[int],
    jobs: int = 1,
    fmt: Optional[str] = None,
) -> ExperimentService:
    """命令行参数作为覆盖项写入文档, 与 ``--set`` 一起参与校验"""
    overrides = list(overrides)
    if seed is not None:
        overrides.append(f"seeds=[{seed}]")
    if fmt is not None:
        overrides.append(f"output.format={fmt}")
    return ExperimentService(load_experiment(source, overrides), jobs=jobs)


def _outcome(service: ExperimentService, trace: Trace, out: Optional[str]) -> RunOutcome:
    rendered = service.write_trace(trace, out)
    code = exit_code_for(trace.summary.stop_reason)
    if out or service.config.output.path:
        return RunOutcome(trace, code, path=rendered)
    return RunOutcome(trace, code, text=rendered)


def simulate_experiment(
    source: Optional[str],
    overrides: Sequence[str] = (),
    seed: Optional[int] = None,
    out: Optional[str] = None,
    fmt: Optional[str] = None,
) -> RunOutcome:
    """
    运行一次最优反应动力学

    Args:
        source: 配置文件路径
        overrides: ``a.b=value`` 形式的覆盖项
        seed: 覆盖配置中的种子列表
        out: 轨迹输出路径; 为空时返回渲染文本
        fmt: csv 或 jsonl

    Returns:
        RunOutcome: 轨迹与退出码
    """
    service = _service(source, overrides, seed, fmt=fmt)
    return _outcome(service, service.simulate(), out)


def dissum_experiment(
    source: Optional[str],
    overrides: Sequence[str] = (),
    seed: Optional[int] = None,
    out: Optional[str] = None,
    fmt: Optional[str] = None,
) -> RunOutcome:
    """运行一次折扣和动力学"""
    service = _service(source, overrides, seed, fmt=fmt)
    return _outcome(service, service.dissum(), out)


def cycle_experiment(
    source: Optional[str],
    overrides: Sequence[str] = (),
    seed: Optional[int] = None,
    out: Optional[str] = None,
    fmt: Optional[str] = None,
) -> RunOutcome:
    """带循环检测的运行; 不给配置时使用两人异质成本的循环实例"""
    service = _service(source, overrides, seed, fmt=fmt)
    return _outcome(service, service.cycle(), out)


def sweep_experiment(
    source: Optional[str],
    out_dir: Optional[str] = None,
    overrides: Sequence[str] = (),
    seed: Optional[int] = None,
    jobs: int = 1,
) -> Dict[str, Any]:
    """运行扫描并返回汇总报告; 单元失败时抛出 SweepCellError

    输出目录依次取 ``out_dir``, 配置中的 ``output.path``, 全局 ``output_path``
    """
    service = _service(source, overrides, seed, jobs=jobs)
    return service.sweep(out_dir or service.config.output.path or settings.output_path)


def verify_suite(name: str, quick: bool = False, seed: int = 0) -> VerifyReport:
    report = run_suite(name, quick=quick, seed=seed)
    if not report.passed:
        logger.warning(f"verify {name} failed: {', '.join(report.failed)}")
    return report
