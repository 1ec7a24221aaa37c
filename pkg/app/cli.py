"""
命令行入口
子命令: simulate / sweep / dissum / verify / cycle

数据 (轨迹、报告 JSON) 写入 stdout 或 ``--out``; 诊断信息只写入 stderr
"""

from pathlib import Path
from typing import Any, Callable, List, Optional

import typer
from rich.console import Console
from rich.table import Table

from app.models.dynamics import Trace
from app.outputs.trace.writer import dumps, write_json
from app.processors.sweep.entry import (
    RunOutcome,
    cycle_experiment,
    dissum_experiment,
    simulate_experiment,
    sweep_experiment,
    verify_suite,
)
from app.utils.exceptions import ConfigError, ContestError
from app.utils.logger import setup_logger

EXIT_CONFIG = 64
EXIT_FAILURE = 1

app = typer.Typer(
    name="tullock",
    help="Best-response dynamics in Tullock contests: simulate, sweep, verify.",
    add_completion=False,
    no_args_is_help=True,
)
console = Console(stderr=True)

ConfigArg = typer.Argument(None, help="实验配置 JSON 文件")
SeedOpt = typer.Option(None, "--seed", help="覆盖配置中的种子")
FormatOpt = typer.Option(None, "--format", help="轨迹格式: csv 或 jsonl")
OutOpt = typer.Option(None, "--out", help="输出路径; 省略时写入 stdout")
SetOpt = typer.Option([], "--set", help="覆盖配置项, 形如 a.b=value, 可重复")


@app.callback()
def main_callback(
    log_level: Optional[str] = typer.Option(None, "--log-level", help="日志级别"),
) -> None:
    setup_logger(log_level)


def _guarded(action: Callable[[], Any]) -> Any:
    """执行命令; 配置错误退出码 64, 其余领域错误退出码 1"""
    try:
        return action()
    except ConfigError as e:
        console.print(f"[red]config error:[/red] {e}")
        raise typer.Exit(EXIT_CONFIG)
    except ContestError as e:
        console.print(f"[red]error:[/red] {e}")
        raise typer.Exit(EXIT_FAILURE)


def _summary_table(trace: Trace) -> Table:
    summary = trace.summary
    table = Table(title="run summary", show_header=False)
    table.add_row("stop reason", summary.stop_reason.value)
    table.add_row("steps", str(summary.steps))
    table.add_row("agents", str(trace.n))
    if summary.cycle is not None:
        table.add_row("cycle period", str(summary.cycle.period))
        table.add_row("cycle start", str(summary.cycle.start_t))
    return table


def _finish(outcome: RunOutcome) -> None:
    if outcome.text is not None:
        typer.echo(outcome.text, nl=False)
    else:
        console.print(f"trace written to {outcome.path}")
    console.print(_summary_table(outcome.trace))
    raise typer.Exit(outcome.exit_code)


def _path(value: Optional[Path]) -> Optional[str]:
    return None if value is None else str(value)


@app.command()
def simulate(
    config: Path = typer.Argument(..., help="实验配置 JSON 文件"),
    seed: Optional[int] = SeedOpt,
    fmt: Optional[str] = FormatOpt,
    out: Optional[Path] = OutOpt,
    overrides: List[str] = SetOpt,
) -> None:
    """运行一次最优反应动力学; 退出码 0 收敛, 2 步数用尽, 3 检测到循环"""
    outcome = _guarded(
        lambda: simulate_experiment(str(config), overrides, seed, _path(out), fmt)
    )
    _finish(outcome)


@app.command()
def dissum(
    config: Path = typer.Argument(..., help="实验配置 JSON 文件"),
    seed: Optional[int] = SeedOpt,
    fmt: Optional[str] = FormatOpt,
    out: Optional[Path] = OutOpt,
    overrides: List[str] = SetOpt,
) -> None:
    """运行一次折扣和动力学"""
    outcome = _guarded(lambda: dissum_experiment(str(config), overrides, seed, _path(out), fmt))
    _finish(outcome)


@app.command()
def cycle(
    config: Optional[Path] = ConfigArg,
    seed: Optional[int] = SeedOpt,
    fmt: Optional[str] = FormatOpt,
    out: Optional[Path] = OutOpt,
    overrides: List[str] = SetOpt,
) -> None:
    """带循环检测的运行; 省略配置时运行两人异质成本的循环实例"""
    outcome = _guarded(
        lambda: cycle_experiment(_path(config), overrides, seed, _path(out), fmt)
    )
    if outcome.trace.summary.cycle is not None:
        console.print_json(dumps(outcome.trace.summary.cycle.to_dict()))
    _finish(outcome)


@app.command()
def sweep(
    config: Path = typer.Argument(..., help="实验配置 JSON 文件"),
    seed: Optional[int] = SeedOpt,
    jobs: int = typer.Option(1, "--jobs", help="并行进程数上限"),
    out: Optional[Path] = typer.Option(None, "--out", help="输出目录"),
    overrides: List[str] = SetOpt,
) -> None:
    """运行扫描, 汇总写入 ``<out>/sweep.json``"""
    report = _guarded(
        lambda: sweep_experiment(str(config), _path(out), overrides, seed, jobs)
    )
    table = Table(title="sweep groups")
    for column in ("n", "cost", "eps", "runs", "converged", "median steps"):
        table.add_column(column)
    for group in report.get("groups", []):
        table.add_row(
            str(group.get("n")),
            str(group.get("cost_index")),
            str(group.get("eps")),
            str(group.get("runs")),
            str(group.get("converged")),
            str(group.get("quantiles", {}).get("0.5")),
        )
    console.print(table)


@app.command()
def verify(
    suite: str = typer.Argument("all", help="core / two_agent / dissum / n_agent / lemmas / all"),
    quick: bool = typer.Option(False, "--quick", help="缩小样本规模的快速检查"),
    seed: int = typer.Option(0, "--seed", help="随机种子"),
    out: Optional[Path] = OutOpt,
) -> None:
    """运行校验套件; 全部通过退出码 0, 否则 1"""
    report = _guarded(lambda: verify_suite(suite, quick=quick, seed=seed))
    data = report.to_dict()
    if out is None:
        typer.echo(dumps(data))
    else:
        write_json(out, data)
    for name in report.failed:
        console.print(f"[red]FAILED[/red] {name}")
    console.print(f"{len(report.results) - len(report.failed)}/{len(report.results)} checks passed")
    raise typer.Exit(0 if report.passed else EXIT_FAILURE)


def main() -> None:
    app()


if __name__ == "__main__":
    main()
