"""
轨迹写入器
把 Trace 写成 CSV (17位有效数字) 或 JSON-lines, 所有写入均为原子写入
"""

import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union

from app.models.dynamics import Trace
from app.utils.exceptions import InvalidInputError
from app.utils.logger import get_logger

logger = get_logger("outputs.trace")

PathLike = Union[str, Path]
FORMATS = ("csv", "jsonl")


def _json_safe(value: Any) -> Any:
    """inf/nan 不是合法 JSON, 写成字符串"""
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def dumps(data: Any) -> str:
    """确定性的 JSON 序列化: 键排序, 浮点取最短往返表示"""
    return json.dumps(_json_safe(data), sort_keys=True, allow_nan=False)


def atomic_write_text(path: PathLike, text: str) -> Path:
    """先写同目录临时文件, 再替换目标文件"""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return target


def write_json(path: PathLike, data: Any) -> Path:
    return atomic_write_text(path, dumps(data) + "\n")


class TraceWriter:
    """轨迹写入器"""

    def __init__(self, fmt: str = "csv"):
        if fmt not in FORMATS:
            raise InvalidInputError(f"unknown trace format {fmt!r}; expected csv or jsonl")
        self.fmt = fmt

    def render(self, trace: Trace, summary: Optional[Dict[str, Any]] = None) -> str:
        """按当前格式渲染整条轨迹"""
        summary = trace.summary.to_dict() if summary is None else summary
        if self.fmt == "csv":
            return trace.to_frame().to_csv(index=False, float_format="%.17g", lineterminator="\n")
        lines = [dumps(record) for record in self._records(trace)]
        lines.append(dumps({"summary": summary}))
        return "\n".join(lines) + "\n"

    def _records(self, trace: Trace) -> Iterable[Dict[str, Any]]:
        for k, (t, mover, state) in enumerate(trace):
            record: Dict[str, Any] = {"t": t, "mover": mover}
            if trace.potentials is not None:
                record["f"] = float(trace.potentials[k])
            record[trace.prefix] = [float(v) for v in state]
            yield record

    def summary_path(self, path: PathLike) -> Path:
        target = Path(path)
        return target.with_name(target.name + ".summary.json")

    def write(
        self,
        trace: Trace,
        path: PathLike,
        summary: Optional[Dict[str, Any]] = None,
    ) -> Path:
        """
        写入轨迹

        Args:
            trace: 轨迹
            path: 输出路径
            summary: 摘要; 默认取 trace.summary. CSV 格式写入 ``<path>.summary.json``

        Returns:
            Path: 轨迹文件路径
        """
        summary = trace.summary.to_dict() if summary is None else summary
        target = atomic_write_text(path, self.render(trace, summary))
        if self.fmt == "csv":
            write_json(self.summary_path(target), summary)
        logger.info(f"trace written: {target} ({len(trace)} records, {self.fmt})")
        return target
