"""
轨迹与摘要输出
"""

from .writer import TraceWriter, atomic_write_text, dumps, write_json

__all__ = ["TraceWriter", "atomic_write_text", "dumps", "write_json"]
