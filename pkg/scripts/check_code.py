#!/usr/bin/env python3
"""
代码质量检查脚本
格式、导入排序、风格、类型检查, 最后跑一遍快速测试 (跳过 slow 标记)
"""
import subprocess
import sys
from pathlib import Path

PROJECT_ROOT = Path(__file__).resolve().parent.parent

CHECKS = [
    ("black --check app/ tests/", "Black 格式检查"),
    ("isort --check-only app/ tests/", "isort 导入排序检查"),
    ("flake8 app/ tests/ --max-line-length=100 --extend-ignore=E203,W503", "Flake8 代码风格检查"),
    ("mypy app/ --ignore-missing-imports", "MyPy 类型检查"),
    ('pytest -m "not slow"', "快速测试"),
]


def run_command(cmd: str, description: str) -> bool:
    """运行命令并显示结果"""
    print(f"\n=== {description} ===")
    try:
        result = subprocess.run(cmd, shell=True, capture_output=True, text=True, cwd=PROJECT_ROOT)
    except OSError as e:
        print(f"❌ 运行出错: {e}")
        return False
    if result.returncode == 0:
        print("✅ 通过")
        if result.stdout.strip():
            print(result.stdout)
        return True
    print("❌ 失败")
    if result.stderr.strip():
        print("错误信息:", result.stderr)
    if result.stdout.strip():
        print("输出:", result.stdout)
    return False


def main() -> int:
    print("🚀 开始代码质量检查...")
    results = [run_command(cmd, description) for cmd, description in CHECKS]

    print("\n" + "=" * 50)
    if all(results):
        print("🎉 所有代码质量检查都通过了！")
        return 0
    print("❌ 有检查失败，请修复上述问题")
    return 1


if __name__ == "__main__":
    sys.exit(main())
