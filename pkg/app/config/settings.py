"""
应用配置管理模块
"""

from pathlib import Path
from typing import Any, Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """应用配置类"""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # 应用基础配置
    app_name: str = Field(default="Tullock BR Dynamics", description="应用名称")
    app_version: str = Field(default="1.0.0", description="应用版本")
    debug: bool = Field(default=False, description="调试模式")

    # 竞赛模型
    default_a: float = Field(
        default=1e-3, gt=0.0, lt=1.0, description="对手总产出为0时的最优反应常数a"
    )

    # 最优反应求解器
    br_xtol: float = Field(default=2.5e-14, description="二分法绝对容差")
    br_rtol: float = Field(default=2.5e-14, description="二分法相对容差")
    br_max_doublings: int = Field(default=60, description="上界倍增次数上限")
    br_max_iter: int = Field(default=400, description="二分法最大迭代次数")

    # 自定义成本函数校验
    cost_check_samples: int = Field(default=1000, description="成本函数采样点数")
    cost_check_upper: float = Field(default=10.0, description="成本函数采样区间上界")
    cost_check_step: float = Field(default=1e-5, description="中心差分步长")
    cost_check_rtol: float = Field(default=1e-6, description="导数一致性相对容差")

    # 数值容差
    equilibrium_rel_slack: float = Field(
        default=1e-15, description="效用比较的舍入松弛(相对)"
    )
    potential_rel_slack: float = Field(default=1e-12, description="势函数比较相对松弛")
    cycle_tol: float = Field(default=1e-6, description="循环检测相对容差")
    cycle_max_period: int = Field(default=8, description="循环检测最大周期")
    cycle_repeats: int = Field(default=3, description="判定循环所需的连续重复周期数")

    # 轨迹存储
    trace_full_limit: int = Field(
        default=10_000_000, description="n*steps不超过该值时保存完整轨迹"
    )
    trace_ring_size: int = Field(default=10_000, description="环形缓冲区长度")
    default_max_steps: int = Field(default=1_000_000, description="默认最大步数")

    # 蒙特卡洛与拟合
    monte_carlo_trials: int = Field(default=1000, description="默认试验次数")
    tail_slack: float = Field(default=0.6, description="概率验收的置信松弛(+60%)")
    fit_residual_tolerance: float = Field(
        default=1.0, description="拟合残差超过该值视为拟合不佳"
    )

    # 文件存储配置
    output_path: str = Field(default="./outputs", description="输出文件路径")

    # 日志配置
    log_level: str = Field(default="INFO", description="日志级别")
    log_file: Optional[str] = Field(default=None, description="日志文件路径")

    def __init__(self, **kwargs: Any) -> None:
        super().__init__(**kwargs)
        self._ensure_directories()

    def _ensure_directories(self) -> None:
        """确保必要的目录存在"""
        if self.log_file:
            Path(self.log_file).parent.mkdir(parents=True, exist_ok=True)


# 全局配置实例
settings = Settings()
