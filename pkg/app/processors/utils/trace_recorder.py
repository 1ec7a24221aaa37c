"""
轨迹记录器
所有动力学处理器共用: n*steps 不超过上限时保存完整轨迹, 否则切换为环形缓冲区
"""

from collections import deque
from typing import Deque, List, Optional, Sequence, Union

import numpy as np

from app.config.settings import settings

_Store = Union[List, Deque]


class TraceRecorder:
    """逐步记录 (t, mover, state[, f])"""

    def __init__(
        self,
        n: int,
        track_potential: bool = False,
        full_limit: Optional[int] = None,
        ring_size: Optional[int] = None,
    ):
        """
        初始化记录器

        Args:
            n: 坐标维数
            track_potential: 是否把势函数值作为逐条记录的一列保存
            full_limit: 完整保存的 n*steps 上限
            ring_size: 环形缓冲区长度
        """
        self.n = n
        self.track_potential = track_potential
        self.full_limit = settings.trace_full_limit if full_limit is None else full_limit
        self.ring_size = settings.trace_ring_size if ring_size is None else ring_size
        self.truncated = False
        self.count = 0
        self._times: _Store = []
        self._movers: _Store = []
        self._states: _Store = []
        self._potentials: _Store = []

    def record(
        self,
        t: int,
        mover: Optional[int],
        state: Sequence[float],
        potential: Optional[float] = None,
    ) -> None:
        if not self.truncated and (self.count + 1) * self.n > self.full_limit:
            self._switch_to_ring()
        self._times.append(t)
        self._movers.append(-1 if mover is None else mover)
        self._states.append(np.array(state, dtype=float))
        if self.track_potential:
            self._potentials.append(float(potential) if potential is not None else np.nan)
        self.count += 1

    def _switch_to_ring(self) -> None:
        size = self.ring_size
        self._times = deque(self._times, maxlen=size)
        self._movers = deque(self._movers, maxlen=size)
        self._states = deque(self._states, maxlen=size)
        self._potentials = deque(self._potentials, maxlen=size)
        self.truncated = True

    def tail(self, k: int) -> np.ndarray:
        """最近 k 条状态 (行) 组成的数组"""
        k = min(k, len(self._states))
        return np.array([self._states[-j] for j in range(k, 0, -1)])

    def tail_movers(self, k: int) -> np.ndarray:
        k = min(k, len(self._movers))
        return np.array([self._movers[-j] for j in range(k, 0, -1)], dtype=int)

    def tail_times(self, k: int) -> np.ndarray:
        k = min(k, len(self._times))
        return np.array([self._times[-j] for j in range(k, 0, -1)], dtype=int)

    def arrays(self) -> tuple:
        times = np.array(self._times, dtype=int)
        movers = np.array(self._movers, dtype=int)
        states = (
            np.vstack(list(self._states)) if self._states else np.zeros((0, self.n))
        )
        potentials = (
            np.array(self._potentials, dtype=float) if self.track_potential else None
        )
        return times, movers, states, potentials
