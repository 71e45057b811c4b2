"""
系统参数模块

定义系统参数 (K, N, M, F) 与存储几何量 (q, s, θ, t)。
"""

import math
from dataclasses import dataclass
from typing import Mapping

from src.utils.exceptions import InvalidParams

# 判断 K·M/N 是否为整数时的吸附容差（绝对量）
SNAP_TOLERANCE = 1e-12


def snap_integer(value: float, tolerance: float = SNAP_TOLERANCE) -> float:
    """若 |value - round(value)| < tolerance，则返回该整数"""
    nearest = round(value)
    if abs(value - nearest) < tolerance:
        return float(nearest)
    return value


@dataclass(frozen=True)
class MemoryGeometry:
    """
    存储几何量

    Attributes:
        q: 缓存比例 M/N，取值 (0, 1]
        s: ⌈K·q⌉，取值 1..K
        theta: s - K·q，取值 [0, 1)
        t: K·q（角点处为整数）
    """

    q: float
    s: int
    theta: float
    t: float

    @classmethod
    def from_fraction(cls, q: float, users: int) -> "MemoryGeometry":
        """由缓存比例 q 与用户数 K 计算几何量"""
        t = snap_integer(users * q)
        s = int(math.ceil(t))
        theta = float(s) - t
        return cls(q=q, s=s, theta=theta, t=t)

    @classmethod
    def from_memory(cls, users: int, files: int, memory: float) -> "MemoryGeometry":
        """由 (K, N, M) 计算几何量；t 按 K·M/N 计算以减少舍入"""
        t = snap_integer(users * memory / files)
        s = int(math.ceil(t))
        return cls(q=memory / files, s=s, theta=float(s) - t, t=t)

    @property
    def is_corner(self) -> bool:
        return self.theta == 0.0


@dataclass(frozen=True)
class SystemParams:
    """
    系统参数

    Attributes:
        users: 用户数 K（≥ 2）
        files: 文件数 N（≥ 1）
        memory: 每个用户的缓存大小 M（以文件为单位，0 < M ≤ N）
        file_bits: 文件长度 F（比特，仅仿真使用）
    """

    users: int
    files: int
    memory: float
    file_bits: int = 1

    def __post_init__(self):
        if int(self.users) != self.users or self.users < 2:
            raise InvalidParams(f"用户数 K 必须为 ≥ 2 的整数: {self.users}")
        if int(self.files) != self.files or self.files < 1:
            raise InvalidParams(f"文件数 N 必须为 ≥ 1 的整数: {self.files}")
        if not (0 < self.memory <= self.files):
            raise InvalidParams(f"缓存大小 M 必须满足 0 < M ≤ N: M={self.memory}, N={self.files}")
        if int(self.file_bits) != self.file_bits or self.file_bits < 1:
            raise InvalidParams(f"文件长度 F 必须为正整数: {self.file_bits}")
        object.__setattr__(self, "memory", float(self.memory))

    @property
    def K(self) -> int:
        return self.users

    @property
    def N(self) -> int:
        return self.files

    @property
    def M(self) -> float:
        return self.memory

    @property
    def F(self) -> int:
        return self.file_bits

    @property
    def q(self) -> float:
        return self.memory / self.files

    @property
    def geometry(self) -> MemoryGeometry:
        return MemoryGeometry.from_memory(self.users, self.files, self.memory)

    @property
    def is_full_memory(self) -> bool:
        return self.memory >= self.files

    def with_memory(self, memory: float) -> "SystemParams":
        return SystemParams(self.users, self.files, memory, self.file_bits)

    def with_file_bits(self, file_bits: int) -> "SystemParams":
        return SystemParams(self.users, self.files, self.memory, file_bits)

    def cached_bits_per_file(self) -> int:
        """每个文件可缓存的比特数 ⌊MF/N⌋（吸附后向下取整，不超出缓存预算）"""
        value = self.memory * self.file_bits / self.files
        # 乘积的舍入误差随 F 增大，按相对量吸附
        return int(math.floor(snap_integer(value, SNAP_TOLERANCE * max(1.0, value))))

    def __str__(self) -> str:
        return f"K={self.users} N={self.files} M={self.memory:g} F={self.file_bits}"


@dataclass(frozen=True)
class Tolerances:
    """
    数值检查的容差

    Attributes:
        ratio_slack: 比值不等式的绝对松弛量
        formula_equality: 两个解析公式相等时的容差
        mc_relative: 蒙特卡洛平均速率允许的相对误差
    """

    ratio_slack: float = 1e-9
    formula_equality: float = 1e-12
    mc_relative: float = 0.05

    @classmethod
    def from_mapping(cls, values: Mapping[str, float]) -> "Tolerances":
        """从 ParameterService.parse_tolerances 的结果构造，忽略其余键"""
        defaults = cls()
        return cls(ratio_slack=values.get('ratio_slack', defaults.ratio_slack),
                   formula_equality=values.get('formula_equality', defaults.formula_equality),
                   mc_relative=values.get('mc_relative', defaults.mc_relative))


DEFAULT_TOLERANCES = Tolerances()
