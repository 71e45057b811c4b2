"""
分析报告数据模块
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple


class PiecewiseCase(str, Enum):
    """R_C 分段函数的三个区间"""
    A = "A"   # K/N ≤ s ≤ K
    B = "B"   # K/N - 1 ≤ s < K/N
    C = "C"   # s < K/N - 1，R_C = N - M


@dataclass(frozen=True)
class GapReport:
    """
    单个 (K, N, M) 参数点的差距报告

    Attributes:
        users, files, memory: 参数点
        centralized_rate: R_C
        decentralized_rate: R_D
        ratio: R_D / R_C
        case: R_C 所处的分段
        s, theta: 存储几何量
        tight_lower: 处于分段 C（比值应恰为 1）
        tight_upper: 比值与 1.5 的距离不超过容差
    """

    users: int
    files: int
    memory: float
    centralized_rate: float
    decentralized_rate: float
    ratio: float
    case: PiecewiseCase
    s: int
    theta: float
    tight_lower: bool
    tight_upper: bool

    @property
    def params(self) -> Tuple[int, int, float]:
        return (self.users, self.files, self.memory)

    def as_row(self) -> Dict[str, object]:
        return {
            "K": self.users,
            "N": self.files,
            "M": self.memory,
            "R_C": self.centralized_rate,
            "R_D": self.decentralized_rate,
            "ratio": self.ratio,
            "piecewise_case": self.case.value,
            "tight_lower": self.tight_lower,
            "tight_upper": self.tight_upper,
        }


@dataclass
class GapSummary:
    """
    扫描汇总

    Attributes:
        points: 参数点总数
        min_ratio / max_ratio: 全局最小 / 最大比值
        argmin / argmax: 取得极值的参数点
        tight_upper_points: 比值达到 1.5 的全部参数点
        case_counts: 各分段的点数
        certificates_checked: 逐点校验的分段上界数量
    """

    points: int = 0
    min_ratio: float = float("inf")
    max_ratio: float = float("-inf")
    argmin: Optional[Tuple[int, int, float]] = None
    argmax: Optional[Tuple[int, int, float]] = None
    tight_upper_points: List[Tuple[int, int, float]] = field(default_factory=list)
    tight_lower_count: int = 0
    case_counts: Dict[str, int] = field(default_factory=lambda: {c.value: 0 for c in PiecewiseCase})
    certificates_checked: int = 0

    def merge(self, other: "GapSummary") -> None:
        """合并另一块扫描结果（与求值顺序无关）"""
        self.points += other.points
        if other.min_ratio < self.min_ratio or (
                other.min_ratio == self.min_ratio and _before(other.argmin, self.argmin)):
            self.min_ratio, self.argmin = other.min_ratio, other.argmin
        if other.max_ratio > self.max_ratio or (
                other.max_ratio == self.max_ratio and _before(other.argmax, self.argmax)):
            self.max_ratio, self.argmax = other.max_ratio, other.argmax
        self.tight_upper_points = sorted(self.tight_upper_points + other.tight_upper_points)
        self.tight_lower_count += other.tight_lower_count
        for key, value in other.case_counts.items():
            self.case_counts[key] = self.case_counts.get(key, 0) + value
        self.certificates_checked += other.certificates_checked

    def describe(self) -> str:
        k, n, m = self.argmax if self.argmax else (0, 0, 0.0)
        return f"max ratio {self.max_ratio:.6f} at K={k} N={n} M={m}; min ratio {self.min_ratio:.6f}"


def _before(a, b) -> bool:
    if a is None:
        return False
    return b is None or a < b


@dataclass
class GapSweep:
    """sweep_gap 的结果：逐点报告（可选）与汇总"""
    reports: List[GapReport]
    summary: GapSummary


@dataclass(frozen=True)
class AppendixEval:
    """
    附录函数的一次求值

    Attributes:
        name: f / g / h / l / B1 / B2
        arguments: 参数
        value: 函数值
        target: 参考值（若有）
        tolerance: 与参考值比较的容差
    """

    name: str
    arguments: Tuple[float, ...]
    value: float
    target: Optional[float] = None
    tolerance: float = 0.0

    @property
    def matches(self) -> bool:
        return self.target is None or abs(self.value - self.target) <= self.tolerance

    def as_row(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "arguments": " ".join(f"{a:g}" for a in self.arguments),
            "value": self.value,
            "target": "" if self.target is None else self.target,
            "ok": self.matches,
        }


@dataclass(frozen=True)
class LimitPoint:
    """limit_check 沿 K 的一个点"""
    users: int
    ratio: float
    lemma_ratio: float
