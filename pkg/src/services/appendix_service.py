"""
附录函数服务模块

提供速率比上界证明中出现的辅助函数 f、g、h、l_n 与 s = 1 情形的两个上界
B1、B2 的求值，以及它们的参考数值表。
"""

import math
from typing import List, Tuple

import numpy as np

from src.models.reports import AppendixEval
from src.services.rate_service import power_complement, power_complement_array
from src.utils.exceptions import OutOfRange
from src.utils.logger import setup_logger

logger = setup_logger(__name__)

# 参考数值：(函数名, 参数, 目标值, 容差)
REFERENCE_VALUES: List[Tuple[str, Tuple[float, ...], float, float]] = [
    ("g", (4, 3), 0.0593, 5e-4),
    ("g", (3, 2), 0.0602, 5e-4),
    ("g", (4, 2), 0.0845, 5e-4),
    ("g", (5, 2), 0.0953, 5e-4),
    ("g", (6, 2), 0.1012, 5e-4),
    ("g", (7, 2), 0.1047, 5e-4),
    ("h", (5, 3), 0.0045, 5e-4),
    ("h", (8, 2), 0.0004, 2e-4),
    ("B1", (8, 6 / 25), 181 / 124, 1e-12),
    ("B2", (4, 6 / 25), 1.4988, 5e-4),
    ("B2", (9, 1 / 3), 1.4993, 5e-4),
]

L3_MAX = (1001 + 20 * math.sqrt(10)) / 729
L3_ARGMAX = (8 - math.sqrt(10)) / 3


class AppendixService:
    """
    附录函数服务类

    提供附录函数相关功能，包括：
    - f、g、h、l_n 的标量与向量化求值
    - B1、B2 两个上界
    - l_n 在 (0, n] 上的最大值搜索
    - 参考数值表的求值
    """

    @staticmethod
    def _require(condition: bool, message: str) -> None:
        if not condition:
            logger.error(message)
            raise OutOfRange(message)

    @staticmethod
    def _is_int(value) -> bool:
        return int(value) == value

    # ------------------------------------------------------------------
    # f / g / h
    # ------------------------------------------------------------------
    @classmethod
    def f(cls, theta: float, n: int, s: int) -> float:
        """
        f(θ,n,s) = (n-s)/(n(s+1)) + (n+1)θ²/(ns(s+1)) - (1 - (s-θ)/n)^{n+1}

        Raises:
            OutOfRange: θ ∉ [0,1) 或不满足 n ≥ s ≥ 1
        """
        cls._require(0 <= theta < 1, f"f 要求 0 ≤ θ < 1: θ={theta}")
        cls._require(cls._is_int(n) and cls._is_int(s) and n >= s >= 1, f"f 要求整数 n ≥ s ≥ 1: n={n}, s={s}")
        return ((n - s) / (n * (s + 1))
                + (n + 1) * theta ** 2 / (n * s * (s + 1))
                - power_complement((s - theta) / n, n + 1))

    @staticmethod
    def f_array(theta, n, s) -> np.ndarray:
        """f 的向量化版本（不做定义域检查）"""
        theta, n, s = np.broadcast_arrays(np.asarray(theta, dtype=float),
                                          np.asarray(n, dtype=float),
                                          np.asarray(s, dtype=float))
        return ((n - s) / (n * (s + 1))
                + (n + 1) * theta ** 2 / (n * s * (s + 1))
                - power_complement_array((s - theta) / n, n + 1))

    @classmethod
    def g(cls, n: int, s: int) -> float:
        """
        f(·,n,s) 关于 θ 的二次下界的最小值

        g(n,s) = (n-s)/(n(s+1)) - (1-s/n)^{n+1}
                 - (1/4)·(ns(s+1)/(n+1))·((1-(s-1)/n)^{n+1} - (1-s/n)^{n+1})²

        Raises:
            OutOfRange: 不满足 n > s ≥ 2
        """
        cls._require(cls._is_int(n) and cls._is_int(s) and n > s >= 2, f"g 要求整数 n > s ≥ 2: n={n}, s={s}")
        right = power_complement(s / n, n + 1)
        left = power_complement((s - 1) / n, n + 1)
        return (n - s) / (n * (s + 1)) - right - 0.25 * (n * s * (s + 1) / (n + 1)) * (left - right) ** 2

    @classmethod
    def h(cls, n: int, s: int) -> float:
        """
        g 的指数形式松弛

        h(n,s) = 1/(s+1) - s/(n(s+1)) - e^{-s}
                 - (e²/4)·(s(s+1)/e^{2s})·(1 - (1 - 1/(n-s+1))^{n+1})²

        Raises:
            OutOfRange: 不满足 n > s ≥ 2
        """
        cls._require(cls._is_int(n) and cls._is_int(s) and n > s >= 2, f"h 要求整数 n > s ≥ 2: n={n}, s={s}")
        tail = 1.0 - power_complement(1.0 / (n - s + 1), n + 1)
        return (1 / (s + 1) - s / (n * (s + 1)) - math.exp(-s)
                - math.e ** 2 / 4 * (s * (s + 1) * math.exp(-2 * s)) * tail ** 2)

    # ------------------------------------------------------------------
    # l_n
    # ------------------------------------------------------------------
    @classmethod
    def l(cls, n: int, x: float) -> float:
        """
        l_n(x) = ((1+x)/x)·(1 - (1-x/n)^n)，即 x = Kq 时的 r_D/r_C

        Raises:
            OutOfRange: 不满足 n ≥ 3 或 x ∉ (0, n]
        """
        cls._require(cls._is_int(n) and n >= 3, f"l 要求整数 n ≥ 3: n={n}")
        cls._require(0 < x <= n, f"l 要求 0 < x ≤ n: x={x}, n={n}")
        return (1 + x) / x * (1 - power_complement(x / n, n))

    @staticmethod
    def l_array(n, x) -> np.ndarray:
        n, x = np.broadcast_arrays(np.asarray(n, dtype=float), np.asarray(x, dtype=float))
        return (1 + x) / x * (1 - power_complement_array(x / n, n))

    @classmethod
    def max_l(cls, n: int, coarse_step: float = 1e-4, fine_step: float = 1e-8) -> Tuple[float, float]:
        """
        l_n 在 (0, n] 上的最大值

        先在步长 coarse_step 的网格上取最大点，再在其邻域内以 fine_step 细化。

        Returns:
            Tuple[float, float]: (最大值点 x, 最大值)
        """
        cls._require(cls._is_int(n) and n >= 3, f"l 要求整数 n ≥ 3: n={n}")
        grid = np.arange(1, int(round(n / coarse_step)) + 1) * coarse_step
        values = cls.l_array(n, grid)
        center = grid[int(np.argmax(values))]
        lo, hi = max(center - coarse_step, fine_step), min(center + coarse_step, n)
        fine = np.linspace(lo, hi, int(round((hi - lo) / fine_step)) + 1)
        fine_values = cls.l_array(n, fine)
        best = int(np.argmax(fine_values))
        return float(fine[best]), float(fine_values[best])

    # ------------------------------------------------------------------
    # B1 / B2
    # ------------------------------------------------------------------
    @classmethod
    def _check_bound_args(cls, users: int, theta: float) -> None:
        cls._require(cls._is_int(users) and users >= 2, f"要求整数 K ≥ 2: K={users}")
        cls._require(0 <= theta < 1, f"要求 0 ≤ θ < 1: θ={theta}")

    @classmethod
    def bound_B1(cls, users: int, theta: float) -> float:
        """B1(K,θ) = (2/K)·(1 + (K-2)/(1+θ))"""
        cls._check_bound_args(users, theta)
        return 2 / users * (1 + (users - 2) / (1 + theta))

    @classmethod
    def bound_B2(cls, users: int, theta: float) -> float:
        """B2(K,θ) = (2/K)·Σ_{i=0}^{K-1} ((K-1+θ)/K)^i"""
        cls._check_bound_args(users, theta)
        ratio = (users - 1 + theta) / users
        return 2 / users * sum(ratio ** i for i in range(users))

    @staticmethod
    def bound_B1_array(users, theta) -> np.ndarray:
        K, theta = np.broadcast_arrays(np.asarray(users, dtype=float), np.asarray(theta, dtype=float))
        return 2 / K * (1 + (K - 2) / (1 + theta))

    @staticmethod
    def bound_B2_array(users, theta) -> np.ndarray:
        """几何级数求和：(2/K)·(1 - r^K)/(1 - r)，r = (K-1+θ)/K < 1"""
        K, theta = np.broadcast_arrays(np.asarray(users, dtype=float), np.asarray(theta, dtype=float))
        ratio = (K - 1 + theta) / K
        return 2 / K * (1 - power_complement_array(1 - ratio, K)) / (1 - ratio)

    # ------------------------------------------------------------------
    # 参考数值
    # ------------------------------------------------------------------
    @classmethod
    def evaluate(cls, name: str, arguments: Tuple[float, ...]) -> float:
        functions = {"f": cls.f, "g": cls.g, "h": cls.h, "l": cls.l, "B1": cls.bound_B1, "B2": cls.bound_B2}
        if name not in functions:
            raise OutOfRange(f"未知的附录函数: {name}")
        return functions[name](*arguments)

    @classmethod
    def reference_evaluations(cls) -> List[AppendixEval]:
        """对参考数值表逐项求值，并附上 l_3 的最大值与最大值点"""
        results = [AppendixEval(name, tuple(float(a) for a in args), cls.evaluate(name, args), target, tol)
                   for name, args, target, tol in REFERENCE_VALUES]
        x_star, l_star = cls.max_l(3)
        results.append(AppendixEval("max_l", (3.0,), l_star, L3_MAX, 1e-6))
        results.append(AppendixEval("argmax_l", (3.0,), x_star, L3_ARGMAX, 1e-4))
        failed = [r for r in results if not r.matches]
        if failed:
            logger.warning(f"{len(failed)} 个附录数值与参考值不符")
        return results
