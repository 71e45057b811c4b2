"""
速率模型服务模块

提供所有解析速率的闭式求值：未编码速率、集中式角点速率与其下凸包、
去中心化速率，以及引理中使用的 r_C / r̃_C / r_D 辅助函数。
每个量同时提供标量版本与 numpy 向量化版本（供参数扫描使用）。
"""

import math
from typing import Tuple

import numpy as np

from src.models.reports import PiecewiseCase
from src.models.system_params import (DEFAULT_TOLERANCES, SNAP_TOLERANCE, MemoryGeometry, SystemParams,
                                      Tolerances)
from src.utils.exceptions import BoundViolation, DegenerateRatio, OutOfRange
from src.utils.logger import setup_logger

logger = setup_logger(__name__)

CASE_CODES = {0: PiecewiseCase.A, 1: PiecewiseCase.B, 2: PiecewiseCase.C}


def power_complement(x: float, n: float) -> float:
    """计算 (1 - x)^n；x 较小时走 exp(n·log1p(-x)) 以避免大 n 下的抵消误差"""
    if x < 0.5:
        return math.exp(n * math.log1p(-x))
    return (1.0 - x) ** n


def power_complement_array(x: np.ndarray, n: np.ndarray) -> np.ndarray:
    """power_complement 的向量化版本"""
    x = np.asarray(x, dtype=float)
    n = np.asarray(n, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        small = np.exp(n * np.log1p(-np.minimum(x, 0.5)))
        large = np.power(np.clip(1.0 - x, 0.0, None), n)
    return np.where(x < 0.5, small, large)


def _snap_array(t: np.ndarray) -> np.ndarray:
    nearest = np.round(t)
    snap = np.abs(t - nearest) < SNAP_TOLERANCE
    return np.where(snap, nearest, t)


class RateService:
    """
    速率模型服务类

    提供解析速率相关功能，包括：
    - 未编码 / 集中式 / 去中心化速率
    - 分段函数形式与角点插值形式的一致性校验
    - 引理辅助函数 r_C、r̃_C、r_D
    - 去中心化与集中式速率之比

    Attributes:
        PIECEWISE_TOLERANCE: 角点插值与分段形式之间允许的相对误差
    """

    PIECEWISE_TOLERANCE = 1e-9
    LOWER_BOUND = 1.0
    UPPER_BOUND = 1.5

    # ------------------------------------------------------------------
    # 系统速率
    # ------------------------------------------------------------------
    @staticmethod
    def uncoded_rate(params: SystemParams) -> float:
        """
        传统未编码方案的速率 K(1 - M/N)·min{1, N/K}

        Args:
            params: 系统参数

        Returns:
            float: 归一化速率
        """
        K, N = params.users, params.files
        return K * (1.0 - params.q) * min(1.0, N / K)

    @staticmethod
    def centralized_rate_corner(s: int, params: SystemParams) -> float:
        """
        集中式方案在角点 M = sN/K 处的速率 (K - s)·min{1/(1+s), N/K}

        Args:
            s: 角点编号，取值 0..K
            params: 系统参数（只使用 K 与 N）

        Returns:
            float: 归一化速率

        Raises:
            OutOfRange: s 不在 {0..K} 内
        """
        K, N = params.users, params.files
        if int(s) != s or not 0 <= s <= K:
            error_msg = f"角点编号 s 必须为 0..{K} 的整数: {s}"
            logger.error(error_msg)
            raise OutOfRange(error_msg)
        return (K - s) * min(1.0 / (1 + s), N / K)

    @staticmethod
    def piecewise_case(users: int, files: int, s: int) -> PiecewiseCase:
        """按 s 与实数 K/N、K/N - 1 的关系判定分段（不对 K/N 取整）"""
        ratio = users / files
        if s >= ratio:
            return PiecewiseCase.A
        if s >= ratio - 1:
            return PiecewiseCase.B
        return PiecewiseCase.C

    @classmethod
    def centralized_rate_piecewise(cls, params: SystemParams) -> Tuple[float, PiecewiseCase]:
        """
        按分段函数形式计算 R_C

        Returns:
            Tuple[float, PiecewiseCase]: (速率, 所处分段)
        """
        K, N, M = params.users, params.files, params.memory
        geometry = params.geometry
        s, theta = geometry.s, geometry.theta
        case = cls.piecewise_case(K, N, s)
        if case == PiecewiseCase.A:
            value = theta * (K - s + 1) / s + (1 - theta) * (K - s) / (s + 1)
        elif case == PiecewiseCase.B:
            value = theta * N * (K - s + 1) / K + (1 - theta) * (K - s) / (s + 1)
        else:
            value = N - M
        return value, case

    @classmethod
    def centralized_rate(cls, params: SystemParams) -> float:
        """
        集中式方案速率：相邻两个角点的下凸包插值

        R_C(M) = θ·R_C((s-1)N/K) + (1-θ)·R_C(sN/K)，并与分段形式交叉校验。

        Raises:
            BoundViolation: 两种形式不一致（实现错误）
        """
        geometry = params.geometry
        s, theta = geometry.s, geometry.theta
        right = cls.centralized_rate_corner(s, params)
        if theta == 0.0:
            value = right
        else:
            value = theta * cls.centralized_rate_corner(s - 1, params) + (1 - theta) * right

        piecewise, case = cls.centralized_rate_piecewise(params)
        if abs(value - piecewise) > cls.PIECEWISE_TOLERANCE * max(1.0, abs(value)):
            error_msg = f"角点插值 {value!r} 与分段形式 {piecewise!r}（分段 {case.value}）不一致"
            logger.error(error_msg)
            raise BoundViolation(error_msg, (params.users, params.files, params.memory))
        return value

    @staticmethod
    def decentralized_rate(params: SystemParams) -> float:
        """
        去中心化方案速率
        K(1 - M/N)·min{ N/(KM)·(1 - (1 - M/N)^K), N/K }
        """
        K, N, M = params.users, params.files, params.memory
        q = params.q
        coded = N / (K * M) * (1.0 - power_complement(q, K))
        return K * (1.0 - q) * min(coded, N / K)

    @staticmethod
    def centralized_branch(s: int, params: SystemParams) -> str:
        """角点 s 处 min 中生效的一项：coded（1/(1+s)）或 uncoded（N/K），相等时取 coded"""
        return "coded" if 1.0 / (1 + s) <= params.files / params.users else "uncoded"

    @staticmethod
    def decentralized_branch(params: SystemParams) -> str:
        """去中心化速率中生效的一项：coded（第一项，对应 Delivery1）或 uncoded（N/K，对应 Delivery2），相等时取 coded"""
        K, N, M = params.users, params.files, params.memory
        coded = N / (K * M) * (1.0 - power_complement(params.q, K))
        return "coded" if coded <= N / K else "uncoded"

    @classmethod
    def gap_ratio(cls, params: SystemParams, tolerances: Tolerances = DEFAULT_TOLERANCES) -> float:
        """
        去中心化与集中式速率之比 R_D / R_C

        Args:
            params: 系统参数
            tolerances: 比值区间的松弛量取 tolerances.ratio_slack

        Raises:
            DegenerateRatio: M = N（两种速率均为 0）
            BoundViolation: 比值落在 [1, 1.5] 之外（超出松弛量）
        """
        if params.is_full_memory:
            error_msg = f"M = N 时比值无定义: {params}"
            logger.error(error_msg)
            raise DegenerateRatio(error_msg)
        ratio = cls.decentralized_rate(params) / cls.centralized_rate(params)
        if not cls.LOWER_BOUND - tolerances.ratio_slack <= ratio <= cls.UPPER_BOUND + tolerances.ratio_slack:
            error_msg = f"比值 {ratio!r} 超出 [1, 1.5]"
            logger.error(error_msg)
            raise BoundViolation(error_msg, (params.users, params.files, params.memory))
        return ratio

    @classmethod
    def _check_small_memory(cls, memory: float) -> None:
        if not 0 < memory < 1:
            error_msg = f"只有 0 < M < 1 时存在阈值: M={memory}"
            logger.error(error_msg)
            raise OutOfRange(error_msg)

    @classmethod
    def centralized_branch_threshold(cls, files: int, memory: float) -> int:
        """K > 2N/(1-M) 时 s < K/N - 1，集中式速率落入 N - M 分段"""
        cls._check_small_memory(memory)
        return math.floor(2 * files / (1 - memory)) + 1

    @classmethod
    def decentralized_branch_threshold(cls, files: int, memory: float) -> int:
        """K ≥ ln(1-M)/ln(1-M/N) 时 (1-q)^K ≤ 1-M，去中心化速率取 N/K 一项"""
        cls._check_small_memory(memory)
        return math.ceil(math.log1p(-memory) / math.log1p(-memory / files))

    @classmethod
    def large_k_threshold(cls, files: int, memory: float) -> int:
        """
        M < 1 时，两种速率同时等于 N - M 的最小用户数

        Raises:
            OutOfRange: M ≥ 1
        """
        return max(2, cls.centralized_branch_threshold(files, memory),
                   cls.decentralized_branch_threshold(files, memory))

    # ------------------------------------------------------------------
    # 引理辅助函数
    # ------------------------------------------------------------------
    @staticmethod
    def _check_fraction(q: float) -> None:
        if not 0 < q <= 1:
            error_msg = f"缓存比例 q 必须满足 0 < q ≤ 1: {q}"
            logger.error(error_msg)
            raise OutOfRange(error_msg)

    @classmethod
    def r_C(cls, q: float, users: int) -> float:
        """r_C(q, K) = K(1-q)/(1+Kq)"""
        cls._check_fraction(q)
        return users * (1.0 - q) / (1.0 + users * q)

    @staticmethod
    def _r_c_extended(q: float, users: int) -> float:
        # q = 0 处连续延拓为 K
        return users * (1.0 - q) / (1.0 + users * q)

    @classmethod
    def r_tilde_C(cls, q: float, users: int) -> float:
        """r̃_C(q, K) = θ·r_C((s-1)/K) + (1-θ)·r_C(s/K)"""
        cls._check_fraction(q)
        geometry = MemoryGeometry.from_fraction(q, users)
        s, theta = geometry.s, geometry.theta
        right = cls._r_c_extended(s / users, users)
        if theta == 0.0:
            return right
        return theta * cls._r_c_extended((s - 1) / users, users) + (1 - theta) * right

    @classmethod
    def r_D(cls, q: float, users: int) -> float:
        """r_D(q, K) = ((1-q)/q)·(1 - (1-q)^K)"""
        cls._check_fraction(q)
        return (1.0 - q) / q * (1.0 - power_complement(q, users))

    # ------------------------------------------------------------------
    # 向量化版本
    # ------------------------------------------------------------------
    @staticmethod
    def geometry_array(users, files, memory) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """返回 (t, s, θ) 数组"""
        K, N, M = np.broadcast_arrays(np.asarray(users, dtype=float),
                                      np.asarray(files, dtype=float),
                                      np.asarray(memory, dtype=float))
        t = _snap_array(K * M / N)
        s = np.ceil(t)
        return t, s, s - t

    @classmethod
    def centralized_rate_array(cls, users, files, memory) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """
        向量化的集中式速率

        Returns:
            Tuple: (R_C, 分段代码 0/1/2 对应 A/B/C, s, θ)

        Raises:
            BoundViolation: 角点插值与分段形式不一致
        """
        K, N, M = np.broadcast_arrays(np.asarray(users, dtype=float),
                                      np.asarray(files, dtype=float),
                                      np.asarray(memory, dtype=float))
        _, s, theta = cls.geometry_array(K, N, M)

        def corner(j):
            return (K - j) * np.minimum(1.0 / (1.0 + j), N / K)

        rate = theta * corner(s - 1) + (1.0 - theta) * corner(s)

        ratio_kn = K / N
        case = np.where(s >= ratio_kn, 0, np.where(s >= ratio_kn - 1, 1, 2))
        with np.errstate(divide="ignore", invalid="ignore"):
            piece_a = theta * (K - s + 1) / s + (1 - theta) * (K - s) / (s + 1)
        piece_b = theta * N * (K - s + 1) / K + (1 - theta) * (K - s) / (s + 1)
        piece_c = N - M
        piecewise = np.where(case == 0, piece_a, np.where(case == 1, piece_b, piece_c))
        mismatch = np.abs(rate - piecewise) > cls.PIECEWISE_TOLERANCE * np.maximum(1.0, np.abs(rate))
        if mismatch.any():
            idx = np.flatnonzero(mismatch.ravel())[0]
            params = (int(K.ravel()[idx]), int(N.ravel()[idx]), float(M.ravel()[idx]))
            error_msg = "角点插值与分段形式不一致"
            logger.error(f"{error_msg}: {params}")
            raise BoundViolation(error_msg, params)
        return rate, case, s.astype(np.int64), theta

    @staticmethod
    def decentralized_rate_array(users, files, memory) -> np.ndarray:
        """向量化的去中心化速率"""
        K, N, M = np.broadcast_arrays(np.asarray(users, dtype=float),
                                      np.asarray(files, dtype=float),
                                      np.asarray(memory, dtype=float))
        q = M / N
        coded = N / (K * M) * (1.0 - power_complement_array(q, K))
        return K * (1.0 - q) * np.minimum(coded, N / K)

    @staticmethod
    def r_C_array(q, users) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        K = np.asarray(users, dtype=float)
        return K * (1.0 - q) / (1.0 + K * q)

    @classmethod
    def r_tilde_C_array(cls, q, users) -> np.ndarray:
        q, K = np.broadcast_arrays(np.asarray(q, dtype=float), np.asarray(users, dtype=float))
        t = _snap_array(K * q)
        s = np.ceil(t)
        theta = s - t
        return theta * cls.r_C_array((s - 1) / K, K) + (1.0 - theta) * cls.r_C_array(s / K, K)

    @staticmethod
    def r_D_array(q, users) -> np.ndarray:
        q, K = np.broadcast_arrays(np.asarray(q, dtype=float), np.asarray(users, dtype=float))
        return (1.0 - q) / q * (1.0 - power_complement_array(q, K))
