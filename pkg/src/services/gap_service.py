"""
速率比分析服务模块

对去中心化与集中式速率之比做数值验证：全参数网格扫描（含分段上界证书）、
引理网格、附录函数网格、上下界可达性、K → ∞ 的极限以及速率曲线形状检查。
所有检查失败时抛出 BoundViolation，并携带出错的参数点。
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.models.reports import GapReport, GapSummary, GapSweep, LimitPoint, PiecewiseCase
from src.models.system_params import DEFAULT_TOLERANCES, SystemParams, Tolerances
from src.services.appendix_service import AppendixService
from src.services.parameter_service import ParameterService
from src.services.rate_service import CASE_CODES, RateService
from src.utils.exceptions import BoundViolation, OutOfRange
from src.utils.logger import setup_logger

logger = setup_logger(__name__)


class GapService:
    """
    速率比分析服务类

    提供速率比数值验证相关功能，包括：
    - 全网格扫描与逐点分段证书
    - 引理与附录函数的网格检查
    - 上下界可达性与极限检查

    Attributes:
        TIGHT_TOLERANCE: 判定比值达到 1.5 的容差
    """

    TIGHT_TOLERANCE = 1e-9
    UPPER = 1.5

    DEFAULT_USERS = tuple(range(2, 201))
    DEFAULT_FILES = tuple(range(1, 51))
    DEFAULT_MEMORY_POINTS = 99

    # ------------------------------------------------------------------
    # 网格扫描
    # ------------------------------------------------------------------
    @classmethod
    def memory_grid(cls, files: int, points: int = DEFAULT_MEMORY_POINTS) -> np.ndarray:
        """(0, N) 内的等距内点 M = N·j/(points+1)"""
        j = np.arange(1, points + 1, dtype=float)
        return files * j / (points + 1)

    @staticmethod
    def k2_ratio_closed_form(files: int, theta: float, s: int) -> float:
        """
        K = 2 时速率比的闭式

        N = 1 时恒为 1；否则 s = 1 时为 (1+θ)(3+θ)/(6θ+2)，s = 2 时为 (2+θ)/2。
        """
        if files == 1:
            return 1.0
        if s == 1:
            return (1 + theta) * (3 + theta) / (6 * theta + 2)
        if s == 2:
            return (2 + theta) / 2
        raise OutOfRange(f"K = 2 时 s 只能为 1 或 2: s={s}")

    @classmethod
    def _violation(cls, mask: np.ndarray, users: int, N: np.ndarray, M: np.ndarray, detail: str):
        idx = int(np.flatnonzero(mask)[0])
        params = (users, int(N[idx]), float(M[idx]))
        logger.error(f"{detail} @ {params}")
        raise BoundViolation(detail, params)

    @classmethod
    def _points_for(cls, files: Sequence[int], memory_points: int,
                    memory_values: Optional[Sequence[float]]) -> Tuple[np.ndarray, np.ndarray]:
        n_parts, m_parts = [], []
        for n in files:
            if memory_values is None:
                m = cls.memory_grid(n, memory_points)
            else:
                m = np.array([v for v in memory_values if 0 < v < n], dtype=float)
            n_parts.append(np.full(m.size, n, dtype=float))
            m_parts.append(m)
        if not n_parts:
            return np.zeros(0), np.zeros(0)
        return np.concatenate(n_parts), np.concatenate(m_parts)

    @classmethod
    def _sweep_users(cls, users: int, N: np.ndarray, M: np.ndarray,
                     collect: bool, tolerances: Tolerances) -> Tuple[GapSummary, List[GapReport]]:
        summary = GapSummary()
        if N.size == 0:
            return summary, []
        K = float(users)
        rate_c, case, s, theta = RateService.centralized_rate_array(K, N, M)
        rate_d = RateService.decentralized_rate_array(K, N, M)
        ratio = rate_d / rate_c

        lower = ratio < 1 - tolerances.ratio_slack
        if lower.any():
            cls._violation(lower, users, N, M, "速率比低于 1")
        upper = ratio > cls.UPPER + tolerances.ratio_slack
        if upper.any():
            cls._violation(upper, users, N, M, "速率比高于 1.5")

        tight_lower = case == 2
        not_one = tight_lower & (np.abs(ratio - 1) > tolerances.ratio_slack)
        if not_one.any():
            cls._violation(not_one, users, N, M, "分段 C 中速率比不等于 1")

        above = rate_c > N - M + tolerances.ratio_slack * np.maximum(1.0, N - M)
        if above.any():
            cls._violation(above, users, N, M, "R_C 超过 N - M")

        # 分段上界证书
        certified = tight_lower.copy()
        if users >= 3:
            in_a = case == 0
            bound = AppendixService.l_array(K, K * M / N)
            bad = in_a & (ratio > bound + tolerances.ratio_slack)
            if bad.any():
                cls._violation(bad, users, N, M, "分段 A 中速率比超过 l_K(Kq)")
            certified |= in_a
        in_b1 = (case == 1) & (s == 1)
        if in_b1.any():
            bound = np.minimum(AppendixService.bound_B1_array(K, theta), AppendixService.bound_B2_array(K, theta))
            bad = in_b1 & (ratio > bound + tolerances.ratio_slack)
            if bad.any():
                cls._violation(bad, users, N, M, "分段 B (s=1) 中速率比超过 min(B1, B2)")
            certified |= in_b1
        in_b2 = (case == 1) & (s >= 2)
        if in_b2.any():
            bad = in_b2 & (ratio > N / K * (s + 1) + tolerances.ratio_slack)
            if bad.any():
                cls._violation(bad, users, N, M, "分段 B (s≥2) 中速率比超过 (N/K)(s+1)")
            certified |= in_b2

        if users == 2:
            closed = np.where(N == 1, 1.0,
                              np.where(s == 1, (1 + theta) * (3 + theta) / (6 * theta + 2), (2 + theta) / 2))
            bad = np.abs(ratio - closed) > tolerances.formula_equality * np.maximum(1.0, closed)
            if bad.any():
                cls._violation(bad, users, N, M, "K = 2 速率比与闭式不符")

        tight_upper = np.abs(ratio - cls.UPPER) <= cls.TIGHT_TOLERANCE

        imin, imax = int(np.argmin(ratio)), int(np.argmax(ratio))
        summary.points = int(ratio.size)
        summary.min_ratio, summary.argmin = float(ratio[imin]), (users, int(N[imin]), float(M[imin]))
        summary.max_ratio, summary.argmax = float(ratio[imax]), (users, int(N[imax]), float(M[imax]))
        summary.tight_upper_points = [(users, int(N[i]), float(M[i])) for i in np.flatnonzero(tight_upper)]
        summary.tight_lower_count = int(tight_lower.sum())
        for code, label in CASE_CODES.items():
            summary.case_counts[label.value] = int((case == code).sum())
        summary.certificates_checked = int(certified.sum())

        reports = []
        if collect:
            for i in range(ratio.size):
                reports.append(GapReport(
                    users=users, files=int(N[i]), memory=float(M[i]),
                    centralized_rate=float(rate_c[i]), decentralized_rate=float(rate_d[i]),
                    ratio=float(ratio[i]), case=CASE_CODES[int(case[i])], s=int(s[i]),
                    theta=float(theta[i]), tight_lower=bool(tight_lower[i]), tight_upper=bool(tight_upper[i]),
                ))
        return summary, reports

    @classmethod
    def sweep_gap(cls, users: Iterable[int] = DEFAULT_USERS, files: Iterable[int] = DEFAULT_FILES,
                  memory_points: int = DEFAULT_MEMORY_POINTS, memory_values: Optional[Sequence[float]] = None,
                  collect_reports: bool = False, threads: Optional[int] = None,
                  tolerances: Tolerances = DEFAULT_TOLERANCES) -> GapSweep:
        """
        在 (K, N, M) 网格上计算并验证速率比

        M 缺省取每个 N 的 memory_points 个内点；给出 memory_values 时只取其中满足
        0 < M < N 的值（M = N 处比值无定义）。每个 K 独立计算，可并发执行，
        结果按 (K, N, M) 排序后合并，与执行顺序无关。

        Args:
            users: K 的取值
            files: N 的取值
            memory_points: 每个 N 的 M 内点个数
            memory_values: 显式给出的 M 取值
            collect_reports: 是否返回逐点报告
            threads: 并发数，缺省读取 CCLAB_THREADS
            tolerances: 比值松弛量与公式相等容差

        Returns:
            GapSweep: 逐点报告（可选）与汇总

        Raises:
            BoundViolation: 任一检查失败
        """
        users = sorted(set(int(k) for k in users))
        files = sorted(set(int(n) for n in files))
        if any(k < 2 for k in users) or any(n < 1 for n in files):
            raise OutOfRange(f"要求 K ≥ 2 且 N ≥ 1: K={users[:3]}..., N={files[:3]}...")
        threads = threads or ParameterService.thread_count()
        N, M = cls._points_for(files, memory_points, memory_values)
        logger.info(f"开始速率比扫描: {len(users)} 个 K × {N.size} 个 (N, M) 点，并发 {threads}")

        def work(k: int):
            return cls._sweep_users(k, N, M, collect_reports, tolerances)

        if threads == 1:
            parts = [work(k) for k in users]
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                parts = list(pool.map(work, users))

        summary = GapSummary()
        reports: List[GapReport] = []
        for part_summary, part_reports in parts:
            summary.merge(part_summary)
            reports.extend(part_reports)
        logger.info(summary.describe())
        return GapSweep(reports=reports, summary=summary)

    # ------------------------------------------------------------------
    # 可达性
    # ------------------------------------------------------------------
    @classmethod
    def check_tight_upper(cls, files: Iterable[int] = range(2, 51),
                          tolerances: Tolerances = DEFAULT_TOLERANCES) -> List[Tuple[int, int, float]]:
        """K = 2、M = N/2（N ≥ 2）时速率比恰为 1.5"""
        points = []
        for n in files:
            params = SystemParams(2, n, n / 2)
            ratio = RateService.gap_ratio(params, tolerances)
            if abs(ratio - cls.UPPER) > tolerances.formula_equality:
                raise BoundViolation(f"速率比 {ratio!r} 未达到 1.5", (2, n, n / 2))
            points.append((2, n, n / 2))
        return points

    @classmethod
    def check_tight_lower(cls, params: SystemParams, tolerances: Tolerances = DEFAULT_TOLERANCES) -> float:
        """⌈KM/N⌉ < K/N - 1 时速率比恰为 1"""
        geometry = params.geometry
        if RateService.piecewise_case(params.users, params.files, geometry.s) != PiecewiseCase.C:
            raise OutOfRange(f"参数点不在分段 C 中: {params}")
        ratio = RateService.gap_ratio(params, tolerances)
        if abs(ratio - 1) > tolerances.ratio_slack:
            raise BoundViolation(f"分段 C 中速率比 {ratio!r} 不等于 1", (params.users, params.files, params.memory))
        return ratio

    # ------------------------------------------------------------------
    # 极限
    # ------------------------------------------------------------------
    @staticmethod
    def limit_users(k_max: int) -> List[int]:
        """2 到 k_max 的 1-2-5 序列（含端点）"""
        values = {2, k_max}
        scale = 1
        while scale <= k_max:
            for m in (1, 2, 5):
                if 2 <= m * scale <= k_max:
                    values.add(m * scale)
            scale *= 10
        return sorted(values)

    @classmethod
    def limit_check(cls, files: int, memory: float, users: Sequence[int],
                    epsilon: Optional[float] = None,
                    tolerances: Tolerances = DEFAULT_TOLERANCES) -> List[LimitPoint]:
        """
        沿 K 计算速率比并验证其趋于 1

        M < 1 时另外验证：K 超过两个分支切换阈值后 R_D 与 R_C 在公式相等容差内一致，
        且两者都处于 N - M 分支。

        Args:
            files: N
            memory: M（0 < M < N）
            users: 升序的 K 取值
            epsilon: 末项速率比与 1 的允许距离
            tolerances: 容差

        Returns:
            List[LimitPoint]: 每个 K 的速率比与 r_D/r_C

        Raises:
            BoundViolation: 末项未落入 ε 邻域，或 M < 1 时阈值之后不相等
        """
        if not 0 < memory < files:
            raise OutOfRange(f"极限检查要求 0 < M < N: M={memory}, N={files}")
        users = list(users)
        if users != sorted(users):
            raise OutOfRange("K 序列必须升序")
        q = memory / files
        points = []
        for k in users:
            ratio = RateService.gap_ratio(SystemParams(k, files, memory), tolerances)
            lemma = RateService.r_D(q, k) / RateService.r_C(q, k)
            points.append(LimitPoint(users=k, ratio=ratio, lemma_ratio=lemma))

        if epsilon is not None and points and abs(points[-1].ratio - 1) > epsilon:
            raise BoundViolation(f"K={points[-1].users} 时速率比 {points[-1].ratio!r} 与 1 的距离超过 {epsilon}",
                                 (files, memory))

        if memory < 1:
            threshold = RateService.large_k_threshold(files, memory)
            for k in sorted({threshold, threshold + 1, *[k for k in users if k >= threshold]}):
                params = SystemParams(k, files, memory)
                central, case = RateService.centralized_rate_piecewise(params)
                decentral = RateService.decentralized_rate(params)
                if case != PiecewiseCase.C or RateService.decentralized_branch(params) != "uncoded":
                    raise BoundViolation(f"K={k} 超过阈值 {threshold} 但未同时处于 N - M 分支", (k, files, memory))
                if abs(decentral - central) > tolerances.formula_equality * max(1.0, central):
                    raise BoundViolation(f"K={k} 超过阈值 {threshold} 但 R_D ≠ R_C", (k, files, memory))
            logger.info(f"N={files} M={memory}: K ≥ {threshold} 时 R_D = R_C = N - M")
        return points

    # ------------------------------------------------------------------
    # 引理与附录网格
    # ------------------------------------------------------------------
    @classmethod
    def check_lemma_grid(cls, k_max: int = 200, q_points: int = 100,
                         tolerances: Tolerances = DEFAULT_TOLERANCES) -> int:
        """
        r_C ≤ r̃_C ≤ r_D 在 q = j/q_points、K = 1..k_max 上成立；
        K ≥ 3 且 q < 1 时 r_D/r_C < 1.5

        Returns:
            int: 检查的网格点数
        """
        q = np.arange(1, q_points + 1, dtype=float) / q_points
        K = np.arange(1, k_max + 1, dtype=float)[:, None]
        r_c = RateService.r_C_array(q, K)
        r_tilde = RateService.r_tilde_C_array(q, K)
        r_d = RateService.r_D_array(q, K)

        def fail(mask, detail):
            i, j = np.argwhere(mask)[0]
            raise BoundViolation(detail, (int(K[i, 0]), float(q[j])))

        if (r_c > r_tilde + tolerances.ratio_slack).any():
            fail(r_c > r_tilde + tolerances.ratio_slack, "r_C > r̃_C")
        if (r_tilde > r_d + tolerances.ratio_slack).any():
            fail(r_tilde > r_d + tolerances.ratio_slack, "r̃_C > r_D")
        interior = (K >= 3) & (q < 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = r_d / r_c
        bad = interior & ~(ratio < cls.UPPER)
        if bad.any():
            fail(bad, "K ≥ 3 时 r_D/r_C ≥ 1.5")
        return int(q.size * k_max)

    @classmethod
    def check_l_identity(cls, samples: int = 1000, seed: int = 0,
                         tolerances: Tolerances = DEFAULT_TOLERANCES) -> float:
        """随机抽样验证 r_D(q,K)/r_C(q,K) = l_K(Kq)，返回最大偏差"""
        rng = np.random.default_rng(seed)
        K = rng.integers(3, 201, size=samples).astype(float)
        q = rng.uniform(1e-3, 1 - 1e-3, size=samples)
        lhs = RateService.r_D_array(q, K) / RateService.r_C_array(q, K)
        rhs = AppendixService.l_array(K, K * q)
        deviation = float(np.max(np.abs(lhs - rhs)))
        if deviation > tolerances.formula_equality:
            i = int(np.argmax(np.abs(lhs - rhs)))
            raise BoundViolation(f"r_D/r_C 与 l_K(Kq) 偏差 {deviation:.3e}", (int(K[i]), float(q[i])))
        return deviation

    @staticmethod
    def theta_grid(step: float = 1e-3) -> np.ndarray:
        """{0, step, ..., 1 - step}"""
        return np.arange(int(round(1 / step)), dtype=float) * step

    @classmethod
    def check_f_grid(cls, n_max: int = 50, theta_step: float = 1e-3,
                     tolerances: Tolerances = DEFAULT_TOLERANCES) -> float:
        """f(θ,n,s) ≥ -1e-12，1 ≤ s ≤ n ≤ n_max；返回网格最小值"""
        theta = cls.theta_grid(theta_step)
        pairs = np.array([(n, s) for n in range(1, n_max + 1) for s in range(1, n + 1)], dtype=float)
        values = AppendixService.f_array(theta[None, :], pairs[:, :1], pairs[:, 1:])
        minimum = float(values.min())
        if minimum < -tolerances.formula_equality:
            i, j = np.unravel_index(int(np.argmin(values)), values.shape)
            raise BoundViolation(f"f 取到负值 {minimum:.3e}", (float(theta[j]), int(pairs[i, 0]), int(pairs[i, 1])))
        return minimum

    @classmethod
    def check_fgh_chain(cls, n_max: int = 30, theta_step: float = 1e-3,
                        tolerances: Tolerances = DEFAULT_TOLERANCES) -> int:
        """min_θ f(θ,n,s) ≥ g(n,s) ≥ h(n,s)，2 ≤ s < n ≤ n_max；返回检查的 (n,s) 对数"""
        theta = cls.theta_grid(theta_step)
        checked = 0
        for n in range(3, n_max + 1):
            for s in range(2, n):
                f_min = float(AppendixService.f_array(theta, n, s).min())
                g = AppendixService.g(n, s)
                h = AppendixService.h(n, s)
                if f_min < g - tolerances.formula_equality:
                    raise BoundViolation(f"min f = {f_min!r} < g = {g!r}", (n, s))
                if g < h - tolerances.formula_equality:
                    raise BoundViolation(f"g = {g!r} < h = {h!r}", (n, s))
                checked += 1
        return checked

    @classmethod
    def check_l_grid(cls, n_values: Iterable[int] = range(3, 101), step: float = 1e-3) -> float:
        """l_n(x) < 1.5 在 x ∈ (0, n] 的步长 step 网格上成立；返回网格最大值"""
        maximum = 0.0
        for n in n_values:
            x = np.arange(1, int(round(n / step)) + 1, dtype=float) * step
            values = AppendixService.l_array(n, x)
            peak = float(values.max())
            if not peak < cls.UPPER:
                raise BoundViolation(f"l_{n} 达到 {peak!r}", (n, float(x[int(np.argmax(values))])))
            maximum = max(maximum, peak)
        return maximum

    @classmethod
    def check_bound_monotonicity(cls, k_max: int = 50, theta_step: float = 1e-3,
                                 tolerances: Tolerances = DEFAULT_TOLERANCES) -> None:
        """B1 随 K 增、随 θ 减；B2 随 K 减、随 θ 增"""
        theta = cls.theta_grid(theta_step)[None, :]
        K = np.arange(2, k_max + 1, dtype=float)[:, None]
        b1 = AppendixService.bound_B1_array(K, theta)
        b2 = AppendixService.bound_B2_array(K, theta)
        slack = tolerances.formula_equality
        checks = [
            (np.diff(b1, axis=0) < -slack, "B1 随 K 不增"),
            (np.diff(b1, axis=1) > slack, "B1 随 θ 不减"),
            (np.diff(b2, axis=0) > slack, "B2 随 K 不减"),
            (np.diff(b2, axis=1) < -slack, "B2 随 θ 不增"),
        ]
        for mask, detail in checks:
            if mask.any():
                i, j = np.argwhere(mask)[0]
                raise BoundViolation(detail, (int(K[i, 0]), float(theta[0, j])))

    # ------------------------------------------------------------------
    # 速率曲线形状
    # ------------------------------------------------------------------
    @classmethod
    def check_rate_shapes(cls, users: Iterable[int], files: Iterable[int], points: int = 1000,
                          tolerances: Tolerances = DEFAULT_TOLERANCES) -> int:
        """
        在稠密 M 网格上检查速率曲线形状

        - R_C、R_D 关于 M 不增
        - R_C 在分段 A（两个角点都取编码项）内为凸
        - R_C ≤ R_U，R_D ≤ R_U
        - 角点处 R_C 与角点公式相等

        Returns:
            int: 检查的 (K, N) 组合数
        """
        checked = 0
        for k in users:
            for n in files:
                M = np.linspace(0, n, points + 1)[1:]
                rate_c, case, s, _ = RateService.centralized_rate_array(k, n, M)
                rate_d = RateService.decentralized_rate_array(k, n, M)
                rate_u = k * (1 - M / n) * min(1.0, n / k)
                where = (k, n)
                if (np.diff(rate_c) > tolerances.ratio_slack).any():
                    raise BoundViolation("R_C 关于 M 递增", where)
                if (np.diff(rate_d) > tolerances.ratio_slack).any():
                    raise BoundViolation("R_D 关于 M 递增", where)
                coded = case == 0
                triple = coded[:-2] & coded[1:-1] & coded[2:]
                second = rate_c[:-2] - 2 * rate_c[1:-1] + rate_c[2:]
                if (triple & (second < -tolerances.ratio_slack)).any():
                    raise BoundViolation("R_C 在分段 A 内非凸", where)
                if (rate_c > rate_u + tolerances.ratio_slack).any():
                    raise BoundViolation("R_C 超过未编码速率", where)
                if (rate_d > rate_u + tolerances.ratio_slack).any():
                    raise BoundViolation("R_D 超过未编码速率", where)
                params = SystemParams(k, n, n)
                for corner in range(1, k + 1):
                    value = RateService.centralized_rate(params.with_memory(corner * n / k))
                    if value != RateService.centralized_rate_corner(corner, params):
                        raise BoundViolation(f"角点 s={corner} 处插值与角点公式不等", where)
                checked += 1
        return checked
