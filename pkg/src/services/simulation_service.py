"""
仿真服务模块

对集中式与去中心化方案做逐比特仿真：生成文件库、放置、投递、全部用户解码，
把实测速率与解析速率对比。多个种子的运行相互独立，可并发执行。
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import comb
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.models.library import DemandPolicy, DemandVector, FileLibrary
from src.models.system_params import SystemParams
from src.models.transcript import DeliveryTranscript, Layer
from src.services.centralized_service import CentralizedService
from src.services.decentralized_service import DecentralizedService
from src.services.parameter_service import ParameterService
from src.services.rate_service import RateService
from src.utils.exceptions import DecodeFailure, InvalidParams
from src.utils.logger import setup_logger
from src.utils.transcript_codec import write_transcript

logger = setup_logger(__name__)

SIMULATION_COLUMNS = ("scheme", "K", "N", "M", "F", "seed", "demands",
                      "measured_rate", "analytic_rate", "rel_error", "decode_ok")
SUMMARY_COLUMNS = ("scheme", "K", "N", "M", "F", "demands", "runs",
                   "mean_measured_rate", "analytic_rate", "rel_error", "decode_ok", "within_tolerance")


@dataclass(frozen=True)
class SimulationRow:
    """一次仿真运行的结果（exhaustive 策略下为最坏请求）"""

    scheme: str
    params: SystemParams
    seed: int
    demand_policy: str
    measured_rate: float
    analytic_rate: float
    decode_ok: bool

    @property
    def rel_error(self) -> float:
        return relative_error(self.measured_rate, self.analytic_rate)

    @property
    def sort_key(self) -> Tuple:
        p = self.params
        return (self.scheme, p.users, p.files, p.memory, p.file_bits, self.seed)

    def as_row(self) -> Dict[str, object]:
        p = self.params
        return {
            "scheme": self.scheme,
            "K": p.users,
            "N": p.files,
            "M": p.memory,
            "F": p.file_bits,
            "seed": self.seed,
            "demands": self.demand_policy,
            "measured_rate": self.measured_rate,
            "analytic_rate": self.analytic_rate,
            "rel_error": self.rel_error,
            "decode_ok": self.decode_ok,
        }


@dataclass(frozen=True)
class _RunOutcome:
    transcript: DeliveryTranscript
    decode_ok: bool


def relative_error(measured: float, analytic: float) -> float:
    """相对误差；解析值为 0 时退化为绝对误差"""
    if analytic == 0:
        return abs(measured)
    return abs(measured - analytic) / analytic


class SimulationService:
    """
    仿真服务类

    提供方案仿真相关功能，包括：
    - 文件长度的整除检查与自动补零
    - 单次运行：放置、投递、全部用户解码
    - 多种子、多参数点的批量运行与汇总
    """

    # ------------------------------------------------------------------
    # 文件长度
    # ------------------------------------------------------------------
    @staticmethod
    def required_multiple(scheme: str, params: SystemParams, memory_sharing: bool = False) -> int:
        """
        集中式方案要求的文件长度倍数

        Raises:
            NonCornerMemory: 非角点且未启用存储共享
        """
        if scheme != "centralized":
            return 1
        geometry = params.geometry
        if geometry.is_corner:
            return comb(params.users, geometry.s)
        if not memory_sharing:
            CentralizedService.corner_index(params)
        return CentralizedService.sharing_multiple(params.users, geometry.s)

    @classmethod
    def padded_file_bits(cls, scheme: str, params: SystemParams, memory_sharing: bool = False) -> int:
        """补零后的文件长度 F'；需要补零时记录警告"""
        multiple = cls.required_multiple(scheme, params, memory_sharing)
        F = params.file_bits
        padded = -(-F // multiple) * multiple
        if padded != F:
            logger.warning(f"{params}: F 不是 {multiple} 的整数倍，自动补零到 {padded} 比特，"
                           f"补零比特不计入速率")
        return padded

    @staticmethod
    def analytic_rate(scheme: str, params: SystemParams) -> float:
        if scheme == "centralized":
            return RateService.centralized_rate(params)
        return RateService.decentralized_rate(params)

    # ------------------------------------------------------------------
    # 单次运行
    # ------------------------------------------------------------------
    @staticmethod
    def _matches(decoded: np.ndarray, library: FileLibrary, file_index: int) -> bool:
        expected = library.file(file_index)
        return decoded.size == expected.size and bool(np.array_equal(decoded, expected))

    @classmethod
    def _run_centralized(cls, library: FileLibrary, params: SystemParams,
                         demand_list: List[DemandVector], memory_sharing: bool) -> List[_RunOutcome]:
        outcomes = []
        K = params.users
        if params.geometry.is_corner and not memory_sharing:
            for demands in demand_list:
                run = CentralizedService.best_centralized_run(library, demands, params)
                ok = True
                for k in range(1, K + 1):
                    try:
                        decoded = CentralizedService.decode_centralized(k, run.cache, run.transcript, demands,
                                                                        run.partition)
                    except DecodeFailure as e:
                        logger.error(f"{params} {demands}: {e}")
                        ok = False
                        break
                    if not cls._matches(decoded, library, demands.demand_of(k)):
                        ok = False
                        break
                outcomes.append(_RunOutcome(run.transcript, ok))
            return outcomes

        state = CentralizedService.place_memory_shared(library, params)
        for demands in demand_list:
            transcript = CentralizedService.deliver_memory_shared(state, demands)
            ok = True
            for k in range(1, K + 1):
                try:
                    decoded = CentralizedService.decode_memory_shared(k, state, transcript, demands)
                except DecodeFailure as e:
                    logger.error(f"{params} {demands}: {e}")
                    ok = False
                    break
                if not cls._matches(decoded, library, demands.demand_of(k)):
                    ok = False
                    break
            outcomes.append(_RunOutcome(transcript, ok))
        return outcomes

    @classmethod
    def _run_decentralized(cls, library: FileLibrary, params: SystemParams, seed: int,
                           demand_list: List[DemandVector]) -> List[_RunOutcome]:
        caches = DecentralizedService.place_decentralized(library, params, seed)
        outcomes = []
        for demands in demand_list:
            transcript = DecentralizedService.deliver_best_decentralized(library, caches, demands, seed)
            try:
                decoded = DecentralizedService.decode_all(caches, transcript, demands)
                ok = all(cls._matches(decoded[k], library, demands.demand_of(k)) for k in decoded)
            except DecodeFailure as e:
                logger.error(f"{params} {demands} seed={seed}: {e}")
                ok = False
            outcomes.append(_RunOutcome(transcript, ok))
        return outcomes

    @classmethod
    def run_once(cls, scheme: str, params: SystemParams, seed: int, policy: DemandPolicy,
                 memory_sharing: bool = False, padded_bits: Optional[int] = None,
                 transcript_dir: Optional[str] = None) -> SimulationRow:
        """
        一次仿真运行

        文件库、放置与随机线性组合都由 seed 派生。exhaustive 策略枚举全部
        N^K 个请求向量并报告最坏者（相同速率取枚举序中的第一个），
        decode_ok 要求每个请求向量下全部用户都逐比特恢复。

        Args:
            scheme: centralized / decentralized
            params: 系统参数（file_bits 为原始 F）
            seed: 主种子
            policy: 请求策略
            memory_sharing: 集中式非角点时启用存储共享
            padded_bits: 补零后的 F'，缺省时现算
            transcript_dir: 若给出，把最坏请求下的传输记录写入该目录

        Returns:
            SimulationRow: 运行结果
        """
        if scheme not in ParameterService.SCHEMES:
            raise InvalidParams(f"未知的方案: {scheme}")
        F = params.file_bits
        if padded_bits is None:
            padded_bits = cls.padded_file_bits(scheme, params, memory_sharing)
        library = FileLibrary.random(params.files, padded_bits, seed)
        run_params = params.with_file_bits(padded_bits)
        demand_list = policy.vectors(params.users, params.files)

        if scheme == "centralized":
            outcomes = cls._run_centralized(library, run_params, demand_list, memory_sharing)
        else:
            outcomes = cls._run_decentralized(library, run_params, seed, demand_list)

        worst = max(range(len(outcomes)), key=lambda i: (outcomes[i].transcript.accounted_bits, -i))
        transcript = outcomes[worst].transcript
        if padded_bits != F:
            transcript.layer_scale = {layer: F / padded_bits for layer in Layer}
            transcript.file_bits = F

        if transcript_dir is not None:
            name = f"{scheme}_K{params.users}_N{params.files}_M{params.memory:g}_F{F}_seed{seed}.cctr"
            write_transcript(f"{transcript_dir}/{name}", transcript)

        return SimulationRow(
            scheme=scheme, params=params, seed=seed, demand_policy=str(policy),
            measured_rate=transcript.measured_rate, analytic_rate=cls.analytic_rate(scheme, params),
            decode_ok=all(o.decode_ok for o in outcomes),
        )

    # ------------------------------------------------------------------
    # 批量运行
    # ------------------------------------------------------------------
    @staticmethod
    def parameter_points(users: Iterable[int], files: Iterable[int], memories: Iterable[float],
                         file_bits: int) -> List[SystemParams]:
        """展开参数网格，跳过 M > N 的组合"""
        points = []
        for K in users:
            for N in files:
                for M in memories:
                    if 0 < M <= N:
                        points.append(SystemParams(K, N, M, file_bits))
                    else:
                        logger.debug(f"跳过 K={K} N={N} M={M}: 要求 0 < M ≤ N")
        if not points:
            raise InvalidParams("参数网格中没有满足 0 < M ≤ N 的组合")
        return points

    @classmethod
    def simulate(cls, scheme: str, points: Sequence[SystemParams], seeds: Sequence[int],
                 policy: DemandPolicy, memory_sharing: bool = False, threads: Optional[int] = None,
                 transcript_dir: Optional[str] = None) -> List[SimulationRow]:
        """
        对每个参数点与每个种子运行一次仿真

        Returns:
            List[SimulationRow]: 按 (方案, K, N, M, F, 种子) 排序的结果
        """
        threads = threads or ParameterService.thread_count()
        tasks = []
        for params in points:
            padded = cls.padded_file_bits(scheme, params, memory_sharing)
            tasks.extend((params, seed, padded) for seed in seeds)
        logger.info(f"开始{scheme}仿真: {len(points)} 个参数点 × {len(seeds)} 个种子，策略 {policy}，并发 {threads}")

        def work(task):
            params, seed, padded = task
            return cls.run_once(scheme, params, seed, policy, memory_sharing, padded, transcript_dir)

        if threads == 1:
            rows = [work(t) for t in tasks]
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                rows = list(pool.map(work, tasks))

        failed = [r for r in rows if not r.decode_ok]
        if failed:
            logger.error(f"{len(failed)} 次运行解码失败，例如 {failed[0].params} seed={failed[0].seed}")
        logger.info(f"仿真完成，共 {len(rows)} 次运行")
        return sorted(rows, key=lambda r: r.sort_key)

    @staticmethod
    def summarize(rows: Sequence[SimulationRow], tolerance: float) -> List[Dict[str, object]]:
        """
        按参数点汇总：多种子的平均实测速率与解析速率的相对误差

        Args:
            rows: simulate 的结果
            tolerance: 平均速率允许的相对误差

        Returns:
            List[Dict[str, object]]: 每个参数点一行
        """
        groups: Dict[Tuple, List[SimulationRow]] = {}
        for row in rows:
            groups.setdefault(row.sort_key[:5], []).append(row)
        summary = []
        for key in sorted(groups):
            group = groups[key]
            first = group[0]
            mean = sum(r.measured_rate for r in group) / len(group)
            error = relative_error(mean, first.analytic_rate)
            summary.append({
                "scheme": first.scheme,
                "K": first.params.users,
                "N": first.params.files,
                "M": first.params.memory,
                "F": first.params.file_bits,
                "demands": first.demand_policy,
                "runs": len(group),
                "mean_measured_rate": mean,
                "analytic_rate": first.analytic_rate,
                "rel_error": error,
                "decode_ok": all(r.decode_ok for r in group),
                "within_tolerance": error <= tolerance,
            })
        return summary
