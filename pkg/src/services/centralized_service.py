"""
集中式编码缓存服务模块

实现集中式方案的比特级仿真：子文件划分与放置、子集异或投递、
未编码前缀分支、非角点存储下的存储共享，以及逐用户解码。
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.models.library import DemandVector, FileLibrary
from src.models.system_params import SystemParams, snap_integer
from src.models.transcript import DeliveryTranscript, Layer, Segment, SegmentKind
from src.utils.bits import BIT_DTYPE, empty_bits
from src.utils.combinatorics import check_mask_width, comb, lcm, mask_members, subsets_of_size
from src.utils.exceptions import (BoundViolation, DecodeFailure, IndivisibleFile,
                                  InvalidParams, NonCornerMemory)
from src.utils.logger import setup_logger

logger = setup_logger(__name__)

SubfileKey = Tuple[int, int]   # (文件编号, 子集掩码)


@dataclass(frozen=True, eq=False)
class SubfilePartition:
    """
    子文件划分 W_{n,T}

    每个文件按 colex 顺序切成 C(K,t) 个等长的连续子文件，
    blocks[n-1][i] 即 W_{n,subsets[i]}。

    Attributes:
        users: 用户数 K
        t: 子集大小
        subsets: 大小为 t 的全部子集（colex 顺序）
        blocks: 每个文件一个形状 (C(K,t), F/C(K,t)) 的视图
    """

    users: int
    t: int
    subsets: Tuple[int, ...]
    blocks: Tuple[np.ndarray, ...]
    _position: Dict[int, int] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_position", {mask: i for i, mask in enumerate(self.subsets)})

    @property
    def subfile_bits(self) -> int:
        return int(self.blocks[0].shape[1])

    @property
    def file_bits(self) -> int:
        return self.subfile_bits * len(self.subsets)

    def subfile(self, file_index: int, mask: int) -> np.ndarray:
        return self.blocks[file_index - 1][self._position[mask]]


@dataclass(frozen=True, eq=False)
class CentralCacheState:
    """
    集中式缓存内容 Z_k

    Attributes:
        users: 用户数 K
        files: 文件数 N
        branch: "coded"（子文件放置）或 "uncoded"（前缀放置）
        t: 编码分支的子集大小
        subfiles: 编码分支中每个用户缓存的子文件
        prefixes: 未编码分支中所有用户共同缓存的各文件前缀
    """

    users: int
    files: int
    branch: str
    t: int = 0
    subfiles: Dict[int, Dict[SubfileKey, np.ndarray]] = field(default_factory=dict)
    prefixes: Tuple[np.ndarray, ...] = ()

    @property
    def prefix_bits(self) -> int:
        return int(self.prefixes[0].size) if self.prefixes else 0

    def cached_bits(self, user: int) -> int:
        """用户 user 缓存的比特总数"""
        if self.branch == "uncoded":
            return self.prefix_bits * self.files
        return sum(bits.size for bits in self.subfiles.get(user, {}).values())


@dataclass(frozen=True, eq=False)
class CentralizedRun:
    """一次角点投递：选中分支的传输记录及解码所需的放置"""
    transcript: DeliveryTranscript
    cache: CentralCacheState
    partition: Optional[SubfilePartition]


@dataclass(frozen=True, eq=False)
class LayerPlacement:
    """
    存储共享中的一层：子文件库在角点 corner 上的两种放置

    Attributes:
        layer: PREFIX / SUFFIX（角点时为 WHOLE）
        corner: 该层使用的角点 j（t = j）
        library: 该层的子文件库
        partition / coded_cache: 编码分支放置
        uncoded_cache: 未编码分支放置
    """

    layer: Layer
    corner: int
    library: FileLibrary
    partition: SubfilePartition
    coded_cache: CentralCacheState
    uncoded_cache: CentralCacheState


@dataclass(frozen=True, eq=False)
class MemorySharedState:
    """
    存储共享的组合状态

    Attributes:
        params: 系统参数（file_bits 为仿真文件长度）
        prefix_bits: 前缀子库的文件长度
        layers: 非空的分层（角点时只有 WHOLE 一层）
    """

    params: SystemParams
    prefix_bits: int
    layers: Tuple[LayerPlacement, ...]

    def cached_bits(self, user: int) -> int:
        """各层取两种放置中较大者之和，作为任何分支组合下的缓存用量上界"""
        return sum(max(layer.coded_cache.cached_bits(user), layer.uncoded_cache.cached_bits(user))
                   for layer in self.layers)


class CentralizedService:
    """
    集中式方案服务类

    提供集中式方案相关功能，包括：
    - 角点放置与子集异或投递
    - 未编码前缀分支与两分支择优
    - 非角点存储下的存储共享
    - 逐用户解码与缓存预算检查
    """

    # ------------------------------------------------------------------
    # 放置
    # ------------------------------------------------------------------
    @staticmethod
    def corner_index(params: SystemParams) -> int:
        """
        返回角点编号 t = KM/N

        Raises:
            NonCornerMemory: KM/N 不是整数
        """
        t = snap_integer(params.users * params.memory / params.files)
        if t != int(t):
            error_msg = f"KM/N = {t!r} 不是整数，请使用存储共享: {params}"
            logger.error(error_msg)
            raise NonCornerMemory(error_msg)
        return int(t)

    @staticmethod
    def _check_library(library: FileLibrary, params: SystemParams) -> None:
        check_mask_width(params.users)
        if library.num_files != params.files:
            raise InvalidParams(f"文件库包含 {library.num_files} 个文件，参数要求 N={params.files}")

    @staticmethod
    def _place_corner(library: FileLibrary, users: int, t: int) -> Tuple[SubfilePartition, CentralCacheState]:
        count = comb(users, t)
        F = library.file_bits
        if F % count:
            error_msg = f"文件长度 F={F} 不能被 C({users},{t})={count} 整除"
            logger.error(error_msg)
            raise IndivisibleFile(error_msg)

        subsets = subsets_of_size(users, t)
        blocks = tuple(f.reshape(count, F // count) for f in library.files)
        partition = SubfilePartition(users=users, t=t, subsets=subsets, blocks=blocks)

        subfiles: Dict[int, Dict[SubfileKey, np.ndarray]] = {k: {} for k in range(1, users + 1)}
        for pos, mask in enumerate(subsets):
            for k in mask_members(mask):
                for n, block in enumerate(blocks, start=1):
                    subfiles[k][(n, mask)] = block[pos]
        cache = CentralCacheState(users=users, files=library.num_files, branch="coded", t=t, subfiles=subfiles)
        return partition, cache

    @classmethod
    def place_centralized(cls, library: FileLibrary,
                          params: SystemParams) -> Tuple[SubfilePartition, CentralCacheState]:
        """
        角点放置：每个文件切成 C(K,t) 个子文件，用户 k 缓存所有 T ∋ k 的 W_{n,T}

        Args:
            library: 文件库
            params: 系统参数，KM/N 必须为整数

        Returns:
            Tuple[SubfilePartition, CentralCacheState]: (子文件划分, 缓存状态)

        Raises:
            NonCornerMemory: KM/N 不是整数
            IndivisibleFile: C(K,t) 不整除 F
        """
        cls._check_library(library, params)
        t = cls.corner_index(params)
        logger.debug(f"集中式放置: K={params.users} N={params.files} t={t} F={library.file_bits}")
        partition, cache = cls._place_corner(library, params.users, t)
        cls.check_cache_budget(cache, params.memory * library.file_bits)
        return partition, cache

    @staticmethod
    def _place_prefix(library: FileLibrary, users: int, prefix_bits: int) -> CentralCacheState:
        prefixes = tuple(f[:prefix_bits] for f in library.files)
        return CentralCacheState(users=users, files=library.num_files, branch="uncoded", prefixes=prefixes)

    @classmethod
    def place_uncoded(cls, library: FileLibrary, params: SystemParams) -> CentralCacheState:
        """未编码分支放置：每个用户缓存每个文件的前 ⌊MF/N⌋ 比特"""
        cls._check_library(library, params)
        prefix_bits = params.with_file_bits(library.file_bits).cached_bits_per_file()
        logger.debug(f"未编码放置: 每个文件缓存前 {prefix_bits} 比特")
        return cls._place_prefix(library, params.users, prefix_bits)

    # ------------------------------------------------------------------
    # 投递
    # ------------------------------------------------------------------
    @staticmethod
    def deliver_centralized(partition: SubfilePartition, demands: DemandVector, t: Optional[int] = None,
                            layer: Layer = Layer.WHOLE) -> DeliveryTranscript:
        """
        子集异或投递：对每个 |S| = t+1 的子集发送 ⊕_{k∈S} W_{d_k, S∖{k}}

        Args:
            partition: 子文件划分
            demands: 请求向量
            t: 放置时的子集大小（可省略，省略时取划分中的值）
            layer: 分层标签

        Returns:
            DeliveryTranscript: C(K,t+1) 个长度为 F/C(K,t) 的编码分段
        """
        K = partition.users
        if t is not None and t != partition.t:
            raise InvalidParams(f"t={t} 与划分的 t={partition.t} 不一致")
        demands.check_users(K)
        transcript = DeliveryTranscript(file_bits=partition.file_bits, scheme="centralized-coded",
                                        side_info={"branch": "coded", "t": partition.t})
        for S in subsets_of_size(K, partition.t + 1):
            payload = np.zeros(partition.subfile_bits, dtype=BIT_DTYPE)
            for k in mask_members(S):
                payload ^= partition.subfile(demands.demand_of(k), S & ~(1 << (k - 1)))
            transcript.append(Segment(SegmentKind.CODED, payload, subset=S, layer=layer))
        return transcript

    @staticmethod
    def deliver_uncoded(library: FileLibrary, cache: CentralCacheState, demands: DemandVector,
                        params: Optional[SystemParams] = None,
                        layer: Layer = Layer.WHOLE) -> DeliveryTranscript:
        """
        未编码投递：对每个不同的被请求文件发送其未缓存的后缀

        Returns:
            DeliveryTranscript: 每个不同请求文件一个长度为 F - ⌊MF/N⌋ 的分段
        """
        if cache.branch != "uncoded":
            raise InvalidParams("未编码投递需要前缀放置")
        if params is not None:
            demands.check_users(params.users)
        prefix_bits = cache.prefix_bits
        transcript = DeliveryTranscript(file_bits=library.file_bits, scheme="centralized-uncoded",
                                        side_info={"branch": "uncoded", "prefix_bits": prefix_bits})
        for n in demands.distinct_files():
            transcript.append(Segment(SegmentKind.UNCODED, library.file(n)[prefix_bits:],
                                      file_index=n, layer=layer))
        return transcript

    @staticmethod
    def select_best(coded: DeliveryTranscript, uncoded: DeliveryTranscript) -> DeliveryTranscript:
        """两分支中实测速率较小者，相等时取编码分支"""
        return coded if coded.accounted_bits <= uncoded.accounted_bits else uncoded

    @classmethod
    def best_centralized_run(cls, library: FileLibrary, demands: DemandVector,
                             params: SystemParams) -> CentralizedRun:
        """角点处分别放置两个分支并择优，返回解码所需的全部状态"""
        partition, coded_cache = cls.place_centralized(library, params)
        uncoded_cache = cls.place_uncoded(library, params)
        coded = cls.deliver_centralized(partition, demands)
        uncoded = cls.deliver_uncoded(library, uncoded_cache, demands, params)
        best = cls.select_best(coded, uncoded)
        logger.debug(f"集中式择优: coded={coded.total_bits} uncoded={uncoded.total_bits} "
                    f"比特，选择 {best.side_info['branch']}")
        if best is coded:
            return CentralizedRun(best, coded_cache, partition)
        return CentralizedRun(best, uncoded_cache, None)

    @classmethod
    def deliver_best_centralized(cls, library: FileLibrary, demands: DemandVector,
                                 params: SystemParams) -> DeliveryTranscript:
        """
        服务器在编码投递与未编码投递中选择速率较小者

        Raises:
            NonCornerMemory: KM/N 不是整数
            IndivisibleFile: C(K,t) 不整除 F
        """
        return cls.best_centralized_run(library, demands, params).transcript

    # ------------------------------------------------------------------
    # 存储共享
    # ------------------------------------------------------------------
    @staticmethod
    def sharing_multiple(users: int, s: int) -> int:
        """前后两层同时满足整除要求所需的文件长度倍数 lcm(C(K,s-1), C(K,s))"""
        return lcm(comb(users, s - 1), comb(users, s))

    @staticmethod
    def split_point(params: SystemParams, file_bits: int) -> int:
        """
        选择前缀长度 P ≈ θF

        候选 P 需满足 C(K,s-1) | P 且 C(K,s) | (F-P)，并且缓存超出量
        N/K·(θF - P) 不超过 s 比特；取距离 θF 最近者，距离相同时取较大者。

        Raises:
            IndivisibleFile: 不存在满足条件的划分
        """
        K, N = params.users, params.files
        geometry = params.geometry
        s, theta = geometry.s, geometry.theta
        left, right = comb(K, s - 1), comb(K, s)
        target = theta * file_bits

        best = None
        base = int(round(target / left))
        span = lcm(left, right) // left + 1
        for step in range(base - span, base + span + 1):
            P = step * left
            if not 0 <= P <= file_bits or (file_bits - P) % right:
                continue
            if N / K * (target - P) > s:
                continue
            key = (abs(P - target), -P)
            if best is None or key < best[0]:
                best = (key, P)
        if best is None:
            error_msg = (f"F={file_bits} 无法在 C({K},{s - 1})={left} 与 C({K},{s})={right} "
                         f"下完成存储共享划分，请取 {lcm(left, right)} 的倍数")
            logger.error(error_msg)
            raise IndivisibleFile(error_msg)
        return best[1]

    @classmethod
    def _layer(cls, library: FileLibrary, users: int, corner: int, layer: Layer) -> LayerPlacement:
        partition, coded_cache = cls._place_corner(library, users, corner)
        uncoded_cache = cls._place_prefix(library, users, corner * library.file_bits // users)
        return LayerPlacement(layer=layer, corner=corner, library=library, partition=partition,
                              coded_cache=coded_cache, uncoded_cache=uncoded_cache)

    @classmethod
    def place_memory_shared(cls, library: FileLibrary, params: SystemParams) -> MemorySharedState:
        """
        存储共享放置：前缀子库在角点 s-1 上运行，后缀子库在角点 s 上运行

        θ = 0 时退化为角点 s 上的放置（单层 WHOLE）。

        Raises:
            IndivisibleFile: 找不到满足整除的划分
        """
        cls._check_library(library, params)
        params = params.with_file_bits(library.file_bits)
        geometry = params.geometry
        K = params.users

        if geometry.is_corner:
            layers = (cls._layer(library, K, geometry.s, Layer.WHOLE),)
            state = MemorySharedState(params=params, prefix_bits=0, layers=layers)
        else:
            P = cls.split_point(params, library.file_bits)
            logger.info(f"存储共享放置: s={geometry.s} θ={geometry.theta:.6f} "
                        f"前缀 {P} 比特 / 后缀 {library.file_bits - P} 比特")
            layers = []
            if P > 0:
                layers.append(cls._layer(library.slice(0, P), K, geometry.s - 1, Layer.PREFIX))
            if P < library.file_bits:
                layers.append(cls._layer(library.slice(P, library.file_bits), K, geometry.s, Layer.SUFFIX))
            state = MemorySharedState(params=params, prefix_bits=P, layers=tuple(layers))

        budget = params.memory * library.file_bits + geometry.s
        usage = max(state.cached_bits(k) for k in range(1, K + 1))
        if usage > params.memory * library.file_bits:
            logger.warning(f"存储共享取整使缓存用量超出 MF {usage - params.memory * library.file_bits:.3f} 比特")
        cls.check_cache_budget(state, budget)
        return state

    @classmethod
    def deliver_memory_shared(cls, state: MemorySharedState, demands: DemandVector) -> DeliveryTranscript:
        """各层分别择优投递后按层合并"""
        demands.check_users(state.params.users)
        transcript = DeliveryTranscript(file_bits=state.params.file_bits, scheme="centralized-memory-sharing",
                                        side_info={"prefix_bits": state.prefix_bits, "branches": {}})
        for layer in state.layers:
            coded = cls.deliver_centralized(layer.partition, demands, layer=layer.layer)
            uncoded = cls.deliver_uncoded(layer.library, layer.uncoded_cache, demands, layer=layer.layer)
            best = cls.select_best(coded, uncoded)
            transcript.side_info["branches"][layer.layer] = best.side_info["branch"]
            transcript.extend(best.records)
        return transcript

    # ------------------------------------------------------------------
    # 解码
    # ------------------------------------------------------------------
    @staticmethod
    def decode_centralized(user: int, cache: CentralCacheState, transcript: DeliveryTranscript,
                           demands: DemandVector, partition: Optional[SubfilePartition] = None,
                           layer: Layer = Layer.WHOLE) -> np.ndarray:
        """
        用户 user 从缓存与传输记录中恢复 W_{d_k}

        编码分支：对每个 S ∋ k，异或掉已缓存的 W_{d_j, S∖{j}}（j ≠ k）得到
        W_{d_k, S∖{k}}，再与已缓存的子文件按 colex 顺序拼接。

        Raises:
            DecodeFailure: 所需子文件既未缓存也无法恢复
        """
        n = demands.demand_of(user)

        if cache.branch == "uncoded":
            seg = transcript.find(SegmentKind.UNCODED, file_index=n, layer=layer)
            if seg is None:
                raise DecodeFailure(f"用户 {user} 缺少文件 W{n} 的未编码分段")
            return np.concatenate([cache.prefixes[n - 1], seg.payload])

        if partition is None:
            raise InvalidParams("编码分支解码需要子文件划分元数据")
        held = cache.subfiles[user]
        bit = 1 << (user - 1)
        pieces: List[np.ndarray] = []
        for T in partition.subsets:
            if T & bit:
                piece = held.get((n, T))
                if piece is None:
                    raise DecodeFailure(f"用户 {user} 未缓存应有的子文件 W{n},{T:#x}")
                pieces.append(piece)
                continue
            S = T | bit
            seg = transcript.find(SegmentKind.CODED, subset=S, layer=layer)
            if seg is None:
                raise DecodeFailure(f"用户 {user} 缺少子集 {S:#x} 的编码分段")
            value = seg.payload.copy()
            for j in mask_members(S):
                if j == user:
                    continue
                known = held.get((demands.demand_of(j), S & ~(1 << (j - 1))))
                if known is None:
                    raise DecodeFailure(f"用户 {user} 无法消去用户 {j} 的子文件")
                value ^= known
            pieces.append(value)
        return np.concatenate(pieces) if pieces else empty_bits()

    @classmethod
    def decode_memory_shared(cls, user: int, state: MemorySharedState, transcript: DeliveryTranscript,
                             demands: DemandVector) -> np.ndarray:
        """逐层解码后拼接前缀与后缀"""
        branches = transcript.side_info.get("branches", {})
        pieces = []
        for layer in state.layers:
            branch = branches.get(layer.layer)
            if branch == "coded":
                pieces.append(cls.decode_centralized(user, layer.coded_cache, transcript, demands,
                                                     layer.partition, layer=layer.layer))
            elif branch == "uncoded":
                pieces.append(cls.decode_centralized(user, layer.uncoded_cache, transcript, demands,
                                                     layer=layer.layer))
            else:
                raise DecodeFailure(f"传输记录缺少分层 {layer.layer.name} 的分支信息")
        return np.concatenate(pieces) if pieces else empty_bits()

    # ------------------------------------------------------------------
    # 检查
    # ------------------------------------------------------------------
    @staticmethod
    def check_cache_budget(state, budget_bits: float) -> None:
        """
        检查每个用户的缓存用量不超过 budget_bits

        Raises:
            BoundViolation: 有用户超出预算
        """
        users = state.params.users if isinstance(state, MemorySharedState) else state.users
        for k in range(1, users + 1):
            used = state.cached_bits(k)
            if used > budget_bits + 1e-9 * max(1.0, budget_bits):
                error_msg = f"用户 {k} 缓存 {used} 比特，超出预算 {budget_bits:.3f}"
                logger.error(error_msg)
                raise BoundViolation(error_msg, k)
