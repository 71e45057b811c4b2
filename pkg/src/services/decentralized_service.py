"""
去中心化编码缓存服务模块

实现去中心化方案的比特级仿真：独立随机放置、按缓存者集合划分的 V 分段、
Delivery1（补零异或）、Delivery2（GF(2) 随机线性组合）以及逐用户解码。

Delivery2 对每个被请求的文件分两个阶段发送：
1. 至少有一个请求者未缓存的位置按“哪些请求者未缓存”的模式稳定排序后
   轮转分配到若干代（每代不超过 generation_bits 个位置），每代发送比
   请求者最少未知位数少 MIX_RESERVE 个的组合；
2. 在整个文件的候选位置上按 64 个一批发送混合组合并复查秩，直到每个
   请求者在第一阶段留下的自由变量上满秩，发送数取最短前缀。
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.models.library import DemandVector, FileLibrary
from src.models.system_params import SystemParams
from src.models.transcript import DeliveryTranscript, Segment, SegmentKind
from src.utils.bits import BIT_DTYPE, empty_bits, xor_padded
from src.utils.combinatorics import check_mask_width, mask_members, subsets_of_size
from src.utils.exceptions import DecodeFailure, InvalidParams
from src.utils.gf2 import (affine_solution, batched_eliminate, column_bits, gf2_matmul, gf2_matvec,
                           pack_rows, words_for)
from src.utils.logger import setup_logger
from src.utils.rng import coefficient_seed_id, placement_rng, rlc_rng

logger = setup_logger(__name__)

VKey = Tuple[int, int]   # (用户 k, 子集掩码 S)

DELIVERY1 = "delivery1"
DELIVERY2 = "delivery2"


@dataclass(frozen=True, eq=False)
class RandomCacheState:
    """
    随机放置后的缓存状态

    Attributes:
        users / files / file_bits: K, N, F
        cached_per_file: 每个用户每个文件缓存的比特数 ⌊MF/N⌋
        seed: 主种子
        masks: 形状 (K, N, F) 的布尔数组，masks[k-1, n-1, p] 表示用户 k 缓存 W_n 的第 p 位
        values: 与 masks 同形状，已缓存位置为比特值，其余为 0
    """

    users: int
    files: int
    file_bits: int
    cached_per_file: int
    seed: int
    masks: np.ndarray
    values: np.ndarray

    def cached_positions(self, user: int, file_index: int) -> np.ndarray:
        return np.flatnonzero(self.masks[user - 1, file_index - 1])

    def cached_bits(self, user: int) -> int:
        return int(self.masks[user - 1].sum())

    def cacher_signature(self, file_index: int) -> np.ndarray:
        """每个比特位置的缓存者集合（位掩码，uint64）"""
        weights = np.uint64(1) << np.arange(self.users, dtype=np.uint64)
        held = self.masks[:, file_index - 1, :].astype(np.uint64)
        return (held * weights[:, None]).sum(axis=0, dtype=np.uint64)


@dataclass(frozen=True, eq=False)
class VSegment:
    """
    V_{k,S}：W_{d_k} 中用户 k 未缓存、且其余用户中恰好由 S 缓存的比特

    Attributes:
        owner: 用户 k
        subset: S（不含 k）
        positions: 比特位置（升序）
        payload: 对应的比特值
    """

    owner: int
    subset: int
    positions: np.ndarray
    payload: np.ndarray

    @property
    def length(self) -> int:
        return int(self.positions.size)


@dataclass(frozen=True, eq=False)
class RlcBatch:
    """
    一组随机线性组合

    Attributes:
        file_index: 文件 n
        generation: 代编号；等于代数时为覆盖整个文件的混合组合
        positions: 参与组合的比特位置（混合组合为各代按序拼接）
        payload: 组合结果比特
        coefficient_seed_id: 系数子流标识
    """

    file_index: int
    generation: int
    positions: np.ndarray
    payload: np.ndarray
    coefficient_seed_id: int

    @property
    def count(self) -> int:
        return int(self.payload.size)


@dataclass
class _DecodeProblem:
    user: int
    file_index: int
    columns: np.ndarray         # 未知数在文件候选位置中的下标
    matrix: np.ndarray          # 只含未知列
    rhs: np.ndarray


@dataclass(frozen=True, eq=False)
class _AffineBlock:
    """一组未知位的通解 x = offset ⊕ basis·y"""

    columns: np.ndarray
    offset: np.ndarray
    basis: np.ndarray

    @property
    def free(self) -> int:
        return int(self.basis.shape[1])


class DecentralizedService:
    """
    去中心化方案服务类

    提供去中心化方案相关功能，包括：
    - 随机放置与 V 分段计算
    - Delivery1 / Delivery2 投递与择优
    - 逐用户解码

    Attributes:
        BATCH_BITS: 每批随机组合的个数
        GENERATION_BITS: 每代最多包含的比特位置数
        MIX_RESERVE: 每代少发、留给混合组合的组合数
    """

    BATCH_BITS = 64
    GENERATION_BITS = 256
    MIX_RESERVE = 8

    # ------------------------------------------------------------------
    # 放置
    # ------------------------------------------------------------------
    @staticmethod
    def place_decentralized(library: FileLibrary, params: SystemParams, seed: int = 0) -> RandomCacheState:
        """
        随机放置：每个用户对每个文件独立、均匀地缓存 ⌊MF/N⌋ 个比特

        每个 (用户, 文件) 使用独立的随机数子流 (seed, "PLC", k, n)。

        Args:
            library: 文件库
            params: 系统参数
            seed: 主种子

        Returns:
            RandomCacheState: 缓存状态

        Raises:
            InvalidParams: 文件数不符或 K > 64
        """
        check_mask_width(params.users)
        if library.num_files != params.files:
            raise InvalidParams(f"文件库包含 {library.num_files} 个文件，参数要求 N={params.files}")
        K, N, F = params.users, params.files, library.file_bits
        cached = params.with_file_bits(F).cached_bits_per_file()
        logger.debug(f"去中心化放置: K={K} N={N} F={F} 每文件缓存 {cached} 比特 seed={seed}")

        masks = np.zeros((K, N, F), dtype=bool)
        values = np.zeros((K, N, F), dtype=BIT_DTYPE)
        for k in range(1, K + 1):
            for n in range(1, N + 1):
                if cached == F:
                    positions = np.arange(F)
                else:
                    positions = placement_rng(seed, k, n).choice(F, size=cached, replace=False)
                masks[k - 1, n - 1, positions] = True
                values[k - 1, n - 1, positions] = library.file(n)[positions]
        masks.setflags(write=False)
        values.setflags(write=False)
        return RandomCacheState(users=K, files=N, file_bits=F, cached_per_file=cached, seed=seed,
                                masks=masks, values=values)

    # ------------------------------------------------------------------
    # V 分段
    # ------------------------------------------------------------------
    @staticmethod
    def compute_v_segments(caches: RandomCacheState, demands: DemandVector,
                           library: FileLibrary) -> Dict[VKey, VSegment]:
        """
        计算所有非空的 V_{k,S}

        位置 p 属于 V_{k,S} 当且仅当 p 不被用户 k 缓存，且其余用户中缓存 p 的集合恰为 S。
        同一分段内的位置按升序排列；未出现在结果中的 (k, S) 为空分段。

        Returns:
            Dict[VKey, VSegment]: (k, S) → V_{k,S}
        """
        demands.check_users(caches.users)
        signatures = {n: caches.cacher_signature(n) for n in demands.distinct_files()}
        segments: Dict[VKey, VSegment] = {}
        for k in range(1, caches.users + 1):
            n = demands.demand_of(k)
            missing = np.flatnonzero(~caches.masks[k - 1, n - 1])
            if missing.size == 0:
                continue
            sig = signatures[n][missing]
            order = np.argsort(sig, kind="stable")
            ordered_sig = sig[order]
            ordered_pos = missing[order]
            keys, starts = np.unique(ordered_sig, return_index=True)
            bounds = list(starts[1:]) + [ordered_pos.size]
            file_bits = library.file(n)
            for S, start, stop in zip(keys, starts, bounds):
                positions = ordered_pos[start:stop]
                segments[(k, int(S))] = VSegment(owner=k, subset=int(S), positions=positions,
                                                 payload=file_bits[positions])
        return segments

    # ------------------------------------------------------------------
    # Delivery1
    # ------------------------------------------------------------------
    @classmethod
    def deliver1(cls, library: FileLibrary, caches: RandomCacheState, demands: DemandVector,
                 v_segments: Optional[Dict[VKey, VSegment]] = None) -> DeliveryTranscript:
        """
        Delivery1：对 s = K..1 的每个 |S| = s 子集发送 ⊕_{k∈S} V_{k,S∖{k}}（短者补零）

        长度为 0 的分段不发送，只保留 EMPTY 占位标记。
        V 分段的位置作为双方共享的元数据写入 side_info，不计入速率。
        """
        if v_segments is None:
            v_segments = cls.compute_v_segments(caches, demands, library)
        K = caches.users
        transcript = DeliveryTranscript(
            file_bits=caches.file_bits, scheme="decentralized-delivery1",
            side_info={"procedure": DELIVERY1,
                       "v_positions": {key: seg.positions for key, seg in v_segments.items()}},
        )
        for size in range(K, 0, -1):
            for S in subsets_of_size(K, size):
                parts = [v_segments.get((k, S & ~(1 << (k - 1)))) for k in mask_members(S)]
                payloads = [p.payload for p in parts if p is not None]
                if not payloads:
                    transcript.append(Segment(SegmentKind.EMPTY, empty_bits(), subset=S))
                    continue
                transcript.append(Segment(SegmentKind.CODED, xor_padded(payloads), subset=S))
        return transcript

    # ------------------------------------------------------------------
    # Delivery2
    # ------------------------------------------------------------------
    @classmethod
    def batch_coefficients(cls, seed: int, file_index: int, generation: int, width: int,
                           batch: int) -> np.ndarray:
        """第 batch 批系数，形状 (64, width)"""
        return rlc_rng(seed, file_index, generation, batch).integers(
            0, 2, size=(cls.BATCH_BITS, width), dtype=np.uint8)

    @classmethod
    def coefficients(cls, seed: int, file_index: int, generation: int, width: int, count: int) -> np.ndarray:
        """重新生成某代前 count 个组合的系数，形状 (count, width)"""
        n_batches = -(-count // cls.BATCH_BITS)
        if n_batches == 0:
            return np.zeros((0, width), dtype=np.uint8)
        return np.vstack([cls.batch_coefficients(seed, file_index, generation, width, b)
                          for b in range(n_batches)])[:count]

    @classmethod
    def form_generations(cls, caches: RandomCacheState, demands: DemandVector, file_index: int,
                         generation_bits: Optional[int] = None) -> List[np.ndarray]:
        """
        将文件中至少一个请求者未缓存的位置划分为若干代

        位置先按请求者未缓存模式稳定排序，再按下标模 G 轮转分配，
        使每代中各请求者的未知位数大致相同；每代内部位置升序。
        """
        generation_bits = generation_bits or cls.GENERATION_BITS
        requesters = np.array(demands.requesters(file_index)) - 1
        unknown = ~caches.masks[requesters, file_index - 1, :]
        candidates = np.flatnonzero(unknown.any(axis=0))
        if candidates.size == 0:
            return []
        weights = np.uint64(1) << np.arange(requesters.size, dtype=np.uint64)
        pattern = (unknown[:, candidates].astype(np.uint64) * weights[:, None]).sum(axis=0, dtype=np.uint64)
        ordered = candidates[np.argsort(pattern, kind="stable")]
        count = -(-ordered.size // generation_bits)
        return [np.sort(ordered[g::count]) for g in range(count)]

    @staticmethod
    def _eliminate(problems: List[_DecodeProblem]) -> Tuple[np.ndarray, np.ndarray, np.ndarray, int]:
        u_max = max(p.matrix.shape[1] for p in problems)
        h_max = max(p.matrix.shape[0] for p in problems)
        n_words = words_for(u_max + 1)
        stack = np.zeros((len(problems), h_max, n_words), dtype=np.uint64)
        for b, p in enumerate(problems):
            h = p.matrix.shape[0]
            if h == 0:
                continue
            augmented = np.zeros((h, u_max + 1), dtype=np.uint8)
            augmented[:, :p.matrix.shape[1]] = p.matrix
            augmented[:, u_max] = p.rhs
            stack[b, :h] = pack_rows(augmented, n_words)
        reduced, pivots, rank = batched_eliminate(stack, u_max, reduce_above=True)
        return reduced, pivots, rank, u_max

    @classmethod
    def _affine_solutions(cls, problems: List[_DecodeProblem]) -> List[_AffineBlock]:
        """批量 Gauss-Jordan 约化，返回每个方程组的通解"""
        if not problems:
            return []
        reduced, pivots, rank, u_max = cls._eliminate(problems)
        blocks = []
        for b, p in enumerate(problems):
            if column_bits(reduced[b, rank[b]:], u_max).any():
                raise DecodeFailure(f"用户 {p.user} 在文件 W{p.file_index} 上收到的组合不一致")
            offset, basis = affine_solution(reduced[b], pivots[b], int(rank[b]), p.matrix.shape[1], u_max)
            blocks.append(_AffineBlock(columns=p.columns, offset=offset, basis=basis))
        return blocks

    @staticmethod
    def _project(coeffs: np.ndarray, blocks: List[_AffineBlock]) -> np.ndarray:
        """把组合限制到未知列并代入各组通解，得到自由变量上的系数 (rows, Σ 自由变量数)"""
        parts = [gf2_matmul(coeffs[:, blk.columns], blk.basis) for blk in blocks]
        if not parts:
            return np.zeros((coeffs.shape[0], 0), dtype=np.uint8)
        return np.hstack(parts)

    @staticmethod
    def _full_rank_prefix(matrices: List[np.ndarray]) -> Optional[int]:
        """
        每个矩阵（行为组合）都列满秩所需的最短行前缀

        转置后向下消元，主元列即贪心选出的线性无关组合；任一矩阵秩不足时返回 None。
        """
        rows = matrices[0].shape[0]
        targets = np.array([m.shape[1] for m in matrices], dtype=np.int64)
        n_words = words_for(rows)
        stack = np.zeros((len(matrices), int(targets.max()), n_words), dtype=np.uint64)
        for i, m in enumerate(matrices):
            if m.shape[1]:
                stack[i, :m.shape[1]] = pack_rows(m.T, n_words)
        _, pivots, rank = batched_eliminate(stack, rows, reduce_above=False)
        if (rank < targets).any():
            return None
        has_pivot = pivots >= 0
        last = np.where(has_pivot.any(axis=1), rows - 1 - np.argmax(has_pivot[:, ::-1], axis=1), -1)
        return int(last.max() + 1)

    @classmethod
    def _rlc_file(cls, library: FileLibrary, caches: RandomCacheState, demands: DemandVector,
                  file_index: int, seed: int, generation_bits: Optional[int]) -> List[RlcBatch]:
        requesters = demands.requesters(file_index)
        generations = cls.form_generations(caches, demands, file_index, generation_bits)
        if not generations:
            return []
        source = library.file(file_index)
        candidates = np.concatenate(generations)
        starts = np.cumsum([0] + [pos.size for pos in generations])
        unknown = ~caches.masks[np.array(requesters) - 1, file_index - 1][:, candidates]

        batches, problems = [], []
        for g, positions in enumerate(generations):
            window = unknown[:, starts[g]:starts[g + 1]]
            count = max(0, int(window.sum(axis=1).min()) - cls.MIX_RESERVE)
            matrix = cls.coefficients(seed, file_index, g, positions.size, count)
            batches.append(RlcBatch(file_index=file_index, generation=g, positions=positions,
                                    payload=gf2_matvec(matrix, source[positions]),
                                    coefficient_seed_id=coefficient_seed_id(seed, file_index, g)))
            for i, r in enumerate(requesters):
                local = np.flatnonzero(window[i])
                if local.size:
                    problems.append(_DecodeProblem(user=r, file_index=file_index, columns=starts[g] + local,
                                                   matrix=matrix[:, local], rhs=np.zeros(count, dtype=np.uint8)))
        blocks: Dict[int, List[_AffineBlock]] = {r: [] for r in requesters}
        for p, blk in zip(problems, cls._affine_solutions(problems)):
            blocks[p.user].append(blk)

        mix = len(generations)
        free = max(sum(blk.free for blk in blocks[r]) for r in requesters)
        projected: Dict[int, List[np.ndarray]] = {r: [] for r in requesters}
        payload: List[np.ndarray] = []
        count, b = 0, 0
        while free > 0:
            coeffs = cls.batch_coefficients(seed, file_index, mix, candidates.size, b)
            payload.append(gf2_matvec(coeffs, source[candidates]))
            for r in requesters:
                projected[r].append(cls._project(coeffs, blocks[r]))
            b += 1
            if b * cls.BATCH_BITS < free:
                continue
            needed = cls._full_rank_prefix([np.vstack(projected[r]) for r in requesters])
            if needed is not None:
                count = needed
                break
            logger.debug(f"文件 W{file_index} 的混合组合秩不足，追加第 {b + 1} 批")

        mixed = np.concatenate(payload)[:count] if payload else empty_bits()
        batches.append(RlcBatch(file_index=file_index, generation=mix, positions=candidates, payload=mixed,
                                coefficient_seed_id=coefficient_seed_id(seed, file_index, mix)))
        logger.debug(f"文件 W{file_index}: {mix} 代共 {sum(x.count for x in batches[:-1])} 个组合，"
                     f"混合组合 {count} 个（自由变量 {free}）")
        return batches

    @classmethod
    def deliver2(cls, library: FileLibrary, caches: RandomCacheState, demands: DemandVector,
                 seed: int = 0, generation_bits: Optional[int] = None) -> DeliveryTranscript:
        """
        Delivery2：对每个被请求的文件发送 GF(2) 随机线性组合，
        直到每个请求者在其未知位置上满秩

        Returns:
            DeliveryTranscript: 每代一个 RLC 分段，外加每个文件一个混合 RLC 分段；
            载荷长度即组合个数
        """
        demands.check_users(caches.users)
        transcript = DeliveryTranscript(
            file_bits=caches.file_bits, scheme="decentralized-delivery2",
            side_info={"procedure": DELIVERY2, "seed": seed, "generations": {}, "mix": {}},
        )
        for n in demands.distinct_files():
            batches = cls._rlc_file(library, caches, demands, n, seed, generation_bits)
            if not batches:
                continue
            transcript.side_info["mix"][n] = batches[-1].generation
            for batch in batches:
                if batch is not batches[-1]:
                    transcript.side_info["generations"][(n, batch.generation)] = batch.positions
                transcript.append(Segment(SegmentKind.RLC, batch.payload, file_index=n,
                                          generation=batch.generation,
                                          coefficient_seed_id=batch.coefficient_seed_id))
        return transcript

    @staticmethod
    def delivery2_lower_bound(caches: RandomCacheState, demands: DemandVector) -> int:
        """Delivery2 的比特数下界：各被请求文件上请求者未知位数的最大值之和"""
        total = 0
        for n in demands.distinct_files():
            requesters = np.array(demands.requesters(n)) - 1
            total += int((~caches.masks[requesters, n - 1, :]).sum(axis=1).max())
        return total

    @classmethod
    def deliver_best_decentralized(cls, library: FileLibrary, caches: RandomCacheState,
                                   demands: DemandVector, seed: int = 0,
                                   generation_bits: Optional[int] = None) -> DeliveryTranscript:
        """
        按本次实现的实测速率在两种投递中择优，相等时取 Delivery1

        Delivery1 的比特数不超过 Delivery2 的下界时直接返回 Delivery1。
        """
        first = cls.deliver1(library, caches, demands)
        bound = cls.delivery2_lower_bound(caches, demands)
        if first.total_bits <= bound:
            logger.debug(f"Delivery1 {first.total_bits} 比特不超过 Delivery2 下界 {bound}，跳过 Delivery2")
            return first
        second = cls.deliver2(library, caches, demands, seed, generation_bits)
        chosen = first if first.total_bits <= second.total_bits else second
        logger.debug(f"去中心化择优: delivery1={first.total_bits} delivery2={second.total_bits} "
                     f"比特，选择 {chosen.side_info['procedure']}")
        return chosen

    # ------------------------------------------------------------------
    # 解码
    # ------------------------------------------------------------------
    @staticmethod
    def _decode_delivery1(user: int, caches: RandomCacheState, transcript: DeliveryTranscript,
                          demands: DemandVector) -> np.ndarray:
        n = demands.demand_of(user)
        known = caches.masks[user - 1, n - 1].copy()
        result = np.where(known, caches.values[user - 1, n - 1], 0).astype(BIT_DTYPE)
        v_positions = transcript.side_info.get("v_positions", {})
        bit = 1 << (user - 1)

        for (owner, rest), positions in v_positions.items():
            if owner != user:
                continue
            S = rest | bit
            seg = transcript.find(SegmentKind.CODED, subset=S)
            if seg is None or seg.bits < positions.size:
                raise DecodeFailure(f"用户 {user} 缺少子集 {S:#x} 的编码分段")
            value = seg.payload[:positions.size].copy()
            for j in mask_members(S):
                if j == user:
                    continue
                other = v_positions.get((j, S & ~(1 << (j - 1))))
                if other is None:
                    continue
                d_j = demands.demand_of(j)
                if not caches.masks[user - 1, d_j - 1, other].all():
                    raise DecodeFailure(f"用户 {user} 未缓存 V_{j},{S & ~(1 << (j - 1)):#x} 的比特")
                overlap = min(other.size, value.size)
                value[:overlap] ^= caches.values[user - 1, d_j - 1, other[:overlap]]
            result[positions] = value
            known[positions] = True

        if not known.all():
            raise DecodeFailure(f"用户 {user} 有 {int((~known).sum())} 个比特无法恢复")
        return result

    @staticmethod
    def _rlc_segment(transcript: DeliveryTranscript, file_index: int, generation: int, seed: int) -> Segment:
        seg = transcript.find(SegmentKind.RLC, file_index=file_index, generation=generation)
        if seg is None:
            raise DecodeFailure(f"缺少 W{file_index} 第 {generation} 代的组合")
        if seg.coefficient_seed_id != coefficient_seed_id(seed, file_index, generation):
            raise DecodeFailure(f"W{file_index} 第 {generation} 代的系数子流标识不符")
        return seg

    @classmethod
    def _generation_problems(cls, user: int, file_index: int, generations: List[np.ndarray],
                             caches: RandomCacheState, transcript: DeliveryTranscript,
                             seed: int) -> List[_DecodeProblem]:
        problems = []
        start = 0
        for g, positions in enumerate(generations):
            offset, start = start, start + positions.size
            cached = caches.masks[user - 1, file_index - 1, positions]
            if cached.all():
                continue
            seg = cls._rlc_segment(transcript, file_index, g, seed)
            matrix = cls.coefficients(seed, file_index, g, positions.size, seg.bits)
            known = np.flatnonzero(cached)
            local = np.flatnonzero(~cached)
            known_values = caches.values[user - 1, file_index - 1, positions[known]]
            rhs = seg.payload ^ gf2_matvec(matrix[:, known], known_values)
            problems.append(_DecodeProblem(user=user, file_index=file_index, columns=offset + local,
                                           matrix=matrix[:, local], rhs=rhs))
        return problems

    @classmethod
    def _mix_problem(cls, user: int, file_index: int, candidates: np.ndarray, blocks: List[_AffineBlock],
                     caches: RandomCacheState, transcript: DeliveryTranscript, seed: int,
                     mix: int) -> Optional[_DecodeProblem]:
        free = sum(blk.free for blk in blocks)
        if free == 0:
            return None
        seg = cls._rlc_segment(transcript, file_index, mix, seed)
        n_batches = -(-seg.bits // cls.BATCH_BITS)
        if n_batches == 0:
            raise DecodeFailure(f"用户 {user} 在 W{file_index} 上有 {free} 个自由变量但没有混合组合")

        # 已知位取缓存值，未知位取各代特解
        values = np.where(caches.masks[user - 1, file_index - 1, candidates],
                          caches.values[user - 1, file_index - 1, candidates], 0).astype(np.uint8)
        for blk in blocks:
            values[blk.columns] = blk.offset
        matrix_parts, rhs_parts = [], []
        for b in range(n_batches):
            coeffs = cls.batch_coefficients(seed, file_index, mix, candidates.size, b)
            matrix_parts.append(cls._project(coeffs, blocks))
            rhs_parts.append(gf2_matvec(coeffs, values))
        matrix = np.vstack(matrix_parts)[:seg.bits]
        rhs = seg.payload ^ np.concatenate(rhs_parts)[:seg.bits]
        return _DecodeProblem(user=user, file_index=file_index, columns=np.arange(free), matrix=matrix, rhs=rhs)

    @classmethod
    def decode_all_delivery2(cls, users: List[int], caches: RandomCacheState, transcript: DeliveryTranscript,
                             demands: DemandVector) -> Dict[int, np.ndarray]:
        """多个用户的 Delivery2 解码：各代与混合组合分别放在同一批消元中完成"""
        seed = transcript.side_info["seed"]
        generations = transcript.side_info.get("generations", {})
        mixes = transcript.side_info.get("mix", {})

        layouts: Dict[int, Tuple[int, np.ndarray]] = {}
        problems: List[_DecodeProblem] = []
        for user in users:
            n = demands.demand_of(user)
            own = [generations[(n, g)] for g in range(mixes.get(n, 0))]
            candidates = np.concatenate(own) if own else np.zeros(0, dtype=np.int64)
            layouts[user] = (n, candidates)
            problems.extend(cls._generation_problems(user, n, own, caches, transcript, seed))
        blocks: Dict[int, List[_AffineBlock]] = {user: [] for user in users}
        for p, blk in zip(problems, cls._affine_solutions(problems)):
            blocks[p.user].append(blk)

        mixed: List[_DecodeProblem] = []
        for user in users:
            n, candidates = layouts[user]
            problem = cls._mix_problem(user, n, candidates, blocks[user], caches, transcript, seed,
                                       mixes.get(n, 0))
            if problem is not None:
                mixed.append(problem)
        solutions = {p.user: blk for p, blk in zip(mixed, cls._affine_solutions(mixed))}

        decoded = {}
        for user in users:
            n, candidates = layouts[user]
            known = caches.masks[user - 1, n - 1].copy()
            bits = np.where(known, caches.values[user - 1, n - 1], 0).astype(BIT_DTYPE)
            free = np.zeros(0, dtype=np.uint8)
            if user in solutions:
                if solutions[user].free:
                    raise DecodeFailure(f"用户 {user} 的混合组合秩不足，剩余 {solutions[user].free} 个自由变量")
                free = solutions[user].offset
            start = 0
            for blk in blocks[user]:
                y = free[start:start + blk.free]
                start += blk.free
                positions = candidates[blk.columns]
                bits[positions] = blk.offset ^ gf2_matvec(blk.basis, y)
                known[positions] = True
            if not known.all():
                raise DecodeFailure(f"用户 {user} 有 {int((~known).sum())} 个比特不在任何一代中")
            decoded[user] = bits
        return decoded

    @classmethod
    def decode_decentralized(cls, user: int, caches: RandomCacheState, transcript: DeliveryTranscript,
                             demands: DemandVector) -> np.ndarray:
        """
        用户 user 从缓存与传输记录（含共享的元数据）中恢复 W_{d_k}

        Delivery1：对每个 S ∋ k 异或掉已缓存的 V_{j,S∖{j}} 得到 V_{k,S∖{k}}；
        Delivery2：先在各代内约化出通解，再用混合组合解出自由变量。

        Raises:
            DecodeFailure: 无法恢复
        """
        procedure = transcript.side_info.get("procedure")
        if procedure == DELIVERY1:
            return cls._decode_delivery1(user, caches, transcript, demands)
        if procedure == DELIVERY2:
            return cls.decode_all_delivery2([user], caches, transcript, demands)[user]
        raise DecodeFailure(f"未知的投递过程: {procedure}")

    @classmethod
    def decode_all(cls, caches: RandomCacheState, transcript: DeliveryTranscript,
                   demands: DemandVector) -> Dict[int, np.ndarray]:
        """全部用户解码"""
        users = list(range(1, caches.users + 1))
        if transcript.side_info.get("procedure") == DELIVERY2:
            return cls.decode_all_delivery2(users, caches, transcript, demands)
        return {k: cls._decode_delivery1(k, caches, transcript, demands) for k in users}
