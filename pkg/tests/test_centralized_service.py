"""
测试集中式方案服务

验证子文件放置、子集异或投递、未编码分支、择优、存储共享与逐比特解码。
"""
from math import comb

import numpy as np
import pytest

from src.models.library import DemandVector, FileLibrary
from src.models.system_params import SystemParams
from src.models.transcript import DeliveryTranscript
from src.services.centralized_service import CentralizedService
from src.services.rate_service import RateService
from src.utils.exceptions import DecodeFailure, IndivisibleFile, InvalidParams, NonCornerMemory


def make_run(K: int, N: int, M: float, F: int, seed: int = 0):
    """
    辅助函数，生成文件库与系统参数

    Returns:
        Tuple[FileLibrary, SystemParams]
    """
    return FileLibrary.random(N, F, seed), SystemParams(K, N, M, F)


def decode_everyone(run, demands: DemandVector, library: FileLibrary) -> bool:
    """所有用户解码并与原文件比较"""
    for k in range(1, demands.users + 1):
        decoded = CentralizedService.decode_centralized(k, run.cache, run.transcript, demands, run.partition)
        if not np.array_equal(decoded, library.file(demands.demand_of(k))):
            return False
    return True


def test_placement_caches_mf_bits():
    """K=3 N=3 M=1 F=300：每个用户缓存 N·C(K-1,t-1)·F/C(K,t) = 300 比特"""
    library, p = make_run(3, 3, 1, 300)
    partition, cache = CentralizedService.place_centralized(library, p)
    assert partition.t == 1
    assert partition.subfile_bits == 100
    assert [cache.cached_bits(k) for k in (1, 2, 3)] == [300, 300, 300]


def test_deliver_centralized_k3_n3_m1():
    """C(3,2) = 3 个长度 F/3 的分段，速率 1.0"""
    library, p = make_run(3, 3, 1, 300)
    partition, _ = CentralizedService.place_centralized(library, p)
    transcript = CentralizedService.deliver_centralized(partition, DemandVector((1, 2, 3), 3), t=1)
    assert len(transcript) == 3
    assert all(seg.bits == 100 for seg in transcript.segments)
    assert transcript.measured_rate == 1.0


def test_coded_rate_is_demand_free():
    """编码分支的实测速率与请求无关"""
    library, p = make_run(4, 2, 1, comb(4, 2) * 3)
    partition, _ = CentralizedService.place_centralized(library, p)
    rates = {CentralizedService.deliver_centralized(partition, d).measured_rate
             for d in DemandVector.exhaustive(4, 2)}
    assert rates == {(4 - 2) / (2 + 1)}


def test_deliver_uncoded_sends_suffixes():
    """K=10 N=2 M=0.4 F=10：两个 8 比特后缀，速率 1.6"""
    library, p = make_run(10, 2, 0.4, 10)
    cache = CentralizedService.place_uncoded(library, p)
    demands = DemandVector.distinct(10, 2)
    transcript = CentralizedService.deliver_uncoded(library, cache, demands, p)
    assert [seg.bits for seg in transcript.segments] == [8, 8]
    assert transcript.measured_rate == pytest.approx(1.6)


def test_deliver_uncoded_same_demand():
    """所有用户请求同一文件时只发送一个后缀"""
    library, p = make_run(10, 2, 0.4, 10)
    cache = CentralizedService.place_uncoded(library, p)
    transcript = CentralizedService.deliver_uncoded(library, cache, DemandVector((2,) * 10, 2), p)
    assert len(transcript) == 1


def test_placement_rejects_more_than_64_users():
    """传输记录的子集掩码为 64 位，K > 64 时拒绝仿真"""
    library, p = make_run(65, 1, 0.5, 8)
    with pytest.raises(InvalidParams):
        CentralizedService.place_uncoded(library, p)


def test_best_prefers_uncoded_when_cheaper():
    """K=10 N=2 M=0.4 角点 t=2：未编码 N-M=1.6 小于编码 8/3"""
    library, p = make_run(10, 2, 0.4, comb(10, 2) * 2)
    demands = DemandVector.distinct(10, 2)
    run = CentralizedService.best_centralized_run(library, demands, p)
    assert run.transcript.side_info["branch"] == "uncoded"
    expected = RateService.centralized_rate_corner(2, p)
    assert run.transcript.measured_rate == pytest.approx(expected, rel=1e-12)
    assert decode_everyone(run, demands, library)


def test_non_corner_memory_rejected():
    library, p = make_run(3, 3, 0.5, 300)
    with pytest.raises(NonCornerMemory):
        CentralizedService.place_centralized(library, p)


def test_indivisible_file_rejected():
    """C(3,1) = 3 不整除 F = 100"""
    library, p = make_run(3, 3, 1, 100)
    with pytest.raises(IndivisibleFile):
        CentralizedService.place_centralized(library, p)


def test_decode_failure_on_missing_segment():
    """缺少子集 {1,2} 的分段时用户 1 无法解码"""
    library, p = make_run(3, 3, 1, 300)
    partition, cache = CentralizedService.place_centralized(library, p)
    demands = DemandVector((1, 2, 3), 3)
    full = CentralizedService.deliver_centralized(partition, demands)
    broken = DeliveryTranscript(file_bits=full.file_bits, records=full.records[1:])
    with pytest.raises(DecodeFailure):
        CentralizedService.decode_centralized(1, cache, broken, demands, partition)


@pytest.mark.parametrize("K,N", [
    (2, 1), (2, 2), (2, 3), (2, 4),
    (3, 1), (3, 2), (3, 3), (3, 4),
    (4, 1), (4, 2), (4, 3), (4, 4),
    pytest.param(5, 1, marks=pytest.mark.slow),
    pytest.param(5, 2, marks=pytest.mark.slow),
    pytest.param(5, 3, marks=pytest.mark.slow),
    pytest.param(5, 4, marks=pytest.mark.slow),
])
def test_exhaustive_corners(K, N):
    """
    所有角点、全部 N^K 个请求向量：编码分支速率恰为 (K-t)/(t+1)，
    择优后的最坏速率等于角点解析值，全部用户逐比特恢复
    """
    for t in range(1, K + 1):
        M = t * N / K
        F = comb(K, t) * 4
        library, p = make_run(K, N, M, F, seed=t)
        partition, _ = CentralizedService.place_centralized(library, p)
        worst = 0.0
        for demands in DemandVector.exhaustive(K, N):
            coded = CentralizedService.deliver_centralized(partition, demands)
            assert coded.measured_rate == (K - t) / (t + 1)
            run = CentralizedService.best_centralized_run(library, demands, p)
            assert decode_everyone(run, demands, library), f"K={K} N={N} t={t} {demands}"
            worst = max(worst, run.transcript.measured_rate)
        assert worst == pytest.approx(RateService.centralized_rate_corner(t, p), rel=1e-12, abs=1e-15)


def test_split_point_exact_half():
    """K=2 N=2 M=0.5 F=8192：θ = 0.5，前缀恰为 4096"""
    p = SystemParams(2, 2, 0.5, 8192)
    assert CentralizedService.split_point(p, 8192) == 4096


def test_split_point_indivisible():
    """K=3 N=3 M=1.5：C(3,1) = C(3,2) = 3，F = 100 无法划分"""
    with pytest.raises(IndivisibleFile):
        CentralizedService.split_point(SystemParams(3, 3, 1.5, 100), 100)


def test_sharing_multiple():
    assert CentralizedService.sharing_multiple(3, 2) == 3
    assert CentralizedService.sharing_multiple(4, 2) == 12


@pytest.mark.parametrize("K,N,M,F", [(2, 2, 0.5, 8192), (3, 3, 1.5, 36 * 1024)])
def test_memory_sharing_matches_interpolation(K, N, M, F):
    """存储共享的实测速率与角点插值相差不超过 1%，且全部用户恢复"""
    library, p = make_run(K, N, M, F)
    state = CentralizedService.place_memory_shared(library, p)
    demands = DemandVector.distinct(K, N)
    transcript = CentralizedService.deliver_memory_shared(state, demands)
    analytic = RateService.centralized_rate(p)
    assert abs(transcript.measured_rate - analytic) / analytic < 0.01
    for k in range(1, K + 1):
        decoded = CentralizedService.decode_memory_shared(k, state, transcript, demands)
        assert np.array_equal(decoded, library.file(demands.demand_of(k)))


def test_memory_sharing_respects_budget():
    """每个用户缓存不超过 MF + s 比特"""
    library, p = make_run(4, 3, 1.3, 3 * 1000 * 4)
    state = CentralizedService.place_memory_shared(library, p)
    budget = p.memory * library.file_bits + p.geometry.s
    assert max(state.cached_bits(k) for k in range(1, 5)) <= budget


def test_memory_sharing_at_corner_uses_single_layer():
    library, p = make_run(3, 3, 1, 300)
    state = CentralizedService.place_memory_shared(library, p)
    assert state.prefix_bits == 0
    assert len(state.layers) == 1


def test_deliver_best_centralized_at_corner():
    """角点处择优后的实测速率恰为 centralized_rate_corner"""
    library, p = make_run(4, 2, 1, comb(4, 2) * 5)
    transcript = CentralizedService.deliver_best_centralized(library, DemandVector.distinct(4, 2), p)
    assert transcript.measured_rate == pytest.approx(RateService.centralized_rate_corner(2, p), rel=1e-12)
