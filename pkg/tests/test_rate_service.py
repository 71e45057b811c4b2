"""
测试速率模型服务

验证未编码、集中式、去中心化速率的闭式求值，分段形式的判定，
分支切换阈值以及引理辅助函数之间的不等式。
"""
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from src.models.reports import PiecewiseCase
from src.models.system_params import MemoryGeometry, SystemParams, Tolerances, snap_integer
from src.services.rate_service import RateService, power_complement
from src.utils.exceptions import BoundViolation, DegenerateRatio, InvalidParams, OutOfRange


def params(K: int, N: int, M: float, F: int = 1) -> SystemParams:
    """辅助函数，构造系统参数"""
    return SystemParams(K, N, M, F)


def test_uncoded_rate():
    """K=3 N=3 M=1 时未编码速率为 2"""
    assert RateService.uncoded_rate(params(3, 3, 1)) == pytest.approx(2.0, abs=1e-12)


def test_uncoded_rate_with_fewer_files_than_users():
    """N < K 时 min{1, N/K} 取 N/K，速率为 N - M"""
    assert RateService.uncoded_rate(params(10, 2, 0.4)) == pytest.approx(1.6, abs=1e-12)


def test_centralized_rate_at_corner():
    """K=3 N=3 M=1 位于角点 s=1，速率为 2·min{1/2, 1} = 1"""
    assert RateService.centralized_rate_corner(1, params(3, 3, 1)) == 1.0
    assert RateService.centralized_rate(params(3, 3, 1)) == 1.0


def test_centralized_rate_corner_out_of_range():
    """角点编号超出 0..K 时抛出 OutOfRange"""
    with pytest.raises(OutOfRange):
        RateService.centralized_rate_corner(4, params(3, 3, 1))
    with pytest.raises(OutOfRange):
        RateService.centralized_rate_corner(-1, params(3, 3, 1))


def test_decentralized_rate_matches_hand_value():
    """K=3 N=3 M=1：2·(1 - (2/3)^3) = 38/27"""
    assert RateService.decentralized_rate(params(3, 3, 1)) == pytest.approx(38 / 27, rel=1e-12)


def test_rates_vanish_at_full_memory():
    """M = N 时所有速率为 0"""
    p = params(4, 3, 3)
    assert RateService.uncoded_rate(p) == 0
    assert RateService.centralized_rate(p) == 0
    assert RateService.decentralized_rate(p) == 0


def test_gap_ratio_upper_tightness():
    """K=2 N=2 M=1 时比值恰为 1.5"""
    assert abs(RateService.gap_ratio(params(2, 2, 1)) - 1.5) <= 1e-12


def test_gap_ratio_degenerate_at_full_memory():
    """M = N 时比值无定义"""
    with pytest.raises(DegenerateRatio):
        RateService.gap_ratio(params(2, 2, 2))


def test_piecewise_case_c_equals_n_minus_m():
    """K=10 N=2 M=0.4：s=2 < K/N - 1 = 4，R_C = N - M 且比值为 1"""
    p = params(10, 2, 0.4)
    value, case = RateService.centralized_rate_piecewise(p)
    assert case == PiecewiseCase.C
    assert value == pytest.approx(1.6, abs=1e-12)
    assert RateService.gap_ratio(p) == pytest.approx(1.0, abs=1e-9)


def test_piecewise_case_uses_real_ratio():
    """分段判定使用实数 K/N，不取整"""
    assert RateService.piecewise_case(5, 2, 3) == PiecewiseCase.A      # 3 ≥ 2.5
    assert RateService.piecewise_case(5, 2, 2) == PiecewiseCase.B      # 1.5 ≤ 2 < 2.5
    assert RateService.piecewise_case(9, 2, 3) == PiecewiseCase.C      # 3 < 3.5


def test_interpolation_between_corners():
    """K=2 N=2 M=0.5：两个角点 R(0)=2、R(1)=0.5 的中点 1.25"""
    assert RateService.centralized_rate(params(2, 2, 0.5)) == pytest.approx(1.25, abs=1e-12)


def test_branch_selection():
    """角点处 min 的生效项；相等时取 coded"""
    p = params(10, 2, 0.4)
    assert RateService.centralized_branch(1, p) == "uncoded"
    assert RateService.centralized_branch(4, p) == "coded"
    assert RateService.decentralized_branch(params(3, 3, 1)) == "coded"
    assert RateService.decentralized_branch(params(100, 4, 0.5)) == "uncoded"


def test_large_k_threshold():
    """N=4 M=0.5：集中式阈值 17，去中心化阈值 6"""
    assert RateService.centralized_branch_threshold(4, 0.5) == 17
    assert RateService.decentralized_branch_threshold(4, 0.5) == 6
    assert RateService.large_k_threshold(4, 0.5) == 17


def test_large_k_threshold_requires_small_memory():
    with pytest.raises(OutOfRange):
        RateService.large_k_threshold(4, 1.0)


def test_power_complement_large_exponent():
    """大 n、小 x 时与 exp(n·log1p(-x)) 一致"""
    exact = math.exp(10 ** 6 * math.log1p(-1e-8))
    assert power_complement(1e-8, 10 ** 6) == pytest.approx(exact, rel=1e-12)
    # exp(-n·x) 只到一阶，相对误差约 n·x²/2 = 5e-11
    assert power_complement(1e-8, 10 ** 6) == pytest.approx(math.exp(-0.01), rel=1e-9)
    assert power_complement(0.75, 3) == pytest.approx(0.25 ** 3, rel=1e-15)


def test_lemma_helpers_domain():
    """q ∉ (0, 1] 时抛出 OutOfRange"""
    for fn in (RateService.r_C, RateService.r_tilde_C, RateService.r_D):
        with pytest.raises(OutOfRange):
            fn(0.0, 5)
        with pytest.raises(OutOfRange):
            fn(1.5, 5)


def test_array_versions_match_scalar():
    """向量化版本与标量版本一致"""
    K, N = 7, 3
    M = np.linspace(0.05, 2.95, 59)
    rate_c, case, s, theta = RateService.centralized_rate_array(K, N, M)
    rate_d = RateService.decentralized_rate_array(K, N, M)
    for i, m in enumerate(M):
        p = params(K, N, float(m))
        assert rate_c[i] == pytest.approx(RateService.centralized_rate(p), rel=1e-12, abs=1e-15)
        assert rate_d[i] == pytest.approx(RateService.decentralized_rate(p), rel=1e-12, abs=1e-15)
        assert int(s[i]) == p.geometry.s
        assert case[i] == "ABC".index(RateService.centralized_rate_piecewise(p)[1].value)


def test_invalid_params():
    """违反类型约束时抛出 InvalidParams"""
    with pytest.raises(InvalidParams):
        SystemParams(1, 2, 1)
    with pytest.raises(InvalidParams):
        SystemParams(2, 0, 1)
    with pytest.raises(InvalidParams):
        SystemParams(2, 2, 0)
    with pytest.raises(InvalidParams):
        SystemParams(2, 2, 2.5)


@given(st.integers(min_value=2, max_value=300), st.integers(min_value=1, max_value=60),
       st.integers(min_value=1, max_value=999))
def test_geometry_identity(K, N, j):
    """q = (s - θ)/K，且 θ = 0 当且仅当 KM/N 为整数"""
    M = N * j / 1000
    g = MemoryGeometry.from_memory(K, N, M)
    assert abs(g.q - (g.s - g.theta) / K) <= 1e-12
    assert 1 <= g.s <= K
    assert 0 <= g.theta < 1
    assert (g.theta == 0) == ((K * j) % 1000 == 0)


@given(st.integers(min_value=1, max_value=200), st.floats(min_value=1e-3, max_value=1.0))
def test_lemma_chain(K, q):
    """r_C ≤ r̃_C ≤ r_D"""
    r_c = RateService.r_C(q, K)
    r_tilde = RateService.r_tilde_C(q, K)
    r_d = RateService.r_D(q, K)
    assert r_c <= r_tilde + 1e-9
    assert r_tilde <= r_d + 1e-9


@given(st.integers(min_value=2, max_value=300), st.integers(min_value=1, max_value=60),
       st.integers(min_value=1, max_value=999))
def test_gap_ratio_bounds(K, N, j):
    """1 ≤ R_D/R_C ≤ 1.5"""
    ratio = RateService.gap_ratio(params(K, N, N * j / 1000))
    assert 1 - 1e-9 <= ratio <= 1.5 + 1e-9


def test_snap_integer_is_absolute():
    """|x - round(x)| < 1e-12 时吸附，与 x 的量级无关"""
    assert snap_integer(3 + 1e-13) == 3.0
    assert snap_integer(2.5) == 2.5
    assert snap_integer(1e6 + 1e-9) != 1e6


def test_cached_bits_per_file_snaps_large_products():
    """0.57·10^8 的浮点乘积略小于 57000000，按相对量吸附后不会少取一个比特"""
    assert snap_integer(0.57 * 10 ** 8) != 57000000
    assert SystemParams(2, 1, 0.57, 10 ** 8).cached_bits_per_file() == 57000000
    assert SystemParams(2, 1, 0.57, 100).cached_bits_per_file() == 57


def test_gap_ratio_uses_given_tolerances():
    """K=3 N=3 M=1 的比值 38/27 严格落在区间内；负松弛量使区间为空"""
    p = params(3, 3, 1)
    assert RateService.gap_ratio(p, Tolerances(ratio_slack=0.0)) == pytest.approx(38 / 27, rel=1e-12)
    with pytest.raises(BoundViolation):
        RateService.gap_ratio(p, Tolerances(ratio_slack=-1.0))
