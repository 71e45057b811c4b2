"""
测试速率比分析服务

验证网格扫描、逐点分段证书、上下界可达性、K → ∞ 的极限与各项网格检查。
"""
import pytest

from src.models.reports import PiecewiseCase
from src.models.system_params import SystemParams, Tolerances
from src.services.gap_service import GapService
from src.services.rate_service import RateService
from src.utils.exceptions import BoundViolation, OutOfRange


def test_memory_grid_interior_points():
    grid = GapService.memory_grid(4, 3)
    assert list(grid) == [1.0, 2.0, 3.0]


def test_small_sweep_argmax():
    """K ∈ {2,3}、N ∈ {1,2}、M ∈ {0.5, 1.0, 1.5}：最大比值 1.5 出现在 (2, 2, 1.0)"""
    sweep = GapService.sweep_gap(users=[2, 3], files=[1, 2], memory_values=[0.5, 1.0, 1.5], threads=1)
    summary = sweep.summary
    assert summary.points == 2 * (1 + 3)
    assert summary.argmax == (2, 2, 1.0)
    assert summary.max_ratio == pytest.approx(1.5, abs=1e-12)
    assert summary.min_ratio >= 1 - 1e-9


def test_sweep_rejects_out_of_range():
    with pytest.raises(OutOfRange):
        GapService.sweep_gap(users=[1, 2], files=[1])


def test_full_default_sweep():
    """默认网格：比值在 [1, 1.5] 内，达到 1.5 的恰为 K = 2、M = N/2 的 49 个点"""
    summary = GapService.sweep_gap().summary
    assert summary.points == 199 * 50 * 99
    assert 1 - 1e-9 <= summary.min_ratio
    assert summary.max_ratio <= 1.5 + 1e-9
    assert len(summary.tight_upper_points) == 49
    assert all(k == 2 and m == n / 2 for k, n, m in summary.tight_upper_points)
    assert summary.tight_lower_count > 0
    assert summary.describe().startswith("max ratio 1.500000 at K=2")
    assert summary.describe().endswith("min ratio 1.000000")


def test_sweep_independent_of_threads():
    kwargs = dict(users=range(2, 30), files=range(1, 8), memory_points=19)
    single = GapService.sweep_gap(threads=1, **kwargs).summary
    many = GapService.sweep_gap(threads=4, **kwargs).summary
    assert single == many


def test_reports_carry_tight_flags():
    sweep = GapService.sweep_gap(users=[2, 10], files=[2], memory_values=[0.4, 1.0], collect_reports=True,
                                 threads=1)
    by_point = {r.params: r for r in sweep.reports}
    assert by_point[(2, 2, 1.0)].tight_upper
    assert by_point[(10, 2, 0.4)].case == PiecewiseCase.C
    assert by_point[(10, 2, 0.4)].tight_lower
    assert by_point[(10, 2, 0.4)].ratio == pytest.approx(1.0, abs=1e-9)


def test_k2_closed_form():
    assert GapService.k2_ratio_closed_form(1, 0.3, 1) == 1.0
    assert GapService.k2_ratio_closed_form(3, 0.0, 1) == pytest.approx(1.5)
    assert GapService.k2_ratio_closed_form(3, 0.5, 2) == pytest.approx(1.25)
    for M in (0.3, 1.1, 2.9):
        p = SystemParams(2, 3, M)
        g = p.geometry
        assert RateService.gap_ratio(p) == pytest.approx(
            GapService.k2_ratio_closed_form(3, g.theta, g.s), rel=1e-12)


def test_tight_upper_points():
    points = GapService.check_tight_upper(range(2, 11))
    assert points[0] == (2, 2, 1.0)
    assert len(points) == 9


def test_tight_lower_requires_case_c():
    assert GapService.check_tight_lower(SystemParams(10, 2, 0.4)) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(OutOfRange):
        GapService.check_tight_lower(SystemParams(2, 2, 1))


def test_limit_users_sequence():
    assert GapService.limit_users(100) == [2, 5, 10, 20, 50, 100]


def test_limit_large_memory():
    points = GapService.limit_check(4, 2.0, [1000], epsilon=0.01)
    assert abs(points[0].ratio - 1) <= 0.01


def test_limit_small_memory_is_exact():
    """N=4 M=0.5：K ≥ 17 时 R_D 与 R_C 相等"""
    points = GapService.limit_check(4, 0.5, GapService.limit_users(100000), epsilon=1e-3)
    assert points[-1].ratio == pytest.approx(1.0, abs=1e-12)


def test_limit_starts_at_upper_and_decreases():
    points = GapService.limit_check(2, 1.0, GapService.limit_users(100000), epsilon=1e-3)
    assert points[0].ratio == pytest.approx(1.5, abs=1e-12)
    assert points[-1].ratio < points[0].ratio


def test_limit_check_uses_given_tolerances():
    """容差随参数传入，不影响之后使用默认容差的调用"""
    inverted = Tolerances(ratio_slack=-1.0)
    with pytest.raises(BoundViolation):
        GapService.limit_check(4, 2.0, [1000], epsilon=0.01, tolerances=inverted)
    points = GapService.limit_check(4, 2.0, [1000], epsilon=0.01)
    assert abs(points[0].ratio - 1) <= 0.01


def test_limit_epsilon_failure():
    with pytest.raises(BoundViolation):
        GapService.limit_check(4, 2.0, [2, 5], epsilon=1e-6)


def test_limit_rejects_full_memory():
    with pytest.raises(OutOfRange):
        GapService.limit_check(2, 2.0, [2])


def test_lemma_grid():
    assert GapService.check_lemma_grid(k_max=50, q_points=20) == 50 * 20


def test_l_identity():
    assert GapService.check_l_identity(samples=200) <= 1e-12


def test_appendix_grids():
    assert GapService.check_f_grid(n_max=10, theta_step=1e-2) >= -1e-12
    assert GapService.check_fgh_chain(n_max=10, theta_step=1e-2) == sum(n - 2 for n in range(3, 11))
    assert GapService.check_l_grid(range(3, 20), step=1e-2) < 1.5
    GapService.check_bound_monotonicity(k_max=20, theta_step=1e-2)


def test_rate_shapes():
    """包括 K ≥ 2N、R_C 在分支切换处出现拐点的组合"""
    assert GapService.check_rate_shapes([2, 3, 4, 10], [1, 2, 3], points=200) == 12


@pytest.mark.slow
def test_full_appendix_grids():
    assert GapService.check_f_grid() >= -1e-12
    assert GapService.check_fgh_chain() > 0
    assert GapService.check_l_grid() < 1.5
    GapService.check_bound_monotonicity()
    GapService.check_lemma_grid()
