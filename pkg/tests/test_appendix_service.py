"""
测试附录函数服务
"""
import pytest
from hypothesis import given, strategies as st

from src.services.appendix_service import L3_ARGMAX, L3_MAX, REFERENCE_VALUES, AppendixService
from src.utils.exceptions import OutOfRange


@pytest.mark.parametrize("name,args,target,tolerance", REFERENCE_VALUES)
def test_reference_values(name, args, target, tolerance):
    assert abs(AppendixService.evaluate(name, args) - target) <= tolerance


def test_max_l3():
    """l_3 的最大值 (1001 + 20√10)/729，最大值点 (8 - √10)/3"""
    x_star, l_star = AppendixService.max_l(3)
    assert abs(l_star - L3_MAX) <= 1e-6
    assert abs(x_star - L3_ARGMAX) <= 1e-4


def test_reference_evaluations_all_match():
    results = AppendixService.reference_evaluations()
    assert len(results) == len(REFERENCE_VALUES) + 2
    assert all(r.matches for r in results)


def test_l_at_right_end():
    """l_n(n) = (1+n)/n"""
    for n in (3, 7, 50):
        assert AppendixService.l(n, n) == pytest.approx((1 + n) / n, rel=1e-12)


def test_f_boundary_values():
    assert AppendixService.f(0.0, 4, 4) == pytest.approx(0.0, abs=1e-15)
    value = AppendixService.f(0.999999, 5, 1)
    assert abs(value) < 1e-5
    assert value >= -1e-12


def test_f_above_g():
    assert AppendixService.f(0.5, 4, 2) >= AppendixService.g(4, 2)


def test_bound_b1_at_two_users():
    """K = 2 时 B1 恒为 1"""
    for theta in (0.0, 0.3, 0.9):
        assert AppendixService.bound_B1(2, theta) == pytest.approx(1.0)


def test_bound_b2_array_matches_scalar():
    for K in (2, 5, 30):
        for theta in (0.0, 0.25, 0.75):
            assert float(AppendixService.bound_B2_array(K, theta)) == pytest.approx(
                AppendixService.bound_B2(K, theta), rel=1e-12)


@pytest.mark.parametrize("call", [
    lambda: AppendixService.f(1.0, 3, 1),
    lambda: AppendixService.f(0.5, 2, 3),
    lambda: AppendixService.g(3, 1),
    lambda: AppendixService.h(3, 3),
    lambda: AppendixService.l(2, 1.0),
    lambda: AppendixService.l(3, 0.0),
    lambda: AppendixService.l(3, 3.5),
    lambda: AppendixService.bound_B1(1, 0.5),
    lambda: AppendixService.bound_B2(3, 1.0),
    lambda: AppendixService.evaluate("unknown", (1,)),
])
def test_domain_errors(call):
    with pytest.raises(OutOfRange):
        call()


@given(st.integers(min_value=3, max_value=200), st.floats(min_value=1e-6, max_value=1.0))
def test_l_below_one_and_a_half(n, fraction):
    assert AppendixService.l(n, fraction * n) < 1.5
