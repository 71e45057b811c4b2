"""
测试参数服务
"""
from dataclasses import FrozenInstanceError

import pytest

from src.models.system_params import DEFAULT_TOLERANCES, Tolerances
from src.services.parameter_service import ParameterService
from src.utils.exceptions import UsageError


class TestRanges:
    """取值范围解析"""

    def test_single_value(self):
        assert ParameterService.parse_range("3", integer=True) == [3]
        assert ParameterService.parse_range("0.5") == [0.5]

    def test_inclusive_integer_range(self):
        assert ParameterService.parse_range("2:10:4", integer=True) == [2, 6, 10]

    def test_float_range_reaches_end(self):
        assert ParameterService.parse_range("0.1:0.3:0.1") == [0.1, 0.2, 0.3]

    @pytest.mark.parametrize("text,integer", [
        ("", False),
        ("1:2", False),
        ("1.5", True),
        ("a:b:c", False),
        ("1:5:0", True),
        ("5:1:1", True),
        ("inf", False),
    ])
    def test_invalid(self, text, integer):
        is_valid, error_msg = ParameterService.validate_range(text, integer)
        assert not is_valid
        assert error_msg
        with pytest.raises(UsageError):
            ParameterService.parse_range(text, integer)


class TestDemandPolicies:
    """请求策略解析"""

    def test_named_policies(self):
        assert ParameterService.parse_demand_policy("distinct").name == "distinct"
        assert ParameterService.parse_demand_policy("exhaustive").name == "exhaustive"

    def test_custom_policy(self):
        policy = ParameterService.parse_demand_policy("custom=1,2,2")
        assert policy.demands == (1, 2, 2)
        assert str(policy) == "custom=1,2,2"
        assert [v.demands for v in policy.vectors(3, 2)] == [(1, 2, 2)]

    @pytest.mark.parametrize("text", ["random", "custom=", "custom=1,x", "custom=0,1"])
    def test_invalid(self, text):
        with pytest.raises(UsageError):
            ParameterService.parse_demand_policy(text)


def test_tolerance_overrides():
    tolerances = ParameterService.parse_tolerances(["ratio_slack=1e-6"])
    assert tolerances["ratio_slack"] == 1e-6
    assert tolerances["formula_equality"] == 1e-12
    assert ParameterService.get_tolerances()["ratio_slack"] == 1e-9


def test_tolerances_from_overrides():
    """覆盖项构造成不可变的 Tolerances，未给出的取默认值"""
    tolerances = Tolerances.from_mapping(ParameterService.parse_tolerances(["mc_relative=0.1"]))
    assert tolerances.mc_relative == 0.1
    assert tolerances.ratio_slack == DEFAULT_TOLERANCES.ratio_slack
    assert DEFAULT_TOLERANCES.mc_relative == 0.05
    with pytest.raises(FrozenInstanceError):
        tolerances.ratio_slack = 1.0


@pytest.mark.parametrize("item", ["snap=1e-3", "ratio_slack", "ratio_slack=abc", "mc_relative=0"])
def test_tolerance_overrides_invalid(item):
    with pytest.raises(UsageError):
        ParameterService.parse_tolerances([item])


def test_thread_count():
    assert ParameterService.thread_count({"CCLAB_THREADS": "3"}) == 3
    fallback = ParameterService.thread_count({})
    assert 1 <= fallback <= 8
    assert ParameterService.thread_count({"CCLAB_THREADS": "0"}) == fallback
    assert ParameterService.thread_count({"CCLAB_THREADS": "many"}) == fallback


def test_parse_limit():
    values = ParameterService.parse_limit("N=4 M=2 Kmax=100000 eps=0.001")
    assert values == {"N": 4, "M": 2.0, "Kmax": 100000, "eps": 0.001}
    assert isinstance(values["Kmax"], int)


@pytest.mark.parametrize("text", ["N=4 M=2", "N=4.5 M=2 Kmax=10", "N=4 M=2 Kmax=1", "X=1 N=4 M=2 Kmax=10"])
def test_parse_limit_invalid(text):
    with pytest.raises(UsageError):
        ParameterService.parse_limit(text)


def test_default_file_bits():
    assert ParameterService.default_file_bits("centralized") == 2520
    assert ParameterService.default_file_bits("decentralized") == 4096
