"""
参数管理服务模块

提供运行参数的默认值、解析和验证功能，包括取值范围、请求策略、
容差覆盖和并发数的处理。
"""

import math
import os
from typing import Dict, Iterable, List, Optional, Tuple, Union

from src.models.library import DemandPolicy
from src.utils.exceptions import UsageError
from src.utils.logger import setup_logger

logger = setup_logger(__name__)

Number = Union[int, float]


class ParameterService:
    """
    参数管理服务类

    提供参数管理相关功能，包括：
    - 默认参数管理
    - 取值范围 `a:b:step` 的验证与展开
    - 请求策略解析
    - 容差覆盖与并发数

    Attributes:
        _TOLERANCES: 默认容差
        _DEFAULTS: 其余默认运行参数
        _DEFAULT_FILE_BITS: 各方案的默认文件长度 F
    """

    _TOLERANCES = {
        'ratio_slack': 1e-9,
        'formula_equality': 1e-12,
        'snap': 1e-12,
        'mc_relative': 0.05,
    }
    _DEFAULTS = {
        'seed': 0,
        'seeds': 32,
    }
    _DEFAULT_FILE_BITS = {
        'centralized': 2520,
        'decentralized': 4096,
    }
    # 吸附容差在模块导入时固定，不接受覆盖
    _OVERRIDABLE = ('ratio_slack', 'formula_equality', 'mc_relative')

    SCHEMES = ('centralized', 'decentralized')
    DEMAND_POLICIES = ('exhaustive', 'distinct', 'custom')

    @classmethod
    def get_tolerances(cls) -> Dict[str, float]:
        return cls._TOLERANCES.copy()

    @classmethod
    def get_default(cls, name: str):
        return cls._DEFAULTS[name]

    @classmethod
    def default_file_bits(cls, scheme: str) -> int:
        return cls._DEFAULT_FILE_BITS[scheme]

    # ------------------------------------------------------------------
    # 取值范围
    # ------------------------------------------------------------------
    @staticmethod
    def _to_number(text: str, integer: bool) -> Number:
        value = float(text)
        if integer:
            if not value.is_integer():
                raise ValueError(f"{text} 不是整数")
            return int(value)
        return value

    @classmethod
    def validate_range(cls, text: str, integer: bool = False) -> Tuple[bool, str]:
        """
        验证取值范围

        支持单个数值或 `a:b:step`（含端点 b）。

        Args:
            text: 输入文本
            integer: 是否要求整数

        Returns:
            Tuple[bool, str]: (是否有效, 错误信息)
        """
        logger.debug(f"验证取值范围: {text}")
        if not text or not text.strip():
            return False, "取值范围不能为空"

        parts = text.strip().split(':')
        if len(parts) not in (1, 3):
            return False, f"取值范围格式应为数值或 a:b:step: {text}"
        try:
            numbers = [cls._to_number(p, integer) for p in parts]
        except ValueError:
            kind = "整数" if integer else "数值"
            return False, f"取值范围包含非{kind}: {text}"
        if any(not math.isfinite(n) for n in numbers):
            return False, f"取值范围包含非有限值: {text}"

        if len(numbers) == 3:
            start, stop, step = numbers
            if step <= 0:
                return False, f"步长必须为正: {text}"
            if stop < start:
                return False, f"取值范围为空（b < a）: {text}"
        return True, ""

    @classmethod
    def parse_range(cls, text: str, integer: bool = False) -> List[Number]:
        """
        展开取值范围

        浮点范围按 a + i·step 生成并保留 12 位小数，终点容许 1e-9·step 的舍入。

        Raises:
            UsageError: 范围无效
        """
        is_valid, error_msg = cls.validate_range(text, integer)
        if not is_valid:
            logger.warning(f"取值范围验证失败: {error_msg}")
            raise UsageError(error_msg)

        parts = text.strip().split(':')
        if len(parts) == 1:
            return [cls._to_number(parts[0], integer)]

        start, stop, step = (cls._to_number(p, integer) for p in parts)
        if integer:
            return list(range(start, stop + 1, step))
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(count)]

    # ------------------------------------------------------------------
    # 请求策略
    # ------------------------------------------------------------------
    @classmethod
    def validate_demand_policy(cls, text: str) -> Tuple[bool, str]:
        """
        验证请求策略：exhaustive | distinct | custom=1,2,3

        Returns:
            Tuple[bool, str]: (是否有效, 错误信息)
        """
        if text in ('exhaustive', 'distinct'):
            return True, ""
        if not text.startswith('custom='):
            return False, f"未知的请求策略: {text}（可选 {', '.join(cls.DEMAND_POLICIES)}）"
        items = text[len('custom='):].split(',')
        if not all(item.strip().isdigit() and int(item) >= 1 for item in items):
            return False, f"自定义请求必须是逗号分隔的正整数: {text}"
        return True, ""

    @classmethod
    def parse_demand_policy(cls, text: str) -> DemandPolicy:
        """
        解析请求策略

        Raises:
            UsageError: 策略无效
        """
        is_valid, error_msg = cls.validate_demand_policy(text)
        if not is_valid:
            logger.warning(f"请求策略验证失败: {error_msg}")
            raise UsageError(error_msg)
        if text.startswith('custom='):
            return DemandPolicy('custom', tuple(int(item) for item in text[len('custom='):].split(',')))
        return DemandPolicy(text)

    # ------------------------------------------------------------------
    # 容差与并发
    # ------------------------------------------------------------------
    @classmethod
    def parse_tolerances(cls, items: Iterable[str]) -> Dict[str, float]:
        """
        解析容差覆盖，每项形如 NAME=VALUE

        Returns:
            Dict[str, float]: 合并默认值后的容差

        Raises:
            UsageError: 名称未知或数值无效
        """
        tolerances = cls.get_tolerances()
        for item in items:
            name, sep, raw = item.partition('=')
            name = name.strip()
            if not sep or name not in cls._OVERRIDABLE:
                raise UsageError(f"容差覆盖格式应为 NAME=VALUE，NAME 取 {', '.join(cls._OVERRIDABLE)}: {item}")
            try:
                value = float(raw)
            except ValueError:
                raise UsageError(f"容差必须为数值: {item}")
            if not value > 0:
                raise UsageError(f"容差必须为正: {item}")
            tolerances[name] = value
        return tolerances

    @staticmethod
    def thread_count(environ: Optional[Dict[str, str]] = None) -> int:
        """
        并发数：CCLAB_THREADS，缺省或非法时取 min(8, CPU 数)，1 表示顺序执行
        """
        environ = os.environ if environ is None else environ
        fallback = min(8, os.cpu_count() or 1)
        raw = environ.get('CCLAB_THREADS', '')
        try:
            value = int(raw)
        except ValueError:
            if raw:
                logger.warning(f"CCLAB_THREADS 无效: {raw!r}，使用 {fallback}")
            return fallback
        if value < 1:
            logger.warning(f"CCLAB_THREADS 必须 ≥ 1: {value}，使用 {fallback}")
            return fallback
        return value

    @staticmethod
    def parse_limit(text: str) -> Dict[str, float]:
        """
        解析极限检查参数，例如 "N=4 M=2 Kmax=100000 eps=0.001"

        Returns:
            Dict[str, float]: 包含 N, M, Kmax，可选 eps

        Raises:
            UsageError: 缺少字段或数值无效
        """
        values: Dict[str, float] = {}
        for token in text.replace(',', ' ').split():
            key, sep, raw = token.partition('=')
            if not sep or key not in ('N', 'M', 'Kmax', 'eps'):
                raise UsageError(f"无法识别的极限参数: {token}")
            try:
                values[key] = float(raw)
            except ValueError:
                raise UsageError(f"极限参数必须为数值: {token}")
        missing = {'N', 'M', 'Kmax'} - set(values)
        if missing:
            raise UsageError(f"极限参数缺少: {', '.join(sorted(missing))}")
        if not values['N'].is_integer() or not values['Kmax'].is_integer() or values['Kmax'] < 2:
            raise UsageError(f"N 与 Kmax 必须为整数且 Kmax ≥ 2: {text}")
        values['N'] = int(values['N'])
        values['Kmax'] = int(values['Kmax'])
        return values
