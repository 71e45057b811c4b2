"""
异常定义模块

所有业务异常都继承自 CCLabError，CLI 根据异常类型映射退出码。
"""

from typing import Any, Optional


class CCLabError(Exception):
    """系统所有业务异常的基类"""


class InvalidParams(CCLabError, ValueError):
    """系统参数 (K, N, M, F) 违反类型约束"""


class OutOfRange(CCLabError, ValueError):
    """函数参数超出定义域"""


class DegenerateRatio(CCLabError):
    """M = N 时两种速率均为 0，比值无定义"""


class NonCornerMemory(CCLabError):
    """KM/N 不是整数，集中式方案无法直接放置"""


class IndivisibleFile(CCLabError):
    """文件长度不能被子文件个数整除"""


class DecodeFailure(CCLabError):
    """用户无法恢复其请求的文件（方案实现错误）"""


class UsageError(CCLabError):
    """命令行参数错误"""


class BoundViolation(CCLabError):
    """
    数值验证失败

    Attributes:
        params: 出错的参数点，例如 (K, N, M)
        detail: 失败的检查描述
    """

    def __init__(self, detail: str, params: Optional[Any] = None):
        self.detail = detail
        self.params = params
        message = detail if params is None else f"{detail} @ {params}"
        super().__init__(message)
