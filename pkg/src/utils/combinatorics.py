"""
组合枚举模块

用户子集统一用位掩码表示：用户 k（从 1 开始）对应第 k-1 位。
同样大小的子集按余字典序（colex）排列，这与掩码整数的升序一致。
"""

from functools import lru_cache
from itertools import combinations
from math import comb, lcm
from typing import Iterable, Tuple

from src.utils.exceptions import InvalidParams

__all__ = [
    "comb",
    "lcm",
    "subset_mask",
    "mask_members",
    "subsets_of_size",
    "check_mask_width",
    "format_mask",
]

# 传输记录中的子集掩码为 u64
MAX_MASK_USERS = 64


def subset_mask(users: Iterable[int]) -> int:
    """将用户集合（1..K）转换为位掩码"""
    mask = 0
    for user in users:
        if user < 1:
            raise ValueError(f"用户编号必须从 1 开始: {user}")
        mask |= 1 << (user - 1)
    return mask


def mask_members(mask: int) -> Tuple[int, ...]:
    """返回掩码中的用户编号（升序）"""
    members = []
    user = 1
    while mask:
        if mask & 1:
            members.append(user)
        mask >>= 1
        user += 1
    return tuple(members)


@lru_cache(maxsize=None)
def subsets_of_size(users: int, size: int) -> Tuple[int, ...]:
    """
    枚举 {1..users} 中所有大小为 size 的子集

    Args:
        users: 用户总数 K
        size: 子集大小 t

    Returns:
        Tuple[int, ...]: 按余字典序排列的子集掩码
    """
    if size < 0 or size > users:
        return tuple()
    masks = [subset_mask(c) for c in combinations(range(1, users + 1), size)]
    return tuple(sorted(masks))


def format_mask(mask: int) -> str:
    """以 {1,3} 的形式显示子集"""
    return "{" + ",".join(str(u) for u in mask_members(mask)) + "}"


def check_mask_width(users: int) -> None:
    """
    检查用户数不超过掩码宽度

    Raises:
        InvalidParams: K > 64
    """
    if users > MAX_MASK_USERS:
        raise InvalidParams(f"比特级仿真最多支持 {MAX_MASK_USERS} 个用户，当前 K={users}")
