"""
随机数子流模块

所有随机性都从一个主种子派生：每个 (用途, 用户, 文件, ...) 组合得到一个
独立的 SeedSequence 子流，相同种子下结果逐位可复现。
"""

import numpy as np

# 子流标签
LIBRARY_TAG = 0x4C4942      # "LIB"
PLACEMENT_TAG = 0x504C43    # "PLC"
RLC_TAG = 0x726C63          # "rlc"


def _check_seed(seed: int) -> int:
    if seed < 0:
        raise ValueError(f"种子必须为非负整数: {seed}")
    return int(seed)


def library_rng(seed: int, file_index: int) -> np.random.Generator:
    """生成第 file_index 个文件内容的子流"""
    return np.random.default_rng(np.random.SeedSequence([_check_seed(seed), LIBRARY_TAG, file_index]))


def placement_rng(seed: int, user: int, file_index: int) -> np.random.Generator:
    """用户 user 缓存文件 file_index 时使用的子流"""
    return np.random.default_rng(
        np.random.SeedSequence([_check_seed(seed), PLACEMENT_TAG, user, file_index])
    )


def rlc_rng(seed: int, file_index: int, generation: int, batch: int) -> np.random.Generator:
    """随机线性组合系数的子流：(种子, "rlc", 文件, 代, 批次)"""
    return np.random.default_rng(
        np.random.SeedSequence([_check_seed(seed), RLC_TAG, file_index, generation, batch])
    )


def coefficient_seed_id(seed: int, file_index: int, generation: int) -> int:
    """
    系数子流的 64 位标识，写入序列化的传输记录

    接收端用 (种子, 文件, 代) 即可重新生成系数，标识仅用于校验一致性。
    """
    state = np.random.SeedSequence(
        [_check_seed(seed), RLC_TAG, file_index, generation]
    ).generate_state(2, dtype=np.uint32)
    return (int(state[1]) << 32) | int(state[0])
