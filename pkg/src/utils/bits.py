"""
比特串工具模块

比特串统一表示为 dtype=uint8、取值 0/1 的一维 numpy 数组。
"""

from typing import Sequence

import numpy as np

BIT_DTYPE = np.uint8


def empty_bits() -> np.ndarray:
    return np.zeros(0, dtype=BIT_DTYPE)


def random_bits(rng: np.random.Generator, length: int) -> np.ndarray:
    """用给定随机数发生器生成 length 个随机比特"""
    return rng.integers(0, 2, size=length, dtype=BIT_DTYPE)


def xor_padded(operands: Sequence[np.ndarray]) -> np.ndarray:
    """
    对若干比特串做按位异或，较短的操作数先补零到最长长度

    Args:
        operands: 参与异或的比特串

    Returns:
        np.ndarray: 长度为最长操作数长度的异或结果
    """
    length = max((op.size for op in operands), default=0)
    result = np.zeros(length, dtype=BIT_DTYPE)
    for op in operands:
        result[:op.size] ^= op
    return result


def pack_bits(bits: np.ndarray) -> bytes:
    """按 LSB 优先打包到字节边界"""
    return np.packbits(bits.astype(BIT_DTYPE), bitorder="little").tobytes()


def unpack_bits(data: bytes, length: int) -> np.ndarray:
    """pack_bits 的逆操作"""
    raw = np.frombuffer(data, dtype=np.uint8)
    return np.unpackbits(raw, count=length, bitorder="little").astype(BIT_DTYPE)


def packed_size(length: int) -> int:
    """length 位打包后的字节数"""
    return (length + 7) // 8
