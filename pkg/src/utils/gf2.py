"""
GF(2) 线性代数模块

矩阵按行打包为 uint64 字（LSB 优先，第 j 列在第 j // 64 个字的第 j % 64 位）。
消元按批进行：形状 (B, R, W) 的数组表示 B 个独立的 R 行矩阵，
每一列的主元选择与行异或对所有问题同时向量化完成。
"""

from typing import Tuple

import numpy as np

WORD_BITS = 64
_ONE = np.uint64(1)
_ZERO = np.uint64(0)


def words_for(n_cols: int) -> int:
    """n_cols 列打包后需要的字数（至少 1）"""
    return max(1, (n_cols + WORD_BITS - 1) // WORD_BITS)


def pack_rows(bits: np.ndarray, n_words: int = 0) -> np.ndarray:
    """
    将 0/1 矩阵沿最后一维打包

    Args:
        bits: 形状 (..., n) 的 0/1 数组
        n_words: 目标字数，0 表示按列数自动计算

    Returns:
        np.ndarray: 形状 (..., n_words) 的 uint64 数组
    """
    bits = np.asarray(bits, dtype=np.uint8)
    n = bits.shape[-1]
    n_words = n_words or words_for(n)
    padded = np.zeros(bits.shape[:-1] + (n_words * WORD_BITS,), dtype=np.uint8)
    padded[..., :n] = bits
    packed = np.packbits(padded, axis=-1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64)


def unpack_rows(words: np.ndarray, n_cols: int) -> np.ndarray:
    """pack_rows 的逆操作"""
    raw = np.ascontiguousarray(words.astype("<u8")).view(np.uint8)
    return np.unpackbits(raw, axis=-1, count=n_cols, bitorder="little")


def column_bits(packed: np.ndarray, col: int) -> np.ndarray:
    """取出打包矩阵第 col 列（对最后一维）"""
    word, shift = divmod(col, WORD_BITS)
    return (packed[..., word] >> np.uint64(shift)) & _ONE


def batched_eliminate(matrices: np.ndarray, n_cols: int,
                      reduce_above: bool = True) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    批量高斯消元

    按列从左到右选主元，主元取当前尚未使用的行中序号最小者。
    reduce_above=True 时做完整的 Gauss-Jordan 约化（可直接读出解），
    否则只向下消元（足以确定秩与主元列）。

    Args:
        matrices: 形状 (B, R, W) 的打包矩阵
        n_cols: 参与消元的列数（其余列视为增广列）
        reduce_above: 是否同时消去主元上方的行

    Returns:
        Tuple[np.ndarray, np.ndarray, np.ndarray]:
            (约化后的矩阵, 每列的主元行号 (B, n_cols)，无主元为 -1, 秩 (B,))
    """
    A = np.array(matrices, dtype=np.uint64, copy=True)
    if A.ndim == 2:
        A = A[None]
    B, R, _ = A.shape
    rank = np.zeros(B, dtype=np.int64)
    pivot_row_of_col = np.full((B, n_cols), -1, dtype=np.int64)
    if R == 0 or B == 0:
        return A, pivot_row_of_col, rank

    row_ids = np.arange(R)
    for col in range(n_cols):
        word, shift = divmod(col, WORD_BITS)
        shift = np.uint64(shift)
        column = (A[:, :, word] >> shift) & _ONE
        eligible = (column == _ONE) & (row_ids[None, :] >= rank[:, None])
        has_pivot = eligible.any(axis=1)
        if not has_pivot.any():
            continue
        active = np.flatnonzero(has_pivot)
        src = np.argmax(eligible[active], axis=1)
        dst = rank[active]

        # 把主元行换到第 rank 行
        pivot_rows = A[active, src].copy()
        A[active, src] = A[active, dst]
        A[active, dst] = pivot_rows

        sub = A[active]
        hits = (sub[:, :, word] >> shift) & _ONE
        if reduce_above:
            hits[np.arange(active.size), dst] = _ZERO
        else:
            hits = np.where(row_ids[None, :] > dst[:, None], hits, _ZERO)
        sub ^= hits[:, :, None] * pivot_rows[:, None, :]
        A[active] = sub

        pivot_row_of_col[active, col] = dst
        rank[active] += 1
        if (rank >= R).all():
            break
    return A, pivot_row_of_col, rank


def gf2_matvec(matrix: np.ndarray, vector: np.ndarray) -> np.ndarray:
    """GF(2) 上的矩阵-向量乘法，输入输出均为 0/1 uint8"""
    if matrix.shape[0] == 0:
        return np.zeros(0, dtype=np.uint8)
    if matrix.shape[1] == 0:
        return np.zeros(matrix.shape[0], dtype=np.uint8)
    product = matrix.astype(np.int64) @ vector.astype(np.int64)
    return (product & 1).astype(np.uint8)


def gf2_matmul(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """
    GF(2) 上的矩阵乘法，输入输出均为 0/1 uint8

    内积按 float32 计算，内维不超过 2^24 时结果精确。
    """
    if left.shape[0] == 0 or right.shape[1] == 0 or left.shape[1] == 0:
        return np.zeros((left.shape[0], right.shape[1]), dtype=np.uint8)
    product = left.astype(np.float32) @ right.astype(np.float32)
    return (product.astype(np.int64) & 1).astype(np.uint8)


def affine_solution(reduced: np.ndarray, pivot_rows: np.ndarray, rank: int,
                    n_cols: int, rhs_col: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    从单个问题的 Gauss-Jordan 约化结果读出通解 x = x0 + E·y

    调用方需先确认第 rank 行之后的增广列全为 0（方程组相容）。

    Args:
        reduced: 约化后的打包矩阵 (R, W)
        pivot_rows: 前 n_cols 列的主元行号，无主元为 -1
        rank: 秩
        n_cols: 未知数个数
        rhs_col: 增广列所在的列号

    Returns:
        Tuple[np.ndarray, np.ndarray]: 特解 x0（自由变量取 0）与形状 (n_cols, 自由变量数) 的零空间基 E
    """
    bits = unpack_rows(reduced[:rank], rhs_col + 1)
    pivot_rows = np.asarray(pivot_rows[:n_cols])
    pivot_cols = np.flatnonzero(pivot_rows >= 0)
    free_cols = np.flatnonzero(pivot_rows < 0)
    rows = pivot_rows[pivot_cols]

    offset = np.zeros(n_cols, dtype=np.uint8)
    basis = np.zeros((n_cols, free_cols.size), dtype=np.uint8)
    offset[pivot_cols] = bits[rows, rhs_col]
    basis[pivot_cols] = bits[rows][:, free_cols]
    basis[free_cols, np.arange(free_cols.size)] = 1
    return offset, basis
