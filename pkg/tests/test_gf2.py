"""
测试 GF(2) 线性代数与比特串工具
"""
import numpy as np

from src.utils.bits import pack_bits, unpack_bits, xor_padded
from src.utils.gf2 import (affine_solution, batched_eliminate, column_bits, gf2_matmul, gf2_matvec, pack_rows,
                           unpack_rows, words_for)


def rank_of(bits):
    """辅助函数，单个 0/1 矩阵的秩"""
    bits = np.asarray(bits, dtype=np.uint8)
    _, _, rank = batched_eliminate(pack_rows(bits)[None], bits.shape[1], reduce_above=False)
    return int(rank[0])


def test_pack_unpack_rows_across_word_boundary():
    rng = np.random.default_rng(0)
    bits = rng.integers(0, 2, size=(5, 130), dtype=np.uint8)
    packed = pack_rows(bits)
    assert packed.shape == (5, words_for(130)) == (5, 3)
    assert np.array_equal(unpack_rows(packed, 130), bits)
    assert np.array_equal(column_bits(packed, 64), bits[:, 64])


def test_rank_of_known_matrices():
    assert rank_of(np.eye(70, dtype=np.uint8)) == 70
    dependent = np.array([[1, 0, 1], [0, 1, 1], [1, 1, 0]], dtype=np.uint8)
    assert rank_of(dependent) == 2
    _, _, rank = batched_eliminate(np.zeros((1, 0, 1), dtype=np.uint64), 4)
    assert rank[0] == 0


def test_matvec_and_matmul():
    matrix = np.array([[1, 1, 0], [0, 1, 1]], dtype=np.uint8)
    vector = np.array([1, 1, 1], dtype=np.uint8)
    assert list(gf2_matvec(matrix, vector)) == [0, 0]
    assert gf2_matvec(np.zeros((0, 3), dtype=np.uint8), vector).size == 0

    rng = np.random.default_rng(2)
    left = rng.integers(0, 2, size=(7, 300), dtype=np.uint8)
    right = rng.integers(0, 2, size=(300, 5), dtype=np.uint8)
    expected = (left.astype(np.int64) @ right.astype(np.int64)) % 2
    assert np.array_equal(gf2_matmul(left, right), expected)
    assert gf2_matmul(left, np.zeros((300, 0), dtype=np.uint8)).shape == (7, 0)


def test_batched_elimination_solves_each_problem():
    """批内每个满秩方程组的 Gauss-Jordan 解与真实解一致"""
    rng = np.random.default_rng(1)
    u, rows = 40, 60
    problems, solutions = [], []
    while len(problems) < 6:
        matrix = rng.integers(0, 2, size=(rows, u), dtype=np.uint8)
        if rank_of(matrix) < u:
            continue
        x = rng.integers(0, 2, size=u, dtype=np.uint8)
        augmented = np.hstack([matrix, gf2_matvec(matrix, x)[:, None]])
        problems.append(pack_rows(augmented))
        solutions.append(x)
    reduced, pivots, rank = batched_eliminate(np.stack(problems), u, reduce_above=True)
    assert (rank == u).all()
    for b, x in enumerate(solutions):
        recovered = column_bits(reduced[b, pivots[b]], u)
        assert np.array_equal(recovered.astype(np.uint8), x)


def test_affine_solution_of_underdetermined_system():
    """欠定方程组的通解 x0 ⊕ E·y 对任意 y 都满足方程，且 E 的列数等于 u - rank"""
    rng = np.random.default_rng(3)
    u, rows = 50, 42
    matrix = rng.integers(0, 2, size=(rows, u), dtype=np.uint8)
    truth = rng.integers(0, 2, size=u, dtype=np.uint8)
    augmented = np.hstack([matrix, gf2_matvec(matrix, truth)[:, None]])
    reduced, pivots, rank = batched_eliminate(pack_rows(augmented)[None], u, reduce_above=True)
    offset, basis = affine_solution(reduced[0], pivots[0], int(rank[0]), u, u)

    assert basis.shape == (u, u - int(rank[0]))
    assert rank_of(basis.T) == basis.shape[1]
    rhs = gf2_matvec(matrix, truth)
    for _ in range(5):
        y = rng.integers(0, 2, size=basis.shape[1], dtype=np.uint8)
        x = offset ^ gf2_matvec(basis, y)
        assert np.array_equal(gf2_matvec(matrix, x), rhs)


def test_affine_solution_without_equations():
    """没有方程时特解为 0，零空间基为单位阵"""
    reduced = np.zeros((0, 1), dtype=np.uint64)
    offset, basis = affine_solution(reduced, np.full(3, -1), 0, 3, 3)
    assert list(offset) == [0, 0, 0]
    assert np.array_equal(basis, np.eye(3, dtype=np.uint8))


def test_forward_elimination_reports_pivot_columns():
    matrix = np.array([[0, 1, 1], [0, 1, 0], [0, 0, 1]], dtype=np.uint8)
    _, pivots, rank = batched_eliminate(pack_rows(matrix)[None], 3, reduce_above=False)
    assert rank[0] == 2
    assert list(pivots[0]) == [-1, 0, 1]


def test_xor_padded():
    a = np.array([1, 0, 1], dtype=np.uint8)
    b = np.array([1, 1], dtype=np.uint8)
    assert list(xor_padded([a, b])) == [0, 1, 1]
    assert xor_padded([]).size == 0


def test_pack_bits_lsb_first():
    bits = np.array([1, 0, 0, 0, 0, 0, 0, 0, 1], dtype=np.uint8)
    data = pack_bits(bits)
    assert data == bytes([1, 1])
    assert np.array_equal(unpack_bits(data, 9), bits)
