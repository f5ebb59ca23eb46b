import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm
from scipy.optimize import linear_sum_assignment

from oracles import eigenvalues_oracle
from shiftcalc.errors import InvalidArgument, NumericFailure
from shiftcalc.matrix_core import (ComplexCell, JordanBlueprint, RealCell, assemble_real_jordan,
                                   blueprint_exp, format_matrix, jordan_cell, jordan_cell_exp,
                                   mat_exp, random_blueprint, read_matrix, rotation_block,
                                   spectrum)


def test_rotation_block_examples():
    assert np.array_equal(rotation_block(0, 1), [[0, -1], [1, 0]])
    assert np.array_equal(rotation_block(1, 0), np.eye(2))
    R = rotation_block(2, 3)
    assert np.array_equal(R, [[2, -3], [3, 2]])
    assert np.allclose(sorted(spectrum(R).values, key=lambda v: v.imag), [2 - 3j, 2 + 3j])
    assert np.allclose(sorted(eigenvalues_oracle(R), key=lambda v: v.imag), [2 - 3j, 2 + 3j])


def test_jordan_cell_examples():
    assert np.array_equal(jordan_cell([[0.0]], 2), [[0, 0], [1, 0]])
    assert np.array_equal(jordan_cell(rotation_block(0, 1), 1), rotation_block(0, 1))
    lam = -0.7
    hand = np.array([[lam, 0, 0], [1, lam, 0], [0, 1, lam]])
    assert np.array_equal(jordan_cell([[lam]], 3), hand)


def test_jordan_cell_is_lower_bidiagonal_for_blocks():
    J = jordan_cell(rotation_block(0.5, 2.0), 3)
    assert J.shape == (6, 6)
    assert np.array_equal(J[2:4, 0:2], np.eye(2))
    assert np.array_equal(J[4:6, 2:4], np.eye(2))
    assert np.all(J[0:2, 2:] == 0)


def test_assemble_examples():
    bp = JordanBlueprint((ComplexCell(0.0, 1.0, 1),))
    assert np.array_equal(assemble_real_jordan(bp), rotation_block(0, 1))
    bp = JordanBlueprint((ComplexCell(0.0, 1.0, 1), ComplexCell(0.0, 2.0, 1)))
    want = np.zeros((4, 4))
    want[:2, :2] = rotation_block(0, 1)
    want[2:, 2:] = rotation_block(0, 2)
    assert np.array_equal(assemble_real_jordan(bp), want)
    bp = JordanBlueprint((RealCell(-1.0, 2), ComplexCell(0.0, 3.0, 1)))
    sp = spectrum(assemble_real_jordan(bp))
    got = dict(zip(np.round(sp.distinct, 12), sp.multiplicity))
    assert got == {-1 + 0j: 2, -3j: 1, 3j: 1}


def test_blueprint_validation():
    with pytest.raises(InvalidArgument):
        JordanBlueprint(())
    with pytest.raises(InvalidArgument):
        JordanBlueprint((RealCell(1.0, 0),))
    with pytest.raises(InvalidArgument):
        JordanBlueprint((ComplexCell(0.0, 0.0, 1),))
    with pytest.raises(InvalidArgument):
        JordanBlueprint((RealCell(math.nan, 1),))


def test_spectrum_examples():
    sp = spectrum(np.zeros((3, 3)))
    assert list(sp.distinct) == [0j] and list(sp.multiplicity) == [3]
    C = np.array([[0, 0, 6], [1, 0, -11], [0, 1, 6]], dtype=float)
    assert np.allclose(spectrum(C).values, [1, 2, 3], atol=1e-10)
    assert np.allclose(sorted(v.real for v in eigenvalues_oracle(C)), [1, 2, 3], atol=1e-40)


def test_spectrum_ordering_is_lexicographic():
    rng = np.random.default_rng(3)
    vals = spectrum(rng.normal(size=(7, 7))).values
    keys = [(v.real, v.imag) for v in vals]
    assert keys == sorted(keys)


def test_spectrum_defective_multiplicities():
    # a defective pair splits by ~sqrt(eps) under round-off; it must still count as one eigenvalue
    bp = JordanBlueprint((ComplexCell(0.0, 1.0, 3), RealCell(0.25, 2)))
    A = assemble_real_jordan(bp)
    Q, _ = np.linalg.qr(np.random.default_rng(0).normal(size=(8, 8)))
    sp = spectrum(Q @ A @ Q.T)
    got = dict(zip(np.round(sp.distinct, 6), sp.multiplicity))
    assert got == {-1j: 3, 1j: 3, 0.25 + 0j: 2}


def test_spectrum_matches_blueprint_construction():
    rng = np.random.default_rng(11)
    for _ in range(300):
        bp = random_blueprint(rng, 8)
        A = assemble_real_jordan(bp)
        Q, _ = np.linalg.qr(rng.normal(size=A.shape))
        got = spectrum(Q @ A @ Q.T).values
        want = bp.eigenvalues()
        cost = np.abs(got[:, None] - want[None, :])
        rows, cols = linear_sum_assignment(cost)
        assert cost[rows, cols].max() < 1e-7


def test_spectrum_charpoly_oracle_small():
    rng = np.random.default_rng(5)
    for _ in range(40):
        bp = random_blueprint(rng, 4)
        A = assemble_real_jordan(bp)
        got = spectrum(A).values
        oracle = eigenvalues_oracle(A)
        for v in oracle:
            assert np.abs(got - v).min() < 1e-8


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=60, deadline=None)
def test_spectrum_conjugation_closed(seed):
    A = np.random.default_rng(seed).normal(size=(6, 6))
    vals = spectrum(A).values
    for v in vals:
        assert np.abs(vals - np.conj(v)).min() < 1e-8


def test_mat_exp_examples():
    assert np.array_equal(mat_exp(np.zeros((3, 3))), np.eye(3))
    b, t = 1.7, 0.9
    R = mat_exp(rotation_block(0, b) * t)
    assert np.allclose(R, [[math.cos(b * t), -math.sin(b * t)], [math.sin(b * t), math.cos(b * t)]],
                       atol=1e-14)
    assert np.allclose(mat_exp(jordan_cell([[0.0]], 2)), [[1, 0], [1, 1]], atol=1e-15)


def test_jordan_cell_exp_examples():
    t = 2.5
    assert np.allclose(jordan_cell_exp([[0.0]], 2, t), [[1, 0], [t, 1]])
    B = rotation_block(-0.3, 1.1)
    assert np.allclose(jordan_cell_exp(B, 1, t), expm(B * t), atol=1e-13)
    E = jordan_cell_exp(rotation_block(0, 1), 2, math.pi / 2)
    assert np.allclose(E[:2, :2], [[0, -1], [1, 0]], atol=1e-15)
    assert np.allclose(E[2:, :2], math.pi / 2 * E[:2, :2], atol=1e-15)
    assert np.allclose(E, mat_exp(jordan_cell(rotation_block(0, 1), 2) * math.pi / 2), atol=1e-13)


def test_mat_exp_against_scipy():
    rng = np.random.default_rng(1)
    for n in (1, 2, 5, 9):
        for scale in (0.01, 1.0, 6.0):
            X = rng.normal(size=(n, n)) * scale
            ref = expm(X)
            assert np.abs(mat_exp(X) - ref).max() <= 1e-11 * max(1.0, np.abs(ref).max())


def test_mat_exp_batched():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(4, 3, 3))
    out = mat_exp(X)
    for k in range(4):
        assert np.allclose(out[k], mat_exp(X[k]), atol=1e-14)


def test_mat_exp_oracle_equivalence():
    rng = np.random.default_rng(20)
    for _ in range(200):
        bp = random_blueprint(rng, 8)
        t = rng.uniform(-5, 5)
        err = np.abs(mat_exp(assemble_real_jordan(bp) * t) - blueprint_exp(bp, t)).max()
        assert err < 1e-9


@given(st.integers(0, 2 ** 32 - 1), st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=80, deadline=None)
def test_mat_exp_group_law(seed, t, s):
    X = np.random.default_rng(seed).normal(size=(4, 4))
    X *= 2.0 / max(1.0, np.linalg.norm(X, 2))
    lhs = mat_exp(X * (t + s))
    rhs = mat_exp(X * t) @ mat_exp(X * s)
    assert np.abs(lhs - rhs).max() < 1e-9


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=80, deadline=None)
def test_det_exp_equals_exp_trace(seed):
    X = np.random.default_rng(seed).normal(size=(5, 5))
    d = np.linalg.det(mat_exp(X))
    assert abs(d - math.exp(np.trace(X))) <= 1e-9 * math.exp(np.trace(X))


def test_mat_exp_errors():
    with pytest.raises(InvalidArgument):
        mat_exp(np.array([[np.nan]]))
    with pytest.raises(InvalidArgument):
        mat_exp(np.ones((2, 3)))
    with pytest.raises(NumericFailure):
        mat_exp(np.array([[1000.0]]))


def test_matrix_text_roundtrip():
    A = np.array([[0.1, -2.0], [3.5e-9, 4.0]])
    text = "# generator\n" + format_matrix(A) + "\n\n"
    assert np.array_equal(read_matrix(text), A)
    with pytest.raises(InvalidArgument):
        read_matrix("1 2\n3\n")
