from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apamoeba.lattice import determinant, echelon_basis, hermite_normal_form, rational_rank, solve_in_echelon


def matmul(A, B):
    return [[sum(a * b for a, b in zip(row, col)) for col in zip(*B)] for row in A]


matrices = st.integers(1, 4).flatmap(
    lambda n: st.lists(st.lists(st.integers(-9, 9), min_size=n, max_size=n), min_size=1, max_size=5)
)


@settings(max_examples=150, deadline=None)
@given(matrices)
def test_hnf_certificate(M):
    H, U = hermite_normal_form(M)
    assert matmul(U, M) == H
    assert abs(determinant(U)) == 1
    # echelon shape with positive pivots and reduced entries above them
    last = -1
    seen_zero = False
    for i, row in enumerate(H):
        nz = [j for j, v in enumerate(row) if v]
        if not nz:
            seen_zero = True
            continue
        assert not seen_zero
        j = nz[0]
        assert j > last and row[j] > 0
        for r in H[:i]:
            assert 0 <= r[j] < row[j]
        last = j
    assert len(echelon_basis(M)) == rational_rank([[Fraction(v) for v in r] for r in M])


@settings(max_examples=100, deadline=None)
@given(matrices, st.lists(st.integers(-3, 3), min_size=5, max_size=5))
def test_solve_in_echelon_roundtrip(M, coeffs):
    B = echelon_basis(M)
    v = [sum(c * r[j] for c, r in zip(coeffs, M)) for j in range(len(M[0]))]
    x = solve_in_echelon(B, v)
    assert x is not None
    assert [sum(c * r[j] for c, r in zip(x, B)) for j in range(len(M[0]))] == v


def test_solve_in_echelon_outside_lattice():
    assert solve_in_echelon([[2, 0], [0, 3]], [1, 0]) is None


def test_hnf_known():
    H, _ = hermite_normal_form([[4], [6]])
    assert H == [[2], [0]]


def test_determinant():
    assert determinant([[2, 1], [1, 1]]) == 1
    with pytest.raises(ValueError):
        determinant([[1, 2, 3]])
