import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trajcf.basis import (
    MAX_BASIS_SIZE,
    BasisEnumeration,
    MultiIndex,
    basis_size,
    enumerate_basis,
    eval_monomial,
    eval_monomial_matrix,
    eval_monomial_vector,
)
from trajcf.errors import InputError


def test_count_matches_binomial_for_known_pairs():
    assert len(enumerate_basis(4, 2)) == 15
    assert len(enumerate_basis(0, 5)) == 1
    assert len(enumerate_basis(2, 2)) == 6
    assert len(enumerate_basis(4, 4)) == 70


def test_exhaustive_counts_small_grid():
    for d in range(0, 7):
        for n in range(1, 7):
            assert len(enumerate_basis(d, n)) == math.comb(n + d, n)


def test_degree_zero_is_only_the_constant():
    bas = enumerate_basis(0, 5)
    assert bas.indices[0].exponents == (0, 0, 0, 0, 0)


def test_graded_lex_order_d2_n2():
    bas = enumerate_basis(2, 2)
    assert [ix.exponents for ix in bas.indices] == [
        (0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2),
    ]


def test_enumeration_is_deterministic():
    a = enumerate_basis(3, 3)
    b = enumerate_basis(3, 3)
    assert a.indices == b.indices
    assert np.array_equal(a.exponent_array, b.exponent_array)


def test_constant_first_and_degrees_ascending():
    bas = enumerate_basis(5, 3)
    degrees = [ix.total_degree for ix in bas.indices]
    assert degrees[0] == 0
    assert degrees == sorted(degrees)


def test_nesting_is_prefix_closed_as_sets():
    def padded_set(bas, width):
        return {ix.exponents + (0,) * (width - len(ix.exponents)) for ix in bas.indices}

    small = padded_set(enumerate_basis(2, 2), 4)
    assert small <= padded_set(enumerate_basis(3, 2), 4)
    assert small <= padded_set(enumerate_basis(2, 4), 4)
    assert small <= padded_set(enumerate_basis(4, 4), 4)


def test_rejects_bad_degree_pairs():
    with pytest.raises(InputError):
        enumerate_basis(2, 0)
    with pytest.raises(InputError):
        enumerate_basis(-1, 2)
    with pytest.raises(InputError):
        enumerate_basis(2.5, 2)


def test_rejects_oversized_basis():
    assert basis_size(100, 4) > MAX_BASIS_SIZE
    with pytest.raises(InputError, match="cap"):
        enumerate_basis(100, 4)


def test_eval_monomial_examples():
    assert eval_monomial([3.0, -2.0], MultiIndex((0, 0))) == 1.0
    # the square of the second coefficient of sqrt(2)*t is 1
    assert eval_monomial([0.0, 1.0], MultiIndex((0, 2))) == 1.0
    assert eval_monomial([2.0, 3.0], MultiIndex((3, 1))) == 24.0


def test_eval_monomial_short_vector_is_fine_outside_support():
    # trailing zero exponents do not require coefficients
    assert eval_monomial([2.0], MultiIndex((2, 0, 0))) == 4.0
    with pytest.raises(InputError):
        eval_monomial([2.0], MultiIndex((1, 1)))


def test_monomial_vector_examples():
    bas22 = enumerate_basis(2, 2)
    assert np.array_equal(
        eval_monomial_vector(np.zeros(5), bas22), [1, 0, 0, 0, 0, 0]
    )
    assert np.array_equal(
        eval_monomial_vector([1.0, 1.0], bas22), np.ones(6)
    )
    bas12 = enumerate_basis(1, 2)
    assert np.array_equal(eval_monomial_vector([2.0, 3.0], bas12), [1, 2, 3])


def test_monomial_vector_leading_entry_is_one():
    rng = np.random.default_rng(7)
    bas = enumerate_basis(3, 4)
    V = eval_monomial_matrix(rng.normal(size=(20, 4)), bas)
    assert np.all(V[:, 0] == 1.0)


def test_matrix_agrees_with_vector():
    rng = np.random.default_rng(11)
    bas = enumerate_basis(4, 3)
    C = rng.normal(size=(8, 3))
    V = eval_monomial_matrix(C, bas)
    for i in range(8):
        np.testing.assert_allclose(V[i], eval_monomial_vector(C[i], bas), rtol=1e-13)


def test_matrix_rejects_nonfinite():
    bas = enumerate_basis(2, 2)
    with pytest.raises(InputError):
        eval_monomial_matrix([[1.0, np.nan]], bas)


@st.composite
def _index_pair(draw):
    n = draw(st.integers(1, 4))
    mk = lambda: MultiIndex(tuple(draw(st.integers(0, 3)) for _ in range(n)))
    return n, mk(), mk()


@settings(max_examples=60, deadline=None)
@given(_index_pair(), st.data())
def test_monomials_are_multiplicative(pair, data):
    n, a, b = pair
    coords = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False)
    c = [data.draw(coords) for _ in range(n)]
    left = eval_monomial(c, a + b)
    right = eval_monomial(c, a) * eval_monomial(c, b)
    assert left == pytest.approx(right, rel=1e-12, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(
    st.integers(0, 3), st.integers(1, 3),
    st.floats(min_value=-2.0, max_value=2.0, allow_nan=False),
    st.data(),
)
def test_scaling_covariance_per_index(d, n, s, data):
    bas = enumerate_basis(d, n)
    coords = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False)
    c = np.array([data.draw(coords) for _ in range(n)])
    v = eval_monomial_vector(c, bas)
    v_scaled = eval_monomial_vector(s * c, bas)
    for ix, a, b in zip(bas.indices, v, v_scaled):
        assert b == pytest.approx(s ** ix.total_degree * a, rel=1e-12, abs=1e-12)


def test_multi_index_helpers():
    a = MultiIndex((0, 2, 0))
    assert a.total_degree == 2
    assert a.support_length == 2
    assert MultiIndex((0, 0)).support_length == 0
    with pytest.raises(InputError):
        MultiIndex((1, -1))
