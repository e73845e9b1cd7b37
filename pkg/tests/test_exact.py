from fractions import Fraction as F

import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from ccrlab import _exact as ex
from ccrlab.errors import IrrationalInput

small = st.integers(-6, 6)


def test_as_fraction_forms():
    assert ex.as_fraction("3/4") == F(3, 4)
    assert ex.as_fraction("-2") == -2
    assert ex.as_fraction(0.125) == F(1, 8)
    assert ex.as_fraction(np.int64(5)) == 5
    with pytest.raises(IrrationalInput):
        ex.as_fraction(0.1, allow_float=False)
    with pytest.raises(IrrationalInput):
        ex.as_fraction(True)


def test_fmt_round_trip():
    for x in (F(0), F(-7, 3), F(12)):
        assert ex.as_fraction(ex.fmt(x)) == x


@given(st.lists(st.lists(small, min_size=3, max_size=3), min_size=1, max_size=4))
def test_rank_and_nullspace_match_sympy(rows):
    m = sympy.Matrix(rows)
    assert ex.rank(rows) == m.rank()
    null = ex.nullspace(rows, ncols=3)
    assert len(null) == 3 - m.rank()
    for v in null:
        assert all(ex.dot(r, v) == 0 for r in ex.mat(rows))


@given(st.lists(st.lists(small, min_size=3, max_size=3), min_size=3, max_size=3))
def test_det_and_inverse_match_sympy(rows):
    m = sympy.Matrix(rows)
    assert ex.det(rows) == F(int(m.det()))
    if m.det() != 0:
        inv = ex.inverse(rows)
        assert ex.matmul(inv, ex.mat(rows)) == [[F(int(i == j)) for j in range(3)] for i in range(3)]


def test_primitive_and_integral():
    assert ex.primitive((F(2, 3), F(-4, 3))) == (1, -2)
    assert ex.is_integral((F(2), F(-3)))
    assert not ex.is_integral((F(1, 2),))
    assert ex.common_denominator([F(1, 6), F(3, 4)]) == 12
