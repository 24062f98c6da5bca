"""Tests for matrices over F_p((t))."""

from __future__ import annotations

import pytest

from germlab.exceptions import IncompatibleFieldError, PreconditionError
from germlab.localfield import LaurentSeries
from germlab.matrices import MatrixLF


def _m(p, rows):
    return MatrixLF(p, rows)


def test_determinant_and_adjugate(series):
    t = series("v=1;c=1")
    g = _m(7, [[1, t, 2], [0, 3, t], [t, 0, 1]])
    det = g.det()
    # 3 - 6t + t^3
    assert det == LaurentSeries(7, 0, (3, 1, 0, 1))
    assert g.adjugate() @ g == MatrixLF.identity(3, 7).scale(det)


def test_antidiagonal_is_an_involution():
    for r in (1, 2, 3, 4):
        w = MatrixLF.antidiagonal(r, 5)
        assert w @ w == MatrixLF.identity(r, 5)
    assert MatrixLF.antidiagonal(3, 5).det() == LaurentSeries.constant(4, 5)


def test_block_diagonal_and_transpose(series):
    a, b = series("v=1;c=2"), series("v=-1;c=3")
    block = MatrixLF.block_diagonal([MatrixLF.antidiagonal(2, 7).scale(a), _m(7, [[b]])])
    assert block == _m(7, [[0, a, 0], [a, 0, 0], [0, 0, b]])
    upper = _m(7, [[1, a], [0, 1]])
    assert upper.is_upper_unitriangular()
    assert not upper.transpose().is_upper_unitriangular()
    assert upper.superdiagonal() == [a]


def test_precision_and_agreement(series):
    x = series("v=0;c=1,2;N=3")
    g = _m(7, [[x, 0], [0, 1]])
    assert g.precision == 3
    # 1 + 2t is known modulo t^3, so its t^2 digit is a known zero
    assert g.agrees_with(_m(7, [[series("v=0;c=1,2,0,5"), 0], [0, 1]]))
    assert not g.agrees_with(_m(7, [[series("v=0;c=1,2,5"), 0], [0, 1]]))
    assert MatrixLF.identity(2, 7).precision is None


def test_shape_and_field_checks():
    with pytest.raises(PreconditionError):
        _m(7, [[1, 0]])
    with pytest.raises(IncompatibleFieldError):
        _m(7, [[LaurentSeries.constant(1, 5)]])
