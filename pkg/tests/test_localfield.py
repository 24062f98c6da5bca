"""Tests for F_p and truncated F_p((t)) arithmetic."""

from __future__ import annotations

from math import gcd

import pytest

from germlab.const import ArithOp, GermlabErrorCode
from germlab.exceptions import IncompatibleFieldError, PrecisionError, PreconditionError
from germlab.localfield import (
    LaurentSeries,
    ResidueElem,
    check_prime,
    compositions,
    legendre,
    lf_arith,
    lf_format,
    lf_from_int,
    lf_inverse,
    lf_parse,
    lf_pow,
    lf_sqrt,
    roots_of_unity,
)


def test_additive_cancellation():
    x = LaurentSeries(7, -1, (1, 1))
    assert lf_arith(x, lf_from_int(-1, 7), ArithOp.ADD) == LaurentSeries.monomial(1, -1, 7)


def test_inverse_pair():
    t = LaurentSeries.monomial(1, 1, 7)
    assert lf_arith(t, lf_inverse(t), ArithOp.MUL) == LaurentSeries.constant(1, 7)
    assert lf_pow(t, -2) == LaurentSeries.monomial(1, -2, 7)


def test_valuation_is_additive(random_unit, rng):
    for _ in range(200):
        vx, vy = rng.randrange(-3, 4), rng.randrange(-3, 4)
        x = random_unit(7, vx, vx + 5)
        y = random_unit(7, vy, vy + 5)
        product = lf_arith(x, y, ArithOp.MUL)
        assert product.valuation == vx + vy
        assert product.precision == min(x.precision + vy, y.precision + vx)


def test_field_axioms_on_units(random_unit):
    one = LaurentSeries.constant(1, 7, 8)
    for _ in range(50):
        x, y, z = (random_unit(7, 0, 8) for _ in range(3))
        assert (x * y) * z == x * (y * z)
        assert x * (y + z) == x * y + x * z
        assert x * x.inverse() == one
        assert lf_arith(x * y, y, ArithOp.DIV).agrees_with(x)


def test_division_precision_is_tracked():
    x = LaurentSeries(7, 0, (1, 2, 3), 6)
    t = LaurentSeries.monomial(1, 1, 7)
    assert (x / t).precision == 5
    assert (x / t).valuation == -1


def test_division_by_zero():
    with pytest.raises(PreconditionError) as err:
        lf_arith(lf_from_int(1, 7), LaurentSeries.zero(7), ArithOp.DIV)
    assert err.value.translation_key is GermlabErrorCode.DIVISION_BY_ZERO


def test_incompatible_primes():
    with pytest.raises(IncompatibleFieldError):
        lf_from_int(1, 5) + lf_from_int(1, 7)


def test_coefficient_beyond_precision():
    x = LaurentSeries(7, 0, (1, 1), 2)
    assert x.coefficient(1) == 1
    with pytest.raises(PrecisionError):
        x.coefficient(2)


def test_norm_is_exact():
    x = LaurentSeries.monomial(3, -2, 7)
    assert x.norm() == 49
    assert LaurentSeries.monomial(1, 3, 5).norm() * 125 == 1


def test_unit_part(series):
    assert series("v=2;c=3,1").unit_part() == LaurentSeries(7, 0, (3, 1))
    assert series("v=-1;c=4").unit_part() == LaurentSeries.constant(4, 7)
    with pytest.raises(PreconditionError) as err:
        LaurentSeries.zero(7).unit_part()
    assert err.value.translation_key is GermlabErrorCode.ZERO_ARGUMENT


def test_sqrt_examples():
    assert lf_sqrt(lf_from_int(1, 7)) == lf_from_int(1, 7)
    assert lf_sqrt(lf_from_int(4, 7)) == lf_from_int(2, 7)
    x = LaurentSeries(7, 0, (1, 1), 6)
    y = lf_sqrt(x)
    assert (y * y).agrees_with(x)
    assert y.coefficient(0) == 1


def test_sqrt_squares_back(small_primes, random_unit):
    for p in small_primes:
        squares = [c for c in range(1, p) if legendre(ResidueElem(c, p)) == 1]
        for _ in range(100):
            x = random_unit(p, 2, 9)
            x = LaurentSeries(p, 2, (squares[0], *x.coeffs[1:]), 9)
            y = lf_sqrt(x)
            assert (y * y).agrees_with(x)
            assert 1 <= y.coeffs[0] <= p // 2


@pytest.mark.parametrize(
    ("text", "key"),
    [
        ("v=1;c=1;N=5", GermlabErrorCode.ODD_VALUATION),
        ("v=0;c=3;N=5", GermlabErrorCode.NON_RESIDUE),
    ],
)
def test_sqrt_preconditions(series, text, key):
    with pytest.raises(PreconditionError) as err:
        lf_sqrt(series(text))
    assert err.value.translation_key is key


def test_roots_of_unity_examples():
    assert [z.coeffs[0] for z in roots_of_unity(1, 7)] == [1]
    assert [z.coeffs[0] for z in roots_of_unity(2, 7)] == [1, 6]
    assert [z.coeffs[0] for z in roots_of_unity(3, 7)] == [1, 2, 4]


def test_roots_of_unity_match_search(small_primes):
    for p in small_primes:
        for r in range(1, 13):
            found = sorted(c for c in range(1, p) if pow(c, r, p) == 1)
            roots = roots_of_unity(r, p)
            assert len(roots) == gcd(r, p - 1)
            assert [z.coeffs[0] for z in roots] == found


def test_legendre_examples():
    assert legendre(ResidueElem(1, 11)) == 1
    assert legendre(ResidueElem(0, 7)) == 0
    assert legendre(ResidueElem(3, 7)) == -1


def test_legendre_is_eulers_criterion(small_primes):
    for p in small_primes:
        for a in range(1, p):
            euler = pow(a, (p - 1) // 2, p)
            assert legendre(ResidueElem(a, p)) == (1 if euler == 1 else -1)


def test_legendre_is_multiplicative(small_primes):
    for p in small_primes:
        for a in range(1, p):
            for b in range(1, p):
                product = legendre(ResidueElem(a * b, p))
                assert product == legendre(ResidueElem(a, p)) * legendre(ResidueElem(b, p))


@pytest.mark.parametrize("p", [2, 9, 1, -7])
def test_check_prime_rejects(p):
    with pytest.raises(PreconditionError) as err:
        check_prime(p)
    assert err.value.translation_key is GermlabErrorCode.NOT_ODD_PRIME


def test_compositions_are_lexicographic():
    assert [c.parts for c in compositions(3)] == [(1, 1, 1), (1, 2), (2, 1), (3,)]
    for r in range(1, 8):
        assert len(list(compositions(r))) == 2 ** (r - 1)


def test_composition_blocks():
    (composition,) = [c for c in compositions(3) if c.parts == (2, 1)]
    assert composition.blocks() == [range(0, 2), range(2, 3)]
    assert composition.block_of(1) == 0
    assert composition.block_of(2) == 1


def test_text_encoding():
    x = lf_parse("v=-1;c=1,2;N=3", 7)
    assert x == LaurentSeries(7, -1, (1, 2), 3)
    assert lf_format(x) == "v=-1;c=1,2;N=3"
    assert lf_parse("0", 7) == LaurentSeries.zero(7)
    assert lf_format(LaurentSeries.zero(7, 4)) == "0;N=4"
    assert lf_parse("v=2;c=3", 7).is_exact


@pytest.mark.parametrize("text", ["v=0;c=0", "v=0;c=7", "x=1", "v=1;c=1;N="])
def test_malformed_text(text):
    with pytest.raises(PreconditionError) as err:
        lf_parse(text, 7)
    assert err.value.translation_key is GermlabErrorCode.MALFORMED_SERIES


def test_refine_adds_one_digit():
    ball = LaurentSeries.zero(7, -1)
    sub = ball.refine(3)
    assert sub == LaurentSeries(7, -1, (3,), 0)
    assert sub.refine(0).precision == 1
