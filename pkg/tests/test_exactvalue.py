"""Tests for cyclotomic values, characters and the integrators."""

from __future__ import annotations

from fractions import Fraction

import pytest

from germlab.const import GermlabErrorCode
from germlab.exactvalue import (
    DomainSpec,
    ExactValue,
    PowerAccumulator,
    Psi_char,
    gauss_sum,
    imaginary_unit,
    integrate,
    integrate_balls,
    psi_char,
    q_power,
    sqrt_q,
    stable_integral,
    sum_values,
    theta_char,
)
from germlab.exceptions import (
    BudgetExceededError,
    PrecisionError,
    PreconditionError,
    StabilizationError,
)
from germlab.localfield import LaurentSeries, ResidueElem, legendre
from germlab.matrices import MatrixLF


def test_psi_is_an_additive_character(small_primes):
    for p in small_primes:
        assert psi_char(ResidueElem(0, p)) == 1
        for a in range(p):
            for b in range(p):
                lhs = psi_char(ResidueElem(a, p)) * psi_char(ResidueElem(b, p))
                assert lhs == psi_char(ResidueElem(a + b, p))
        assert sum_values((psi_char(ResidueElem(c, p)) for c in range(p)), p).is_zero


def test_Psi_reads_the_residue():
    p = 7
    assert Psi_char(LaurentSeries(p, -1, (3, 5))) == psi_char(ResidueElem(3, p))
    assert Psi_char(LaurentSeries(p, -2, (1, 0, 4), 2)) == psi_char(ResidueElem(0, p))
    assert Psi_char(LaurentSeries.constant(2, p)) == 1


def test_gauss_sum_squares_to_signed_p(small_primes):
    for p in small_primes:
        g = gauss_sum(p)
        assert g * g == legendre(ResidueElem(-1, p)) * p


def test_sqrt_q_is_the_positive_root(small_primes):
    for p in small_primes:
        assert sqrt_q(p) * sqrt_q(p) == p
        assert sqrt_q(p).conj() == sqrt_q(p)
        assert q_power(p, 3) == sqrt_q(p) * p
        assert q_power(p, -2) == Fraction(1, p)


def test_imaginary_unit():
    i = imaginary_unit(7)
    assert i * i == -1
    assert i.conj() == -i


def test_conj_and_inverse():
    p = 5
    zeta = ExactValue.zeta(p)
    assert zeta * zeta.conj() == 1
    x = zeta + 1
    assert x * x.inverse() == 1
    assert (x / x) == 1
    assert x**-2 * x**2 == 1


def test_inverse_of_zero():
    with pytest.raises(PreconditionError) as err:
        ExactValue.zero(7).inverse()
    assert err.value.translation_key is GermlabErrorCode.DIVISION_BY_ZERO


def test_reduction_is_canonical():
    p = 3
    # 1 + zeta^p + zeta^2p + zeta^3p = 1 + i - 1 - i
    total = sum_values((ExactValue.zeta(p, k * p) for k in range(4)), p)
    assert total.is_zero
    assert ExactValue.zeta(p, 4 * p) == 1


def test_json_encoding():
    value = gauss_sum(7) * Fraction(3, 2) + 1
    data = value.to_dict()
    assert data["basis"] == "zeta_28_power"
    assert len(data["coeffs"]) == 12
    assert ExactValue.from_json(value.to_json()) == value


def test_pretty():
    assert ExactValue.zero(5).pretty() == "0"
    assert ExactValue.rational(Fraction(-1, 2), 5).pretty() == "-1/2"
    assert ExactValue.zeta(5, 3).pretty() == "1*ζ^3"


def test_power_accumulator():
    acc = PowerAccumulator(7)
    for c in range(7):
        acc.add_psi(c, 2)
    assert acc.value().is_zero
    acc.add(0, Fraction(1, 3))
    assert acc.value() == Fraction(1, 3)


def test_theta_needs_a_unipotent():
    p = 7
    n = MatrixLF(p, [[1, LaurentSeries.monomial(2, -1, p)], [0, 1]])
    # half of 2 t^-1 is t^-1
    assert theta_char(n) == psi_char(ResidueElem(1, p))
    with pytest.raises(PreconditionError) as err:
        theta_char(MatrixLF(p, [[1, 0], [1, 1]]))
    assert err.value.translation_key is GermlabErrorCode.NOT_UNIPOTENT


def test_theta_is_a_character(rng):
    p = 7

    def entry():
        return LaurentSeries(p, rng.randrange(-3, 2), [rng.randrange(p) for _ in range(3)])

    def unipotent():
        return MatrixLF(p, [[1, entry(), entry()], [0, 1, entry()], [0, 0, 1]])

    for _ in range(100):
        n, n_prime = unipotent(), unipotent()
        assert theta_char(n @ n_prime) == theta_char(n) * theta_char(n_prime)


def test_integrate_is_stable_in_the_modulus():
    p = 5
    t_inv2 = LaurentSeries.monomial(1, -2, p)
    zero = LaurentSeries.zero(p)
    values = [
        integrate(
            DomainSpec(p=p, centers=(zero,), exponents=(0,), modulus=modulus),
            lambda xs: Psi_char(t_inv2 * xs[0] * xs[0]),
        )
        for modulus in (2, 3)
    ]
    assert values[0] == values[1] == Fraction(1, p)


def test_integrate_volume_and_character():
    p = 5
    zero = LaurentSeries.zero(p)
    unit_ball = DomainSpec(p=p, centers=(zero,), exponents=(0,), modulus=1)
    assert integrate(unit_ball, lambda xs: ExactValue.one(p)) == 1
    wide = DomainSpec(p=p, centers=(zero,), exponents=(-1,), modulus=1)
    assert integrate(wide, lambda xs: ExactValue.one(p)) == p
    assert integrate(wide, lambda xs: Psi_char(xs[0])).is_zero


def test_integrate_respects_budget():
    p = 7
    domain = DomainSpec(
        p=p, centers=(LaurentSeries.zero(p),) * 2, exponents=(0, 0), modulus=3
    )
    with pytest.raises(BudgetExceededError) as err:
        integrate(domain, lambda xs: ExactValue.one(p), budget=1000)
    assert err.value.size == 7**6


def test_integrate_balls_refines_only_where_needed():
    p = 7
    assert integrate_balls(p, 1, 0, lambda xs: ExactValue.one(p)) == 1
    assert integrate_balls(p, 1, 1, lambda xs: ExactValue.one(p)) == p
    assert integrate_balls(p, 1, 1, lambda xs: Psi_char(xs[0])).is_zero
    # t x lies in O on the whole of t^-1 O
    t = LaurentSeries.monomial(1, 1, p)
    assert integrate_balls(p, 1, 1, lambda xs: Psi_char(xs[0] * t)) == p


def test_integrate_balls_skips_the_outside():
    p = 5

    def inside_unit_ball(xs):
        x = xs[0]
        if x.valuation is not None and x.valuation < 0:
            return None
        if x.precision < 0:
            raise PrecisionError("undecided")
        return ExactValue.one(p)

    assert integrate_balls(p, 1, 2, inside_unit_ball) == 1


def test_stable_integral_detects_drift():
    assert stable_integral(lambda radius: ExactValue.one(7), 1, "constant") == 1
    with pytest.raises(StabilizationError) as err:
        stable_integral(lambda radius: ExactValue.rational(radius, 7), 1, "drifting")
    assert err.value.translation_key is GermlabErrorCode.RADIUS_NOT_STABLE
