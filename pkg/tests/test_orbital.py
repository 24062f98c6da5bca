"""Tests for orbit representatives, congruence functions and orbital integrals."""

from __future__ import annotations

from fractions import Fraction
from itertools import product

import pytest

from germlab.const import GermlabErrorCode, Membership
from germlab.exactvalue import ExactValue, PowerAccumulator, Psi_char, half
from germlab.exceptions import PrecisionError, PreconditionError
from germlab.localfield import LaurentSeries, compositions, roots_of_unity
from germlab.matrices import MatrixLF
from germlab.orbital import (
    CongruenceFunction,
    OrbitLabel,
    check_decomposition_I,
    check_decomposition_J,
    decomposition_report_J,
    germ_expansion_check,
    orbit_point,
    orbital_I,
    orbital_J,
    relevant_representative,
    unit_sym_test,
)


def test_relevant_representatives(series):
    t, t_inv = series("v=1;c=1"), series("v=-1;c=1")
    diagonal = relevant_representative(OrbitLabel.of((1, 1), (t, t_inv)))
    assert diagonal == MatrixLF.diagonal([t, t_inv])
    a, b = series("v=0;c=2"), series("v=2;c=3")
    block = relevant_representative(OrbitLabel.of((2, 1), (a, b)))
    assert block == MatrixLF(7, [[0, a, 0], [a, 0, 0], [0, 0, b]])


def test_labels_per_rank(series):
    one = series("v=0;c=1")
    labels = [OrbitLabel.of(c.parts, (one,) * len(c.parts)) for c in compositions(3)]
    assert len(labels) == 4
    assert labels[1].radical_entries() == [(0, 1), (0, 2)]
    assert labels[1].levi_entries() == [(1, 2)]


def test_label_validation(series):
    with pytest.raises(PreconditionError):
        OrbitLabel.of((1, 1), (series("v=0;c=1"),))
    with pytest.raises(PreconditionError) as err:
        OrbitLabel.of((2,), (LaurentSeries.zero(7),))
    assert err.value.translation_key is GermlabErrorCode.ZERO_ARGUMENT


def test_orbit_point_at_identity(series):
    orbit = OrbitLabel.of((1, 1), (series("v=1;c=1"), series("v=0;c=3")))
    identity = MatrixLF.identity(2, 7)
    point = orbit_point(orbit, identity, identity, identity)
    assert point == MatrixLF.antidiagonal(2, 7) @ relevant_representative(orbit)
    x = series("v=0;c=1")
    with pytest.raises(PreconditionError) as err:
        orbit_point(orbit, identity, MatrixLF(7, [[1, x], [0, 1]]), identity)
    assert err.value.translation_key is GermlabErrorCode.NOT_IN_UNIPOTENT_RADICAL


def test_membership_is_tri_state(series):
    f = CongruenceFunction(MatrixLF.identity(2, 7), 1, ExactValue.one(7))
    t = series("v=1;c=1")
    assert f.membership(MatrixLF(7, [[series("v=0;c=1,4"), t], [0, 1]])) is Membership.INSIDE
    assert f.membership(MatrixLF(7, [[2, 0], [0, 1]])) is Membership.OUTSIDE
    unknown = MatrixLF(7, [[1, LaurentSeries.zero(7, 0)], [0, 1]])
    assert f.membership(unknown) is Membership.UNDECIDED
    with pytest.raises(PrecisionError):
        f.evaluate(unknown)


def test_symmetric_restriction():
    phi = CongruenceFunction(MatrixLF.antidiagonal(2, 7), 1, ExactValue.one(7), True)
    assert phi.membership(MatrixLF(7, [[0, 1], [1, 0]])) is Membership.INSIDE
    assert phi.membership(MatrixLF(7, [[0, 1], [8, 0]])) is Membership.INSIDE
    t = LaurentSeries.monomial(1, 1, 7)
    assert phi.membership(MatrixLF(7, [[0, 1], [t + 1, 0]])) is Membership.OUTSIDE


def test_pullback_moves_the_base():
    f = CongruenceFunction.from_pullback(MatrixLF.antidiagonal(2, 7), 1)
    assert f.base == MatrixLF.identity(2, 7)
    with pytest.raises(PreconditionError) as err:
        CongruenceFunction(MatrixLF(7, [[1, 1], [1, 1]]), 1, ExactValue.one(7))
    assert err.value.translation_key is GermlabErrorCode.DIVISION_BY_ZERO


UNIT_LEMMA_POINTS = [
    (7, 2, 1),
    (7, 2, 6),
    (7, 3, 1),
    (7, 3, 2),
    (7, 3, 4),
    (11, 2, 1),
    (11, 2, 10),
    (11, 3, 1),
]


@pytest.mark.parametrize(("p", "r", "z"), UNIT_LEMMA_POINTS)
@pytest.mark.parametrize("m", [1, pytest.param(2, marks=pytest.mark.slow)])
def test_unit_lemma(p, r, z, m):
    assert z in {root.residue().value for root in roots_of_unity(r, p)}
    expected = 1 if z == 1 else 0
    assert unit_sym_test(r, LaurentSeries.constant(z, p), m) == expected


def test_unit_lemma_rejects_other_torus_values():
    with pytest.raises(PreconditionError) as err:
        unit_sym_test(2, LaurentSeries.constant(3, 7), 1)
    assert err.value.translation_key is GermlabErrorCode.NOT_A_ROOT_OF_UNITY


def test_unsupported_rank(series):
    one = series("v=0;c=1")
    orbit = OrbitLabel.of((1, 1, 1, 1), (one,) * 4)
    f = CongruenceFunction(MatrixLF.identity(4, 7), 1, ExactValue.one(7))
    with pytest.raises(PreconditionError) as err:
        orbital_J(orbit, f, 1)
    assert err.value.translation_key is GermlabErrorCode.UNSUPPORTED_RANK


def test_zero_test_function_integrates_to_zero():
    p = 5
    t = LaurentSeries.monomial(1, 1, p)
    zero = ExactValue.zero(p)
    f = CongruenceFunction(MatrixLF.identity(2, p), 1, zero)
    phi = CongruenceFunction(MatrixLF.antidiagonal(2, p), 1, zero, True)
    orbit = OrbitLabel.of((1, 1), (t, -(1 / t)))
    assert orbital_J(orbit, f, 1).is_zero
    assert orbital_I(orbit, phi, 1).is_zero
    assert check_decomposition_J(t, -(1 / t), f, radius=1)
    assert check_decomposition_I(t, -(1 / t), phi, radius=1)


@pytest.mark.slow
def test_decomposition_on_a_single_coset():
    p = 5
    t = LaurentSeries.monomial(1, 1, p)
    f = CongruenceFunction(MatrixLF.identity(2, p), 1, ExactValue.one(p))
    report = decomposition_report_J(t, -(1 / t), f)
    assert report.equal
    assert not report.lhs.is_zero


@pytest.mark.slow
@pytest.mark.parametrize("va", [3, 4])
def test_rank_two_germ_expansion(va):
    p = 7
    f = CongruenceFunction.from_pullback(MatrixLF.antidiagonal(2, p), 1)
    report = germ_expansion_check(LaurentSeries.constant(1, p), f, 1, va)
    assert report.equal


def _tu(x, p):
    return MatrixLF(p, [[1, 0], [x, 1]])


def _u(x, p):
    return MatrixLF(p, [[1, x], [0, 1]])


def test_orbital_j_on_a_single_coset():
    p, m = 5, 1
    x0 = LaurentSeries.monomial(1, -1, p)
    one = LaurentSeries.constant(1, p)
    orbit = OrbitLabel.of((1, 1), (one, one))
    # support is (x0 + t^m O) x t^m O
    f = CongruenceFunction.from_pullback(_tu(x0, p), m)
    expected = Psi_char(half(x0)) * Fraction(1, p ** (2 * m))
    assert orbital_J(orbit, f, 1) == expected


def test_orbital_i_on_a_single_coset():
    p, m = 5, 1
    x0 = LaurentSeries.monomial(1, -1, p)
    one = LaurentSeries.constant(1, p)
    orbit = OrbitLabel.of((1, 1), (one, one))
    n0 = _u(x0, p)
    # support is x0 + t^(m+2) O
    phi = CongruenceFunction(n0.transpose() @ n0, m, ExactValue.one(p), True)
    expected = Psi_char(x0) * Fraction(1, p ** (m + 2))
    assert orbital_I(orbit, phi, 1) == expected


def test_orbital_j_at_composition_two():
    p, m = 7, 1
    x0 = LaurentSeries.monomial(2, -1, p)
    orbit = OrbitLabel.of((2,), (LaurentSeries.constant(1, p),))
    f = CongruenceFunction(_u(x0, p), m, ExactValue.one(p))
    expected = Psi_char(half(x0)) * Fraction(1, p**m)
    assert orbital_J(orbit, f, 1) == expected


def _kloosterman_sum(p, t1, t2, m, radius, modulus):
    """Sum Psi((x + y)/2) over x, y in t^-radius O mod t^modulus with
    w tu(x) diag(t1, t2) u(y) in K_m, entry by entry."""

    def small(z):
        return z.valuation is None or z.valuation >= m

    assert small(t1)
    values = [
        LaurentSeries(p, -radius, digits)
        for digits in product(range(p), repeat=radius + modulus)
    ]
    weight = Fraction(1, p ** (2 * modulus))
    acc = PowerAccumulator(p)
    for x in values:
        xt1 = x * t1
        if not small(xt1 - 1):
            continue
        for y in values:
            if small(t1 * y - 1) and small(xt1 * y + t2):
                acc.add_psi(half(x + y).coefficient(-1), weight)
    return acc.value()


@pytest.mark.slow
def test_orbital_j_matches_a_two_loop_sum():
    p, m = 5, 1
    t = LaurentSeries.monomial(1, 1, p)
    t1, t2 = t, -(1 / t)
    orbit = OrbitLabel.of((1, 1), (t1, t2))
    f = CongruenceFunction.from_pullback(MatrixLF.antidiagonal(2, p), m)
    expected = _kloosterman_sum(p, t1, t2, m, radius=1, modulus=2)
    assert expected == Psi_char(1 / t) * Fraction(1, p)
    assert orbital_J(orbit, f, 1) == expected


def _random_coordinate(rng, p):
    return LaurentSeries(p, -1, [rng.randrange(p) for _ in range(3)])


def test_orbit_point_is_injective(rng):
    p = 7
    t = LaurentSeries.monomial(1, 1, p)
    orbit = OrbitLabel.of((1, 1), (t, -(1 / t)))
    identity = MatrixLF.identity(2, p)
    seen = {}
    while len(seen) < 50:
        x, y = _random_coordinate(rng, p), _random_coordinate(rng, p)
        seen[(x, y)] = orbit_point(orbit, _u(x, p), identity, _u(y, p))
    assert len(set(seen.values())) == 50


def test_orbit_point_is_injective_at_rank_three(rng):
    p = 7
    one = LaurentSeries.constant(1, p)
    t = LaurentSeries.monomial(1, 1, p)
    orbit = OrbitLabel.of((2, 1), (one, t))
    seen = {}
    while len(seen) < 50:
        a, b, c, d, e = (_random_coordinate(rng, p) for _ in range(5))
        u1 = MatrixLF(p, [[1, 0, a], [0, 1, b], [0, 0, 1]])
        v = MatrixLF(p, [[1, c, 0], [0, 1, 0], [0, 0, 1]])
        u2 = MatrixLF(p, [[1, 0, d], [0, 1, e], [0, 0, 1]])
        seen[(a, b, c, d, e)] = orbit_point(orbit, u1, v, u2)
    assert len(set(seen.values())) == 50


@pytest.mark.slow
@pytest.mark.parametrize("side", ["J", "I"])
def test_decomposition_on_random_test_functions(rng, side):
    p, m = 7, 1
    t = LaurentSeries.monomial(1, 1, p)
    t1, t2 = t, -(1 / t)
    torus = MatrixLF.diagonal([t1, t2])
    for _ in range(20):
        scale = ExactValue.rational(Fraction(rng.randrange(1, p)), p)
        x0, y0 = _random_coordinate(rng, p), _random_coordinate(rng, p)
        if side == "J":
            base = _tu(x0, p) @ torus @ _u(y0, p)
            f = CongruenceFunction.from_pullback(base, m, scale)
            assert check_decomposition_J(t1, t2, f, radius=2)
        else:
            n0 = _u(x0, p)
            phi = CongruenceFunction(n0.transpose() @ torus @ n0, m, scale, True)
            assert check_decomposition_I(t1, t2, phi, radius=2)
