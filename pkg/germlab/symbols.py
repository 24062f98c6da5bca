"""Hilbert symbol and Weil constant over F_p((t))."""

from __future__ import annotations

import logging
from fractions import Fraction
from functools import lru_cache

from .const import DEFAULT_BUDGET, GermlabErrorCode
from .exactvalue import (
    DomainSpec,
    ExactValue,
    Psi_char,
    abs_power,
    gauss_sum,
    half,
    integrate,
    sqrt_q,
)
from .exceptions import IncompatibleFieldError, PreconditionError
from .localfield import LaurentSeries, ResidueElem, check_prime, legendre

_LOGGER = logging.getLogger(__name__)

Triple = tuple[int, int, int]


def _check_nonzero(*values: LaurentSeries) -> None:
    for value in values:
        if value.is_zero:
            raise PreconditionError(GermlabErrorCode.ZERO_ARGUMENT, repr(value))
    if len({value.p for value in values}) > 1:
        raise IncompatibleFieldError(values[0].p, values[1].p)


def hilbert(a: LaurentSeries, b: LaurentSeries) -> int:
    """Return the tame Hilbert symbol (a, b)."""
    _check_nonzero(a, b)
    assert a.valuation is not None and b.valuation is not None
    p = a.p
    va, vb = a.valuation, b.valuation
    minus_one = legendre(ResidueElem(-1, p))
    value = minus_one ** ((va * vb) % 2)
    value *= legendre(a.residue()) ** (vb % 2)
    value *= legendre(b.residue()) ** (va % 2)
    return value


def _square_class(x: LaurentSeries) -> tuple[int, int]:
    """Return (residue of the unit part, v(x) mod 2)."""
    assert x.valuation is not None
    return x.residue().value, x.valuation % 2


def _mul3(x: Triple, y: Triple, p: int) -> Triple:
    return (
        x[0] * y[0] % p,
        (x[0] * y[1] + x[1] * y[0]) % p,
        (x[0] * y[2] + x[1] * y[1] + x[2] * y[0]) % p,
    )


@lru_cache(maxsize=16)
def _squares_mod_t3(p: int) -> dict[Triple, bool]:
    """Map each square mod t^3 to whether it is the square of a unit."""
    out: dict[Triple, bool] = {}
    for z0 in range(p):
        for z1 in range(p):
            for z2 in range(p):
                square = _mul3((z0, z1, z2), (z0, z1, z2), p)
                out[square] = out.get(square, False) or z0 != 0
    return out


def hilbert_oracle(a: LaurentSeries, b: LaurentSeries) -> int:
    """Decide (a, b) by searching z^2 = a x^2 + b y^2 with a primitive vector mod t^3."""
    _check_nonzero(a, b)
    p = a.p
    squares = _squares_mod_t3(p)

    def scaled(x: LaurentSeries) -> dict[Triple, bool]:
        unit, parity = _square_class(x)
        factor: Triple = (0, unit, 0) if parity else (unit, 0, 0)
        out: dict[Triple, bool] = {}
        for square, from_unit in squares.items():
            key = _mul3(factor, square, p)
            out[key] = out.get(key, False) or from_unit
        return out

    a_values = scaled(a)
    b_values = scaled(b)
    for ax2, x_unit in a_values.items():
        for by2, y_unit in b_values.items():
            total = tuple((u + w) % p for u, w in zip(ax2, by2, strict=True))
            # With x, y in tO the total lies in t^2 O and z is forced into tO.
            if (x_unit or y_unit) and total in squares:
                return 1
    return -1


def square_class_representatives(p: int) -> tuple[LaurentSeries, ...]:
    """Return 1, u, t, ut with u the least quadratic non-residue."""
    check_prime(p)
    u = next(c for c in range(2, p) if legendre(ResidueElem(c, p)) == -1)
    return (
        LaurentSeries.constant(1, p),
        LaurentSeries.constant(u, p),
        LaurentSeries.monomial(1, 1, p),
        LaurentSeries.monomial(u, 1, p),
    )


def _quadratic_integral(b: LaurentSeries, extra_modulus: int, budget: int) -> ExactValue:
    """Return the integral over O of Psi(b x^2)."""
    assert b.valuation is not None
    modulus = max(1, -b.valuation) + extra_modulus
    domain = DomainSpec(
        p=b.p,
        centers=(LaurentSeries.zero(b.p),),
        exponents=(0,),
        modulus=modulus,
    )
    return integrate(domain, lambda xs: Psi_char(b * xs[0] * xs[0]), budget)


@lru_cache(maxsize=512)
def weil_gamma(
    a: LaurentSeries, extra_modulus: int = 0, budget: int = DEFAULT_BUDGET
) -> ExactValue:
    """Return gamma(a, Psi) from the Fourier identity with the test function char(O)."""
    _check_nonzero(a)
    assert a.valuation is not None
    # Only the constant term of 1/a x^2 and below is ever read; for v(a) < 0
    # the leading term of a already fixes 1/a to that precision.
    inverse = a.truncate(max(2 * a.valuation + 2, a.valuation + 1)).inverse()
    numerator = _quadratic_integral(half(a), extra_modulus, budget)
    denominator = _quadratic_integral(-half(inverse), extra_modulus, budget)
    if denominator.is_zero:
        raise PreconditionError(
            GermlabErrorCode.DEGENERATE_WEIL_INTEGRAL, f"a={a!r}"
        )
    return abs_power(a, 1, 2) * numerator / denominator


def weil_gamma_closed(a: LaurentSeries) -> ExactValue:
    """Return the tame closed form of gamma(a, Psi)."""
    _check_nonzero(a)
    assert a.valuation is not None
    p = a.p
    if a.valuation % 2 == 0:
        return ExactValue.one(p)
    sign = legendre(a.residue() * 2)
    # g / sqrt(p) = g * sqrt(p) / p
    return gauss_sum(p) * sqrt_q(p) * Fraction(sign, p)


def gamma_law_check(a: LaurentSeries, b: LaurentSeries) -> bool:
    """Return whether gamma(a)gamma(b) = gamma(ab)gamma(1)(a, b) holds exactly."""
    one = LaurentSeries.constant(1, a.p)
    lhs = weil_gamma(a) * weil_gamma(b)
    rhs = weil_gamma(a * b) * weil_gamma(one) * hilbert(a, b)
    if lhs != rhs:
        _LOGGER.warning("Weil constant law fails at a=%s, b=%s", a, b)
    return lhs == rhs
