"""Exact values in the cyclotomic field Q(zeta_{4p}) and the finite-sum integrators."""

from __future__ import annotations

import json
import logging
from collections import Counter
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache, reduce
from itertools import product
from math import gcd, prod
from typing import Any

from sympy import Poly, Symbol, cyclotomic_poly

from .const import DEFAULT_BUDGET, MAX_REFINEMENT_DEPTH, ZETA_BASIS, GermlabErrorCode
from .exceptions import (
    BudgetExceededError,
    IncompatibleFieldError,
    PrecisionError,
    PreconditionError,
    StabilizationError,
)
from .localfield import LaurentSeries, ResidueElem, check_prime, legendre
from .matrices import MatrixLF

_LOGGER = logging.getLogger(__name__)

Rational = Fraction | int


@lru_cache(maxsize=32)
def _zeta_table(p: int) -> tuple[tuple[int, ...], ...]:
    """Return the reduced coordinates of zeta^k for k in [0, 4p)."""
    check_prime(p)
    x = Symbol("x")
    # Monic with integer coefficients, highest degree first.
    modulus = [int(c) for c in Poly(cyclotomic_poly(4 * p, x), x).all_coeffs()]
    degree = len(modulus) - 1
    tail = modulus[1:][::-1]
    table = []
    current = [1] + [0] * (degree - 1)
    for _ in range(4 * p):
        table.append(tuple(current))
        top = current[-1]
        current = [0] + current[:-1]
        if top:
            current = [c - top * t for c, t in zip(current, tail, strict=True)]
    return tuple(table)


def field_degree(p: int) -> int:
    """Return phi(4p) = 2(p - 1)."""
    return 2 * (p - 1)


class ExactValue:
    """An element of Q(zeta_{4p}) in reduced power-basis coordinates."""

    __slots__ = ("p", "coeffs", "_hash")

    p: int
    coeffs: tuple[Fraction, ...]

    def __init__(self, p: int, coeffs: Sequence[Rational]) -> None:
        """Build from already reduced coordinates."""
        if len(coeffs) != field_degree(p):
            raise PreconditionError(
                GermlabErrorCode.INVALID_PARAMS,
                f"expected {field_degree(p)} coordinates, got {len(coeffs)}",
            )
        self.p = p
        self.coeffs = tuple(Fraction(c) for c in coeffs)
        self._hash: int | None = None

    @classmethod
    def zero(cls, p: int) -> ExactValue:
        """Return 0."""
        return cls(p, [0] * field_degree(p))

    @classmethod
    def rational(cls, value: Rational, p: int) -> ExactValue:
        """Return the rational constant value."""
        coeffs: list[Rational] = [0] * field_degree(p)
        coeffs[0] = value
        return cls(p, coeffs)

    @classmethod
    def one(cls, p: int) -> ExactValue:
        """Return 1."""
        return cls.rational(1, p)

    @classmethod
    def zeta(cls, p: int, k: int = 1) -> ExactValue:
        """Return zeta^k with zeta = exp(2 pi i / 4p)."""
        return cls(p, _zeta_table(p)[k % (4 * p)])

    @classmethod
    def from_zeta_weights(cls, p: int, weights: dict[int, Rational]) -> ExactValue:
        """Return sum of weight * zeta^exponent."""
        table = _zeta_table(p)
        out = [Fraction(0)] * field_degree(p)
        for exponent, weight in weights.items():
            if not weight:
                continue
            row = table[exponent % (4 * p)]
            for i, c in enumerate(row):
                if c:
                    out[i] += weight * c
        return cls(p, out)

    def _check(self, other: ExactValue) -> None:
        if other.p != self.p:
            raise IncompatibleFieldError(self.p, other.p)

    @property
    def is_zero(self) -> bool:
        """Return True for 0."""
        return not any(self.coeffs)

    @property
    def is_rational(self) -> bool:
        """Return True when the value lies in Q."""
        return not any(self.coeffs[1:])

    def as_rational(self) -> Fraction:
        """Return the value as a Fraction, raising when it is irrational."""
        if not self.is_rational:
            raise PreconditionError(GermlabErrorCode.INVALID_PARAMS, "not rational")
        return self.coeffs[0]

    def __add__(self, other: ExactValue | Rational) -> ExactValue:
        if not isinstance(other, ExactValue):
            other = ExactValue.rational(other, self.p)
        self._check(other)
        return ExactValue(self.p, [a + b for a, b in zip(self.coeffs, other.coeffs, strict=True)])

    __radd__ = __add__

    def __neg__(self) -> ExactValue:
        return ExactValue(self.p, [-c for c in self.coeffs])

    def __sub__(self, other: ExactValue | Rational) -> ExactValue:
        return self + (-other)

    def __rsub__(self, other: Rational) -> ExactValue:
        return (-self) + other

    def __mul__(self, other: ExactValue | Rational) -> ExactValue:
        if not isinstance(other, ExactValue):
            factor = Fraction(other)
            return ExactValue(self.p, [c * factor for c in self.coeffs])
        self._check(other)
        weights: dict[int, Fraction] = {}
        for i, a in enumerate(self.coeffs):
            if not a:
                continue
            for j, b in enumerate(other.coeffs):
                if b:
                    weights[i + j] = weights.get(i + j, Fraction(0)) + a * b
        return ExactValue.from_zeta_weights(self.p, weights)

    __rmul__ = __mul__

    def galois(self, k: int) -> ExactValue:
        """Apply the automorphism zeta -> zeta^k, gcd(k, 4p) = 1."""
        n = 4 * self.p
        if gcd(k, n) != 1:
            raise PreconditionError(GermlabErrorCode.INVALID_PARAMS, f"k={k}")
        return ExactValue.from_zeta_weights(
            self.p, {(i * k) % n: c for i, c in enumerate(self.coeffs) if c}
        )

    def conj(self) -> ExactValue:
        """Return the complex conjugate, zeta -> zeta^(-1)."""
        return self.galois(-1)

    def inverse(self) -> ExactValue:
        """Return 1/x as the product of the other conjugates over the norm."""
        if self.is_zero:
            raise PreconditionError(GermlabErrorCode.DIVISION_BY_ZERO, "inverse of 0")
        if self.is_rational:
            return ExactValue.rational(1 / self.coeffs[0], self.p)
        n = 4 * self.p
        others = [self.galois(k) for k in range(2, n) if gcd(k, n) == 1]
        cofactor = reduce(lambda a, b: a * b, others)
        norm = (self * cofactor).as_rational()
        return cofactor * (1 / norm)

    def __truediv__(self, other: ExactValue | Rational) -> ExactValue:
        if not isinstance(other, ExactValue):
            return self * (1 / Fraction(other))
        return self * other.inverse()

    def __pow__(self, k: int) -> ExactValue:
        if k < 0:
            return self.inverse() ** (-k)
        result = ExactValue.one(self.p)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other: object) -> bool:
        if isinstance(other, int | Fraction):
            return self.is_rational and self.coeffs[0] == other
        if not isinstance(other, ExactValue):
            return NotImplemented
        return self.p == other.p and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.p, self.coeffs))
        return self._hash

    def __repr__(self) -> str:
        return f"ExactValue(p={self.p}, {self.pretty()})"

    def pretty(self) -> str:
        """Render as a sum of c*zeta^k terms."""
        terms = [
            f"{c}" if k == 0 else f"{c}*ζ^{k}"
            for k, c in enumerate(self.coeffs)
            if c
        ]
        return " + ".join(terms) if terms else "0"

    def to_dict(self) -> dict[str, Any]:
        """Return the JSON-ready encoding."""
        return {
            "p": self.p,
            "basis": ZETA_BASIS.format(order=4 * self.p),
            "coeffs": [str(c) for c in self.coeffs],
        }

    def to_json(self) -> str:
        """Return the canonical JSON text."""
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str | dict[str, Any]) -> ExactValue:
        """Decode the encoding produced by to_json."""
        data = json.loads(text) if isinstance(text, str) else text
        p = int(data["p"])
        if data.get("basis") != ZETA_BASIS.format(order=4 * p):
            raise PreconditionError(
                GermlabErrorCode.INVALID_PARAMS, f"basis {data.get('basis')!r}"
            )
        return cls(p, [Fraction(c) for c in data["coeffs"]])


class PowerAccumulator:
    """Collects rational weights per power of zeta and converts once."""

    def __init__(self, p: int) -> None:
        """Initialize an empty accumulator."""
        self.p = p
        self.weights: dict[int, Fraction] = {}

    def add(self, exponent: int, weight: Rational = 1) -> None:
        """Add weight * zeta^exponent."""
        key = exponent % (4 * self.p)
        self.weights[key] = self.weights.get(key, Fraction(0)) + weight

    def add_psi(self, k: int, weight: Rational = 1) -> None:
        """Add weight * psi(k) = weight * zeta_p^k."""
        self.add(4 * k, weight)

    def value(self) -> ExactValue:
        """Return the accumulated ExactValue."""
        return ExactValue.from_zeta_weights(self.p, self.weights)


# Characters


def psi_char(c: ResidueElem) -> ExactValue:
    """Return psi(c) = zeta_p^c with zeta_p = zeta^4."""
    return ExactValue.zeta(c.p, 4 * c.value)


def Psi_char(x: LaurentSeries) -> ExactValue:  # noqa: N802
    """Return Psi(x) = psi(coefficient of t^-1 in x)."""
    return psi_char(ResidueElem(x.coefficient(-1), x.p))


def half(x: LaurentSeries) -> LaurentSeries:
    """Return x / 2 in F."""
    return x * pow(2, -1, x.p)


def theta_char(n: MatrixLF) -> ExactValue:
    """Return Psi of half the superdiagonal sum of a unipotent upper matrix."""
    if not n.is_upper_unitriangular():
        raise PreconditionError(GermlabErrorCode.NOT_UNIPOTENT, repr(n))
    total = LaurentSeries.zero(n.p)
    for entry in n.superdiagonal():
        total = total + entry
    return Psi_char(half(total))


@lru_cache(maxsize=32)
def gauss_sum(p: int) -> ExactValue:
    """Return g = sum over c in F_p* of legendre(c) psi(c)."""
    acc = PowerAccumulator(p)
    for c in range(1, p):
        acc.add_psi(c, legendre(ResidueElem(c, p)))
    return acc.value()


@lru_cache(maxsize=32)
def imaginary_unit(p: int) -> ExactValue:
    """Return i = zeta^p."""
    return ExactValue.zeta(p, p)


@lru_cache(maxsize=32)
def sqrt_q(p: int) -> ExactValue:
    """Return +sqrt(p) under the embedding zeta = exp(2 pi i / 4p)."""
    g = gauss_sum(p)
    if p % 4 == 1:
        return g
    return -(imaginary_unit(p) * g)


def q_power(p: int, k: int) -> ExactValue:
    """Return p^(k/2) exactly."""
    whole, odd = divmod(k, 2)
    value = ExactValue.rational(Fraction(p) ** whole, p)
    return value * sqrt_q(p) if odd else value


def abs_power(a: LaurentSeries, numerator: int, denominator: int = 1) -> ExactValue:
    """Return |a|^(numerator/denominator) for denominator 1 or 2."""
    if a.valuation is None:
        raise PreconditionError(GermlabErrorCode.ZERO_ARGUMENT, "|0|^s")
    if denominator == 1:
        return q_power(a.p, -2 * a.valuation * numerator)
    if denominator == 2:
        return q_power(a.p, -a.valuation * numerator)
    raise PreconditionError(GermlabErrorCode.INVALID_PARAMS, f"denominator {denominator}")


# Integration


Integrand = Callable[[Sequence[LaurentSeries]], ExactValue | None]


@dataclass(frozen=True, slots=True)
class Constraint:
    """The condition v(polynomial(x)) >= exponent."""

    polynomial: Callable[[Sequence[LaurentSeries]], LaurentSeries]
    exponent: int

    def holds(self, xs: Sequence[LaurentSeries]) -> bool:
        """Evaluate the congruence, raising when it is not decidable."""
        value = self.polynomial(xs)
        if value.valuation is not None:
            if value.precision is not None and value.valuation >= value.precision:
                raise PrecisionError("constraint value has no known digits")
            return value.valuation >= self.exponent
        if value.precision is not None and value.precision < self.exponent:
            raise PrecisionError(
                f"constraint needs precision {self.exponent}, got {value.precision}"
            )
        return True


@dataclass(frozen=True, slots=True)
class DomainSpec:
    """Product of balls center_i + t^k_i O with congruence constraints, read mod t^M."""

    p: int
    centers: tuple[LaurentSeries, ...]
    exponents: tuple[int, ...]
    modulus: int
    constraints: tuple[Constraint, ...] = field(default_factory=tuple)

    @property
    def nvars(self) -> int:
        """Return the number of variables."""
        return len(self.centers)

    def size(self) -> int:
        """Return the number of representative tuples."""
        return prod(self.p ** (self.modulus - k) for k in self.exponents)

    def representatives(self, index: int) -> list[LaurentSeries]:
        """Return the residue classes of variable index mod t^M."""
        p = self.p
        k = self.exponents[index]
        center = self.centers[index].truncate(self.modulus)
        width = self.modulus - k
        return [
            center + LaurentSeries(p, k, digits, self.modulus)
            for digits in product(range(p), repeat=width)
        ]


def integrate(
    domain: DomainSpec, integrand: Integrand, budget: int = DEFAULT_BUDGET
) -> ExactValue:
    """Return the volume-weighted sum of a locally constant integrand."""
    p = domain.p
    if any(k > domain.modulus for k in domain.exponents):
        raise PreconditionError(
            GermlabErrorCode.INVALID_PARAMS, "ball radius finer than the modulus"
        )
    size = domain.size()
    if size > budget:
        raise BudgetExceededError(size, budget)
    _LOGGER.debug(
        "Integrating %s variables mod t^%s over %s tuples",
        domain.nvars,
        domain.modulus,
        size,
    )
    counts: Counter[ExactValue] = Counter()
    reps = [domain.representatives(i) for i in range(domain.nvars)]
    for xs in product(*reps):
        if not all(c.holds(xs) for c in domain.constraints):
            continue
        value = integrand(xs)
        if value is not None:
            counts[value] += 1
    volume = Fraction(1, p ** (domain.modulus * domain.nvars))
    total = ExactValue.zero(p)
    for value, count in counts.items():
        total = total + value * (count * volume)
    return total


def integrate_balls(
    p: int,
    nvars: int,
    radius: int,
    integrand: Integrand,
    budget: int = DEFAULT_BUDGET,
) -> ExactValue:
    """Integrate over (t^-radius O)^nvars by adaptive ball refinement.

    The integrand receives coordinates known modulo t^k (one k per
    coordinate) and returns its value on that ball, None when the ball lies
    outside the support, or raises PrecisionError when it is not yet
    constant there. Undecided balls are split along their coarsest
    coordinate into p sub-balls.
    """
    check_prime(p)
    start = tuple(LaurentSeries.zero(p, -radius) for _ in range(nvars))
    stack = [start]
    counts: dict[ExactValue, Fraction] = {}
    evaluations = 0
    while stack:
        ball = stack.pop()
        evaluations += 1
        if evaluations > budget:
            raise BudgetExceededError(evaluations, budget)
        try:
            value = integrand(ball)
        except PrecisionError:
            precisions = [x.precision for x in ball]
            index = min(range(nvars), key=lambda i: precisions[i])
            level = precisions[index]
            assert level is not None
            if level + radius >= MAX_REFINEMENT_DEPTH:
                raise StabilizationError(
                    GermlabErrorCode.MODULUS_NOT_STABLE,
                    f"integrand not locally constant after refining to t^{level}",
                ) from None
            for digit in range(p):
                refined = list(ball)
                refined[index] = ball[index].refine(digit)
                stack.append(tuple(refined))
            continue
        if value is None or value.is_zero:
            continue
        exponent = sum(x.precision for x in ball)  # type: ignore[misc]
        volume = Fraction(p) ** (-exponent)
        counts[value] = counts.get(value, Fraction(0)) + volume
    _LOGGER.debug("Ball integration at radius %s used %s evaluations", radius, evaluations)
    total = ExactValue.zero(p)
    for value, volume in counts.items():
        total = total + value * volume
    return total


def stable_integral(
    compute: Callable[[int], ExactValue], radius: int, what: str
) -> ExactValue:
    """Evaluate at radius and radius + 1 and insist that they agree."""
    first = compute(radius)
    second = compute(radius + 1)
    if first != second:
        raise StabilizationError(
            GermlabErrorCode.RADIUS_NOT_STABLE,
            f"{what} changed between radius {radius} and {radius + 1}",
        )
    return first


def sum_values(values: Iterable[ExactValue], p: int) -> ExactValue:
    """Return the sum of values, 0 for an empty iterable."""
    total = ExactValue.zero(p)
    for value in values:
        total = total + value
    return total
