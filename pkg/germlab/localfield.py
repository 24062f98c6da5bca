"""Exact arithmetic in F_p and in F_p((t)) at finite absolute precision."""

from __future__ import annotations

import logging
import re
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd

from sympy import isprime
from sympy.ntheory import jacobi_symbol, primitive_root, sqrt_mod

from .const import ArithOp, GermlabErrorCode
from .exceptions import IncompatibleFieldError, PrecisionError, PreconditionError

_LOGGER = logging.getLogger(__name__)

_SERIES_RE = re.compile(
    r"^v=(?P<v>-?\d+);c=(?P<c>\d+(?:,\d+)*)(?:;N=(?P<n>-?\d+))?$"
)
_ZERO_RE = re.compile(r"^0(?:;N=(?P<n>-?\d+))?$")


@lru_cache(maxsize=64)
def check_prime(p: int) -> int:
    """Return p if it is an odd prime, raise otherwise."""
    if not isinstance(p, int) or p < 3 or not isprime(p):
        raise PreconditionError(GermlabErrorCode.NOT_ODD_PRIME, f"p={p!r}")
    return p


def _pmin(a: int | None, b: int | None) -> int | None:
    """Minimum of two precisions where None means exact."""
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _padd(a: int | None, b: int) -> int | None:
    return None if a is None else a + b


@dataclass(frozen=True, slots=True)
class ResidueElem:
    """An element of the prime field F_p."""

    value: int
    p: int

    def __post_init__(self) -> None:
        """Reduce the representative into [0, p)."""
        object.__setattr__(self, "value", self.value % self.p)

    def _other(self, other: ResidueElem | int) -> int:
        if isinstance(other, ResidueElem):
            if other.p != self.p:
                raise IncompatibleFieldError(self.p, other.p)
            return other.value
        return other

    def __add__(self, other: ResidueElem | int) -> ResidueElem:
        return ResidueElem(self.value + self._other(other), self.p)

    __radd__ = __add__

    def __sub__(self, other: ResidueElem | int) -> ResidueElem:
        return ResidueElem(self.value - self._other(other), self.p)

    def __rsub__(self, other: int) -> ResidueElem:
        return ResidueElem(other - self.value, self.p)

    def __mul__(self, other: ResidueElem | int) -> ResidueElem:
        return ResidueElem(self.value * self._other(other), self.p)

    __rmul__ = __mul__

    def __neg__(self) -> ResidueElem:
        return ResidueElem(-self.value, self.p)

    def inverse(self) -> ResidueElem:
        """Return the multiplicative inverse."""
        if self.value == 0:
            raise PreconditionError(GermlabErrorCode.DIVISION_BY_ZERO, "0 in F_p")
        return ResidueElem(pow(self.value, -1, self.p), self.p)

    def __truediv__(self, other: ResidueElem | int) -> ResidueElem:
        return self * ResidueElem(self._other(other), self.p).inverse()

    def __pow__(self, k: int) -> ResidueElem:
        if k < 0:
            return self.inverse() ** (-k)
        return ResidueElem(pow(self.value, k, self.p), self.p)

    def __bool__(self) -> bool:
        return self.value != 0

    def lift(self) -> int:
        """Return the representative in [0, p)."""
        return self.value


def legendre(c: ResidueElem) -> int:
    """Return the quadratic character of c: +1, -1, or 0 for c = 0."""
    # The Jacobi symbol at an odd prime is the Legendre symbol.
    return int(jacobi_symbol(c.value, c.p))


class LaurentSeries:
    """An element of F_p((t)) known modulo t^precision.

    Coefficients are stored from the valuation upwards with trailing zeros
    stripped; positions between the stored coefficients and the precision
    are known to be zero. A precision of None marks an exact value with
    finitely many terms. ZERO is the value with no stored coefficients and
    no valuation; an inexact ZERO means "divisible by t^precision".
    """

    __slots__ = ("p", "valuation", "coeffs", "precision")

    p: int
    valuation: int | None
    coeffs: tuple[int, ...]
    precision: int | None

    def __init__(
        self,
        p: int,
        start: int,
        coeffs: Sequence[int],
        precision: int | None = None,
    ) -> None:
        """Build and normalize c_0 t^start + c_1 t^(start+1) + ... mod t^precision."""
        values = [c % p for c in coeffs]
        if precision is not None:
            values = values[: max(0, precision - start)]
        lead = 0
        while lead < len(values) and values[lead] == 0:
            lead += 1
        values = values[lead:]
        while values and values[-1] == 0:
            values.pop()
        self.p = p
        self.precision = precision
        self.coeffs = tuple(values)
        self.valuation = start + lead if values else None

    # Constructors

    @classmethod
    def zero(cls, p: int, precision: int | None = None) -> LaurentSeries:
        """Return ZERO, exact or known modulo t^precision."""
        return cls(p, 0, (), precision)

    @classmethod
    def constant(
        cls, c: int | ResidueElem, p: int, precision: int | None = None
    ) -> LaurentSeries:
        """Return the constant series c."""
        value = c.value if isinstance(c, ResidueElem) else c
        return cls(p, 0, (value,), precision)

    @classmethod
    def monomial(
        cls, c: int, k: int, p: int, precision: int | None = None
    ) -> LaurentSeries:
        """Return c * t^k."""
        return cls(p, k, (c,), precision)

    # Basic properties

    @property
    def is_zero(self) -> bool:
        """Return True for ZERO (exact or to the known precision)."""
        return self.valuation is None

    @property
    def is_exact(self) -> bool:
        """Return True when every coefficient is known."""
        return self.precision is None

    @property
    def is_monomial(self) -> bool:
        """Return True for a nonzero single-term value."""
        return len(self.coeffs) == 1

    def _effective_valuation(self) -> int | None:
        """Valuation used by the precision rules; None for exact ZERO."""
        if self.valuation is not None:
            return self.valuation
        return self.precision

    def coefficient(self, index: int) -> int:
        """Return the coefficient of t^index, raising if it is not known."""
        if self.precision is not None and index >= self.precision:
            raise PrecisionError(
                f"coefficient {index} requested at precision {self.precision}"
            )
        if self.valuation is None or index < self.valuation:
            return 0
        offset = index - self.valuation
        return self.coeffs[offset] if offset < len(self.coeffs) else 0

    def residue(self) -> ResidueElem:
        """Return the residue of the unit part, i.e. the leading coefficient."""
        if self.valuation is None:
            raise PreconditionError(GermlabErrorCode.ZERO_ARGUMENT, "residue of 0")
        return ResidueElem(self.coeffs[0], self.p)

    def unit_part(self) -> LaurentSeries:
        """Return x * t^(-v(x))."""
        if self.valuation is None:
            raise PreconditionError(GermlabErrorCode.ZERO_ARGUMENT, "unit part of 0")
        return self.shift(-self.valuation)

    def norm(self) -> Fraction:
        """Return |x| = p^(-v(x)) as an exact rational."""
        if self.valuation is None:
            if self.precision is None:
                return Fraction(0)
            raise PrecisionError("norm of an inexact zero")
        return Fraction(self.p) ** (-self.valuation)

    def shift(self, k: int) -> LaurentSeries:
        """Return t^k * x."""
        start = self.valuation if self.valuation is not None else 0
        return LaurentSeries(self.p, start + k, self.coeffs, _padd(self.precision, k))

    def truncate(self, precision: int) -> LaurentSeries:
        """Return x known only modulo t^precision."""
        new = _pmin(self.precision, precision)
        start = self.valuation if self.valuation is not None else 0
        return LaurentSeries(self.p, start, self.coeffs, new)

    def refine(self, digit: int) -> LaurentSeries:
        """Return the sub-ball of x whose next unknown coefficient is digit."""
        if self.precision is None:
            raise PrecisionError("an exact value has no unknown digit")
        level = self.precision
        if self.valuation is None:
            return LaurentSeries(self.p, level, (digit,), level + 1)
        padded = list(self.coeffs) + [0] * (level - self.valuation - len(self.coeffs))
        return LaurentSeries(self.p, self.valuation, [*padded, digit], level + 1)

    # Arithmetic

    def _coerce(self, other: LaurentSeries | ResidueElem | int) -> LaurentSeries:
        if isinstance(other, LaurentSeries):
            if other.p != self.p:
                raise IncompatibleFieldError(self.p, other.p)
            return other
        if isinstance(other, ResidueElem):
            if other.p != self.p:
                raise IncompatibleFieldError(self.p, other.p)
            return LaurentSeries.constant(other.value, self.p)
        if isinstance(other, int):
            return LaurentSeries.constant(other, self.p)
        return NotImplemented

    def _add(self, other: LaurentSeries, sign: int) -> LaurentSeries:
        precision = _pmin(self.precision, other.precision)
        if other.valuation is None:
            return self.truncate(precision) if precision is not None else self
        if self.valuation is None:
            neg = other if sign == 1 else -other
            return neg.truncate(precision) if precision is not None else neg
        start = min(self.valuation, other.valuation)
        end = max(
            self.valuation + len(self.coeffs), other.valuation + len(other.coeffs)
        )
        if precision is not None:
            end = min(end, precision)
        if end <= start:
            return LaurentSeries(self.p, start, (), precision)
        out = [0] * (end - start)
        for i, c in enumerate(self.coeffs):
            k = self.valuation + i - start
            if k < len(out):
                out[k] += c
        for i, c in enumerate(other.coeffs):
            k = other.valuation + i - start
            if k < len(out):
                out[k] += sign * c
        return LaurentSeries(self.p, start, out, precision)

    def __add__(self, other: LaurentSeries | ResidueElem | int) -> LaurentSeries:
        other = self._coerce(other)
        return self._add(other, 1)

    __radd__ = __add__

    def __sub__(self, other: LaurentSeries | ResidueElem | int) -> LaurentSeries:
        other = self._coerce(other)
        return self._add(other, -1)

    def __rsub__(self, other: ResidueElem | int) -> LaurentSeries:
        return self._coerce(other)._add(self, -1)

    def __neg__(self) -> LaurentSeries:
        start = self.valuation if self.valuation is not None else 0
        return LaurentSeries(self.p, start, [-c for c in self.coeffs], self.precision)

    def __mul__(self, other: LaurentSeries | ResidueElem | int) -> LaurentSeries:
        other = self._coerce(other)
        vx = self._effective_valuation()
        vy = other._effective_valuation()
        if (self.valuation is None and self.precision is None) or (
            other.valuation is None and other.precision is None
        ):
            return LaurentSeries.zero(self.p)
        assert vx is not None and vy is not None
        precision = _pmin(_padd(self.precision, vy), _padd(other.precision, vx))
        if self.valuation is None or other.valuation is None:
            return LaurentSeries.zero(self.p, precision)
        start = self.valuation + other.valuation
        length = len(self.coeffs) + len(other.coeffs) - 1
        if precision is not None:
            length = min(length, precision - start)
        if length <= 0:
            return LaurentSeries(self.p, start, (), precision)
        out = [0] * length
        ycoeffs = other.coeffs
        for i, a in enumerate(self.coeffs):
            if i >= length:
                break
            if a == 0:
                continue
            for j in range(min(len(ycoeffs), length - i)):
                out[i + j] += a * ycoeffs[j]
        return LaurentSeries(self.p, start, out, precision)

    __rmul__ = __mul__

    def inverse(self) -> LaurentSeries:
        """Return 1/x with precision N - 2v(x)."""
        if self.valuation is None:
            raise PreconditionError(
                GermlabErrorCode.DIVISION_BY_ZERO, "inverse of a zero series"
            )
        v = self.valuation
        inv0 = pow(self.coeffs[0], -1, self.p)
        if self.precision is None:
            if not self.is_monomial:
                raise PrecisionError(
                    "inverse of an exact non-monomial needs a precision cap"
                )
            return LaurentSeries(self.p, -v, (inv0,))
        length = self.precision - v
        unit = list(self.coeffs) + [0] * max(0, length - len(self.coeffs))
        out = [inv0]
        for k in range(1, length):
            acc = 0
            for j in range(1, min(k, len(self.coeffs) - 1) + 1):
                acc += unit[j] * out[k - j]
            out.append((-acc * inv0) % self.p)
        return LaurentSeries(self.p, -v, out, self.precision - 2 * v)

    def __truediv__(self, other: LaurentSeries | ResidueElem | int) -> LaurentSeries:
        other = self._coerce(other)
        if (
            other.precision is None
            and other.valuation is not None
            and not other.is_monomial
            and self.precision is not None
        ):
            # An exact divisor only needs as many terms as the numerator carries.
            vx = self._effective_valuation()
            assert vx is not None
            other = other.truncate(self.precision - vx + other.valuation)
        return self * other.inverse()

    def __rtruediv__(self, other: ResidueElem | int) -> LaurentSeries:
        return self._coerce(other) * self.inverse()

    def __pow__(self, k: int) -> LaurentSeries:
        if k < 0:
            return self.inverse() ** (-k)
        result = LaurentSeries.constant(1, self.p)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def agrees_with(self, other: LaurentSeries) -> bool:
        """Return True when x and y coincide at their common precision."""
        return (self - self._coerce(other)).is_zero

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return (
            self.p == other.p
            and self.valuation == other.valuation
            and self.coeffs == other.coeffs
            and self.precision == other.precision
        )

    def __hash__(self) -> int:
        return hash((self.p, self.valuation, self.coeffs, self.precision))

    def __repr__(self) -> str:
        return f"LaurentSeries({lf_format(self)!r}, p={self.p})"


def lf_arith(x: LaurentSeries, y: LaurentSeries, op: ArithOp) -> LaurentSeries:
    """Apply one of the four field operations with precision propagation."""
    if x.p != y.p:
        raise IncompatibleFieldError(x.p, y.p)
    if op is ArithOp.ADD:
        return x + y
    if op is ArithOp.SUB:
        return x - y
    if op is ArithOp.MUL:
        return x * y
    return x / y


def lf_inverse(x: LaurentSeries) -> LaurentSeries:
    """Return 1/x with precision N - 2v(x)."""
    return x.inverse()


def lf_pow(x: LaurentSeries, k: int) -> LaurentSeries:
    """Return x**k; negative k goes through lf_inverse."""
    return x**k


def lf_from_int(c: int, p: int) -> LaurentSeries:
    """Return the exact constant series c mod p."""
    return LaurentSeries.constant(c % p, p)


def lf_sqrt(x: LaurentSeries) -> LaurentSeries:
    """Return the Hensel square root of x with leading coefficient in [1, p/2]."""
    p = x.p
    if x.valuation is None:
        if x.precision is None:
            return x
        return LaurentSeries.zero(p, x.precision // 2)
    if x.valuation % 2:
        raise PreconditionError(
            GermlabErrorCode.ODD_VALUATION, f"v(x)={x.valuation}"
        )
    lead = x.coeffs[0]
    if legendre(ResidueElem(lead, p)) != 1:
        raise PreconditionError(
            GermlabErrorCode.NON_RESIDUE, f"{lead} is not a square mod {p}"
        )
    root = int(sqrt_mod(lead, p))
    root = min(root, p - root)
    half = x.valuation // 2
    if x.precision is None:
        if not x.is_monomial:
            raise PrecisionError("square root of an exact non-monomial")
        return LaurentSeries(p, half, (root,))
    length = x.precision - x.valuation
    unit = list(x.coeffs) + [0] * max(0, length - len(x.coeffs))
    inv_two_root = pow(2 * root, -1, p)
    out = [root]
    for k in range(1, length):
        acc = sum(out[j] * out[k - j] for j in range(1, k))
        out.append(((unit[k] - acc) * inv_two_root) % p)
    return LaurentSeries(p, half, out, half + length)


def roots_of_unity(r: int, p: int) -> tuple[LaurentSeries, ...]:
    """Return all z in F with z^r = 1, as exact constants in increasing order."""
    check_prime(p)
    if r < 1:
        raise PreconditionError(GermlabErrorCode.INVALID_PARAMS, f"r={r}")
    d = gcd(r, p - 1)
    g = int(primitive_root(p))
    step = (p - 1) // d
    values = sorted({pow(g, k * step, p) for k in range(d)})
    return tuple(LaurentSeries.constant(z, p) for z in values)


@dataclass(frozen=True, slots=True)
class Composition:
    """A composition (r_1, ..., r_m) of r: the block type of a standard Levi."""

    parts: tuple[int, ...]

    def __post_init__(self) -> None:
        """Validate positivity."""
        if not self.parts or any(part < 1 for part in self.parts):
            raise PreconditionError(
                GermlabErrorCode.INVALID_PARAMS, f"composition {self.parts}"
            )

    @property
    def r(self) -> int:
        """Return the rank, i.e. the sum of the parts."""
        return sum(self.parts)

    def blocks(self) -> list[range]:
        """Return the 0-based index range of every block."""
        out = []
        start = 0
        for part in self.parts:
            out.append(range(start, start + part))
            start += part
        return out

    def block_of(self, index: int) -> int:
        """Return the block number that contains a 0-based index."""
        for number, block in enumerate(self.blocks()):
            if index in block:
                return number
        raise IndexError(index)


def compositions(r: int) -> Iterator[Composition]:
    """Yield the 2^(r-1) compositions of r in lexicographic order."""
    if r < 1:
        raise PreconditionError(GermlabErrorCode.INVALID_PARAMS, f"r={r}")

    def _walk(rest: int) -> Iterator[tuple[int, ...]]:
        if rest == 0:
            yield ()
            return
        for first in range(1, rest + 1):
            for tail in _walk(rest - first):
                yield (first, *tail)

    for parts in _walk(r):
        yield Composition(parts)


def lf_format(x: LaurentSeries) -> str:
    """Encode x as `v=<int>;c=<c0,...>;N=<int>`, ZERO as `0`."""
    suffix = "" if x.precision is None else f";N={x.precision}"
    if x.valuation is None:
        return f"0{suffix}"
    coeffs = ",".join(str(c) for c in x.coeffs)
    return f"v={x.valuation};c={coeffs}{suffix}"


def lf_parse(text: str, p: int) -> LaurentSeries:
    """Decode the textual encoding produced by lf_format."""
    text = text.strip()
    if match := _ZERO_RE.match(text):
        n = match.group("n")
        return LaurentSeries.zero(p, int(n) if n is not None else None)
    match = _SERIES_RE.match(text)
    if match is None:
        raise PreconditionError(GermlabErrorCode.MALFORMED_SERIES, text)
    coeffs = [int(c) for c in match.group("c").split(",")]
    if any(c >= p for c in coeffs) or coeffs[0] == 0:
        raise PreconditionError(GermlabErrorCode.MALFORMED_SERIES, text)
    n = match.group("n")
    precision = int(n) if n is not None else None
    valuation = int(match.group("v"))
    if precision is not None and valuation >= precision:
        raise PreconditionError(GermlabErrorCode.MALFORMED_SERIES, text)
    return LaurentSeries(p, valuation, coeffs, precision)
