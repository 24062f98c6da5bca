"""Germ sums J(a, r) and I(a, r), their closed forms, and the germ functions K and L."""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import prod

import numpy as np

from .const import DEFAULT_BUDGET, EvalMode, GermKind, GermlabErrorCode
from .exactvalue import (
    Constraint,
    DomainSpec,
    ExactValue,
    PowerAccumulator,
    Psi_char,
    abs_power,
    integrate,
)
from .exceptions import PreconditionError
from .localfield import LaurentSeries, ResidueElem, check_prime, lf_sqrt
from .symbols import hilbert, weil_gamma

_LOGGER = logging.getLogger(__name__)


def GERM_REGIME_THRESHOLD(m: int) -> int:  # noqa: N802
    """Return the smallest v(a) at which germ-regime identities are asserted."""
    return 2 * m + 1


@dataclass(frozen=True)
class GermParams:
    """Prime p, rank r, congruence level m and scaling element a with v(a) >= 1."""

    p: int
    r: int
    m: int
    a: LaurentSeries

    def __post_init__(self) -> None:
        """Validate the bundle."""
        check_prime(self.p)
        if self.r < 1 or self.m < 1:
            raise PreconditionError(
                GermlabErrorCode.INVALID_PARAMS, f"r={self.r}, m={self.m}"
            )
        if self.a.p != self.p or self.a.valuation is None or self.a.valuation < 1:
            raise PreconditionError(
                GermlabErrorCode.INVALID_PARAMS, f"a={self.a!r} needs v(a) >= 1"
            )

    @classmethod
    def from_unit(
        cls, p: int, r: int, m: int, va: int, ua: Sequence[int] = (1,)
    ) -> GermParams:
        """Build a = t^va * (ua[0] + ua[1] t + ...)."""
        check_prime(p)
        if not ua or ua[0] % p == 0:
            raise PreconditionError(
                GermlabErrorCode.INVALID_PARAMS, f"unit part {list(ua)} is not a unit"
            )
        return cls(p, r, m, LaurentSeries(p, va, ua))

    @property
    def va(self) -> int:
        """Return v(a)."""
        assert self.a.valuation is not None
        return self.a.valuation

    @property
    def ell(self) -> int:
        """Return floor(r / 2)."""
        return self.r // 2

    @property
    def in_germ_regime(self) -> bool:
        """Return True when v(a) reaches GERM_REGIME_THRESHOLD(m)."""
        return self.va >= GERM_REGIME_THRESHOLD(self.m)

    @cached_property
    def inverse_two_a(self) -> LaurentSeries:
        """Return 1/(2a), known beyond the constant term."""
        two_a = (self.a * 2).truncate(2 * self.va + self.m + 1)
        return two_a.inverse()

    @cached_property
    def a_inverse(self) -> LaurentSeries:
        """Return 1/a, known beyond the constant term."""
        return self.a.truncate(2 * self.va + self.m + 1).inverse()


def _gamma_inverse_a(gp: GermParams) -> ExactValue:
    return weil_gamma(gp.a_inverse)


def _conj_power(gamma: ExactValue, k: int) -> ExactValue:
    """Return gamma^k, using conj(gamma) = 1/gamma for negative k."""
    return gamma.conj() ** (-k) if k < 0 else gamma**k


def _warn_outside_regime(gp: GermParams, what: str) -> None:
    if not gp.in_germ_regime:
        _LOGGER.warning(
            "%s evaluated at v(a)=%s below the germ regime threshold %s",
            what,
            gp.va,
            GERM_REGIME_THRESHOLD(gp.m),
        )


# Brute-force and dynamic-programming evaluators


@dataclass(frozen=True)
class _SumShape:
    """A germ sum over x_i in 1 + t^m O of Psi(sum w_i x_i / 2a).

    The constraint is prod x_i^(e_i) = 1 mod a t^m. The last variable is the
    one the dynamic program solves for.
    """

    weights: tuple[int, ...]
    exponents: tuple[int, ...]

    @property
    def nvars(self) -> int:
        return len(self.weights)


def _j_shape(r: int) -> _SumShape:
    return _SumShape((1,) * r, (1,) * r)


def _i_shape(r: int) -> _SumShape:
    ell = r // 2
    if r % 2 == 0:
        return _SumShape((2,) * ell, (2,) * ell)
    return _SumShape((2,) * ell + (1,), (2,) * ell + (1,))


def _naive_sum(
    gp: GermParams, shape: _SumShape, budget: int, extra_modulus: int
) -> ExactValue:
    p, m, va = gp.p, gp.m, gp.va
    modulus = m + va + extra_modulus
    one = LaurentSeries.constant(1, p)
    inverse_two_a = gp.inverse_two_a

    def constraint(xs: Sequence[LaurentSeries]) -> LaurentSeries:
        total = one
        for x, e in zip(xs, shape.exponents, strict=True):
            total = total * x**e
        return total - 1

    def integrand(xs: Sequence[LaurentSeries]) -> ExactValue:
        total = LaurentSeries.zero(p)
        for x, w in zip(xs, shape.weights, strict=True):
            total = total + x * w
        return Psi_char(total * inverse_two_a)

    domain = DomainSpec(
        p=p,
        centers=(one,) * shape.nvars,
        exponents=(m,) * shape.nvars,
        modulus=modulus,
        constraints=(Constraint(constraint, va + m),),
    )
    return integrate(domain, integrand, budget) * Fraction(p**m)


class _UnitGroup:
    """H = (1 + t^m O) / (1 + t^w O) with elements indexed by base-p digits."""

    def __init__(self, p: int, m: int, w: int) -> None:
        self.p = p
        self.m = m
        self.w = w
        self.length = w - m
        self.order = p**self.length
        index = np.arange(self.order, dtype=np.int64)
        self.powers = p ** np.arange(self.length, dtype=np.int64)
        self.digits = (index[:, None] // self.powers[None, :]) % p

    def element(self, index: int) -> LaurentSeries:
        """Return the coset representative with the given index."""
        coeffs = [1] + [0] * (self.m - 1) + [int(d) for d in self.digits[index]]
        return LaurentSeries(self.p, 0, coeffs, self.w)

    def index_of(self, x: LaurentSeries) -> int:
        """Return the index of a unit x = 1 mod t^m."""
        return sum(
            x.coefficient(self.m + j) * self.p**j for j in range(self.length)
        )

    def times(self, y: int) -> np.ndarray:
        """Return the permutation h -> h * y as an index array."""
        e = self.digits[y]
        out = self.digits + e[None, :]
        for j in range(self.length):
            for k in range(self.length - self.m - j):
                if e[k]:
                    out[:, j + k + self.m] += self.digits[:, j] * e[k]
        return (out % self.p) @ self.powers


def _dp_sum(gp: GermParams, shape: _SumShape) -> ExactValue:
    """Evaluate a germ sum by eliminating the last variable.

    Given x_1..x_{k-1}, the constraint pins the last variable to a single
    coset of 1 + t^(v+m) O, and the remaining integrand only sees each x_i
    modulo t^w, w = max(v, m). The sum then runs over H^(k-1) as a walk on
    (product in H, exponent of zeta_p).
    """
    p, m, va = gp.p, gp.m, gp.va
    w = max(va, m)
    group = _UnitGroup(p, m, w)
    n = group.order
    k = shape.nvars
    inverse_two_a = gp.inverse_two_a
    elements = [group.element(i) for i in range(n)]

    def psi_exponent(x: LaurentSeries, weight: int) -> int:
        return (x * weight * inverse_two_a).coefficient(-1)

    steps = k - 1
    dtype: type = np.int64 if steps * group.length * np.log2(p) < 62 else object
    state = np.zeros((n, p), dtype=dtype)
    state[0, 0] = 1
    columns = np.arange(p)
    _LOGGER.debug("Germ DP over |H|=%s with %s steps", n, steps)
    for weight, exponent in zip(shape.weights[:-1], shape.exponents[:-1], strict=True):
        shifts = np.array([psi_exponent(y, weight) for y in elements], dtype=np.int64)
        targets = np.array(
            [group.index_of(y**exponent) for y in elements], dtype=np.int64
        )
        # phases[y, e] is the source column of e after multiplying by Psi(y)
        phases = (columns[None, :] - shifts[:, None]) % p
        new = np.zeros_like(state)
        # Only reached rows contribute; h -> h * y^e is a bijection of H.
        reached = np.flatnonzero(state.any(axis=1))
        for h in reached:
            new[group.times(int(h))[targets]] += state[h][phases]
        _LOGGER.debug("Germ DP step reached %s of %s cosets", len(reached), n)
        state = new

    last_weight = shape.weights[-1]
    last_exponent = shape.exponents[-1]
    totals = np.zeros(p, dtype=dtype)
    for h in range(n):
        row = state[h]
        if not row.any():
            continue
        inverse = elements[h].inverse()
        last = inverse if last_exponent == 1 else lf_sqrt(inverse)
        shift = psi_exponent(last, last_weight)
        totals += np.roll(row, shift)
    acc = PowerAccumulator(p)
    scale = Fraction(p**m, p ** (va + m) * p ** (w * steps))
    for e in range(p):
        acc.add_psi(e, int(totals[e]) * scale)
    return acc.value()


def _evaluate(
    gp: GermParams,
    shape: _SumShape,
    mode: EvalMode,
    budget: int,
    extra_modulus: int,
) -> ExactValue:
    if mode is EvalMode.NAIVE:
        return _naive_sum(gp, shape, budget, extra_modulus)
    return _dp_sum(gp, shape)


def eval_J(  # noqa: N802
    gp: GermParams,
    mode: EvalMode = EvalMode.DP,
    budget: int = DEFAULT_BUDGET,
    extra_modulus: int = 0,
) -> ExactValue:
    """Return J(a, r) = vol(t^m O)^-1 times the sum of Psi(sum x_i / 2a).

    The domain is x_i = 1 mod t^m with prod x_i = 1 mod a t^m. The naive
    evaluator enumerates every x_i mod t^(m+v(a)+extra_modulus).
    """
    return _evaluate(gp, _j_shape(gp.r), mode, budget, extra_modulus)


def eval_I(  # noqa: N802
    gp: GermParams,
    mode: EvalMode = EvalMode.DP,
    budget: int = DEFAULT_BUDGET,
    extra_modulus: int = 0,
) -> ExactValue:
    """Return I(a, r).

    For r = 2l the sum is over l variables with prod x_i^2 = 1 and phase
    (x_1 + ... + x_l)/a; for r = 2l + 1 there is one more variable x with
    x_1^2...x_l^2 x = 1 and phase (2x_1 + ... + 2x_l + x)/2a.
    """
    return _evaluate(gp, _i_shape(gp.r), mode, budget, extra_modulus)


# Closed forms


def closed_J(gp: GermParams) -> ExactValue:  # noqa: N802
    """Return |a|^((r+1)/2) Psi(r/2a) (r/2^(r-1), 1/a) gamma(1/a)^(r-1)."""
    p, r = gp.p, gp.r
    if r % p == 0:
        raise PreconditionError(GermlabErrorCode.PRIME_DIVIDES_RANK, f"p={p}, r={r}")
    _warn_outside_regime(gp, "closed_J")
    symbol_arg = LaurentSeries.constant(r * pow(2, -(r - 1), p), p)
    return (
        abs_power(gp.a, r + 1, 2)
        * Psi_char(gp.inverse_two_a * r)
        * hilbert(symbol_arg, gp.a_inverse)
        * _gamma_inverse_a(gp) ** (r - 1)
    )


def _require_large_prime(gp: GermParams) -> None:
    if gp.p <= 2 * gp.r + 1:
        raise PreconditionError(
            GermlabErrorCode.PRIME_TOO_SMALL, f"p={gp.p} needs p > {2 * gp.r + 1}"
        )


def closed_I(gp: GermParams) -> ExactValue:  # noqa: N802
    """Return the closed form of I(a, r) for p > 2r + 1."""
    _require_large_prime(gp)
    _warn_outside_regime(gp, "closed_I")
    p, r = gp.p, gp.r
    k = (r - 1) // 2
    return (
        abs_power(gp.a, k + 2, 2)
        * Psi_char(gp.inverse_two_a * r)
        * hilbert(LaurentSeries.constant(r, p), gp.a_inverse)
        * hilbert(LaurentSeries.constant(pow(2, -1, p), p), gp.a_inverse) ** (r - 1)
        * _gamma_inverse_a(gp) ** k
    )


def ratio_prop(gp: GermParams, mode: EvalMode = EvalMode.DP) -> ExactValue:
    """Return |a|^(l/2) gamma(1/a)^(-l) J(a, r) with l = floor(r/2), as displayed."""
    _require_large_prime(gp)
    ell = gp.ell
    return abs_power(gp.a, ell, 2) * _conj_power(_gamma_inverse_a(gp), -ell) * eval_J(gp, mode)


def ratio_prop_corrected(gp: GermParams, mode: EvalMode = EvalMode.DP) -> ExactValue:
    """Return |a|^(-l/2) gamma(1/a)^(-l) J(a, r), the variant matching closed_I."""
    _require_large_prime(gp)
    ell = gp.ell
    return abs_power(gp.a, -ell, 2) * _conj_power(_gamma_inverse_a(gp), -ell) * eval_J(gp, mode)


def ratio_discrepancy(gp: GermParams, mode: EvalMode = EvalMode.DP) -> ExactValue:
    """Return I(a, r) / ratio_prop(gp); it equals |a|^(-floor(r/2)) in the germ regime."""
    value = eval_I(gp, mode) / ratio_prop(gp, mode)
    if value != abs_power(gp.a, -gp.ell):
        _LOGGER.warning("Unexpected germ ratio discrepancy %s at %s", value.pretty(), gp)
    return value


def even_rank_reduction(gp: GermParams, mode: EvalMode = EvalMode.DP) -> bool:
    """Return whether I(a, 2l) = J(a/2, l)."""
    if gp.r % 2:
        raise PreconditionError(GermlabErrorCode.INVALID_PARAMS, f"r={gp.r} is odd")
    halved = GermParams(gp.p, gp.ell, gp.m, gp.a * pow(2, -1, gp.p))
    return eval_I(gp, mode) == eval_J(halved, mode)


def germ_K(gp: GermParams, mode: EvalMode = EvalMode.DP) -> ExactValue:  # noqa: N802
    """Return K(alpha) = |a|^(-1 - r(r-1)/2) J(a, r)."""
    return abs_power(gp.a, -1 - gp.r * (gp.r - 1) // 2) * eval_J(gp, mode)


def germ_L(gp: GermParams, mode: EvalMode = EvalMode.DP) -> ExactValue:  # noqa: N802
    """Return L(alpha) = |a|^(r - 2 - c2 + l/2) gamma(1/a)^(-l) J(a, r)."""
    _require_large_prime(gp)
    r, ell = gp.r, gp.ell
    twice_exponent = 2 * (r - 2 - count_c2(r)) + ell
    return (
        abs_power(gp.a, twice_exponent, 2)
        * _conj_power(_gamma_inverse_a(gp), -ell)
        * eval_J(gp, mode)
    )


def germ_L_via_K(gp: GermParams, mode: EvalMode = EvalMode.DP) -> ExactValue:  # noqa: N802
    """Return |a|^(floor(r^2/4) + l/2) gamma(1/a)^(-l) K(alpha)."""
    _require_large_prime(gp)
    ell = gp.ell
    return (
        abs_power(gp.a, 2 * count_c1_exponent(gp.r) + ell, 2)
        * _conj_power(_gamma_inverse_a(gp), -ell)
        * germ_K(gp, mode)
    )


# Counting identities


def count_c1_exponent(r: int) -> int:
    """Return floor(r^2/4), the exponent in c1(r) = vol(t^m O)^(-floor(r^2/4))."""
    return r * r // 4


def count_c2(r: int) -> int:
    """Return floor((r^2 + 2r - 3)/4), the number of free variables."""
    return (r * r + 2 * r - 3) // 4


def count_c2_direct(r: int) -> int:
    """Count the entries (i, j), i <= j, with i + j >= r + 1, less the dependent one."""
    off_diagonal = sum(
        1 for i in range(1, r + 1) for j in range(i + 1, r + 1) if i + j >= r + 1
    )
    diagonal = sum(1 for i in range(1, r + 1) if 2 * i >= r + 1)
    return off_diagonal + diagonal - 1


def bracket_identities(r: int) -> bool:
    """Return whether both bracket identities hold at r."""
    c1, c2 = count_c1_exponent(r), count_c2(r)
    first = c2 - (r + 1) // 2 - c1 == -1
    second = r * (r - 1) // 2 + 1 + (r - 2) - c2 == c1
    return first and second


# Quadratic forms over F_p

Matrix = list[list[ResidueElem]]


def quadratic_form_matrix(ell: int, p: int) -> Matrix:
    """Return A with 3 on the diagonal and 2 elsewhere."""
    return [
        [ResidueElem(3 if i == j else 2, p) for j in range(ell)] for i in range(ell)
    ]


def _check_small_ell(ell: int, p: int) -> None:
    check_prime(p)
    if ell < 1:
        raise PreconditionError(GermlabErrorCode.INVALID_PARAMS, f"l={ell}")
    if p <= 2 * ell + 1:
        raise PreconditionError(
            GermlabErrorCode.PRIME_TOO_SMALL, f"p={p} needs p > {2 * ell + 1}"
        )


def diagonalize_quadratic(ell: int, p: int) -> tuple[Matrix, Matrix]:
    """Return (T, D) with T upper unitriangular and T^t A T = D.

    A has 3 on the diagonal and 2 elsewhere; D_ii = (2i+1)/(2i-1).
    """
    _check_small_ell(ell, p)
    work = quadratic_form_matrix(ell, p)
    transform = [[ResidueElem(int(i == j), p) for j in range(ell)] for i in range(ell)]
    for k in range(ell):
        pivot = work[k][k]
        if not pivot:
            raise PreconditionError(GermlabErrorCode.NON_UNIT_PIVOT, f"pivot {k}")
        for j in range(k + 1, ell):
            factor = work[k][j] / pivot
            for row in work:
                row[j] = row[j] - factor * row[k]
            work[j] = [a - factor * b for a, b in zip(work[j], work[k], strict=True)]
            for row in transform:
                row[j] = row[j] - factor * row[k]
    return transform, work


def expected_diagonal(ell: int, p: int) -> list[ResidueElem]:
    """Return (2i+1)/(2i-1) for i = 1..l."""
    return [ResidueElem(2 * i + 1, p) / (2 * i - 1) for i in range(1, ell + 1)]


def congruence_product(transform: Matrix, form: Matrix) -> Matrix:
    """Return T^t A T."""
    size = len(form)

    def mul(x: Matrix, y: Matrix) -> Matrix:
        zero = ResidueElem(0, x[0][0].p)
        return [
            [sum((x[i][k] * y[k][j] for k in range(size)), zero) for j in range(size)]
            for i in range(size)
        ]

    transposed = [list(col) for col in zip(*transform, strict=True)]
    return mul(mul(transposed, form), transform)


def hessian_determinant(ell: int, p: int) -> ResidueElem:
    """Return the product of the diagonalized entries, i.e. 2l + 1 in F_p."""
    _, diagonal = diagonalize_quadratic(ell, p)
    return prod((diagonal[i][i] for i in range(ell)), start=ResidueElem(1, p))


def delta_along_line(ell: int, direction: Iterable[int], p: int) -> LaurentSeries:
    """Return delta(s * direction) = sum 2x_i + prod x_i^-2, x_i = 1 + s d_i, mod s^3."""
    total = LaurentSeries.zero(p, 3)
    product = LaurentSeries.constant(1, p, 3)
    count = 0
    for d in direction:
        x = LaurentSeries(p, 0, (1, d), 3)
        total = total + x * 2
        product = product * (x * x).inverse()
        count += 1
    if count != ell:
        raise PreconditionError(GermlabErrorCode.INVALID_PARAMS, "direction length")
    return total + product


def delta_quadratic_part(ell: int, p: int) -> Matrix:
    """Recover the quadratic Taylor form of delta from its values on lines.

    Uses u = s e_i for the diagonal and u = s (e_i + e_j) for the rest.
    """
    _check_small_ell(ell, p)

    def unit(*indices: int) -> list[int]:
        return [1 if k in indices else 0 for k in range(ell)]

    diag = [
        ResidueElem(delta_along_line(ell, unit(i), p).coefficient(2), p)
        for i in range(ell)
    ]
    out = [[ResidueElem(0, p) for _ in range(ell)] for _ in range(ell)]
    for i in range(ell):
        out[i][i] = diag[i]
        for j in range(i + 1, ell):
            pair = ResidueElem(delta_along_line(ell, unit(i, j), p).coefficient(2), p)
            out[i][j] = out[j][i] = (pair - diag[i] - diag[j]) / 2
    return out


# Regime scan


@dataclass
class RegimeScan:
    """Agreement of evaluated and closed germ sums per v(a)."""

    kind: GermKind
    p: int
    r: int
    m: int
    rows: list[tuple[int, bool]] = field(default_factory=list)

    @property
    def stable_from(self) -> int | None:
        """Return the smallest scanned v(a) from which every row agrees."""
        out = None
        for va, agrees in reversed(self.rows):
            if not agrees:
                break
            out = va
        return out


def regime_scan(
    p: int,
    r: int,
    m: int,
    va_range: Iterable[int],
    kind: GermKind = GermKind.J,
    ua: Sequence[int] = (1,),
) -> RegimeScan:
    """Compare eval and closed germ sums over a range of v(a)."""
    evaluate: Callable[[GermParams], ExactValue]
    closed: Callable[[GermParams], ExactValue]
    if kind is GermKind.J:
        evaluate, closed = eval_J, closed_J
    else:
        evaluate, closed = eval_I, closed_I
    scan = RegimeScan(kind, p, r, m)
    for va in va_range:
        gp = GermParams.from_unit(p, r, m, va, ua)
        agrees = evaluate(gp) == closed(gp)
        if not agrees:
            _LOGGER.warning(
                "%s-sum closed form disagrees at p=%s r=%s m=%s v(a)=%s",
                kind.value.upper(),
                p,
                r,
                m,
                va,
            )
        scan.rows.append((va, agrees))
    return scan
