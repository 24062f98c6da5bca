"""Kloosterman orbital integrals at ranks 2 and 3 and the rank-2 identities."""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

from .const import DEFAULT_BUDGET, GermlabErrorCode, Membership
from .exactvalue import (
    ExactValue,
    Psi_char,
    half,
    integrate_balls,
    stable_integral,
    sum_values,
    theta_char,
)
from .exceptions import PrecisionError, PreconditionError
from .germs import GermParams, count_c1_exponent, germ_K
from .localfield import Composition, LaurentSeries, roots_of_unity
from .matrices import MatrixLF

_LOGGER = logging.getLogger(__name__)

SUPPORTED_RANKS = (2, 3)

Entry = tuple[int, int]


@dataclass(frozen=True)
class OrbitLabel:
    """A relevant element w_M t: a composition and one torus value per block."""

    composition: Composition
    torus: tuple[LaurentSeries, ...]

    def __post_init__(self) -> None:
        """Validate the label."""
        if len(self.torus) != len(self.composition.parts):
            raise PreconditionError(
                GermlabErrorCode.INVALID_PARAMS,
                f"{len(self.torus)} torus values for {self.composition.parts}",
            )
        if any(value.is_zero for value in self.torus):
            raise PreconditionError(GermlabErrorCode.ZERO_ARGUMENT, "torus value 0")

    @classmethod
    def of(cls, parts: Sequence[int], torus: Sequence[LaurentSeries]) -> OrbitLabel:
        """Build from plain sequences."""
        return cls(Composition(tuple(parts)), tuple(torus))

    @property
    def r(self) -> int:
        """Return the rank."""
        return self.composition.r

    @property
    def p(self) -> int:
        """Return the residue characteristic."""
        return self.torus[0].p

    def radical_entries(self) -> list[Entry]:
        """Return the positions (i, j), i < j, of N_w: different blocks."""
        block = self.composition.block_of
        return [
            (i, j)
            for i in range(self.r)
            for j in range(i + 1, self.r)
            if block(i) != block(j)
        ]

    def levi_entries(self) -> list[Entry]:
        """Return the positions (i, j), i < j, of V_w: same block."""
        block = self.composition.block_of
        return [
            (i, j)
            for i in range(self.r)
            for j in range(i + 1, self.r)
            if block(i) == block(j)
        ]


def _check_rank(r: int) -> None:
    if r not in SUPPORTED_RANKS:
        raise PreconditionError(GermlabErrorCode.UNSUPPORTED_RANK, f"r={r}")


def _unipotent(
    p: int, r: int, entries: Sequence[Entry], values: Sequence[LaurentSeries]
) -> MatrixLF:
    """Return the upper unitriangular matrix with the given off-diagonal entries."""
    rows: list[list[LaurentSeries | int]] = [[int(i == j) for j in range(r)] for i in range(r)]
    for (i, j), value in zip(entries, values, strict=True):
        rows[i][j] = value
    return MatrixLF(p, rows)


def _decide_entry(entry: LaurentSeries, threshold: int) -> Membership:
    """Decide v(entry) >= threshold."""
    if entry.valuation is not None:
        return Membership.INSIDE if entry.valuation >= threshold else Membership.OUTSIDE
    if entry.precision is None or entry.precision >= threshold:
        return Membership.INSIDE
    return Membership.UNDECIDED


@dataclass(frozen=True)
class CongruenceFunction:
    """scale * char(base K_m), K_m = Id + t^m gl_r(O), optionally restricted to S_r."""

    base: MatrixLF
    level: int
    scale: ExactValue
    symmetric_only: bool = False

    def __post_init__(self) -> None:
        """Validate the level and the base."""
        if self.level < 1:
            raise PreconditionError(GermlabErrorCode.INVALID_PARAMS, f"m={self.level}")
        if self.base.det().is_zero:
            raise PreconditionError(GermlabErrorCode.DIVISION_BY_ZERO, "singular base")

    @classmethod
    def from_pullback(
        cls,
        pulled_back_base: MatrixLF,
        level: int,
        scale: ExactValue | None = None,
        symmetric_only: bool = False,
    ) -> CongruenceFunction:
        """Return f with f(w_r g) = char(pulled_back_base K_m)(g)."""
        p, r = pulled_back_base.p, pulled_back_base.size
        base = MatrixLF.antidiagonal(r, p) @ pulled_back_base
        return cls(base, level, scale or ExactValue.one(p), symmetric_only)

    @cached_property
    def _base_det(self) -> LaurentSeries:
        return self.base.det()

    @cached_property
    def _base_adjugate(self) -> MatrixLF:
        return self.base.adjugate()

    @cached_property
    def _det_identity(self) -> MatrixLF:
        return MatrixLF.identity(self.r, self.p).scale(self._base_det)

    @property
    def p(self) -> int:
        """Return the residue characteristic."""
        return self.base.p

    @property
    def r(self) -> int:
        """Return the rank."""
        return self.base.size

    def membership(self, g: MatrixLF) -> Membership:
        """Decide g in base K_m (and g symmetric when restricted) at g's precision.

        Uses adj(base) g - det(base) Id in det(base) t^m gl_r(O), so base is
        never inverted.
        """
        if self.symmetric_only:
            for i in range(self.r):
                for j in range(i + 1, self.r):
                    if not (g[i, j] - g[j, i]).is_zero:
                        return Membership.OUTSIDE
        det = self._base_det
        assert det.valuation is not None
        threshold = self.level + det.valuation
        residual = self._base_adjugate @ g - self._det_identity
        undecided = False
        for row in residual.rows:
            for entry in row:
                outcome = _decide_entry(entry, threshold)
                if outcome is Membership.OUTSIDE:
                    return outcome
                undecided = undecided or outcome is Membership.UNDECIDED
        return Membership.UNDECIDED if undecided else Membership.INSIDE

    def evaluate(self, g: MatrixLF) -> ExactValue | None:
        """Return the value at g, None outside the support; raise when undecided."""
        if self.scale.is_zero:
            return None
        outcome = self.membership(g)
        if outcome is Membership.UNDECIDED:
            raise PrecisionError("coset membership undecided")
        return self.scale if outcome is Membership.INSIDE else None


def relevant_representative(o: OrbitLabel) -> MatrixLF:
    """Return w_M t = diag(a_i w_{r_i})."""
    p = o.p
    blocks = [
        MatrixLF.antidiagonal(size, p).scale(value)
        for size, value in zip(o.composition.parts, o.torus, strict=True)
    ]
    return MatrixLF.block_diagonal(blocks)


def _orbit_product(
    o: OrbitLabel, u1: MatrixLF, v: MatrixLF, u2: MatrixLF
) -> MatrixLF:
    w = MatrixLF.antidiagonal(o.r, o.p)
    return w @ u1.transpose() @ relevant_representative(o) @ v @ u2


def _check_pattern(n: MatrixLF, allowed: Sequence[Entry], what: str) -> None:
    if not n.is_upper_unitriangular():
        raise PreconditionError(GermlabErrorCode.NOT_UNIPOTENT, what)
    for i in range(n.size):
        for j in range(i + 1, n.size):
            if (i, j) not in allowed and not n[i, j].is_zero:
                raise PreconditionError(
                    GermlabErrorCode.NOT_IN_UNIPOTENT_RADICAL, f"{what} entry {(i, j)}"
                )


def orbit_point(o: OrbitLabel, u1: MatrixLF, v: MatrixLF, u2: MatrixLF) -> MatrixLF:
    """Return w_r tu1 w t v u2 with u1, u2 in N_w and v in V_w."""
    radical = o.radical_entries()
    _check_pattern(u1, radical, "u1")
    _check_pattern(u2, radical, "u2")
    _check_pattern(v, o.levi_entries(), "v")
    return _orbit_product(o, u1, v, u2)


def _theta_entries(
    p: int, values: Sequence[LaurentSeries], entries: Sequence[Entry]
) -> LaurentSeries:
    """Return the sum of the superdiagonal coordinates among entries."""
    total = LaurentSeries.zero(p)
    for (i, j), value in zip(entries, values, strict=True):
        if j == i + 1:
            total = total + value
    return total


def _orbital_J_at(  # noqa: N802
    o: OrbitLabel, f: CongruenceFunction, radius: int, budget: int
) -> ExactValue:
    p, r = o.p, o.r
    radical = o.radical_entries()
    levi = o.levi_entries()
    k = len(radical)

    def integrand(coords: Sequence[LaurentSeries]) -> ExactValue | None:
        c1, cv, c2 = coords[:k], coords[k : k + len(levi)], coords[k + len(levi) :]
        u1 = _unipotent(p, r, radical, c1)
        v = _unipotent(p, r, levi, cv)
        u2 = _unipotent(p, r, radical, c2)
        value = f.evaluate(_orbit_product(o, u1, v, u2))
        if value is None:
            return None
        superdiagonal = (
            _theta_entries(p, c1, radical)
            + _theta_entries(p, cv, levi)
            + _theta_entries(p, c2, radical)
        )
        return value * Psi_char(half(superdiagonal))

    nvars = 2 * k + len(levi)
    if nvars == 0:
        raise PreconditionError(GermlabErrorCode.UNSUPPORTED_RANK, "no coordinates")
    return integrate_balls(p, nvars, radius, integrand, budget)


def orbital_J(  # noqa: N802
    o: OrbitLabel, f: CongruenceFunction, radius: int, budget: int = DEFAULT_BUDGET
) -> ExactValue:
    """Return J(w t, f), the integral of f(w_r tu1 w t v u2) theta(u1 u2 v)."""
    _check_rank(o.r)
    return stable_integral(
        lambda radius: _orbital_J_at(o, f, radius, budget), radius, "orbital_J"
    )


def _i_side_entries(o: OrbitLabel) -> list[Entry]:
    """Return the N_r coordinates of a section of N_r / stabilizer."""
    entries = [(i, j) for i in range(o.r) for j in range(i + 1, o.r)]
    if o.composition.parts == (3,):
        # n_23 = 0 is a section; the stabilizer of w_3 z is one-dimensional.
        entries.remove((1, 2))
    return entries


def _orbital_I_at(  # noqa: N802
    o: OrbitLabel, phi: CongruenceFunction, radius: int, budget: int
) -> ExactValue:
    p, r = o.p, o.r
    entries = _i_side_entries(o)
    s = relevant_representative(o)

    def integrand(coords: Sequence[LaurentSeries]) -> ExactValue | None:
        n = _unipotent(p, r, entries, coords)
        value = phi.evaluate(n.transpose() @ s @ n)
        if value is None:
            return None
        return value * Psi_char(_theta_entries(p, coords, entries))

    return integrate_balls(p, len(entries), radius, integrand, budget)


def orbital_I(  # noqa: N802
    o: OrbitLabel, phi: CongruenceFunction, radius: int, budget: int = DEFAULT_BUDGET
) -> ExactValue:
    """Return I(w t, phi), the integral of phi(tn w t n) theta^2(n) over N_r mod stabilizer."""
    _check_rank(o.r)
    return stable_integral(
        lambda radius: _orbital_I_at(o, phi, radius, budget), radius, "orbital_I"
    )


def unit_lemma_function(r: int, p: int, m: int) -> CongruenceFunction:
    """Return c1(r) char(w_r K_m cap S_r) with c1(r) = vol(t^m O)^(-floor(r^2/4))."""
    scale = ExactValue.rational(Fraction(p) ** (m * count_c1_exponent(r)), p)
    return CongruenceFunction(MatrixLF.antidiagonal(r, p), m, scale, symmetric_only=True)


def unit_sym_test(
    r: int, z: LaurentSeries, m: int, radius: int = 1, budget: int = DEFAULT_BUDGET
) -> ExactValue:
    """Return I(w_r z, c1(r) char(w_r K_m cap S_r)): 1 for z = 1 and 0 otherwise."""
    _check_rank(r)
    if not any(z.agrees_with(root) for root in roots_of_unity(r, z.p)):
        raise PreconditionError(GermlabErrorCode.NOT_A_ROOT_OF_UNITY, f"z={z!r}, r={r}")
    orbit = OrbitLabel.of((r,), (z,))
    return orbital_I(orbit, unit_lemma_function(r, z.p, m), radius, budget)


# Intermediate integrals at rank (1, 1)


def _check_rank_one(*blocks: MatrixLF) -> None:
    for block in blocks:
        if block.size != 1:
            raise PreconditionError(
                GermlabErrorCode.UNSUPPORTED_RANK, f"block of size {block.size}"
            )


def _intermediate_J_at(  # noqa: N802
    g1: MatrixLF, g2: MatrixLF, f: CongruenceFunction, radius: int, budget: int
) -> ExactValue:
    p = g1.p
    a, b = g1[0, 0], g2[0, 0]
    w = MatrixLF.antidiagonal(2, p)

    def integrand(coords: Sequence[LaurentSeries]) -> ExactValue | None:
        x, y = coords
        ay = a * y
        block = MatrixLF(p, [[a, ay], [x * a, x * ay + b]])
        value = f.evaluate(w @ block)
        if value is None:
            return None
        return value * Psi_char(half(x + y))

    return integrate_balls(p, 2, radius, integrand, budget)


def intermediate_J(  # noqa: N802
    g1: MatrixLF,
    g2: MatrixLF,
    f: CongruenceFunction,
    radius: int,
    budget: int = DEFAULT_BUDGET,
) -> ExactValue:
    """Return the intermediate integral J^1_1[diag(g1, g2), f] over X and Y."""
    _check_rank_one(g1, g2)
    return stable_integral(
        lambda radius: _intermediate_J_at(g1, g2, f, radius, budget),
        radius,
        "intermediate_J",
    )


def _intermediate_I_at(  # noqa: N802
    g1: MatrixLF, g2: MatrixLF, phi: CongruenceFunction, radius: int, budget: int
) -> ExactValue:
    p = g1.p
    a, b = g1[0, 0], g2[0, 0]

    def integrand(coords: Sequence[LaurentSeries]) -> ExactValue | None:
        (x,) = coords
        ax = a * x
        value = phi.evaluate(MatrixLF(p, [[a, ax], [ax, x * ax + b]]))
        if value is None:
            return None
        twisted = MatrixLF(p, [[1, x * 2], [0, 1]])
        return value * theta_char(twisted)

    return integrate_balls(p, 1, radius, integrand, budget)


def intermediate_I(  # noqa: N802
    g1: MatrixLF,
    g2: MatrixLF,
    phi: CongruenceFunction,
    radius: int,
    budget: int = DEFAULT_BUDGET,
) -> ExactValue:
    """Return the I-side intermediate integral over X with the character theta(2X block)."""
    _check_rank_one(g1, g2)
    return stable_integral(
        lambda radius: _intermediate_I_at(g1, g2, phi, radius, budget),
        radius,
        "intermediate_I",
    )


def _scalar(x: LaurentSeries) -> MatrixLF:
    return MatrixLF(x.p, [[x]])


def partial_J1(  # noqa: N802
    t1: LaurentSeries, f: CongruenceFunction, radius: int, budget: int = DEFAULT_BUDGET
) -> Callable[[LaurentSeries], ExactValue]:
    """Return g2 -> J_1(t1, g2), the inner integral with the first block fixed."""
    return lambda g2: intermediate_J(_scalar(t1), _scalar(g2), f, radius, budget)


def partial_I1(  # noqa: N802
    t1: LaurentSeries, phi: CongruenceFunction, radius: int, budget: int = DEFAULT_BUDGET
) -> Callable[[LaurentSeries], ExactValue]:
    """Return g2 -> I_1(t1, g2), the inner integral with the first block fixed."""
    return lambda g2: intermediate_I(_scalar(t1), _scalar(g2), phi, radius, budget)


def rank_one_orbital(h: Callable[[LaurentSeries], ExactValue], t: LaurentSeries) -> ExactValue:
    """Return the rank-1 orbital integral of h at t, a point evaluation."""
    return h(t)


@dataclass(frozen=True)
class IdentityReport:
    """Both sides of an exact identity."""

    lhs: ExactValue
    rhs: ExactValue

    @property
    def equal(self) -> bool:
        """Return True when both sides agree exactly."""
        return self.lhs == self.rhs


def decomposition_report_J(  # noqa: N802
    t1: LaurentSeries,
    t2: LaurentSeries,
    f: CongruenceFunction,
    radius: int = 3,
    budget: int = DEFAULT_BUDGET,
) -> IdentityReport:
    """Return J(diag(t1, t2), f) against the iterated intermediate integral."""
    lhs = orbital_J(OrbitLabel.of((1, 1), (t1, t2)), f, radius, budget)
    rhs = rank_one_orbital(partial_J1(t1, f, radius, budget), t2)
    return IdentityReport(lhs, rhs)


def decomposition_report_I(  # noqa: N802
    t1: LaurentSeries,
    t2: LaurentSeries,
    phi: CongruenceFunction,
    radius: int = 3,
    budget: int = DEFAULT_BUDGET,
) -> IdentityReport:
    """Return I(diag(t1, t2), phi) against the iterated intermediate integral."""
    lhs = orbital_I(OrbitLabel.of((1, 1), (t1, t2)), phi, radius, budget)
    rhs = rank_one_orbital(partial_I1(t1, phi, radius, budget), t2)
    return IdentityReport(lhs, rhs)


def check_decomposition_J(  # noqa: N802
    t1: LaurentSeries, t2: LaurentSeries, f: CongruenceFunction, radius: int = 3
) -> bool:
    """Return whether the J-side decomposition identity holds at rank (1, 1)."""
    report = decomposition_report_J(t1, t2, f, radius)
    if not report.equal:
        _LOGGER.warning("J decomposition fails at t1=%s, t2=%s", t1, t2)
    return report.equal


def check_decomposition_I(  # noqa: N802
    t1: LaurentSeries, t2: LaurentSeries, phi: CongruenceFunction, radius: int = 3
) -> bool:
    """Return whether the I-side decomposition identity holds at rank (1, 1)."""
    report = decomposition_report_I(t1, t2, phi, radius)
    if not report.equal:
        _LOGGER.warning("I decomposition fails at t1=%s, t2=%s", t1, t2)
    return report.equal


def germ_expansion_check(
    beta_unit: LaurentSeries,
    f: CongruenceFunction,
    m: int,
    va: int,
    radius: int | None = None,
    budget: int = DEFAULT_BUDGET,
) -> IdentityReport:
    """Compare J(alpha beta, f) with the sum over z^2 = 1 of K(z alpha) J(w_2 z^-1 beta, f).

    alpha = diag(a, -1/a) with a = t^va, at rank 2.
    """
    p = beta_unit.p
    if f.r != 2:
        raise PreconditionError(GermlabErrorCode.UNSUPPORTED_RANK, f"r={f.r}")
    a = LaurentSeries.monomial(1, va, p)
    radius = va + 1 if radius is None else radius
    full = OrbitLabel.of((1, 1), (a * beta_unit, -(1 / a) * beta_unit))
    lhs = orbital_J(full, f, radius, budget)
    terms = []
    for z in roots_of_unity(2, p):
        small = orbital_J(OrbitLabel.of((2,), ((1 / z) * beta_unit,)), f, radius, budget)
        terms.append(germ_K(GermParams(p, 2, m, z * a)) * small)
    report = IdentityReport(lhs, sum_values(terms, p))
    if not report.equal:
        _LOGGER.warning(
            "Germ expansion differs at v(a)=%s (m=%s); outside the germ regime this is expected",
            va,
            m,
        )
    return report
