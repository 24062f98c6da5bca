"""Square matrices over F_p((t)) with tracked precision."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from itertools import permutations

from .const import GermlabErrorCode
from .exceptions import IncompatibleFieldError, PreconditionError
from .localfield import LaurentSeries, _pmin


def _perm_sign(perm: Sequence[int]) -> int:
    sign = 1
    seen = [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        index = start
        while not seen[index]:
            seen[index] = True
            index = perm[index]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


class MatrixLF:
    """An r x r matrix with LaurentSeries entries."""

    __slots__ = ("p", "rows")

    def __init__(self, p: int, rows: Iterable[Iterable[LaurentSeries | int]]) -> None:
        """Build from rows; integer entries become exact constants."""
        built = []
        for row in rows:
            entries = []
            for entry in row:
                if isinstance(entry, int):
                    entry = LaurentSeries.constant(entry, p)
                elif entry.p != p:
                    raise IncompatibleFieldError(p, entry.p)
                entries.append(entry)
            built.append(tuple(entries))
        if any(len(row) != len(built) for row in built):
            raise PreconditionError(
                GermlabErrorCode.INVALID_PARAMS, "matrix must be square"
            )
        self.p = p
        self.rows: tuple[tuple[LaurentSeries, ...], ...] = tuple(built)

    @classmethod
    def identity(cls, r: int, p: int) -> MatrixLF:
        """Return Id_r."""
        return cls(p, [[int(i == j) for j in range(r)] for i in range(r)])

    @classmethod
    def antidiagonal(cls, r: int, p: int) -> MatrixLF:
        """Return w_r = antidiag(1, ..., 1)."""
        return cls(p, [[int(i + j == r - 1) for j in range(r)] for i in range(r)])

    @classmethod
    def diagonal(cls, values: Sequence[LaurentSeries]) -> MatrixLF:
        """Return diag(values)."""
        p = values[0].p
        zero = LaurentSeries.zero(p)
        r = len(values)
        return cls(p, [[values[i] if i == j else zero for j in range(r)] for i in range(r)])

    @classmethod
    def block_diagonal(cls, blocks: Sequence[MatrixLF]) -> MatrixLF:
        """Return the block-diagonal matrix with the given blocks."""
        p = blocks[0].p
        r = sum(block.size for block in blocks)
        rows: list[list[LaurentSeries | int]] = [[0] * r for _ in range(r)]
        offset = 0
        for block in blocks:
            for i in range(block.size):
                for j in range(block.size):
                    rows[offset + i][offset + j] = block.rows[i][j]
            offset += block.size
        return cls(p, rows)

    @property
    def size(self) -> int:
        """Return r."""
        return len(self.rows)

    @property
    def precision(self) -> int | None:
        """Return the minimum entry precision, None when all entries are exact."""
        out: int | None = None
        for row in self.rows:
            for entry in row:
                out = _pmin(out, entry.precision)
        return out

    def __getitem__(self, index: tuple[int, int]) -> LaurentSeries:
        i, j = index
        return self.rows[i][j]

    def transpose(self) -> MatrixLF:
        """Return the transpose."""
        return MatrixLF(self.p, zip(*self.rows, strict=True))

    def __matmul__(self, other: MatrixLF) -> MatrixLF:
        if other.p != self.p:
            raise IncompatibleFieldError(self.p, other.p)
        cols = list(zip(*other.rows, strict=True))
        out = []
        for row in self.rows:
            out_row = []
            for col in cols:
                acc = row[0] * col[0]
                for a, b in zip(row[1:], col[1:], strict=True):
                    if a.is_zero and a.is_exact or b.is_zero and b.is_exact:
                        continue
                    acc = acc + a * b
                out_row.append(acc)
            out.append(out_row)
        return MatrixLF(self.p, out)

    def __add__(self, other: MatrixLF) -> MatrixLF:
        return MatrixLF(
            self.p,
            [
                [a + b for a, b in zip(ra, rb, strict=True)]
                for ra, rb in zip(self.rows, other.rows, strict=True)
            ],
        )

    def __sub__(self, other: MatrixLF) -> MatrixLF:
        return MatrixLF(
            self.p,
            [
                [a - b for a, b in zip(ra, rb, strict=True)]
                for ra, rb in zip(self.rows, other.rows, strict=True)
            ],
        )

    def scale(self, c: LaurentSeries) -> MatrixLF:
        """Return c * self."""
        return MatrixLF(self.p, [[c * e for e in row] for row in self.rows])

    def det(self) -> LaurentSeries:
        """Return the determinant by the Leibniz expansion."""
        r = self.size
        total = LaurentSeries.zero(self.p)
        for perm in permutations(range(r)):
            term = LaurentSeries.constant(_perm_sign(perm), self.p)
            for i in range(r):
                term = term * self.rows[i][perm[i]]
            total = total + term
        return total

    def minor(self, i: int, j: int) -> MatrixLF:
        """Return the matrix with row i and column j removed."""
        return MatrixLF(
            self.p,
            [
                [e for col, e in enumerate(row) if col != j]
                for k, row in enumerate(self.rows)
                if k != i
            ],
        )

    def adjugate(self) -> MatrixLF:
        """Return adj(self), so that adj(g) @ g = det(g) * Id."""
        r = self.size
        if r == 1:
            return MatrixLF.identity(1, self.p)
        out = [
            [
                self.minor(j, i).det() * (-1 if (i + j) % 2 else 1)
                for j in range(r)
            ]
            for i in range(r)
        ]
        return MatrixLF(self.p, out)

    def is_upper_unitriangular(self) -> bool:
        """Return True when self is unipotent upper triangular."""
        for i, row in enumerate(self.rows):
            for j, entry in enumerate(row):
                if j < i and not entry.is_zero:
                    return False
                if j == i and not (entry - 1).is_zero:
                    return False
        return True

    def superdiagonal(self) -> list[LaurentSeries]:
        """Return the entries n_{i, i+1}."""
        return [self.rows[i][i + 1] for i in range(self.size - 1)]

    def agrees_with(self, other: MatrixLF) -> bool:
        """Return True when all entries coincide at their common precision."""
        return all(
            a.agrees_with(b)
            for ra, rb in zip(self.rows, other.rows, strict=True)
            for a, b in zip(ra, rb, strict=True)
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MatrixLF):
            return NotImplemented
        return self.p == other.p and self.rows == other.rows

    def __hash__(self) -> int:
        return hash((self.p, self.rows))

    def __repr__(self) -> str:
        return f"MatrixLF(p={self.p}, rows={self.rows!r})"
