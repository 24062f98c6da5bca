"""Shared fixtures for the germlab test suite."""

from __future__ import annotations

import random
from collections.abc import Callable

import pytest

from germlab.localfield import LaurentSeries, lf_parse


@pytest.fixture
def small_primes() -> list[int]:
    """Odd primes small enough for exhaustive checks."""
    return [5, 7, 11, 13]


@pytest.fixture
def rng() -> random.Random:
    """A seeded generator so sampled checks are reproducible."""
    return random.Random(20240817)


@pytest.fixture
def series() -> Callable[[str, int], LaurentSeries]:
    """Parse the CLI text encoding, p = 7 unless given."""

    def _parse(text: str, p: int = 7) -> LaurentSeries:
        return lf_parse(text, p)

    return _parse


@pytest.fixture
def random_unit(rng: random.Random) -> Callable[[int, int, int], LaurentSeries]:
    """Draw t^v times a random unit known modulo t^precision."""

    def _draw(p: int, valuation: int, precision: int) -> LaurentSeries:
        coeffs = [rng.randrange(1, p)] + [
            rng.randrange(p) for _ in range(precision - valuation - 1)
        ]
        return LaurentSeries(p, valuation, coeffs, precision)

    return _draw
