"""Exact Kloosterman orbital integrals and Shalika germs over F_p((t))."""

from __future__ import annotations

import json
from pathlib import Path

from .const import DOMAIN, EvalMode, GermKind
from .exactvalue import ExactValue
from .exceptions import (
    BudgetExceededError,
    GermlabException,
    IncompatibleFieldError,
    PrecisionError,
    PreconditionError,
    StabilizationError,
)
from .germs import (
    GermParams,
    closed_I,
    closed_J,
    eval_I,
    eval_J,
    germ_K,
    germ_L,
    germ_L_via_K,
    regime_scan,
)
from .localfield import LaurentSeries, ResidueElem, lf_format, lf_parse
from .matrices import MatrixLF
from .orbital import CongruenceFunction, OrbitLabel, orbital_I, orbital_J
from .symbols import hilbert, weil_gamma

__version__: str = json.loads(
    (Path(__file__).with_name("manifest.json")).read_text(encoding="utf-8")
)["version"]

__all__ = [
    "DOMAIN",
    "BudgetExceededError",
    "CongruenceFunction",
    "EvalMode",
    "ExactValue",
    "GermKind",
    "GermParams",
    "GermlabException",
    "IncompatibleFieldError",
    "LaurentSeries",
    "MatrixLF",
    "OrbitLabel",
    "PrecisionError",
    "PreconditionError",
    "ResidueElem",
    "StabilizationError",
    "closed_I",
    "closed_J",
    "eval_I",
    "eval_J",
    "germ_K",
    "germ_L",
    "germ_L_via_K",
    "hilbert",
    "lf_format",
    "lf_parse",
    "orbital_I",
    "orbital_J",
    "regime_scan",
    "weil_gamma",
]
