"""Command-line driver for germlab.

Usage examples:
  python -m germlab j-sum --p 7 --r 2 --m 1 --va 3 --mode dp
  python -m germlab hilbert --p 7 --a "v=1;c=1;N=3" --b "v=1;c=1;N=3"
  python -m germlab sweep --out sweep.csv
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from collections.abc import Callable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Any

import voluptuous as vol
import yaml

from .const import (
    BUDGET_ENV_VAR,
    DEFAULT_BUDGET,
    DOMAIN,
    EvalMode,
    ExitCode,
    GermKind,
    GermlabErrorCode,
    OutputFormat,
    Subcommand,
)
from .exactvalue import ExactValue, sum_values
from .exceptions import GermlabException, PreconditionError
from .germs import (
    GermParams,
    bracket_identities,
    closed_I,
    closed_J,
    congruence_product,
    count_c2,
    count_c2_direct,
    diagonalize_quadratic,
    eval_I,
    eval_J,
    expected_diagonal,
    germ_K,
    germ_L,
    germ_L_via_K,
    quadratic_form_matrix,
    ratio_discrepancy,
    ratio_prop,
    ratio_prop_corrected,
    regime_scan,
)
from .localfield import LaurentSeries, ResidueElem, check_prime, legendre, lf_parse
from .matrices import MatrixLF
from .orbital import (
    CongruenceFunction,
    OrbitLabel,
    decomposition_report_I,
    decomposition_report_J,
    germ_expansion_check,
    orbital_I,
    orbital_J,
    unit_sym_test,
)
from .symbols import hilbert, weil_gamma

_LOGGER = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent.parent / "config" / "configuration.yaml"
STRINGS_PATH = Path(__file__).with_name("strings.json")

SWEEP_FIELDS = ("identity", "p", "r", "va", "ua", "ok")


def _odd_prime(value: Any) -> int:
    try:
        return check_prime(int(value))
    except (GermlabException, TypeError, ValueError) as err:
        raise vol.Invalid(f"{value!r} is not an odd prime") from err


RUN_CONFIG_SCHEMA = vol.Schema(
    {
        vol.Required("subcommand"): vol.Coerce(Subcommand),
        vol.Required("p"): _odd_prime,
        vol.Required("r"): vol.All(int, vol.Range(min=1)),
        vol.Required("m"): vol.All(int, vol.Range(min=1)),
        vol.Required("va"): vol.All(int, vol.Range(min=1)),
        vol.Required("ua"): vol.All([int], vol.Length(min=1)),
        vol.Optional("radius", default=None): vol.Any(None, vol.All(int, vol.Range(min=0))),
        vol.Required("mode"): vol.Coerce(EvalMode),
        vol.Required("budget"): vol.All(int, vol.Range(min=1)),
        vol.Required("output"): vol.Coerce(OutputFormat),
        vol.Optional("options", default=dict): dict,
    }
)


@dataclass(frozen=True)
class RunConfig:
    """A validated CLI invocation."""

    subcommand: Subcommand
    p: int
    r: int
    m: int
    va: int
    ua: tuple[int, ...]
    radius: int | None
    mode: EvalMode
    budget: int
    output: OutputFormat
    options: Mapping[str, Any] = field(default_factory=dict)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> RunConfig:
        """Validate with RUN_CONFIG_SCHEMA and build."""
        try:
            valid = RUN_CONFIG_SCHEMA(dict(data))
        except vol.Invalid as err:
            raise PreconditionError(GermlabErrorCode.INVALID_CONFIG, str(err)) from err
        valid["ua"] = tuple(valid["ua"])
        return cls(**valid)

    def germ_params(self, r: int | None = None) -> GermParams:
        """Return the GermParams of this run."""
        return GermParams.from_unit(self.p, r or self.r, self.m, self.va, self.ua)

    def option(self, name: str, default: Any = None) -> Any:
        """Return a subcommand-specific option."""
        value = self.options.get(name)
        return default if value is None else value

    def series(self, name: str, default: str | None = None) -> LaurentSeries:
        """Parse a series-valued option."""
        text = self.option(name, default)
        if text is None:
            raise PreconditionError(GermlabErrorCode.INVALID_CONFIG, f"--{name} is required")
        return lf_parse(text, self.p)


def default_budget() -> int:
    """Return the enumeration budget from GERMLAB_BUDGET or the default."""
    raw = os.environ.get(BUDGET_ENV_VAR)
    if raw is None:
        return DEFAULT_BUDGET
    try:
        return int(raw)
    except ValueError as err:
        raise PreconditionError(
            GermlabErrorCode.INVALID_CONFIG, f"{BUDGET_ENV_VAR}={raw!r}"
        ) from err


@lru_cache(maxsize=1)
def _messages() -> dict[str, str]:
    strings = json.loads(STRINGS_PATH.read_text(encoding="utf-8"))
    return {key: entry["message"] for key, entry in strings["exceptions"].items()}


def load_settings(path: Path | None) -> dict[str, Any]:
    """Load configuration.yaml, or return an empty mapping when it is absent."""
    path = path or DEFAULT_CONFIG_PATH
    if not path.exists():
        return {}
    with path.open(encoding="utf-8") as handle:
        return yaml.safe_load(handle) or {}


def configure_logging(settings: Mapping[str, Any], override: str | None) -> None:
    """Set logger levels from the `logger` section; logs go to stderr."""
    logger_conf = settings.get("logger", {})
    level = (override or logger_conf.get("default", "warning")).upper()
    logging.basicConfig(
        stream=sys.stderr,
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    if override is None:
        for name, name_level in logger_conf.get("logs", {}).items():
            logging.getLogger(name).setLevel(str(name_level).upper())


# Parsing helpers


def _parse_matrix(text: str, p: int) -> MatrixLF:
    try:
        rows = json.loads(text)
    except json.JSONDecodeError as err:
        raise PreconditionError(GermlabErrorCode.INVALID_CONFIG, f"--base {text!r}") from err
    return MatrixLF(
        p,
        [
            [entry if isinstance(entry, int) else lf_parse(entry, p) for entry in row]
            for row in rows
        ],
    )


def _congruence_functions(
    config: RunConfig, default_base: MatrixLF, symmetric: bool
) -> list[CongruenceFunction]:
    """Build the terms of a finite linear combination from --base/--scale."""
    p = config.p
    bases = [_parse_matrix(text, p) for text in config.option("base", [])] or [default_base]
    scales = [Fraction(text) for text in config.option("scale", [])] or [Fraction(1)]
    if len(scales) == 1 and len(bases) > 1:
        scales = scales * len(bases)
    if len(scales) != len(bases):
        raise PreconditionError(
            GermlabErrorCode.INVALID_CONFIG, "--scale must match --base"
        )
    pullback = bool(config.option("pullback", False))
    out = []
    for base, scale in zip(bases, scales, strict=True):
        value = ExactValue.rational(scale, p)
        if pullback:
            out.append(
                CongruenceFunction.from_pullback(base, config.m, value, symmetric)
            )
        else:
            out.append(CongruenceFunction(base, config.m, value, symmetric))
    return out


def _orbit(config: RunConfig) -> OrbitLabel:
    parts = [int(part) for part in str(config.option("parts", "1,1")).split(",")]
    torus = [lf_parse(text, config.p) for text in config.option("torus", [])]
    return OrbitLabel.of(parts, torus)


def _residue_rows(matrix: Sequence[Sequence[ResidueElem]]) -> list[list[int]]:
    return [[entry.value for entry in row] for row in matrix]


def _report(lhs: ExactValue, rhs: ExactValue, **extra: Any) -> dict[str, Any]:
    return {"ok": lhs == rhs, "lhs": lhs, "rhs": rhs, **extra}


# Subcommand handlers


def _j_sum(config: RunConfig) -> ExactValue:
    return eval_J(config.germ_params(), config.mode, config.budget)


def _i_sum(config: RunConfig) -> ExactValue:
    return eval_I(config.germ_params(), config.mode, config.budget)


def _closed_j(config: RunConfig) -> ExactValue:
    return closed_J(config.germ_params())


def _closed_i(config: RunConfig) -> ExactValue:
    return closed_I(config.germ_params())


def _germ_k(config: RunConfig) -> ExactValue:
    return germ_K(config.germ_params(), config.mode)


def _germ_l(config: RunConfig) -> ExactValue:
    return germ_L(config.germ_params(), config.mode)


def _ratio_check(config: RunConfig) -> dict[str, Any]:
    gp = config.germ_params()
    lhs = eval_I(gp, config.mode)
    return _report(
        lhs,
        ratio_prop(gp, config.mode),
        corrected_ok=lhs == ratio_prop_corrected(gp, config.mode),
        discrepancy=ratio_discrepancy(gp, config.mode),
        germ_l_ok=germ_L(gp, config.mode) == germ_L_via_K(gp, config.mode),
    )


def _identities(config: RunConfig) -> dict[str, Any]:
    r_max = int(config.option("r_max", 200))
    brackets = all(bracket_identities(r) for r in range(1, r_max + 1))
    counts = all(count_c2(r) == count_c2_direct(r) for r in range(2, r_max + 1))
    return {"ok": brackets and counts}


def _diag_quadratic(config: RunConfig) -> dict[str, Any]:
    ell = int(config.option("ell", 1))
    transform, diagonal = diagonalize_quadratic(ell, config.p)
    congruent = congruence_product(transform, quadratic_form_matrix(ell, config.p)) == diagonal
    expected = [diagonal[i][i] for i in range(ell)] == expected_diagonal(ell, config.p)
    return {
        "ok": congruent and expected,
        "T": _residue_rows(transform),
        "D": [diagonal[i][i].value for i in range(ell)],
    }


def _hilbert(config: RunConfig) -> dict[str, Any]:
    return {"value": hilbert(config.series("a"), config.series("b"))}


def _weil(config: RunConfig) -> ExactValue:
    return weil_gamma(config.series("a"), budget=config.budget)


def _orbital_i(config: RunConfig) -> ExactValue:
    orbit = _orbit(config)
    default = MatrixLF.antidiagonal(orbit.r, config.p)
    terms = _congruence_functions(config, default, symmetric=True)
    radius = config.radius if config.radius is not None else 1
    return sum_values(
        (orbital_I(orbit, phi, radius, config.budget) for phi in terms), config.p
    )


def _orbital_j(config: RunConfig) -> ExactValue:
    orbit = _orbit(config)
    default = MatrixLF.identity(orbit.r, config.p)
    terms = _congruence_functions(config, default, symmetric=False)
    radius = config.radius if config.radius is not None else 1
    return sum_values(
        (orbital_J(orbit, f, radius, config.budget) for f in terms), config.p
    )


def _unit_lemma(config: RunConfig) -> ExactValue:
    radius = config.radius if config.radius is not None else 1
    return unit_sym_test(config.r, config.series("z", "v=0;c=1"), config.m, radius, config.budget)


def _decomp_check(config: RunConfig) -> dict[str, Any]:
    side = GermKind(config.option("side", GermKind.J))
    t1, t2 = config.series("t1"), config.series("t2")
    radius = config.radius if config.radius is not None else 3
    if side is GermKind.J:
        terms = _congruence_functions(config, MatrixLF.identity(2, config.p), False)
        reports = [decomposition_report_J(t1, t2, f, radius, config.budget) for f in terms]
    else:
        terms = _congruence_functions(config, MatrixLF.antidiagonal(2, config.p), True)
        reports = [decomposition_report_I(t1, t2, f, radius, config.budget) for f in terms]
    return _report(
        sum_values((report.lhs for report in reports), config.p),
        sum_values((report.rhs for report in reports), config.p),
    )


def _expansion_check(config: RunConfig) -> dict[str, Any]:
    beta = config.series("beta", "v=0;c=1")
    antidiagonal = MatrixLF.antidiagonal(2, config.p)
    f = CongruenceFunction.from_pullback(antidiagonal, config.m)
    if config.option("base"):
        (f,) = _congruence_functions(config, antidiagonal, False)
    report = germ_expansion_check(beta, f, config.m, config.va, config.radius, config.budget)
    return _report(report.lhs, report.rhs)


def _regime_scan(config: RunConfig) -> dict[str, Any]:
    kind = GermKind(config.option("kind", GermKind.J))
    va_min = int(config.option("va_min", 1))
    va_max = int(config.option("va_max", 5))
    scan = regime_scan(
        config.p, config.r, config.m, range(va_min, va_max + 1), kind, config.ua
    )
    return {
        "kind": kind.value,
        "rows": [{"va": va, "agrees": agrees} for va, agrees in scan.rows],
        "stable_from": scan.stable_from,
    }


def least_non_residue(p: int) -> int:
    """Return the least quadratic non-residue mod p."""
    return next(c for c in range(2, p) if legendre(ResidueElem(c, p)) == -1)


def sweep_rows(
    primes: Sequence[int],
    ranks: Sequence[int],
    vas: Sequence[int],
    m: int = 1,
    budget: int = DEFAULT_BUDGET,
) -> Iterator[dict[str, Any]]:
    """Yield one pass/fail row per identity and grid point."""
    for p in primes:
        for r in ranks:
            for va in vas:
                for ua in (1, least_non_residue(p)):
                    gp = GermParams.from_unit(p, r, m, va, (ua,))
                    row = {"p": p, "r": r, "va": va, "ua": ua}
                    j_value = eval_J(gp)
                    if r % p:
                        yield {"identity": "closed_j", **row, "ok": j_value == closed_J(gp)}
                    if p > 2 * r + 1:
                        i_value = eval_I(gp)
                        yield {"identity": "closed_i", **row, "ok": i_value == closed_I(gp)}
                        yield {"identity": "ratio", **row, "ok": i_value == ratio_prop(gp)}
                        yield {
                            "identity": "ratio_corrected",
                            **row,
                            "ok": i_value == ratio_prop_corrected(gp),
                        }
                        yield {
                            "identity": "germ_l",
                            **row,
                            "ok": germ_L(gp) == germ_L_via_K(gp),
                        }
                    if p ** (r * va) <= budget:
                        yield {
                            "identity": "naive_dp_j",
                            **row,
                            "ok": eval_J(gp, EvalMode.NAIVE, budget) == j_value,
                        }


def _sweep(config: RunConfig, settings: Mapping[str, Any]) -> str:
    grid = settings.get("sweep", {})
    primes = config.option("primes") or grid.get("primes", [7, 11, 13])
    ranks = config.option("ranks") or grid.get("ranks", [2, 3])
    vas = config.option("vas") or grid.get("vas", [3, 4])
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=SWEEP_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in sweep_rows(primes, ranks, vas, config.m, config.budget):
        _LOGGER.info("Sweep row %s", row)
        writer.writerow({**row, "ok": str(row["ok"]).lower()})
    return buffer.getvalue()


HANDLERS: dict[Subcommand, Callable[[RunConfig], Any]] = {
    Subcommand.J_SUM: _j_sum,
    Subcommand.I_SUM: _i_sum,
    Subcommand.CLOSED_J: _closed_j,
    Subcommand.CLOSED_I: _closed_i,
    Subcommand.GERM_K: _germ_k,
    Subcommand.GERM_L: _germ_l,
    Subcommand.RATIO_CHECK: _ratio_check,
    Subcommand.IDENTITIES: _identities,
    Subcommand.DIAG_QUADRATIC: _diag_quadratic,
    Subcommand.HILBERT: _hilbert,
    Subcommand.WEIL: _weil,
    Subcommand.ORBITAL_I: _orbital_i,
    Subcommand.ORBITAL_J: _orbital_j,
    Subcommand.UNIT_LEMMA: _unit_lemma,
    Subcommand.DECOMP_CHECK: _decomp_check,
    Subcommand.EXPANSION_CHECK: _expansion_check,
    Subcommand.REGIME_SCAN: _regime_scan,
}


# Rendering


def _jsonable(value: Any) -> Any:
    if isinstance(value, ExactValue):
        return value.to_dict()
    if isinstance(value, dict):
        return {key: _jsonable(item) for key, item in value.items()}
    if isinstance(value, list | tuple):
        return [_jsonable(item) for item in value]
    return value


def render(result: Any, output: OutputFormat) -> str:
    """Render a handler result as canonical JSON or as pretty text."""
    if output is OutputFormat.JSON:
        return json.dumps(_jsonable(result), sort_keys=True, separators=(",", ":"))
    if isinstance(result, ExactValue):
        return result.pretty()
    lines = []
    for key in sorted(result):
        item = result[key]
        text = item.pretty() if isinstance(item, ExactValue) else json.dumps(_jsonable(item))
        lines.append(f"{key}: {text}")
    return "\n".join(lines)


def error_payload(err: GermlabException) -> str:
    """Return the JSON error object for a failure."""
    message = _messages().get(err.translation_key, err.translation_key.value)
    if err.detail:
        message = f"{message}: {err.detail}"
    payload = {"error": err.translation_key.value, "message": message}
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def run(config: RunConfig, settings: Mapping[str, Any] | None = None) -> tuple[ExitCode, str]:
    """Execute one subcommand and return its exit code and serialized result."""
    _LOGGER.info(
        "Running %s with p=%s r=%s m=%s va=%s",
        config.subcommand,
        config.p,
        config.r,
        config.m,
        config.va,
    )
    try:
        if config.subcommand is Subcommand.SWEEP:
            return ExitCode.OK, _sweep(config, settings or {})
        result = HANDLERS[config.subcommand](config)
    except GermlabException as err:
        _LOGGER.debug("Subcommand %s failed: %s", config.subcommand, err)
        return err.exit_code, error_payload(err)
    _LOGGER.info("Finished %s", config.subcommand)
    return ExitCode.OK, render(result, config.output)


def _int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part]


def build_parser() -> argparse.ArgumentParser:
    """Return the argument parser with one subparser per subcommand."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p", type=int, default=7, help="Residue characteristic.")
    common.add_argument("--r", type=int, default=2, help="Rank.")
    common.add_argument("--m", type=int, default=1, help="Congruence level.")
    common.add_argument("--va", type=int, default=3, help="Valuation of a.")
    common.add_argument("--ua", type=_int_list, default=[1], help="Unit part of a, e.g. 3,1.")
    common.add_argument("--radius", type=int, default=None)
    common.add_argument("--mode", default=EvalMode.DP.value, choices=[e.value for e in EvalMode])
    common.add_argument("--budget", type=int, default=None)
    common.add_argument(
        "--output", default=OutputFormat.JSON.value, choices=[e.value for e in OutputFormat]
    )
    common.add_argument("--pretty", action="store_true", help="Same as --output pretty.")
    common.add_argument("--config", type=Path, default=None, help="configuration.yaml path.")
    common.add_argument("--log-level", default=None)

    parser = argparse.ArgumentParser(
        prog=DOMAIN, description="Exact Kloosterman germ computations."
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    parsers = {name: sub.add_parser(name.value, parents=[common]) for name in Subcommand}

    for name in (Subcommand.HILBERT, Subcommand.WEIL):
        parsers[name].add_argument("--a", required=True)
    parsers[Subcommand.HILBERT].add_argument("--b", required=True)
    parsers[Subcommand.IDENTITIES].add_argument("--r-max", dest="r_max", type=int, default=200)
    parsers[Subcommand.DIAG_QUADRATIC].add_argument("--ell", type=int, default=1)
    parsers[Subcommand.UNIT_LEMMA].add_argument("--z", default="v=0;c=1")
    for name in (
        Subcommand.ORBITAL_I,
        Subcommand.ORBITAL_J,
        Subcommand.DECOMP_CHECK,
        Subcommand.EXPANSION_CHECK,
    ):
        parsers[name].add_argument("--base", action="append", help="JSON matrix of series.")
        parsers[name].add_argument("--scale", action="append", help="Rational scale.")
        parsers[name].add_argument("--pullback", action="store_true")
    for name in (Subcommand.ORBITAL_I, Subcommand.ORBITAL_J):
        parsers[name].add_argument("--parts", default="1,1")
        parsers[name].add_argument("--torus", action="append", required=True)
    parsers[Subcommand.DECOMP_CHECK].add_argument("--side", choices=["i", "j"], default="j")
    parsers[Subcommand.DECOMP_CHECK].add_argument("--t1", required=True)
    parsers[Subcommand.DECOMP_CHECK].add_argument("--t2", required=True)
    parsers[Subcommand.EXPANSION_CHECK].add_argument("--beta", default="v=0;c=1")
    parsers[Subcommand.REGIME_SCAN].add_argument("--kind", choices=["j", "i"], default="j")
    parsers[Subcommand.REGIME_SCAN].add_argument("--va-min", dest="va_min", type=int, default=1)
    parsers[Subcommand.REGIME_SCAN].add_argument("--va-max", dest="va_max", type=int, default=5)
    parsers[Subcommand.SWEEP].add_argument("--primes", type=_int_list, default=None)
    parsers[Subcommand.SWEEP].add_argument("--ranks", type=_int_list, default=None)
    parsers[Subcommand.SWEEP].add_argument("--vas", type=_int_list, default=None)
    parsers[Subcommand.SWEEP].add_argument("--out", type=Path, default=None)
    return parser


_COMMON_KEYS = frozenset(
    {"subcommand", "p", "r", "m", "va", "ua", "radius", "mode", "budget", "output"}
)
_LOCAL_KEYS = frozenset({"pretty", "config", "log_level", "out"})


def config_from_args(args: argparse.Namespace, settings: Mapping[str, Any]) -> RunConfig:
    """Turn parsed arguments into a validated RunConfig."""
    data = vars(args)
    budget = data["budget"]
    if budget is None:
        budget = settings.get("budget") if BUDGET_ENV_VAR not in os.environ else None
        budget = budget or default_budget()
    mapping = {key: data[key] for key in _COMMON_KEYS if key in data}
    mapping["budget"] = budget
    if data.get("pretty"):
        mapping["output"] = OutputFormat.PRETTY.value
    mapping["options"] = {
        key: value
        for key, value in data.items()
        if key not in _COMMON_KEYS and key not in _LOCAL_KEYS
    }
    return RunConfig.from_mapping(mapping)


def main(argv: Sequence[str] | None = None) -> int:
    """Run the CLI and return the process exit code."""
    args = build_parser().parse_args(argv)
    settings = load_settings(args.config)
    configure_logging(settings, args.log_level)
    try:
        config = config_from_args(args, settings)
    except GermlabException as err:
        print(error_payload(err))
        return err.exit_code
    code, text = run(config, settings)
    if config.subcommand is Subcommand.SWEEP and args.out is not None:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text + ("" if text.endswith("\n") else "\n"))
    return int(code)
