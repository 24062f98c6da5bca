"""Constants for germlab."""

from enum import Enum, IntEnum

try:
    from enum import StrEnum
except ImportError:  # Python < 3.11

    class StrEnum(str, Enum):
        """Backport of enum.StrEnum: members are str and format as their value."""

        __str__ = str.__str__
        __format__ = str.__format__

DOMAIN = "germlab"

BUDGET_ENV_VAR = "GERMLAB_BUDGET"
DEFAULT_BUDGET = 10_000_000

# Adaptive integration gives up once a coordinate is refined this far past
# the radius without the integrand becoming readable.
MAX_REFINEMENT_DEPTH = 40

ZETA_BASIS = "zeta_{order}_power"


class EvalMode(StrEnum):
    """Evaluators for the germ sums."""

    NAIVE = "naive"
    DP = "dp"


class OutputFormat(StrEnum):
    """CLI output renderings."""

    JSON = "json"
    PRETTY = "pretty"


class ArithOp(StrEnum):
    """Binary operations accepted by lf_arith."""

    ADD = "add"
    SUB = "sub"
    MUL = "mul"
    DIV = "div"


class GermKind(StrEnum):
    """Which germ sum a regime scan compares."""

    J = "j"
    I = "i"  # noqa: E741


class Subcommand(StrEnum):
    """CLI subcommands."""

    J_SUM = "j-sum"
    I_SUM = "i-sum"
    CLOSED_J = "closed-j"
    CLOSED_I = "closed-i"
    GERM_K = "germ-k"
    GERM_L = "germ-l"
    RATIO_CHECK = "ratio-check"
    IDENTITIES = "identities"
    DIAG_QUADRATIC = "diag-quadratic"
    HILBERT = "hilbert"
    WEIL = "weil"
    ORBITAL_I = "orbital-i"
    ORBITAL_J = "orbital-j"
    UNIT_LEMMA = "unit-lemma"
    DECOMP_CHECK = "decomp-check"
    EXPANSION_CHECK = "expansion-check"
    REGIME_SCAN = "regime-scan"
    SWEEP = "sweep"


class ExitCode(IntEnum):
    """Process exit codes of the CLI."""

    OK = 0
    PRECONDITION = 2
    STABILIZATION = 3
    BUDGET = 4


class GermlabErrorCode(StrEnum):
    """Error translation keys used across the package."""

    NOT_ODD_PRIME = "not_odd_prime"
    INCOMPATIBLE_PRIME = "incompatible_prime"
    DIVISION_BY_ZERO = "division_by_zero"
    INSUFFICIENT_PRECISION = "insufficient_precision"
    ODD_VALUATION = "odd_valuation"
    NON_RESIDUE = "non_residue"
    ZERO_ARGUMENT = "zero_argument"
    DEGENERATE_WEIL_INTEGRAL = "degenerate_weil_integral"
    PRIME_DIVIDES_RANK = "prime_divides_rank"
    PRIME_TOO_SMALL = "prime_too_small"
    INVALID_PARAMS = "invalid_params"
    NON_UNIT_PIVOT = "non_unit_pivot"
    NOT_UNIPOTENT = "not_unipotent"
    NOT_IN_UNIPOTENT_RADICAL = "not_in_unipotent_radical"
    UNSUPPORTED_RANK = "unsupported_rank"
    NOT_A_ROOT_OF_UNITY = "not_a_root_of_unity"
    RADIUS_NOT_STABLE = "radius_not_stable"
    MODULUS_NOT_STABLE = "modulus_not_stable"
    BUDGET_EXCEEDED = "budget_exceeded"
    INVALID_CONFIG = "invalid_config"
    MALFORMED_SERIES = "malformed_series"


class Membership(StrEnum):
    """Outcome of testing a matrix known to finite precision against a coset."""

    INSIDE = "inside"
    OUTSIDE = "outside"
    UNDECIDED = "undecided"
