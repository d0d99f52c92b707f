"""Constants.
"""
from enum import Enum


class ExitCode(Enum):
    OK = 0
    PARAMETER = 2
    ORACLE = 3
    STORAGE = 4


class LogLevel(Enum):
    ERROR = "error"
    INFO = "info"
    DEBUG = "debug"


#: Membership bitsets are used up to this ground set size, hash sets beyond.
BITSET_LIMIT: int = 2**20

#: Relative tolerance for the marginal identity f(S + u) = f(S) + f(u | S).
MARGINAL_RTOL: float = 1e-12

#: Relative slack for invariants over accumulated floats.
INVARIANT_RTOL: float = 1e-9

#: Largest ground set accepted by brute force search.
BRUTE_FORCE_MAX_N: int = 24
#: Largest number of subsets brute force search may enumerate.
BRUTE_FORCE_MAX_SUBSETS: int = 10**7

#: Largest number of (L, S) pairs the exact gamma enumeration may visit.
GAMMA_MAX_PAIRS: int = 10**7
#: Denominator clamp for positive / 0 ratios in the gamma enumeration.
GAMMA_DENOMINATOR_CLAMP: float = 1e-15
#: LRU entries kept by the sampled gamma estimator.
GAMMA_SAMPLED_CACHE: int = 10**5

#: IRLS settings of the logistic objective.
IRLS_MAX_ITER: int = 100
IRLS_TOL: float = 1e-8
IRLS_RIDGE: float = 1e-6

#: Largest number of virtual columns a synthetic generator may expose.
MAX_COLUMNS: int = 10**6

#: Default timeout of one external oracle request in milliseconds.
EXTERN_TIMEOUT_MS: int = 30000

#: Mandatory experiment CSV columns, in order.
CSV_COLUMNS = (
    "algorithm",
    "objective",
    "n",
    "k",
    "epsilon",
    "seed",
    "value",
    "oracle_calls",
    "stored_peak",
    "instances_peak",
    "wall_ms",
)

#: Float format of the experiment CSV (9 significant digits).
FLOAT_FORMAT: str = "%.9g"
