"""STREAK: threshold greedy without knowing the threshold.

The state tracks ``m``, the largest singleton value seen so far, and runs one
:class:`ThresholdInstance` for every threshold of the geometric lattice

    { (1 - eps)^i : i integer, (1 - eps) * m / (9 k^2) <= (1 - eps)^i <= m * k }.

Instances whose threshold leaves the lattice are dropped together with their
solution; thresholds entering the lattice start with an empty solution. The
output is the best of all instance solutions, ``{u_m}`` and the empty set.
"""

import logging
import math
import sys
import time
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .constants import INVARIANT_RTOL
from .errors import ParameterError
from .oracle import ElementId, Subset, Valuation, evaluate
from .result import RunResult
from .threshold import ThresholdInstance, check_distinct
from .utils import fan_out

logger = logging.getLogger(__name__)

_TINY = math.ulp(0.0)


def check_epsilon(epsilon: float) -> None:
    if not 0.0 < epsilon < 1.0:
        raise ParameterError(f"epsilon must be in (0, 1): {epsilon}")


def check_k(k: int) -> None:
    if k < 1:
        raise ParameterError(f"k must be >= 1: {k}")


def power(i: int, epsilon: float) -> float:
    """(1 - epsilon)^i as exp(i * ln(1 - epsilon)); inf beyond the float range."""
    try:
        return math.exp(i * math.log1p(-epsilon))
    except OverflowError:
        return math.inf


def lattice_bounds(m: float, k: int, epsilon: float) -> Tuple[float, float]:
    """Threshold interval ``[(1 - eps) m / (9 k^2), m k]``.

    Both ends are clamped to positive finite floats.
    """
    lo = (1.0 - epsilon) * m / (9.0 * k * k)
    hi = m * k
    return max(lo, _TINY), min(hi, sys.float_info.max)


def lattice_exponents(m: float, k: int, epsilon: float) -> List[int]:
    """Exponents ``i`` with ``(1 - eps) m / (9 k^2) <= (1 - eps)^i <= m k``.

    Endpoints come from logarithms and are then moved by single steps until
    the defining inequalities hold exactly for :func:`power`.

    Args:
        m: Largest singleton value, ``m >= 0``.
        k: Cardinality budget.
        epsilon: Lattice density in (0, 1).

    Returns:
        Ascending exponents; empty when ``m == 0``.

    Raises:
        :class:`ParameterError` for ``epsilon`` outside of (0, 1).

    Examples:
        >>> lattice_exponents(1.0, 1, 0.5)
        [0, 1, 2, 3, 4]
    """
    check_epsilon(epsilon)
    check_k(k)
    if not m > 0:
        return []

    lo, hi = lattice_bounds(m, k, epsilon)
    q = math.log1p(-epsilon)
    # power is decreasing in i
    first = math.ceil(math.log(hi) / q)
    last = math.floor(math.log(lo) / q)
    while power(first - 1, epsilon) <= hi:
        first -= 1
    while power(first, epsilon) > hi:
        first += 1
    while power(last + 1, epsilon) >= lo:
        last += 1
    while last >= first and power(last, epsilon) < lo:
        last -= 1
    return list(range(first, last + 1))


def a_of_gamma(gamma: float) -> float:
    """a = (sqrt(2 - e^(-gamma/2)) - 1) / 2.

    Evaluated as ``(1 - e^(-gamma/2)) / (2 (sqrt(2 - e^(-gamma/2)) + 1))``,
    which does not cancel for small gamma.

    Raises:
        :class:`ParameterError` unless ``0 < gamma <= 1``.
    """
    if not 0.0 < gamma <= 1.0:
        raise ParameterError(f"gamma must be in (0, 1]: {gamma}")
    x = math.exp(-gamma / 2.0)
    return -math.expm1(-gamma / 2.0) / (2.0 * (math.sqrt(2.0 - x) + 1.0))


def bound(gamma: float, epsilon: float = 0.0) -> float:
    """Approximation ratio of STREAK for gamma-weakly submodular objectives.

    (1 - eps) * gamma * (3 - e^(-gamma/2) - 2 sqrt(2 - e^(-gamma/2))) / 2;
    the bracket equals ``(2a)^2``.

    Raises:
        :class:`ParameterError` unless ``0 < gamma <= 1`` and ``0 <= epsilon < 1``.
    """
    if not 0.0 <= epsilon < 1.0:
        raise ParameterError(f"epsilon must be in [0, 1): {epsilon}")
    a = a_of_gamma(gamma)
    return (1.0 - epsilon) * gamma * 2.0 * a * a


def threshold_guarantee(tau: float, gamma: float) -> float:
    """Expected value guarantee tau * (sqrt(2 - e^(-gamma/2)) - 1) of one threshold instance."""
    return tau * 2.0 * a_of_gamma(gamma)


def memory_bound(k: int, epsilon: float, relaxed: bool = True) -> float:
    """Largest number of live instances while ``m > 0``.

    Args:
        k: Cardinality budget.
        epsilon: Lattice density.
        relaxed: Use ``2 + ln(9k^3) / eps`` instead of ``2 - ln(9k^3) / ln(1 - eps)``.
    """
    check_epsilon(epsilon)
    check_k(k)
    log_term = math.log(9.0 * k**3)
    if relaxed:
        return 2.0 + log_term / epsilon
    return 2.0 - log_term / math.log1p(-epsilon)


@dataclass(frozen=True)
class RatioParams:
    gamma: float
    a: float

    def ratio(self, epsilon: float = 0.0) -> float:
        return bound(self.gamma, epsilon)


def ratio_for(gamma: float) -> RatioParams:
    return RatioParams(gamma=gamma, a=a_of_gamma(gamma))


class StreakState:
    """Running STREAK state.

    Args:
        oracle: Value oracle.
        k: Cardinality budget.
        epsilon: Lattice density in (0, 1).
        jobs: Threads used to offer an element to all instances; only used
            when the oracle is concurrent safe.
        paranoid: Forwarded to every :class:`ThresholdInstance`.
        check_invariants: Check lattice, memory and progress invariants after
            every element; violations are counted.
    """

    # pylint: disable=too-many-arguments,too-many-instance-attributes
    def __init__(
        self,
        oracle: Valuation,
        k: int,
        epsilon: float,
        jobs: int = 1,
        paranoid: bool = False,
        check_invariants: bool = False,
    ) -> None:
        check_k(k)
        check_epsilon(epsilon)
        self.oracle = oracle
        self.k = k
        self.epsilon = epsilon
        self.jobs = jobs if oracle.concurrent_safe else 1
        self.paranoid = paranoid
        self.check_invariants = check_invariants

        self.f_empty = evaluate(oracle, ())
        self.m = 0.0
        self.u_m: Optional[ElementId] = None
        self.instances: Dict[int, ThresholdInstance] = {}
        self.observed = 0
        self.stored_peak = 0
        self.instances_peak = 0
        self.violations = 0
        self._dropped_violations = 0

    @property
    def stored(self) -> int:
        """Elements held right now: all instance solutions plus ``u_m``."""
        held = sum(len(inst.s) for inst in self.instances.values())
        return held + (1 if self.u_m is not None else 0)

    @property
    def exponents(self) -> List[int]:
        return sorted(self.instances)

    def observe(self, u: ElementId) -> None:
        """Process the next stream element."""
        self.observed += 1
        f_u = evaluate(self.oracle, (u,))
        # zero valued singletons are never kept
        if f_u >= self.m and f_u > 0:
            self.m = f_u
            self.u_m = u

        self._reconcile()
        live = [self.instances[i] for i in sorted(self.instances)]
        fan_out(lambda inst: inst.step(u), live, self.jobs)

        self.stored_peak = max(self.stored_peak, self.stored)
        self.instances_peak = max(self.instances_peak, len(self.instances))
        if self.check_invariants:
            self._check()

    def _reconcile(self) -> None:
        target = lattice_exponents(self.m, self.k, self.epsilon)
        wanted = set(target)
        dropped = [i for i in self.instances if i not in wanted]
        for i in dropped:
            self._dropped_violations += self.instances[i].violations
            del self.instances[i]
        created = [i for i in target if i not in self.instances]
        for i in created:
            self.instances[i] = ThresholdInstance(
                self.oracle,
                self.k,
                power(i, self.epsilon),
                f_empty=self.f_empty,
                paranoid=self.paranoid,
                check_invariants=self.check_invariants,
            )
        if dropped or created:
            logger.debug(
                "m=%g: dropped %s, created %s, %d live",
                self.m,
                dropped,
                created,
                len(self.instances),
            )

    def _check(self) -> None:
        if self.exponents != lattice_exponents(self.m, self.k, self.epsilon):
            self.violations += 1
            logger.warning("Instance exponents %s out of sync with m=%g", self.exponents, self.m)
        if self.m > 0 and len(self.instances) > memory_bound(self.k, self.epsilon) * (
            1.0 + INVARIANT_RTOL
        ):
            self.violations += 1
            logger.warning("%d instances exceed the memory bound", len(self.instances))
        if self.stored > len(self.instances) * self.k + 1:
            self.violations += 1
            logger.warning("%d stored elements exceed |I| k + 1", self.stored)

    def candidates(self) -> List[Tuple[str, Subset]]:
        """Output candidates in tie-breaking order."""
        ret = [(f"tau^{i}", self.instances[i].s) for i in sorted(self.instances)]
        if self.u_m is not None:
            ret.append(("u_m", Subset((self.u_m,), n=self.oracle.ground.n)))
        return ret

    def finalize(self) -> RunResult:
        """Best candidate; ties go to the smaller exponent, then ``{u_m}``, then the empty set."""
        candidates = [(name, s) for name, s in self.candidates() if len(s) > 0]
        values = fan_out(lambda c: evaluate(self.oracle, c[1]), candidates, self.jobs)

        best: Optional[Tuple[str, Subset, float]] = None
        for (name, s), value in zip(candidates, values):
            if best is None or value > best[2]:
                best = (name, s, value)
        if best is None or self.f_empty > best[2]:
            best = ("empty", Subset(n=self.oracle.ground.n), self.f_empty)
        best_name, best_set, best_value = best
        logger.debug("Best candidate %s with value %g", best_name, best_value)

        violations = self.violations + self._dropped_violations
        violations += sum(inst.violations for inst in self.instances.values())
        return RunResult(
            subset=best_set.copy(),
            value=best_value,
            stored_peak=self.stored_peak,
            instances_peak=self.instances_peak,
            violations=violations,
            m=self.m,
            extra={"candidate": best_name, "instances_final": len(self.instances)},
        )


def streak_observe(state: StreakState, oracle: Valuation, u: ElementId) -> StreakState:
    if oracle is not state.oracle:
        raise ParameterError("State was created for another oracle.")
    state.observe(u)
    return state


def streak_finalize(state: StreakState, oracle: Valuation) -> RunResult:
    if oracle is not state.oracle:
        raise ParameterError("State was created for another oracle.")
    return state.finalize()


# pylint: disable=too-many-arguments
def streak_run(
    oracle: Valuation,
    k: int,
    epsilon: float,
    stream: Iterable[ElementId],
    jobs: int = 1,
    paranoid: bool = False,
    check_invariants: bool = False,
) -> RunResult:
    """Run STREAK over ``stream``.

    Args:
        oracle: Value oracle.
        k: Cardinality budget.
        epsilon: Lattice density in (0, 1).
        stream: Distinct element ids in arrival order.
        jobs: Threads for the per element fan out.
        paranoid: Re-evaluate instance values after accepts.
        check_invariants: Count invariant violations.

    Returns:
        :class:`RunResult` with peak memory statistics and final ``m``.
    """
    start = time.perf_counter()
    calls_before = oracle.stats.calls if oracle.stats is not None else 0
    check_k(k)
    check_epsilon(epsilon)
    stream = check_distinct(stream, oracle)

    state = StreakState(
        oracle, k, epsilon, jobs=jobs, paranoid=paranoid, check_invariants=check_invariants
    )
    for u in stream:
        state.observe(u)
    result = state.finalize()

    if oracle.stats is not None:
        result.oracle_calls = oracle.stats.calls - calls_before
    result.wall_ms = (time.perf_counter() - start) * 1000.0
    logger.info(
        "STREAK k=%d eps=%g: value=%g, %d calls, %d instances peak",
        k,
        epsilon,
        result.value,
        result.oracle_calls,
        result.instances_peak,
    )
    return result


def replay(
    oracle: Valuation, k: int, tau: float, stream: Sequence[ElementId]
) -> Subset:
    """Solution of a fresh threshold instance fed the whole ``stream``."""
    inst = ThresholdInstance(oracle, k, tau)
    for u in stream:
        inst.step(u)
    return inst.s
