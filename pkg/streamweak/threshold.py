"""Threshold greedy.

One pass over the stream; an element is accepted iff the solution holds fewer
than ``k`` elements and its marginal gain is at least ``tau / k``. After every
accept ``f(S) >= tau * |S| / k`` holds, hence ``f(S) >= tau`` once ``|S| = k``.
"""

import logging
import time
from typing import Iterable, Optional

from .constants import INVARIANT_RTOL
from .errors import InvariantError, ParameterError, StreamError
from .oracle import ElementId, Subset, Valuation, evaluate, marginal
from .result import RunResult
from .utils import relative_close

logger = logging.getLogger(__name__)


class ThresholdInstance:
    """State of one threshold greedy run: threshold, solution and f(solution).

    Args:
        oracle: Value oracle.
        k: Cardinality budget, ``k >= 1``.
        tau: Threshold, ``tau >= 0``.
        f_empty: (Optional) Known f(empty set); evaluated if missing.
        paranoid: Re-evaluate f(S) after every accept and compare.
        check_invariants: Count (and log) accepts after which
            ``f(S) >= tau * |S| / k`` fails.

    Raises:
        :class:`ParameterError` for ``k < 1`` or ``tau < 0``.
    """

    # pylint: disable=too-many-arguments
    def __init__(
        self,
        oracle: Valuation,
        k: int,
        tau: float,
        f_empty: Optional[float] = None,
        paranoid: bool = False,
        check_invariants: bool = False,
    ) -> None:
        if k < 1:
            raise ParameterError(f"k must be >= 1: {k}")
        if tau < 0 or tau != tau:
            raise ParameterError(f"tau must be >= 0: {tau}")
        self.oracle = oracle
        self.k = k
        self.tau = tau
        self.s = Subset(n=oracle.ground.n)
        self.f_s = evaluate(oracle, self.s) if f_empty is None else f_empty
        self.paranoid = paranoid
        self.check_invariants = check_invariants
        self.violations = 0

    def __repr__(self) -> str:
        return f"ThresholdInstance(tau={self.tau}, k={self.k}, |S|={len(self.s)}, f(S)={self.f_s})"

    @property
    def full(self) -> bool:
        return len(self.s) >= self.k

    @property
    def threshold(self) -> float:
        return self.tau / self.k

    def step(self, u: ElementId) -> bool:
        """Offer ``u``; one oracle call unless the solution is full.

        Returns:
            True, if ``u`` was accepted.
        """
        if self.full:
            return False

        gain = marginal(self.oracle, self.s, u, f_base=self.f_s)
        if gain < self.threshold:
            return False

        self.s.add(u)
        self.f_s += gain
        logger.debug("tau=%g accepted %d (gain=%g, |S|=%d)", self.tau, u, gain, len(self.s))
        if self.paranoid:
            self._check_value()
        if self.check_invariants:
            self._check_progress()
        return True

    def _check_value(self) -> None:
        actual = evaluate(self.oracle, self.s)
        if not relative_close(self.f_s, actual, INVARIANT_RTOL):
            raise InvariantError(
                f"Incremental f(S)={self.f_s!r} differs from re-evaluated {actual!r} (tau={self.tau})."
            )

    def _check_progress(self) -> None:
        bound = self.tau * len(self.s) / self.k
        if self.f_s < bound and not relative_close(self.f_s, bound, INVARIANT_RTOL):
            self.violations += 1
            logger.warning(
                "f(S)=%r < tau*|S|/k=%r (tau=%g, |S|=%d)", self.f_s, bound, self.tau, len(self.s)
            )


def tg_new(
    oracle: Valuation,
    k: int,
    tau: float,
    paranoid: bool = False,
    check_invariants: bool = False,
) -> ThresholdInstance:
    return ThresholdInstance(
        oracle, k, tau, paranoid=paranoid, check_invariants=check_invariants
    )


def tg_step(inst: ThresholdInstance, u: ElementId) -> bool:
    return inst.step(u)


def check_distinct(stream: Iterable[ElementId], oracle: Valuation) -> list:
    """Materialize ``stream`` and check ids are distinct and known.

    Raises:
        :class:`StreamError` on duplicate or unknown ids.
    """
    stream = list(stream)
    oracle.ground.validate(stream)
    if len(set(stream)) != len(stream):
        seen = set()
        for u in stream:
            if u in seen:
                raise StreamError(f"Element {u} appears more than once in the stream.")
            seen.add(u)
    return stream


# pylint: disable=too-many-arguments
def tg_run(
    oracle: Valuation,
    k: int,
    tau: float,
    stream: Iterable[ElementId],
    paranoid: bool = False,
    check_invariants: bool = False,
) -> RunResult:
    """Run threshold greedy over ``stream``.

    Args:
        oracle: Value oracle.
        k: Cardinality budget.
        tau: Threshold.
        stream: Distinct element ids in arrival order.
        paranoid: Re-evaluate f(S) after each accept.
        check_invariants: Check the progress invariant after each accept.

    Returns:
        :class:`RunResult` with the final set; at most ``|stream| + 1`` oracle
        calls are made outside of paranoid mode.

    Raises:
        :class:`StreamError` for duplicates in ``stream``.
    """
    start = time.perf_counter()
    calls_before = oracle.stats.calls if oracle.stats is not None else 0
    stream = check_distinct(stream, oracle)
    inst = ThresholdInstance(
        oracle, k, tau, paranoid=paranoid, check_invariants=check_invariants
    )
    for u in stream:
        inst.step(u)

    calls = oracle.stats.calls - calls_before if oracle.stats is not None else 0
    return RunResult(
        subset=inst.s,
        value=inst.f_s,
        oracle_calls=calls,
        stored_peak=len(inst.s),
        instances_peak=1,
        wall_ms=(time.perf_counter() - start) * 1000.0,
        violations=inst.violations,
    )
