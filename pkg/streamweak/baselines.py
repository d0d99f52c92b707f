"""Reference algorithms.

* :func:`random_subset`: the first ``k`` stream elements.
* :func:`local_search`: buffer of ``k`` elements, single best improving swap per element.
* :func:`full_greedy`: offline greedy forward selection.
* :func:`brute_force_opt`: exhaustive search, used as ground truth in tests.
"""

import heapq
import itertools
import logging
import math
import time
from typing import Iterable, List, Optional, Tuple

from .constants import BRUTE_FORCE_MAX_N, BRUTE_FORCE_MAX_SUBSETS
from .errors import CapacityError, ParameterError
from .oracle import ElementId, GroundSet, Subset, Valuation, evaluate
from .result import RunResult
from .threshold import check_distinct
from .utils import fan_out

logger = logging.getLogger(__name__)


class _Cost:
    """Oracle calls and wall time of one run."""

    def __init__(self, oracle: Valuation) -> None:
        self.oracle = oracle
        self.start = time.perf_counter()
        self.calls_before = oracle.stats.calls if oracle.stats is not None else 0

    def finish(self, result: RunResult) -> RunResult:
        if self.oracle.stats is not None:
            result.oracle_calls = self.oracle.stats.calls - self.calls_before
        result.wall_ms = (time.perf_counter() - self.start) * 1000.0
        return result


def _check_budget(k: int) -> None:
    if k < 0:
        raise ParameterError(f"k must be >= 0: {k}")


def random_subset(oracle: Valuation, k: int, stream: Iterable[ElementId]) -> RunResult:
    """Keep the first ``min(k, |stream|)`` elements; one evaluation at the end."""
    _check_budget(k)
    cost = _Cost(oracle)
    stream = check_distinct(stream, oracle)
    s = Subset(stream[:k], n=oracle.ground.n)
    return cost.finish(
        RunResult(subset=s, value=evaluate(oracle, s), stored_peak=len(s), instances_peak=1)
    )


def local_search(
    oracle: Valuation, k: int, stream: Iterable[ElementId], jobs: int = 1
) -> RunResult:
    """Swap based local search over one pass.

    The first ``k`` elements fill the buffer. Every later element ``u`` is
    tried in place of each buffered element; the swap with the largest
    strictly positive improvement is made, otherwise ``u`` is discarded.

    Args:
        oracle: Value oracle.
        k: Buffer size.
        stream: Distinct element ids in arrival order.
        jobs: Threads for evaluating the ``k`` swap candidates.

    Returns:
        :class:`RunResult` of the final buffer.
    """
    _check_budget(k)
    cost = _Cost(oracle)
    stream = check_distinct(stream, oracle)
    n = oracle.ground.n
    if not oracle.concurrent_safe:
        jobs = 1

    buffer: List[ElementId] = list(stream[:k])
    f_s = evaluate(oracle, buffer)
    swaps = 0
    for u in stream[k:]:
        candidates = [buffer[:pos] + [u] + buffer[pos + 1:] for pos in range(len(buffer))]
        values = fan_out(lambda c: evaluate(oracle, c), candidates, jobs)

        best_pos: Optional[int] = None
        best_value = f_s
        for pos, value in enumerate(values):
            if value > best_value:
                best_pos, best_value = pos, value
        if best_pos is not None:
            logger.debug("Swapped %d for %d (%g -> %g)", buffer[best_pos], u, f_s, best_value)
            buffer[best_pos] = u
            f_s = best_value
            swaps += 1

    s = Subset(buffer, n=n)
    result = RunResult(
        subset=s,
        value=evaluate(oracle, s),
        stored_peak=len(s) + (1 if len(stream) > k else 0),
        instances_peak=1,
        extra={"swaps": swaps},
    )
    return cost.finish(result)


def full_greedy(
    oracle: Valuation,
    ground: GroundSet,
    k: int,
    lazy: bool = False,
    jobs: int = 1,
) -> RunResult:
    """Offline greedy forward selection.

    Each of at most ``k`` rounds adds the element with the largest marginal
    gain, ties to the smallest id; stops once the best gain is ``<= 0``.

    Args:
        oracle: Value oracle.
        ground: Candidate elements.
        k: Cardinality budget.
        lazy: Reuse stale gains as upper bounds (exact only for submodular
            objectives). Default: False
        jobs: Threads for the per round argmax.

    Returns:
        :class:`RunResult` of the selected set.
    """
    _check_budget(k)
    cost = _Cost(oracle)
    if not oracle.concurrent_safe:
        jobs = 1
    s = Subset(n=ground.n)
    f_s = evaluate(oracle, s)

    if lazy:
        f_s = _lazy_rounds(oracle, ground, k, s, f_s)
    else:
        for _ in range(min(k, ground.n)):
            rest = [u for u in ground.ids() if u not in s]
            values = fan_out(lambda u: evaluate(oracle, s.with_element(u)), rest, jobs)
            best_u, best_gain = None, 0.0
            for u, value in zip(rest, values):
                gain = value - f_s
                if best_u is None or gain > best_gain:
                    best_u, best_gain = u, gain
            if best_u is None or best_gain <= 0:
                break
            s.add(best_u)
            f_s += best_gain

    result = RunResult(
        subset=s, value=evaluate(oracle, s), stored_peak=ground.n, instances_peak=1
    )
    return cost.finish(result)


def _lazy_rounds(
    oracle: Valuation, ground: GroundSet, k: int, s: Subset, f_s: float
) -> float:
    # heap of (-gain, id, round the gain was computed in)
    heap: List[Tuple[float, ElementId, int]] = [
        (-(evaluate(oracle, (u,)) - f_s), u, 0) for u in ground.ids()
    ]
    heapq.heapify(heap)
    rounds = 0
    while heap and len(s) < k:
        neg_gain, u, computed = heapq.heappop(heap)
        if computed == rounds:
            if -neg_gain <= 0:
                break
            s.add(u)
            f_s += -neg_gain
            rounds += 1
            continue
        gain = evaluate(oracle, s.with_element(u)) - f_s
        heapq.heappush(heap, (-gain, u, rounds))
    return f_s


def subset_count(n: int, k: int) -> int:
    """Number of subsets of size at most ``k`` out of ``n``."""
    return sum(math.comb(n, j) for j in range(min(k, n) + 1))


def brute_force_opt(oracle: Valuation, ground: GroundSet, k: int) -> Tuple[Subset, float]:
    """Exact maximizer over all subsets of size at most ``k``.

    Ties go to the lexicographically smallest id tuple.

    Raises:
        :class:`CapacityError` if ``N > 24`` or more than 10^7 subsets.
    """
    _check_budget(k)
    if ground.n > BRUTE_FORCE_MAX_N:
        raise CapacityError("Brute force ground set", ground.n, BRUTE_FORCE_MAX_N)
    count = subset_count(ground.n, k)
    if count > BRUTE_FORCE_MAX_SUBSETS:
        raise CapacityError("Brute force subsets", count, BRUTE_FORCE_MAX_SUBSETS)

    best: Tuple[ElementId, ...] = ()
    best_value = evaluate(oracle, best)
    for size in range(1, min(k, ground.n) + 1):
        for combo in itertools.combinations(ground.ids(), size):
            value = evaluate(oracle, combo)
            if value > best_value or (value == best_value and combo < best):
                best, best_value = combo, value
    return Subset(best, n=ground.n), best_value


def brute_force_run(oracle: Valuation, ground: GroundSet, k: int) -> RunResult:
    cost = _Cost(oracle)
    s, value = brute_force_opt(oracle, ground, k)
    return cost.finish(
        RunResult(subset=s, value=value, stored_peak=ground.n, instances_peak=1)
    )
