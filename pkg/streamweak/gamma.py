"""Weak submodularity ratio.

gamma_r is the minimum, over all ``L`` and ``S`` with ``|L| <= r`` and
``|S \\ L| <= r``, of

    sum_{j in S \\ L} f(j | L)  /  f(S | L)

where 0 / 0 counts as 1. ``f`` is submodular iff gamma_N = 1. The exact
estimator enumerates all pairs; the sampled estimator takes the minimum over
uniformly drawn pairs and can therefore only overestimate gamma_r.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .constants import GAMMA_DENOMINATOR_CLAMP, GAMMA_MAX_PAIRS, GAMMA_SAMPLED_CACHE
from .errors import CapacityError, ParameterError
from .oracle import ElementId, GroundSet, Subset, Valuation, evaluate, make_caching
from .prng import Xorshift64Star
from .utils import fan_out

logger = logging.getLogger(__name__)

Witness = Tuple[Subset, Subset]


@dataclass
class GammaEstimate:
    """Estimated ratio and the pair ``(L, S)`` attaining it."""

    value: float
    r: int
    exact: bool
    witness: Optional[Witness] = None
    #: a positive numerator met a zero denominator
    flagged: bool = False
    pairs: int = 0


def pair_count(n: int, r: int) -> int:
    """Number of pairs ``(L, S \\ L)`` with ``|L| <= r`` and ``1 <= |S \\ L| <= r``."""
    return sum(
        math.comb(n, a) * math.comb(n - a, b)
        for a in range(min(r, n) + 1)
        for b in range(1, min(r, n - a) + 1)
    )


def _check_r(r: int) -> None:
    if r < 0:
        raise ParameterError(f"r must be >= 0: {r}")


def _ratio(total: float, joint: float) -> Tuple[float, bool]:
    if joint <= 0.0:
        if total <= 0.0:
            return 1.0, False
        return total / GAMMA_DENOMINATOR_CLAMP, True
    return total / joint, False


def gamma_ratio(oracle: Valuation, l: Sequence[ElementId], s: Sequence[ElementId]) -> float:
    """Ratio of a single pair; ``l`` need not be contained in ``s``."""
    base = sorted(set(l))
    rest = sorted(set(s) - set(l))
    f_l = evaluate(oracle, base)
    total = sum(evaluate(oracle, base + [j]) - f_l for j in rest)
    joint = evaluate(oracle, sorted(set(base) | set(rest))) - f_l
    return _ratio(total, joint)[0]


class _Block:
    """Minimum over all ``S \\ L`` for one fixed ``L``."""

    def __init__(self, value: float, l: Tuple[ElementId, ...], d: Tuple[ElementId, ...]) -> None:
        self.value = value
        self.l = l
        self.d = d
        self.flagged = False


def _scan_block(
    oracle: Valuation, ids: Sequence[ElementId], l: Tuple[ElementId, ...], r: int
) -> Optional[_Block]:
    rest = [j for j in ids if j not in l]
    if len(rest) < 2 or r < 2:
        return None

    base = list(l)
    f_l = evaluate(oracle, base)
    gains: Dict[ElementId, float] = {
        j: evaluate(oracle, sorted(base + [j])) - f_l for j in rest
    }

    best: Optional[_Block] = None
    flagged = False
    for size in range(2, min(r, len(rest)) + 1):
        for d in itertools.combinations(rest, size):
            total = sum(gains[j] for j in d)
            joint = evaluate(oracle, sorted(base + list(d))) - f_l
            ratio, clamped = _ratio(total, joint)
            if clamped:
                flagged = True
                logger.warning(
                    "f(S|L)=%r with positive singleton sum %r for L=%s, S\\L=%s",
                    joint,
                    total,
                    list(l),
                    list(d),
                )
            if best is None or ratio < best.value:
                best = _Block(ratio, l, d)
    if best is not None:
        best.flagged = flagged
    return best


def gamma_exact(
    oracle: Valuation, ground: GroundSet, r: int, jobs: int = 1
) -> GammaEstimate:
    """gamma_r by exhaustive enumeration.

    ``L`` runs by size, then lexicographically; so does ``S \\ L`` for each
    ``L``. The first minimizing pair is reported as witness. Pairs with a
    single element in ``S \\ L`` have ratio 1 and are not evaluated.

    Args:
        oracle: Value oracle, assumed monotone.
        ground: Ground set to enumerate.
        r: Size limit of ``L`` and ``S \\ L``.
        jobs: Threads; the enumeration is split by ``L``.

    Returns:
        Exact estimate; ``value <= 1`` for ``r >= 1``.

    Raises:
        :class:`CapacityError` if there are more than 10^7 pairs.

    Examples:
        >>> from streamweak.objectives import modular
        >>> f = modular([3.0, 1.0, 2.0])
        >>> gamma_exact(f, f.ground, 3).value
        1.0
    """
    _check_r(r)
    n = ground.n
    count = pair_count(n, r)
    if count > GAMMA_MAX_PAIRS:
        raise CapacityError(
            f"gamma_exact pairs (N={n}, r={r})",
            count,
            GAMMA_MAX_PAIRS,
            hint="Use gamma_sampled for an upper estimate.",
        )
    if count == 0:
        return GammaEstimate(value=1.0, r=r, exact=True, pairs=0)

    ids = list(ground.ids())
    first = Subset((ids[0],), n=n)
    estimate = GammaEstimate(
        value=1.0, r=r, exact=True, witness=(Subset(n=n), first), pairs=count
    )

    if not oracle.concurrent_safe:
        jobs = 1
    ls: List[Tuple[ElementId, ...]] = [
        l for size in range(min(r, n) + 1) for l in itertools.combinations(ids, size)
    ]
    blocks = fan_out(lambda l: _scan_block(oracle, ids, l, r), ls, jobs)
    for block in blocks:
        if block is None:
            continue
        estimate.flagged = estimate.flagged or block.flagged
        if block.value < estimate.value:
            estimate.value = block.value
            estimate.witness = (Subset(block.l, n=n), Subset(block.l + block.d, n=n))
    logger.info("gamma_%d = %g over %d pairs", r, estimate.value, count)
    return estimate


def _draw_pair(
    rng: Xorshift64Star, n: int, weights: Sequence[Tuple[int, int, int]], total: int
) -> Tuple[List[ElementId], List[ElementId]]:
    x = rng.below(total)
    for a, b, weight in weights:
        if x < weight:
            break
        x -= weight
    l = sorted(rng.sample(n, a))
    taken = set(l)
    rest = [j for j in range(n) if j not in taken]
    d = sorted(rest[i] for i in rng.sample(len(rest), b))
    return l, d


def gamma_sampled(
    oracle: Valuation, ground: GroundSet, r: int, trials: int, seed: int
) -> GammaEstimate:
    """Minimum ratio over ``trials`` uniformly drawn pairs.

    Pairs are drawn uniformly from all valid pairs (sizes weighted by their
    number of pairs), so the result is an upper estimate of gamma_r.

    Args:
        oracle: Value oracle.
        ground: Ground set.
        r: Size limit of ``L`` and ``S \\ L``.
        trials: Number of pairs, ``>= 1``.
        seed: Seed of the pair sampler.

    Returns:
        Estimate with ``exact=False``; deterministic per seed.
    """
    _check_r(r)
    if trials < 1:
        raise ParameterError(f"trials must be >= 1: {trials}")
    n = ground.n
    weights = [
        (a, b, math.comb(n, a) * math.comb(n - a, b))
        for a in range(min(r, n) + 1)
        for b in range(1, min(r, n - a) + 1)
    ]
    total = sum(w for _, _, w in weights)
    if total == 0:
        return GammaEstimate(value=1.0, r=r, exact=False, pairs=0)

    rng = Xorshift64Star(seed)
    cached = make_caching(oracle, GAMMA_SAMPLED_CACHE)

    def f(members: Sequence[ElementId]) -> float:
        return evaluate(cached, members)

    estimate = GammaEstimate(value=math.inf, r=r, exact=False, pairs=trials)
    for _ in range(trials):
        l, d = _draw_pair(rng, n, weights, total)
        f_l = f(l)
        sum_gains = sum(f(l + [j]) - f_l for j in d)
        ratio, clamped = _ratio(sum_gains, f(l + d) - f_l)
        if clamped:
            estimate.flagged = True
            logger.warning("Zero joint gain with positive singleton sum for L=%s, S\\L=%s", l, d)
        if ratio < estimate.value:
            estimate.value = ratio
            estimate.witness = (Subset(l, n=n), Subset(l + d, n=n))
    logger.info("Sampled gamma_%d <= %g over %d pairs", r, estimate.value, trials)
    return estimate
