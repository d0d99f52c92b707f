"""Ground sets, subsets and value oracles.

Every algorithm accesses its objective only through :func:`evaluate` and
:func:`marginal`. Objectives implement :class:`Valuation`; the counting and
caching wrappers add cost accounting and memoization without changing values.

Examples:
    >>> from streamweak.objectives import modular
    >>> oracle = make_counting(modular([3.0, 1.0, 2.0]))
    >>> evaluate(oracle, [0, 2])
    5.0
    >>> oracle.stats.calls
    1
"""

import logging
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import (
    Any,
    Iterable,
    Iterator,
    List,
    Optional,
    Sequence,
    Tuple,
    Union,
)

from .constants import BITSET_LIMIT
from .errors import OracleViolation, ParameterError, PreconditionError, StreamError

logger = logging.getLogger(__name__)

#: Dense element index in ``[0, N)``.
ElementId = int


class GroundSet:
    """The universe of ``n`` stream elements."""

    def __init__(self, n: int, labels: Optional[Sequence[str]] = None) -> None:
        if n < 1:
            raise ParameterError(f"Ground set needs at least one element: n={n}")
        if labels is not None and len(labels) != n:
            raise ParameterError(f"Expected {n} labels, got {len(labels)}.")
        self.n = n
        self.labels = tuple(labels) if labels is not None else None

    def __len__(self) -> int:
        return self.n

    def __contains__(self, u: object) -> bool:
        return isinstance(u, int) and 0 <= u < self.n

    def __eq__(self, other: Any) -> bool:
        if isinstance(other, GroundSet):
            return self.n == other.n and self.labels == other.labels
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.n, self.labels))

    def __repr__(self) -> str:
        return f"GroundSet(n={self.n})"

    def ids(self) -> range:
        return range(self.n)

    def label(self, u: ElementId) -> str:
        if self.labels is None:
            return str(u)
        return self.labels[u]

    def validate(self, ids: Iterable[ElementId]) -> None:
        """Check that all ``ids`` belong to the ground set.

        Raises:
            :class:`StreamError` for unknown ids.
        """
        for u in ids:
            if u not in self:
                raise StreamError(f"Element {u!r} not in ground set of size {self.n}.")


class Subset:
    """Ordered set of distinct element ids.

    Members keep insertion order; :attr:`key` is the canonical (sorted) form
    used for caching and output. Membership is backed by an integer bitset for
    ground sets up to :data:`BITSET_LIMIT` elements and a hash set otherwise.
    """

    __slots__ = ("_members", "_bits", "_set")

    def __init__(self, members: Iterable[ElementId] = (), n: Optional[int] = None) -> None:
        self._members: List[ElementId] = []
        self._bits: Optional[int] = 0 if n is not None and n <= BITSET_LIMIT else None
        self._set: Optional[set] = None if self._bits is not None else set()
        for u in members:
            if u in self:
                raise StreamError(f"Duplicate element {u} in subset.")
            self._insert(u)

    def _insert(self, u: ElementId) -> None:
        self._members.append(u)
        if self._bits is not None:
            self._bits |= 1 << u
        else:
            assert self._set is not None
            self._set.add(u)

    def add(self, u: ElementId) -> None:
        if u in self:
            raise PreconditionError(f"Element {u} already in subset.")
        self._insert(u)

    def __contains__(self, u: object) -> bool:
        if not isinstance(u, int) or u < 0:
            return False
        if self._bits is not None:
            return bool((self._bits >> u) & 1)
        assert self._set is not None
        return u in self._set

    def __len__(self) -> int:
        return len(self._members)

    def __iter__(self) -> Iterator[ElementId]:
        return iter(self._members)

    def __eq__(self, other: Any) -> bool:
        if isinstance(other, Subset):
            return self.key == other.key
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.key)

    def __repr__(self) -> str:
        return f"Subset({self._members})"

    @property
    def members(self) -> Tuple[ElementId, ...]:
        return tuple(self._members)

    @property
    def key(self) -> Tuple[ElementId, ...]:
        return tuple(sorted(self._members))

    def with_element(self, u: ElementId) -> List[ElementId]:
        """Members of ``self`` plus ``u`` (not stored)."""
        return self._members + [u]

    def copy(self) -> "Subset":
        other = Subset()
        other._members = list(self._members)
        other._bits = self._bits
        other._set = set(self._set) if self._set is not None else None
        return other


@dataclass
class OracleStats:
    """Oracle cost accounting."""

    calls: int = 0
    cache_hits: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def add_call(self) -> None:
        with self._lock:
            self.calls += 1

    def add_hit(self) -> None:
        with self._lock:
            self.cache_hits += 1

    @property
    def queries(self) -> int:
        return self.calls + self.cache_hits

    def reset(self) -> None:
        with self._lock:
            self.calls = 0
            self.cache_hits = 0


class Valuation:
    """Value oracle f: 2^N -> [0, inf).

    Implementations override :meth:`value` and declare through
    :attr:`concurrent_safe` whether :meth:`value` may run on several threads
    at once. Monotonicity is assumed by the algorithms, never enforced.
    """

    #: Safe to evaluate from several threads at once.
    concurrent_safe: bool = True
    #: Name used in experiment output.
    name: str = "valuation"
    #: Cost accounting, set by :func:`make_counting`.
    stats: Optional[OracleStats] = None

    def __init__(self, ground: GroundSet) -> None:
        self.ground = ground

    def value(self, members: Sequence[ElementId]) -> float:
        """f(members); ``members`` are distinct and in the ground set."""
        raise NotImplementedError

    def close(self) -> None:
        """Release resources; no-op for in-process objectives."""


class CountingOracle(Valuation):
    """Counts every evaluation forwarded to the wrapped oracle."""

    def __init__(self, inner: Valuation, stats: Optional[OracleStats] = None) -> None:
        super().__init__(inner.ground)
        self.inner = inner
        self.name = inner.name
        self.concurrent_safe = inner.concurrent_safe
        self.stats = stats if stats is not None else OracleStats()

    def value(self, members: Sequence[ElementId]) -> float:
        assert self.stats is not None
        self.stats.add_call()
        return self.inner.value(members)

    def close(self) -> None:
        self.inner.close()

    def __getattr__(self, name: str) -> Any:
        # objective specific helpers (e.g.: accuracy) stay reachable
        if name == "inner":
            raise AttributeError(name)
        return getattr(self.inner, name)


class CachingOracle(Valuation):
    """Memoizes values by canonical (sorted) key in an LRU of ``capacity`` entries.

    A capacity of 0 disables caching. Cached values are returned unchanged.
    """

    def __init__(self, inner: Valuation, capacity: int) -> None:
        if capacity < 0:
            raise ParameterError(f"Cache capacity must be >= 0: {capacity}")
        super().__init__(inner.ground)
        self.inner = inner
        self.name = inner.name
        self.capacity = capacity
        self.concurrent_safe = inner.concurrent_safe
        # misses are counted here only when no counting wrapper sits below
        self._counts_misses = inner.stats is None
        self.stats = inner.stats if inner.stats is not None else OracleStats()
        self._cache: "OrderedDict[Tuple[ElementId, ...], float]" = OrderedDict()
        self._lock = threading.Lock()

    def _miss(self, members: Sequence[ElementId]) -> float:
        if self._counts_misses:
            assert self.stats is not None
            self.stats.add_call()
        return self.inner.value(members)

    def value(self, members: Sequence[ElementId]) -> float:
        if self.capacity == 0:
            return self._miss(members)

        key = tuple(sorted(members))
        with self._lock:
            if key in self._cache:
                self._cache.move_to_end(key)
                assert self.stats is not None
                self.stats.add_hit()
                return self._cache[key]

        value = self._miss(key)
        with self._lock:
            self._cache[key] = value
            if len(self._cache) > self.capacity:
                self._cache.popitem(last=False)
        return value

    def close(self) -> None:
        self.inner.close()

    def __getattr__(self, name: str) -> Any:
        if name == "inner":
            raise AttributeError(name)
        return getattr(self.inner, name)


def make_counting(oracle: Valuation) -> CountingOracle:
    return CountingOracle(oracle)


def make_caching(oracle: Valuation, capacity: int) -> CachingOracle:
    return CachingOracle(oracle, capacity)


def _members(oracle: Valuation, s: Union[Subset, Iterable[ElementId]]) -> Sequence[ElementId]:
    if isinstance(s, Subset):
        members: Sequence[ElementId] = s.members
    else:
        members = Subset(s).members
    oracle.ground.validate(members)
    return members


def evaluate(oracle: Valuation, s: Union[Subset, Iterable[ElementId]]) -> float:
    """Evaluate f(s).

    Args:
        oracle: Value oracle.
        s: Subset or distinct element ids.

    Returns:
        f(s) as float.

    Raises:
        :class:`StreamError` for ids outside of the ground set.
        :class:`OracleViolation` if f(s) is NaN, infinite or negative.
    """
    members = _members(oracle, s)
    value = float(oracle.value(members))
    if math.isnan(value) or math.isinf(value) or value < 0:
        raise OracleViolation(members, value)
    return value


def marginal(
    oracle: Valuation,
    base: Subset,
    u: ElementId,
    f_base: Optional[float] = None,
) -> float:
    """Marginal gain f(u | base) = f(base + u) - f(base).

    Args:
        oracle: Value oracle.
        base: Subset not containing ``u``.
        u: Element to add.
        f_base: (Optional) Known f(base); saves one oracle call.

    Returns:
        Marginal gain of ``u``; may be negative for non-monotone oracles.

    Raises:
        :class:`PreconditionError` if ``u`` is already in ``base``.
    """
    if u in base:
        raise PreconditionError(f"Element {u} already in base set.")
    if f_base is None:
        f_base = evaluate(oracle, base)
    return evaluate(oracle, base.with_element(u)) - f_base


def unwrap(oracle: Valuation) -> Valuation:
    """Innermost oracle below counting and caching wrappers."""
    while isinstance(oracle, (CountingOracle, CachingOracle)):
        oracle = oracle.inner
    return oracle
