# pylint: disable=redefined-outer-name
import math
from contextlib import nullcontext as does_not_raise
from typing import Any, List, Sequence

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from streamweak import errors, oracle
from streamweak.constants import BITSET_LIMIT, MARGINAL_RTOL
from streamweak.objectives import Modular, coverage, modular


class _Constant(oracle.Valuation):
    def __init__(self, n: int, value: float) -> None:
        super().__init__(oracle.GroundSet(n))
        self.constant = value

    def value(self, members: Sequence[int]) -> float:
        return self.constant


class TestGroundSet:
    @pytest.mark.parametrize(
        "n,labels,expectation",
        [
            (1, None, does_not_raise()),
            (3, ["a", "b", "c"], does_not_raise()),
            (0, None, pytest.raises(errors.ParameterError)),
            (2, ["a"], pytest.raises(errors.ParameterError)),
        ],
    )
    def test_init(self, n: int, labels: Any, expectation: Any) -> None:
        with expectation:
            oracle.GroundSet(n, labels)

    def test_label(self) -> None:
        assert oracle.GroundSet(2).label(1) == "1"
        assert oracle.GroundSet(2, ["x", "y"]).label(1) == "y"

    @pytest.mark.parametrize("ids", [[3], [-1], [0, 1, 2, 5]])
    def test_validate_fails(self, ids: List[int]) -> None:
        with pytest.raises(errors.StreamError):
            oracle.GroundSet(3).validate(ids)


class TestSubset:
    @pytest.mark.parametrize("n", [None, 8, BITSET_LIMIT + 1])
    def test_membership(self, n: Any) -> None:
        s = oracle.Subset([5, 2], n=n)
        s.add(7)
        assert 2 in s and 5 in s and 7 in s
        assert 3 not in s and -1 not in s
        assert s.members == (5, 2, 7)
        assert s.key == (2, 5, 7)

    def test_duplicate_fails(self) -> None:
        with pytest.raises(errors.StreamError):
            oracle.Subset([1, 1])

    def test_add_fails(self) -> None:
        s = oracle.Subset([1], n=4)
        with pytest.raises(errors.PreconditionError):
            s.add(1)

    def test_with_element(self) -> None:
        s = oracle.Subset([1], n=4)
        assert s.with_element(3) == [1, 3]
        assert len(s) == 1

    def test_copy(self) -> None:
        s = oracle.Subset([1], n=4)
        other = s.copy()
        other.add(2)
        assert s.members == (1,) and other.members == (1, 2)

    def test_eq(self) -> None:
        assert oracle.Subset([2, 1]) == oracle.Subset([1, 2], n=4)


class TestEvaluate:
    def test_modular(self, weights_312: Modular) -> None:
        assert oracle.evaluate(weights_312, [0, 2]) == 5.0
        assert oracle.evaluate(weights_312, ()) == 0.0

    def test_marginal(self, weights_312: Modular) -> None:
        assert oracle.marginal(weights_312, oracle.Subset([0]), 2) == 2.0

    def test_marginal_member_fails(self, weights_312: Modular) -> None:
        with pytest.raises(errors.PreconditionError):
            oracle.marginal(weights_312, oracle.Subset([0]), 0)

    def test_unknown_id_fails(self, weights_312: Modular) -> None:
        with pytest.raises(errors.StreamError):
            oracle.evaluate(weights_312, [3])

    @pytest.mark.parametrize("value", [-1.0, math.nan, math.inf])
    def test_violation(self, value: float) -> None:
        with pytest.raises(errors.OracleViolation) as excinfo:
            oracle.evaluate(_Constant(3, value), [2, 0])
        assert excinfo.value.subset == (2, 0)
        assert excinfo.value.exit_code.value == 3


class TestCountingOracle:
    def test_calls(self, weights_312: Modular) -> None:
        counting = oracle.make_counting(weights_312)
        oracle.evaluate(counting, [0])
        oracle.marginal(counting, oracle.Subset([0]), 1, f_base=3.0)
        assert counting.stats is not None and counting.stats.calls == 2

    def test_forwards_attributes(self, weights_312: Modular) -> None:
        counting = oracle.make_counting(weights_312)
        assert counting.weights is weights_312.weights
        assert oracle.unwrap(oracle.make_caching(counting, 4)) is weights_312


class TestCachingOracle:
    def test_hits(self, weights_312: Modular) -> None:
        cached = oracle.make_caching(oracle.make_counting(weights_312), 8)
        assert oracle.evaluate(cached, [2, 0]) == oracle.evaluate(cached, [0, 2])
        assert cached.stats is not None
        assert cached.stats.calls == 1 and cached.stats.cache_hits == 1
        assert cached.stats.queries == 2

    @pytest.mark.parametrize("capacity,calls,hits", [(8, 1, 1), (0, 2, 0)])
    def test_bare_objective(
        self, weights_312: Modular, capacity: int, calls: int, hits: int
    ) -> None:
        cached = oracle.make_caching(weights_312, capacity)
        oracle.evaluate(cached, [0, 2])
        oracle.evaluate(cached, [2, 0])
        assert cached.stats is not None
        assert (cached.stats.calls, cached.stats.cache_hits) == (calls, hits)
        assert cached.stats.cache_hits <= cached.stats.queries

    def test_eviction(self, weights_312: Modular) -> None:
        cached = oracle.make_caching(oracle.make_counting(weights_312), 1)
        for s in ([0], [1], [0]):
            oracle.evaluate(cached, s)
        assert cached.stats is not None and cached.stats.calls == 3

    def test_disabled(self, weights_312: Modular) -> None:
        cached = oracle.make_caching(oracle.make_counting(weights_312), 0)
        oracle.evaluate(cached, [0])
        oracle.evaluate(cached, [0])
        assert cached.stats is not None and cached.stats.calls == 2

    def test_negative_capacity_fails(self, weights_312: Modular) -> None:
        with pytest.raises(errors.ParameterError):
            oracle.make_caching(weights_312, -1)


@settings(max_examples=50, deadline=None)
@given(
    weights=st.lists(st.floats(min_value=0.0, max_value=1e6), min_size=2, max_size=10),
    data=st.data(),
)
def test_marginal_identity(weights: List[float], data: st.DataObject) -> None:
    f = modular(weights)
    n = len(weights)
    members = data.draw(st.lists(st.integers(0, n - 1), unique=True, max_size=n - 1))
    u = data.draw(st.sampled_from([j for j in range(n) if j not in members]))
    base = oracle.Subset(members, n=n)
    gain = oracle.marginal(f, base, u)
    lhs = oracle.evaluate(f, base.with_element(u))
    rhs = oracle.evaluate(f, base) + gain
    assert abs(lhs - rhs) <= MARGINAL_RTOL * max(1.0, abs(lhs))


@settings(max_examples=30, deadline=None)
@given(
    sets=st.lists(st.lists(st.integers(0, 5), max_size=4), min_size=1, max_size=6),
    picks=st.lists(st.integers(0, 5), unique=True, max_size=6),
)
def test_cache_transparent(sets: List[List[int]], picks: List[int]) -> None:
    f = coverage(sets, [1.0] * 6)
    picks = [u for u in picks if u < len(sets)]
    cached = oracle.make_caching(f, 3)
    assert oracle.evaluate(cached, picks) == oracle.evaluate(f, picks)
    assert oracle.evaluate(cached, list(reversed(picks))) == oracle.evaluate(f, picks)
