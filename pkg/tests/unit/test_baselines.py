# pylint: disable=redefined-outer-name
import itertools
import math
import random
from typing import Callable, List

import pytest

from streamweak import baselines, errors
from streamweak.gamma import gamma_exact
from streamweak.objectives import Coverage, HardInstance, modular
from streamweak.oracle import GroundSet, make_counting
from streamweak.streak import streak_run
from streamweak.threshold import tg_run


class TestRandomSubset:
    @pytest.mark.parametrize(
        "stream,k,expected",
        [
            ([3, 1, 2, 0], 2, (1, 3)),
            ([2, 0], 3, (0, 2)),
            ([3, 1, 2, 0], 0, ()),
        ],
    )
    def test_first_k(self, stream: List[int], k: int, expected: tuple) -> None:
        f = modular([1.0, 1.0, 1.0, 1.0])
        result = baselines.random_subset(f, k, stream)
        assert result.members == expected

    def test_one_evaluation(self) -> None:
        f = make_counting(modular([1.0, 2.0]))
        result = baselines.random_subset(f, 1, [1, 0])
        assert result.oracle_calls == 1 and result.value == 2.0


class TestLocalSearch:
    def test_swaps(self) -> None:
        f = modular([1.0, 5.0, 2.0, 4.0])
        result = baselines.local_search(f, 2, [0, 1, 2, 3])
        assert result.members == (1, 3)
        assert result.value == 9.0
        assert result.extra["swaps"] == 2

    def test_exactly_k(self) -> None:
        f = make_counting(modular([1.0, 5.0, 2.0]))
        result = baselines.local_search(f, 3, [2, 0, 1])
        assert result.members == (0, 1, 2)
        # f(buffer) once and the final evaluation
        assert result.oracle_calls == 2
        assert result.extra["swaps"] == 0

    def test_modular_top_k(self) -> None:
        rng = random.Random(3)
        for _ in range(10):
            weights = [rng.random() for _ in range(8)]
            f = modular(weights)
            stream = list(range(8))
            rng.shuffle(stream)
            result = baselines.local_search(f, 3, stream)
            _, opt = baselines.brute_force_opt(f, f.ground, 3)
            assert result.value == pytest.approx(opt)

    def test_value_never_decreases(self, coverage_suite: Callable[..., List[Coverage]]) -> None:
        for seed, f in enumerate(coverage_suite(5, 12)):
            stream = list(f.ground.ids())
            random.Random(seed).shuffle(stream)
            values = [baselines.local_search(f, 3, stream[:t]).value for t in range(len(stream) + 1)]
            assert all(a <= b for a, b in zip(values, values[1:]))

    def test_jobs(self, coverage_suite: Callable[..., List[Coverage]]) -> None:
        f = coverage_suite(1, 6)[0]
        stream = list(f.ground.ids())
        assert (
            baselines.local_search(f, 3, stream, jobs=3).members
            == baselines.local_search(f, 3, stream).members
        )


class TestFullGreedy:
    def test_tie_break(self, greedy_coverage: Coverage) -> None:
        result = baselines.full_greedy(greedy_coverage, greedy_coverage.ground, 2)
        assert result.subset.members == (0, 1)
        assert result.value == 4.0

    @pytest.mark.parametrize("lazy", [False, True])
    def test_modular(self, lazy: bool) -> None:
        f = modular([1.0, 5.0, 2.0, 4.0])
        result = baselines.full_greedy(f, f.ground, 2, lazy=lazy)
        assert result.members == (1, 3)

    def test_stops_without_gain(self) -> None:
        f = modular([0.0, 2.0, 0.0])
        result = baselines.full_greedy(f, f.ground, 3)
        assert result.members == (1,)

    def test_submodular_guarantee(self, coverage_suite: Callable[..., List[Coverage]]) -> None:
        k = 3
        for f in coverage_suite(5, 8):
            assert gamma_exact(f, f.ground, k).value == pytest.approx(1.0)
            _, opt = baselines.brute_force_opt(f, f.ground, k)
            greedy = baselines.full_greedy(f, f.ground, k)
            assert greedy.value >= (1.0 - 1.0 / math.e) * opt

    def test_lazy_matches(self, coverage_suite: Callable[..., List[Coverage]]) -> None:
        for f in coverage_suite(3, 21):
            eager = baselines.full_greedy(f, f.ground, 4)
            lazy = baselines.full_greedy(make_counting(f), f.ground, 4, lazy=True)
            assert lazy.value == pytest.approx(eager.value)


class TestBruteForce:
    def test_coverage(self, greedy_coverage: Coverage) -> None:
        s, value = baselines.brute_force_opt(greedy_coverage, greedy_coverage.ground, 2)
        assert value == 4.0
        assert s.key == (0, 1)

    def test_hard(self, hard_factory: Callable[..., HardInstance]) -> None:
        f = hard_factory(2)
        _, value = baselines.brute_force_opt(f, f.ground, 4)
        assert value == 4.0

    def test_empty_budget(self, greedy_coverage: Coverage) -> None:
        s, value = baselines.brute_force_opt(greedy_coverage, greedy_coverage.ground, 0)
        assert len(s) == 0 and value == 0.0

    def test_matches_enumeration(self, coverage_suite: Callable[..., List[Coverage]]) -> None:
        f = coverage_suite(1, 30)[0]
        best = max(
            f.value(list(c))
            for size in range(4)
            for c in itertools.combinations(f.ground.ids(), size)
        )
        assert baselines.brute_force_opt(f, f.ground, 3)[1] == best

    def test_capacity(self) -> None:
        f = modular([1.0] * 25)
        with pytest.raises(errors.CapacityError):
            baselines.brute_force_opt(f, f.ground, 2)

    def test_subset_count(self) -> None:
        assert baselines.subset_count(4, 2) == 11
        assert baselines.subset_count(3, 5) == 8

    def test_run(self) -> None:
        f = make_counting(modular([1.0, 2.0, 3.0]))
        result = baselines.brute_force_run(f, GroundSet(3), 2)
        assert result.value == 5.0 and result.oracle_calls == 7


def test_opt_dominates(coverage_suite: Callable[..., List[Coverage]]) -> None:
    k = 3
    for seed, f in enumerate(coverage_suite(5, 14)):
        stream = list(f.ground.ids())
        random.Random(seed).shuffle(stream)
        _, opt = baselines.brute_force_opt(f, f.ground, k)
        others = [
            baselines.random_subset(f, k, stream),
            baselines.local_search(f, k, stream),
            baselines.full_greedy(f, f.ground, k),
            baselines.full_greedy(f, f.ground, k, lazy=True),
            streak_run(f, k, 0.2, stream),
            tg_run(f, k, opt / 2, stream),
        ]
        for result in others:
            assert len(result.subset) <= k
            assert result.value <= opt + 1e-9
