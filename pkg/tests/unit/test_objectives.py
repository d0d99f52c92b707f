# pylint: disable=redefined-outer-name
import itertools
from contextlib import nullcontext as does_not_raise
from typing import Any, Callable, List, Sequence

import numpy as np
import pytest

from streamweak import errors, objectives
from streamweak.datasets import DenseDesign, PairwiseProducts, RegressionData, pairwise_products
from streamweak.objectives import Coverage, HardInstance
from streamweak.oracle import Subset, evaluate, marginal


def all_subsets(n: int) -> List[Sequence[int]]:
    return [c for size in range(n + 1) for c in itertools.combinations(range(n), size)]


class TestModular:
    def test_value(self) -> None:
        f = objectives.modular([3.0, 1.0, 2.0])
        assert evaluate(f, [0, 2]) == 5.0
        assert evaluate(f, []) == 0.0
        assert marginal(f, Subset([1]), 0) == 3.0

    @pytest.mark.parametrize("weights", [[], [1.0, -1.0], [float("inf")]])
    def test_bad_weights(self, weights: List[float]) -> None:
        with pytest.raises(errors.ParameterError):
            objectives.modular(weights)


class TestCoverage:
    def test_value(self, abc_coverage: Coverage) -> None:
        assert evaluate(abc_coverage, [0, 1]) == 3.0
        assert evaluate(abc_coverage, [0]) == 2.0
        assert marginal(abc_coverage, Subset([0]), 1) == 1.0

    def test_unknown_item(self) -> None:
        with pytest.raises(errors.ParameterError):
            objectives.coverage([[0, 3]], [1.0, 1.0])

    def test_order_independent(self, greedy_coverage: Coverage) -> None:
        assert greedy_coverage.value([2, 0, 1]) == greedy_coverage.value([0, 1, 2])


class TestHardInstance:
    @pytest.mark.parametrize(
        "k,d,expectation",
        [
            (1, 0, does_not_raise()),
            (3, 100, does_not_raise()),
            (0, 0, pytest.raises(errors.ParameterError)),
            (1, -1, pytest.raises(errors.ParameterError)),
        ],
    )
    def test_params(self, k: int, d: int, expectation: Any) -> None:
        with expectation:
            params = objectives.HardInstanceParams(k=k, d=d)
            assert params.n == 2 * k + d

    def test_values(self, hard_factory: Callable[..., HardInstance]) -> None:
        f = hard_factory(1)
        # u1 = 0, v1 = 1
        assert f.value([]) == 0.0
        assert f.value([0]) == 0.0
        assert f.value([1]) == 1.0
        assert f.value([0, 1]) == 2.0

    def test_maximum(self, hard_factory: Callable[..., HardInstance]) -> None:
        f = hard_factory(2)
        assert f.value(list(range(4))) == 4.0
        assert marginal(f, Subset([2]), 0) == 1.0

    def test_labels(self, hard_factory: Callable[..., HardInstance]) -> None:
        f = hard_factory(2, 1)
        assert [f.ground.label(u) for u in f.ground.ids()] == ["u1", "u2", "v1", "v2", "d1"]

    @pytest.mark.parametrize("k,d", [(1, 2), (2, 2), (3, 1)])
    def test_dummies_add_nothing(self, hard_factory: Callable[..., HardInstance], k: int, d: int) -> None:
        f = hard_factory(k, d)
        core = list(f.params.u_ids) + list(f.params.v_ids)
        for size in range(len(core) + 1):
            for s in itertools.combinations(core, size):
                for dummy in f.params.dummy_ids:
                    assert f.value(list(s) + [dummy]) == f.value(list(s))
                assert f.value(list(s) + list(f.params.dummy_ids)) == f.value(list(s))

    @pytest.mark.parametrize("k,d", [(1, 0), (1, 2), (2, 0), (2, 2)])
    def test_monotone(self, hard_factory: Callable[..., HardInstance], k: int, d: int) -> None:
        f = hard_factory(k, d)
        subsets = all_subsets(f.ground.n)
        for a in subsets:
            assert f.value(a) >= 0.0
            for b in subsets:
                if set(a) <= set(b):
                    assert f.value(a) <= f.value(b)


class TestR2:
    def test_perfect_fit(self) -> None:
        rng = np.random.default_rng(0)
        x = rng.standard_normal((50, 3))
        f = objectives.r2_regression(RegressionData(x=DenseDesign(x), y=x[:, 0] * 2.0 + 1.0))
        assert f.value([0]) == pytest.approx(1.0)
        assert f.value([]) == 0.0

    def test_additive_on_orthogonal(self, orthogonal_data: RegressionData) -> None:
        f = objectives.r2_regression(orthogonal_data)
        singles = [f.value([j]) for j in range(orthogonal_data.n)]
        for s in all_subsets(orthogonal_data.n):
            assert f.value(s) == pytest.approx(sum(singles[j] for j in s), abs=1e-9)

    def test_constant_response(self) -> None:
        x = np.arange(10, dtype=float).reshape(5, 2)
        f = objectives.r2_regression(RegressionData(x=DenseDesign(x), y=np.ones(5)))
        assert f.value([0, 1]) == 0.0

    def test_bounded(self) -> None:
        x, y = pairwise_products(4, rows=40, p=3)
        f = objectives.r2_regression(RegressionData(x=PairwiseProducts(x), y=y))
        for s in [[0], [0, 3, 5], list(range(9))]:
            assert 0.0 <= f.value(s) <= 1.0


class TestLogistic:
    def test_empty(self) -> None:
        x, y = pairwise_products(0, rows=100, p=3)
        f = objectives.logistic_loglik(RegressionData(x=DenseDesign(x), y=y))
        assert f.value([]) == 0.0

    def test_independent_labels(self) -> None:
        x, y = pairwise_products(1, rows=500, p=3)
        y = np.random.default_rng(9).permutation(y)
        f = objectives.logistic_loglik(RegressionData(x=PairwiseProducts(x), y=y))
        for j in range(f.ground.n):
            assert f.value([j]) <= 1e-2

    def test_separator_is_best(self) -> None:
        rng = np.random.default_rng(2)
        x = rng.standard_normal((300, 4))
        y = (x[:, 2] + 0.3 * rng.standard_normal(300) > 0).astype(float)
        f = objectives.logistic_loglik(RegressionData(x=DenseDesign(x), y=y))
        values = [f.value([j]) for j in range(4)]
        assert int(np.argmax(values)) == 2
        assert f.nonconverged == 0

    def test_monotone_in_features(self) -> None:
        x, y = pairwise_products(3, rows=200, p=3)
        f = objectives.logistic_loglik(RegressionData(x=DenseDesign(x), y=y))
        assert f.value([0]) <= f.value([0, 1]) + 1e-9 <= f.value([0, 1, 2]) + 2e-9

    def test_bad_labels(self) -> None:
        x = np.ones((3, 1))
        with pytest.raises(errors.ParameterError):
            objectives.logistic_loglik(RegressionData(x=DenseDesign(x), y=np.array([0.0, 2.0, 1.0])))

    def test_holdout_accuracy(self) -> None:
        rng = np.random.default_rng(4)
        x = rng.standard_normal((200, 3))
        y = (x[:, 0] > 0).astype(float)
        f = objectives.logistic_loglik(RegressionData(x=DenseDesign(x), y=y), holdout=0.25, seed=1)
        assert f.test_rows.size == 50 and f.train_rows.size == 150
        accuracy = f.accuracy([0])
        assert accuracy is not None and accuracy >= 0.9

    def test_no_holdout_accuracy(self) -> None:
        x, y = pairwise_products(0, rows=50, p=3)
        f = objectives.logistic_loglik(RegressionData(x=DenseDesign(x), y=y))
        assert f.accuracy([0]) is None

    @pytest.mark.parametrize("holdout", [-0.1, 1.0])
    def test_bad_holdout(self, holdout: float) -> None:
        x, y = pairwise_products(0, rows=50, p=3)
        with pytest.raises(errors.ParameterError):
            objectives.logistic_loglik(RegressionData(x=DenseDesign(x), y=y), holdout=holdout)


class TestFitLogistic:
    def test_converges(self) -> None:
        rng = np.random.default_rng(6)
        x = rng.standard_normal((400, 2))
        y = (rng.random(400) < 1.0 / (1.0 + np.exp(-(x[:, 0] - x[:, 1])))).astype(float)
        z = np.column_stack([np.ones(400), x])
        beta, _, converged = objectives.fit_logistic(z, y)
        assert converged
        assert beta[1] > 0 > beta[2]

    def test_separable_hits_limit(self) -> None:
        x = np.linspace(-1.0, 1.0, 20)
        y = (x > 0).astype(float)
        z = np.column_stack([np.ones(20), x])
        _, ll, converged = objectives.fit_logistic(z, y, max_iter=5)
        assert not converged
        assert ll < 0.0
