"""Built-in objectives.

All objectives are pure after construction and safe for concurrent
evaluation; member order never changes their value.
"""

import logging
import threading
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .constants import IRLS_MAX_ITER, IRLS_RIDGE, IRLS_TOL
from .datasets import CoverageData, RegressionData
from .errors import ParameterError
from .oracle import ElementId, GroundSet, Valuation

logger = logging.getLogger(__name__)


class Modular(Valuation):
    """f(S) = sum of ``weights[i]`` over ``S``."""

    name = "modular"

    def __init__(self, weights: Sequence[float]) -> None:
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or w.size < 1:
            raise ParameterError("Modular objective needs at least one weight.")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ParameterError("Modular weights must be finite and >= 0.")
        super().__init__(GroundSet(int(w.size)))
        self.weights = w

    def value(self, members: Sequence[ElementId]) -> float:
        if not members:
            return 0.0
        # sorted for an order independent float sum
        return float(sum(self.weights[i] for i in sorted(members)))


def modular(weights: Sequence[float]) -> Modular:
    return Modular(weights)


class Coverage(Valuation):
    """f(S) = total weight of the union of ``sets[i]`` over ``S``."""

    name = "coverage"

    def __init__(self, sets: Sequence[Sequence[int]], weights: Sequence[float]) -> None:
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ParameterError("Universe weights must be finite and >= 0.")
        for pos, members in enumerate(sets):
            for item in members:
                if not 0 <= item < w.size:
                    raise ParameterError(f"Set {pos} references unknown universe item {item}.")
        super().__init__(GroundSet(len(sets)))
        self.sets = tuple(frozenset(int(i) for i in s) for s in sets)
        self.weights = w

    def value(self, members: Sequence[ElementId]) -> float:
        covered = set()
        for i in members:
            covered |= self.sets[i]
        return float(sum(self.weights[j] for j in sorted(covered)))


def coverage(sets: Sequence[Sequence[int]], weights: Sequence[float]) -> Coverage:
    return Coverage(sets, weights)


def coverage_from_data(data: CoverageData) -> Coverage:
    return Coverage(data.sets, data.universe_weights)


@dataclass(frozen=True)
class HardInstanceParams:
    """Layout of the hard instance: ids ``[0, k)`` are u-elements,
    ``[k, 2k)`` v-elements and ``[2k, 2k + d)`` dummies."""

    k: int
    d: int = 0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ParameterError(f"Hard instance needs k >= 1: {self.k}")
        if self.d < 0:
            raise ParameterError(f"Dummy count must be >= 0: {self.d}")

    @property
    def n(self) -> int:
        return 2 * self.k + self.d

    @property
    def u_ids(self) -> range:
        return range(0, self.k)

    @property
    def v_ids(self) -> range:
        return range(self.k, 2 * self.k)

    @property
    def dummy_ids(self) -> range:
        return range(2 * self.k, self.n)

    def labels(self) -> Tuple[str, ...]:
        return (
            tuple(f"u{i + 1}" for i in range(self.k))
            + tuple(f"v{i + 1}" for i in range(self.k))
            + tuple(f"d{i + 1}" for i in range(self.d))
        )


class HardInstance(Valuation):
    """f(S) = min(2 u(S) + 1, 2 v(S)); dummies never change the value.

    Nonnegative, monotone and 0.5-weakly submodular; its maximum is
    ``f(u-elements + v-elements) = 2k``.
    """

    name = "hard"

    def __init__(self, params: HardInstanceParams) -> None:
        super().__init__(GroundSet(params.n, params.labels()))
        self.params = params

    def value(self, members: Sequence[ElementId]) -> float:
        k = self.params.k
        u = sum(1 for i in members if i < k)
        v = sum(1 for i in members if k <= i < 2 * k)
        return float(min(2 * u + 1, 2 * v))


def hard_instance(params: HardInstanceParams) -> HardInstance:
    return HardInstance(params)


class R2Regression(Valuation):
    """Goodness of fit R^2 of a least squares fit of ``y`` on the columns in S.

    Columns and ``y`` are centered (fit with intercept); rank deficient
    designs use the minimum norm solution. A constant ``y`` gives 0.
    """

    name = "r2"

    def __init__(self, data: RegressionData) -> None:
        super().__init__(GroundSet(data.n, data.x.names))
        self.data = data
        self.yc = data.y - data.y.mean()
        self.tss = float(self.yc @ self.yc)

    def value(self, members: Sequence[ElementId]) -> float:
        if not members or self.tss <= 0.0:
            return 0.0
        if len(members) > self.data.rows:
            raise ParameterError(f"|S|={len(members)} exceeds {self.data.rows} observations.")
        xs = self.data.x.columns(sorted(members))
        xs = xs - xs.mean(axis=0)
        beta, *_ = np.linalg.lstsq(xs, self.yc, rcond=None)
        resid = self.yc - xs @ beta
        r2 = 1.0 - float(resid @ resid) / self.tss
        return min(1.0, max(0.0, r2))


def r2_regression(data: RegressionData) -> R2Regression:
    return R2Regression(data)


def _loglik(z: np.ndarray, y: np.ndarray, beta: np.ndarray) -> float:
    eta = z @ beta
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def _sigmoid(eta: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * eta))


def fit_logistic(
    z: np.ndarray,
    y: np.ndarray,
    max_iter: int = IRLS_MAX_ITER,
    tol: float = IRLS_TOL,
    ridge: float = IRLS_RIDGE,
) -> Tuple[np.ndarray, float, bool]:
    """Maximum likelihood logistic fit by iteratively reweighted least squares.

    Newton steps on the normal equations with ``ridge`` added to the
    diagonal; a step is halved while it lowers the likelihood.

    Args:
        z: Design including the intercept column.
        y: Labels in {0, 1}.
        max_iter: Iteration limit.
        tol: Gradient norm at which the fit has converged.
        ridge: Diagonal added to ``Z' W Z``.

    Returns:
        Best coefficients, their log-likelihood and whether the fit converged.
    """
    beta = np.zeros(z.shape[1])
    ll = _loglik(z, y, beta)
    eye = np.eye(z.shape[1])
    for _ in range(max_iter):
        p = _sigmoid(z @ beta)
        grad = z.T @ (y - p)
        if float(np.linalg.norm(grad)) < tol:
            return beta, ll, True
        w = p * (1.0 - p)
        hess = (z * w[:, None]).T @ z + ridge * eye
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(hess, grad, rcond=None)[0]
        for _ in range(30):
            candidate = beta + step
            cand_ll = _loglik(z, y, candidate)
            if cand_ll >= ll - 1e-12 * max(1.0, abs(ll)):
                break
            step = step / 2.0
        else:
            return beta, ll, False
        beta, ll = candidate, cand_ll
    p = _sigmoid(z @ beta)
    return beta, ll, float(np.linalg.norm(z.T @ (y - p))) < tol


class LogisticLoglik(Valuation):
    """Log-likelihood gain of a logistic fit on S over the intercept-only fit.

    f(S) = (l(beta_S) - l(beta_empty)) / n >= 0, i.e. the gain in mean
    log-likelihood per training row. With ``holdout > 0`` a seeded share
    of the rows is held back for :meth:`accuracy` and excluded from the fits.
    Fits that hit the iteration limit use their best iterate and are counted
    in :attr:`nonconverged`.
    """

    name = "logistic"

    def __init__(self, data: RegressionData, holdout: float = 0.0, seed: int = 0) -> None:
        labels = np.unique(data.y)
        if not set(labels.tolist()) <= {0.0, 1.0}:
            raise ParameterError(f"Logistic labels must be 0 or 1, got {labels.tolist()[:5]}.")
        if not 0.0 <= holdout < 1.0:
            raise ParameterError(f"holdout must be in [0, 1): {holdout}")
        super().__init__(GroundSet(data.n, data.x.names))
        self.data = data

        order = np.random.default_rng(seed).permutation(data.rows)
        n_test = int(round(holdout * data.rows))
        if n_test >= data.rows:
            raise ParameterError("holdout leaves no training rows.")
        self.test_rows = np.sort(order[:n_test])
        self.train_rows = np.sort(order[n_test:])
        self.y_train = data.y[self.train_rows]
        self._lock = threading.Lock()
        self.nonconverged = 0
        self._null_ll = self._fit(())[1]

    def _design(self, members: Sequence[ElementId], rows: np.ndarray) -> np.ndarray:
        cols = self.data.x.columns(sorted(members))[rows]
        return np.column_stack([np.ones(rows.shape[0]), cols])

    def _fit(self, members: Sequence[ElementId]) -> Tuple[np.ndarray, float]:
        z = self._design(members, self.train_rows)
        beta, ll, converged = fit_logistic(z, self.y_train)
        if not converged:
            with self._lock:
                self.nonconverged += 1
            logger.warning("Logistic fit on %d features did not converge.", len(members))
        return beta, ll

    def value(self, members: Sequence[ElementId]) -> float:
        if not members:
            return 0.0
        _, ll = self._fit(members)
        return max(0.0, (ll - self._null_ll) / self.train_rows.size)

    def accuracy(self, members: Sequence[ElementId]) -> Optional[float]:
        """Share of held-out rows classified correctly by the fit on ``members``."""
        if self.test_rows.size == 0:
            return None
        beta, _ = self._fit(members)
        z = self._design(members, self.test_rows)
        predicted = (z @ beta) > 0.0
        return float(np.mean(predicted == (self.data.y[self.test_rows] > 0.5)))


def logistic_loglik(data: RegressionData, holdout: float = 0.0, seed: int = 0) -> LogisticLoglik:
    return LogisticLoglik(data, holdout=holdout, seed=seed)
