"""Objective data: design matrices, synthetic generators and file formats.

Regression files are CSV with a header row, feature columns first and the
response in a final column named ``y``. Coverage files are JSON objects
``{"universe_weights": [...], "sets": [[ids...], ...]}``.
"""

import json
import logging
import os
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from marshmallow import Schema, ValidationError, fields, post_load, validates_schema
from marshmallow.validate import Length, Range

from .constants import MAX_COLUMNS
from .errors import CapacityError, ParameterError, StorageError
from .file_utils import create_dir

logger = logging.getLogger(__name__)

KINDS = ("pairwise-products", "planted-regression", "coverage-random")


class DesignMatrix:
    """Column source of a regression objective."""

    rows: int
    n_columns: int
    names: Tuple[str, ...]

    def column(self, j: int) -> np.ndarray:
        raise NotImplementedError

    def columns(self, ids: Sequence[int]) -> np.ndarray:
        """Matrix of shape ``(rows, len(ids))``."""
        if not ids:
            return np.empty((self.rows, 0))
        return np.column_stack([self.column(j) for j in ids])


class DenseDesign(DesignMatrix):
    def __init__(self, x: np.ndarray, names: Optional[Sequence[str]] = None) -> None:
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise ParameterError(f"Design matrix needs shape (rows, columns): {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ParameterError("Design matrix has non-finite entries.")
        self.x = x
        self.rows, self.n_columns = x.shape
        self.names = tuple(names) if names is not None else tuple(f"x{j}" for j in range(self.n_columns))

    def column(self, j: int) -> np.ndarray:
        return self.x[:, j]

    def columns(self, ids: Sequence[int]) -> np.ndarray:
        return self.x[:, list(ids)]


def pair_index(p: int) -> List[Tuple[int, int]]:
    """Pairs ``(i, j)`` with ``i <= j < p`` in row-major order."""
    return [(i, j) for i in range(p) for j in range(i, p)]


class PairwiseProducts(DesignMatrix):
    """Base columns plus all products ``x_i * x_j`` (``i <= j``), built on demand.

    Column ``j < p`` is base column ``j``; column ``p + t`` is the product of
    the ``t``-th pair of :func:`pair_index`. Materialized columns are kept in
    an LRU of ``cache_size`` columns.
    """

    def __init__(
        self,
        base: np.ndarray,
        names: Optional[Sequence[str]] = None,
        cache_size: int = 1024,
    ) -> None:
        self.base = DenseDesign(base, names)
        p = self.base.n_columns
        self.p = p
        self.pairs = pair_index(p)
        self.rows = self.base.rows
        self.n_columns = p + len(self.pairs)
        if self.n_columns > MAX_COLUMNS:
            raise CapacityError("Pairwise product columns", self.n_columns, MAX_COLUMNS)
        base_names = self.base.names
        self.names = base_names + tuple(f"{base_names[i]}*{base_names[j]}" for i, j in self.pairs)
        self._lock = threading.Lock()
        self._cached = lru_cache(maxsize=cache_size)(self._materialize)

    def _materialize(self, j: int) -> np.ndarray:
        i, jj = self.pairs[j - self.p]
        col = self.base.x[:, i] * self.base.x[:, jj]
        col.setflags(write=False)
        return col

    def column(self, j: int) -> np.ndarray:
        if not 0 <= j < self.n_columns:
            raise ParameterError(f"Column {j} out of range [0, {self.n_columns}).")
        if j < self.p:
            return self.base.x[:, j]
        with self._lock:
            return self._cached(j)


@dataclass
class RegressionData:
    """Design ``x`` (rows: observations, columns: candidate features) and response ``y``."""

    x: DesignMatrix
    y: np.ndarray

    def __post_init__(self) -> None:
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.y.shape[0] != self.x.rows:
            raise ParameterError(f"Expected {self.x.rows} responses, got {self.y.shape[0]}.")
        if not np.all(np.isfinite(self.y)):
            raise ParameterError("Response has non-finite entries.")

    @property
    def n(self) -> int:
        return self.x.n_columns

    @property
    def rows(self) -> int:
        return self.x.rows


@dataclass
class CoverageData:
    universe_weights: List[float]
    sets: List[List[int]]

    def to_dict(self) -> Mapping[str, Any]:
        return {"universe_weights": list(self.universe_weights), "sets": [list(s) for s in self.sets]}


class CoverageSchema(Schema):
    universe_weights = fields.List(
        fields.Float(allow_nan=False, validate=Range(min=0)),
        required=True,
        validate=Length(min=1),
    )
    sets = fields.List(
        fields.List(fields.Integer(strict=True, validate=Range(min=0))),
        required=True,
        validate=Length(min=1),
    )

    @validates_schema
    def check_ids(self, data: Mapping[str, Any], **_kwargs: Any) -> None:
        size = len(data["universe_weights"])
        for pos, members in enumerate(data["sets"]):
            for item in members:
                if item >= size:
                    raise ValidationError(
                        f"Set {pos} references universe item {item} >= {size}.", "sets"
                    )

    @post_load
    def make_data(self, data: Mapping[str, Any], **_kwargs: Any) -> CoverageData:
        return CoverageData(universe_weights=data["universe_weights"], sets=data["sets"])


def read_coverage_json(fname: str) -> CoverageData:
    """Read and validate a coverage file.

    Raises:
        :class:`StorageError` if the file cannot be read.
        :class:`ParameterError` if the content is invalid.
    """
    try:
        with open(fname, "r", encoding="utf8") as file:
            raw = json.load(file)
    except OSError as e:
        raise StorageError(fname, e) from e
    except ValueError as e:
        raise ParameterError(f"{fname}: invalid JSON: {e}") from e
    try:
        data: CoverageData = CoverageSchema().load(raw)
    except ValidationError as e:
        raise ParameterError(f"{fname}: {e.messages}") from e
    return data


def write_coverage_json(data: CoverageData, fname: str) -> str:
    _ensure_parent(fname)
    try:
        with open(fname, "w", encoding="utf8") as file:
            json.dump(CoverageSchema().dump(data), file, sort_keys=True)
            file.write("\n")
    except OSError as e:
        raise StorageError(fname, e) from e
    return fname


def read_regression_csv(fname: str, expand_pairwise: bool = False) -> RegressionData:
    """Read a regression file.

    Args:
        fname: CSV with feature columns and a final ``y`` column.
        expand_pairwise: Expose all pairwise products of the feature columns.

    Raises:
        :class:`StorageError` if the file cannot be read.
        :class:`ParameterError` for a missing ``y`` column or non-numeric entries.
    """
    try:
        df = pd.read_csv(fname)
    except OSError as e:
        raise StorageError(fname, e) from e
    except (ValueError, pd.errors.ParserError) as e:
        raise ParameterError(f"{fname}: {e}") from e
    if df.shape[1] < 2 or df.columns[-1] != "y":
        raise ParameterError(f"{fname}: last column must be 'y'.")
    try:
        x = df.iloc[:, :-1].to_numpy(dtype=float)
        y = df["y"].to_numpy(dtype=float)
    except ValueError as e:
        raise ParameterError(f"{fname}: non-numeric entries: {e}") from e
    names = [str(c) for c in df.columns[:-1]]
    design: DesignMatrix = PairwiseProducts(x, names) if expand_pairwise else DenseDesign(x, names)
    return RegressionData(x=design, y=y)


def write_regression_csv(x: np.ndarray, y: np.ndarray, fname: str) -> str:
    _ensure_parent(fname)
    df = pd.DataFrame(x, columns=[f"x{j}" for j in range(x.shape[1])])
    df["y"] = y
    try:
        df.to_csv(fname, index=False, float_format="%.17g")
    except OSError as e:
        raise StorageError(fname, e) from e
    return fname


def _ensure_parent(fname: str) -> None:
    dname = os.path.dirname(fname)
    if dname:
        create_dir(dname)


def _check_dims(rows: int, columns: int) -> None:
    if rows < 1 or columns < 1:
        raise ParameterError(f"Dimensions must be positive: rows={rows}, columns={columns}")
    if columns > MAX_COLUMNS or rows * columns > MAX_COLUMNS * 100:
        raise CapacityError("Synthetic data size", rows * columns, MAX_COLUMNS * 100)


def planted_regression(
    seed: int, rows: int = 500, p: int = 8, planted: int = 3, noise: float = 1.0
) -> Tuple[np.ndarray, np.ndarray]:
    """Gaussian features; ``y`` is linear in ``planted`` base features and their products.

    The first ``planted`` features and the products of neighbouring planted
    features carry unit weight, so the pairwise expansion contains signal.
    """
    _check_dims(rows, p)
    if not 0 <= planted <= p:
        raise ParameterError(f"planted must be in [0, {p}]: {planted}")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((rows, p))
    y = x[:, :planted].sum(axis=1)
    for i in range(planted - 1):
        y = y + x[:, i] * x[:, i + 1]
    y = y + noise * rng.standard_normal(rows)
    return x, y


def pairwise_products(
    seed: int, rows: int = 500, p: int = 8, planted: int = 3
) -> Tuple[np.ndarray, np.ndarray]:
    """Gaussian features with binary labels from a logistic model on planted products."""
    _check_dims(rows, p + p * (p + 1) // 2)
    if not 0 <= planted <= p:
        raise ParameterError(f"planted must be in [0, {p}]: {planted}")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((rows, p))
    logits = x[:, :planted].sum(axis=1)
    for i in range(planted - 1):
        logits = logits + 2.0 * x[:, i] * x[:, i + 1]
    prob = 1.0 / (1.0 + np.exp(-logits))
    y = (rng.random(rows) < prob).astype(float)
    return x, y


def coverage_random(
    seed: int, n: int = 12, universe: int = 20, density: float = 0.2
) -> CoverageData:
    """``n`` random subsets of a ``universe`` with uniform [0, 1) item weights."""
    _check_dims(n, universe)
    rng = np.random.default_rng(seed)
    weights = rng.random(universe)
    sets = []
    for _ in range(n):
        mask = rng.random(universe) < density
        if not mask.any():
            mask[rng.integers(universe)] = True
        sets.append([int(i) for i in np.flatnonzero(mask)])
    return CoverageData(universe_weights=[float(w) for w in weights], sets=sets)


def generate(kind: str, seed: int, **dims: Any) -> Union[RegressionData, CoverageData]:
    """In-memory synthetic data of ``kind``; pairwise-products is expanded."""
    if kind == "planted-regression":
        x, y = planted_regression(seed, **dims)
        return RegressionData(x=DenseDesign(x), y=y)
    if kind == "pairwise-products":
        x, y = pairwise_products(seed, **dims)
        return RegressionData(x=PairwiseProducts(x), y=y)
    if kind == "coverage-random":
        return coverage_random(seed, **dims)
    raise ParameterError(f"Unknown kind {kind!r}; expected one of {', '.join(KINDS)}.")


def gen_synthetic(kind: str, seed: int, out: str, **dims: Any) -> str:
    """Write synthetic data of ``kind`` to ``out``.

    Regression kinds write the base features; pairwise-products files are
    meant to be read with ``expand_pairwise=True``.

    Returns:
        Written filename.
    """
    if kind == "planted-regression":
        x, y = planted_regression(seed, **dims)
    elif kind == "pairwise-products":
        x, y = pairwise_products(seed, **dims)
    elif kind == "coverage-random":
        fname = write_coverage_json(coverage_random(seed, **dims), out)
        logger.info("Wrote %s data (seed=%d) to %s", kind, seed, fname)
        return fname
    else:
        raise ParameterError(f"Unknown kind {kind!r}; expected one of {', '.join(KINDS)}.")
    fname = write_regression_csv(x, y, out)
    logger.info("Wrote %s data (seed=%d) to %s", kind, seed, fname)
    return fname
