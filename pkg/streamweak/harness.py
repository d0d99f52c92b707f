"""Stream orders and experiment runs.

An experiment builds its objective once, then runs every configured
algorithm for every seed and repetition on a fresh counting oracle and
records one row per run. Rows are written as CSV with the columns of
:data:`~streamweak.constants.CSV_COLUMNS`.
"""

import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterator, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd
from marshmallow import (
    Schema,
    ValidationError,
    fields,
    post_load,
    validates_schema,
)
from marshmallow.validate import OneOf, Range
from tqdm import tqdm

from .baselines import brute_force_run, full_greedy, local_search, random_subset
from .config import get_streamweak
from .constants import CSV_COLUMNS, EXTERN_TIMEOUT_MS, FLOAT_FORMAT
from .datasets import (
    DenseDesign,
    PairwiseProducts,
    RegressionData,
    coverage_random,
    pairwise_products,
    planted_regression,
    read_coverage_json,
    read_regression_csv,
)
from .errors import ParameterError, StorageError, StreamError
from .extern import ExternOracleConfig, extern_connect
from .file_utils import create_dir, md5, read_ids
from .objectives import (
    HardInstanceParams,
    coverage_from_data,
    hard_instance,
    logistic_loglik,
    modular,
    r2_regression,
)
from .oracle import ElementId, Valuation, make_caching, make_counting
from .prng import Xorshift64Star
from .result import RunResult
from .streak import check_epsilon, streak_run
from .threshold import tg_run

logger = logging.getLogger(__name__)

ALGORITHMS = ("streak", "tg", "random", "local", "greedy", "opt")
OBJECTIVES = ("modular", "coverage", "hard", "r2", "logistic", "extern")
ORDERS = ("random", "adversarial", "file")

#: Seed offset between repetitions of the same seed.
REPETITION_STRIDE = 1_000_003


@dataclass
class StreamOrder:
    """Arrival order of all ground set elements and where it came from."""

    ids: List[ElementId]
    provenance: str

    def __post_init__(self) -> None:
        if sorted(self.ids) != list(range(len(self.ids))):
            raise StreamError(f"Order from {self.provenance} is not a permutation.")

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self) -> Iterator[ElementId]:
        return iter(self.ids)


def random_order(n: int, seed: int) -> StreamOrder:
    """Uniform random permutation of ``range(n)`` (xorshift64*, Fisher-Yates).

    Examples:
        >>> random_order(1, 5).ids
        [0]
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1: {n}")
    ids: List[ElementId] = list(range(n))
    Xorshift64Star(seed).shuffle(ids)
    return StreamOrder(ids, f"random({seed})")


def adversarial_order_fk(params: HardInstanceParams, seed: int) -> StreamOrder:
    """All u-elements and dummies, shuffled together, then all v-elements."""
    prefix = list(params.u_ids) + list(params.dummy_ids)
    rng = Xorshift64Star(seed)
    rng.shuffle(prefix)
    suffix = list(params.v_ids)
    rng.shuffle(suffix)
    return StreamOrder(prefix + suffix, "adversarial_fk")


def file_order(path: str, n: int) -> StreamOrder:
    """Order read from ``path``, one id per line.

    Raises:
        :class:`StorageError` if the file cannot be read.
        :class:`StreamError` unless the ids are a permutation of ``range(n)``.
    """
    ids = read_ids(path)
    if len(ids) != n:
        raise StreamError(f"{path}: expected {n} ids, got {len(ids)}.")
    return StreamOrder(ids, f"file({path})")


@dataclass
class ObjectiveSpec:
    """What to optimize; data is generated from ``seed`` unless ``data`` is given."""

    kind: str
    n: int = 12
    hk: int = 3
    d: int = 0
    data: Optional[str] = None
    pairwise: bool = True
    seed: int = 0
    rows: int = 500
    p: int = 8
    planted: int = 3
    holdout: float = 0.0
    extern_cmd: Sequence[str] = ()
    extern_timeout_ms: int = EXTERN_TIMEOUT_MS

    def hard_params(self) -> HardInstanceParams:
        return HardInstanceParams(k=self.hk, d=self.d)


def _log_data(path: str) -> None:
    logger.info("Objective data %s (md5 %s)", path, md5(path))


def _regression_data(spec: ObjectiveSpec, labels: str) -> RegressionData:
    if spec.data:
        _log_data(spec.data)
        return read_regression_csv(spec.data, expand_pairwise=spec.pairwise)
    gen = planted_regression if labels == "real" else pairwise_products
    x, y = gen(spec.seed, rows=spec.rows, p=spec.p, planted=spec.planted)
    return RegressionData(x=PairwiseProducts(x) if spec.pairwise else DenseDesign(x), y=y)


def build_objective(spec: ObjectiveSpec) -> Valuation:
    """Objective for ``spec``.

    Raises:
        :class:`ParameterError` for unknown kinds or invalid sizes.
    """
    if spec.kind == "modular":
        if spec.data:
            _log_data(spec.data)
            try:
                with open(spec.data, "r", encoding="utf8") as file:
                    weights = json.load(file)
            except OSError as e:
                raise StorageError(spec.data, e) from e
            except ValueError as e:
                raise ParameterError(f"{spec.data}: invalid JSON: {e}") from e
            return modular(weights)
        if spec.n < 1:
            raise ParameterError(f"n must be >= 1: {spec.n}")
        return modular(np.random.default_rng(spec.seed).random(spec.n))
    if spec.kind == "coverage":
        if spec.data:
            _log_data(spec.data)
            data = read_coverage_json(spec.data)
        else:
            data = coverage_random(spec.seed, n=spec.n)
        return coverage_from_data(data)
    if spec.kind == "hard":
        return hard_instance(spec.hard_params())
    if spec.kind == "r2":
        return r2_regression(_regression_data(spec, "real"))
    if spec.kind == "logistic":
        return logistic_loglik(
            _regression_data(spec, "binary"), holdout=spec.holdout, seed=spec.seed
        )
    if spec.kind == "extern":
        if not spec.extern_cmd:
            raise ParameterError("The extern objective needs a command.")
        return extern_connect(
            ExternOracleConfig(command=list(spec.extern_cmd), timeout_ms=spec.extern_timeout_ms)
        )
    raise ParameterError(f"Unknown objective {spec.kind!r}; expected one of {', '.join(OBJECTIVES)}.")


@dataclass
class ExperimentConfig:
    """Runs of one experiment.

    Every algorithm runs once per seed and repetition. STREAK runs once per
    entry of ``epsilons``; threshold greedy needs ``tau``.
    """

    # pylint: disable=too-many-instance-attributes
    objective: ObjectiveSpec
    algorithms: List[str]
    k: int
    epsilons: List[float] = field(default_factory=list)
    tau: Optional[float] = None
    seeds: List[int] = field(default_factory=lambda: [0])
    repetitions: int = 1
    out: Optional[str] = None
    order: str = "random"
    order_file: Optional[str] = None
    jobs: int = 1
    cache: int = 0
    paranoid: bool = False
    check_invariants: bool = False
    accuracy: bool = False

    def validate(self) -> "ExperimentConfig":
        """Check the configuration before any oracle is built.

        Raises:
            :class:`ParameterError` for any inconsistency.
        """
        if self.objective.kind not in OBJECTIVES:
            raise ParameterError(f"Unknown objective {self.objective.kind!r}.")
        if not self.algorithms:
            raise ParameterError("At least one algorithm is required.")
        for algo in self.algorithms:
            if algo not in ALGORITHMS:
                raise ParameterError(
                    f"Unknown algorithm {algo!r}; expected one of {', '.join(ALGORITHMS)}."
                )
        if self.k < 1:
            raise ParameterError(f"k must be >= 1: {self.k}")
        if "streak" in self.algorithms:
            if not self.epsilons:
                raise ParameterError("STREAK needs at least one epsilon.")
            for eps in self.epsilons:
                check_epsilon(eps)
        if "tg" in self.algorithms and (self.tau is None or not self.tau >= 0):
            raise ParameterError(f"Threshold greedy needs tau >= 0: {self.tau}")
        if not self.seeds:
            raise ParameterError("At least one seed is required.")
        if self.repetitions < 1:
            raise ParameterError(f"repetitions must be >= 1: {self.repetitions}")
        if self.order not in ORDERS:
            raise ParameterError(f"Unknown order {self.order!r}; expected one of {', '.join(ORDERS)}.")
        if self.order == "adversarial" and self.objective.kind != "hard":
            raise ParameterError("The adversarial order exists for the hard objective only.")
        if self.order == "file" and not self.order_file:
            raise ParameterError("File order needs an order file.")
        if self.jobs < 1:
            raise ParameterError(f"jobs must be >= 1: {self.jobs}")
        if self.cache < 0:
            raise ParameterError(f"cache must be >= 0: {self.cache}")
        return self


class ObjectiveSpecSchema(Schema):
    kind = fields.String(required=True, validate=OneOf(OBJECTIVES))
    n = fields.Integer(load_default=12, validate=Range(min=1))
    hk = fields.Integer(load_default=3, validate=Range(min=1))
    d = fields.Integer(load_default=0, validate=Range(min=0))
    data = fields.String(load_default=None, allow_none=True)
    pairwise = fields.Boolean(load_default=True)
    seed = fields.Integer(load_default=0)
    rows = fields.Integer(load_default=500, validate=Range(min=1))
    p = fields.Integer(load_default=8, validate=Range(min=1))
    planted = fields.Integer(load_default=3, validate=Range(min=0))
    holdout = fields.Float(load_default=0.0, validate=Range(min=0.0, max=1.0, max_inclusive=False))
    extern_cmd = fields.List(fields.String(), load_default=list)
    extern_timeout_ms = fields.Integer(load_default=EXTERN_TIMEOUT_MS, validate=Range(min=1))

    @post_load
    def make_spec(self, data: Mapping[str, Any], **_kwargs: Any) -> ObjectiveSpec:
        return ObjectiveSpec(**data)


class ExperimentConfigSchema(Schema):
    """JSON form of :class:`ExperimentConfig`."""

    objective = fields.Nested(ObjectiveSpecSchema, required=True)
    algorithms = fields.List(fields.String(validate=OneOf(ALGORITHMS)), required=True)
    k = fields.Integer(required=True, validate=Range(min=1))
    epsilons = fields.List(fields.Float(), load_default=list)
    tau = fields.Float(load_default=None, allow_none=True)
    seeds = fields.List(fields.Integer(), load_default=lambda: [0])
    repetitions = fields.Integer(load_default=1, validate=Range(min=1))
    out = fields.String(load_default=None, allow_none=True)
    order = fields.String(load_default="random", validate=OneOf(ORDERS))
    order_file = fields.String(load_default=None, allow_none=True)
    jobs = fields.Integer(load_default=1, validate=Range(min=1))
    cache = fields.Integer(load_default=0, validate=Range(min=0))
    paranoid = fields.Boolean(load_default=False)
    check_invariants = fields.Boolean(load_default=False)
    accuracy = fields.Boolean(load_default=False)

    @validates_schema
    def check_epsilons(self, data: Mapping[str, Any], **_kwargs: Any) -> None:
        if "streak" in data.get("algorithms", ()) and not data.get("epsilons"):
            raise ValidationError("STREAK needs at least one epsilon.", "epsilons")

    @post_load
    def make_config(self, data: Mapping[str, Any], **_kwargs: Any) -> ExperimentConfig:
        return ExperimentConfig(**data)


def load_experiment_config(fname: str) -> ExperimentConfig:
    """Read and validate an experiment configuration file (JSON).

    Raises:
        :class:`StorageError` if the file cannot be read.
        :class:`ParameterError` for invalid content.
    """
    try:
        with open(fname, "r", encoding="utf8") as file:
            raw = json.load(file)
    except OSError as e:
        raise StorageError(fname, e) from e
    except ValueError as e:
        raise ParameterError(f"{fname}: invalid JSON: {e}") from e
    try:
        config: ExperimentConfig = ExperimentConfigSchema().load(raw)
    except ValidationError as e:
        raise ParameterError(f"{fname}: {e.messages}") from e
    return config.validate()


@dataclass(frozen=True)
class _Task:
    algorithm: str
    epsilon: Optional[float]
    seed: int


def order_seed(seed: int, repetition: int) -> int:
    return seed + repetition * REPETITION_STRIDE


def make_order(config: ExperimentConfig, oracle: Valuation, seed: int) -> StreamOrder:
    """Stream order of one run."""
    n = oracle.ground.n
    if config.order == "adversarial":
        return adversarial_order_fk(config.objective.hard_params(), seed)
    if config.order == "file":
        assert config.order_file is not None
        return file_order(config.order_file, n)
    return random_order(n, seed)


def _wrap(objective: Valuation, cache: int) -> Valuation:
    oracle: Valuation = make_counting(objective)
    if cache > 0:
        oracle = make_caching(oracle, cache)
    return oracle


# pylint: disable=too-many-arguments
def run_algorithm(
    algorithm: str,
    objective: Valuation,
    k: int,
    order: Sequence[ElementId],
    epsilon: Optional[float] = None,
    tau: Optional[float] = None,
    jobs: int = 1,
    cache: int = 0,
    paranoid: bool = False,
    check_invariants: bool = False,
) -> RunResult:
    """Run ``algorithm`` once on a fresh counting oracle over ``objective``."""
    oracle = _wrap(objective, cache)
    if algorithm == "streak":
        if epsilon is None:
            raise ParameterError("STREAK needs epsilon.")
        return streak_run(
            oracle,
            k,
            epsilon,
            order,
            jobs=jobs,
            paranoid=paranoid,
            check_invariants=check_invariants,
        )
    if algorithm == "tg":
        if tau is None:
            raise ParameterError("Threshold greedy needs tau.")
        return tg_run(oracle, k, tau, order, paranoid=paranoid, check_invariants=check_invariants)
    if algorithm == "random":
        return random_subset(oracle, k, order)
    if algorithm == "local":
        return local_search(oracle, k, order, jobs=jobs)
    if algorithm == "greedy":
        return full_greedy(oracle, oracle.ground, k, jobs=jobs)
    if algorithm == "opt":
        return brute_force_run(oracle, oracle.ground, k)
    raise ParameterError(f"Unknown algorithm {algorithm!r}.")


def _row(
    config: ExperimentConfig, objective: Valuation, task: _Task, result: RunResult
) -> Dict[str, Any]:
    row: Dict[str, Any] = {
        "algorithm": task.algorithm,
        "objective": objective.name,
        "n": objective.ground.n,
        "k": config.k,
        "epsilon": task.epsilon if task.epsilon is not None else math.nan,
        "seed": task.seed,
        "value": result.value,
        "oracle_calls": result.oracle_calls,
        "stored_peak": result.stored_peak,
        "instances_peak": result.instances_peak,
        "wall_ms": result.wall_ms,
        "warning": result.warning,
        "violations": result.violations,
        "members": result.members,
    }
    if result.m is not None:
        row["m"] = result.m
    if config.accuracy:
        row["accuracy"] = result.accuracy if result.accuracy is not None else math.nan
    return row


def _execute(
    func: Callable[[_Task], Dict[str, Any]], tasks: Sequence[_Task], jobs: int, progress: bool
) -> List[Dict[str, Any]]:
    with tqdm(total=len(tasks), disable=not progress, unit="run") as bar:
        if jobs <= 1 or len(tasks) <= 1:
            rows = []
            for task in tasks:
                rows.append(func(task))
                bar.update()
            return rows
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            futures = [executor.submit(func, task) for task in tasks]
            rows = []
            for future in futures:
                rows.append(future.result())
                bar.update()
            return rows


def run_experiment(config: ExperimentConfig) -> List[Dict[str, Any]]:
    """Run all configured algorithms, seeds and repetitions.

    Runs are parallel over repetitions when ``jobs > 1`` and the objective
    is concurrent safe; a single run uses ``jobs`` for its own fan out.
    Rows are returned in task order and written to ``config.out`` if set.

    Args:
        config: Experiment configuration.

    Returns:
        One row per run.

    Raises:
        :class:`ParameterError` for an invalid configuration.
        :class:`StorageError` if the rows cannot be written.
    """
    config.validate()
    objective = build_objective(config.objective)
    try:
        tasks = [
            _Task(algo, eps, order_seed(seed, rep))
            for seed in config.seeds
            for rep in range(config.repetitions)
            for algo in config.algorithms
            for eps in (config.epsilons if algo == "streak" else [None])
        ]
        parallel = config.jobs > 1 and len(tasks) > 1 and objective.concurrent_safe
        inner_jobs = 1 if parallel else config.jobs

        def run_task(task: _Task) -> Dict[str, Any]:
            order = make_order(config, objective, task.seed)
            nonconverged = getattr(objective, "nonconverged", 0)
            result = run_algorithm(
                task.algorithm,
                objective,
                config.k,
                order.ids,
                epsilon=task.epsilon,
                tau=config.tau,
                jobs=inner_jobs,
                cache=config.cache,
                paranoid=config.paranoid,
                check_invariants=config.check_invariants,
            )
            if getattr(objective, "nonconverged", 0) > nonconverged:
                result.warning = True
            if config.accuracy and hasattr(objective, "accuracy"):
                result.accuracy = objective.accuracy(result.members)  # type: ignore
            logger.debug("%s seed=%d eps=%s: %g", task.algorithm, task.seed, task.epsilon, result.value)
            return _row(config, objective, task, result)

        rows = _execute(
            run_task,
            tasks,
            config.jobs if parallel else 1,
            bool(get_streamweak("progress", False)),
        )
    finally:
        objective.close()

    logger.info("Finished %d runs of %s", len(rows), ", ".join(config.algorithms))
    if config.out:
        write_rows(config.out, rows, accuracy=config.accuracy)
    return rows


def rows_frame(rows: Sequence[Mapping[str, Any]], accuracy: bool = False) -> pd.DataFrame:
    """Rows as data frame with the CSV columns in order."""
    columns = list(CSV_COLUMNS) + (["accuracy"] if accuracy else [])
    return pd.DataFrame(list(rows), columns=columns)


def write_rows(
    path: str, rows: Sequence[Mapping[str, Any]], accuracy: bool = False
) -> str:
    """Write rows as CSV with a header row and 9 significant digits.

    Returns:
        Written filename.
    """
    df = rows_frame(rows, accuracy=accuracy)
    dname = os.path.dirname(path)
    if dname:
        create_dir(dname)
    try:
        df.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    except OSError as e:
        raise StorageError(path, e) from e
    logger.info("Wrote %d rows to %s", len(df), path)
    return path


def summarize(rows: Sequence[Mapping[str, Any]]) -> pd.DataFrame:
    """Mean and standard deviation of value, oracle calls and wall time per
    algorithm and epsilon.

    Returns:
        Frame with columns ``algorithm, epsilon, runs`` and
        ``<metric>_mean`` / ``<metric>_std`` for every metric.
    """
    df = rows_frame(rows)
    df["epsilon"] = df["epsilon"].fillna(-1.0)
    grouped = df.groupby(["algorithm", "epsilon"], sort=False)
    metrics = ["value", "oracle_calls", "wall_ms"]
    summary = grouped[metrics].agg(["mean", "std"])
    summary.columns = [f"{metric}_{stat}" for metric, stat in summary.columns]
    summary.insert(0, "runs", grouped.size())
    summary = summary.reset_index()
    summary["epsilon"] = summary["epsilon"].where(summary["epsilon"] >= 0, math.nan)
    return summary
