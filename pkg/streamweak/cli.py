"""Command line interface.

Exit codes: 0 success, 2 usage or parameter error, 3 oracle or protocol
error, 4 I/O error. Logging is configured from ``STREAMWEAK_LOG`` (error,
info or debug); log lines go to stderr, results to stdout.
"""

import functools
import logging
import shlex
from typing import Any, Callable, List, Mapping, Optional, Sequence, TypeVar

import click
import pandas as pd

from . import VERSION
from .config import get_streamweak, load
from .constants import FLOAT_FORMAT
from .datasets import KINDS, gen_synthetic
from .errors import ParameterError, StreamweakError, handle_error
from .gamma import GammaEstimate, gamma_exact, gamma_sampled
from .harness import (
    ALGORITHMS,
    OBJECTIVES,
    ORDERS,
    ExperimentConfig,
    ObjectiveSpec,
    adversarial_order_fk,
    build_objective,
    load_experiment_config,
    random_order,
    rows_frame,
    run_algorithm,
    run_experiment,
    summarize,
)
from .oracle import Valuation
from .streak import a_of_gamma, bound
from .utils import fan_out, init_logging

logger = logging.getLogger(__name__)

F = TypeVar("F", bound=Callable[..., Any])


def handled(func: F) -> F:
    """Turn package errors into their exit codes."""

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except StreamweakError as e:
            click.get_current_context().exit(handle_error(e))
        return None

    return wrapper  # type: ignore


def parse_seeds(value: str) -> List[int]:
    """Seeds from ``"3"``, ``"1,4,7"`` or ranges such as ``"0-19"``.

    Examples:
        >>> parse_seeds("0-2,7")
        [0, 1, 2, 7]
    """
    seeds: List[int] = []
    try:
        for part in value.split(","):
            part = part.strip()
            if "-" in part:
                first, last = part.split("-", 1)
                seeds.extend(range(int(first), int(last) + 1))
            elif part:
                seeds.append(int(part))
    except ValueError as e:
        raise ParameterError(f"Invalid seeds: {value!r}") from e
    if not seeds:
        raise ParameterError(f"Invalid seeds: {value!r}")
    return seeds


def objective_options(func: F) -> F:
    """Flags describing the objective, shared by ``run`` and ``gamma``."""
    options = [
        click.option(
            "--objective",
            type=click.Choice(OBJECTIVES),
            help="Objective to maximize.",
        ),
        click.option(
            "--data",
            type=click.Path(dir_okay=False),
            help="Objective data: CSV (r2, logistic), JSON (coverage) or a JSON weight list (modular).",
        ),
        click.option("--n", "n", type=int, default=12, show_default=True, help="Generated ground set size (modular, coverage)."),
        click.option("--hk", type=int, default=3, show_default=True, help="Pairs of the hard instance."),
        click.option("--d", "d", type=int, default=0, show_default=True, help="Dummy elements of the hard instance."),
        click.option("--data-seed", type=int, default=0, show_default=True, help="Seed of generated objective data."),
        click.option(
            "--pairwise/--no-pairwise",
            default=True,
            show_default=True,
            help="Expose pairwise products of regression features.",
        ),
        click.option("--holdout", type=float, default=0.0, show_default=True, help="Held out share of rows (logistic)."),
        click.option("--extern-cmd", help="Command line of an external oracle (extern)."),
        click.option("--extern-timeout-ms", type=int, help="Timeout of one external request."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


# pylint: disable=too-many-arguments
def make_spec(
    objective: Optional[str],
    data: Optional[str],
    n: int,
    hk: int,
    d: int,
    data_seed: int,
    pairwise: bool,
    holdout: float,
    extern_cmd: Optional[str],
    extern_timeout_ms: Optional[int],
) -> ObjectiveSpec:
    if objective is None:
        raise ParameterError("Missing option --objective.")
    return ObjectiveSpec(
        kind=objective,
        n=n,
        hk=hk,
        d=d,
        data=data,
        pairwise=pairwise,
        seed=data_seed,
        holdout=holdout,
        extern_cmd=shlex.split(extern_cmd) if extern_cmd else (),
        extern_timeout_ms=extern_timeout_ms or get_streamweak("extern_timeout_ms"),
    )


@click.group()
@click.version_option(VERSION, prog_name="streamweak")
@handled
def main() -> None:
    """One-pass streaming maximization of weakly submodular functions."""
    config = load()
    init_logging(config["STREAMWEAK_LOG"])


@main.command()
@objective_options
@click.option("--config", "config_file", type=click.Path(dir_okay=False), help="JSON experiment configuration; other run flags are ignored.")
@click.option("--algo", "algorithms", type=click.Choice(ALGORITHMS), multiple=True, help="Algorithm; repeat for several.")
@click.option("--k", "k", type=int, help="Cardinality budget.")
@click.option("--epsilon", "epsilons", type=float, multiple=True, help="STREAK lattice density; repeat for a sweep.")
@click.option("--tau", type=float, help="Threshold (tg only).")
@click.option("--seeds", default="0", show_default=True, help="Stream seeds, e.g. 3, 1,4,7 or 0-19.")
@click.option("--repetitions", type=int, default=1, show_default=True, help="Runs per seed.")
@click.option("--order", type=click.Choice(ORDERS), default="random", show_default=True, help="Stream order.")
@click.option("--order-file", type=click.Path(dir_okay=False), help="One element id per line (--order file).")
@click.option("--jobs", type=int, help="Parallel runs or oracle calls [STREAMWEAK_JOBS].")
@click.option("--cache", type=int, help="LRU capacity of the oracle cache [STREAMWEAK_CACHE_CAPACITY].")
@click.option("--paranoid", is_flag=True, help="Re-evaluate f(S) after every accept.")
@click.option("--check-invariants", is_flag=True, help="Count invariant violations.")
@click.option("--accuracy", is_flag=True, help="Append held-out accuracy (logistic).")
@click.option("--out", type=click.Path(dir_okay=False), help="CSV output; stdout if missing.")
@handled
def run(**flags: Any) -> None:
    """Run streaming algorithms and baselines; one CSV row per run."""
    overrides = {"jobs": flags["jobs"], "cache_capacity": flags["cache"], "paranoid": flags["paranoid"] or None}
    load(overrides)
    if flags["config_file"]:
        config = load_experiment_config(flags["config_file"])
        if flags["out"]:
            config.out = flags["out"]
    else:
        if flags["k"] is None:
            raise ParameterError("Missing option --k.")
        config = ExperimentConfig(
            objective=make_spec(*_spec_args(flags)),
            algorithms=list(flags["algorithms"]),
            k=flags["k"],
            epsilons=list(flags["epsilons"]),
            tau=flags["tau"],
            seeds=parse_seeds(flags["seeds"]),
            repetitions=flags["repetitions"],
            out=flags["out"],
            order=flags["order"],
            order_file=flags["order_file"],
            jobs=get_streamweak("jobs"),
            cache=get_streamweak("cache_capacity"),
            paranoid=get_streamweak("paranoid"),
            check_invariants=flags["check_invariants"],
            accuracy=flags["accuracy"],
        )
    rows = run_experiment(config.validate())
    if config.out:
        click.echo(summarize(rows).to_string(index=False))
    else:
        click.echo(rows_frame(rows, accuracy=config.accuracy).to_csv(index=False, float_format=FLOAT_FORMAT), nl=False)


def _spec_args(flags: Mapping[str, Any]) -> Sequence[Any]:
    return (
        flags["objective"],
        flags["data"],
        flags["n"],
        flags["hk"],
        flags["d"],
        flags["data_seed"],
        flags["pairwise"],
        flags["holdout"],
        flags["extern_cmd"],
        flags["extern_timeout_ms"],
    )


def _labels(oracle: Valuation, ids: Sequence[int]) -> str:
    return "[" + ", ".join(oracle.ground.label(u) for u in ids) + "]"


def print_estimate(oracle: Valuation, estimate: GammaEstimate) -> None:
    click.echo(f"value: {estimate.value:.9g}")
    click.echo(f"r: {estimate.r}")
    click.echo(f"exact: {str(estimate.exact).lower()}")
    click.echo(f"pairs: {estimate.pairs}")
    if estimate.witness is not None:
        l, s = estimate.witness
        click.echo(f"witness_l: {_labels(oracle, l.members)}")
        click.echo(f"witness_s: {_labels(oracle, s.members)}")
    click.echo(f"flagged: {str(estimate.flagged).lower()}")


@main.command()
@objective_options
@click.option("--r", "r", type=int, required=True, help="Size limit of L and S\\L.")
@click.option("--sampled", is_flag=True, help="Sample pairs instead of enumerating them.")
@click.option("--trials", type=int, default=1000, show_default=True, help="Sampled pairs.")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed of the pair sampler.")
@click.option("--jobs", type=int, help="Threads for the exact enumeration.")
@handled
def gamma(**flags: Any) -> None:
    """Weak submodularity ratio gamma_r of an objective."""
    load({"jobs": flags["jobs"]})
    objective = build_objective(make_spec(*_spec_args(flags)))
    try:
        if flags["sampled"]:
            estimate = gamma_sampled(
                objective, objective.ground, flags["r"], flags["trials"], flags["seed"]
            )
        else:
            estimate = gamma_exact(objective, objective.ground, flags["r"], jobs=get_streamweak("jobs"))
        print_estimate(objective, estimate)
    finally:
        objective.close()


@main.command(name="bound")
@click.option("--gamma", "gamma_", type=float, required=True, help="Weak submodularity ratio in (0, 1].")
@click.option("--epsilon", type=float, default=0.0, show_default=True, help="Lattice density in [0, 1).")
@handled
def bound_cmd(gamma_: float, epsilon: float) -> None:
    """Approximation ratio of STREAK and a(gamma)."""
    ratio = bound(gamma_, epsilon)
    click.echo(f"ratio: {ratio:.6f}")
    click.echo(f"a: {a_of_gamma(gamma_):.6f}")


@main.command(name="demo-hard")
@click.option("--hk", type=int, default=3, show_default=True, help="Pairs of the hard instance.")
@click.option("--d", "d", type=int, default=100, show_default=True, help="Dummy elements.")
@click.option("--seeds", type=int, default=100, show_default=True, help="Random orders (seeds 0..N-1).")
@click.option("--epsilon", type=float, default=0.2, show_default=True, help="STREAK lattice density.")
@click.option("--jobs", type=int, help="Parallel runs.")
@handled
def demo_hard(hk: int, d: int, seeds: int, epsilon: float, jobs: Optional[int]) -> None:
    """STREAK on the hard instance: worst case order against random orders."""
    config = load({"jobs": jobs})
    if seeds < 1:
        raise ParameterError(f"seeds must be >= 1: {seeds}")
    spec = ObjectiveSpec(kind="hard", hk=hk, d=d)
    params = spec.hard_params()
    objective = build_objective(spec)
    budget = 2 * hk

    def streak_value(order: Sequence[int]) -> float:
        return run_algorithm("streak", objective, budget, order, epsilon=epsilon).value

    adversarial = streak_value(adversarial_order_fk(params, 0).ids)
    random_values = fan_out(
        lambda seed: streak_value(random_order(params.n, seed).ids),
        range(seeds),
        config["STREAMWEAK_JOBS"],
    )
    table = pd.DataFrame(
        [
            {"order": "adversarial", "runs": 1, "mean": adversarial, "min": adversarial, "max": adversarial},
            {
                "order": "random",
                "runs": seeds,
                "mean": sum(random_values) / seeds,
                "min": min(random_values),
                "max": max(random_values),
            },
        ]
    )
    table["opt"] = float(2 * hk)
    click.echo(f"hard instance k={hk}, d={d}, STREAK budget {budget}, epsilon {epsilon:g}")
    click.echo(table.to_string(index=False, float_format=lambda v: f"{v:.6g}"))


@main.command()
@click.option("--kind", type=click.Choice(KINDS), required=True, help="Generator.")
@click.option("--seed", type=int, default=0, show_default=True, help="Generator seed.")
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Output file.")
@click.option("--rows", type=int, help="Observations (regression kinds).")
@click.option("--p", "p", type=int, help="Base features (regression kinds).")
@click.option("--planted", type=int, help="Planted base features (regression kinds).")
@click.option("--n", "n", type=int, help="Sets (coverage-random).")
@click.option("--universe", type=int, help="Universe size (coverage-random).")
@handled
def gen(kind: str, seed: int, out: str, **dims: Optional[int]) -> None:
    """Write synthetic objective data."""
    allowed = ("n", "universe") if kind == "coverage-random" else ("rows", "p", "planted")
    given = {name: value for name, value in dims.items() if value is not None}
    unexpected = sorted(set(given) - set(allowed))
    if unexpected:
        raise ParameterError(f"--{', --'.join(unexpected)} not applicable to {kind}.")
    click.echo(gen_synthetic(kind, seed, out, **given))

