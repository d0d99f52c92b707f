# pylint: disable=redefined-outer-name

import os
from typing import Callable, List

import numpy as np
import pytest

from streamweak import config
from streamweak.config import ConfigMeta
from streamweak.datasets import DenseDesign, RegressionData, coverage_random
from streamweak.objectives import (
    Coverage,
    HardInstance,
    HardInstanceParams,
    Modular,
    coverage,
    coverage_from_data,
    hard_instance,
    modular,
)
from streamweak.oracle import CountingOracle, Valuation, make_counting


@pytest.fixture
def config_meta() -> ConfigMeta:
    return ConfigMeta()


@pytest.fixture
def default_config_meta(config_meta: ConfigMeta) -> ConfigMeta:
    config_meta.register_variable(name="var1")
    config_meta.register_variable(name="var2", required=True)
    config_meta.register_variable(name="var3", default="value3")
    config_meta.register_variable(name="var4", required=True, default=4, check=lambda v: v > 0)
    return config_meta


@pytest.fixture
def clean_config() -> None:
    config.load(environ={})


@pytest.fixture
def weights_312() -> Modular:
    return modular([3.0, 1.0, 2.0])


@pytest.fixture
def abc_coverage() -> Coverage:
    # universe {a, b, c}; S0 = {a, b}, S1 = {b, c}
    return coverage([[0, 1], [1, 2]], [1.0, 1.0, 1.0])


@pytest.fixture
def greedy_coverage() -> Coverage:
    # A = {1, 2, 3}, B = {3, 4}, C = {5}
    return coverage([[1, 2, 3], [3, 4], [5]], [0.0, 1.0, 1.0, 1.0, 1.0, 1.0])


@pytest.fixture
def hard_factory() -> Callable[[int, int], HardInstance]:
    def factory(k: int, d: int = 0) -> HardInstance:
        return hard_instance(HardInstanceParams(k=k, d=d))

    return factory


@pytest.fixture
def counting() -> Callable[[Valuation], CountingOracle]:
    return make_counting


@pytest.fixture
def coverage_suite() -> Callable[[int, int], List[Coverage]]:
    """Random coverage instances with 8 to 10 sets."""

    def factory(count: int, seed: int = 0) -> List[Coverage]:
        rng = np.random.default_rng(seed)
        return [
            coverage_from_data(
                coverage_random(int(rng.integers(1 << 30)), n=int(rng.integers(8, 11)), universe=15, density=0.25)
            )
            for _ in range(count)
        ]

    return factory


@pytest.fixture
def orthogonal_data() -> RegressionData:
    """Six centered orthogonal columns and a response mixing them with noise."""
    rng = np.random.default_rng(3)
    raw = rng.standard_normal((200, 6))
    raw = raw - raw.mean(axis=0)
    q, _ = np.linalg.qr(raw)
    y = q @ np.array([3.0, -2.0, 1.0, 0.5, 0.0, 0.0]) + 0.1 * rng.standard_normal(200)
    return RegressionData(x=DenseDesign(q), y=y)


@pytest.fixture
def static_dir() -> str:
    return os.path.join(os.path.dirname(os.path.abspath(__file__)), "unit", "static")
