"""
Test configuration and fixtures
"""
import os
from typing import Iterable, List

import numpy as np
import pytest
import structlog

# Quiet, single-worker defaults before the settings singleton is built
os.environ.setdefault("ASEP_LAB_WORKERS", "1")
os.environ.setdefault("LOG_LEVEL", "WARNING")

from asep_lab.config import reset_settings
from asep_lab.models.experiment import ExperimentKind, ExperimentSpec
from asep_lab.models.lattice import Configuration, Mode, ModelParams, Window
from asep_lab.services.dynamics import SimState


class ScriptedStream:
    """Stand-in for RngStream that hands out a fixed list of uniforms"""

    def __init__(self, values: Iterable[float]):
        self.values: List[float] = list(values)
        self.counter = 0

    def next_uniform(self) -> float:
        value = self.values[self.counter]
        self.counter += 1
        return value


def mover_uniform(slot: int, n: int) -> float:
    """u2 that selects particles[slot] among n particles"""
    return (slot + 0.5) / n


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch, tmp_path):
    """Every test sees settings rebuilt from its own environment"""
    monkeypatch.setenv("ASEP_LAB_OUTPUT_DIR", str(tmp_path / "results"))
    reset_settings()
    yield
    reset_settings()


@pytest.fixture(autouse=True)
def isolated_logging():
    """CLI runs bind structlog to this test's captured stderr; drop it before the stream closes"""
    yield
    structlog.reset_defaults()


@pytest.fixture
def scripted():
    return ScriptedStream


@pytest.fixture
def make_state():
    """Build a SimState from colors laid out from site `lo`"""

    def build(values, mode=Mode.COLORED, lo=0, p=1.0, L=0):
        values = list(values)
        window = Window(lo, lo + len(values) - 1)
        config = Configuration.from_occupancy(window, values, mode)
        return SimState.start(config, ModelParams(p=p, L=L))

    return build


@pytest.fixture
def speed_spec():
    """Small two-species speed experiment, seconds to run"""
    return ExperimentSpec(kind=ExperimentKind.SPEED, p=0.7, L=1, t=3.0, n_trials=24, master_seed=7,
                          s_grid=(-0.5, 0.5, 11), ks_threshold=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
