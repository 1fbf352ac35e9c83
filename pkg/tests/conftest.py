from __future__ import annotations

import logging
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from redraw.model import ReconstructionParams, SimConfig
from redraw.reconstruct import reconstruct_stages
from redraw.simulator import run_batch
from redraw.topologies import FIGURE_SETTINGS, figure

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@lru_cache(maxsize=None)
def figure_batch(name: str, seed: int = 0, k: int = 50):
    """Simulated batch for a named topology with its reference settings (cached per session)."""
    s = FIGURE_SETTINGS[name]
    return run_batch(figure(name), SimConfig(coupling=s.coupling, seed=seed), k, seed)


@lru_cache(maxsize=None)
def figure_stages(name: str, seed: int = 0, k: int = 50):
    s = FIGURE_SETTINGS[name]
    return reconstruct_stages(figure_batch(name, seed, k), ReconstructionParams(s.nu, s.mu), unlocked="warn")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(autouse=True)
def _quiet_logs(caplog):
    caplog.set_level(logging.ERROR, logger="redraw")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
