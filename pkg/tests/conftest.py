"""Shared fixtures and the acceptance summary printed at the end of a run."""

from __future__ import annotations

import functools

import pytest

from qdopt.experiments.config import ExperimentConfig
from qdopt.experiments.runner import build_instance
from qdopt.optimizer import OptimizerConfig, run

ACCEPTANCE_SEEDS = tuple(range(20))

# criterion number -> (title, list of (ok, detail)); filled by test_acceptance
ACCEPTANCE_RESULTS: dict[int, tuple[str, list]] = {}


def record(number: int, title: str, ok: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS.setdefault(number, (title, []))[1].append((ok, detail))


@functools.lru_cache(maxsize=None)
def default_instance(seed: int):
    """20-node target-localization instance with the default experiment settings."""
    return build_instance(ExperimentConfig(), seed)


@functools.lru_cache(maxsize=None)
def default_run(algorithm: str, seed: int, delta0: str = "0.1"):
    inst = default_instance(seed)
    cfg = OptimizerConfig(delta0=delta0)
    return run(algorithm, inst.graph, inst.costs, inst.x0, cfg, seed=seed)


@pytest.fixture
def instance0():
    return default_instance(0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        title, parts = ACCEPTANCE_RESULTS[number]
        ok = all(p[0] for p in parts)
        detail = "; ".join(p[1] for p in parts)
        tr.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'} {title}: {detail}")
