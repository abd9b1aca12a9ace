import functools

import pytest
from hypothesis import settings

from killing_lab import indecomposability_report, resolve, solve
from killing_lab.killing_system import build_topslot_system

settings.register_profile("default", deadline=None, max_examples=30)
settings.load_profile("default")


@functools.lru_cache(maxsize=None)
def space(sid):
    return resolve(sid)


@functools.lru_cache(maxsize=None)
def quadratic(sid):
    """(report, solution) of the quadratic system with default settings."""
    return indecomposability_report(space(sid))


@functools.lru_cache(maxsize=None)
def topslot(sid, d):
    system = build_topslot_system(space(sid), d)
    return system, solve(system)


@pytest.fixture
def get_space():
    return space


@pytest.fixture
def get_quadratic():
    return quadratic


@pytest.fixture
def get_topslot():
    return topslot


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
