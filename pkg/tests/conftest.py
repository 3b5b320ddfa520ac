"""Shared fixtures: small synthetic populations reused across test modules.

Session scope keeps the expensive generators to one call each; tests must
treat fixture objects as read-only.
"""

import numpy as np
import pytest

from zoneplan import ingest, optimize, synth

ACCEPTANCE_LINES: list[tuple[int, str]] = []


def record_criterion(number: int, name: str, passed: bool, detail: str = "") -> None:
    status = "PASS" if passed else "FAIL"
    line = f"criterion {number:2d} {status}  {name}" + (f"  [{detail}]" if detail else "")
    ACCEPTANCE_LINES.append((number, line))
    print(line)


@pytest.fixture(scope="session")
def record():
    return record_criterion


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def pop36():
    # Four-archetype population, one day: 4 zones of 9, 36 occupants.
    return synth.generate_population((9, 9, 9, 9), 1, seed=11)


@pytest.fixture(scope="session")
def pop36_pure(pop36):
    return optimize.Layout.from_groups(synth.archetype_pure_layout(pop36, 4))


@pytest.fixture(scope="session")
def pop36_calendar(pop36):
    return ingest.StepCalendar(pop36.start, pop36.n_steps)


@pytest.fixture(scope="session")
def pop8():
    # Two occupants per archetype, two days: the smallest non-trivial case.
    return synth.generate_population((2, 2, 2, 2), 2, seed=5)


@pytest.fixture(scope="session")
def paired_vectors():
    # Two identical pairs: optimum is zero diversity when pairs share a zone.
    return {
        "a1": np.array([0.0, 0.0, 1.0]),
        "a2": np.array([0.0, 0.0, 1.0]),
        "b1": np.array([5.0, 5.0, 5.0]),
        "b2": np.array([5.0, 5.0, 5.0]),
    }


@pytest.fixture(scope="session")
def paired_adversarial(paired_vectors):
    # Adversarial start: each zone mixes the two pairs.
    return optimize.Layout.from_groups({"Z1": ["a1", "b1"], "Z2": ["a2", "b2"]})
