import sys
from pathlib import Path

import pytest

from mdp_defense import generate_state_space, load_scenario, value_iteration_oracle

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
PAPER8 = FIXTURES / "paper8.scenario"
TINY1 = FIXTURES / "tiny1.scenario"


@pytest.fixture(scope="session")
def paper8():
    return load_scenario(PAPER8)


@pytest.fixture(scope="session")
def paper8_nopath(paper8):
    return paper8.without_attack_path()


@pytest.fixture(scope="session")
def tiny1():
    return load_scenario(TINY1)


@pytest.fixture(scope="session")
def space8(paper8):
    return generate_state_space(paper8)


@pytest.fixture(scope="session")
def space8_nopath(paper8_nopath):
    return generate_state_space(paper8_nopath)


@pytest.fixture(scope="session")
def space_tiny(tiny1):
    return generate_state_space(tiny1)


@pytest.fixture(scope="session")
def oracle8(space8):
    return value_iteration_oracle(space8, 0.9)


@pytest.fixture(scope="session")
def oracle8_nopath(space8_nopath):
    return value_iteration_oracle(space8_nopath, 0.9)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
