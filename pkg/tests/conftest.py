import os

import numpy as np
import pytest

from src.core.quantum import PovmFamily, spin_measurement
from src.core.scenario import Behavior, chsh, dichotomic_scenario, mermin

FIXTURES = os.path.join(os.path.dirname(os.path.abspath(__file__)), "fixtures")


def pr_box_tables():
    """PR box on the CHSH scenario: outcome indices agree unless both settings are 2"""
    tables = np.zeros((2, 2, 2, 2))
    for x in range(2):
        for y in range(2):
            for a in range(2):
                for b in range(2):
                    if (a ^ b) == (x & y):
                        tables[x, y, a, b] = 0.5
    return tables


def tsirelson_povms(scenario):
    """Spin measurements reaching 2 sqrt(2) on the singlet"""
    r = 1 / np.sqrt(2)
    alice = [spin_measurement([0, 0, 1]), spin_measurement([1, 0, 0])]
    bob = [spin_measurement([-r, 0, -r]), spin_measurement([r, 0, -r])]
    return PovmFamily(scenario, [np.stack(alice), np.stack(bob)])


@pytest.fixture
def chsh_scenario():
    return dichotomic_scenario(2, 2)


@pytest.fixture
def chsh_functional():
    return chsh()


@pytest.fixture
def mermin3():
    return mermin(3)


@pytest.fixture
def pr_box(chsh_scenario):
    return Behavior(chsh_scenario, pr_box_tables())


@pytest.fixture
def chsh_path():
    return os.path.join(FIXTURES, "chsh.json")
