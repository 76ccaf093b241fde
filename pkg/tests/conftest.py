from fractions import Fraction

import pytest

from matchlot import Instance, Matching, ProbabilisticAssignment


@pytest.fixture
def ex1() -> Instance:
    """Four agents, three objects with capacities (2, 1, 1).

    Agents 1 and 2 rank a > b > c; agents 3 and 4 accept only a.
    """
    return Instance(
        agents=("1", "2", "3", "4"),
        objects=("a", "b", "c"),
        capacities=(2, 1, 1),
        preferences=(("a", "b", "c"), ("a", "b", "c"), ("a",), ("a",)),
    )


@pytest.fixture
def x1() -> ProbabilisticAssignment:
    """The exact RSD matrix of the ex1 market."""
    h, f5, f1 = Fraction(1, 2), Fraction(5, 12), Fraction(1, 12)
    return ProbabilisticAssignment.from_rows(
        [[h, f5, f1], [h, f5, f1], [h, 0, 0], [h, 0, 0]]
    )


@pytest.fixture
def ex3() -> Instance:
    """Four agents, two objects of capacity two; 3 and 4 accept only a."""
    return Instance(
        agents=("1", "2", "3", "4"),
        objects=("a", "b"),
        capacities=(2, 2),
        preferences=(("a", "b"), ("a", "b"), ("a",), ("a",)),
    )


@pytest.fixture
def x2() -> ProbabilisticAssignment:
    h = Fraction(1, 2)
    return ProbabilisticAssignment.from_rows(
        [[h, h], [h, h], [h, 0], [h, 0]]
    )


@pytest.fixture
def x1_decomposition(x1):
    """The four-matching lottery whose mixture is x1 (weights 5/12 x2, 1/12 x2)."""
    from matchlot import Decomposition

    m1 = Matching((1, 0, 0, None))
    m2 = Matching((0, 1, None, 0))
    m3 = Matching((0, 2, 0, None))
    m4 = Matching((2, 0, None, 0))
    w5, w1 = Fraction(5, 12), Fraction(1, 12)
    return Decomposition(((w5, m1), (w5, m2), (w1, m3), (w1, m4)))
