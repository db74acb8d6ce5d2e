import pytest
from fractions import Fraction

from freeconv.measures import Atomic, Semicircle


@pytest.fixture
def bernoulli():
    return Atomic([(0, Fraction(1, 2)), (1, Fraction(1, 2))])


@pytest.fixture
def two_point():
    return Atomic([(1, Fraction(1, 2)), (2, Fraction(1, 2))])


@pytest.fixture
def rademacher():
    return Atomic([(-1, Fraction(1, 2)), (1, Fraction(1, 2))])


@pytest.fixture
def delta_one():
    return Atomic([(1, 1)])


@pytest.fixture
def standard_semicircle():
    return Semicircle(0, 2)
