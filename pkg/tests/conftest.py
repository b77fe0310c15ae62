from fractions import Fraction

import pytest
from hypothesis import settings, strategies as st

from staircases.symbolic import BinarySeq, ParamSeq

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def ten():
    return BinarySeq.periodic("10")


@pytest.fixture
def wing():
    """Rectangle staircase with only the 1x1 wings, level period 1."""
    return ParamSeq.periodic([(0, 1, 1, 0)])


def words(min_size=1, max_size=8):
    """Periodic words containing both symbols."""
    return st.lists(st.integers(0, 1), min_size=min_size, max_size=max_size).filter(
        lambda w: 0 in w and 1 in w)


def small_rationals(lo=0, hi=3, den=4):
    return st.integers(lo * den, hi * den).map(lambda k: Fraction(k, den))


@st.composite
def quads(draw):
    l = draw(small_rationals(0, 2))
    h = draw(small_rationals(1, 3))
    lp = draw(small_rationals(1, 3))
    hp = draw(small_rationals(0, 2))
    return (l, h, lp, hp)


@st.composite
def param_seqs(draw, max_period=3):
    return ParamSeq.periodic(draw(st.lists(quads(), min_size=1, max_size=max_period)))


@st.composite
def directions(draw, bound=4, allow_axis=False):
    a = draw(st.integers(-bound, bound))
    b = draw(st.integers(-bound, bound))
    if not allow_axis:
        a = a or 1
        b = b or 1
    elif a == 0 and b == 0:
        a = 1
    from staircases.flow import Direction
    return Direction.of(a, b)
