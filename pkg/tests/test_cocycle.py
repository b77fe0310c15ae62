import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from staircases.flow import Direction
from staircases.periodic import zeta
from staircases.cocycle import (IETData, NotPeriodic, SkewProduct, TilingError,
                                UnresolvedBreakpoint, _dedupe, build_quotient, extract_iet,
                                holonomy_check, iet_json, skew_recurrence_sim)
from staircases.symbolic import BinarySeq, ParamSeq

from conftest import words

F = Fraction
GOLDEN = (1 + 5 ** 0.5) / 2


@pytest.fixture(scope="module")
def q10():
    return build_quotient(BinarySeq.periodic("10"))


def test_square_quotient(q10):
    assert q10.kind == "square" and q10.cell_count == 2 and q10.area == 2
    assert sum(s.length for s in q10.section("D")) == 2


def test_rect_quotient():
    q = build_quotient(ParamSeq.periodic([(0, 1, 1, 0)]))
    assert q.kind == "rect" and q.cell_count == 2 and q.area == 2


def test_aperiodic_source_rejected():
    with pytest.raises(NotPeriodic):
        build_quotient(BinarySeq.bernoulli(F(1, 2), 1))


def test_diagonal_cocycle_of_ten(q10):
    iet = extract_iet(q10, Direction.of(1, 1))
    assert sorted(iet.f) == [-1, 1]
    assert holonomy_check(iet).value == 0


@given(words(max_size=5), st.integers(1, 5), st.integers(-5, 5))
def test_holonomy_vanishes(w, a, b):
    if b == 0 or math.gcd(a, b) != 1:
        b = 1
    q = build_quotient(BinarySeq.periodic("".join(map(str, w))))
    iet = extract_iet(q, Direction.of(a, b))
    assert holonomy_check(iet).ok


def test_holonomy_of_hand_built_cocycles():
    H = F(3)
    shift = IETData(H, [F(0), F(1), H], [F(2), F(-1)], [1, 1])
    assert holonomy_check(shift).value == H
    flat = IETData(H, [F(0), F(1), H], [F(2), F(-1)], [0, 0])
    assert holonomy_check(flat).value == 0


def test_bad_tiling_detected():
    with pytest.raises(TilingError):
        IETData(F(2), [F(0), F(1), F(2)], [F(1), F(0)], [0, 0]).check_tiling()
    IETData(F(2), [F(0), F(1), F(2)], [F(1), F(-1)], [0, 0]).check_tiling()


@pytest.mark.parametrize("d", [(2, 1), (1, 3), (3, -2)])
def test_reverse_direction_inverts(q10, d):
    fwd = extract_iet(q10, Direction.of(*d))
    bwd = extract_iet(q10, -Direction.of(*d))
    for i in range(len(fwd.lengths)):
        x = (fwd.breakpoints[i] + fwd.breakpoints[i + 1]) / 2
        y, k = fwd(x)
        z, j = bwd(y)
        assert z == x and j == -k


@pytest.mark.parametrize("d", [(1, 1), (2, 1), (3, 2), (1, -2)])
def test_d_section_matches_zeta(q10, d):
    d = Direction.of(*d)
    iet = extract_iet(q10, d, family="D")
    for i, ln in enumerate(iet.lengths):
        x = iet.breakpoints[i] + ln / 2
        j = int(x)
        step = zeta(q10.st, j, x - j, d)
        y, f = iet(x)
        assert y == step.n + step.r
        assert f * 2 == step.f - (step.n - j)


def test_horizontal_is_a_rotation(q10):
    iet = extract_iet(q10, Direction.of(1, 0))
    assert iet.f == [0] * len(iet.f)
    # horizontal rows of two squares: two returns bring every point back
    for x in (F(1, 3), F(6, 5)):
        y, _ = iet(x)
        assert iet(y)[0] == x


def test_iet_json_is_stable(q10):
    iet = extract_iet(q10, Direction.of(2, 1))
    assert iet_json(iet) == iet_json(extract_iet(q10, Direction.of(2, 1)))
    assert '"holonomy": "0"' in iet_json(iet)


def test_float_direction_certified(q10):
    iet = extract_iet(q10, Direction.of(1.0, GOLDEN))
    assert not iet.exact
    assert abs(holonomy_check(iet).value) < 1e-9


def test_unresolved_breakpoints_raise():
    # closer than 10*eps but further apart than eps: neither merged nor trusted
    assert _dedupe([0.0, 5e-13, 1.0], False, 1e-12) == [0.0, 1.0]
    with pytest.raises(UnresolvedBreakpoint):
        _dedupe([0.0, 5e-12, 1.0], False, 1e-12)


def test_skew_trivial_cocycle_always_returns():
    iet = IETData(F(1), [F(0), F(1, 2), F(1)], [F(1, 2), F(-1, 2)], [0, 0])
    stats = skew_recurrence_sim(SkewProduct(iet), starts=10, iterations=5)
    assert stats.fraction_returned == 1 and all(r == 1 for r in stats.first_return)


def test_skew_constant_cocycle_never_returns():
    iet = IETData(F(1), [F(0), F(1, 2), F(1)], [F(1, 2), F(-1, 2)], [1, 1])
    stats = skew_recurrence_sim(SkewProduct(iet), starts=10, iterations=50)
    assert stats.fraction_returned == 0 and stats.final == [50] * 10


def test_skew_orbit_exact():
    iet = IETData(F(1), [F(0), F(1, 2), F(1)], [F(1, 2), F(-1, 2)], [1, -1])
    orb = SkewProduct(iet).orbit(F(1, 4), 0, 4)
    assert orb == [(F(1, 4), 0), (F(3, 4), 1), (F(1, 4), 0), (F(3, 4), 1), (F(1, 4), 0)]


def test_skew_parabolic_direction_returns(q10):
    sp = SkewProduct(extract_iet(q10, Direction.of(2, 1)))
    assert skew_recurrence_sim(sp, 50, 200, seed=2).fraction_returned == 1


def test_skew_golden_direction_recurrent(q10):
    sp = SkewProduct(extract_iet(q10, Direction.of(1.0, GOLDEN)))
    stats = skew_recurrence_sim(sp, 100, 20_000, seed=1)
    assert stats.fraction_returned >= 0.95
    assert stats.to_csv().count("\n") == 101
