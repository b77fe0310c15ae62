from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from staircases.flow import Direction
from staircases.geometry import build_square_quotient, build_square_tiled
from staircases.periodic import (alpha_of, cylinder_decomposition, detect_periodic,
                                 farey_directions, normalize, purely_periodic_scan,
                                 reference_excursion, strongly_parabolic_test, zeta, zeta_map)
from staircases.symbolic import BinarySeq

from conftest import words

F = Fraction


@pytest.fixture(scope="module")
def tiled():
    return build_square_tiled(BinarySeq.periodic("10"), range(-20, 21))


@pytest.fixture(scope="module")
def rough():
    return build_square_tiled(BinarySeq.bernoulli(F(1, 2), 3), range(-30, 31))


@pytest.mark.parametrize("d,alpha", [((1, 0), 0), ((2, 1), F(1, 2)), ((3, 2), F(2, 3)),
                                      ((1, -3), 0), ((-3, 1), F(2, 3))])
def test_alpha(d, alpha):
    assert alpha_of(Direction.of(*d)) == alpha


def test_normalize_flips_left_pointing():
    assert normalize(Direction.of(-2, -1)) == Direction.of(2, 1)


def test_vertical_and_float_rejected():
    with pytest.raises(ValueError):
        normalize(Direction.of(0, 1))
    with pytest.raises(ValueError):
        normalize(Direction(1.0, 0.6180339887))


@given(st.sampled_from([(1, 1), (2, 1), (1, 2), (3, 2), (2, -1), (1, -3), (4, 3)]))
def test_zeta_map_constant_alpha(rough, d):
    d = Direction.of(*d)
    data = zeta_map(rough, d, window=(-10, 10))
    assert data.alpha == alpha_of(d)
    assert all(isinstance(f, int) for f in data.f_table.values())
    assert not data.escapes


def test_horizontal_orbit_on_ten(tiled):
    # rows of two squares: the horizontal orbit closes after two crossings
    res = detect_periodic(tiled, (0, F(1, 2)), Direction.of(1, 0))
    assert res.status == "periodic" and res.period == 2 and res.f_sum == 0


def test_integer_offset_is_singular(tiled):
    assert detect_periodic(tiled, (0, 0), Direction.of(2, 1)).status == "singular"


def test_diagonal_drifts(tiled):
    res = detect_periodic(tiled, (0, F(1, 2)), Direction.of(1, 1))
    assert res.status == "escaped"


@given(st.integers(-5, 5), st.integers(0, 2), st.sampled_from([(2, 1), (1, 2), (3, 2)]))
def test_closed_orbits_have_zero_jump_sum(tiled, n, k, d):
    d = Direction.of(*d)
    r = F(2 * k + 1, 2 * int(d.dx)) % 1
    res = detect_periodic(tiled, (n, r), d)
    assert res.status == "periodic" and res.f_sum == 0


def test_zeta_on_quotient_counts_deck():
    q = build_square_quotient(BinarySeq.periodic("10"))
    step = zeta(q, 0, F(1, 2), Direction.of(1, 1))
    assert abs(step.f) >= 1


@pytest.mark.parametrize("d", [(1, 0), (0, 1)])
def test_axis_cylinders_of_ten(d):
    cyls = cylinder_decomposition(BinarySeq.periodic("10"), Direction.of(*d))
    assert len(cyls) == 1
    (c,) = cyls
    assert c.circumference == 2 and c.width == 1 and c.core_shift == 0


def test_diagonal_cylinders_of_ten_drift():
    cyls = cylinder_decomposition(BinarySeq.periodic("10"), Direction.of(1, 1))
    assert sorted(c.core_shift for c in cyls) == [-1, 1]


@given(words(max_size=6), st.sampled_from([(1, 0), (0, 1), (1, 1), (2, 1), (1, -2), (3, 1)]))
def test_cylinder_areas_fill_quotient(w, d):
    s = BinarySeq.periodic("".join(map(str, w)))
    cyls = cylinder_decomposition(s, Direction.of(*d))
    assert sum(c.area for c in cyls) == len(w)
    assert all(c.width > 0 for c in cyls)


@pytest.mark.parametrize("d,expected", [((1, 0), True), ((2, 1), True), ((1, 2), True),
                                         ((3, 2), True), ((1, 1), False), ((1, 3), False)])
def test_strong_parabolicity_of_ten(d, expected):
    res = strongly_parabolic_test(BinarySeq.periodic("10"), Direction.of(*d))
    assert bool(res) is expected
    if not expected:
        assert res.status == "false" and "core shift" in res.reason


def test_float_direction_not_parabolic():
    res = strongly_parabolic_test(BinarySeq.periodic("10"), Direction(1.0, 0.5))
    assert res.status == "inconclusive"


@pytest.mark.parametrize("d,exc", [((1, 0), 1), ((2, 1), 3), ((1, 2), 1), ((3, 2), 5)])
def test_reference_excursion(d, exc):
    assert reference_excursion(BinarySeq.periodic("10"), Direction.of(*d)) == exc


def test_scan_on_periodic_sequence():
    v = purely_periodic_scan(BinarySeq.periodic("10"), Direction.of(2, 1), span=6)
    assert v.ok and v.window == (-6, 6)
    assert all(r.status in ("periodic", "singular") for r in v.results)


def test_scan_bernoulli_steep():
    v = purely_periodic_scan(BinarySeq.bernoulli(F(1, 2), 0), Direction.of(1, 2))
    assert v.ok, v.reason
    lo, hi = v.window
    assert lo < 0 < hi


def test_scan_non_parabolic_is_inconclusive():
    v = purely_periodic_scan(BinarySeq.bernoulli(F(1, 2), 0), Direction.of(1, 1))
    assert v.verdict == "Inconclusive" and v.results == []


def test_scan_vertical_uses_complement():
    v = purely_periodic_scan(BinarySeq.periodic("10"), Direction.of(0, 1), span=3)
    assert v.ok


def test_farey_directions():
    ds = farey_directions(2)
    assert len(ds) == 16
    assert Direction.of(2, 1) in ds and Direction.of(-1, -2) in ds
    assert len(set(ds)) == len(ds)
