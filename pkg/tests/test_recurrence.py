from collections import defaultdict
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from staircases.flow import Direction, FlowStop, SectionPoint
from staircases.geometry import build_staircase, cross_section
from staircases.recurrence import (ExperimentParams, auto_eps_prime, corner_proximity,
                                   divergence_compare, divergence_constant, first_return, phi,
                                   phi_inverse, records_csv, recurrence_experiment,
                                   sample_offsets)
from staircases.symbolic import BinarySeq, WindowMatch, bits_to_params

F = Fraction


@pytest.fixture(scope="module")
def wings():
    return build_staircase(bits_to_params(BinarySeq.periodic("10")), range(-20, 21))


@pytest.fixture(scope="module")
def bern():
    return build_staircase(bits_to_params(BinarySeq.bernoulli(F(1, 2), 7)), range(-25, 26))


def test_first_return_closes_in_a_parabolic_direction(wings):
    d = Direction.of(2, 1)
    sp = SectionPoint("L", 0, F(1, 3), d)
    cur, seen = sp, []
    for _ in range(10):
        cur, steps, t = first_return(wings, cur)
        seen.append(cur.r)
        if cur == sp:
            break
    assert cur == sp and t > 0


def test_first_return_to_other_levels(wings):
    d = Direction.of(1, 2)
    hit, steps, _ = first_return(wings, SectionPoint("L", 0, F(1, 3), d), target_levels={1, -1})
    assert hit.level in (1, -1) and steps >= 1


@pytest.mark.parametrize("d", [(2, 1), (1, 2), (3, 2), (1, 1), (2, -3)])
def test_phi_inverse(bern, d):
    d = Direction.of(*d)
    edges = bern.section_edges("L")
    for r in sample_offsets(cross_section(bern, "L", 0).length, 50, "random", 1):
        sp = SectionPoint("L", 0, r, d)
        try:
            img = phi(bern, sp, edges=edges)
        except FlowStop:
            continue
        assert phi_inverse(bern, img, edges=edges) == sp


def test_n_zero_returns_nothing(wings):
    stats = recurrence_experiment(wings, Direction.of(2, 1), ExperimentParams(N=0, samples=20))
    assert stats.fraction_returned == 0


def test_parabolic_direction_returns_everything(wings):
    stats = recurrence_experiment(wings, Direction.of(2, 1), ExperimentParams(N=1000, samples=64))
    assert stats.fraction_returned == 1 and stats.escaped == 0


def test_drifting_direction_escapes(wings):
    stats = recurrence_experiment(wings, Direction.of(1, 1), ExperimentParams(N=100, samples=16))
    assert stats.fraction_returned == 0 and stats.escaped == 16


@given(st.integers(0, 30), st.integers(0, 30), st.sampled_from([(2, 1), (1, 2), (3, 1)]))
def test_monotone_in_n(bern, n1, n2, d):
    n1, n2 = sorted((n1, n2))
    d = Direction.of(*d)
    a = recurrence_experiment(bern, d, ExperimentParams(N=n1, samples=20, sampler="random"))
    b = recurrence_experiment(bern, d, ExperimentParams(N=n2, samples=20, sampler="random"))
    assert a.fraction_returned <= b.fraction_returned


@given(st.integers(1, 40), st.integers(0, 5))
def test_categories_sum_to_one(bern, N, seed):
    s = recurrence_experiment(bern, Direction.of(1, 2),
                              ExperimentParams(N=N, samples=15, sampler="random", seed=seed))
    total = sum(s.fraction(c) for c in (s.returned, s.not_returned, s.escaped, s.singular))
    assert total == 1
    assert sum(s.histogram.values()) == s.returned


def test_experiment_is_deterministic(bern):
    p = ExperimentParams(N=20, samples=30, sampler="random", seed=4)
    a = recurrence_experiment(bern, Direction.of(1, 2), p)
    b = recurrence_experiment(bern, Direction.of(1, 2), p)
    assert records_csv(a) == records_csv(b) and a.summary() == b.summary()


def test_grid_avoids_section_ends():
    offs = sample_offsets(F(3), 10)
    assert offs[0] == F(3, 20) and all(0 < r < 3 for r in offs)


def test_eps_prime_formula():
    assert auto_eps_prime(F(1, 100), F(3), 10) == F(1, 28000)


def test_zero_neighbourhood_is_never_hit(bern):
    p = ExperimentParams(N=10, samples=50, eps=F(1, 100), eps_prime=F(0))
    assert corner_proximity(bern, Direction.of(2, 1), p).bad == 0


def test_bad_set_bound_on_110():
    st = build_staircase(bits_to_params(BinarySeq.periodic("110")), range(-15, 16))
    rep = corner_proximity(st, Direction.of(1, 2),
                           ExperimentParams(N=10, samples=400, sampler="random", seed=2))
    assert rep.eps_prime == auto_eps_prime(F(1, 100), cross_section(st, "L", 0).length, 10)
    assert rep.ok


def test_images_form_an_exchange_of_pieces(bern):
    # grid points mapping to a section with a common translation form runs
    d = Direction.of(2, 1)
    K = 300
    H0 = cross_section(bern, "L", 0).length
    groups = defaultdict(list)
    for i, r in enumerate(sample_offsets(H0, K)):
        try:
            img = phi(bern, SectionPoint("L", 0, r, d))
        except FlowStop:
            continue
        groups[(img.level, img.r - r)].append(i)
    assert len(groups) < 20
    total = F(0)
    for idx in groups.values():
        assert idx == list(range(idx[0], idx[-1] + 1))
        total += F(len(idx), K) * H0
    assert abs(total - H0) <= 2 * H0 / K * len(groups)


def test_identical_surfaces_do_not_diverge(bern):
    m = WindowMatch(0, 10, F(0), F(1, 100), F(1, 10), F(2))
    rep = divergence_compare(bern, bern, m, Direction.of(1, 2), 20, 10)
    assert rep.max_deviation == 0 and rep.violations == 0
    assert all(s.disagreement is None for s in rep.samples)


def test_divergence_constant():
    assert divergence_constant(Direction.of(1, 2), 3) == 10
    assert divergence_constant(Direction.of(2, 1), 3) == 7
