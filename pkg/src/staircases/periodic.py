"""Rational directions on square-tiled staircases.

The section here is D = union of the left sides D_n of the unit squares.
With d normalised to dx > 0, consecutive hits of D are one unit apart in
x, so the offset advances by alpha = dy/dx mod 1 and the square index jumps
by an integer f(s, n, d).  Every orbit therefore lives on finitely many
offsets per square, which is what makes periodicity checkable exactly.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

from .flow import (BudgetExhausted, Direction, SectionPoint, SingularBeforeSection,
                   WindowEscape, flow_to_section)
from .geometry import RectRef, Staircase, build_square_quotient, build_square_tiled, is_regular_vertex
from .symbolic import BinarySeq, Periodic, fmt_rational, NotFound


class NonconstantAlpha(AssertionError):
    """A transition whose offset increment differs from dy/dx mod 1."""


class SeparatrixBudgetExhausted(RuntimeError):
    pass


class MatchNotFound(NotFound):
    pass


def normalize(d: Direction) -> Direction:
    """Exact direction with dx > 0; vertical directions are rejected."""
    if not d.exact:
        raise ValueError(f"direction {d} is not rational")
    d = Direction.of(d.dx, d.dy)
    if d.dx == 0:
        raise ValueError("vertical direction is parallel to D")
    return -d if d.dx < 0 else d


def alpha_of(d: Direction) -> Fraction:
    d = normalize(d)
    return (Fraction(d.dy) / Fraction(d.dx)) % 1


def _square(n: int) -> RectRef:
    return RectRef(n, "square")


def _level(st: Staircase, j: int, deck: int) -> int:
    return j + (st.period * deck if st.is_quotient else 0)


# --------------------------------------------------------------------------
# the zeta map

@dataclass
class ZetaStep:
    n: int
    r: Fraction
    f: int


def zeta(st: Staircase, n: int, r, d: Direction, edges: dict | None = None,
         budget: int = 10_000) -> ZetaStep:
    """One step (n, r) -> (n + f, r + alpha mod 1) of the return map to D."""
    d = normalize(d)
    if edges is None:
        edges = st.section_edges("D")
    hit, traj = flow_to_section(st, SectionPoint("D", n, Fraction(r), d), d, family="D",
                                budget=budget, edges=edges)
    return ZetaStep(hit.level, hit.r, _level(st, hit.level, traj.deck) - n)


@dataclass
class ZetaData:
    direction: Direction
    alpha: Fraction
    f_table: dict  # (n, k) -> f for the offset class (k + 1/2)/dx
    window: tuple
    transitions: int = 0
    escapes: list = field(default_factory=list)
    singular: list = field(default_factory=list)

    def summary(self) -> dict:
        return {"direction": str(self.direction), "alpha": fmt_rational(self.alpha),
                "window": list(self.window), "transitions": self.transitions,
                "f": {f"{n}:{k}": f for (n, k), f in sorted(self.f_table.items())},
                "escapes": [list(e) for e in self.escapes],
                "singular": [list(e) for e in self.singular]}


def zeta_map(st: Staircase, d: Direction, window=None, budget: int = 10_000) -> ZetaData:
    """Tabulate zeta over ``window`` (default: every materialized square).

    Two offsets per class, at 1/4 and 3/4 of the class, are traced; both
    must advance by exactly alpha and share f, otherwise NonconstantAlpha.
    """
    d = normalize(d)
    alpha = alpha_of(d)
    q = int(d.dx)
    lo, hi = window if window is not None else st.levels
    edges = st.section_edges("D")
    data = ZetaData(d, alpha, {}, (lo, hi))
    for n in range(lo, hi + 1):
        for k in range(q):
            fs = set()
            try:
                for frac in (Fraction(1, 4), Fraction(3, 4)):
                    r = (k + frac) / q
                    step = zeta(st, n, r, d, edges, budget)
                    data.transitions += 1
                    if (step.r - r) % 1 != alpha:
                        raise NonconstantAlpha(f"square {n}, r={r}: increment {(step.r - r) % 1}")
                    fs.add(step.f)
            except WindowEscape:
                data.escapes.append((n, k))
                continue
            except SingularBeforeSection:
                data.singular.append((n, k))
                continue
            if len(fs) != 1:
                raise NonconstantAlpha(f"square {n}, class {k}: jumps {sorted(fs)}")
            data.f_table[(n, k)] = fs.pop()
    return data


# --------------------------------------------------------------------------
# periodicity of single orbits

@dataclass
class OrbitResult:
    start: tuple  # (n, r)
    status: str  # periodic | singular | escaped | budget
    period: int | None = None
    f_sum: int = 0
    levels: tuple = ()  # (min, max) square index visited on D

    def as_dict(self) -> dict:
        return {"n": self.start[0], "r": fmt_rational(self.start[1]), "status": self.status,
                "period": self.period, "fSum": self.f_sum, "levels": list(self.levels)}


def detect_periodic(st: Staircase, sp, d: Direction, window=None, budget: int | None = None,
                    edges: dict | None = None) -> OrbitResult:
    """Iterate zeta from ``sp`` until it comes back.

    ``sp`` is a SectionPoint or an (n, r) pair.  zeta is injective, so the
    first repeated state is the start itself; within a window of W squares
    that happens after at most W * dx steps unless the orbit escapes.
    """
    d = normalize(d)
    if isinstance(sp, SectionPoint):
        n0, r0 = sp.level, Fraction(sp.r)
    else:
        n0, r0 = sp[0], Fraction(sp[1])
    lo, hi = window if window is not None else st.levels
    if budget is None:
        budget = (hi - lo + 1) * int(d.dx) + 1
    if edges is None:
        edges = st.section_edges("D", range(lo, hi + 1))
    n, r, fsum = n0, r0, 0
    seen_lo = seen_hi = n0
    if r0 % 1 == 0:
        return OrbitResult((n0, r0), "singular", levels=(n0, n0))
    for step in range(1, budget + 1):
        try:
            z = zeta(st, n, r, d, edges)
        except SingularBeforeSection:
            return OrbitResult((n0, r0), "singular", f_sum=fsum, levels=(seen_lo, seen_hi))
        except WindowEscape:
            return OrbitResult((n0, r0), "escaped", f_sum=fsum, levels=(seen_lo, seen_hi))
        n, r, fsum = z.n, z.r, fsum + z.f
        seen_lo, seen_hi = min(seen_lo, n), max(seen_hi, n)
        if (n, r) == (n0, r0) and (not st.is_quotient or fsum == 0):
            return OrbitResult((n0, r0), "periodic", step, fsum, (seen_lo, seen_hi))
    return OrbitResult((n0, r0), "budget", f_sum=fsum, levels=(seen_lo, seen_hi))


# --------------------------------------------------------------------------
# cylinders of a periodic quotient

@dataclass
class Cylinder:
    direction: Direction
    circumference2: Fraction  # squared length of a closed orbit
    width: Fraction  # measured along D
    span: int  # D-crossings per closed orbit (horizontal extent)
    cells: tuple  # squares crossed on D by one core orbit, in order
    core_shift: int  # deck displacement of the core, in periods
    strips: int  # offset classes making up the cylinder

    @property
    def area(self) -> Fraction:
        return self.span * self.width

    @property
    def circumference(self):
        c2 = Fraction(self.circumference2)
        a, b = math.isqrt(c2.numerator), math.isqrt(c2.denominator)
        if a * a == c2.numerator and b * b == c2.denominator:
            return Fraction(a, b)
        return math.sqrt(c2)

    def as_dict(self) -> dict:
        return {"direction": str(self.direction), "circumference2": fmt_rational(self.circumference2),
                "circumference": fmt_rational(self.circumference), "width": fmt_rational(self.width),
                "span": self.span, "area": fmt_rational(self.area), "coreShift": self.core_shift,
                "strips": self.strips, "cells": list(self.cells)}


def _complement(s: BinarySeq) -> BinarySeq:
    p = s.period
    return BinarySeq(Periodic(tuple(1 - b for b in s.window(0, p - 1))))


def cylinder_decomposition(s: BinarySeq, d: Direction, period: int | None = None,
                           budget: int = 10_000) -> list:
    """Maximal cylinders of the periodic quotient in direction d.

    The D sides of the quotient are cut at multiples of 1/dx; each piece is
    an interval of zeta-continuity (every cone point sits at an offset 0
    and singular offsets lie in (1/dx)Z).  zeta permutes the pieces, and a
    cycle of pieces sweeps a strip of parallel closed orbits.  Two strips
    meeting along an orbit through no cone point belong to the same cylinder.
    """
    if not d.exact:
        raise ValueError("cylinder decomposition needs a rational direction")
    d = Direction.of(d.dx, d.dy)
    if d.dx == 0:
        # swap the axes: rows become columns, i.e. complement the symbols
        cyls = cylinder_decomposition(_complement(s), Direction(d.dy, d.dx), period, budget)
        return [Cylinder(d, c.circumference2, c.width, c.span, c.cells, c.core_shift, c.strips)
                for c in cyls]
    orig = d
    d = normalize(d)
    st = build_square_quotient(s, period)
    p, q = st.period, int(d.dx)
    edges = st.section_edges("D")

    image, deck = {}, {}
    for j in range(p):
        for k in range(q):
            try:
                hit, traj = flow_to_section(st, SectionPoint("D", j, Fraction(2 * k + 1, 2 * q), d), d,
                                            family="D", budget=budget, edges=edges)
            except (SingularBeforeSection, BudgetExhausted) as exc:
                raise SeparatrixBudgetExhausted(f"piece ({j},{k}): {exc}") from exc
            image[(j, k)] = (hit.level, int(hit.r * q))
            deck[(j, k)] = traj.deck

    cycle_of, cycles = {}, []
    for piece in sorted(image):
        if piece in cycle_of:
            continue
        cyc, cur = [], piece
        while cur not in cycle_of:
            cycle_of[cur] = len(cycles)
            cyc.append(cur)
            cur = image[cur]
        cycles.append(cyc)

    parent = list(range(len(cycles)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for ci, cyc in enumerate(cycles):
        if any(k == 0 and not is_regular_vertex(st, _square(j), "SW") for j, k in cyc):
            continue  # bottom boundary is a separatrix
        j, k = cyc[0]
        if k > 0:
            below = (j, k - 1)
        else:
            below = (st.glue[(_square(j), "S")].target.level, q - 1)
        parent[find(ci)] = find(cycle_of[below])

    groups = {}
    for ci in range(len(cycles)):
        groups.setdefault(find(ci), []).append(ci)
    out = []
    norm2 = Fraction(d.norm2) / (d.dx * d.dx)
    for members in sorted(groups.values()):
        core = cycles[members[0]]
        m = len(core)
        shifts = {sum(deck[x] for x in cycles[c]) for c in members}
        lengths = {len(cycles[c]) for c in members}
        if len(shifts) != 1 or len(lengths) != 1:
            raise SeparatrixBudgetExhausted("strips of one cylinder disagree")
        out.append(Cylinder(orig, m * m * norm2, Fraction(len(members), q), m,
                            tuple(j for j, _ in core), shifts.pop(), len(members)))
    return out


@dataclass
class ParabolicResult:
    strongly_parabolic: bool
    status: str  # true | false | inconclusive
    reason: str
    cylinders: list

    def __bool__(self) -> bool:
        return self.strongly_parabolic

    def as_dict(self) -> dict:
        return {"stronglyParabolic": self.strongly_parabolic, "status": self.status,
                "reason": self.reason, "cylinders": [c.as_dict() for c in self.cylinders]}


def strongly_parabolic_test(s: BinarySeq, d: Direction, period: int | None = None) -> ParabolicResult:
    """Isometric quotient cylinders, each lifting to closed cylinders."""
    try:
        cyls = cylinder_decomposition(s, d, period)
    except (SeparatrixBudgetExhausted, ValueError) as exc:
        return ParabolicResult(False, "inconclusive", str(exc), [])
    shapes = {(c.circumference2, c.width) for c in cyls}
    if len(shapes) > 1:
        return ParabolicResult(False, "false", "cylinders are not isometric", cyls)
    drifting = [c for c in cyls if c.core_shift != 0]
    if drifting:
        return ParabolicResult(False, "false",
                               f"{len(drifting)} cylinder(s) with nonzero core shift", cyls)
    return ParabolicResult(True, "true", "", cyls)


# --------------------------------------------------------------------------
# purely periodic directions on a window

@dataclass
class PeriodicVerdict:
    direction: Direction
    window: tuple  # (M-, M+)
    results: list
    verdict: str  # PurelyPeriodicOnWindow | Inconclusive
    reason: str = ""
    match_radius: int = 0

    @property
    def ok(self) -> bool:
        return self.verdict == "PurelyPeriodicOnWindow"

    def as_dict(self) -> dict:
        return {"direction": str(self.direction), "window": list(self.window),
                "matchRadius": self.match_radius, "verdict": self.verdict, "reason": self.reason,
                "counts": dict(sorted(Counter(r.status for r in self.results).items())),
                "orbits": [r.as_dict() for r in self.results]}


def _max_cyclic_run(word) -> int:
    best, n = 0, len(word)
    for sym in (0, 1):
        run = 0
        for b in list(word) * 2:
            run = run + 1 if b == sym else 0
            best = max(best, min(run, n))
    return best


def reference_excursion(ref: BinarySeq, d: Direction) -> int:
    """Largest square-index excursion of a closed orbit of T_ref in direction d."""
    d = normalize(d)
    st = build_square_quotient(ref)
    p, q = st.period, int(d.dx)
    edges = st.section_edges("D")
    worst = 0
    for j in range(p):
        for k in range(q):
            n, r, lvl = j, Fraction(2 * k + 1, 2 * q), j
            lo = hi = lvl
            while True:
                hit, traj = flow_to_section(st, SectionPoint("D", n, r, d), d, family="D",
                                            edges=edges)
                lvl += (hit.level - n) + p * traj.deck
                n, r = hit.level, hit.r
                lo, hi = min(lo, lvl), max(hi, lvl)
                if (n, r) == (j, Fraction(2 * k + 1, 2 * q)):
                    break
            worst = max(worst, j - lo, hi - j)
    return worst


def matches(s: BinarySeq, ref: BinarySeq, M: int, radius: int) -> bool:
    return all(s(M + i) == ref(i) for i in range(-radius, radius + 1))


def find_brackets(s: BinarySeq, ref: BinarySeq, radius: int, max_window: int, span: int = 1):
    """Closest M- <= -span and M+ >= span where s matches ref within ``radius``."""
    plus = next((M for M in range(span, max_window + 1) if matches(s, ref, M, radius)), None)
    minus = next((M for M in range(-span, -max_window - 1, -1) if matches(s, ref, M, radius)), None)
    if plus is None or minus is None:
        raise MatchNotFound(f"no match of radius {radius} within {max_window} squares")
    return minus, plus


def purely_periodic_scan(s: BinarySeq, d: Direction, max_window: int = 4096,
                         reference: BinarySeq | None = None, span: int = 1) -> PeriodicVerdict:
    """Certify that every regular orbit through squares M-..M+ is periodic.

    M- and M+ are squares around which s agrees with the reference ŝ far
    enough that their orbits coincide with closed orbits of T_ŝ.  Those
    orbits wall off the window, so orbits starting between them can only
    visit finitely many states.  One representative per offset class and
    square is traced, plus the class endpoints (separatrix starts).
    """
    if not d.exact:
        raise ValueError("purely periodic scan needs a rational direction")
    reference = reference or BinarySeq.periodic("10")
    d0 = Direction.of(d.dx, d.dy)
    if d0.dx == 0:
        v = purely_periodic_scan(_complement_seq(s), Direction(d0.dy, d0.dx), max_window,
                                 _complement(reference), span)
        v.direction = d0
        return v
    d = normalize(d0)
    test = strongly_parabolic_test(reference, d)
    if not test:
        return PeriodicVerdict(d0, (0, 0), [], "Inconclusive",
                               f"not strongly parabolic for {reference}: {test.reason}")
    p = reference.period
    radius = reference_excursion(reference, d) + _max_cyclic_run(reference.window(0, p - 1)) + 1
    lo, hi = find_brackets(s, reference, radius, max_window, span)
    st = build_square_tiled(s, range(lo - radius, hi + radius + 1))
    q = int(d.dx)
    edges = st.section_edges("D")
    results = []
    for n in range(lo, hi + 1):
        for k in range(q):
            for r in (Fraction(2 * k + 1, 2 * q), Fraction(k, q)):
                results.append(detect_periodic(st, (n, r), d, edges=edges))
    bad = [r for r in results if r.status not in ("periodic", "singular")]
    boundary_bad = [r for r in results if r.start[0] in (lo, hi) and r.status != "periodic"
                    and r.start[1] * q % 1 != 0]
    verdict = "PurelyPeriodicOnWindow" if not bad and not boundary_bad else "Inconclusive"
    reason = "" if verdict != "Inconclusive" else f"{len(bad)} orbit(s) not periodic"
    return PeriodicVerdict(d0, (lo, hi), results, verdict, reason, radius)


def _complement_seq(s: BinarySeq) -> BinarySeq:
    return BinarySeq(_Flipped(s))


@dataclass(frozen=True)
class _Flipped:
    base: BinarySeq

    def bit(self, n: int) -> int:
        return 1 - self.base(n)


def farey_directions(qmax: int) -> list:
    """Primitive integer directions with |dx|, |dy| <= qmax, all quadrants."""
    out = []
    for a in range(-qmax, qmax + 1):
        for b in range(-qmax, qmax + 1):
            if (a or b) and math.gcd(a, b) == 1:
                out.append(Direction(Fraction(a), Fraction(b)))
    out.sort(key=lambda d: (max(abs(d.dx), abs(d.dy)), d.dx, d.dy))
    return out
