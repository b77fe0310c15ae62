"""First-return map to the L sections and recurrence experiments.

``phi`` is the first return of the flow to the union of all L_n.  "Time"
in these experiments counts phi-iterations, not flow time.  Orbits that
leave the materialized level window are counted as escapes and kept out of
the returned fraction.
"""
from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field, asdict
from fractions import Fraction

import numpy as np

from .flow import (BudgetExhausted, Direction, NotTransverse, SectionPoint,
                   SingularBeforeSection, StartsAtCorner, WindowEscape, flow_to_section,
                   section_start, trace)
from .geometry import Staircase, cross_section, corners
from .symbolic import WindowMatch, fmt_rational


@dataclass
class ExperimentParams:
    N: int = 10
    samples: int = 100
    sampler: str = "grid"  # grid | random
    seed: int = 0
    eps: Fraction = Fraction(1, 100)
    eps_prime: Fraction | None = None  # derived from eps when None
    budget: int = 10_000  # edge crossings per phi-step
    level: int = 0  # section the samples start on


@dataclass
class ReturnRecord:
    start: SectionPoint
    returns: list = field(default_factory=list)  # (SectionPoint, steps, squared length)
    min_corner_distance: object = None
    status: str = "not_returned"  # returned | not_returned | escape | singular
    return_step: int | None = None


@dataclass
class RecurrenceStats:
    params: dict
    n_samples: int
    returned: int
    not_returned: int
    escaped: int
    singular: int
    budget_exhausted: int  # subset of not_returned
    histogram: dict
    records: list = field(default_factory=list, repr=False)

    def fraction(self, count: int) -> Fraction:
        return Fraction(count, self.n_samples) if self.n_samples else Fraction(0)

    @property
    def fraction_returned(self) -> Fraction:
        return self.fraction(self.returned)

    def summary(self) -> dict:
        f = lambda c: fmt_rational(self.fraction(c))
        return {
            "params": self.params,
            "samples": self.n_samples,
            "fractionReturned": f(self.returned),
            "fractionNotReturned": f(self.not_returned),
            "fractionEscaped": f(self.escaped),
            "fractionSingular": f(self.singular),
            "escapes": self.escaped,
            "singulars": self.singular,
            "budgetExhausted": self.budget_exhausted,
            "returnTimeHistogram": {str(k): v for k, v in sorted(self.histogram.items())},
        }


def auto_eps_prime(eps, H0, N: int):
    """Corner-neighbourhood size eps * H_0 / (N * 4(2N+1))."""
    return Fraction(eps) * H0 / (N * 4 * (2 * N + 1))


def _all_edges(st: Staircase) -> dict:
    return st.section_edges("L")


def first_return(st: Staircase, sp: SectionPoint, target_levels=None, budget: int = 10_000,
                 max_steps: int = 100_000, edges: dict | None = None):
    """Next hit of the target sections, composing hits on intermediate L_n.

    Returns (SectionPoint, phi-steps, flow parameter).  By default the
    target is the starting level itself.
    """
    if target_levels is None:
        target_levels = {sp.level}
    target_levels = set(target_levels)
    edges = edges if edges is not None else _all_edges(st)
    d = sp.direction
    cur, t = sp, 0
    for steps in range(1, max_steps + 1):
        cur, traj = flow_to_section(st, cur, d, budget=budget, edges=edges)
        t += traj.t
        if cur.level in target_levels:
            return cur, steps, t
    raise BudgetExhausted(f"no return to {sorted(target_levels)} within {max_steps} steps")


def phi(st: Staircase, sp: SectionPoint, budget: int = 10_000, edges: dict | None = None):
    """One application of the first-return map to the union of L sections."""
    hit, _ = flow_to_section(st, sp, sp.direction, budget=budget,
                             edges=edges if edges is not None else _all_edges(st))
    return hit


def phi_inverse(st: Staircase, sp: SectionPoint, budget: int = 10_000,
                edges: dict | None = None) -> SectionPoint:
    """Previous hit of the union of L sections (flow with -d)."""
    back = -sp.direction
    hit, _ = flow_to_section(st, SectionPoint(sp.family, sp.level, sp.r, back), back,
                             budget=budget, edges=edges if edges is not None else _all_edges(st))
    return SectionPoint(hit.family, hit.level, hit.r, sp.direction)


def sample_offsets(length, K: int, sampler: str = "grid", seed: int = 0) -> list:
    """K section offsets in (0, length).

    The grid sits at (k + 1/2)/K so it never lands on the section ends;
    the random sampler draws 32-bit dyadic fractions from a seeded stream.
    """
    if sampler == "grid":
        return [Fraction(2 * k + 1, 2 * K) * length for k in range(K)]
    if sampler == "random":
        rng = np.random.default_rng(seed)
        ks = rng.integers(1, 2**32, size=K)
        return [Fraction(int(k), 2**32) * length for k in ks]
    raise ValueError(f"unknown sampler {sampler!r}")


def _corner_distance(st: Staircase, sp: SectionPoint):
    sec = cross_section(st, "L", sp.level)
    return min(abs(sp.r - c) for c in sec.corner_offsets)


def recurrence_experiment(st: Staircase, d: Direction, params: ExperimentParams) -> RecurrenceStats:
    """Iterate phi up to N times from samples on L_level; count revisits of L_level."""
    if d.dx == 0:
        raise NotTransverse("vertical directions never cross the L sections")
    H0 = cross_section(st, "L", params.level).length
    offsets = sample_offsets(H0, params.samples, params.sampler, params.seed)
    edges = _all_edges(st)
    hist = Counter()
    counts = Counter()
    records = []
    for r in offsets:
        sp = SectionPoint("L", params.level, r, d)
        rec = ReturnRecord(sp)
        try:
            rec.min_corner_distance = _corner_distance(st, sp)
            cur, t = sp, 0
            if rec.min_corner_distance == 0:
                raise SingularBeforeSection("sample on a corner")
            for step in range(1, params.N + 1):
                cur, traj = flow_to_section(st, cur, d, budget=params.budget, edges=edges)
                t += traj.t
                rec.min_corner_distance = min(rec.min_corner_distance, _corner_distance(st, cur))
                if cur.level == params.level:
                    rec.returns.append((cur, step, t * t * d.norm2))
                    rec.status, rec.return_step = "returned", step
                    hist[step] += 1
                    break
        except SingularBeforeSection:
            rec.status = "singular"
        except WindowEscape:
            rec.status = "escape"
        except BudgetExhausted:
            rec.status = "not_returned"
            counts["budget"] += 1
        counts[rec.status] += 1
        records.append(rec)
    p = _echo(params, direction=d, levels=st.levels)
    return RecurrenceStats(p, len(offsets), counts["returned"], counts["not_returned"],
                           counts["escape"], counts["singular"], counts["budget"], dict(hist),
                           records)


def _echo(params: ExperimentParams, **extra) -> dict:
    out = {}
    for k, v in asdict(params).items():
        out[k] = fmt_rational(v) if isinstance(v, Fraction) else v
    for k, v in extra.items():
        out[k] = str(v) if not isinstance(v, (int, str, list, tuple)) else v
    out = {k: (list(v) if isinstance(v, tuple) else v) for k, v in out.items()}
    return out


def records_csv(stats: RecurrenceStats) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r", "status", "return_step", "min_corner_distance"])
    for rec in stats.records:
        w.writerow([fmt_rational(rec.start.r), rec.status,
                    "" if rec.return_step is None else rec.return_step,
                    "" if rec.min_corner_distance is None else fmt_rational(rec.min_corner_distance)])
    return buf.getvalue()


# --------------------------------------------------------------------------
# corner proximity (the bad set C)

@dataclass
class ProximityReport:
    eps: Fraction
    eps_prime: Fraction
    N: int
    samples: int
    bad: int
    escaped: int
    neighborhood_length: Fraction  # total length of the corner neighbourhoods in D_N
    H0: Fraction

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.bad, self.samples) if self.samples else Fraction(0)

    @property
    def predicted(self) -> Fraction:
        """N * |B| / H_0, the measure-preservation bound on the bad fraction."""
        return self.N * self.neighborhood_length / self.H0

    @property
    def sigma(self) -> float:
        p = float(self.predicted)
        return math.sqrt(max(p * (1 - p), 0.0) / self.samples) if self.samples else 0.0

    @property
    def ok(self) -> bool:
        return float(self.fraction) <= float(self.predicted) + 3 * self.sigma

    def summary(self) -> dict:
        return {"eps": fmt_rational(self.eps), "epsPrime": fmt_rational(self.eps_prime),
                "N": self.N, "samples": self.samples, "bad": self.bad,
                "escaped": self.escaped, "fraction": fmt_rational(self.fraction),
                "bound": fmt_rational(self.predicted), "sigma": self.sigma, "ok": self.ok}


def corner_proximity(st: Staircase, d: Direction, params: ExperimentParams) -> ProximityReport:
    """Fraction of L_0 whose phi-images 0..N-1 come near a corner of D_N.

    Each raw corner of L_n (|n| <= N) carries a neighbourhood of total
    length eps', i.e. offsets within eps'/2 of it, so the union over the
    4(2N+1) corners has length at most 4(2N+1) eps'.  Orbits hitting a
    corner outright count as bad.
    """
    N = params.N
    H0 = cross_section(st, "L", params.level).length
    eps_prime = params.eps_prime
    if eps_prime is None:
        eps_prime = auto_eps_prime(params.eps, H0, N) if N > 0 else Fraction(0)
    eps_prime = Fraction(eps_prime)
    half = eps_prime / 2
    cs = corners(st, "L", N)
    edges = _all_edges(st)
    offsets = sample_offsets(H0, params.samples, params.sampler, params.seed)
    bad = escaped = 0

    def near(sp):
        if abs(sp.level) > N or eps_prime == 0:
            return False
        return any(abs(sp.r - c) < half for c in cs.per_level[sp.level])

    for r in offsets:
        cur = SectionPoint("L", params.level, r, d)
        try:
            for i in range(N):
                if near(cur):
                    bad += 1
                    break
                if i == N - 1:
                    break
                cur = phi(st, cur, params.budget, edges)
        except SingularBeforeSection:
            bad += 1 if eps_prime > 0 else 0
        except (WindowEscape, BudgetExhausted):
            escaped += 1
    return ProximityReport(Fraction(params.eps), eps_prime, N, len(offsets), bad, escaped,
                           cs.raw_count * eps_prime, H0)


# --------------------------------------------------------------------------
# paired orbits on a staircase and its periodic approximant

def divergence_constant(d: Direction, crossings_per_step: int):
    """C with |offset deviation after i returns| <= i * C * delta.

    Along a common itinerary the transverse coordinate x*dy - y*dx changes
    at each crossing by a rectangle width times dy or a height times dx, so
    two surfaces whose dimensions differ by at most delta drift apart by
    delta*max(|dx|,|dy|) per crossing.  Converting back to an offset on a
    vertical section divides by |dx|; the section's bottom origin and the
    base of the stacked edge add at most 2 delta each at both ends.
    """
    slope = abs(Fraction(d.dy) / Fraction(d.dx))
    return 4 + crossings_per_step * max(Fraction(1), slope)


def step_bound(d: Direction, crossings: int, delta):
    """Per-sample bound delta * (4 + n * max(1, |dy/dx|)) after n crossings."""
    slope = abs(Fraction(d.dy) / Fraction(d.dx))
    return delta * (4 + crossings * max(Fraction(1), slope))


@dataclass
class PairedSample:
    r: object
    steps: int = 0  # phi-steps compared with matching itineraries
    max_deviation: object = 0
    disagreement: int | None = None  # step where itineraries first differed
    stop: str = "done"  # done | escape | singular | budget
    near_corner: bool = False  # reference orbit came within eps' of a corner
    violations: int = 0  # steps where deviation exceeded the per-step bound
    deviations: list = field(default_factory=list)  # (step, crossings, deviation)


@dataclass
class DivergenceReport:
    match: WindowMatch
    direction: Direction
    samples: list
    K: int  # max crossings per phi-step on the reference orbits
    C: object

    @property
    def violations(self) -> int:
        """Steps (on good-set samples) where deviation > i * C * delta."""
        delta = self.match.deviation
        bad = 0
        for s in self.samples:
            for step, _, dev in s.deviations:
                if dev > step * self.C * delta:
                    bad += 1
        return bad

    @property
    def itinerary_failures(self) -> int:
        return sum(1 for s in self.samples if s.disagreement is not None and not s.near_corner)

    @property
    def max_deviation(self):
        return max((s.max_deviation for s in self.samples), default=0)

    def summary(self) -> dict:
        return {"M": self.match.M, "N": self.match.N,
                "delta": fmt_rational(self.match.deviation), "direction": str(self.direction),
                "samples": len(self.samples), "K": self.K, "C": fmt_rational(self.C),
                "maxDeviation": fmt_rational(self.max_deviation),
                "violations": self.violations,
                "itineraryFailures": self.itinerary_failures,
                "disagreements": sum(1 for s in self.samples if s.disagreement is not None),
                "stops": dict(Counter(s.stop for s in self.samples))}


def _itinerary(traj, shift: int) -> tuple:
    return tuple((e.source.level - shift, e.source.kind, e.side) for e in traj.events)


def divergence_compare(st_v: Staircase, st_plus: Staircase, match: WindowMatch, d: Direction,
                       samples, N: int, budget: int = 10_000) -> DivergenceReport:
    """Trace paired orbits from L_M (on T_v) and L_0 (on T_v+) for N returns.

    Sections are identified through their common bottom origin, so both
    orbits start at the same offset r.  ``samples`` is a list of offsets or
    a sample count (grid on L_0 of the approximant).
    """
    if isinstance(samples, int):
        samples = sample_offsets(cross_section(st_plus, "L", 0).length, samples)
    M = match.M
    ev, ep = _all_edges(st_v), _all_edges(st_plus)
    eps_prime = match.eps_prime
    out, K = [], 0
    for r in samples:
        ps = PairedSample(r)
        out.append(ps)
        try:
            a = SectionPoint("L", M, r, d)
            b = SectionPoint("L", 0, r, d)
            if r >= cross_section(st_v, "L", M).length:
                ps.stop, ps.disagreement = "unidentified", 0
                continue
            sa, sb = section_start(st_v, a), section_start(st_plus, b)
        except StartsAtCorner:
            ps.stop = "singular"
            continue
        crossings = 0
        for i in range(1, N + 1):
            ta = trace(st_v, sa, d, budget=budget, sections=ev)
            tb = trace(st_plus, sb, d, budget=budget, sections=ep)
            if tb.status == "section":
                K = max(K, tb.crossings)
            if ta.status != "section" or tb.status != "section":
                stop = ta.status if ta.status != "section" else tb.status
                if "singular" in (ta.status, tb.status):
                    ps.near_corner = True  # a corner is distance 0 from the orbit
                same = _itinerary(ta, M) == _itinerary(tb, 0) and ta.status == tb.status
                if not same and ps.disagreement is None:
                    ps.disagreement = i
                ps.stop = stop
                break
            if _itinerary(ta, M) != _itinerary(tb, 0):
                ps.disagreement = i
                break
            crossings += tb.crossings
            (_, ra), (lb, rb) = ta.detail, tb.detail
            dev = abs(ra - rb)
            ps.steps = i
            ps.max_deviation = max(ps.max_deviation, dev)
            ps.deviations.append((i, crossings, dev))
            if dev > step_bound(d, crossings, match.deviation):
                ps.violations += 1
            secb = cross_section(st_plus, "L", lb)
            if eps_prime and min(abs(rb - c) for c in secb.corner_offsets) < eps_prime:
                ps.near_corner = True
            sa, sb = ta.end, tb.end
    C = divergence_constant(d, K)
    return DivergenceReport(match, d, out, K, C)
