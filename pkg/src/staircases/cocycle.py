"""Quotients of periodic staircases, their return IETs and the Z-cocycle.

A periodic staircase covers a compact quotient with deck group Z.  The
first return of the quotient flow to a cross-section is an interval
exchange R; recording how many periods each piece is displaced in the
cover gives an integer cocycle f, and the cover flow is the skew product
(x, k) -> (Rx, k + f(x)).
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .flow import (EPS_SING, BudgetExhausted, Direction, NotTransverse, SurfPoint, trace)
from .geometry import (InvalidParams, RectRef, Segment, Staircase, build_param_quotient,
                       build_square_quotient)
from .symbolic import BinarySeq, ParamSeq, bits_to_params, fmt_rational, level_square_range


class NotPeriodic(ValueError):
    pass


class UnresolvedBreakpoint(RuntimeError):
    pass


class TilingError(AssertionError):
    pass


@dataclass
class QuotientSurface:
    st: Staircase
    source: object
    period: int
    kind: str  # "square" (symbol period) or "rect" (level period)

    @property
    def deck_vector(self) -> tuple:
        return self.st.deck_vector

    @property
    def area(self):
        return self.st.area

    @property
    def cell_count(self) -> int:
        return len(self.st.cells)

    def section(self, family: str = "L", level: int = 0) -> tuple:
        """Stacked segments of a section on the quotient.

        ``L`` is the image of L_level; ``D`` is the union of the left sides
        of all quotient squares (square quotients only), in index order.
        """
        if self.kind == "rect":
            if family != "L":
                raise ValueError("rectangle quotients only carry L sections")
            return self.st.section_segments("L", level % self.period)
        if family == "D":
            return tuple(Segment(RectRef(j, "square"), Fraction(j), Fraction(1))
                         for j in range(self.period))
        if family != "L":
            raise ValueError(f"unknown section family {family!r}")
        v = bits_to_params(self.source)
        _, corner, top = level_square_range(v, level)
        return tuple(Segment(RectRef(j % self.period, "square"), Fraction(i), Fraction(1))
                     for i, j in enumerate(range(corner, top + 1)))


def build_quotient(source, p: int | None = None) -> QuotientSurface:
    """Compact quotient of a periodic BinarySeq (symbol period) or ParamSeq (level period)."""
    if p is None:
        p = source.period
    if p is None:
        raise NotPeriodic(f"{source} has no declared period")
    try:
        if isinstance(source, BinarySeq):
            return QuotientSurface(build_square_quotient(source, p), source, p, "square")
        if isinstance(source, ParamSeq):
            return QuotientSurface(build_param_quotient(source, p), source, p, "rect")
    except (InvalidParams, ValueError) as exc:
        raise NotPeriodic(str(exc)) from exc
    raise TypeError(f"cannot build a quotient of {type(source).__name__}")


# --------------------------------------------------------------------------
# interval exchange extraction

@dataclass
class IETData:
    length: object
    breakpoints: list  # 0 = b_0 < ... < b_k = length
    translations: list  # image of [b_i, b_{i+1}) is that interval + translations[i]
    f: list  # deck displacement of each interval, in periods
    direction: Direction | None = None
    section: tuple = ("L", 0)
    exact: bool = True

    def __post_init__(self):
        k = len(self.breakpoints) - 1
        if k < 1 or len(self.translations) != k or len(self.f) != k:
            raise ValueError("breakpoints, translations and f disagree in size")

    @property
    def lengths(self) -> list:
        return [b - a for a, b in zip(self.breakpoints, self.breakpoints[1:])]

    @property
    def permutation(self) -> list:
        """Rank of each interval's image, left to right."""
        starts = [b + t for b, t in zip(self.breakpoints, self.translations)]
        order = sorted(range(len(starts)), key=starts.__getitem__)
        rank = [0] * len(starts)
        for pos, i in enumerate(order):
            rank[i] = pos
        return rank

    def interval(self, x) -> int:
        i = np.searchsorted(np.asarray([float(b) for b in self.breakpoints]), float(x), "right") - 1
        i = int(min(max(i, 0), len(self.f) - 1))
        # correct float rounding on exact data
        while i > 0 and x < self.breakpoints[i]:
            i -= 1
        while i + 1 < len(self.f) and x >= self.breakpoints[i + 1]:
            i += 1
        return i

    def __call__(self, x):
        i = self.interval(x)
        return x + self.translations[i], self.f[i]

    def check_tiling(self) -> None:
        """Images must tile [0, length) without gaps or overlaps."""
        tol = 0 if self.exact else 10 * EPS_SING
        pieces = sorted((b + t, b + t + ln) for b, t, ln in
                        zip(self.breakpoints, self.translations, self.lengths))
        cur = 0
        for a, b in pieces:
            if abs(a - cur) > tol:
                raise TilingError(f"image intervals leave a gap or overlap at {a}")
            cur = b
        if abs(cur - self.length) > tol:
            raise TilingError("image intervals do not end at the section length")

    def as_dict(self) -> dict:
        return {"section": list(self.section),
                "direction": None if self.direction is None else str(self.direction),
                "length": fmt_rational(self.length),
                "breakpoints": [fmt_rational(b) for b in self.breakpoints],
                "translations": [fmt_rational(t) for t in self.translations],
                "f": list(self.f), "permutation": self.permutation,
                "holonomy": fmt_rational(holonomy_check(self).value)}


def _locate(segs, x):
    for seg in segs:
        if seg.base <= x < seg.base + seg.length:
            return seg, x - seg.base
    raise ValueError(f"offset {x} outside the section")


def _inward_corner(c, d: Direction):
    """Corner from which d points strictly into the cell, or None."""
    if d.dx == 0 or d.dy == 0:
        return None
    x = 0 if d.dx > 0 else c.width
    y = 0 if d.dy > 0 else c.height
    return x, y


def _close(a, b, exact: bool, eps: float) -> bool:
    return a == b if exact else abs(a - b) <= 10 * eps


def _dedupe(values, exact: bool, eps: float):
    values = sorted(values)
    if exact:
        return sorted(set(values))
    out = []
    for v in values:
        if out and abs(v - out[-1]) <= eps:
            continue  # the same point reached along two rays
        if out and abs(v - out[-1]) <= 10 * eps:
            raise UnresolvedBreakpoint(f"breakpoints {out[-1]} and {v} are not separated")
        out.append(v)
    return out


def extract_iet(q: QuotientSurface, d: Direction, family: str = "L", level: int = 0,
                budget: int = 100_000, merge: bool = True, eps: float = EPS_SING) -> IETData:
    """First-return interval exchange of the quotient flow on one section.

    Breakpoints are the section's joints plus the backward separatrices of
    every cell corner; each piece is checked to move rigidly by tracing
    three of its points.  Adjacent pieces with equal translation and f are
    merged unless ``merge`` is off.
    """
    if d.dx == 0:
        raise NotTransverse("vertical directions never cross the section")
    st = q.st
    segs = q.section(family, level)
    edges = {(seg.ref, "W"): (0, seg.base) for seg in segs}
    H = sum((seg.length for seg in segs), Fraction(0))
    exact = d.exact
    if not exact:
        H = float(H)

    cuts = [seg.base for seg in segs] + [H]
    back = -d
    for ref, c in sorted(st.cells.items()):
        corner = _inward_corner(c, back)
        if corner is None:
            continue
        tr = trace(st, SurfPoint(ref, *corner), back, budget=budget, sections=edges,
                   record=False, eps=eps, from_vertex=True)
        if tr.inconclusive:
            raise UnresolvedBreakpoint(f"separatrix from {ref} passes within {eps} of a corner")
        if tr.status == "section":
            cuts.append(tr.detail[1])
        elif tr.status == "budget":
            raise BudgetExhausted(f"separatrix from {ref} did not reach the section", tr)
    bps = _dedupe([float(b) if not exact else b for b in cuts], exact, eps)
    if not exact:
        bps[0], bps[-1] = 0.0, H

    trans, fs = [], []
    for a, b in zip(bps, bps[1:]):
        ln = b - a
        moves = []
        for frac in (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)):
            x = a + (frac * ln if exact else float(frac) * ln)
            seg, y = _locate(segs, x)
            tr = trace(st, SurfPoint(seg.ref, 0, y), d, budget=budget, sections=edges,
                       record=False, eps=eps)
            if tr.status != "section" or tr.inconclusive:
                raise UnresolvedBreakpoint(f"sample {x} did not return cleanly ({tr.status})")
            moves.append((tr.detail[1] - x, tr.deck))
        ts = [t for t, _ in moves]
        if len({k for _, k in moves}) != 1 or not _close(min(ts), max(ts), exact, eps):
            raise UnresolvedBreakpoint(f"interval [{a}, {b}) does not move rigidly: {moves}")
        trans.append(moves[1][0])
        fs.append(moves[1][1])

    if merge:
        mb, mt, mf = [bps[0]], [], []
        for i, (t, k) in enumerate(zip(trans, fs)):
            if mt and _close(mt[-1], t, exact, eps) and mf[-1] == k:
                mb[-1] = bps[i + 1]
                continue
            mt.append(t)
            mf.append(k)
            mb.append(bps[i + 1])
        bps, trans, fs = mb, mt, mf
    iet = IETData(H, bps, trans, fs, d, (family, level), exact)
    iet.check_tiling()
    return iet


@dataclass(frozen=True)
class Holonomy:
    value: object

    @property
    def ok(self) -> bool:
        return self.value == 0 if not isinstance(self.value, float) else abs(self.value) < 1e-9

    def as_dict(self) -> dict:
        return {"holonomy": fmt_rational(self.value), "zero": self.ok}


def holonomy_check(iet: IETData) -> Holonomy:
    """Integral of the cocycle: sum of interval length times f."""
    return Holonomy(sum((ln * k for ln, k in zip(iet.lengths, iet.f)),
                        Fraction(0) if iet.exact else 0.0))


# --------------------------------------------------------------------------
# skew product

@dataclass
class SkewProduct:
    base: IETData

    def __call__(self, x, k: int):
        y, f = self.base(x)
        return y, k + f

    def orbit(self, x, k: int, n: int) -> list:
        out = [(x, k)]
        for _ in range(n):
            x, k = self(x, k)
            out.append((x, k))
        return out


@dataclass
class SkewStats:
    iterations: int
    starts: list
    max_excursion: list
    zero_visits: list
    first_return: list  # None when the fiber never came back to 0
    final: list

    @property
    def fraction_returned(self) -> float:
        return sum(1 for r in self.first_return if r is not None) / len(self.starts)

    def as_dict(self) -> dict:
        return {"iterations": self.iterations, "starts": len(self.starts),
                "fractionReturned": self.fraction_returned,
                "maxExcursion": max(self.max_excursion, default=0),
                "meanZeroVisits": float(np.mean(self.zero_visits)) if self.zero_visits else 0.0}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x0", "max_abs_k", "zero_visits", "first_return", "final_k"])
        for row in zip(self.starts, self.max_excursion, self.zero_visits, self.first_return,
                       self.final):
            x0, m, z, fr, fk = row
            w.writerow([repr(float(x0)), m, z, "" if fr is None else fr, fk])
        return buf.getvalue()


def skew_recurrence_sim(sp: SkewProduct, starts=100, iterations: int = 100_000,
                        seed: int = 0) -> SkewStats:
    """Iterate (x, k) from k = 0 at many base points at once, in floats.

    ``starts`` is a list of base points or a count of seeded uniform ones.
    """
    iet = sp.base
    H = float(iet.length)
    if isinstance(starts, int):
        rng = np.random.default_rng(seed)
        starts = list(rng.uniform(0.0, H, size=starts))
    x = np.array([float(s) for s in starts])
    bps = np.array([float(b) for b in iet.breakpoints[:-1]])
    tr = np.array([float(t) for t in iet.translations])
    fv = np.array(iet.f, dtype=np.int64)
    k = np.zeros(len(x), dtype=np.int64)
    top = np.nextafter(H, 0.0)
    maxk = np.zeros(len(x), dtype=np.int64)
    zeros = np.zeros(len(x), dtype=np.int64)
    first = np.full(len(x), -1, dtype=np.int64)
    for n in range(1, iterations + 1):
        idx = np.searchsorted(bps, x, side="right") - 1
        np.clip(idx, 0, len(fv) - 1, out=idx)
        x = np.clip(x + tr[idx], 0.0, top)
        k += fv[idx]
        np.maximum(maxk, np.abs(k), out=maxk)
        hit = k == 0
        zeros += hit
        first[(first < 0) & hit] = n
    return SkewStats(iterations, [float(s) for s in starts], maxk.tolist(), zeros.tolist(),
                     [None if v < 0 else int(v) for v in first], k.tolist())


def iet_json(iet: IETData, extra: dict | None = None) -> str:
    data = iet.as_dict()
    if extra:
        data.update(extra)
    return json.dumps(data, indent=2, sort_keys=True)
