"""Staircase surfaces as finite windows of a rectangle complex.

A :class:`Staircase` stores every materialized rectangle with its planar
anchor and a glue table mapping each directed edge ``(ref, side)`` to the
edge it is identified with.  Glued edges always have equal length and are
matched end to end, E with W and N with S, so a crossing keeps the local
coordinate along the edge.  Edges whose partner lies outside the
materialized window are simply absent from the table; the tracer reports
leaving through them as a window escape.

Rectangle widths follow the column reading: R^l_n is
l'_{n-1} x h_n and R^r_n is l'_n x h_n, so that R^r_n, R'_n and R^l_{n+1}
stack into one column of width l'_n.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .symbolic import (BinarySeq, FromBits, ParamSeq, UnresolvedRun, fmt_rational,
                       DEFAULT_MAX_RUN)

CONVENTION = "columns: R^l_n = l'_{n-1} x h_n, R^r_n = l'_n x h_n"

OPPOSITE = {"N": "S", "S": "N", "E": "W", "W": "E"}
KINDS = ("left", "main", "right", "prime")


class InvalidParams(ValueError):
    pass


class RangeTooSmall(ValueError):
    pass


class OutsideMaterialized(LookupError):
    pass


class WrongSurfaceKind(TypeError):
    pass


@dataclass(frozen=True, order=True)
class RectRef:
    level: int
    kind: str  # one of KINDS, or "square"

    def __str__(self) -> str:
        names = {"left": "Rl", "main": "R", "right": "Rr", "prime": "Rp", "square": "Q"}
        return f"{names[self.kind]}{self.level}"


@dataclass(frozen=True)
class Cell:
    ref: RectRef
    width: object
    height: object
    anchor: tuple

    def side_length(self, side: str):
        return self.height if side in "EW" else self.width


@dataclass(frozen=True)
class Glue:
    target: RectRef
    shift: tuple  # planar translation taking the source edge onto the target edge
    deck: int = 0  # period units gained by the crossing (quotients only)


@dataclass(frozen=True)
class Segment:
    ref: RectRef
    base: object  # offset of the bottom of this W edge along the section
    length: object


@dataclass(frozen=True)
class CrossSection:
    family: str
    level: int
    segments: tuple
    length: object
    origin: tuple  # planar bottom endpoint

    def locate(self, r):
        """Segment holding offset r, with the local height inside it."""
        if not 0 <= r < self.length:
            raise ValueError(f"offset {r} outside [0, {self.length})")
        for seg in self.segments:
            if r < seg.base + seg.length:
                return seg, r - seg.base
        raise AssertionError("unreachable")

    @property
    def corner_offsets(self) -> list:
        """Raw corners on the section: every segment's two endpoints."""
        out = [seg.base for seg in self.segments]
        out.append(self.length)
        return out


@dataclass(frozen=True)
class CornerSet:
    family: str
    per_level: dict  # level -> list of raw offsets (duplicates kept)

    @property
    def raw_count(self) -> int:
        return sum(len(v) for v in self.per_level.values())

    def distinct(self, level: int) -> list:
        length = max(self.per_level[level])
        return sorted({r for r in self.per_level[level] if r < length})


@dataclass(eq=False)
class Staircase:
    surface: str  # "rect" or "square"
    source: object
    levels: tuple  # inclusive materialized range
    cells: dict = field(default_factory=dict)
    glue: dict = field(default_factory=dict)
    period: int | None = None  # set on quotients
    deck_vector: tuple | None = None
    convention: str = CONVENTION

    def cell(self, ref: RectRef) -> Cell:
        try:
            return self.cells[ref]
        except KeyError:
            raise OutsideMaterialized(f"{ref} is not materialized") from None

    @property
    def is_quotient(self) -> bool:
        return self.period is not None

    @property
    def area(self):
        return sum(c.width * c.height for c in self.cells.values())

    def level_of(self, ref: RectRef) -> int:
        return ref.level

    # -- sections -------------------------------------------------------
    def section_segments(self, family: str, n: int) -> tuple:
        if family == "D":
            if self.surface != "square":
                raise WrongSurfaceKind("D sections exist only on square-tiled staircases")
            ref = RectRef(n, "square")
            self.cell(ref)
            return (Segment(ref, Fraction(0), Fraction(1)),)
        if family != "L":
            raise ValueError(f"unknown section family {family!r}")
        if self.surface != "rect":
            raise WrongSurfaceKind("L sections need the rectangle description")
        up = n + 1
        if self.is_quotient:
            up %= self.period
        segs, base = [], 0
        for ref in (RectRef(n, "right"), RectRef(n, "prime"), RectRef(up, "left")):
            if ref.kind == "prime" and ref not in self.cells:
                continue  # degenerate R'_n
            c = self.cell(ref)
            segs.append(Segment(ref, base, c.height))
            base = base + c.height
        return tuple(segs)

    def section_levels(self, family: str) -> list:
        lo, hi = self.levels
        if family == "D":
            return list(range(lo, hi + 1))
        if self.is_quotient:
            return list(range(self.period))
        return list(range(lo, hi))  # L_n needs level n+1

    def section_edges(self, family: str, levels=None) -> dict:
        """Map (ref, 'W') -> (level, base offset) over the given levels."""
        if levels is None:
            levels = self.section_levels(family)
        out = {}
        for n in levels:
            for seg in self.section_segments(family, n):
                out[(seg.ref, "W")] = (n, seg.base)
        return out


# --------------------------------------------------------------------------
# construction helpers

def _translation(a: Cell, side: str, b_anchor: tuple, b: Cell):
    ax, ay = a.anchor
    bx, by = b_anchor
    if side == "E":
        return (bx - ax - a.width, by - ay)
    if side == "W":
        return (bx + b.width - ax, by - ay)
    if side == "N":
        return (bx - ax, by - ay - a.height)
    return (bx - ax, by + b.height - ay)


class _Builder:
    """Collects cells and glue pairs over virtual (unwrapped) references."""

    def __init__(self, st: Staircase, virtual_cell, wrap=None):
        self.st = st
        self.virtual_cell = virtual_cell  # ref -> Cell with its true planar anchor, or None
        self.wrap = wrap  # ref -> (stored ref, deck) for quotients

    def _resolve(self, ref):
        if self.wrap is None:
            return (ref, 0) if ref in self.st.cells else (None, 0)
        return self.wrap(ref)

    def pair(self, a: RectRef, side: str, b: RectRef) -> None:
        """Glue ``a.side`` to ``b.opposite(side)``; a and b are virtual refs."""
        ra, da = self._resolve(a)
        rb, db = self._resolve(b)
        if ra is None or rb is None:
            return
        ca, cb = self.virtual_cell(a), self.virtual_cell(b)
        if ca.side_length(side) != cb.side_length(OPPOSITE[side]):
            raise InvalidParams(f"edge length mismatch gluing {a}.{side} to {b}")
        fwd = _translation(ca, side, cb.anchor, cb)
        self.st.glue[(ra, side)] = Glue(rb, fwd, db - da)
        self.st.glue[(rb, OPPOSITE[side])] = Glue(ra, (-fwd[0], -fwd[1]), da - db)


def param_anchors(v: ParamSeq, a: int, b: int) -> dict:
    """Bottom-left corners (x_n, y_n) of R^l_n for n in [a, b], with x_0 = y_0 = 0."""
    anchors = {0: (0, 0)}
    x, y = 0, 0
    for n in range(0, b):
        l, h, _, hp = v(n)
        x, y = x + v(n - 1)[2] + l, y + h + hp
        anchors[n + 1] = (x, y)
    x, y = 0, 0
    for n in range(-1, a - 1, -1):
        l, h, _, hp = v(n)
        x, y = x - v(n - 1)[2] - l, y - h - hp
        anchors[n] = (x, y)
    return {n: anchors[n] for n in range(a, b + 1)}


def _level_cells(v: ParamSeq, n: int, anchor: tuple) -> list:
    l, h, lp, hp = v(n)
    lp_prev = v(n - 1)[2]
    x, y = anchor
    cells = [Cell(RectRef(n, "left"), lp_prev, h, (x, y))]
    if l > 0:
        cells.append(Cell(RectRef(n, "main"), l, h, (x + lp_prev, y)))
    xr = x + lp_prev + l
    cells.append(Cell(RectRef(n, "right"), lp, h, (xr, y)))
    if hp > 0:
        cells.append(Cell(RectRef(n, "prime"), lp, hp, (xr, y + h)))
    return cells


def _level_pairs(bld: _Builder, v: ParamSeq, n: int) -> None:
    l, _, _, hp = v(n)
    left, main, right, prime = (RectRef(n, k) for k in KINDS)
    nxt = RectRef(n + 1, "left")
    if l > 0:
        bld.pair(left, "E", main)
        bld.pair(main, "E", right)
        bld.pair(main, "N", main)
    else:
        bld.pair(left, "E", right)
    bld.pair(right, "E", left)
    if hp > 0:
        bld.pair(right, "N", prime)
        bld.pair(prime, "N", nxt)
        bld.pair(prime, "E", prime)
    else:
        bld.pair(right, "N", nxt)
    bld.pair(nxt, "N", right)


def build_staircase(v: ParamSeq, levels: range) -> Staircase:
    """Materialize T_v on the given (inclusive-step-1) level range.

    Degenerate R_n (l_n = 0) and R'_n (h'_n = 0) are dropped and their two
    identifications are composed through, so every stored cell has positive
    width and height.
    """
    if len(levels) < 1:
        raise RangeTooSmall("need at least one level")
    a, b = levels[0], levels[-1]
    v.validate(a - 1, b + 1)
    anchors = param_anchors(v, a, b + 1)
    st = Staircase("rect", v, (a, b))
    virtual = {}
    for n in range(a, b + 2):
        for c in _level_cells(v, n, anchors[n]):
            virtual[c.ref] = c
            if n <= b:
                st.cells[c.ref] = c
    bld = _Builder(st, virtual.__getitem__)
    for n in range(a, b + 1):
        _level_pairs(bld, v, n)
    return st


def build_param_quotient(v: ParamSeq, period: int) -> Staircase:
    """One level period of T_v with level n+period identified to level n."""
    anchors = param_anchors(v, -1, 2 * period + 1)
    st = Staircase("rect", v, (0, period - 1), period=period)
    virtual = {}
    for n in range(-1, 2 * period + 2):
        for c in _level_cells(v, n, anchors[n]):
            virtual[c.ref] = c
            if 0 <= n < period:
                st.cells[c.ref] = c
    for n in range(period):
        for kind in KINDS:
            a, b = RectRef(n, kind), RectRef(n + period, kind)
            if (a in virtual) != (b in virtual) or (a in virtual and (
                    virtual[a].width, virtual[a].height) != (virtual[b].width, virtual[b].height)):
                raise InvalidParams(f"sequence is not periodic with period {period}")
    st.deck_vector = tuple(p - q for p, q in zip(anchors[period], anchors[0]))

    def wrap(ref):
        d, m = divmod(ref.level, period)
        return RectRef(m, ref.kind), d

    bld = _Builder(st, virtual.__getitem__, wrap)
    for n in range(period):
        _level_pairs(bld, v, n)
    return st


# --------------------------------------------------------------------------
# square-tiled staircases

def _run_end(s: BinarySeq, k: int, symbol: int, max_run: int) -> int:
    j = k
    while s(j) == symbol:
        j += 1
        if j - k > max_run:
            raise UnresolvedRun(f"run of {symbol}s from square {k} exceeds {max_run}")
    return j


def square_positions(s: BinarySeq, a: int, b: int) -> dict:
    """pos(n+1) = pos(n) + (0,1) if s_n = 0 else (1,0), pos(0) = (0,0)."""
    pos = {0: (0, 0)}
    x, y = 0, 0
    for n in range(0, b):
        x, y = (x + 1, y) if s(n) else (x, y + 1)
        pos[n + 1] = (x, y)
    x, y = 0, 0
    for n in range(-1, a - 1, -1):
        x, y = (x - 1, y) if s(n) else (x, y - 1)
        pos[n] = (x, y)
    return {n: pos[n] for n in range(a, b + 1)}


def _square_pairs(bld: _Builder, s: BinarySeq, squares, max_run: int) -> None:
    Q = lambda n: RectRef(n, "square")
    for n in squares:
        if s(n) == 1:
            bld.pair(Q(n), "E", Q(n + 1))
        else:
            bld.pair(Q(n), "N", Q(n + 1))
        if s(n - 1) == 0:  # n starts a row
            k = _run_end(s, n, 1, max_run)
            bld.pair(Q(n), "W", Q(k))
        else:  # n starts a column
            k = _run_end(s, n, 0, max_run)
            bld.pair(Q(n), "S", Q(k))


def build_square_tiled(s: BinarySeq, squares: range, max_run: int = DEFAULT_MAX_RUN) -> Staircase:
    """Unit squares ``squares`` of T_s with touching and run-closing gluings.

    A maximal 1-run s_k..s_{k+r-1} makes squares k..k+r a row (k.W glued to
    (k+r).E); a maximal 0-run makes them a column (k.S glued to (k+r).N).
    A square with s_{n-1} = s_n = 1 is a one-square column glued to itself,
    and symmetrically for rows.
    """
    a, b = squares[0], squares[-1]
    pos = square_positions(s, a, b)
    st = Staircase("square", s, (a, b))
    for n in range(a, b + 1):
        st.cells[RectRef(n, "square")] = Cell(RectRef(n, "square"), Fraction(1), Fraction(1),
                                              (Fraction(pos[n][0]), Fraction(pos[n][1])))

    def virtual(ref):
        if ref in st.cells:
            return st.cells[ref]
        return Cell(ref, Fraction(1), Fraction(1), (None, None))

    # partners outside the window never need anchors: _Builder drops them
    bld = _Builder(st, virtual)
    _square_pairs(bld, s, range(a, b + 1), max_run)
    return st


def build_square_quotient(s: BinarySeq, period: int | None = None,
                          max_run: int = DEFAULT_MAX_RUN) -> Staircase:
    """Squares 0..p-1 of a periodic T_s with square n+p identified to n."""
    p = period or s.period
    if p is None:
        raise ValueError("sequence is not periodic")
    word = s.window(0, p - 1)
    if s.window(p, 2 * p - 1) != word:
        raise ValueError(f"sequence is not periodic with period {p}")
    if len(set(word)) < 2:
        raise UnresolvedRun("constant sequence has an infinite run")
    ones = sum(word)
    deck = (Fraction(ones), Fraction(p - ones))
    st = Staircase("square", s, (0, p - 1), period=p, deck_vector=deck)
    base = square_positions(s, 0, p)
    for n in range(p):
        st.cells[RectRef(n, "square")] = Cell(RectRef(n, "square"), Fraction(1), Fraction(1),
                                              (Fraction(base[n][0]), Fraction(base[n][1])))

    def virtual(ref):
        d, m = divmod(ref.level, p)
        x, y = base[m]
        return Cell(ref, Fraction(1), Fraction(1), (x + d * deck[0], y + d * deck[1]))

    def wrap(ref):
        d, m = divmod(ref.level, p)
        return RectRef(m, "square"), d

    bld = _Builder(st, virtual, wrap)
    _square_pairs(bld, s, range(p), max_run)
    return st


# --------------------------------------------------------------------------
# queries

def locate(st: Staircase, point) -> tuple:
    """Rectangle holding a planar point (lower/left-closed convention)."""
    X, Y = point
    for ref, c in st.cells.items():
        ax, ay = c.anchor
        if ax <= X < ax + c.width and ay <= Y < ay + c.height:
            return ref, (X - ax, Y - ay)
    raise OutsideMaterialized(f"{point} lies outside the materialized window")


def cross_section(st: Staircase, family: str, n: int) -> CrossSection:
    segs = st.section_segments(family, n)
    length = sum((s.length for s in segs), Fraction(0))
    first = st.cell(segs[0].ref)
    return CrossSection(family, n, segs, length, first.anchor)


def section_length(st: Staircase, n: int):
    return cross_section(st, "L", n).length


def corners(st: Staircase, family: str, N: int) -> CornerSet:
    """Raw corners on sections of levels -N..N, duplicates kept.

    Each L_n carries four: its two ends and the two joints between its
    three stacked edges (which coincide when R'_n is degenerate).
    """
    per = {}
    for n in range(-N, N + 1):
        sec = cross_section(st, family, n)
        if family == "L":
            v = st.source
            _, h, _, hp = v(n)
            per[n] = [Fraction(0), h, h + hp, sec.length]
        else:
            per[n] = sec.corner_offsets
    return CornerSet(family, per)


# --------------------------------------------------------------------------
# vertices

_CCW = {"NE": ("E", "NW"), "NW": ("N", "SW"), "SW": ("W", "SE"), "SE": ("S", "NE")}


def vertex_sectors(st: Staircase, ref: RectRef, corner: str, limit: int = 64):
    """Walk counterclockwise around a vertex.

    Returns (sectors, deck) where sectors lists the (ref, corner) quarter
    turns met before closing up, or None if the walk leaves the window or
    exceeds ``limit`` sectors (an infinite-angle point of the cover).
    """
    sectors, deck = [(ref, corner)], 0
    cur, cc = ref, corner
    while True:
        side, nxt = _CCW[cc]
        g = st.glue.get((cur, side))
        if g is None:
            return None
        cur, cc, deck = g.target, nxt, deck + g.deck
        if (cur, cc) == (ref, corner):
            return sectors, deck
        sectors.append((cur, cc))
        if len(sectors) > limit:
            return None


def is_regular_vertex(st: Staircase, ref: RectRef, corner: str) -> bool:
    """True when the vertex has total angle 2 pi in the (covering) staircase.

    On a quotient the walk must also close with zero deck shift, otherwise
    the point lifts to an infinite-angle point of the staircase.
    """
    walk = vertex_sectors(st, ref, corner)
    return walk is not None and len(walk[0]) == 4 and walk[1] == 0


# --------------------------------------------------------------------------
# square / rectangle correspondence

def square_cell_map(v: ParamSeq, squares: range) -> dict:
    """Square index -> (RectRef, (column, row)) unit sub-cell of T_{v(s)}."""
    g = v.generator
    if not isinstance(g, FromBits):
        raise TypeError("need a sequence produced by bits_to_params")
    out = {}
    lo, hi = squares[0], squares[-1]
    n = 0
    while g.start(n - v.offset) > lo:
        n -= 1
    while True:
        k = g.start(n + v.offset)
        if k > hi:
            break
        a, b = g.runs(n + v.offset)
        c, t = k + a, k + a + b
        for j in range(k, t):
            if j == k:
                cell = (RectRef(n, "left"), (0, 0))
            elif j < c:
                cell = (RectRef(n, "main"), (j - k - 1, 0))
            elif j == c:
                cell = (RectRef(n, "right"), (0, 0))
            else:
                cell = (RectRef(n, "prime"), (0, j - c - 1))
            if lo <= j <= hi:
                out[j] = cell
        n += 1
    return out


def unit_neighbor(st: Staircase, ref: RectRef, sub: tuple, side: str):
    """Unit sub-cell across ``side`` in an integer-dimension staircase."""
    c = st.cell(ref)
    i, k = sub
    w, h = int(c.width), int(c.height)
    step = {"E": (1, 0), "W": (-1, 0), "N": (0, 1), "S": (0, -1)}[side]
    ni, nk = i + step[0], k + step[1]
    if 0 <= ni < w and 0 <= nk < h:
        return ref, (ni, nk)
    g = st.glue.get((ref, side))
    if g is None:
        return None
    t = st.cell(g.target)
    tw, th = int(t.width), int(t.height)
    if side == "E":
        return g.target, (0, k)
    if side == "W":
        return g.target, (tw - 1, k)
    if side == "N":
        return g.target, (i, 0)
    return g.target, (i, th - 1)


def check_square_equivalence(s: BinarySeq, squares: range) -> list:
    """Compare T_s with T_{v(s)} cell by cell; returns mismatches (empty = agree).

    Every glued edge of a square whose partner also lies in the window must
    map to the corresponding adjacency of unit sub-cells in the rectangle
    staircase.
    """
    from .symbolic import bits_to_params

    sq = build_square_tiled(s, squares)
    v = bits_to_params(s)
    cmap = square_cell_map(v, squares)
    levels = sorted({ref.level for ref, _ in cmap.values()})
    rect = build_staircase(v, range(levels[0] - 1, levels[-1] + 2))
    bad = []
    for j in squares:
        for side in "NESW":
            g = sq.glue.get((RectRef(j, "square"), side))
            if g is None or g.target.level not in cmap:
                continue
            ref, sub = cmap[j]
            got = unit_neighbor(rect, ref, sub, side)
            want = cmap[g.target.level]
            if got != want:
                bad.append((j, side, want, got))
    return bad


# --------------------------------------------------------------------------
# dumps

def to_json(st: Staircase) -> str:
    """Surface dump with exact rationals as "p/q" strings."""
    f = fmt_rational
    cells = [{"ref": str(ref), "level": ref.level, "kind": ref.kind,
              "width": f(c.width), "height": f(c.height),
              "anchor": [f(c.anchor[0]), f(c.anchor[1])]}
             for ref, c in sorted(st.cells.items())]
    glue = [{"edge": f"{ref}.{side}", "to": f"{g.target}.{OPPOSITE[side]}",
             "shift": [f(g.shift[0]), f(g.shift[1])], "deck": g.deck}
            for (ref, side), g in sorted(st.glue.items())]
    doc = {"surface": st.surface, "source": str(st.source), "levels": list(st.levels),
           "convention": st.convention, "period": st.period, "cells": cells, "glue": glue}
    if st.surface == "rect" and not st.is_quotient:
        lo, hi = st.levels
        doc["section_lengths"] = {str(n): f(section_length(st, n)) for n in range(lo, hi)}
    return json.dumps(doc, indent=2, sort_keys=True)


def to_svg(st: Staircase, scale: float = 40.0, paths=(), timestamp: str | None = None) -> str:
    """Planar development; ``paths`` are lists of planar points drawn on top."""
    xs = [float(c.anchor[0]) for c in st.cells.values()] + \
         [float(c.anchor[0] + c.width) for c in st.cells.values()]
    ys = [float(c.anchor[1]) for c in st.cells.values()] + \
         [float(c.anchor[1] + c.height) for c in st.cells.values()]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    W, H = (x1 - x0) * scale + 20, (y1 - y0) * scale + 20
    tx = lambda x: 10 + (float(x) - x0) * scale
    ty = lambda y: 10 + (y1 - float(y)) * scale
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W:.1f}" height="{H:.1f}">']
    if timestamp:
        out.append(f"<!-- generated {timestamp} -->")
    for ref, c in sorted(st.cells.items()):
        ax, ay = c.anchor
        out.append(f'<rect x="{tx(ax):.2f}" y="{ty(ay + c.height):.2f}" '
                   f'width="{float(c.width) * scale:.2f}" height="{float(c.height) * scale:.2f}" '
                   f'fill="#eef" stroke="#000" stroke-width="1"/>')
        out.append(f'<text x="{tx(ax + c.width / 2):.2f}" y="{ty(ay + c.height / 2):.2f}" '
                   f'font-size="10" text-anchor="middle">{ref}</text>')
    for path in paths:
        for (ax, ay), (bx, by) in path:
            out.append(f'<line x1="{tx(ax):.2f}" y1="{ty(ay):.2f}" x2="{tx(bx):.2f}" '
                       f'y2="{ty(by):.2f}" stroke="#c00" stroke-width="1"/>')
    out.append("</svg>")
    return "\n".join(out)
