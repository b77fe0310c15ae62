"""Straight-line flow on a staircase, one rectangle at a time.

Exact mode runs on Fractions end to end.  Path length is carried as the
flow parameter ``t`` (position = start + t * d), so the Euclidean length is
``t * |d|`` and its square ``t**2 * |d|**2`` stays rational.  Float mode is
for irrational directions only; every near-tie between two exits within
``EPS_SING`` is reported as a near-singular outcome, never resolved by
guessing.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .geometry import RectRef, Staircase, cross_section

EPS_SING = 1e-12


class ZeroDirection(ValueError):
    pass


class StartsAtCorner(ValueError):
    pass


class NotTransverse(ValueError):
    pass


class FlowStop(RuntimeError):
    """Base for traces that end before reaching the requested section."""

    def __init__(self, msg, trajectory=None):
        super().__init__(msg)
        self.trajectory = trajectory


class SingularBeforeSection(FlowStop):
    pass


class WindowEscape(FlowStop):
    pass


class BudgetExhausted(FlowStop):
    pass


@dataclass(frozen=True)
class Direction:
    dx: object
    dy: object

    def __post_init__(self):
        if self.dx == 0 and self.dy == 0:
            raise ZeroDirection("direction vector is zero")

    @classmethod
    def of(cls, dx, dy) -> "Direction":
        """Rational directions are reduced to a coprime integer pair."""
        if isinstance(dx, float) or isinstance(dy, float):
            n = math.hypot(dx, dy)
            if n == 0:
                raise ZeroDirection("direction vector is zero")
            return cls(dx / n, dy / n)
        dx, dy = Fraction(dx), Fraction(dy)
        if dx == 0 and dy == 0:
            raise ZeroDirection("direction vector is zero")
        den = math.lcm(dx.denominator, dy.denominator)
        a, b = int(dx * den), int(dy * den)
        g = math.gcd(a, b)
        return cls(Fraction(a // g), Fraction(b // g))

    @property
    def exact(self) -> bool:
        return not (isinstance(self.dx, float) or isinstance(self.dy, float))

    @property
    def norm2(self):
        return self.dx * self.dx + self.dy * self.dy

    def __neg__(self) -> "Direction":
        return Direction(-self.dx, -self.dy)

    def __str__(self) -> str:
        return f"({self.dx},{self.dy})"


@dataclass(frozen=True)
class SurfPoint:
    rect: RectRef
    x: object
    y: object


@dataclass(frozen=True)
class SectionPoint:
    family: str
    level: int
    r: object
    direction: Direction


@dataclass(frozen=True)
class Step:
    t: object
    x: object
    y: object
    exit: str  # a side "N"/"E"/"S"/"W" or a corner "NE"/"NW"/"SE"/"SW"
    near_singular: bool = False

    @property
    def corner(self) -> bool:
        return len(self.exit) == 2


@dataclass(frozen=True)
class Event:
    source: RectRef
    side: str
    target: RectRef
    t: object  # cumulative flow parameter at the crossing
    deck: int  # cumulative deck shift after the crossing
    x: object  # exit point in the source rectangle
    y: object

    def squared_length(self, d: Direction):
        return self.t * self.t * d.norm2


@dataclass
class Trajectory:
    start: SurfPoint
    direction: Direction
    events: list = field(default_factory=list)
    status: str = "running"  # budget | singular | section | escape
    detail: object = None
    t: object = 0
    end: SurfPoint | None = None
    deck: int = 0
    crossings: int = 0
    inconclusive: bool = False

    def squared_length(self):
        return self.t * self.t * self.direction.norm2


def advance_in_rect(width, height, x, y, d: Direction, eps: float = EPS_SING) -> Step:
    """First boundary point hit by the ray (x, y) + t d inside a w x h box."""
    dx, dy = d.dx, d.dy
    if dx == 0 and dy == 0:
        raise ZeroDirection("direction vector is zero")
    tx = (width - x) / dx if dx > 0 else (-x / dx if dx < 0 else None)
    ty = (height - y) / dy if dy > 0 else (-y / dy if dy < 0 else None)
    ew = "E" if dx > 0 else "W"
    ns = "N" if dy > 0 else "S"
    if ty is None or (tx is not None and tx < ty):
        near = (not d.exact) and ty is not None and abs(tx - ty) <= eps
        if d.exact and ty is None and (y == 0 or y == height):
            # travelling along a horizontal edge: the exit is a vertex
            return Step(tx, width if dx > 0 else 0, y, ns_of(y, height) + ew)
        if near:
            return Step(tx, width if dx > 0 else 0, height if dy > 0 else 0, ns + ew, True)
        return Step(tx, width if dx > 0 else 0, y + tx * dy, ew)
    if tx is None or ty < tx:
        near = (not d.exact) and tx is not None and abs(tx - ty) <= eps
        if d.exact and tx is None and (x == 0 or x == width):
            return Step(ty, x, height if dy > 0 else 0, ns + ("E" if x == width else "W"))
        if near:
            return Step(ty, width if dx > 0 else 0, height if dy > 0 else 0, ns + ew, True)
        return Step(ty, x + ty * dx, height if dy > 0 else 0, ns)
    return Step(tx, width if dx > 0 else 0, height if dy > 0 else 0, ns + ew)


def ns_of(y, height) -> str:
    return "N" if y == height else "S"


def _is_corner(c, x, y) -> bool:
    return (x == 0 or x == c.width) and (y == 0 or y == c.height)


def _outflow_side(c, x, y, d: Direction):
    if x == 0 and d.dx < 0:
        return "W"
    if x == c.width and d.dx > 0:
        return "E"
    if y == 0 and d.dy < 0:
        return "S"
    if y == c.height and d.dy > 0:
        return "N"
    return None


def _enter(tc, side: str, x, y):
    """Entry point in the target rectangle after crossing ``side``."""
    if side == "E":
        return 0, y
    if side == "W":
        return tc.width, y
    if side == "N":
        return x, 0
    return x, tc.height


def trace(st: Staircase, p: SurfPoint, d: Direction, budget: int = 10_000,
          sections: dict | None = None, record: bool = True,
          eps: float = EPS_SING, from_vertex: bool = False) -> Trajectory:
    """Follow the flow from ``p`` until a stop condition.

    ``sections`` maps (ref, 'W') section edges to (level, base offset); the
    first strict-future crossing of one of them stops the trace with status
    ``section`` and ``detail = (level, offset)``.  Corners always stop the
    trace (status ``singular``); crossing an edge with no partner stops it
    with ``escape``; ``budget`` bounds the number of edge crossings.
    ``from_vertex`` allows a start at a corner when d points into the cell,
    which is how separatrices are launched.
    """
    if d.dx == 0 and d.dy == 0:
        raise ZeroDirection("direction vector is zero")
    cells, glue = st.cells, st.glue
    traj = Trajectory(p, d)
    ref, x, y = p.rect, p.x, p.y
    c = cells[ref]
    if _is_corner(c, x, y) and not from_vertex:
        raise StartsAtCorner(f"start {p} is a vertex")
    t = Fraction(0) if d.exact else 0.0
    deck = 0
    # a start on an outflow edge is first carried across it, uncounted
    side = _outflow_side(c, x, y, d)
    if side is not None:
        g = glue.get((ref, side))
        if g is None:
            traj.status, traj.detail, traj.end = "escape", (ref, side), p
            return traj
        tc = cells[g.target]
        x, y = _enter(tc, side, x, y)
        ref, c, deck = g.target, tc, deck + g.deck
    while True:
        if traj.crossings >= budget:
            traj.status = "budget"
            break
        step = advance_in_rect(c.width, c.height, x, y, d, eps)
        t += step.t
        if step.corner:
            x, y = step.x, step.y
            traj.status, traj.detail = "singular", (ref, step.exit)
            traj.inconclusive = step.near_singular
            break
        side = step.exit
        g = glue.get((ref, side))
        if g is None:
            x, y = step.x, step.y
            traj.status, traj.detail = "escape", (ref, side)
            break
        tc = cells[g.target]
        nx, ny = _enter(tc, side, step.x, step.y)
        deck += g.deck
        traj.crossings += 1
        if record:
            traj.events.append(Event(ref, side, g.target, t, deck, step.x, step.y))
        hit = None
        if sections is not None:
            if side == "E":
                hit = sections.get((g.target, "W"))
                if hit is not None:
                    hit = (hit[0], hit[1] + ny)
            elif side == "W":
                hit = sections.get((ref, "W"))
                if hit is not None:
                    hit = (hit[0], hit[1] + step.y)
        ref, c, x, y = g.target, tc, nx, ny
        if hit is not None:
            traj.status, traj.detail = "section", hit
            break
    traj.t, traj.deck = t, deck
    traj.end = SurfPoint(ref, x, y)
    return traj


def section_start(st: Staircase, sp: SectionPoint) -> SurfPoint:
    """Surface point of a section point (on the W edge of its rectangle)."""
    sec = cross_section(st, sp.family, sp.level)
    seg, y = sec.locate(sp.r)
    if y == 0:
        raise StartsAtCorner(f"offset {sp.r} is a corner of section {sp.family}{sp.level}")
    return SurfPoint(seg.ref, 0, y)


def flow_to_section(st: Staircase, p, d: Direction, family: str = "L",
                    levels=None, budget: int = 10_000, edges: dict | None = None):
    """First strict-future hit of the listed sections.

    ``p`` may be a SurfPoint or a SectionPoint.  Returns the SectionPoint
    hit together with the full trajectory; raises SingularBeforeSection,
    WindowEscape or BudgetExhausted otherwise.
    """
    if d.dx == 0:
        raise NotTransverse(f"direction {d} is parallel to the vertical sections")
    if isinstance(p, SectionPoint):
        p = section_start(st, p)
    if edges is None:
        edges = st.section_edges(family, levels)
    traj = trace(st, p, d, budget=budget, sections=edges, record=False)
    if traj.status == "section":
        level, r = traj.detail
        return SectionPoint(family, level, r, d), traj
    if traj.status == "singular":
        raise SingularBeforeSection(f"hit corner {traj.detail}", traj)
    if traj.status == "escape":
        raise WindowEscape(f"left the window through {traj.detail}", traj)
    raise BudgetExhausted(f"no section hit within {budget} crossings", traj)


def reverse(st: Staircase, traj: Trajectory, budget: int | None = None) -> Trajectory:
    """Trace back from the end of a trajectory with the opposite direction."""
    return trace(st, traj.end, -traj.direction, budget=budget or traj.crossings + 1)


def planar_path(st: Staircase, traj: Trajectory) -> list:
    """Planar segments of a recorded trajectory, for drawing."""
    def planar(ref, x, y):
        c = st.cells[ref]
        return (c.anchor[0] + x, c.anchor[1] + y)

    segs = []
    cur = planar(traj.start.rect, traj.start.x, traj.start.y)
    for ev in traj.events:
        segs.append((cur, planar(ev.source, ev.x, ev.y)))
        cur = planar(ev.target, *_enter(st.cells[ev.target], ev.side, ev.x, ev.y))
    if traj.end is not None:
        segs.append((cur, planar(traj.end.rect, traj.end.x, traj.end.y)))
    return segs


def events_csv(traj: Trajectory) -> str:
    """One row per crossing: level, kind, edge, cumulative squared length."""
    from .symbolic import fmt_rational

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "level", "kind", "edge", "target", "deck", "squared_length"])
    for i, ev in enumerate(traj.events, 1):
        w.writerow([i, ev.source.level, ev.source.kind, ev.side, str(ev.target), ev.deck,
                    fmt_rational(ev.squared_length(traj.direction))])
    detail = traj.detail
    if traj.status == "section":
        detail = f"{detail[0]}:{fmt_rational(detail[1])}"
    elif detail is not None:
        detail = f"{detail[0]}:{detail[1]}"
    w.writerow(["end", "", "", traj.status, detail or "", traj.deck,
                fmt_rational(traj.squared_length())])
    return buf.getvalue()
