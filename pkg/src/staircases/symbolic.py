"""Symbol spaces for staircases.

Binary sequences ``s`` in {0,1}^Z drive the square-tiled construction and
parameter sequences ``v = (l_n, h_n, l'_n, h'_n)`` drive the general
rectangle construction.  Both are lazily evaluated functions of the index,
so a sequence can be queried anywhere on Z (negative indices included) and
shifted without materializing anything.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Union

Quad = tuple  # (l, h, l', h')

DEFAULT_MAX_RUN = 4096


class UnresolvedRun(ValueError):
    """A maximal run of equal symbols does not close within the run bound."""


class NotFound(LookupError):
    """A finite search budget was exhausted (not a failure of the theory)."""


class ParseError(ValueError):
    pass


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**12)
    return Fraction(x)


def fmt_rational(x) -> str:
    """Serialize a scalar as ``"p/q"`` (or ``"p"``); floats pass through repr."""
    if isinstance(x, float):
        return repr(x)
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


# --------------------------------------------------------------------------
# binary sequences

@dataclass(frozen=True)
class Periodic:
    word: tuple

    def __post_init__(self):
        if not self.word:
            raise ValueError("periodic word must be nonempty")
        if any(b not in (0, 1) for b in self.word):
            raise ValueError("binary word must contain only 0 and 1")

    def bit(self, n: int) -> int:
        return self.word[n % len(self.word)]


@dataclass(frozen=True)
class EventuallyPeriodic:
    """``...LLL CENTER RRR...`` with CENTER occupying indices 0..len-1."""
    left: tuple
    center: tuple
    right: tuple

    def __post_init__(self):
        if not self.left or not self.right:
            raise ValueError("tail words must be nonempty")

    def bit(self, n: int) -> int:
        if n < 0:
            return self.left[n % len(self.left)]
        if n < len(self.center):
            return self.center[n]
        return self.right[(n - len(self.center)) % len(self.right)]


@dataclass(frozen=True)
class SeededBernoulli:
    """i.i.d. bits with P(1) = p, keyed by (seed, index).

    Counter-based: each bit is a hash of the pair, so negative indices and
    out-of-order queries are as well defined as a forward scan.
    """
    p: Fraction
    seed: int

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise ValueError("p must lie in (0, 1)")

    def bit(self, n: int) -> int:
        digest = hashlib.blake2b(f"{self.seed}:{n}".encode(), digest_size=8).digest()
        u = int.from_bytes(digest, "big")
        p = Fraction(self.p)
        return 1 if u * p.denominator < p.numerator << 64 else 0


BinaryGenerator = Union[Periodic, EventuallyPeriodic, SeededBernoulli]


@dataclass(eq=False)
class BinarySeq:
    generator: BinaryGenerator
    offset: int = 0
    _cache: dict = field(default_factory=dict, repr=False)

    def __call__(self, n: int) -> int:
        n += self.offset
        try:
            return self._cache[n]
        except KeyError:
            b = self._cache[n] = self.generator.bit(n)
            return b

    def window(self, a: int, b: int) -> list:
        if a > b:
            raise ValueError("window requires a <= b")
        return [self(n) for n in range(a, b + 1)]

    def shift(self, k: int) -> "BinarySeq":
        # the cache is keyed by absolute generator index, so it can be shared
        return BinarySeq(self.generator, self.offset + k, self._cache)

    @property
    def period(self):
        if isinstance(self.generator, Periodic):
            return len(self.generator.word)
        return None

    def __str__(self) -> str:
        g = self.generator
        word = lambda w: "".join(map(str, w))
        if isinstance(g, Periodic):
            text = f"periodic:{word(g.word)}"
        elif isinstance(g, EventuallyPeriodic):
            text = f"eventually:{word(g.left)}|{word(g.center)}|{word(g.right)}"
        else:
            text = f"bernoulli:p={fmt_rational(g.p)},seed={g.seed}"
        return text if self.offset == 0 else f"{text}>>{self.offset}"

    # convenience constructors
    @classmethod
    def periodic(cls, word) -> "BinarySeq":
        return cls(Periodic(_bits(word)))

    @classmethod
    def eventually(cls, left, center, right) -> "BinarySeq":
        return cls(EventuallyPeriodic(_bits(left), _bits(center), _bits(right)))

    @classmethod
    def bernoulli(cls, p=Fraction(1, 2), seed: int = 0) -> "BinarySeq":
        return cls(SeededBernoulli(Fraction(p), int(seed)))


def _bits(word) -> tuple:
    if isinstance(word, str):
        if any(c not in "01" for c in word):
            raise ParseError(f"not a binary word: {word!r}")
        return tuple(int(c) for c in word)
    return tuple(int(b) for b in word)


# --------------------------------------------------------------------------
# parameter sequences

@dataclass(frozen=True)
class PeriodicParams:
    quads: tuple

    def quad(self, n: int):
        return self.quads[n % len(self.quads)]


@dataclass(frozen=True)
class ExplicitParams:
    """Finite window at levels 0..len-1 with periodic tails on both sides."""
    left: tuple
    window: tuple
    right: tuple

    def quad(self, n: int):
        if n < 0:
            return self.left[n % len(self.left)]
        if n < len(self.window):
            return self.window[n]
        return self.right[(n - len(self.window)) % len(self.right)]


@dataclass(frozen=True)
class SeededProduct:
    """Product measure stand-in: each component is an independent draw.

    Components take values ``lo + k*(hi-lo)/den`` for k uniform in 0..den;
    the strictly positive components (h, l') skip k = 0 when lo == 0.
    """
    lo: Fraction
    hi: Fraction
    den: int
    seed: int

    def quad(self, n: int):
        out = []
        for c in range(4):
            digest = hashlib.blake2b(f"{self.seed}:{n}:{c}".encode(), digest_size=8).digest()
            u = int.from_bytes(digest, "big")
            k0 = 1 if (c in (1, 2) and self.lo == 0) else 0
            k = k0 + u % (self.den + 1 - k0)
            out.append(self.lo + Fraction(k, self.den) * (self.hi - self.lo))
        return tuple(out)


@dataclass(eq=False)
class FromBits:
    """Levels of the rectangle description of a square-tiled staircase.

    Level n pairs the n-th maximal 1-run (length a) with the following
    maximal 0-run (length b) and reads (l, h, l', h') = (a-1, 1, 1, b-1).
    Level 0 is the 1-run containing index 0, or the first 1-run to its right.
    """
    bits: BinarySeq
    max_run: int = DEFAULT_MAX_RUN
    _starts: dict = field(default_factory=dict, repr=False)

    def _run_end(self, k: int, symbol: int) -> int:
        """First index >= k whose bit differs from ``symbol``."""
        j = k
        while self.bits(j) == symbol:
            j += 1
            if j - k > self.max_run:
                raise UnresolvedRun(f"run of {symbol}s from index {k} exceeds {self.max_run}")
        return j

    def _run_begin(self, k: int, symbol: int) -> int:
        """Smallest j <= k such that bits j..k all equal ``symbol``."""
        j = k
        while self.bits(j - 1) == symbol:
            j -= 1
            if k - j > self.max_run:
                raise UnresolvedRun(f"run of {symbol}s ending at index {k} exceeds {self.max_run}")
        return j

    def start(self, n: int) -> int:
        """Bit index where the 1-run of level n begins."""
        if not self._starts:
            k0 = self._run_begin(0, 1) if self.bits(0) == 1 else self._run_end(0, 0)
            self._starts[0] = k0
        if n in self._starts:
            return self._starts[n]
        known = min(self._starts, key=lambda m: abs(m - n))
        k = self._starts[known]
        step = 1 if n > known else -1
        m = known
        while m != n:
            if step > 0:
                k = self._run_end(self._run_end(k, 1), 0)
            else:
                # previous 0-run ends at k-1, the 1-run before it ends just below
                k = self._run_begin(self._run_begin(k - 1, 0) - 1, 1)
            m += step
            self._starts[m] = k
        return k

    def runs(self, n: int) -> tuple:
        k = self.start(n)
        a_end = self._run_end(k, 1)
        b_end = self._run_end(a_end, 0)
        return a_end - k, b_end - a_end

    def quad(self, n: int):
        a, b = self.runs(n)
        return (Fraction(a - 1), Fraction(1), Fraction(1), Fraction(b - 1))


ParamGenerator = Union[PeriodicParams, ExplicitParams, SeededProduct, FromBits]


@dataclass(eq=False)
class ParamSeq:
    generator: ParamGenerator
    offset: int = 0
    mode: str = "exact"

    def __call__(self, n: int):
        q = self.generator.quad(n + self.offset)
        if self.mode == "float":
            return tuple(float(x) for x in q)
        return q

    def window(self, a: int, b: int) -> list:
        if a > b:
            raise ValueError("window requires a <= b")
        return [self(n) for n in range(a, b + 1)]

    def shift(self, k: int) -> "ParamSeq":
        return ParamSeq(self.generator, self.offset + k, self.mode)

    def validate(self, a: int, b: int) -> None:
        for n in range(a, b + 1):
            l, h, lp, hp = self(n)
            if l < 0 or h <= 0 or lp <= 0 or hp < 0:
                raise ValueError(f"level {n}: need l>=0, h>0, l'>0, h'>=0, got {self(n)}")

    @property
    def period(self):
        g = self.generator
        if isinstance(g, PeriodicParams):
            return len(g.quads)
        if isinstance(g, FromBits) and g.bits.period is not None:
            return count_cyclic_one_runs(g.bits.generator.word)
        return None

    @property
    def bit_period(self):
        """Symbols per level period for sequences converted from periodic bits."""
        g = self.generator
        if isinstance(g, FromBits) and g.bits.period is not None:
            return g.bits.period
        return None

    def __str__(self) -> str:
        g = self.generator
        quads = lambda qs: ";".join(",".join(fmt_rational(x) for x in q) for q in qs)
        if isinstance(g, PeriodicParams):
            text = quads(g.quads) + "@period"
        elif isinstance(g, ExplicitParams):
            text = f"explicit:{quads(g.left)}|{quads(g.window)}|{quads(g.right)}"
        elif isinstance(g, SeededProduct):
            text = (f"product:lo={fmt_rational(g.lo)},hi={fmt_rational(g.hi)},"
                    f"den={g.den},seed={g.seed}")
        else:
            text = f"bits:{g.bits}"
        return text if self.offset == 0 else f"{text}>>{self.offset}"

    @classmethod
    def periodic(cls, quads: Iterable[Sequence]) -> "ParamSeq":
        qs = tuple(tuple(Fraction(x) for x in q) for q in quads)
        if not qs or any(len(q) != 4 for q in qs):
            raise ValueError("need a nonempty list of quadruples")
        return cls(PeriodicParams(qs))

    @classmethod
    def explicit(cls, left, window, right) -> "ParamSeq":
        conv = lambda qs: tuple(tuple(Fraction(x) for x in q) for q in qs)
        return cls(ExplicitParams(conv(left), conv(window), conv(right)))

    @classmethod
    def product(cls, lo=0, hi=2, den=4, seed=0) -> "ParamSeq":
        return cls(SeededProduct(Fraction(lo), Fraction(hi), int(den), int(seed)))


def count_cyclic_one_runs(word: Sequence[int]) -> int:
    n = len(word)
    if all(b == word[0] for b in word):
        raise UnresolvedRun("constant periodic word has an infinite run")
    return sum(1 for i in range(n) if word[i] == 1 and word[i - 1] == 0)


def shift(seq, k: int):
    """``result(n) == seq(n + k)`` for every n."""
    return seq.shift(k)


def window(seq, a: int, b: int) -> list:
    return seq.window(a, b)


def bits_to_params(s: BinarySeq, levels: range | None = None,
                   max_run: int = DEFAULT_MAX_RUN) -> ParamSeq:
    """Rectangle parameters of the square-tiled staircase T_s.

    Every output level has h = l' = 1 and nonnegative integer l, h'.  When
    ``levels`` is given those levels are resolved eagerly, so an unclosed
    run surfaces here as :class:`UnresolvedRun` rather than mid-trace.
    """
    v = ParamSeq(FromBits(s, max_run))
    if levels is not None:
        for n in levels:
            v(n)
    return v


def level_square_range(v: ParamSeq, n: int) -> tuple:
    """Square indices (start, corner, top) of level n of a converted sequence.

    ``start`` is the first square of the row R^l_n R_n R^r_n, ``corner`` is
    the square R^r_n, and ``top`` is R^l_{n+1}.
    """
    g = v.generator
    if not isinstance(g, FromBits):
        raise TypeError("level_square_range needs a sequence built by bits_to_params")
    m = n + v.offset
    k = g.start(m)
    a, b = g.runs(m)
    return k, k + a, k + a + b


# --------------------------------------------------------------------------
# window matching against a periodic approximant

@dataclass(frozen=True)
class WindowMatch:
    M: int
    N: int
    deviation: Fraction
    bound: Fraction
    eps_prime: Fraction
    H_plus: Fraction

    @property
    def valid(self) -> bool:
        return self.deviation < self.bound


def section_length(v: ParamSeq, n: int):
    _, h, _, hp = v(n)
    return h + hp + v(n + 1)[1]


def min_section_length(v_plus: ParamSeq):
    p = v_plus.period
    if p is None:
        raise ValueError("approximant must be periodic")
    return min(section_length(v_plus, n) for n in range(p))


def window_deviation(v: ParamSeq, v_plus: ParamSeq, M: int, N: int):
    dev = 0
    for i in range(-N, N + 1):
        a, b = v(i + M), v_plus(i)
        dev = max(dev, max(abs(x - y) for x, y in zip(a, b)))
    return dev


def find_match_window(v: ParamSeq, v_plus: ParamSeq, N: int, eps_prime,
                      search: range) -> WindowMatch:
    """Smallest |M| in ``search`` whose window |i| <= N is close to ``v_plus``.

    Closeness is the max over the four components and all |i| <= N, compared
    against eps' H+ / (3 N^2).  Ties in |M| go to the positive shift.
    """
    if N < 1:
        raise ValueError("N must be positive")
    eps_prime = as_fraction(eps_prime)
    H_plus = min_section_length(v_plus)
    bound = eps_prime * H_plus / (3 * N * N)
    for M in sorted(search, key=lambda m: (abs(m), -m)):
        dev = window_deviation(v, v_plus, M, N)
        if dev < bound:
            return WindowMatch(M, N, dev, bound, eps_prime, H_plus)
    raise NotFound(f"no match with deviation < {bound} in {search}")


# --------------------------------------------------------------------------
# text formats

def parse_binary(text: str) -> BinarySeq:
    """``periodic:10``, ``eventually:L|C|R`` or ``bernoulli:p=1/2,seed=7``."""
    text = text.strip()
    offset = 0
    if ">>" in text:
        text, off = text.rsplit(">>", 1)
        offset = int(off)
    kind, _, body = text.partition(":")
    try:
        if kind == "periodic":
            seq = BinarySeq.periodic(body)
        elif kind == "eventually":
            left, center, right = body.split("|")
            seq = BinarySeq.eventually(left, center, right)
        elif kind == "bernoulli":
            kv = _keyvals(body)
            seq = BinarySeq.bernoulli(Fraction(kv.get("p", "1/2")), int(kv.get("seed", 0)))
        else:
            raise ParseError(f"unknown binary sequence kind {kind!r}")
    except (ValueError, KeyError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"bad binary sequence {text!r}: {exc}") from exc
    return seq.shift(offset) if offset else seq


def _keyvals(body: str) -> dict:
    out = {}
    for item in filter(None, body.split(",")):
        key, _, val = item.partition("=")
        out[key.strip()] = val.strip()
    return out


def _quads(body: str) -> list:
    quads = []
    for chunk in filter(None, body.split(";")):
        parts = chunk.split(",")
        if len(parts) != 4:
            raise ParseError(f"quadruple needs 4 entries: {chunk!r}")
        quads.append(tuple(Fraction(p.strip()) for p in parts))
    if not quads:
        raise ParseError("empty quadruple list")
    return quads


def parse_params(text: str) -> ParamSeq:
    """ParamSeq literal.

    ``0,1,1,0;1,1,1,0`` (optionally suffixed ``@period``) is one period;
    ``explicit:LEFT|WINDOW|RIGHT`` gives a window at levels 0.. with periodic
    tails; ``product:lo=..,hi=..,den=..,seed=..`` is a seeded product draw;
    ``bits:<binary literal>`` converts a square-tiled sequence.
    """
    text = text.strip()
    offset = 0
    if ">>" in text:
        text, off = text.rsplit(">>", 1)
        offset = int(off)
    try:
        if text.startswith("bits:"):
            v = bits_to_params(parse_binary(text[5:]))
        elif text.startswith("explicit:"):
            left, win, right = text[9:].split("|")
            v = ParamSeq.explicit(_quads(left), _quads(win), _quads(right))
        elif text.startswith("product:"):
            kv = _keyvals(text[8:])
            v = ParamSeq.product(Fraction(kv.get("lo", "0")), Fraction(kv.get("hi", "2")),
                                 int(kv.get("den", 4)), int(kv.get("seed", 0)))
        else:
            if text.endswith("@period"):
                text = text[: -len("@period")]
            v = ParamSeq.periodic(_quads(text))
    except (ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"bad parameter sequence {text!r}: {exc}") from exc
    return v.shift(offset) if offset else v
