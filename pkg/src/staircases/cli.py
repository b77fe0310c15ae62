"""Command-line experiments.

Every subcommand reads an optional ``key = value`` config file, applies
flag overrides, and writes JSON/CSV (plus SVG where it makes sense) into
``--out``.  The resolved configuration is echoed into each JSON file.
Exit codes: 0 success, 2 configuration error, 3 budget exhausted.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from pathlib import Path

from . import cocycle, geometry, periodic, recurrence
from .flow import (BudgetExhausted, Direction, SectionPoint, events_csv, planar_path,
                   section_start, trace)
from .symbolic import (BinarySeq, NotFound, ParseError, bits_to_params,
                       find_match_window, fmt_rational, parse_binary, parse_params)

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET = 0, 2, 3
BINARY_KINDS = ("periodic:", "eventually:", "bernoulli:")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    surface: str = "periodic:10"
    approximant: str = ""
    reference: str = "periodic:10"
    kind: str = "auto"  # auto | rect | square
    direction: str = "1,1"
    levels: str = "-10:10"
    start: str = "0,1/3"
    N: int = 10
    samples: int = 100
    sampler: str = "grid"
    seed: int = 0
    eps: str = "1/100"
    eps_prime: str = ""
    budget: int = 10_000
    qmax: int = 0
    max_window: int = 4096
    span: int = 1
    match_n: int = 3
    search: int = 1000
    section: str = "L"
    level: int = 0
    iterations: int = 10_000
    starts: int = 100
    workers: int = 1
    out: str = "."
    svg_timestamp: bool = False
    orbits: bool = False

    def echo(self) -> dict:
        return {k: v for k, v in asdict(self).items() if k not in ("out", "workers")}


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key: str, raw):
    typ = _TYPES[key]
    try:
        if typ in ("int", int):
            return int(raw)
        if typ in ("bool", bool):
            if isinstance(raw, bool):
                return raw
            return str(raw).strip().lower() in ("1", "true", "yes", "on")
        return str(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from exc


def read_config(path: str) -> dict:
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in _TYPES:
            raise ConfigError(f"{path}:{no}: unknown or malformed entry {line!r}")
        out[key] = _convert(key, val.strip())
    return out


def resolve(args: argparse.Namespace) -> RunConfig:
    cfg = read_config(args.config) if args.config else {}
    for key in _TYPES:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = _convert(key, val)
    return RunConfig(**cfg)


# --------------------------------------------------------------------------
# parsing helpers

def parse_direction(text: str) -> Direction:
    try:
        a, b = (t.strip() for t in text.split(","))
        if "." in a or "." in b or "e" in a.lower() or "e" in b.lower():
            return Direction.of(float(a), float(b))
        return Direction.of(Fraction(a), Fraction(b))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad direction {text!r}: {exc}") from exc


def parse_range(text: str) -> range:
    try:
        a, b = text.split(":")
        return range(int(a), int(b) + 1)
    except ValueError as exc:
        raise ConfigError(f"bad range {text!r}, expected a:b") from exc


def parse_surface(text: str):
    try:
        if text.startswith(BINARY_KINDS):
            return parse_binary(text)
        return parse_params(text)
    except ParseError as exc:
        raise ConfigError(str(exc)) from exc


def _directions(cfg: RunConfig) -> list:
    if cfg.qmax > 0:
        return periodic.farey_directions(cfg.qmax)
    return [parse_direction(d) for d in cfg.direction.split(";")]


def _rect_surface(seq):
    return bits_to_params(seq) if isinstance(seq, BinarySeq) else seq


def _build(cfg: RunConfig):
    seq = parse_surface(cfg.surface)
    levels = parse_range(cfg.levels)
    kind = cfg.kind
    if kind == "auto":
        kind = "square" if isinstance(seq, BinarySeq) else "rect"
    if kind == "square":
        if not isinstance(seq, BinarySeq):
            raise ConfigError("square surfaces need a binary sequence")
        return geometry.build_square_tiled(seq, levels)
    if kind != "rect":
        raise ConfigError(f"unknown surface kind {kind!r}")
    return geometry.build_staircase(_rect_surface(seq), levels)


def _write(out: Path, name: str, text: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def _dump(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


# --------------------------------------------------------------------------
# subcommands

def cmd_build(cfg: RunConfig) -> int:
    st = _build(cfg)
    data = json.loads(geometry.to_json(st))
    data["config"] = cfg.echo()
    out = Path(cfg.out)
    _write(out, "surface.json", _dump(data))
    stamp = None if not cfg.svg_timestamp else __import__("datetime").datetime.now().isoformat()
    _write(out, "surface.svg", geometry.to_svg(st, timestamp=stamp))
    print(f"built {len(st.cells)} cells, {len(st.glue)} glue entries -> {out}")
    return EXIT_OK


def cmd_trace(cfg: RunConfig) -> int:
    st = _build(cfg)
    d = parse_direction(cfg.direction)
    try:
        lvl, r = cfg.start.split(",")
        family = "D" if st.surface == "square" else "L"
        p = section_start(st, SectionPoint(family, int(lvl), Fraction(r), d))
    except ValueError as exc:
        raise ConfigError(f"bad start {cfg.start!r}: {exc}") from exc
    # stop at the first return to the starting section, else escape/corner/budget
    traj = trace(st, p, d, budget=cfg.budget, sections=st.section_edges(family, [int(lvl)]))
    out = Path(cfg.out)
    _write(out, "trace.csv", events_csv(traj))
    stamp = None if not cfg.svg_timestamp else __import__("datetime").datetime.now().isoformat()
    _write(out, "trace.svg", geometry.to_svg(st, paths=[planar_path(st, traj)], timestamp=stamp))
    print(f"{traj.status} after {traj.crossings} crossings")
    return EXIT_BUDGET if traj.status == "budget" else EXIT_OK


def _experiment_params(cfg: RunConfig) -> recurrence.ExperimentParams:
    return recurrence.ExperimentParams(
        N=cfg.N, samples=cfg.samples, sampler=cfg.sampler, seed=cfg.seed,
        eps=Fraction(cfg.eps), eps_prime=Fraction(cfg.eps_prime) if cfg.eps_prime else None,
        budget=cfg.budget, level=cfg.level)


def _cover(levels: range, N: int, level: int) -> range:
    # corner enumeration needs every L_n with |n| <= N, which reaches R^l_{n+1}
    lo = min(levels.start, level - N - 2, -N - 2)
    hi = max(levels.stop - 1, level + N + 2, N + 2)
    return range(lo, hi + 1)


def cmd_recur(cfg: RunConfig) -> int:
    seq = parse_surface(cfg.surface)
    levels = _cover(parse_range(cfg.levels), cfg.N, cfg.level)
    st = geometry.build_staircase(_rect_surface(seq), levels)
    d = parse_direction(cfg.direction)
    params = _experiment_params(cfg)
    stats = recurrence.recurrence_experiment(st, d, params)
    prox = recurrence.corner_proximity(st, d, params) if cfg.N > 0 else None
    data = stats.summary()
    data["cornerProximity"] = None if prox is None else prox.summary()
    data["config"] = cfg.echo()
    out = Path(cfg.out)
    _write(out, "recur.json", _dump(data))
    _write(out, "recur.csv", recurrence.records_csv(stats))
    print(f"fractionReturned = {data['fractionReturned']}")
    return EXIT_BUDGET if stats.budget_exhausted else EXIT_OK


def cmd_compare(cfg: RunConfig) -> int:
    v = _rect_surface(parse_surface(cfg.surface))
    if not cfg.approximant:
        raise ConfigError("compare needs --approximant")
    vp = _rect_surface(parse_surface(cfg.approximant))
    eps_prime = Fraction(cfg.eps_prime) if cfg.eps_prime else Fraction(1, 100)
    try:
        match = find_match_window(v, vp, cfg.match_n, eps_prime, range(-cfg.search, cfg.search + 1))
    except NotFound as exc:
        print(f"no match: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    n = cfg.match_n
    st_v = geometry.build_staircase(v, range(match.M - n, match.M + n + 1))
    st_p = geometry.build_staircase(vp, range(-n, n + 1))
    d = parse_direction(cfg.direction)
    rep = recurrence.divergence_compare(st_v, st_p, match, d, cfg.samples, cfg.N, cfg.budget)
    data = rep.summary()
    data["config"] = cfg.echo()
    _write(Path(cfg.out), "compare.json", _dump(data))
    print(f"M = {match.M}, max deviation {data['maxDeviation']}, violations {data['violations']}")
    return EXIT_OK


def _scan_one(args):
    surface, reference, d, max_window, span, orbits = args
    s, ref = parse_binary(surface), parse_binary(reference)
    try:
        v = periodic.purely_periodic_scan(s, d, max_window, ref, span)
    except periodic.MatchNotFound as exc:
        return {"direction": str(d), "verdict": "MatchNotFound", "reason": str(exc)}
    data = v.as_dict()
    if not orbits:
        data.pop("orbits")
    return data


def _pmap(fn, items, workers: int) -> list:
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def cmd_periodic_scan(cfg: RunConfig) -> int:
    s = parse_surface(cfg.surface)
    if not isinstance(s, BinarySeq):
        raise ConfigError("periodic-scan needs a binary sequence")
    dirs = [d for d in _directions(cfg) if d.exact]
    jobs = [(cfg.surface, cfg.reference, d, cfg.max_window, cfg.span, cfg.orbits) for d in dirs]
    results = _pmap(_scan_one, jobs, cfg.workers)
    _write(Path(cfg.out), "scan.json", _dump({"config": cfg.echo(), "results": results}))
    for r in results:
        print(f"{r['direction']}: {r['verdict']}")
    return EXIT_OK


def _cyl_one(args):
    surface, d = args
    res = periodic.strongly_parabolic_test(parse_binary(surface), d)
    return res.as_dict() | {"direction": str(d)}


def cmd_cylinders(cfg: RunConfig) -> int:
    s = parse_surface(cfg.surface)
    if not isinstance(s, BinarySeq) or s.period is None:
        raise ConfigError("cylinders needs a periodic binary sequence")
    dirs = [d for d in _directions(cfg) if d.exact]
    results = _pmap(_cyl_one, [(cfg.surface, d) for d in dirs], cfg.workers)
    rows = ["direction,cylinder,circumference2,width,span,core_shift,strongly_parabolic"]
    for res in results:
        for i, c in enumerate(res["cylinders"]):
            rows.append(f"\"{res['direction']}\",{i},{c['circumference2']},{c['width']},"
                        f"{c['span']},{c['coreShift']},{str(res['stronglyParabolic']).lower()}")
    out = Path(cfg.out)
    _write(out, "cylinders.csv", "\n".join(rows) + "\n")
    _write(out, "cylinders.json", _dump({"config": cfg.echo(), "results": results}))
    for res in results:
        print(f"{res['direction']}: {len(res['cylinders'])} cylinder(s), "
              f"strongly parabolic = {res['stronglyParabolic']}")
    return EXIT_OK


def cmd_cocycle(cfg: RunConfig) -> int:
    src = parse_surface(cfg.surface)
    try:
        q = cocycle.build_quotient(src)
    except cocycle.NotPeriodic as exc:
        raise ConfigError(str(exc)) from exc
    d = parse_direction(cfg.direction)
    iet = cocycle.extract_iet(q, d, cfg.section, cfg.level, budget=cfg.budget)
    hol = cocycle.holonomy_check(iet)
    sim = cocycle.skew_recurrence_sim(cocycle.SkewProduct(iet), cfg.starts, cfg.iterations, cfg.seed)
    data = iet.as_dict()
    data["holonomy"] = fmt_rational(hol.value)
    data["holonomyZero"] = hol.ok
    data["excursion"] = sim.as_dict()
    data["config"] = cfg.echo()
    out = Path(cfg.out)
    _write(out, "cocycle.json", _dump(data))
    _write(out, "excursions.csv", sim.to_csv())
    print(f"holonomy = {data['holonomy']}, {len(iet.f)} intervals")
    return EXIT_OK


COMMANDS = {"build": cmd_build, "trace": cmd_trace, "recur": cmd_recur, "compare": cmd_compare,
            "periodic-scan": cmd_periodic_scan, "cylinders": cmd_cylinders,
            "cocycle": cmd_cocycle}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="staircases", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value file; flags override it")
        for f in fields(RunConfig):
            flag = "--" + f.name.replace("_", "-")
            if f.type in ("bool", bool):
                p.add_argument(flag, dest=f.name, action="store_const", const=True, default=None)
            else:
                p.add_argument(flag, dest=f.name, default=None,
                               help=f"default: {f.default}")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExhausted as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ParseError, geometry.InvalidParams, geometry.RangeTooSmall) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
