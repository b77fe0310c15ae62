"""Return IET, cocycle and fibre excursions of a periodic staircase."""
import argparse
import json

from staircases.cli import parse_direction
from staircases.cocycle import (SkewProduct, build_quotient, extract_iet, holonomy_check,
                                skew_recurrence_sim)
from staircases.symbolic import BinarySeq


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--word", default="10")
    ap.add_argument("--direction", default="1.0,1.618033988749895")
    ap.add_argument("--starts", type=int, default=100)
    ap.add_argument("--iterations", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    q = build_quotient(BinarySeq.periodic(args.word))
    iet = extract_iet(q, parse_direction(args.direction))
    print(json.dumps(iet.as_dict(), indent=2))
    print("holonomy zero:", holonomy_check(iet).ok)
    stats = skew_recurrence_sim(SkewProduct(iet), args.starts, args.iterations, args.seed)
    print(json.dumps(stats.as_dict(), indent=2))


if __name__ == "__main__":
    main()
