"""Certify purely periodic behaviour of Bernoulli staircases in rational directions.

For each seed and direction, the window between the nearest blocks that
look like the reference sequence is scanned exhaustively.
"""
import argparse
import time
from fractions import Fraction

from staircases import BinarySeq, Direction
from staircases.periodic import purely_periodic_scan, strongly_parabolic_test


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--directions", default="1,2;2,1;1,1;3,2")
    ap.add_argument("--reference", default="10")
    args = ap.parse_args()
    ref = BinarySeq.periodic(args.reference)
    for text in args.directions.split(";"):
        d = Direction.of(*map(int, text.split(",")))
        sp = strongly_parabolic_test(ref, d)
        print(f"{d}: strongly parabolic for ({args.reference}) = {bool(sp)} {sp.reason}")
        if not sp:
            continue
        for seed in range(args.seeds):
            t0 = time.perf_counter()
            v = purely_periodic_scan(BinarySeq.bernoulli(Fraction(1, 2), seed), d, reference=ref)
            print(f"  seed {seed}: {v.verdict} on {v.window}, {len(v.results)} orbits, "
                  f"{time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
