"""Paired orbits on a perturbed staircase and its periodic approximant.

Every parameter on levels |i| <= W is moved by -delta, 0 or +delta; the
deviation of return offsets is compared with the linear bound i*C*delta.
"""
import argparse
import random
from fractions import Fraction

from staircases import Direction, ParamSeq, build_staircase
from staircases.recurrence import divergence_compare
from staircases.symbolic import find_match_window


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--delta", default="1/1000")
    ap.add_argument("--W", type=int, default=10)
    ap.add_argument("--samples", type=int, default=100)
    ap.add_argument("--returns", type=int, default=20)
    ap.add_argument("--seed", type=int, default=5)
    ap.add_argument("--directions", default="1,1;2,1;1,2;3,2;1,-1;2,3")
    args = ap.parse_args()

    delta, W = Fraction(args.delta), args.W
    base = (1, 1, 1, 1)
    rng = random.Random(args.seed)
    win = [tuple(Fraction(x) + rng.choice([-1, 0, 1]) * delta for x in base)
           for _ in range(2 * W + 1)]
    v = ParamSeq.explicit([base], win, [base]).shift(W)
    vp = ParamSeq.periodic([base])
    match = find_match_window(v, vp, W, 200 * delta, range(-2, 3))
    st, stp = build_staircase(v, range(-W, W + 1)), build_staircase(vp, range(-W, W + 1))
    for text in args.directions.split(";"):
        d = Direction.of(*map(int, text.split(",")))
        rep = divergence_compare(st, stp, match, d, args.samples, args.returns)
        print(rep.summary())


if __name__ == "__main__":
    main()
