"""Fraction of L_0 returning within N steps, swept over N and directions."""
import argparse
import csv
import sys
from fractions import Fraction

from staircases import BinarySeq, bits_to_params, build_staircase
from staircases.cli import parse_direction, parse_surface
from staircases.recurrence import ExperimentParams, recurrence_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--surface", default="bernoulli:p=1/2,seed=7")
    ap.add_argument("--directions", default="1,1;2,1;1,2;3,2")
    ap.add_argument("--N", default="0,1,2,5,10,20,50,100")
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--levels", type=int, default=60)
    args = ap.parse_args()

    seq = parse_surface(args.surface)
    v = bits_to_params(seq) if isinstance(seq, BinarySeq) else seq
    st = build_staircase(v, range(-args.levels, args.levels + 1))
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["direction", "N", "returned", "escaped", "singular"])
    for text in args.directions.split(";"):
        d = parse_direction(text)
        for N in map(int, args.N.split(",")):
            p = ExperimentParams(N=N, samples=args.samples, sampler="random", seed=args.seed)
            s = recurrence_experiment(st, d, p)
            out.writerow([str(d), N, float(s.fraction_returned),
                          float(Fraction(s.escaped, s.n_samples)),
                          float(Fraction(s.singular, s.n_samples))])


if __name__ == "__main__":
    main()
