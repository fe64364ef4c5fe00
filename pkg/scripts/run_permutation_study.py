"""How far does a random permutation move a feature? Histogram of cos(x, c) per lm_ratio."""
import argparse

from securevector.harness import histogram_rows, random_unit, study_permutation
from securevector.paillier import seeded_rng


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--repeats", type=int, default=100)
    ap.add_argument("--dim", type=int, default=512)
    ap.add_argument("--lm-ratios", default="1,2,4,8,128")
    ap.add_argument("--bins", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    X = random_unit(args.n, args.dim, args.seed)
    ratios = [float(r) for r in args.lm_ratios.split(",")]
    res = study_permutation(X, ratios, args.repeats, seeded_rng(args.seed))
    for row in histogram_rows(res, args.bins):
        print("\t".join(row))


if __name__ == "__main__":
    main()
