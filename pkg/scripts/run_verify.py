"""Score random pairs of unit vectors through the protected pipeline and report the error."""
import argparse
import time

from securevector.harness import random_unit, verify
from securevector.paillier import keygen, seeded_rng
from securevector.params import ParamSet, optimal_K


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=1000, help="number of enrolled vectors")
    ap.add_argument("--pairs", type=int, default=10_000)
    ap.add_argument("--dim", type=int, default=512)
    ap.add_argument("--size", type=int, default=512, help="Paillier modulus bits")
    ap.add_argument("--mode", default="cosine-normalized")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = seeded_rng(args.seed)
    keys = keygen(args.size, rng)
    base = optimal_K(args.size, args.dim)
    params = ParamSet(S=args.size, K=base.K, L=base.L, d=args.dim, metric_mode=args.mode)
    X = random_unit(args.n, args.dim, args.seed)
    t0 = time.perf_counter()
    rep = verify(X, args.pairs, keys, params, rng)
    print(params.report())
    print(f"pairs={rep.pairs} max_err={rep.max_err:.3e} mean_err={rep.mean_err:.3e} "
          f"{'PASS' if rep.passed else 'FAIL'} ({time.perf_counter() - t0:.1f}s)")


if __name__ == "__main__":
    main()
