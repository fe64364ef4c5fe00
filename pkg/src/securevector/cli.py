"""Command-line front end.

    securevector keygen --size 512 --out k
    securevector enroll --features gal.txt --pub k.pub --out gal.svgal
    securevector search --probe probe.txt --gallery gal.svgal --keys k --topk 5
    securevector match a.svrec b.svrec --keys k --params gal.svgal
    securevector verify --features feats.txt --pairs 10000 --keys k
    securevector bench --dim 512 --size 512 --trials 1000
    securevector study-permutation --features feats.txt --lm-ratios 1,4,128 --repeats 100
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path

from . import harness
from .enroll import enroll
from .paillier import MIN_KEY_BITS, keygen, seeded_rng, system_rng
from .params import (
    DEFAULT_LM_RATIO,
    METRIC_MODES,
    InfeasibleParams,
    ParamSet,
    max_L,
    optimal_K,
)
from .match import match_pair
from .store import (
    GalleryFile,
    atomic_write,
    gallery_topk,
    load_keys,
    load_public_key,
    parse_record,
    read_features,
    save_keys,
    serialize_record,
)


class CLIError(Exception):
    pass


def _rng(args):
    return seeded_rng(args.seed) if args.seed is not None else system_rng()


def _emit(args, rows):
    """Tab-separated under --porcelain, aligned columns otherwise."""
    if args.porcelain:
        for row in rows:
            print("\t".join(str(c) for c in row))
        return
    widths = [max(len(str(r[i])) for r in rows if i < len(r)) for i in range(max(map(len, rows)))]
    for row in rows:
        print("  ".join(str(c).ljust(w) for c, w in zip(row, widths)).rstrip())


def _params_from_args(args, S: int, d: int) -> ParamSet:
    K = args.K if args.K is not None else optimal_K(S, d).K
    L = args.L if args.L is not None else max_L(S, K)
    return ParamSet(S=S, K=K, L=L, d=d, lm_ratio=args.lm_ratio, metric_mode=args.mode)


def _add_param_flags(p):
    p.add_argument("--K", type=int, help="segment count (default: optimal for the key size)")
    p.add_argument("--L", type=int, help="scaling bound (default: largest feasible)")
    p.add_argument("--lm-ratio", type=float, default=DEFAULT_LM_RATIO)
    p.add_argument("--mode", choices=METRIC_MODES, default="cosine-normalized")
    p.add_argument("--normalize", action="store_true",
                   help="rescale rows to unit length in normalized modes instead of rejecting them")


def _enroll_rows(X, labels, params, pub, rng, normalize):
    recs = []
    for lab, x in zip(labels, X):
        try:
            recs.append(enroll(x, params, pub, rng, normalize=normalize, label=lab))
        except ValueError as e:
            raise CLIError(f"row {lab}: {e}") from None
    return recs


def cmd_keygen(args):
    if args.size < MIN_KEY_BITS or args.size % 2:
        raise CLIError(f"--size must be an even number >= {MIN_KEY_BITS}")
    try:
        rec = optimal_K(args.size, args.dim)
    except InfeasibleParams as e:
        raise CLIError(f"{e}; minimum usable size is {MIN_KEY_BITS}") from None
    keys = keygen(args.size, _rng(args))
    pub_path, key_path = save_keys(keys, args.out)
    _emit(args, [["public", str(pub_path)], ["private", str(key_path)],
                 ["recommended", rec.report()]])


def cmd_enroll(args):
    pub = load_public_key(args.pub)
    labels, X = read_features(args.features)
    if len(X) == 0:
        raise CLIError("feature file is empty")
    params = _params_from_args(args, pub.bits, X.shape[1])
    recs = _enroll_rows(X, labels, params, pub, _rng(args), args.normalize)
    out = Path(args.out)
    if out.suffix == ".svrec":
        if len(recs) != 1:
            raise CLIError(".svrec output holds exactly one record")
        atomic_write(out, serialize_record(recs[0]).decode())
    else:
        gal = GalleryFile.new(params, pub)
        for r in recs:
            gal.add(r)
        gal.save(out)
    _emit(args, [["records", str(len(recs))], ["params", params.report()], ["out", str(out)]])


def _search_one(probe, gallery, k, keys):
    return gallery_topk(probe, gallery, k, keys)


def cmd_search(args):
    keys = load_keys(args.keys)
    gallery = GalleryFile.load(args.gallery)
    gallery.check_keys(keys.public)
    labels, X = read_features(args.probe)
    probes = _enroll_rows(X, labels, gallery.params, keys.public, _rng(args), args.normalize)
    work = partial(_search_one, gallery=gallery, k=args.topk, keys=keys)
    workers = max(1, min(args.workers, len(probes)))
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(work, probes))
    else:
        results = [work(p) for p in probes]
    rows = [["probe", "rank", "label", "score"]]
    for lab, ranked in zip(labels, results):
        for rank, (g_lab, score) in enumerate(ranked, 1):
            rows.append([lab, rank, g_lab, f"{score:.8f}"])
    _emit(args, rows)


def cmd_match(args):
    keys = load_keys(args.keys)
    a = parse_record(Path(args.a).read_bytes())
    b = parse_record(Path(args.b).read_bytes())
    params = ParamSet.from_dict(_params_doc(args.params))
    res = match_pair(a, b, keys, params)
    _emit(args, [["mode", res.mode], ["score", f"{res.score:.10f}"]])


def _params_doc(src: str) -> dict:
    path = Path(src)
    text = path.read_text() if path.exists() else src
    doc = json.loads(text.splitlines()[0])
    return doc.get("params", doc)


def cmd_verify(args):
    keys = load_keys(args.keys)
    _, X = read_features(args.features)
    if len(X) < 2:
        raise CLIError("need at least two features")
    params = _params_from_args(args, keys.public.bits, X.shape[1])
    rep = harness.verify(X, args.pairs, keys, params, _rng(args), tol=args.tol,
                         normalize=args.normalize)
    _emit(args, [["params", params.report()], ["pairs", rep.pairs],
                 ["max_abs_err", f"{rep.max_err:.3e}"], ["mean_abs_err", f"{rep.mean_err:.3e}"],
                 ["tol", f"{rep.tol:.1e}"], ["result", "PASS" if rep.passed else "FAIL"]])
    return 0 if rep.passed else 1


def cmd_bench(args):
    rep = harness.bench(args.dim, args.size, args.trials, _rng(args))
    _emit(args, rep.rows())


def cmd_study(args):
    ratios = [float(r) for r in args.lm_ratios.split(",") if r.strip()]
    if any(not r > 0 for r in ratios):
        raise CLIError("--lm-ratios must all be positive")
    _, X = read_features(args.features)
    if len(X) == 0:
        raise CLIError("feature file is empty")
    results = harness.study_permutation(X, ratios, args.repeats, _rng(args), S=args.size)
    _emit(args, harness.histogram_rows(results, args.bins))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="securevector", description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, help="deterministic randomness (tests/CI only)")
    ap.add_argument("--porcelain", action="store_true", help="tab-separated output")
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("keygen", help="generate a Paillier key pair")
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--out", required=True, help="writes OUT.pub and OUT.key")
    p.add_argument("--dim", type=int, default=512, help="feature dimension for the recommendation")
    p.set_defaults(fn=cmd_keygen)

    p = sub.add_parser("enroll", help="protect a feature file into a gallery (.svgal) or record (.svrec)")
    p.add_argument("--features", required=True)
    p.add_argument("--pub", required=True)
    p.add_argument("--out", required=True)
    _add_param_flags(p)
    p.set_defaults(fn=cmd_enroll)

    p = sub.add_parser("search", help="rank gallery entries against probe features")
    p.add_argument("--probe", required=True)
    p.add_argument("--gallery", required=True)
    p.add_argument("--keys", required=True, help="key prefix (PREFIX.key)")
    p.add_argument("--topk", type=int, default=5)
    p.add_argument("--normalize", action="store_true")
    p.set_defaults(fn=cmd_search)

    p = sub.add_parser("match", help="score two .svrec records")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--keys", required=True)
    p.add_argument("--params", required=True, help="gallery file or ParamSet JSON the records were enrolled under")
    p.set_defaults(fn=cmd_match)

    p = sub.add_parser("verify", help="compare protected scores with plaintext scores")
    p.add_argument("--features", required=True)
    p.add_argument("--pairs", type=int, default=10000)
    p.add_argument("--keys", required=True)
    p.add_argument("--tol", type=float, default=1e-4)
    _add_param_flags(p)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("bench", help="time enrollment and matching")
    p.add_argument("--dim", type=int, default=512)
    p.add_argument("--size", type=int, default=512)
    p.add_argument("--trials", type=int, default=1000)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("study-permutation", help="cos(x, c_x) histograms per lm_ratio and mode")
    p.add_argument("--features", required=True)
    p.add_argument("--lm-ratios", default="1,2,4,8,128")
    p.add_argument("--repeats", type=int, default=100)
    p.add_argument("--size", type=int, default=512, help="key size used to pick K and L")
    p.add_argument("--bins", type=int, default=20)
    p.set_defaults(fn=cmd_study)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rc = args.fn(args)
    except (CLIError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return rc or 0


if __name__ == "__main__":
    sys.exit(main())
