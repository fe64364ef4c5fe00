"""Verification against plaintext, latency benchmarking and the permutation-degree study."""
from __future__ import annotations

import random
import time
from dataclasses import dataclass, field

import numpy as np

from .enroll import enroll, permute, sample_permutation
from .match import match_pair
from .paillier import KeyPair, keygen
from .params import ParamSet, optimal_K
from .store import dumps, public_key_doc, serialize_record

WARMUP = 10
STUDY_MODES = ("u-only", "s-only", "both")


def random_unit(n: int, d: int, seed=None) -> np.ndarray:
    g = np.random.default_rng(seed)
    X = g.standard_normal((n, d))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def plaintext_score(x: np.ndarray, y: np.ndarray, mode: str) -> float:
    if mode in ("cosine-normalized", "dot-unnormalized"):
        return float(x @ y)
    if mode == "euclidean-normalized":
        return float(2.0 - 2.0 * (x @ y))
    return float(np.sum((x - y) ** 2))


@dataclass
class VerifyReport:
    pairs: int
    max_err: float
    mean_err: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.pairs == 0 or self.max_err <= self.tol


def verify(X: np.ndarray, n_pairs: int, keys: KeyPair, params: ParamSet,
           rng: random.Random, tol: float = 1e-4, normalize: bool = False) -> VerifyReport:
    """Enroll every row of X, score random pairs, compare with the plaintext metric."""
    if len(X) < 2:
        raise ValueError("need at least two features")
    if n_pairs == 0:
        return VerifyReport(0, 0.0, 0.0, tol)
    recs = [enroll(x, params, keys.public, rng, normalize=normalize) for x in X]
    if normalize and params.normalized:
        X = X / np.linalg.norm(X, axis=1, keepdims=True)
    errs = np.empty(n_pairs)
    for k in range(n_pairs):
        i, j = rng.sample(range(len(X)), 2)
        got = match_pair(recs[i], recs[j], keys, params).score
        errs[k] = abs(got - plaintext_score(X[i], X[j], params.metric_mode))
    return VerifyReport(n_pairs, float(errs.max()), float(errs.mean()), tol)


@dataclass
class BenchReport:
    enroll_ms_avg: float
    match_ms_avg: float
    record_bytes: int
    key_bytes: int
    trial_count: int
    param_echo: ParamSet
    # published timings for 512-bit keys and 512-dim features, on a Xeon E5-2630
    reference_ms: dict = field(default_factory=lambda: {"enroll": 0.59, "match": 0.30})

    def rows(self) -> list[tuple[str, str]]:
        return [
            ("params", self.param_echo.report()),
            ("trials", str(self.trial_count)),
            ("enroll_ms_avg", f"{self.enroll_ms_avg:.4f}"),
            ("match_ms_avg", f"{self.match_ms_avg:.4f}"),
            ("record_bytes", str(self.record_bytes)),
            ("key_bytes", str(self.key_bytes)),
            ("reference_enroll_ms", f"{self.reference_ms['enroll']:.2f}"),
            ("reference_match_ms", f"{self.reference_ms['match']:.2f}"),
        ]


def bench(d: int = 512, S: int = 512, trials: int = 1000, rng: random.Random | None = None,
          keys: KeyPair | None = None, params: ParamSet | None = None) -> BenchReport:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = rng or random.SystemRandom()
    keys = keys or keygen(S, rng)
    params = params or optimal_K(S, d)
    X = random_unit(trials + WARMUP, d, rng.getrandbits(64))

    recs = [enroll(x, params, keys.public, rng) for x in X[:WARMUP]]
    t0 = time.perf_counter()
    for x in X[WARMUP:]:
        recs.append(enroll(x, params, keys.public, rng))
    t_enroll = time.perf_counter() - t0

    for i in range(WARMUP):
        match_pair(recs[i], recs[i + 1], keys, params)
    body = recs[WARMUP:]
    t0 = time.perf_counter()
    for i in range(trials):
        match_pair(body[i], body[(i + 1) % trials], keys, params)
    t_match = time.perf_counter() - t0

    return BenchReport(
        enroll_ms_avg=t_enroll / trials * 1e3,
        match_ms_avg=t_match / trials * 1e3,
        record_bytes=len(serialize_record(body[0])),
        key_bytes=len(dumps(public_key_doc(keys.public)).encode()),
        trial_count=trials,
        param_echo=params,
    )


def permuted_cosines(X: np.ndarray, params: ParamSet, mode: str, repeats: int,
                     rng: random.Random) -> np.ndarray:
    """cos(x, c_x) over ``repeats`` random permutations of every row of X."""
    if mode not in STUDY_MODES:
        raise ValueError(f"mode must be one of {STUDY_MODES}")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    out = []
    ones = np.ones(params.K, dtype=np.int64)
    for x in X:
        nx = np.linalg.norm(x)
        for _ in range(repeats):
            u, s = sample_permutation(params.K, params.L, rng)
            if mode == "u-only":
                s = ones
            elif mode == "s-only":
                u = ones * params.L
            b, _ = permute(x, u, s, params)
            out.append(float(b @ x / (np.linalg.norm(b) * nx)))
    return np.array(out)


def study_permutation(X: np.ndarray, lm_ratios, repeats: int, rng: random.Random,
                      S: int = 512) -> dict[tuple[float, str], np.ndarray]:
    d = X.shape[1]
    base = optimal_K(S, d)
    out = {}
    for r in lm_ratios:
        params = ParamSet(S=S, K=base.K, L=base.L, d=d, lm_ratio=r)
        for mode in STUDY_MODES:
            out[(params.lm_ratio, mode)] = permuted_cosines(X, params, mode, repeats, rng)
    return out


def histogram_rows(results: dict, bins: int = 20) -> list[list[str]]:
    edges = np.linspace(-1.0, 1.0, bins + 1)
    rows = [["lm_ratio", "mode", "mean", "frac<0.6"]
            + [f"[{lo:+.1f},{hi:+.1f})" for lo, hi in zip(edges[:-1], edges[1:])]]
    for (r, mode), vals in results.items():
        counts, _ = np.histogram(np.clip(vals, -1.0, 1.0), bins=edges)
        rows.append([f"{r:g}", mode, f"{vals.mean():+.4f}", f"{np.mean(vals < 0.6):.3f}"]
                    + [str(c) for c in counts])
    return rows
