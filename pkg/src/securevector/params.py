"""Hyper-parameter selection and the capacity / security-bit accounting.

All bounds are evaluated with exact integer arithmetic:

* ``L <= 2^(S/(2K+9) - 2)``  is equivalent to  ``(4L)^(2K+9) <= 2^S``
* ``b = floor(2K + K log2 L)`` is ``bit_length(2^(2K) * L^K) - 1``
* ``ceil((2K+9) log2(4L))``  is ``bit_length((4L)^(2K+9) - 1)``

so no floating-point snapping near integer boundaries is needed.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass

import gmpy2

METRIC_MODES = (
    "cosine-normalized",
    "euclidean-normalized",
    "dot-unnormalized",
    "euclidean-unnormalized",
)
NORMALIZED_MODES = frozenset(METRIC_MODES[:2])
DEFAULT_LM_RATIO = 128.0


class InfeasibleParams(ValueError):
    """No admissible L >= 2 exists for the requested configuration."""


def max_L(S: int, K: int) -> int:
    """Largest L with (4L)^(2K+9) <= 2^S."""
    if K < 1:
        raise ValueError("K must be >= 1")
    root, _ = gmpy2.iroot(gmpy2.mpz(1) << S, 2 * K + 9)
    L = int(root) // 4
    if L < 2:
        raise InfeasibleParams(f"S={S} cannot host K={K} (max L={L} < 2)")
    return L


def security_bits(K: int, L: int) -> int:
    if K < 1 or L < 2:
        raise ValueError("need K >= 1 and L >= 2")
    return ((1 << (2 * K)) * L**K).bit_length() - 1


def min_key_size(K: int, L: int) -> int:
    if K < 1 or L < 2:
        raise ValueError("need K >= 1 and L >= 2")
    return ((4 * L) ** (2 * K + 9) - 1).bit_length()


def divisors(d: int) -> list[int]:
    small = [k for k in range(1, math.isqrt(d) + 1) if d % k == 0]
    return sorted(set(small + [d // k for k in small]))


@dataclass(frozen=True)
class ParamSet:
    S: int
    K: int
    L: int
    d: int
    lm_ratio: float = DEFAULT_LM_RATIO
    metric_mode: str = "cosine-normalized"

    def __post_init__(self):
        object.__setattr__(self, "lm_ratio", float(self.lm_ratio))
        if self.metric_mode not in METRIC_MODES:
            raise ValueError(f"unknown metric mode {self.metric_mode!r}")
        if self.K < 1 or self.d < 1:
            raise ValueError("K and d must be positive")
        if self.d % self.K:
            raise ValueError(f"K={self.K} does not divide d={self.d}")
        if self.L < 2:
            raise ValueError("L must be >= 2")
        if not (self.lm_ratio > 0 and math.isfinite(self.lm_ratio)):
            raise ValueError("lm_ratio must be a positive finite number")
        need = min_key_size(self.K, self.L)
        if self.S < need:
            raise InfeasibleParams(
                f"key size {self.S} too small for K={self.K}, L={self.L} (need >= {need})"
            )

    @property
    def M(self) -> float:
        return self.L / self.lm_ratio

    @property
    def seg_len(self) -> int:
        return self.d // self.K

    @property
    def base(self) -> int:
        return 4 * self.L

    @property
    def bits(self) -> int:
        return security_bits(self.K, self.L)

    @property
    def normalized(self) -> bool:
        return self.metric_mode in NORMALIZED_MODES

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ParamSet":
        return cls(
            S=int(data["S"]),
            K=int(data["K"]),
            L=int(data["L"]),
            d=int(data["d"]),
            lm_ratio=float(data["lm_ratio"]),
            metric_mode=str(data["metric_mode"]),
        )

    def fingerprint(self, n: int) -> str:
        """Digest binding these parameters to a public modulus."""
        doc = dict(self.to_dict(), lm_ratio=repr(self.lm_ratio), n=str(n))
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def report(self) -> str:
        return (
            f"S={self.S} d={self.d} K={self.K} L={self.L} lm_ratio={self.lm_ratio:g} "
            f"mode={self.metric_mode} bits={self.bits} min_S={min_key_size(self.K, self.L)}"
        )


def optimal_K(S: int, d: int, lm_ratio: float = DEFAULT_LM_RATIO,
              metric_mode: str = "cosine-normalized") -> ParamSet:
    """Divisor K of d maximizing security bits at the largest feasible L.

    Ties go to the smaller K.
    """
    if d < 1:
        raise ValueError("d must be positive")
    best = None
    for K in divisors(d):
        try:
            L = max_L(S, K)
        except InfeasibleParams:
            continue
        b = security_bits(K, L)
        if best is None or b > best[0]:
            best = (b, K, L)
    if best is None:
        raise InfeasibleParams(f"no divisor of d={d} is feasible at S={S}")
    _, K, L = best
    return ParamSet(S=S, K=K, L=L, d=d, lm_ratio=lm_ratio, metric_mode=metric_mode)
