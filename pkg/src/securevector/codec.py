"""The 4L-DEC converter.

A permutation secret (K scale indices u, K parity-coded signs v, one
quantized log-norm w) is packed as base-4L digits::

    T = sum u_i (4L)^i + sum v_i (4L)^(K+i) + w (4L)^(2K)      (i from 0)

Every digit is < 2L, so the sum of two tokens never carries out of the
first 2K digits and can be unpacked digit by digit. Only quantize_norm and
log_norm_sum touch floating point.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Sequence


class CorruptToken(ValueError):
    """A decrypted token sum that no pair of valid tokens could produce."""


def norm_levels(L: int) -> int:
    """Number of quantization intervals for log W: 2^15 * L^8."""
    return (1 << 15) * L**8


@dataclass(frozen=True)
class PermutationSecret:
    u: tuple[int, ...]
    s: tuple[int, ...]
    v: tuple[int, ...]
    w: int


@dataclass(frozen=True)
class CombinedSecret:
    u_z: tuple[int, ...]
    s_z: tuple[int, ...]
    w_z: int


def encode_signs(s: Sequence[int], L: int, rng: random.Random) -> list[int]:
    """Draw v_i uniformly from the even (s=+1) or odd (s=-1) values in [0, 2L)."""
    if L < 2:
        raise ValueError("L must be >= 2")
    out = []
    for si in s:
        if si not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {si!r}")
        out.append(2 * rng.randrange(L) + (si == -1))
    return out


def decode_signs(v_z: Sequence[int]) -> list[int]:
    return [1 if vi % 2 == 0 else -1 for vi in v_z]


def log_norm_bounds(L: int, lm_ratio: float) -> tuple[float, float]:
    """Range of log W guaranteed for a unit feature: [-L/M, (L-1)/M]."""
    return -lm_ratio, (L - 1) * lm_ratio / L


def quantize_norm(W: float, L: int, lm_ratio: float) -> int:
    if not W > 0:
        raise ValueError("norm must be positive")
    logW = math.log(W)
    lo, hi = log_norm_bounds(L, lm_ratio)
    slack = 1e-9 * max(1.0, lm_ratio)
    if logW < lo - slack or logW > hi + slack:
        raise ValueError(f"log-norm {logW!r} outside [{lo!r}, {hi!r}]")
    levels = norm_levels(L)
    w = math.floor((logW + lm_ratio) / (2 * lm_ratio) * levels)
    return min(max(w, 0), levels - 1)


def log_norm_sum(w_z: int, L: int, lm_ratio: float) -> float:
    """Recover log W_x + log W_y from w_z = w_x + w_y."""
    levels = norm_levels(L)
    # step = (2L/M) / levels = 2 * lm_ratio / levels
    return (w_z - levels) * (2 * lm_ratio) / levels


def pack(u: Sequence[int], v: Sequence[int], w: int, K: int, L: int) -> int:
    if len(u) != K or len(v) != K:
        raise ValueError(f"expected {K} scale and sign digits")
    top = 2 * L
    for name, arr in (("u", u), ("v", v)):
        for x in arr:
            if not 0 <= x < top:
                raise ValueError(f"{name} digit {x} outside [0, {top})")
    if not 0 <= w < norm_levels(L):
        raise ValueError(f"w={w} outside [0, {norm_levels(L)})")
    base = 4 * L
    T = w
    # Horner from the most significant digit down
    for x in reversed(v):
        T = T * base + x
    for x in reversed(u):
        T = T * base + x
    return T


def unpack(T_z: int, K: int, L: int) -> tuple[list[int], list[int], int]:
    base = 4 * L
    if T_z < 0 or T_z >= base ** (2 * K + 9):
        raise CorruptToken("token sum exceeds (4L)^(2K+9)")
    digits = []
    rest = T_z
    for _ in range(2 * K):
        rest, dgt = divmod(rest, base)
        digits.append(dgt)
    return digits[:K], digits[K:], rest


def combine(T_z: int, K: int, L: int) -> CombinedSecret:
    """Unpack a two-token sum and check it against the no-carry ranges."""
    u_z, v_z, w_z = unpack(T_z, K, L)
    top = 4 * L - 2
    if any(x > top for x in u_z) or any(x > top for x in v_z):
        raise CorruptToken("digit above 4L-2; not a sum of two valid tokens")
    if w_z > 2 * norm_levels(L) - 2:
        raise CorruptToken("norm field above 2^16 L^8 - 2")
    return CombinedSecret(tuple(u_z), tuple(decode_signs(v_z)), w_z)
