"""Enrollment: permute a feature by segment, normalize, pack and encrypt the secret."""
from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from . import codec
from .paillier import Ciphertext, PublicKey, encrypt, system_rng
from .params import ParamSet

UNIT_TOL = 1e-6


class ParamsMismatch(ValueError):
    """Records, parameters or keys that do not belong together."""


@dataclass(frozen=True, eq=False)
class EnrolledRecord:
    c: np.ndarray
    t_enc: Ciphertext
    fingerprint: str
    label: str | None = None

    def __eq__(self, other):
        if not isinstance(other, EnrolledRecord):
            return NotImplemented
        return (
            self.c.dtype == other.c.dtype
            and self.c.shape == other.c.shape
            and self.c.tobytes() == other.c.tobytes()
            and self.t_enc == other.t_enc
            and self.fingerprint == other.fingerprint
            and self.label == other.label
        )

    __hash__ = None


def as_feature(x, params: ParamSet, normalize: bool = False) -> np.ndarray:
    """Validate a raw feature for ``params``; optionally rescale it to unit length."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != params.d:
        raise ValueError(f"expected a vector of length {params.d}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("feature has non-finite components")
    norm = float(np.linalg.norm(x))
    if norm == 0.0:
        raise ValueError("zero feature vector")
    if params.normalized:
        if normalize:
            x = x / norm
        elif abs(norm - 1.0) > UNIT_TOL:
            raise ValueError(f"feature norm {norm:.9g} is not 1 (pass normalize=True to rescale)")
    return x


def sample_permutation(K: int, L: int, rng: random.Random) -> tuple[np.ndarray, np.ndarray]:
    u = np.fromiter((rng.randrange(2 * L) for _ in range(K)), dtype=np.int64, count=K)
    s = np.fromiter((1 if rng.getrandbits(1) else -1 for _ in range(K)), dtype=np.int64, count=K)
    return u, s


def scale_table(params: ParamSet) -> np.ndarray:
    """e^((j-L)/M) for every scale index j in [0, 2L)."""
    j = np.arange(2 * params.L, dtype=np.float64)
    return np.exp((j - params.L) * (params.lm_ratio / params.L))


def permute(x: np.ndarray, u, s, params: ParamSet) -> tuple[np.ndarray, float]:
    """Scale and sign-flip each segment. Returns (b, W).

    In unnormalized modes W is ||b|| / ||x||, which keeps it in the same
    range as for unit features and makes ||c|| = ||x||.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.d,):
        raise ValueError(f"expected a vector of length {params.d}, got shape {x.shape}")
    u = np.asarray(u)
    s = np.asarray(s)
    if u.shape != (params.K,) or s.shape != (params.K,):
        raise ValueError(f"expected {params.K} scale indices and signs")
    factors = s * scale_table(params)[u]
    b = (x.reshape(params.K, params.seg_len) * factors[:, None]).reshape(-1)
    W = float(np.linalg.norm(b))
    if not params.normalized:
        W /= float(np.linalg.norm(x))
    return b, W


def enroll_transparent(x, params: ParamSet, pub: PublicKey, rng: random.Random | None = None,
                       normalize: bool = False, label: str | None = None):
    """Enroll and also return the plaintext secret and token.

    For validation only: the extra return values are exactly what a
    protected record must never reveal.
    """
    if pub.bits != params.S:
        raise ParamsMismatch(f"public key has {pub.bits} bits, params expect S={params.S}")
    rng = rng or system_rng()
    x = as_feature(x, params, normalize)
    u, s = sample_permutation(params.K, params.L, rng)
    b, W = permute(x, u, s, params)
    c = b / W
    v = codec.encode_signs(s.tolist(), params.L, rng)
    w = codec.quantize_norm(W, params.L, params.lm_ratio)
    T = codec.pack(u.tolist(), v, w, params.K, params.L)
    t_enc = encrypt(pub, T, rng)
    rec = EnrolledRecord(c, t_enc, params.fingerprint(pub.n), label)
    secret = codec.PermutationSecret(tuple(u.tolist()), tuple(s.tolist()), tuple(v), w)
    return rec, secret, T, W


def enroll(x, params: ParamSet, pub: PublicKey, rng: random.Random | None = None,
           normalize: bool = False, label: str | None = None) -> EnrolledRecord:
    rec, _, _, _ = enroll_transparent(x, params, pub, rng, normalize, label)
    return rec
