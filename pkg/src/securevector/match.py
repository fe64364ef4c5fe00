"""Pairwise scoring of enrolled records.

The private-key holder only ever decrypts the homomorphic sum of two
tokens; no function here decrypts a single record's token.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import codec
from .enroll import EnrolledRecord, ParamsMismatch
from .paillier import Ciphertext, KeyPair, decrypt, homomorphic_add
from .params import ParamSet


@dataclass(frozen=True)
class MatchResult:
    score: float
    mode: str


def combine_tokens(t_x: Ciphertext, t_y: Ciphertext, keys: KeyPair,
                   params: ParamSet) -> codec.CombinedSecret:
    if keys.public.bits != params.S:
        raise ParamsMismatch(f"key has {keys.public.bits} bits, params expect S={params.S}")
    t_z = homomorphic_add(keys.public, t_x, t_y)
    try:
        T_z = decrypt(keys.private, keys.public, t_z)
    except ValueError as e:
        raise codec.CorruptToken(str(e)) from None
    return codec.combine(T_z, params.K, params.L)


def _segments(c, params: ParamSet) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64)
    if c.shape[-1] != params.d:
        raise ValueError(f"sanitized vectors must have length {params.d}")
    return c.reshape(c.shape[:-1] + (params.K, params.seg_len))


def segment_log_dots(c_x, c_y, params: ParamSet) -> tuple[np.ndarray, np.ndarray]:
    """Per-segment dot products as (log|dot|, sign).

    Segments are rescaled by their largest magnitude first: at high
    lm_ratio a segment can sit near 1e-185, and the raw elementwise
    product would underflow. Leading axes broadcast.
    """
    X, Y = _segments(c_x, params), _segments(c_y, params)
    mx = np.max(np.abs(X), axis=-1, keepdims=True)
    my = np.max(np.abs(Y), axis=-1, keepdims=True)
    mx = np.where(mx > 0, mx, 1.0)
    my = np.where(my > 0, my, 1.0)
    dots = np.sum((X / mx) * (Y / my), axis=-1)
    with np.errstate(divide="ignore"):
        logabs = np.log(np.abs(dots)) + np.log(mx[..., 0]) + np.log(my[..., 0])
    return logabs, np.sign(dots)


def reconstruct(log_dots: np.ndarray, signs: np.ndarray, z: codec.CombinedSecret,
                params: ParamSet) -> float:
    """Undo both permutations on per-segment dot products and sum.

    Each segment contributes s_z * exp(log W_x + log W_y - (u_z - 2L)/M) * dot,
    evaluated as a single exp of the summed logs.
    """
    logsum = codec.log_norm_sum(z.w_z, params.L, params.lm_ratio)
    u_z = np.asarray(z.u_z, dtype=np.float64)
    expo = logsum - (u_z - 2 * params.L) * (params.lm_ratio / params.L)
    mag = np.exp(expo + log_dots)
    return float(np.sum(np.asarray(z.s_z, dtype=np.float64) * signs * mag))


def score_cosine(c_x, c_y, z: codec.CombinedSecret, params: ParamSet) -> float:
    log_dots, signs = segment_log_dots(c_x, c_y, params)
    return reconstruct(log_dots, signs, z, params)


def finish_metric(dot: float, c_x, c_y, params: ParamSet) -> float:
    mode = params.metric_mode
    if mode in ("cosine-normalized", "dot-unnormalized"):
        return dot
    if mode == "euclidean-normalized":
        return 2.0 - 2.0 * dot
    # euclidean-unnormalized: ||c|| equals ||x|| for each record
    nx = float(np.dot(c_x, c_x))
    ny = float(np.dot(c_y, c_y))
    return nx + ny - 2.0 * dot


def score_metric(c_x, c_y, z: codec.CombinedSecret, params: ParamSet,
                 mode: str | None = None) -> MatchResult:
    if mode is not None and mode != params.metric_mode:
        raise ParamsMismatch(f"records enrolled for {params.metric_mode}, requested {mode}")
    dot = score_cosine(c_x, c_y, z, params)
    return MatchResult(finish_metric(dot, c_x, c_y, params), params.metric_mode)


def check_record(rec: EnrolledRecord, keys: KeyPair, params: ParamSet) -> None:
    want = params.fingerprint(keys.public.n)
    if rec.fingerprint != want:
        who = f" ({rec.label})" if rec.label else ""
        raise ParamsMismatch(f"record{who} was enrolled under different parameters or key")


def match_pair(rec_x: EnrolledRecord, rec_y: EnrolledRecord, keys: KeyPair,
               params: ParamSet) -> MatchResult:
    check_record(rec_x, keys, params)
    check_record(rec_y, keys, params)
    z = combine_tokens(rec_x.t_enc, rec_y.t_enc, keys, params)
    return score_metric(rec_x.c, rec_y.c, z, params)
