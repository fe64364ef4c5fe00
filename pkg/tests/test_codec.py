import itertools
import math
import random

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from securevector import codec
from securevector.codec import (
    CorruptToken,
    combine,
    decode_signs,
    encode_signs,
    log_norm_sum,
    norm_levels,
    pack,
    quantize_norm,
    unpack,
)
from securevector.params import max_L, min_key_size


def digits_oracle(u, v, w, L):
    """Assemble the token straight from its digit list, least significant first."""
    base = 4 * L
    return sum(d * base**i for i, d in enumerate(list(u) + list(v))) + w * base ** (2 * len(u))


def random_secret(K, L, rng):
    u = [rng.randrange(2 * L) for _ in range(K)]
    s = [rng.choice((1, -1)) for _ in range(K)]
    v = encode_signs(s, L, rng)
    w = rng.randrange(norm_levels(L))
    return u, s, v, w


# -- signs -----------------------------------------------------------------

def test_encode_signs_parity_classes():
    rng = random.Random(0)
    plus = {encode_signs([1], 2, rng)[0] for _ in range(200)}
    minus = {encode_signs([-1], 2, rng)[0] for _ in range(200)}
    assert plus == {0, 2}
    assert minus == {1, 3}


def test_encode_signs_rejects():
    with pytest.raises(ValueError):
        encode_signs([1], 1, random.Random(0))
    with pytest.raises(ValueError):
        encode_signs([0], 3, random.Random(0))


def test_decode_signs_examples():
    assert decode_signs([0]) == [1]
    assert decode_signs([3]) == [-1]


def test_sign_roundtrip_1000():
    rng = random.Random(1)
    for _ in range(1000):
        K = rng.randrange(1, 20)
        L = rng.randrange(2, 10)
        s = [rng.choice((1, -1)) for _ in range(K)]
        v = encode_signs(s, L, rng)
        assert all(0 <= x < 2 * L for x in v)
        assert decode_signs(v) == s


# -- quantization ----------------------------------------------------------

@pytest.mark.parametrize("L", [2, 3, 18])
def test_quantize_midpoint(L):
    assert quantize_norm(1.0, L, 128.0) == norm_levels(L) // 2


def test_quantize_lower_boundary():
    assert quantize_norm(math.exp(-128.0), 3, 128.0) == 0


def test_quantize_upper_end_is_clamped():
    # log W exactly L/M lies past the upper bound (L-1)/M only for tiny slack;
    # the last admissible value must land in range
    lo, hi = codec.log_norm_bounds(3, 128.0)
    assert quantize_norm(math.exp(hi), 3, 128.0) < norm_levels(3)


def _w_oracle(W, L, r):
    with mpmath.workdps(50):
        return int(mpmath.floor((mpmath.log(mpmath.mpf(W)) + r) / (2 * r) * norm_levels(L)))


@pytest.mark.parametrize("logW", [64.123456, -100.123457, 3.3, 85.1])
def test_quantize_closed_form_high_precision(logW):
    W = math.exp(logW)
    assert quantize_norm(W, 3, 128.0) == _w_oracle(W, 3, 128.0)


def test_quantize_exact_boundary_within_one_step():
    # log(exp(64)) lands on an interval edge; double rounding may pick either side
    W = math.exp(64.0)
    assert abs(quantize_norm(W, 3, 128.0) - _w_oracle(W, 3, 128.0)) <= 1


def test_quantize_rejects_out_of_range():
    L, r = 3, 128.0
    M = L / r
    with pytest.raises(ValueError):
        quantize_norm(0.0, L, r)
    with pytest.raises(ValueError):
        quantize_norm(-1.0, L, r)
    with pytest.raises(ValueError):
        quantize_norm(math.exp(-L / M - 1), L, r)
    # e^(64/M) is far past the upper bound e^((L-1)/M)
    with pytest.raises(ValueError):
        quantize_norm(math.exp(min(64 / M, 700.0)), L, r)


def test_log_norm_sum_examples():
    L, r = 3, 128.0
    assert log_norm_sum(norm_levels(L), L, r) == 0.0
    assert log_norm_sum(0, L, r) == pytest.approx(-2 * r)


def test_log_norm_sum_error_bound():
    rng = random.Random(2)
    for L, r in [(3, 128.0), (2, 4.0), (18, 128.0)]:
        lo, hi = codec.log_norm_bounds(L, r)
        step = 2 * r / norm_levels(L)
        for _ in range(500):
            a, b = rng.uniform(lo, hi), rng.uniform(lo, hi)
            Wa, Wb = math.exp(a), math.exp(b)
            wz = quantize_norm(Wa, L, r) + quantize_norm(Wb, L, r)
            exact = math.log(Wa) + math.log(Wb)
            assert abs(log_norm_sum(wz, L, r) - exact) <= 2 * step + 1e-12


# -- packing ---------------------------------------------------------------

def test_pack_zero():
    assert pack([0, 0], [0, 0], 0, 2, 2) == 0
    assert unpack(0, 2, 2) == ([0, 0], [0, 0], 0)


def test_pack_worked_example():
    T = pack([1, 3], [0, 2], 5, 2, 2)
    assert T == digits_oracle([1, 3], [0, 2], 5, 2) == 21529
    assert unpack(T, 2, 2) == ([1, 3], [0, 2], 5)
    assert unpack(T + T, 2, 2) == ([2, 6], [0, 4], 10)


def test_pack_rejects_out_of_range():
    with pytest.raises(ValueError):
        pack([4], [0], 0, 1, 2)
    with pytest.raises(ValueError):
        pack([0], [-1], 0, 1, 2)
    with pytest.raises(ValueError):
        pack([0], [0], norm_levels(2), 1, 2)
    with pytest.raises(ValueError):
        pack([0, 0], [0], 0, 2, 2)


def test_unpack_rejects_corrupt():
    with pytest.raises(CorruptToken):
        unpack((4 * 2) ** (2 * 1 + 9), 1, 2)
    with pytest.raises(CorruptToken):
        unpack(-1, 1, 2)


def test_combine_rejects_digit_above_no_carry_bound():
    # digit 7 = 4L-1 at L=2 cannot be a sum of two digits < 2L
    with pytest.raises(CorruptToken):
        combine(7, 1, 2)


def check_pair(ux, vx, wx, sx, uy, vy, wy, sy, K, L):
    Tx, Ty = pack(ux, vx, wx, K, L), pack(uy, vy, wy, K, L)
    Tz = Tx + Ty
    base = 4 * L
    # no carry: the low 2K digits of the sum are the digitwise sums
    low = Tz % base ** (2 * K)
    assert low == digits_oracle([a + b for a, b in zip(ux, uy)],
                                [a + b for a, b in zip(vx, vy)], 0, L)
    # size bound, tight and loose forms
    assert Tz <= base ** (2 * K + 8) - 1
    assert Tz < base ** (2 * K + 9)
    # unpacking recovers the sums
    u_z, v_z, w_z = unpack(Tz, K, L)
    assert u_z == [a + b for a, b in zip(ux, uy)]
    assert v_z == [a + b for a, b in zip(vx, vy)]
    assert w_z == wx + wy
    # sign parity gives the product
    assert decode_signs(v_z) == [a * b for a, b in zip(sx, sy)]
    z = combine(Tz, K, L)
    assert z.u_z == tuple(u_z) and z.w_z == w_z


def test_packing_exhaustive_K1_L2():
    L = 2
    Q = norm_levels(L)
    ws = [0, 1, Q // 2, Q - 2, Q - 1]
    digits = range(2 * L)
    count = 0
    for ux, vx, uy, vy in itertools.product(digits, repeat=4):
        sx, sy = decode_signs([vx]), decode_signs([vy])
        for wx, wy in itertools.product(ws, repeat=2):
            check_pair([ux], [vx], wx, sx, [uy], [vy], wy, sy, 1, L)
            count += 1
    assert count == 256 * 25


def test_packing_random_K64_L3():
    rng = random.Random(3)
    K, L = 64, 3
    for _ in range(10_000):
        ux, sx, vx, wx = random_secret(K, L, rng)
        uy, sy, vy, wy = random_secret(K, L, rng)
        check_pair(ux, vx, wx, sx, uy, vy, wy, sy, K, L)


def test_packing_extreme_digits():
    K, L = 64, 3
    Q = norm_levels(L)
    top = [2 * L - 1] * K
    check_pair(top, top, Q - 1, [-1] * K, top, top, Q - 1, [-1] * K, K, L)


@st.composite
def secret_pairs(draw):
    K = draw(st.integers(1, 16))
    L = draw(st.integers(2, 40))
    dig = st.lists(st.integers(0, 2 * L - 1), min_size=K, max_size=K)
    w = st.integers(0, norm_levels(L) - 1)
    return K, L, draw(dig), draw(dig), draw(w), draw(dig), draw(dig), draw(w)


@settings(max_examples=300)
@given(secret_pairs())
def test_packing_property(case):
    K, L, ux, vx, wx, uy, vy, wy = case
    check_pair(ux, vx, wx, decode_signs(vx), uy, vy, wy, decode_signs(vy), K, L)


@settings(max_examples=200)
@given(S=st.integers(64, 4096), K=st.integers(1, 256))
def test_capacity_fits_any_modulus(S, K):
    """The largest possible token sum stays below every S-bit modulus."""
    try:
        L = max_L(S, K)
    except ValueError:
        return
    assert min_key_size(K, L) <= S
    largest_sum = (4 * L) ** (2 * K + 8) - 1
    assert largest_sum < 2 ** (S - 1)
