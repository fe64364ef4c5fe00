"""Paillier additive homomorphic encryption with the g = n + 1 simplification.

Encrypting m gives (1 + m*n) * r^n mod n^2. Multiplying two ciphertexts
adds their plaintexts mod n.

A note on "security bits": this package follows the convention of calling
the modulus size S the security parameter. A 512-bit modulus factors with
modest resources and gives far fewer than 512 bits of real security. Use
S >= 2048 for anything that matters.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

import gmpy2

MIN_KEY_BITS = 64
# Miller-Rabin rounds; each round lets a composite through with probability <= 1/4.
_MR_ROUNDS = 50


def system_rng() -> random.Random:
    """Entropy-backed random source for production use."""
    return random.SystemRandom()


def seeded_rng(seed: int) -> random.Random:
    """Deterministic random source. Only for tests and reproducible runs."""
    return random.Random(seed)


@dataclass(frozen=True)
class PublicKey:
    n: int
    n_squared: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("modulus too small")
        object.__setattr__(self, "n_squared", self.n * self.n)

    @property
    def g(self) -> int:
        return self.n + 1

    @property
    def bits(self) -> int:
        return self.n.bit_length()


@dataclass(frozen=True)
class PrivateKey:
    """Decryption material.

    ``p`` and ``q`` are optional; when present, decryption uses the CRT
    split, which gives the same result as the lambda/mu formula but is
    several times faster.
    """

    lam: int
    mu: int
    p: int | None = None
    q: int | None = None

    def __post_init__(self):
        if (self.p is None) != (self.q is None):
            raise ValueError("p and q must be given together")
        if self.p is not None:
            object.__setattr__(self, "_crt", _crt_tables(self.p, self.q))


@dataclass(frozen=True)
class KeyPair:
    public: PublicKey
    private: PrivateKey


@dataclass(frozen=True)
class Ciphertext:
    value: int


def _crt_tables(p: int, q: int):
    n = p * q
    p2, q2 = p * p, q * q
    # h_p = L_p(g^(p-1) mod p^2)^-1 mod p, same for q
    hp = int(gmpy2.invert((gmpy2.powmod(n + 1, p - 1, p2) - 1) // p, p))
    hq = int(gmpy2.invert((gmpy2.powmod(n + 1, q - 1, q2) - 1) // q, q))
    return p2, q2, hp, hq, int(gmpy2.invert(q, p))


def _random_prime(bits: int, rng: random.Random) -> int:
    while True:
        cand = rng.getrandbits(bits) | (1 << (bits - 1)) | (1 << (bits - 2)) | 1
        if gmpy2.is_prime(cand, _MR_ROUNDS):
            return cand


def keygen(bits: int, rng: random.Random | None = None) -> KeyPair:
    """Generate a key pair whose modulus has exactly ``bits`` bits.

    Both primes have ``bits // 2`` bits with the top two bits set, which
    makes the product exactly ``bits`` long.
    """
    if bits < MIN_KEY_BITS:
        raise ValueError(f"key size {bits} below minimum {MIN_KEY_BITS}")
    if bits % 2:
        raise ValueError(f"key size must be even, got {bits}")
    rng = rng or system_rng()
    half = bits // 2
    while True:
        p = _random_prime(half, rng)
        q = _random_prime(half, rng)
        if p == q:
            continue
        n = p * q
        # gcd(n, (p-1)(q-1)) = 1 is needed for g = n+1; equal-size primes make it
        # near certain, but check anyway.
        if gmpy2.gcd(n, (p - 1) * (q - 1)) != 1:
            continue
        break
    assert n.bit_length() == bits
    lam = int(gmpy2.lcm(p - 1, q - 1))
    mu = int(gmpy2.invert(lam, n))
    return KeyPair(PublicKey(n), PrivateKey(lam, mu, p, q))


def encrypt(pub: PublicKey, m: int, rng: random.Random | None = None) -> Ciphertext:
    if m < 0 or m >= pub.n:
        raise ValueError("plaintext out of range [0, n)")
    rng = rng or system_rng()
    n, nsq = pub.n, pub.n_squared
    while True:
        r = rng.randrange(1, n)
        if gmpy2.gcd(r, n) == 1:
            break
    c = (1 + m * n) % nsq * gmpy2.powmod(r, n, nsq) % nsq
    return Ciphertext(int(c))


def decrypt(priv: PrivateKey, pub: PublicKey, ct: Ciphertext) -> int:
    c = ct.value
    if c < 0 or c >= pub.n_squared:
        raise ValueError("ciphertext out of range [0, n^2)")
    if priv.p is not None:
        p, q = priv.p, priv.q
        p2, q2, hp, hq, qinv = priv._crt
        mp = (gmpy2.powmod(c, p - 1, p2) - 1) // p * hp % p
        mq = (gmpy2.powmod(c, q - 1, q2) - 1) // q * hq % q
        return int(mq + q * ((mp - mq) * qinv % p))
    n = pub.n
    x = gmpy2.powmod(c, priv.lam, pub.n_squared)
    return int((x - 1) // n * priv.mu % n)


def homomorphic_add(pub: PublicKey, a: Ciphertext, b: Ciphertext) -> Ciphertext:
    """Ciphertext whose plaintext is m_a + m_b (mod n)."""
    return Ciphertext(a.value * b.value % pub.n_squared)
