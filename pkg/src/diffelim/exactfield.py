"""Prime-field arithmetic, prime generation, CRT, and rational reconstruction.

All modular computation in the package sits on this module. Residues are
plain Python ints in [0, p); rationals are ``fractions.Fraction``, whose
normalized numerator/denominator invariants match what the lifting code
needs. Every randomized routine takes an explicit ``random.Random`` so runs
are reproducible; use :func:`derived_rng` to derive independent, documented
streams from a single master seed.
"""

from __future__ import annotations

import hashlib
import math
import random
from fractions import Fraction
from typing import Iterable, Sequence

# Deterministic Miller-Rabin witness set, exact for all n < 3.3e24
# (covers every modulus this package can draws at <= 64 bits).
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


class BadPrimeError(ArithmeticError):
    """The current prime divides a denominator; the caller must pick a new one."""


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin for machine-word sized integers."""
    if n < 2:
        return False
    for p in _MR_WITNESSES:
        if n % p == 0:
            return n == p
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def random_prime(bits: int, rng: random.Random, avoid: Iterable[int] = ()) -> int:
    """Draw a uniform prime from [2^(bits-1), 2^bits), skipping ``avoid``."""
    if bits < 3:
        raise ValueError("prime bit length must be at least 3")
    blocked = set(avoid)
    while True:
        candidate = rng.randrange(1 << (bits - 1), 1 << bits) | 1
        if candidate not in blocked and is_prime(candidate):
            return candidate


def derived_rng(seed: int, label: str) -> random.Random:
    """Independent deterministic stream for one subsystem of a run.

    Streams are keyed by (seed, label) through SHA-256 so that e.g. the
    point-sampling stream never shifts when the order-estimation stream
    consumes a different amount of randomness.
    """
    digest = hashlib.sha256(f"{seed}/{label}".encode()).digest()
    return random.Random(int.from_bytes(digest[:16], "big"))


class PrimeField:
    """Arithmetic modulo a fixed machine-word sized prime.

    Elements are canonical residues in [0, modulus); operations return
    canonical residues. Instances are immutable and safe to share.
    """

    __slots__ = ("modulus",)

    def __init__(self, modulus: int):
        if not is_prime(modulus):
            raise ValueError(f"{modulus} is not prime")
        object.__setattr__(self, "modulus", modulus)

    def __setattr__(self, name, value):
        raise AttributeError("PrimeField is immutable")

    def __repr__(self):
        return f"PrimeField({self.modulus})"

    def __eq__(self, other):
        return isinstance(other, PrimeField) and other.modulus == self.modulus

    def __hash__(self):
        return hash(("PrimeField", self.modulus))

    def reduce(self, a: int) -> int:
        return a % self.modulus

    def add(self, a: int, b: int) -> int:
        s = a + b
        return s - self.modulus if s >= self.modulus else s

    def sub(self, a: int, b: int) -> int:
        d = a - b
        return d + self.modulus if d < 0 else d

    def mul(self, a: int, b: int) -> int:
        return a * b % self.modulus

    def neg(self, a: int) -> int:
        return self.modulus - a if a else 0

    def inv(self, a: int) -> int:
        if a % self.modulus == 0:
            raise ZeroDivisionError("inversion of zero residue")
        return pow(a, -1, self.modulus)

    def pow(self, a: int, e: int) -> int:
        return pow(a, e, self.modulus)

    def from_rational(self, q) -> int:
        """Image of an int or Fraction; raises BadPrimeError on a bad denominator."""
        if isinstance(q, int):
            return q % self.modulus
        if q.denominator % self.modulus == 0:
            raise BadPrimeError(f"{self.modulus} divides denominator of {q}")
        return q.numerator * pow(q.denominator, -1, self.modulus) % self.modulus

    def sample(self, rng: random.Random, count: int) -> list[int]:
        """Uniform residues; zeros are allowed by design."""
        return [rng.randrange(self.modulus) for _ in range(count)]


def crt_combine(residues: Sequence[tuple[int, int]]) -> tuple[int, int]:
    """Combine (value, modulus) pairs into the unique residue mod the product.

    The moduli must be pairwise coprime; a shared factor raises ValueError.
    """
    if not residues:
        raise ValueError("crt_combine requires at least one (value, modulus) pair")
    value, modulus = residues[0]
    value %= modulus
    for v, m in residues[1:]:
        g, s, _ = _xgcd(modulus, m)
        if g != 1:
            raise ValueError(f"moduli {modulus} and {m} are not coprime")
        # value + modulus * t == v (mod m)  =>  t = (v - value) * s (mod m)
        t = (v - value) * s % m
        value += modulus * t
        modulus *= m
        value %= modulus
    return value, modulus


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    return old_r, old_s, old_t


def rational_reconstruct(value: int, modulus: int) -> Fraction | None:
    """Recover n/d with |n|, d <= floor(sqrt(modulus/2)) from value mod modulus.

    Returns None when no admissible pair exists (the caller then adds a
    prime and retries). Uses the half-extended Euclidean scheme: stop as
    soon as the remainder drops to the size bound, then validate the
    cofactor.
    """
    if not 0 <= value < modulus:
        raise ValueError("value must be a canonical residue")
    bound = math.isqrt(modulus // 2)
    r0, r1 = modulus, value
    t0, t1 = 0, 1
    while r1 > bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        t0, t1 = t1, t0 - q * t1
    if t1 == 0 or abs(t1) > bound or math.gcd(r1, abs(t1)) != 1:
        return None
    if t1 < 0:
        return Fraction(-r1, -t1)
    return Fraction(r1, t1)
