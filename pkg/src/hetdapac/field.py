"""Prime-field arithmetic and the small vector kit the protocols use.

Field elements are plain ints in [0, q); vectors are tuples of ints.
The field object carries the modulus and the operations, which keeps the
enumeration loops in the audits fast and allocation-free.

Index convention: unit vectors and row positions are 1-based, matching
the way query structures are written everywhere else in the package.
"""

from __future__ import annotations

import hashlib
import random


def is_prime(n: int) -> bool:
    """Trial division; entirely adequate for desk-scale moduli."""
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


class PrimeField:
    """The field of integers modulo a prime q."""

    def __init__(self, q: int):
        if not isinstance(q, int) or isinstance(q, bool) or not is_prime(q):
            raise ValueError(f"field modulus must be a prime integer, got {q!r}")
        self.q = q

    def __repr__(self) -> str:
        return f"PrimeField({self.q})"

    def __eq__(self, other) -> bool:
        return isinstance(other, PrimeField) and other.q == self.q

    def __hash__(self) -> int:
        return hash(("PrimeField", self.q))

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.q

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.q

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.q

    def neg(self, a: int) -> int:
        return (-a) % self.q

    def inv(self, a: int) -> int:
        if a % self.q == 0:
            raise ZeroDivisionError("0 has no multiplicative inverse")
        # q is prime, so a^(q-2) is the inverse by Fermat's little theorem
        return pow(a, self.q - 2, self.q)

    # vector helpers -------------------------------------------------

    def vec_add(self, u: tuple[int, ...], v: tuple[int, ...]) -> tuple[int, ...]:
        if len(u) != len(v):
            raise ValueError(f"length mismatch: {len(u)} vs {len(v)}")
        return tuple((a + b) % self.q for a, b in zip(u, v))

    def vec_sub(self, u: tuple[int, ...], v: tuple[int, ...]) -> tuple[int, ...]:
        if len(u) != len(v):
            raise ValueError(f"length mismatch: {len(u)} vs {len(v)}")
        return tuple((a - b) % self.q for a, b in zip(u, v))

    def vec_scale(self, c: int, v: tuple[int, ...]) -> tuple[int, ...]:
        return tuple((c * a) % self.q for a in v)

    def dot(self, u: tuple[int, ...], v: tuple[int, ...]) -> int:
        if len(u) != len(v):
            raise ValueError(f"length mismatch: {len(u)} vs {len(v)}")
        return sum(a * b for a, b in zip(u, v)) % self.q


def unit_vector(l: int, length: int) -> tuple[int, ...]:
    """e_l of the given length, 1-based: unit_vector(2, 3) == (0, 1, 0)."""
    if not 1 <= l <= length:
        raise ValueError(f"unit position {l} out of range [1, {length}]")
    return tuple(1 if i == l else 0 for i in range(1, length + 1))


def sample_uniform_vector(length: int, rng: random.Random, q: int) -> tuple[int, ...]:
    """A fresh uniform vector in F_q^length from the given stream."""
    return tuple(rng.randrange(q) for _ in range(length))


def derive_rng(master_seed, *labels) -> random.Random:
    """An independent deterministic stream for (master seed, role labels).

    Streams for different label tuples never share state, so the user's
    query randomness, the servers' shared pool and the store contents
    can all be derived from one master seed without interference.
    """
    tag = repr((master_seed,) + labels).encode()
    digest = hashlib.sha256(tag).digest()
    return random.Random(int.from_bytes(digest, "big"))
