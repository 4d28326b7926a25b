import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterator, Sequence, Tuple

import numpy as np

from repeatfree.errors import FieldOverflowError, PreconditionError, SingularSystemError

logger = logging.getLogger(__name__)

MAX_MODULUS = (1 << 32) - 1

# deterministic for every n < 3.3 * 10^24
MILLER_RABIN_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def is_prime(x: int) -> bool:
    """Deterministic Miller-Rabin primality test."""
    if x < 2:
        return False
    for p in MILLER_RABIN_BASES:
        if x % p == 0:
            return x == p
    d, s = x - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in MILLER_RABIN_BASES:
        y = pow(a, d, x)
        if y in (1, x - 1):
            continue
        for _ in range(s - 1):
            y = y * y % x
            if y == x - 1:
                break
        else:
            return False
    return True


def next_prime_at_least(x: int) -> int:
    """Return the smallest prime q >= x.

    Args:
        x (int): Lower bound, at least 2.

    Returns:
        int: The prime. Raises FieldOverflowError if it does not fit into 32 bits.
    """
    if x < 2:
        raise PreconditionError(f"next_prime_at_least needs x >= 2, got {x}")
    q = int(x)
    while not is_prime(q):
        q += 1
        if q > MAX_MODULUS:
            break
    if q > MAX_MODULUS:
        raise FieldOverflowError(f"no prime >= {x} fits into 32 bits")
    return q


@dataclass(frozen=True)
class PrimeFieldCtx:
    """Arithmetic in F_q. Elements are the canonical representatives 0..q-1."""

    q: int

    def __post_init__(self):
        if self.q > MAX_MODULUS:
            raise FieldOverflowError(f"modulus {self.q} does not fit into 32 bits")
        if not is_prime(self.q):
            raise PreconditionError(f"{self.q} is not prime")

    def element(self, x: int) -> int:
        return int(x) % self.q

    def add(self, x: int, y: int) -> int:
        return (x + y) % self.q

    def sub(self, x: int, y: int) -> int:
        return (x - y) % self.q

    def mul(self, x: int, y: int) -> int:
        return x * y % self.q

    def inv(self, x: int) -> int:
        x %= self.q
        if x == 0:
            raise ZeroDivisionError("0 has no inverse in F_q")
        return pow(x, self.q - 2, self.q)

    def inv_array(self, x: np.ndarray) -> np.ndarray:
        """Elementwise inverse via Fermat; zeros map to zero."""
        q = np.uint64(self.q)
        base = np.asarray(x, dtype=np.uint64) % q
        result = np.ones_like(base)
        e = self.q - 2
        while e:
            if e & 1:
                result = result * base % q
            base = base * base % q
            e >>= 1
        return result


def monomials(t: int, d: int) -> Iterator[Tuple[int, ...]]:
    """Exponent vectors of t variables with total degree <= d, by degree and then descending lex order."""

    def compositions(remaining: int, slots: int) -> Iterator[Tuple[int, ...]]:
        if slots == 1:
            yield (remaining,)
            return
        for first in range(remaining, -1, -1):
            for rest in compositions(remaining - first, slots - 1):
                yield (first,) + rest

    for total in range(d + 1):
        yield from compositions(total, t)


@dataclass(frozen=True)
class MultiPoly:
    """A polynomial in t variables over F_q with total degree at most d, stored densely over the simplex.

    Args:
        t: Number of variables.
        d: Total-degree bound.
        ctx: The field.
        coefficients: One coefficient per exponent vector of `monomials(t, d)`, in that order.
    """

    t: int
    d: int
    ctx: PrimeFieldCtx
    coefficients: Tuple[int, ...]

    def __post_init__(self):
        if len(self.coefficients) != len(self.exponents):
            raise PreconditionError(
                f"expected {len(self.exponents)} coefficients for t={self.t}, d={self.d}, got {len(self.coefficients)}"
            )
        object.__setattr__(self, "coefficients", tuple(int(c) % self.ctx.q for c in self.coefficients))

    @cached_property
    def exponents(self) -> Tuple[Tuple[int, ...], ...]:
        return tuple(monomials(self.t, self.d))

    @property
    def coeffs(self) -> Dict[Tuple[int, ...], int]:
        return dict(zip(self.exponents, self.coefficients))

    @classmethod
    def constant(cls, t: int, d: int, ctx: PrimeFieldCtx, value: int) -> "MultiPoly":
        count = sum(1 for _ in monomials(t, d))
        return cls(t, d, ctx, (value,) + (0,) * (count - 1))

    @classmethod
    def from_coeffs(cls, t: int, d: int, ctx: PrimeFieldCtx, coeffs: Dict[Tuple[int, ...], int]) -> "MultiPoly":
        for exponent in coeffs:
            if len(exponent) != t or sum(exponent) > d:
                raise PreconditionError(f"exponent vector {exponent} outside the degree-{d} simplex in {t} variables")
        return cls(t, d, ctx, tuple(coeffs.get(exponent, 0) for exponent in monomials(t, d)))


def sample_poly(t: int, d: int, ctx: PrimeFieldCtx, rng: np.random.Generator) -> MultiPoly:
    """Draw every coefficient independently and uniformly from F_q.

    Args:
        t (int): Number of variables, at least 1.
        d (int): Total-degree bound, at least 1.
        ctx (PrimeFieldCtx): The field.
        rng (np.random.Generator): Seeded generator (see `utils.make_rng`).

    Returns:
        MultiPoly: The sampled polynomial.
    """
    if t < 1 or d < 1:
        raise PreconditionError(f"sample_poly needs t >= 1 and d >= 1, got t={t}, d={d}")
    count = sum(1 for _ in monomials(t, d))
    coefficients = rng.integers(0, ctx.q, size=count, dtype=np.int64)
    return MultiPoly(t, d, ctx, tuple(int(c) for c in coefficients))


def eval_poly(p: MultiPoly, point: Sequence[int]) -> int:
    """Evaluate p at a point of F_q^t."""
    if len(point) != p.t:
        raise PreconditionError(f"point has {len(point)} coordinates, polynomial has {p.t} variables")
    q = p.ctx.q
    total = 0
    for coefficient, exponent in zip(p.coefficients, p.exponents):
        if coefficient == 0:
            continue
        term = coefficient
        for x, e in zip(point, exponent):
            if e:
                term = term * pow(int(x), e, q) % q
        total += term
    return total % q


def eval_poly_array(p: MultiPoly, points: np.ndarray) -> np.ndarray:
    """Evaluate p at every row of an (N, t) array of field elements.

    Returns:
        np.ndarray: int64 values in [0, q).
    """
    points = np.asarray(points)
    if points.ndim != 2 or points.shape[1] != p.t:
        raise PreconditionError(f"expected points of shape (N, {p.t}), got {points.shape}")
    q = np.uint64(p.ctx.q)
    base = points.astype(np.uint64) % q
    powers = []
    for i in range(p.t):
        table = [np.ones(len(points), dtype=np.uint64)]
        for _ in range(p.d):
            table.append(table[-1] * base[:, i] % q)
        powers.append(table)
    total = np.zeros(len(points), dtype=np.uint64)
    for coefficient, exponent in zip(p.coefficients, p.exponents):
        if coefficient == 0:
            continue
        term = np.full(len(points), coefficient, dtype=np.uint64)
        for i, e in enumerate(exponent):
            if e:
                term = term * powers[i][e] % q
        total = (total + term) % q
    return total.astype(np.int64)


def solve_vandermonde3(a: int, b: int, c: int, d: int, ctx: PrimeFieldCtx) -> Tuple[int, int, int]:
    """Solve x1 + x2*X + x3*X^2 = Y at the three points (a, b), (c, d) and (1, a + c) over F_q.

    The solution is read off the Lagrange basis of the three nodes a, c, 1.

    Raises:
        SingularSystemError: If a, c and 1 are not pairwise distinct in F_q.
    """
    q = ctx.q
    a, b, c, d = a % q, b % q, c % q, d % q
    if a == c or a == 1 or c == 1:
        raise SingularSystemError(f"nodes a={a}, c={c}, 1 are not pairwise distinct mod {q}")
    nodes = (
        (b, c, -(c + 1), (a - c) * (a - 1)),
        (d, a, -(a + 1), (c - a) * (c - 1)),
        ((a + c) % q, a * c, -(a + c), (1 - a) * (1 - c)),
    )
    x1 = x2 = x3 = 0
    for y, const, lin, den in nodes:
        scale = y * ctx.inv(den) % q
        x1 += scale * const
        x2 += scale * lin
        x3 += scale
    return x1 % q, x2 % q, x3 % q


def solve_vandermonde3_array(
    a: np.ndarray, b: np.ndarray, c: np.ndarray, d: np.ndarray, ctx: PrimeFieldCtx
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised solve_vandermonde3 over equally shaped arrays of field elements."""
    q = ctx.q
    a, b, c, d = (np.asarray(x, dtype=np.int64) % q for x in (a, b, c, d))
    if np.any((a == c) | (a == 1) | (c == 1)):
        raise SingularSystemError("some system has nodes that are not pairwise distinct")
    nodes = (
        (b, c, -(c + 1), (a - c) * (a - 1)),
        (d, a, -(a + 1), (c - a) * (c - 1)),
        ((a + c) % q, a * c, -(a + c), (1 - a) * (1 - c)),
    )
    x1 = np.zeros_like(a)
    x2 = np.zeros_like(a)
    x3 = np.zeros_like(a)
    for y, const, lin, den in nodes:
        scale = y * ctx.inv_array(den % q).astype(np.int64) % q
        x1 = (x1 + scale * (const % q)) % q
        x2 = (x2 + scale * (lin % q)) % q
        x3 = (x3 + scale) % q
    return x1, x2, x3
