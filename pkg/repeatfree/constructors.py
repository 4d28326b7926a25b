import logging
from math import isqrt
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from repeatfree.colouring import EdgeColouring
from repeatfree.errors import PreconditionError, RetryBudgetExhausted
from repeatfree.field import (
    PrimeFieldCtx,
    eval_poly_array,
    next_prime_at_least,
    sample_poly,
    solve_vandermonde3,
    solve_vandermonde3_array,
)
from repeatfree.utils import make_rng, num_pairs, pair_index, upper_pairs
from repeatfree.vizing import class_degrees, vizing_refine

logger = logging.getLogger(__name__)


class Family:
    """Registry of named colouring constructions, as used by `repeatfree construct --family`."""

    _family_registry: Dict[str, Tuple[Callable[..., EdgeColouring], Tuple[str, ...]]] = {}

    @classmethod
    def register(cls, name: str, builder: Callable[..., EdgeColouring], params: Sequence[str]):
        """Register a construction.

        Args:
            name: Family name on the command line, e.g. "alg-cycle".
            builder: Function returning an EdgeColouring.
            params: Keyword parameters the builder accepts.
        """
        cls._family_registry[name] = (builder, tuple(params))

    @classmethod
    def names(cls) -> List[str]:
        return sorted(cls._family_registry)

    @classmethod
    def params(cls, name: str) -> Tuple[str, ...]:
        return cls._lookup(name)[1]

    @classmethod
    def build(cls, name: str, **params) -> EdgeColouring:
        """Run a registered construction, passing only the parameters it declares."""
        builder, accepted = cls._lookup(name)
        missing = [p for p in accepted if params.get(p) is None and p not in OPTIONAL_PARAMS]
        if missing:
            raise PreconditionError(f"family {name!r} needs parameters {missing}")
        kwargs = {p: params[p] for p in accepted if params.get(p) is not None}
        return builder(**kwargs)

    @classmethod
    def _lookup(cls, name: str):
        try:
            return cls._family_registry[name]
        except KeyError:
            raise PreconditionError(f"unknown family {name!r}, choose from {cls.names()}") from None


OPTIONAL_PARAMS = frozenset({"seed", "gamma", "max_resamples", "max_backoffs", "max_retries", "max_degree"})


def rainbow_colouring(n: int) -> EdgeColouring:
    """Every edge its own colour."""
    return EdgeColouring(n, np.arange(num_pairs(n)), {"family": "rainbow", "n": n})


def _additive_pairs(n: int, modulus: int) -> np.ndarray:
    iu, ju = upper_pairs(n)
    return (iu + ju) % modulus


def additive_colouring(n: int) -> EdgeColouring:
    """Colour {a, b} with a + b mod n on Z_n.

    For even n the colouring of K_{n+1} is restricted to the first n vertices and compacted.
    """
    if n < 3:
        raise PreconditionError(f"additive_colouring needs n >= 3, got {n}")
    modulus = n if n % 2 else n + 1
    col = EdgeColouring(n, _additive_pairs(n, modulus), {"family": "additive", "n": n})
    logger.info("additive colouring of K_%d with %d colours", n, col.C)
    return col


def extended_additive_colouring(n: int) -> EdgeColouring:
    """1-factorization of K_n for even n: the additive colouring on Z_{n-1} with vertex n-1 joined to a in
    colour 2a mod (n-1)."""
    if n < 4 or n % 2:
        raise PreconditionError(f"extended_additive_colouring needs an even n >= 4, got {n}")
    modulus = n - 1
    iu, ju = upper_pairs(n)
    colours = np.where(ju == n - 1, (2 * iu) % modulus, (iu + ju) % modulus)
    return EdgeColouring(n, colours, {"family": "additive-ext", "n": n})


def quadratic_vertex(i: int, q: int) -> Tuple[int, int]:
    """The i-th point of F_q^2 in lexicographic order."""
    return divmod(i, q)


def quadratic_edge_colour(first: Tuple[int, int], second: Tuple[int, int], q: int) -> Optional[Tuple[int, int, int]]:
    """Colour of the edge between two points of F_q^2, or None for a degenerate edge (a = c, a = 1 or c = 1)."""
    (a, b), (c, d) = first, second
    if a == c or a == 1 or c == 1:
        return None
    return solve_vandermonde3(a, b, c, d, PrimeFieldCtx(q))


def quadratic_colouring(n: int) -> EdgeColouring:
    """Colour K_n on the first n points of F_q^2 by solving x1 + x2*X + x3*X^2 = Y through both endpoints
    and through (1, a + c).

    q is the smallest prime with q^2 >= n. Degenerate edges get unique colours after the q^3 solution
    colours; the ids are then compacted in that order.
    """
    if n < 4:
        raise PreconditionError(f"quadratic_colouring needs n >= 4, got {n}")
    q = next_prime_at_least(isqrt(n - 1) + 1)
    ctx = PrimeFieldCtx(q)
    iu, ju = upper_pairs(n)
    a, b = np.divmod(iu, q)
    c, d = np.divmod(ju, q)
    degenerate = (a == c) | (a == 1) | (c == 1)
    colours = np.empty(num_pairs(n), dtype=np.int64)
    colours[degenerate] = q**3 + np.arange(int(degenerate.sum()))
    live = ~degenerate
    x1, x2, x3 = solve_vandermonde3_array(a[live], b[live], c[live], d[live], ctx)
    colours[live] = (x1 * q + x2) * q + x3
    col = EdgeColouring(n, colours, {"family": "quadratic", "n": n, "q": q, "degenerate": int(degenerate.sum())})
    logger.info("quadratic colouring of K_%d over F_%d: %d colours, %d degenerate edges", n, q, col.C, degenerate.sum())
    return col


def _next_clique(n: int, free: List[int], size: int) -> Optional[List[int]]:
    """Lexicographically first clique of `size` vertices in the graph given by adjacency bitmasks `free`."""

    def extend(clique: List[int], candidates: int) -> Optional[List[int]]:
        if len(clique) == size:
            return clique
        while candidates:
            if bin(candidates).count("1") < size - len(clique):
                return None
            x = (candidates & -candidates).bit_length() - 1
            candidates &= candidates - 1
            found = extend(clique + [x], candidates & free[x])
            if found is not None:
                return found
        return None

    everyone = (1 << n) - 1
    return extend([], everyone)


def clique_matching_colouring(n: int, m: int) -> EdgeColouring:
    """Pack edge-disjoint copies of K_{2m+1} greedily and 1-factorize each one.

    Inside a packed clique with local positions 0..2m the class of a pair is (i + j) mod (2m + 1), a
    near-perfect matching of size m. Classes of different cliques are distinct and every edge outside
    the packing gets its own colour.
    """
    if m < 2 or n < 2 * m + 1:
        raise PreconditionError(f"clique_matching_colouring needs m >= 2 and n >= 2m+1, got n={n}, m={m}")
    size = 2 * m + 1
    free = [((1 << n) - 1) & ~(1 << x) for x in range(n)]
    colours = np.full(num_pairs(n), -1, dtype=np.int64)
    cliques = 0
    while True:
        clique = _next_clique(n, free, size)
        if clique is None:
            break
        for i, x in enumerate(clique):
            for j in range(i + 1, size):
                y = clique[j]
                colours[pair_index(x, y, n)] = cliques * size + (i + j) % size
                free[x] &= ~(1 << y)
                free[y] &= ~(1 << x)
        cliques += 1
    leftover = colours < 0
    colours[leftover] = cliques * size + np.arange(int(leftover.sum()))
    logger.info("packed %d copies of K_%d into K_%d, %d leftover edges", cliques, size, n, leftover.sum())
    return EdgeColouring(
        n, colours, {"family": "clique-matching", "n": n, "m": m, "cliques": cliques, "leftover": int(leftover.sum())}
    )


def random_algebraic_cycle_colouring(n: int, d: int, seed: Optional[int] = None, max_retries: int = 20) -> EdgeColouring:
    """Colour {i, j}, i < j, with g(i, j) for a random bivariate polynomial g of degree <= d over F_q.

    q is the smallest prime >= n. The polynomial is resampled while some colour class has a vertex of
    degree above 2d, then the raw colouring is refined to a proper one with vizing_refine.

    Raises:
        RetryBudgetExhausted: If no sampled polynomial is 2d-bounded within `max_retries` draws.
    """
    if d < 2 or n < 3:
        raise PreconditionError(f"random_algebraic_cycle_colouring needs d >= 2 and n >= 3, got n={n}, d={d}")
    q = next_prime_at_least(n)
    ctx = PrimeFieldCtx(q)
    rng = make_rng(seed)
    points = np.stack(upper_pairs(n), axis=1)
    b_star = None
    for retry in range(max_retries):
        g = sample_poly(2, d, ctx, rng)
        raw = EdgeColouring(n, eval_poly_array(g, points))
        b_star = int(class_degrees(raw).max())
        if b_star <= 2 * d:
            break
        logger.debug("alg-cycle draw %d is %d-bounded, above 2d=%d", retry, b_star, 2 * d)
    else:
        raise RetryBudgetExhausted(f"no 2d-bounded polynomial in {max_retries} draws", last_event=b_star)
    refined = vizing_refine(raw, b_star)
    return refined.with_meta(family="alg-cycle", n=n, d=d, seed=seed, q=q, b_star=b_star, retries=retry)


def integer_root_ceil(n: int, m: int) -> int:
    """Smallest r with r**m >= n."""
    r = max(1, int(round(n ** (1.0 / m))))
    while r**m < n:
        r += 1
    while r > 1 and (r - 1) ** m >= n:
        r -= 1
    return r


def tree_vertex_digits(n: int, q: int, m: int) -> np.ndarray:
    """Base-q digits (most significant first) of 0..n-1, i.e. the first n points of F_q^m in lex order."""
    digits = np.empty((n, m), dtype=np.int64)
    rest = np.arange(n, dtype=np.int64)
    for position in range(m - 1, -1, -1):
        rest, digits[:, position] = np.divmod(rest, q)
    return digits


def random_algebraic_tree_colouring(
    n: int,
    m: int,
    d: int,
    seed: Optional[int] = None,
    max_retries: int = 20,
    max_degree: Optional[int] = None,
) -> EdgeColouring:
    """Colour {i, j}, i before j, with the tuple (g_1(i, j), ..., g_{m+1}(i, j)) of m + 1 random polynomials in
    2m variables over F_q, vertices being the first n points of F_q^m.

    q is the smallest prime >= the ceiling of n^(1/m). Draws whose max class degree k' exceeds `max_degree`
    (default 2 * d**m) are rejected; the accepted raw colouring is refined with vizing_refine(k').
    """
    if m < 1 or d < 2 or n < 2:
        raise PreconditionError(f"random_algebraic_tree_colouring needs m >= 1, d >= 2, got m={m}, d={d}")
    threshold = 2 * d**m if max_degree is None else max_degree
    q = next_prime_at_least(max(2, integer_root_ceil(n, m)))
    ctx = PrimeFieldCtx(q)
    rng = make_rng(seed)
    digits = tree_vertex_digits(n, q, m)
    iu, ju = upper_pairs(n)
    points = np.concatenate([digits[iu], digits[ju]], axis=1)
    k_prime = None
    for retry in range(max_retries):
        polys = [sample_poly(2 * m, d, ctx, rng) for _ in range(m + 1)]
        code = np.zeros(len(points), dtype=np.int64)
        for g in polys:
            code = code * q + eval_poly_array(g, points)
        raw = EdgeColouring(n, code)
        k_prime = int(class_degrees(raw).max())
        if k_prime <= threshold:
            break
        logger.debug("alg-tree draw %d is %d-bounded, above %d", retry, k_prime, threshold)
    else:
        raise RetryBudgetExhausted(f"no {threshold}-bounded polynomial tuple in {max_retries} draws", last_event=k_prime)
    refined = vizing_refine(raw, k_prime)
    return refined.with_meta(family="alg-tree", n=n, m=m, d=d, seed=seed, q=q, k_prime=k_prime, retries=retry)
