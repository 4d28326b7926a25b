"""Enumeration of the copies of a pattern inside K_n and their colour-signature buckets.

A copy is stored as an embedding, the row of host vertices of pattern vertices 0..v-1. Every unlabelled
copy is produced exactly once: an embedding is kept iff it is the least of its Aut(H) orbit, which along
the stabiliser chain of `pattern.automorphisms` reduces to the order constraints phi[i] < phi[j].
"""

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import perm
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from repeatfree.colouring import EdgeColouring
from repeatfree.pattern import AutomorphismGroup, PatternGraph, automorphisms
from repeatfree.utils import pair_index_array

logger = logging.getLogger(__name__)

DEFAULT_MAX_ROWS = 1 << 18

# fixed odd 64-bit multipliers for the row hash
HASH_MULTIPLIER = np.uint64(0x9E3779B97F4A7C15)
HASH_INCREMENT = np.uint64(0xBF58476D1CE4E5B9)


def copy_count(n: int, pattern: PatternGraph) -> int:
    """Number of (unlabelled) copies of the pattern in K_n."""
    return perm(n, pattern.v) // automorphisms(pattern).order if n >= pattern.v else 0


def _lower_bounds(aut: AutomorphismGroup) -> List[List[int]]:
    before = [[] for _ in range(aut.pattern.v)]
    for i, j in aut.symmetry_constraints:
        before[j].append(i)
    return before


def iter_embeddings(
    n: int,
    pattern: PatternGraph,
    first_vertices: Optional[Sequence[int]] = None,
    max_rows: int = DEFAULT_MAX_ROWS,
) -> Iterator[np.ndarray]:
    """Yield blocks of canonical embeddings, each an (N, v) int32 array.

    Args:
        n (int): Host size.
        pattern (PatternGraph): The pattern.
        first_vertices (list, optional): Restrict the image of pattern vertex 0 to these hosts.
        max_rows (int): Upper bound on the rows of an intermediate block.
    """
    aut = automorphisms(pattern)
    before = _lower_bounds(aut)
    v = pattern.v
    hosts = np.arange(n, dtype=np.int32)
    firsts = range(n) if first_vertices is None else first_vertices

    def extend(block: np.ndarray) -> Iterator[np.ndarray]:
        level = block.shape[1]
        if level == v:
            yield block
            return
        mask = np.ones((block.shape[0], n), dtype=bool)
        rows = np.arange(block.shape[0])
        for j in range(level):
            mask[rows, block[:, j]] = False
        for j in before[level]:
            mask &= hosts[None, :] > block[:, j : j + 1]
        parent, child = np.nonzero(mask)
        grown = np.concatenate([block[parent], hosts[child][:, None]], axis=1)
        for start in range(0, grown.shape[0], max_rows):
            yield from extend(grown[start : start + max_rows])

    for first in firsts:
        yield from extend(np.array([[first]], dtype=np.int32))


def all_embeddings(n: int, pattern: PatternGraph) -> np.ndarray:
    blocks = list(iter_embeddings(n, pattern))
    if not blocks:
        return np.empty((0, pattern.v), dtype=np.int32)
    return np.concatenate(blocks)


def embedding_pairs(pattern: PatternGraph, embeddings: np.ndarray, n: int) -> np.ndarray:
    """Host pair index (see `utils.pair_index`) of every pattern edge of every embedding, shape (N, e)."""
    us = np.array([u for u, _ in pattern.edges])
    ws = np.array([w for _, w in pattern.edges])
    return pair_index_array(embeddings[:, us], embeddings[:, ws], n)


def min_signatures(colours: np.ndarray, edge_permutations: Sequence[Sequence[int]]) -> np.ndarray:
    """Row-wise lexicographic minimum of the colour rows over all edge permutations."""
    best = colours[:, list(edge_permutations[0])].copy()
    rows = np.arange(colours.shape[0])
    for permutation in edge_permutations[1:]:
        candidate = colours[:, list(permutation)]
        differs = candidate != best
        first = differs.argmax(axis=1)
        smaller = differs.any(axis=1) & (candidate[rows, first] < best[rows, first])
        best[smaller] = candidate[smaller]
    return best


def hash_rows(rows: np.ndarray) -> np.ndarray:
    """64-bit hash of every row; equal rows hash equally."""
    h = np.zeros(rows.shape[0], dtype=np.uint64)
    for column in rows.T:
        h = (h ^ (column.astype(np.uint64) + HASH_INCREMENT)) * HASH_MULTIPLIER
        h ^= h >> np.uint64(29)
    return h


def block_signatures(col: EdgeColouring, pattern: PatternGraph, embeddings: np.ndarray) -> np.ndarray:
    aut = automorphisms(pattern)
    colours = col.pair_colours[embedding_pairs(pattern, embeddings, col.n)]
    return min_signatures(colours, aut.edge_permutations)


@dataclass(frozen=True)
class SignatureBucket:
    """All copies of a pattern sharing one colour signature. Embeddings are sorted row-wise."""

    signature: Tuple[int, ...]
    embeddings: np.ndarray

    @property
    def size(self) -> int:
        return self.embeddings.shape[0]


def _first_vertex_chunks(n: int, threads: int) -> List[List[int]]:
    if threads <= 1:
        return [list(range(n))]
    return [list(range(start, n, threads)) for start in range(threads)]


def signature_buckets(
    col: EdgeColouring, pattern: PatternGraph, min_size: int = 2, threads: int = 1
) -> List[SignatureBucket]:
    """Group the copies of a pattern by colour signature and keep the buckets with >= min_size copies.

    The copies are enumerated twice. The first pass only counts row hashes, the second keeps the copies
    whose hash is frequent enough and groups them exactly.

    Args:
        col (EdgeColouring): Host colouring.
        pattern (PatternGraph): The pattern.
        min_size (int): Smallest bucket size to report, at least 1.
        threads (int): Worker threads; the result does not depend on it.

    Returns:
        list: Buckets ordered by decreasing size, then by signature.
    """
    chunks = _first_vertex_chunks(col.n, threads)

    def hashes_of(firsts):
        parts = [hash_rows(block_signatures(col, pattern, block)) for block in iter_embeddings(col.n, pattern, firsts)]
        return np.concatenate(parts) if parts else np.empty(0, dtype=np.uint64)

    def heavy_rows_of(firsts, heavy):
        embeddings, signatures = [], []
        for block in iter_embeddings(col.n, pattern, firsts):
            sigs = block_signatures(col, pattern, block)
            keep = np.ones(block.shape[0], dtype=bool) if heavy is None else np.isin(hash_rows(sigs), heavy)
            embeddings.append(block[keep])
            signatures.append(sigs[keep])
        return embeddings, signatures

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        heavy = None
        if min_size > 1:
            hashes = np.concatenate(list(pool.map(hashes_of, chunks)))
            values, counts = np.unique(hashes, return_counts=True)
            heavy = values[counts >= min_size]
            logger.debug("%d copies of %s, %d frequent signature hashes", hashes.size, pattern, heavy.size)
            if heavy.size == 0:
                return []
        results = list(pool.map(lambda firsts: heavy_rows_of(firsts, heavy), chunks))

    embeddings = [e for part, _ in results for e in part]
    signatures = [s for _, part in results for s in part]
    if not embeddings or sum(e.shape[0] for e in embeddings) == 0:
        return []
    embeddings = np.concatenate(embeddings)
    signatures = np.concatenate(signatures)
    keys, inverse, counts = np.unique(signatures, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    buckets = []
    for group in np.flatnonzero(counts >= min_size):
        members = embeddings[inverse == group]
        members = members[np.lexsort(members.T[::-1])]
        buckets.append(SignatureBucket(tuple(int(c) for c in keys[group]), members))
    buckets.sort(key=lambda b: (-b.size, b.signature))
    return buckets


class PackingBudgetSpent(Exception):
    pass


class NodeCounter:
    """Node counter shared by the packing workers of one call."""

    def __init__(self, budget: Optional[int]):
        self.budget = budget
        self.used = 0
        self._lock = threading.Lock()

    def tick(self, amount: int = 1):
        with self._lock:
            if self.budget is not None and self.used + amount > self.budget:
                raise PackingBudgetSpent()
            self.used += amount


def _masks(embeddings: np.ndarray) -> List[int]:
    return [sum(1 << int(x) for x in row) for row in embeddings]


def pack_disjoint(
    embeddings: np.ndarray, k: int, n: int, counter: Optional[NodeCounter] = None
) -> Optional[List[int]]:
    """Find k pairwise vertex-disjoint rows by branch and bound.

    Returns:
        list: Indices of the first k disjoint rows in search order, or None if there are none.
    """
    if embeddings.shape[0] < k:
        return None
    masks = _masks(embeddings)
    v = embeddings.shape[1]
    counter = counter or NodeCounter(None)

    chosen, used = [], 0
    for i, mask in enumerate(masks):
        if mask & used == 0:
            chosen.append(i)
            used |= mask
            if len(chosen) == k:
                return chosen

    def search(start: int, picked: List[int], used: int) -> Optional[List[int]]:
        counter.tick()
        need = k - len(picked)
        if need == 0:
            return list(picked)
        if (n - bin(used).count("1")) // v < need:
            return None
        for i in range(start, len(masks) - need + 1):
            if masks[i] & used == 0:
                picked.append(i)
                found = search(i + 1, picked, used | masks[i])
                if found is not None:
                    return found
                picked.pop()
        return None

    return search(0, [], 0)


def max_disjoint(embeddings: np.ndarray, n: int, counter: Optional[NodeCounter] = None) -> int:
    """Size of a largest family of pairwise vertex-disjoint rows."""
    if embeddings.shape[0] == 0:
        return 0
    masks = _masks(embeddings)
    v = embeddings.shape[1]
    counter = counter or NodeCounter(None)
    best = [0]
    used_greedy = 0
    for mask in masks:
        if mask & used_greedy == 0:
            used_greedy |= mask
            best[0] += 1

    def search(start: int, size: int, used: int):
        counter.tick()
        best[0] = max(best[0], size)
        free = (n - bin(used).count("1")) // v
        if size + min(free, len(masks) - start) <= best[0]:
            return
        for i in range(start, len(masks)):
            if masks[i] & used == 0:
                search(i + 1, size + 1, used | masks[i])

    search(0, 0, 0)
    return best[0]


class CopyIndex:
    """All copies of a pattern in K_n held in memory, with signatures that can be refreshed locally.

    Args:
        n (int): Host size.
        pattern (PatternGraph): The pattern.
        k (int): Repeat multiplicity to look for.
    """

    def __init__(self, n: int, pattern: PatternGraph, k: int):
        self.n = n
        self.pattern = pattern
        self.k = k
        self.aut = automorphisms(pattern)
        self.embeddings = all_embeddings(n, pattern)
        self.pairs = embedding_pairs(pattern, self.embeddings, n)
        self.signatures = np.zeros(self.pairs.shape, dtype=np.int64)
        self.hashes = np.zeros(self.pairs.shape[0], dtype=np.uint64)
        logger.debug("indexed %d copies of %s in K_%d", len(self), pattern, n)

    def __len__(self):
        return self.embeddings.shape[0]

    def refresh(self, pair_colours: np.ndarray, dirty_pairs: Optional[np.ndarray] = None) -> np.ndarray:
        """Recompute signatures of the copies touching `dirty_pairs` (all copies if None).

        Returns:
            np.ndarray: Indices of the refreshed copies.
        """
        if dirty_pairs is None:
            rows = np.arange(len(self))
        else:
            dirty = np.zeros(self.n * (self.n - 1) // 2, dtype=bool)
            dirty[np.asarray(dirty_pairs, dtype=np.int64)] = True
            rows = np.flatnonzero(dirty[self.pairs].any(axis=1))
        if rows.size:
            sigs = min_signatures(pair_colours[self.pairs[rows]], self.aut.edge_permutations)
            self.signatures[rows] = sigs
            self.hashes[rows] = hash_rows(sigs)
        return rows

    def find_repeat(self, rows: Optional[np.ndarray] = None) -> Optional[Tuple[Tuple[int, ...], np.ndarray]]:
        """Look for k disjoint copies sharing a signature with one of `rows` (any signature if None).

        Returns:
            tuple: (signature, (k, v) embeddings) of the first repeat in bucket order, or None.
        """
        if rows is None:
            candidates = np.arange(len(self))
        else:
            if rows.size == 0:
                return None
            candidates = np.flatnonzero(np.isin(self.hashes, np.unique(self.hashes[rows])))
        values, counts = np.unique(self.hashes[candidates], return_counts=True)
        heavy = values[counts >= self.k]
        if heavy.size == 0:
            return None
        candidates = candidates[np.isin(self.hashes[candidates], heavy)]
        keys, inverse, counts = np.unique(self.signatures[candidates], axis=0, return_inverse=True, return_counts=True)
        inverse = inverse.reshape(-1)
        order = sorted(np.flatnonzero(counts >= self.k), key=lambda g: (-counts[g], tuple(keys[g])))
        for group in order:
            members = self.embeddings[candidates[inverse == group]]
            members = members[np.lexsort(members.T[::-1])]
            picked = pack_disjoint(members, self.k, self.n)
            if picked is not None:
                return tuple(int(c) for c in keys[group]), members[picked]
        return None
