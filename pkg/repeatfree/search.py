import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from repeatfree.bounds import valid_lower_bound
from repeatfree.colouring import EdgeColouring
from repeatfree.constructors import additive_colouring, extended_additive_colouring, rainbow_colouring
from repeatfree.copies import all_embeddings, embedding_pairs
from repeatfree.errors import FormatError, PreconditionError, RepeatFreeError
from repeatfree.pattern import PatternGraph, automorphisms, parse_pattern
from repeatfree.utils import num_pairs, upper_pairs
from repeatfree.verifier import RepeatStatus, find_repeats
from repeatfree.vizing import pad_colours

logger = logging.getLogger(__name__)

MAX_HOST_VERTICES = 10
MAX_PATTERN_VERTICES = 5
DEFAULT_NODE_BUDGET = 2_000_000


class Feasibility(str, Enum):
    WITNESS = "witness"
    REFUTED = "refuted"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Avoidability:
    """Outcome of is_avoidable: a witness colouring, an exhaustive refutation, or unknown."""

    status: Feasibility
    witness: Optional[EdgeColouring] = None
    nodes: int = 0


class _BudgetSpent(Exception):
    pass


@dataclass
class _CopyTable:
    """Copies of the pattern in K_n, grouped by the lexicographically largest pair they use."""

    pairs: np.ndarray
    masks: List[int]
    by_last: List[List[int]]
    edge_permutations: Tuple[Tuple[int, ...], ...]

    @classmethod
    def build(cls, n: int, pattern: PatternGraph) -> "_CopyTable":
        embeddings = all_embeddings(n, pattern)
        pairs = embedding_pairs(pattern, embeddings, n)
        masks = [sum(1 << int(x) for x in row) for row in embeddings]
        by_last: List[List[int]] = [[] for _ in range(num_pairs(n))]
        for copy, last in enumerate(pairs.max(axis=1).tolist() if len(pairs) else []):
            by_last[last].append(copy)
        return cls(pairs, masks, by_last, automorphisms(pattern).edge_permutations)


class _Search:
    """Backtracking over the pairs of K_n in lexicographic order with at most C colours.

    Colours are introduced in increasing order and vertex 0's edges are fixed to 0..n-2. Every copy of
    the pattern is bucketed by signature as soon as its last pair is coloured; a branch dies when the
    new copy completes k disjoint copies in its bucket.
    """

    def __init__(self, n: int, k: int, C: int, table: Optional[_CopyTable], budget: int):
        self.n, self.k, self.C = n, k, C
        self.table = table
        self.budget = budget
        self.nodes = 0
        iu, ju = upper_pairs(n)
        self.ends = list(zip(iu.tolist(), ju.tolist()))
        self.colour = [-1] * len(self.ends)
        self.at = [0] * n
        self.max_used = -1
        self.buckets: Dict[Tuple[int, ...], List[int]] = {}

    def place(self, p: int, c: int) -> Optional[List[Tuple[int, ...]]]:
        """Colour pair p with c; return the signatures added to buckets, or None (and undo) on a repeat."""
        u, v = self.ends[p]
        self.colour[p] = c
        self.at[u] |= 1 << c
        self.at[v] |= 1 << c
        added: List[Tuple[int, ...]] = []
        if self.table is not None:
            for copy in self.table.by_last[p]:
                colours = [self.colour[x] for x in self.table.pairs[copy]]
                signature = min(tuple(colours[j] for j in perm) for perm in self.table.edge_permutations)
                members = self.buckets.setdefault(signature, [])
                if self._packs(members, self.k - 1, self.table.masks[copy]):
                    self._remove(p, c, added)
                    return None
                members.append(copy)
                added.append(signature)
        return added

    def _remove(self, p: int, c: int, added: Sequence[Tuple[int, ...]]):
        for signature in reversed(added):
            self.buckets[signature].pop()
        u, v = self.ends[p]
        self.colour[p] = -1
        self.at[u] &= ~(1 << c)
        self.at[v] &= ~(1 << c)

    def _packs(self, members: List[int], need: int, used: int, start: int = 0) -> bool:
        if need == 0:
            return True
        masks = self.table.masks
        for i in range(start, len(members)):
            mask = masks[members[i]]
            if mask & used == 0 and self._packs(members, need - 1, used | mask, i + 1):
                return True
        return False

    def choices(self, p: int) -> List[int]:
        u, v = self.ends[p]
        blocked = self.at[u] | self.at[v]
        top = min(self.max_used + 1, self.C - 1)
        return [c for c in range(top + 1) if not blocked >> c & 1]

    def seed_first_vertex(self) -> bool:
        for p in range(self.n - 1):
            if self.place(p, p) is None:
                return False
        self.max_used = self.n - 2
        return True

    def run(self, p: int) -> bool:
        if p == len(self.ends):
            return True
        for c in self.choices(p):
            self.nodes += 1
            if self.nodes > self.budget:
                raise _BudgetSpent()
            added = self.place(p, c)
            if added is None:
                continue
            previous = self.max_used
            self.max_used = max(previous, c)
            if self.run(p + 1):
                return True
            self.max_used = previous
            self._remove(p, c, added)
        return False

    def witness(self) -> EdgeColouring:
        return EdgeColouring(self.n, self.colour)


def _check_instance(n: int, pattern: PatternGraph, k: int, C: Optional[int] = None):
    if not 2 <= n <= MAX_HOST_VERTICES:
        raise PreconditionError(f"exact search supports 2 <= n <= {MAX_HOST_VERTICES}, got {n}")
    if pattern.v > MAX_PATTERN_VERTICES:
        raise PreconditionError(f"exact search supports patterns with at most {MAX_PATTERN_VERTICES} vertices")
    if k < 2:
        raise PreconditionError(f"k must be at least 2, got {k}")
    if C is not None and not n - 1 <= C <= num_pairs(n):
        raise PreconditionError(f"C={C} outside [{n - 1}, {num_pairs(n)}]")


def is_avoidable(
    n: int, pattern: PatternGraph, k: int, C: int, budget: int = DEFAULT_NODE_BUDGET, threads: int = 1
) -> Avoidability:
    """Decide whether some proper colouring of K_n with at most C colours has no k-repeat of the pattern.

    The search is split on the colour of pair (1, 2), the first pair not fixed by symmetry breaking; every
    branch gets the node budget. The witness is the first one in branch order, so the answer does not
    depend on `threads`.

    Args:
        n (int): Host size, at most 10.
        pattern (PatternGraph): Pattern with at most 5 vertices.
        k (int): Repeat multiplicity.
        C (int): Colour budget in [n - 1, n(n - 1) / 2].
        budget (int): Node budget per branch.
        threads (int): Worker threads over the branches.

    Returns:
        Avoidability: WITNESS (with a colouring of at most C colours), REFUTED, or UNKNOWN.
    """
    _check_instance(n, pattern, k, C)
    table = _CopyTable.build(n, pattern) if k * pattern.v <= n else None
    root = _Search(n, k, C, table, budget)
    if not root.seed_first_vertex():
        return Avoidability(Feasibility.REFUTED, None, 0)
    first = n - 1
    if first == num_pairs(n):
        return Avoidability(Feasibility.WITNESS, root.witness(), 0)

    def branch(c: int) -> Tuple[Feasibility, Optional[EdgeColouring], int]:
        search = _Search(n, k, C, table, budget)
        search.seed_first_vertex()
        added = search.place(first, c)
        if added is None:
            return Feasibility.REFUTED, None, 1
        search.max_used = max(search.max_used, c)
        try:
            found = search.run(first + 1)
        except _BudgetSpent:
            return Feasibility.UNKNOWN, None, search.nodes
        if found:
            return Feasibility.WITNESS, search.witness(), search.nodes + 1
        return Feasibility.REFUTED, None, search.nodes + 1

    choices = root.choices(first)
    nodes, unknown = 0, False
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        step = max(1, threads)
        for start in range(0, len(choices), step):
            for status, witness, spent in pool.map(branch, choices[start : start + step]):
                nodes += spent
                if status is Feasibility.WITNESS:
                    logger.debug("K_%d with <= %d colours avoids %d-repeats of %s", n, C, k, pattern)
                    return Avoidability(Feasibility.WITNESS, witness, nodes)
                unknown |= status is Feasibility.UNKNOWN
    status = Feasibility.UNKNOWN if unknown else Feasibility.REFUTED
    logger.debug("C=%d for K_%d, %s: %s after %d nodes", C, n, pattern, status.value, nodes)
    return Avoidability(status, None, nodes)


@dataclass
class SearchResult:
    """Exact value of f_k(n, H), or the interval [lo, hi] it is known to lie in.

    Args:
        value: The exact value, or None when the search ran out of budget.
        witness: A proper colouring with exactly `value` (or `hi`) colours and no k-repeat.
        exhaustive: True iff `value` - 1 colours were refuted (or `value` = n - 1).
        note: For unknown results, the colour count whose search spent the budget.
    """

    n: int
    k: int
    pattern: PatternGraph
    value: Optional[int]
    lo: int
    hi: int
    witness: Optional[EdgeColouring] = field(default=None, repr=False)
    exhaustive: bool = False
    nodes_explored: int = 0
    note: str = ""

    def to_table_row(self) -> str:
        spec = self.pattern.name or self.pattern.serialize()
        value = "-" if self.value is None else str(self.value)
        return f"{self.n} {self.k} {spec} {value} {self.lo} {self.hi} {str(self.exhaustive).lower()} {self.nodes_explored}"

    @classmethod
    def from_table_row(cls, line: str) -> "SearchResult":
        fields = line.split()
        if len(fields) != 8:
            raise FormatError(f"expected 8 fields 'n k pattern value lo hi exhaustive nodes', got {line!r}")
        n, k, spec, value, lo, hi, exhaustive, nodes = fields
        if exhaustive not in ("true", "false"):
            raise FormatError(f"exhaustive must be true or false, got {exhaustive!r}")
        try:
            return cls(
                int(n),
                int(k),
                parse_pattern(spec),
                None if value == "-" else int(value),
                int(lo),
                int(hi),
                None,
                exhaustive == "true",
                int(nodes),
            )
        except ValueError as exc:
            raise FormatError(f"malformed results row {line!r}") from exc


TABLE_HEADER = "n k pattern value lo hi exhaustive nodes"


def _best_construction(n: int, pattern: PatternGraph, k: int) -> EdgeColouring:
    candidates = [rainbow_colouring(n)]
    if n >= 3:
        candidates.append(additive_colouring(n))
    if n >= 4 and n % 2 == 0:
        candidates.append(extended_additive_colouring(n))
    best = candidates[0]
    for col in candidates[1:]:
        if col.C < best.C and find_repeats(col, pattern, k).status is RepeatStatus.ABSENT:
            best = col
    return best


def exact_f(
    n: int, pattern: PatternGraph, k: int, budget: int = DEFAULT_NODE_BUDGET, threads: int = 1
) -> SearchResult:
    """Compute f_k(n, H) by a descending scan over the colour budget.

    The scan starts below the best verified construction (rainbow, additive, extended additive). Each
    witness with c colours moves the next colour count to c - 1; the first refutation proves the last witness
    optimal, and so does reaching the valid lower bound lo, in which case nothing is searched below it.

    Args:
        n (int): Host size, at most 10.
        pattern (PatternGraph): Pattern with at most 5 vertices.
        k (int): Repeat multiplicity.
        budget (int): Node budget of every feasibility call.
        threads (int): Worker threads; the value and witness do not depend on it.

    Returns:
        SearchResult: The exact value with a verified witness, or an interval.
    """
    _check_instance(n, pattern, k)
    lo = valid_lower_bound(n, pattern, k)
    best = _best_construction(n, pattern, k)
    hi = best.C
    nodes = 0
    exhaustive = False
    note = ""
    while True:
        candidate = hi - 1
        if candidate < max(lo, n - 1):
            exhaustive = True
            break
        outcome = is_avoidable(n, pattern, k, candidate, budget=budget, threads=threads)
        nodes += outcome.nodes
        if outcome.status is Feasibility.WITNESS:
            best = outcome.witness
            hi = best.C
        elif outcome.status is Feasibility.REFUTED:
            exhaustive = True
            break
        else:
            note = f"C={candidate}"
            logger.warning(
                "budget spent at C=%d for f_%d(%d, %s); interval [%d, %d]", candidate, k, n, pattern, lo, hi
            )
            break

    witness = pad_colours(best, hi).with_meta(family="search", n=n, k=k, pattern=pattern.serialize())
    verdict = find_repeats(witness, pattern, k)
    if verdict.status is not RepeatStatus.ABSENT:
        raise RepeatFreeError(f"search witness for f_{k}({n}, {pattern}) failed verification")
    if exhaustive:
        result = SearchResult(n, k, pattern, hi, hi, hi, witness, True, nodes)
    else:
        result = SearchResult(n, k, pattern, None, min(lo, hi), hi, witness, False, nodes, note)
    logger.info("f_%d(%d, %s): %s", k, n, pattern, result.to_table_row())
    return result
