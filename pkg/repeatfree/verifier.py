import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from repeatfree.colouring import EdgeColouring
from repeatfree.copies import (
    NodeCounter,
    PackingBudgetSpent,
    SignatureBucket,
    copy_count,
    max_disjoint,
    pack_disjoint,
    signature_buckets,
)
from repeatfree.errors import BudgetExhausted, ExactLimitError, FormatError, PreconditionError
from repeatfree.pattern import ColouredCopy, PatternGraph, automorphisms, colour_signature, literal_pattern
from repeatfree.utils import upper_pairs

logger = logging.getLogger(__name__)

EXACT_MAX_PATTERN_VERTICES = 8
EXACT_MAX_HOST_VERTICES = 60
DEFAULT_BUDGET = 5_000_000

__all__ = [
    "PropernessReport",
    "RepeatCertificate",
    "RepeatStatus",
    "RepeatVerdict",
    "CertificateCheck",
    "StarViolation",
    "SignatureBucket",
    "check_proper",
    "find_repeats",
    "verify_certificate",
    "star_incidence_check",
    "signature_buckets",
    "repeat_multiplicity",
]


@dataclass(frozen=True)
class ProperViolation:
    vertex: int
    colour: int
    edges: Tuple[Tuple[int, int], Tuple[int, int]]


@dataclass(frozen=True)
class PropernessReport:
    """Result of check_proper.

    Args:
        proper: Whether every colour class is a matching.
        violation: A vertex with two incident edges of one colour, if improper.
        max_class_degree: Largest degree inside a colour class (the colouring is b-bounded for every b >= it).
    """

    proper: bool
    violation: Optional[ProperViolation]
    max_class_degree: int


def check_proper(col: EdgeColouring) -> PropernessReport:
    """Check properness and measure the maximum colour-class degree."""
    if col.n < 2:
        return PropernessReport(True, None, 0)
    iu, ju = upper_pairs(col.n)
    colours = col.pair_colours
    keys = np.concatenate([iu * col.C + colours, ju * col.C + colours])
    values, counts = np.unique(keys, return_counts=True)
    b = int(counts.max())
    if b <= 1:
        return PropernessReport(True, None, b)
    key = int(values[np.argmax(counts >= 2)])
    vertex, colour = divmod(key, col.C)
    a, c = np.flatnonzero(col.matrix[vertex] == colour)[:2]
    violation = ProperViolation(vertex, colour, ((vertex, int(a)), (vertex, int(c))))
    return PropernessReport(False, violation, b)


@dataclass(frozen=True)
class RepeatCertificate:
    """k vertex-disjoint copies of a pattern sharing one colour signature.

    Args:
        pattern: The pattern the embeddings refer to.
        copies: One row of host vertices per copy, in pattern-vertex order.
        signature: The shared canonical colour tuple.
    """

    pattern: PatternGraph
    copies: Tuple[Tuple[int, ...], ...]
    signature: Tuple[int, ...]

    @property
    def k(self) -> int:
        return len(self.copies)

    def to_text(self) -> str:
        lines = [f"pattern {self.pattern.serialize()}", f"k {self.k}"]
        lines.extend("copy " + " ".join(str(x) for x in row) for row in self.copies)
        lines.append("signature " + " ".join(str(c) for c in self.signature))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RepeatCertificate":
        pattern, k, copies, signature = None, None, [], None
        for number, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            keyword, _, rest = line.strip().partition(" ")
            try:
                if keyword == "pattern":
                    pattern = literal_pattern(rest)
                elif keyword == "k":
                    k = int(rest)
                elif keyword == "copy":
                    copies.append(tuple(int(x) for x in rest.split()))
                elif keyword == "signature":
                    signature = tuple(int(x) for x in rest.split())
                else:
                    raise FormatError(f"line {number}: unknown keyword {keyword!r}")
            except ValueError as exc:
                if isinstance(exc, FormatError):
                    raise
                raise FormatError(f"line {number}: {exc}") from exc
        if pattern is None or k is None or signature is None:
            raise FormatError("certificate needs pattern, k and signature lines")
        if k != len(copies):
            raise FormatError(f"certificate declares k={k} but lists {len(copies)} copies")
        return cls(pattern, tuple(copies), signature)


@dataclass(frozen=True)
class CertificateCheck:
    accepted: bool
    reason: str

    def __bool__(self):
        return self.accepted


def verify_certificate(cert: RepeatCertificate, col: EdgeColouring) -> CertificateCheck:
    """Re-check a certificate against a colouring: injectivity, disjointness and signatures."""
    pattern = cert.pattern
    if cert.k < 2:
        return CertificateCheck(False, f"a repeat needs at least 2 copies, got {cert.k}")
    seen = set()
    for index, row in enumerate(cert.copies):
        if len(row) != pattern.v:
            return CertificateCheck(False, f"copy {index} maps {len(row)} vertices, pattern has {pattern.v}")
        if any(not 0 <= x < col.n for x in row):
            return CertificateCheck(False, f"copy {index} uses a vertex outside [0, {col.n})")
        if len(set(row)) != len(row):
            return CertificateCheck(False, f"copy {index} is not injective")
        if seen & set(row):
            return CertificateCheck(False, f"copy {index} shares vertices {sorted(seen & set(row))} with an earlier copy")
        seen |= set(row)
    aut = automorphisms(pattern)
    for index, row in enumerate(cert.copies):
        signature = colour_signature(ColouredCopy.lift(pattern, row, col.colour_of), aut)
        if signature != tuple(cert.signature):
            return CertificateCheck(False, f"copy {index} has signature {signature}, expected {tuple(cert.signature)}")
    return CertificateCheck(True, "ok")


class RepeatStatus(str, Enum):
    FOUND = "found"
    ABSENT = "absent"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class RepeatVerdict:
    """Outcome of find_repeats.

    `ABSENT` is a proof of absence (exact mode, or budgeted mode that finished within budget).
    """

    status: RepeatStatus
    certificate: Optional[RepeatCertificate] = None
    copies_examined: int = 0
    nodes: int = 0
    reason: str = field(default="", compare=False)

    @property
    def found(self) -> bool:
        return self.status is RepeatStatus.FOUND


def _check_limits(col: EdgeColouring, pattern: PatternGraph, mode: str):
    if pattern.v > EXACT_MAX_PATTERN_VERTICES:
        raise ExactLimitError(f"repeat detection supports patterns with at most {EXACT_MAX_PATTERN_VERTICES} vertices")
    if mode == "exact" and col.n > EXACT_MAX_HOST_VERTICES:
        raise ExactLimitError(
            f"exact mode supports n <= {EXACT_MAX_HOST_VERTICES}, got n={col.n}; use mode='budgeted' instead"
        )
    if mode not in ("exact", "budgeted"):
        raise PreconditionError(f"unknown mode {mode!r}")


def find_repeats(
    col: EdgeColouring,
    pattern: PatternGraph,
    k: int,
    mode: str = "exact",
    budget: int = DEFAULT_BUDGET,
    threads: int = 1,
) -> RepeatVerdict:
    """Search a colouring for k vertex-disjoint colour-isomorphic copies of a pattern.

    Copies are bucketed by colour signature and each bucket holding at least k copies is searched for k
    disjoint members, largest bucket first. The returned certificate is the first one in that order, so it
    does not depend on `threads`.

    Args:
        col (EdgeColouring): Host colouring.
        pattern (PatternGraph): The pattern H.
        k (int): Number of disjoint copies, at least 2.
        mode (str): "exact" (enforces v <= 8 and n <= 60) or "budgeted".
        budget (int): Budgeted mode only: copies plus branch-and-bound nodes before giving up.
        threads (int): Worker threads for enumeration and bucket packing.

    Returns:
        RepeatVerdict: FOUND with a certificate, ABSENT, or UNKNOWN (budgeted mode only).
    """
    if k < 2:
        raise PreconditionError(f"k must be at least 2, got {k}")
    _check_limits(col, pattern, mode)
    if k * pattern.v > col.n:
        return RepeatVerdict(RepeatStatus.ABSENT, reason=f"{k} disjoint copies need {k * pattern.v} > {col.n} vertices")

    total = copy_count(col.n, pattern)
    if mode == "budgeted" and total > budget:
        logger.warning("%d copies of %s exceed the budget of %d, verdict unknown", total, pattern, budget)
        return RepeatVerdict(RepeatStatus.UNKNOWN, copies_examined=0, reason=f"{total} copies exceed budget")

    buckets = signature_buckets(col, pattern, min_size=k, threads=threads)
    counter = NodeCounter(budget - total if mode == "budgeted" else None)

    def pack(bucket: SignatureBucket):
        return pack_disjoint(bucket.embeddings, k, col.n, counter)

    try:
        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            step = max(1, threads)
            for start in range(0, len(buckets), step):
                batch = buckets[start : start + step]
                for bucket, picked in zip(batch, pool.map(pack, batch)):
                    if picked is not None:
                        cert = RepeatCertificate(
                            pattern,
                            tuple(tuple(int(x) for x in bucket.embeddings[i]) for i in picked),
                            bucket.signature,
                        )
                        logger.info("found a %d-repeat of %s in K_%d", k, pattern, col.n)
                        return RepeatVerdict(RepeatStatus.FOUND, cert, total, counter.used)
    except PackingBudgetSpent:
        logger.warning("packing budget spent on %s, verdict unknown", pattern)
        return RepeatVerdict(RepeatStatus.UNKNOWN, None, total, counter.used, "packing budget spent")

    logger.info("no %d-repeat of %s in K_%d (%d copies, %d buckets)", k, pattern, col.n, total, len(buckets))
    return RepeatVerdict(RepeatStatus.ABSENT, None, total, counter.used)


def repeat_multiplicity(
    col: EdgeColouring, pattern: PatternGraph, mode: str = "exact", budget: int = DEFAULT_BUDGET, threads: int = 1
) -> int:
    """The largest number of vertex-disjoint colour-isomorphic copies of a pattern.

    The colouring has no k-repeat of the pattern exactly for k > repeat_multiplicity. Budgeted mode lifts
    the host limit of exact mode and counts copies plus branch-and-bound nodes against `budget`.

    Raises:
        BudgetExhausted: In budgeted mode, when the budget runs out; `last_event` is the work done so far.
    """
    _check_limits(col, pattern, mode)
    if col.n < pattern.v:
        return 0
    total = copy_count(col.n, pattern)
    if mode == "budgeted" and total > budget:
        raise BudgetExhausted(f"{total} copies of {pattern} exceed the budget of {budget}", last_event=total)
    counter = NodeCounter(budget - total if mode == "budgeted" else None)
    best = 1
    try:
        for bucket in signature_buckets(col, pattern, min_size=2, threads=threads):
            if bucket.size <= best or (col.n // pattern.v) <= best:
                continue
            best = max(best, max_disjoint(bucket.embeddings, col.n, counter))
    except PackingBudgetSpent:
        raise BudgetExhausted(f"packing budget spent on {pattern}", last_event=total + counter.used) from None
    logger.info("largest colour-isomorphic family of %s in K_%d: %d disjoint copies", pattern, col.n, best)
    return best


@dataclass(frozen=True)
class StarViolation:
    vertices: Tuple[int, int, int]
    colours: Tuple[int, int]


def star_incidence_check(col: EdgeColouring) -> Optional[StarViolation]:
    """Find three vertices that are all incident to the same two colours.

    The reported violation is the least colour pair with such a triple, together with its three
    smallest vertices. None means there is no 3-repeat of the two-edge star.
    """
    keys: List[np.ndarray] = []
    owners: List[np.ndarray] = []
    for vertex in range(col.n):
        row = col.matrix[vertex]
        colours = np.unique(row[row >= 0])
        if colours.size < 2:
            continue
        a, b = np.triu_indices(colours.size, 1)
        keys.append(colours[a] * col.C + colours[b])
        owners.append(np.full(a.size, vertex))
    if not keys:
        return None
    keys_all = np.concatenate(keys)
    owners_all = np.concatenate(owners)
    values, counts = np.unique(keys_all, return_counts=True)
    crowded = values[counts >= 3]
    if crowded.size == 0:
        return None
    key = int(crowded[0])
    vertices = np.sort(owners_all[keys_all == key])[:3]
    return StarViolation(tuple(int(x) for x in vertices), divmod(key, col.C))
