import logging
from dataclasses import dataclass
from fractions import Fraction
from math import ceil
from typing import Optional, Tuple

import numpy as np

from repeatfree.colouring import EdgeColouring
from repeatfree.copies import CopyIndex, embedding_pairs
from repeatfree.errors import ExactLimitError, PreconditionError, ResampleBudgetExhausted
from repeatfree.pattern import PatternGraph
from repeatfree.utils import make_rng, num_pairs, pair_index_array, upper_pairs
from repeatfree.vizing import vizing_refine

logger = logging.getLogger(__name__)

MAX_HOST_VERTICES = 60


@dataclass(frozen=True)
class BadEvent:
    """A violated event of the resampling loop.

    Args:
        kind: "star" (a vertex with too many edges of one colour) or "repeat" (k disjoint
            colour-isomorphic copies).
        pairs: Pair indices of the edges to resample.
        detail: The star centre and colour, or the repeat's embeddings.
    """

    kind: str
    pairs: Tuple[int, ...]
    detail: Tuple


def lll_exponent(pattern: PatternGraph, k: int) -> Fraction:
    """(kv - 2) / ((k - 1) e), the exponent of the colour budget."""
    return Fraction(k * pattern.v - 2, (k - 1) * pattern.e)


def lll_palette(n: int, pattern: PatternGraph, k: int, gamma: float) -> int:
    """Number of colours 1/p for p = gamma * min(1/n, n^-((l - 1) / ((k - 1) e))) with l = kv - 1."""
    exponent = float(lll_exponent(pattern, k))
    p = gamma * min(1.0 / n, n ** (-exponent))
    return int(ceil(1.0 / p))


def _star_event(n: int, colours: np.ndarray, threshold: int) -> Optional[BadEvent]:
    iu, ju = upper_pairs(n)
    palette = int(colours.max()) + 1
    keys = np.concatenate([iu * palette + colours, ju * palette + colours])
    values, counts = np.unique(keys, return_counts=True)
    crowded = values[counts >= threshold]
    if crowded.size == 0:
        return None
    centre, colour = divmod(int(crowded[0]), palette)
    others = np.arange(n)
    others = others[others != centre]
    pairs = pair_index_array(np.full(others.size, centre), others, n)
    pairs = pairs[colours[pairs] == colour][:threshold]
    return BadEvent("star", tuple(int(x) for x in pairs), (centre, colour))


def lll_colouring(
    n: int,
    pattern: PatternGraph,
    k: int,
    seed: Optional[int] = None,
    gamma: float = 0.25,
    max_resamples: int = 2000,
    max_backoffs: int = 4,
) -> EdgeColouring:
    """Random colouring with no k-repeat of a bipartite pattern, by resampling bad events.

    Every edge gets a uniform colour out of 1/p. While some vertex sees l = kv - 1 edges of one colour,
    or k disjoint copies of the pattern are colour-isomorphic, the edges of that event are recoloured.
    After a resample only the buckets of the copies touching a recoloured edge are looked at again.
    When `max_resamples` is spent the palette is doubled and the loop restarts, at most `max_backoffs`
    times. The result is refined with vizing_refine(kv - 2), which only splits classes.

    Args:
        n (int): Host size, at most 60 (all copies of the pattern are kept in memory).
        pattern (PatternGraph): A bipartite pattern.
        k (int): Forbidden repeat multiplicity, at least 2.
        seed (int, optional): Random seed.
        gamma (float): Scale of the probability p.
        max_resamples (int): Resample budget per palette size.
        max_backoffs (int): Number of palette doublings before giving up.

    Returns:
        EdgeColouring: A proper colouring without k-repeats of the pattern.

    Raises:
        ResampleBudgetExhausted: Carries the last violating BadEvent.
    """
    if k < 2:
        raise PreconditionError(f"k must be at least 2, got {k}")
    if not pattern.is_bipartite:
        raise PreconditionError(f"lll_colouring needs a bipartite pattern, {pattern} is not")
    if n > MAX_HOST_VERTICES:
        raise ExactLimitError(f"lll_colouring keeps every copy in memory and supports n <= {MAX_HOST_VERTICES}")
    ell = k * pattern.v - 1
    palette = lll_palette(n, pattern, k, gamma)
    rng = make_rng(seed)
    index = CopyIndex(n, pattern, k) if k * pattern.v <= n else None
    event = None
    total = 0

    for backoff in range(max_backoffs + 1):
        colours = rng.integers(0, palette, size=num_pairs(n), dtype=np.int64)
        pending = index.refresh(colours) if index is not None else None
        for resample in range(max_resamples + 1):
            event = _star_event(n, colours, ell)
            if event is None and index is not None:
                repeat = index.find_repeat(pending)
                if repeat is None:
                    pending = np.empty(0, dtype=np.int64)
                else:
                    _, embeddings = repeat
                    pairs = np.unique(embedding_pairs(pattern, embeddings, n))
                    event = BadEvent("repeat", tuple(int(x) for x in pairs), tuple(map(tuple, embeddings.tolist())))
            if event is None:
                raw = EdgeColouring(n, colours)
                col = vizing_refine(raw, ell - 1)
                constant = col.C / n ** max(1.0, float(lll_exponent(pattern, k)))
                logger.info(
                    "lll colouring of K_%d: %d resamples, %d back-offs, %d colours", n, total, backoff, col.C
                )
                return col.with_meta(
                    family="lll",
                    n=n,
                    pattern=pattern.serialize(),
                    k=k,
                    seed=seed,
                    gamma=gamma,
                    palette=palette,
                    resamples=total,
                    backoffs=backoff,
                    constant=round(constant, 6),
                )
            if resample == max_resamples:
                break
            logger.debug("resampling %s event on %d edges", event.kind, len(event.pairs))
            pairs = np.array(event.pairs, dtype=np.int64)
            colours[pairs] = rng.integers(0, palette, size=pairs.size, dtype=np.int64)
            total += 1
            if index is not None:
                dirty = index.refresh(colours, pairs)
                pending = np.union1d(pending, dirty)
        logger.warning("resample budget spent with %d colours, doubling the palette", palette)
        palette *= 2

    raise ResampleBudgetExhausted(f"no repeat-free colouring after {max_backoffs} back-offs", last_event=event)
