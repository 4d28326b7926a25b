import heapq
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Sequence, Tuple

import numpy as np

from repeatfree.colouring import EdgeColouring
from repeatfree.errors import PreconditionError
from repeatfree.utils import num_pairs, upper_pairs

logger = logging.getLogger(__name__)


class _PartialEdgeColouring:
    """Colours of a graph's edges with per-vertex lookup colour -> neighbour."""

    def __init__(self):
        self.at: Dict[int, Dict[int, int]] = {}
        self.colour: Dict[Tuple[int, int], int] = {}

    def is_free(self, x: int, c: int) -> bool:
        return c not in self.at.get(x, {})

    def smallest_free(self, x: int) -> int:
        used = self.at.get(x, {})
        c = 0
        while c in used:
            c += 1
        return c

    def get(self, x: int, y: int):
        return self.colour.get((min(x, y), max(x, y)))

    def set(self, x: int, y: int, c: int):
        self.colour[(min(x, y), max(x, y))] = c
        self.at.setdefault(x, {})[c] = y
        self.at.setdefault(y, {})[c] = x

    def unset(self, x: int, y: int):
        c = self.colour.pop((min(x, y), max(x, y)))
        del self.at[x][c]
        del self.at[y][c]


def misra_gries(edges: Sequence[Tuple[int, int]]) -> Dict[Tuple[int, int], int]:
    """Properly colour a simple graph with at most Delta + 1 colours (fan rotation and cd-path inversion).

    Args:
        edges: Edges (u, v) with u < v.

    Returns:
        dict: Colour in 0..Delta of every edge.
    """
    neighbours: Dict[int, List[int]] = {}
    for u, v in edges:
        neighbours.setdefault(u, []).append(v)
        neighbours.setdefault(v, []).append(u)
    state = _PartialEdgeColouring()

    for u, v in edges:
        fan, in_fan = [v], {v}
        grown = True
        while grown:
            grown = False
            for w in sorted(neighbours[u]):
                if w in in_fan:
                    continue
                c = state.get(u, w)
                if c is not None and state.is_free(fan[-1], c):
                    fan.append(w)
                    in_fan.add(w)
                    grown = True
                    break

        c = state.smallest_free(u)
        d = state.smallest_free(fan[-1])
        if c != d:
            path, x, follow = [], u, d
            while follow in state.at.get(x, {}):
                y = state.at[x][follow]
                path.append((x, y, follow))
                x, follow = y, (c if follow == d else d)
            for x, y, _ in path:
                state.unset(x, y)
            for x, y, old in path:
                state.set(x, y, c if old == d else d)

        w = len(fan) - 1
        for i, x in enumerate(fan):
            if i > 0 and not state.is_free(fan[i - 1], state.get(u, x)):
                break
            if state.is_free(x, d):
                w = i
                break
        shifted = [state.get(u, fan[i + 1]) for i in range(w)]
        for i in range(1, w + 1):
            state.unset(u, fan[i])
        for i in range(w):
            state.set(u, fan[i], shifted[i])
        state.set(u, fan[w], d)

    return dict(state.colour)


def class_degrees(col: EdgeColouring) -> np.ndarray:
    """Maximum vertex degree inside each colour class."""
    degrees = np.zeros(col.C, dtype=np.int64)
    if col.C == 0:
        return degrees
    iu, ju = upper_pairs(col.n)
    keys = np.concatenate([iu * col.C + col.pair_colours, ju * col.C + col.pair_colours])
    values, counts = np.unique(keys, return_counts=True)
    np.maximum.at(degrees, values % col.C, counts)
    return degrees


def vizing_refine(col: EdgeColouring, b: int, threads: int = 1) -> EdgeColouring:
    """Refine a b-bounded colouring into a proper one.

    Every colour class is properly edge-coloured with at most b + 1 sub-colours, so the output partition
    refines the input partition and uses at most (b + 1) * C colours. New colours are ordered by
    (old colour, sub-colour), which makes the result independent of `threads`.

    Args:
        col (EdgeColouring): A colouring whose classes have maximum degree at most b.
        b (int): The degree bound.
        threads (int): Worker threads; classes are refined independently.

    Returns:
        EdgeColouring: A proper colouring.
    """
    degrees = class_degrees(col)
    if degrees.size and int(degrees.max()) > b:
        worst = int(degrees.argmax())
        raise PreconditionError(f"colour class {worst} has maximum degree {int(degrees[worst])} > b={b}")

    def refine_class(colour: int) -> np.ndarray:
        pairs = col.colour_class(colour)
        if degrees[colour] <= 1:
            return np.zeros(len(pairs), dtype=np.int64)
        edges = [(int(u), int(v)) for u, v in pairs]
        sub = misra_gries(edges)
        return np.array([sub[edge] for edge in edges], dtype=np.int64)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        subcolours = list(pool.map(refine_class, range(col.C)))

    refined = col.pair_colours * (b + 1)
    for colour, sub in enumerate(subcolours):
        refined[col.pair_colours == colour] += sub
    out = EdgeColouring(col.n, refined, {**col.meta, "refined_b": b})
    logger.info("refined %d-bounded colouring of K_%d: %d -> %d colours", b, col.n, col.C, out.C)
    return out


def pad_colours(col: EdgeColouring, target: int) -> EdgeColouring:
    """Increase the colour count of a proper colouring to exactly `target`.

    Edges are taken one at a time from a largest class (smallest colour id on ties), last edge first,
    and each gets a brand-new colour.
    """
    if not (col.C <= target <= num_pairs(col.n)):
        raise PreconditionError(f"target {target} outside [{col.C}, {num_pairs(col.n)}]")
    if class_degrees(col).max(initial=0) > 1:
        raise PreconditionError("pad_colours needs a proper colouring")
    members: List[List[int]] = [[] for _ in range(col.C)]
    for index, c in enumerate(col.pair_colours.tolist()):
        members[c].append(index)
    heap = [(-len(m), c) for c, m in enumerate(members)]
    heapq.heapify(heap)
    colours = col.pair_colours.copy()
    for fresh in range(col.C, target):
        size, c = heapq.heappop(heap)
        colours[members[c].pop()] = fresh
        heapq.heappush(heap, (size + 1, c))
    logger.debug("padded K_%d colouring from %d to %d colours", col.n, col.C, target)
    return EdgeColouring(col.n, colours, col.meta)
