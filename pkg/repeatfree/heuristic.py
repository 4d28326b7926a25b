import logging
from itertools import combinations, product
from math import ceil, comb
from typing import Dict, FrozenSet, List, Optional, Tuple

import networkx as nx
from anytree import PreOrderIter

from repeatfree.colouring import EdgeColouring
from repeatfree.errors import PreconditionError
from repeatfree.pattern import ColouredCopy, PatternGraph, automorphisms, colour_signature
from repeatfree.verifier import RepeatCertificate

logger = logging.getLogger(__name__)

MAX_K = 3
MAX_HOST_VERTICES = 40

KSet = FrozenSet[int]


def matching_graph(col: EdgeColouring, k: int) -> Tuple[nx.Graph, Dict[Tuple[KSet, KSet], Dict[int, int]]]:
    """Graph on k-subsets of hosts, joining U and W when a monochromatic k-matching pairs U with W.

    Returns:
        tuple: The graph and, for every ordered adjacent pair (U, W), the matching as a map U -> W.
    """
    graph = nx.Graph()
    matchings: Dict[Tuple[KSet, KSet], Dict[int, int]] = {}
    for colour in range(col.C):
        edges = [tuple(int(x) for x in edge) for edge in col.colour_class(colour)]
        for chosen in combinations(edges, k):
            if len({x for edge in chosen for x in edge}) < 2 * k:
                continue
            first, rest = chosen[0], chosen[1:]
            for flips in product((False, True), repeat=k - 1):
                oriented = [first] + [(y, x) if flip else (x, y) for (x, y), flip in zip(rest, flips)]
                left = frozenset(x for x, _ in oriented)
                right = frozenset(y for _, y in oriented)
                if (left, right) in matchings:
                    continue
                forward = {x: y for x, y in oriented}
                matchings[(left, right)] = forward
                matchings[(right, left)] = {y: x for x, y in forward.items()}
                graph.add_edge(left, right, colour=colour)
    return graph, matchings


def _pick_neighbour(candidates: List[KSet], k: int) -> KSet:
    # greedy proper colouring of the intersection graph of the candidates, largest class first
    classes: List[List[KSet]] = []
    palette = k * k - k + 1
    for candidate in candidates:
        for members in classes:
            if all(not (candidate & other) for other in members):
                members.append(candidate)
                break
        else:
            if len(classes) < palette:
                classes.append([candidate])
    if classes:
        return max(classes, key=len)[0]
    return candidates[0]


def tree_repeat_heuristic(col: EdgeColouring, tree: PatternGraph, k: int) -> Optional[RepeatCertificate]:
    """Look for a k-repeat of a tree through monochromatic k-matchings.

    The k-subsets of hosts joined by monochromatic k-matchings form an auxiliary graph F. It is peeled
    to its ceil(d/2)-core (d the average degree over all k-subsets) and the tree is embedded into the
    core leaf by leaf, every new k-set disjoint from the ones used so far. Following the matchings from
    the k vertices of the root's k-set gives k disjoint copies with equal colours.

    Args:
        col (EdgeColouring): Host colouring, n <= 40.
        tree (PatternGraph): A tree pattern.
        k (int): 2 or 3.

    Returns:
        RepeatCertificate: A k-repeat, or None (which does not prove absence).
    """
    if not tree.is_tree:
        raise PreconditionError(f"tree_repeat_heuristic needs a tree pattern, {tree} is not one")
    if not 2 <= k <= MAX_K or col.n > MAX_HOST_VERTICES:
        raise PreconditionError(f"tree_repeat_heuristic needs 2 <= k <= {MAX_K} and n <= {MAX_HOST_VERTICES}")
    if k * tree.v > col.n:
        return None

    graph, matchings = matching_graph(col, k)
    if graph.number_of_edges() == 0:
        logger.debug("no monochromatic %d-matchings in K_%d", k, col.n)
        return None
    average = 2 * graph.number_of_edges() / comb(col.n, k)
    core = nx.k_core(graph, ceil(average / 2))
    if core.number_of_nodes() == 0:
        core = graph
    logger.debug("auxiliary graph: %d edges, core with %d k-sets", graph.number_of_edges(), core.number_of_nodes())

    root = tree.rooted_tree(0)
    order = [(node.name, node.parent.name if node.parent else None) for node in PreOrderIter(root)]
    starts = sorted(core.nodes, key=lambda s: tuple(sorted(s)))

    for start in starts:
        image: Dict[int, KSet] = {order[0][0]: start}
        used = set(start)
        for vertex, parent in order[1:]:
            candidates = sorted(
                (w for w in core.neighbors(image[parent]) if not (w & used)), key=lambda s: tuple(sorted(s))
            )
            if not candidates:
                break
            chosen = _pick_neighbour(candidates, k)
            image[vertex] = chosen
            used |= chosen
        else:
            return _certificate(col, tree, k, order, image, matchings)
    return None


def _certificate(col, tree, k, order, image, matchings) -> RepeatCertificate:
    root = order[0][0]
    copies = []
    for host in sorted(image[root]):
        place = {root: host}
        for vertex, parent in order[1:]:
            place[vertex] = matchings[(image[parent], image[vertex])][place[parent]]
        copies.append(tuple(place[x] for x in range(tree.v)))
    signature = colour_signature(ColouredCopy.lift(tree, copies[0], col.colour_of), automorphisms(tree))
    logger.info("heuristic found a %d-repeat of %s in K_%d", k, tree, col.n)
    return RepeatCertificate(tree, tuple(copies), signature)
