import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property, lru_cache
from math import prod
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
from anytree import Node as TreeNode

from repeatfree.errors import PatternSpecError, PreconditionError

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]
Permutation = Tuple[int, ...]

MAX_AUTOMORPHISM_VERTICES = 12

SPEC_PATTERN = re.compile(
    r"^(?:(?P<family>[KCPS])(?P<size>\d+)|theta:3:(?P<theta>\d+)|subdiv:K(?P<subdiv>\d+)|edges:(?P<edges>.*))$"
)
EDGE_TOKEN = re.compile(r"^\s*(\d+)\s*-\s*(\d+)\s*$")


@dataclass(frozen=True)
class PatternGraph:
    """A pattern graph H on vertices 0..v-1 without isolated vertices.

    Args:
        v: Number of vertices.
        edges: Unordered vertex pairs, stored normalized (u < w) and sorted.
        name: Optional family tag such as "C4". Not part of equality.
    """

    v: int
    edges: Tuple[Edge, ...]
    name: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        normalized = []
        for u, w in self.edges:
            u, w = int(u), int(w)
            if u == w:
                raise PatternSpecError(f"self-loop at vertex {u}")
            if not (0 <= u < self.v and 0 <= w < self.v):
                raise PatternSpecError(f"edge {u}-{w} has an endpoint outside 0..{self.v - 1}")
            normalized.append((min(u, w), max(u, w)))
        if len(set(normalized)) != len(normalized):
            raise PatternSpecError("duplicate edge in pattern")
        object.__setattr__(self, "edges", tuple(sorted(normalized)))

    @property
    def e(self) -> int:
        return len(self.edges)

    @cached_property
    def adjacency(self) -> Tuple[frozenset, ...]:
        neighbours: List[set] = [set() for _ in range(self.v)]
        for u, w in self.edges:
            neighbours[u].add(w)
            neighbours[w].add(u)
        return tuple(frozenset(s) for s in neighbours)

    @cached_property
    def degrees(self) -> Tuple[int, ...]:
        return tuple(len(s) for s in self.adjacency)

    @cached_property
    def edge_index(self) -> Dict[Edge, int]:
        return {edge: i for i, edge in enumerate(self.edges)}

    @cached_property
    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.v))
        g.add_edges_from(self.edges)
        return g

    @cached_property
    def is_forest(self) -> bool:
        return nx.is_forest(self.graph)

    @cached_property
    def is_bipartite(self) -> bool:
        return nx.is_bipartite(self.graph)

    @property
    def contains_cycle(self) -> bool:
        return not self.is_forest

    @cached_property
    def is_connected(self) -> bool:
        return self.v > 0 and nx.is_connected(self.graph)

    @property
    def is_tree(self) -> bool:
        return self.is_forest and self.is_connected

    def components(self) -> List[Tuple[int, ...]]:
        """Vertex sets of the connected components, ordered by smallest vertex."""
        return sorted((tuple(sorted(c)) for c in nx.connected_components(self.graph)), key=lambda c: c[0])

    def component_pattern(self, vertices: Sequence[int]) -> "PatternGraph":
        """The component spanned by `vertices`, relabelled canonically."""
        inside = set(vertices)
        sub = [(u, w) for u, w in self.edges if u in inside and w in inside]
        return canonical_pattern(sub, name=None)

    def serialize(self) -> str:
        """Serialize to the `edges:` form of the pattern-spec grammar."""
        return "edges:" + ",".join(f"{u}-{w}" for u, w in self.edges)

    def rooted_tree(self, root: int = 0) -> TreeNode:
        """Root a tree pattern as an anytree.

        Children are attached in breadth-first order, so a pre-order walk of the returned tree lists the
        vertices such that every vertex is a leaf attached to the vertices before it.

        Args:
            root: The pattern vertex to use as root.

        Returns:
            anytree.Node: The root node; every node's `name` is a pattern vertex.
        """
        if not self.is_tree:
            raise PreconditionError("rooted_tree requires a tree pattern")
        nodes = {root: TreeNode(root)}
        queue = [root]
        while queue:
            x = queue.pop(0)
            for y in sorted(self.adjacency[x]):
                if y not in nodes:
                    nodes[y] = TreeNode(y, parent=nodes[x])
                    queue.append(y)
        return nodes[root]

    def __str__(self):
        return self.name or self.serialize()


class PatternKind(str, Enum):
    FOREST = "forest"
    BIPARTITE_WITH_CYCLE = "bipartite_with_cycle"
    NON_BIPARTITE = "non_bipartite"


@dataclass(frozen=True)
class ComponentInfo:
    vertices: Tuple[int, ...]
    num_edges: int

    @property
    def order(self) -> int:
        return len(self.vertices)


@dataclass(frozen=True)
class Classification:
    kind: PatternKind
    components: Tuple[ComponentInfo, ...]


@dataclass(frozen=True)
class AutomorphismGroup:
    """Automorphism group of a pattern, stored as a stabiliser chain along the base 0, 1, ..., v-1.

    `base_orbits[i]` is the orbit of vertex i under the automorphisms fixing 0..i-1 pointwise and
    `transversals[i]` holds one automorphism per orbit point, mapping i to that point.
    """

    pattern: PatternGraph
    generators: Tuple[Permutation, ...]
    order: int
    base_orbits: Tuple[Tuple[int, ...], ...] = field(repr=False)
    transversals: Tuple[Tuple[Permutation, ...], ...] = field(repr=False, compare=False)

    @cached_property
    def elements(self) -> Tuple[Permutation, ...]:
        """All group elements, sorted (the identity comes first)."""
        identity = tuple(range(self.pattern.v))
        elements = [identity]
        for reps in reversed(self.transversals):
            elements = [tuple(u[x] for x in h) for u in reps for h in elements]
        return tuple(sorted(set(elements)))

    @cached_property
    def edge_permutations(self) -> Tuple[Tuple[int, ...], ...]:
        """For every element sigma, the map j -> index of the edge sigma(e_j)."""
        index = self.pattern.edge_index
        perms = []
        for sigma in self.elements:
            perms.append(
                tuple(index[(min(sigma[u], sigma[w]), max(sigma[u], sigma[w]))] for u, w in self.pattern.edges)
            )
        return tuple(perms)

    @cached_property
    def symmetry_constraints(self) -> Tuple[Tuple[int, int], ...]:
        """Pairs (i, j) such that an embedding phi is the lexicographically least of its orbit iff
        phi[i] < phi[j] for all pairs."""
        return tuple((i, j) for i, orbit in enumerate(self.base_orbits) for j in orbit if j != i)


@dataclass(frozen=True)
class ColouredCopy:
    """A copy of a pattern in a host colouring.

    Args:
        embedding: Host vertex of every pattern vertex.
        colours: Host colour of every pattern edge, in the order of `PatternGraph.edges`.
    """

    embedding: Tuple[int, ...]
    colours: Tuple[int, ...]

    @classmethod
    def lift(cls, pattern: PatternGraph, embedding: Sequence[int], colour_of) -> "ColouredCopy":
        """Read the colours of an embedding off a host colouring given as `colour_of(u, v)`."""
        embedding = tuple(int(x) for x in embedding)
        colours = tuple(int(colour_of(embedding[u], embedding[w])) for u, w in pattern.edges)
        return cls(embedding, colours)


def _search_order(adj: Sequence[frozenset], first: Sequence[int]) -> List[int]:
    order = list(first)
    placed = set(order)
    while len(order) < len(adj):
        best = max(
            (x for x in range(len(adj)) if x not in placed),
            key=lambda x: (len(adj[x] & placed), len(adj[x]), -x),
        )
        order.append(best)
        placed.add(best)
    return order


def _extend_automorphism(adj: Sequence[frozenset], partial: Dict[int, int]) -> Optional[Permutation]:
    """Find an automorphism extending `partial`, or None if there is none."""
    v = len(adj)
    degree = [len(s) for s in adj]
    fixed = list(partial)
    for i, x in enumerate(fixed):
        if degree[x] != degree[partial[x]]:
            return None
        for y in fixed[:i]:
            if (y in adj[x]) != (partial[y] in adj[partial[x]]):
                return None
    if len(set(partial.values())) != len(partial):
        return None

    order = _search_order(adj, fixed)
    mapping = dict(partial)
    used = set(partial.values())

    def backtrack(pos: int) -> bool:
        if pos == v:
            return True
        x = order[pos]
        earlier = order[:pos]
        for y in range(v):
            if y in used or degree[y] != degree[x]:
                continue
            if all((z in adj[x]) == (mapping[z] in adj[y]) for z in earlier):
                mapping[x] = y
                used.add(y)
                if backtrack(pos + 1):
                    return True
                del mapping[x]
                used.discard(y)
        return False

    if backtrack(len(fixed)):
        return tuple(mapping[x] for x in range(v))
    return None


@lru_cache(maxsize=None)
def automorphisms(pattern: PatternGraph) -> AutomorphismGroup:
    """Compute the exact automorphism group of a pattern.

    Permutations are filtered vertex by vertex (a partial map is discarded as soon as it breaks an
    adjacency), one orbit point at a time along the base 0..v-1.

    Args:
        pattern: The pattern, with at most 12 vertices.

    Returns:
        AutomorphismGroup: Generators, order and the stabiliser chain.
    """
    if pattern.v > MAX_AUTOMORPHISM_VERTICES:
        raise PreconditionError(f"automorphisms supports at most {MAX_AUTOMORPHISM_VERTICES} vertices, got {pattern.v}")
    adj = pattern.adjacency
    identity = tuple(range(pattern.v))
    orbits, transversals = [], []
    for i in range(pattern.v):
        fixed = {x: x for x in range(i)}
        orbit, reps = [i], [identity]
        for w in range(i + 1, pattern.v):
            if pattern.degrees[w] != pattern.degrees[i]:
                continue
            perm = _extend_automorphism(adj, {**fixed, i: w})
            if perm is not None:
                orbit.append(w)
                reps.append(perm)
        orbits.append(tuple(orbit))
        transversals.append(tuple(reps))
    generators = tuple(sorted({rep for reps in transversals for rep in reps if rep != identity}))
    order = prod(len(o) for o in orbits)
    logger.debug("automorphisms of %s: order %d, %d generators", pattern, order, len(generators))
    return AutomorphismGroup(pattern, generators, order, tuple(orbits), tuple(transversals))


def colour_signature(copy: ColouredCopy, aut: AutomorphismGroup) -> Tuple[int, ...]:
    """Canonical colour tuple of a copy: the least colour tuple over all automorphism images.

    Two copies of the same pattern are colour-isomorphic iff their signatures are equal.
    """
    colours = copy.colours
    return min(tuple(colours[j] for j in perm) for perm in aut.edge_permutations)


def classify(pattern: PatternGraph) -> Classification:
    """Place a pattern in the forest / bipartite-with-cycle / non-bipartite trichotomy."""
    if pattern.is_forest:
        kind = PatternKind.FOREST
    elif pattern.is_bipartite:
        kind = PatternKind.BIPARTITE_WITH_CYCLE
    else:
        kind = PatternKind.NON_BIPARTITE
    components = []
    for vertices in pattern.components():
        inside = set(vertices)
        num_edges = sum(1 for u, w in pattern.edges if u in inside)
        components.append(ComponentInfo(vertices, num_edges))
    return Classification(kind, tuple(components))


def _lower_key(adj: Sequence[frozenset], order: List[int], label: Dict[int, int]) -> Tuple[Edge, ...]:
    # Rows of the already labelled vertices; unlabelled neighbours get the smallest labels still possible.
    i = len(order)
    key = []
    for a, x in enumerate(order):
        higher, unknown = [], 0
        for y in adj[x]:
            b = label.get(y)
            if b is None:
                unknown += 1
            elif b > a:
                higher.append(b)
        higher.sort()
        key.extend((a, b) for b in higher)
        key.extend((a, i + t) for t in range(unknown))
    return tuple(key)


def _canonical_edges(v: int, edges: Sequence[Edge]) -> Tuple[Edge, ...]:
    """Lexicographically least sorted edge list over all relabellings, by branch and bound."""
    adj_sets: List[set] = [set() for _ in range(v)]
    for u, w in edges:
        adj_sets[u].add(w)
        adj_sets[w].add(u)
    adj = [frozenset(s) for s in adj_sets]
    sentinel = ((v, v),)
    best: List[Optional[Tuple[Edge, ...]]] = [None]

    def search(order: List[int], label: Dict[int, int]):
        if len(order) == v:
            key = _lower_key(adj, order, label)
            if best[0] is None or key < best[0]:
                best[0] = key
            return
        scored = []
        for x in range(v):
            if x in label:
                continue
            label[x] = len(order)
            order.append(x)
            scored.append((_lower_key(adj, order, label), x))
            order.pop()
            del label[x]
        scored.sort(key=lambda item: (item[0] + sentinel, item[1]))
        fixed = {y: y for y in order}
        covered = set()
        for lb, x in scored:
            if x in covered:
                continue
            if best[0] is not None and lb > best[0][: len(lb)]:
                continue
            for lb2, y in scored:
                if y != x and y not in covered and lb2 == lb:
                    if _extend_automorphism(adj, {**fixed, x: y}) is not None:
                        covered.add(y)
            label[x] = len(order)
            order.append(x)
            search(order, label)
            order.pop()
            del label[x]

    search([], {})
    return best[0]


def canonical_pattern(edges: Sequence[Edge], name: Optional[str] = None) -> PatternGraph:
    """Build a pattern from arbitrary vertex labels, dropping labels without edges and relabelling
    canonically (lexicographically least sorted edge list)."""
    if len(edges) == 0:
        raise PatternSpecError("pattern has an empty edge list")
    vertices = sorted({x for edge in edges for x in edge})
    compact = {x: i for i, x in enumerate(vertices)}
    relabelled = []
    for u, w in edges:
        if u == w:
            raise PatternSpecError(f"self-loop at vertex {u}")
        relabelled.append((min(compact[u], compact[w]), max(compact[u], compact[w])))
    if len(set(relabelled)) != len(relabelled):
        raise PatternSpecError("duplicate edge in pattern")
    return PatternGraph(len(vertices), _canonical_edges(len(vertices), relabelled), name=name)


def _family_edges(family: str, size: int) -> List[Edge]:
    if family == "K":
        return [(i, j) for i in range(size) for j in range(i + 1, size)]
    if family == "C":
        if size < 3:
            raise PatternSpecError(f"cycle C{size} needs at least 3 vertices")
        return [(i, (i + 1) % size) for i in range(size)]
    if family == "P":
        return [(i, i + 1) for i in range(size - 1)]
    return [(0, i) for i in range(1, size + 1)]


def _theta_edges(paths: int) -> List[Edge]:
    edges = []
    for p in range(paths):
        a, b = 2 + 2 * p, 3 + 2 * p
        edges.extend([(0, a), (a, b), (b, 1)])
    return edges


def _subdivision_edges(t: int) -> List[Edge]:
    edges, s = [], t
    for i in range(t):
        for j in range(i + 1, t):
            edges.extend([(i, s), (s, j)])
            s += 1
    return edges


def _explicit_edges(text: str) -> List[Edge]:
    edges = []
    for token in text.split(","):
        match = EDGE_TOKEN.match(token)
        if match is None:
            raise PatternSpecError(f"malformed edge token {token!r}")
        edges.append((int(match.group(1)), int(match.group(2))))
    return edges


@lru_cache(maxsize=256)
def parse_pattern(spec: str) -> PatternGraph:
    """Parse a pattern spec into a canonically labelled pattern graph.

    Grammar: `K<t> | C<k> | P<t> | S<m> | theta:3:<l> | subdiv:K<t> | edges:<u>-<v>[,...]`, where P<t> is the
    path on t vertices and S<m> the star with m edges.

    Args:
        spec (str): The pattern spec, e.g. "C4" or "edges:0-1,1-2".

    Returns:
        PatternGraph: The pattern, relabelled so its sorted edge list is lexicographically least.
    """
    text = spec.strip()
    match = SPEC_PATTERN.match(text)
    if match is None:
        raise PatternSpecError(f"malformed pattern spec {spec!r}")
    if match.group("family"):
        edges = _family_edges(match.group("family"), int(match.group("size")))
    elif match.group("theta") is not None:
        paths = int(match.group("theta"))
        if paths < 1:
            raise PatternSpecError("theta:3:<l> needs l >= 1")
        edges = _theta_edges(paths)
    elif match.group("subdiv") is not None:
        edges = _subdivision_edges(int(match.group("subdiv")))
    else:
        if not match.group("edges").strip():
            raise PatternSpecError("pattern has an empty edge list")
        edges = _explicit_edges(match.group("edges"))
    return canonical_pattern(edges, name=text)


def literal_pattern(spec: str) -> PatternGraph:
    """Like parse_pattern, but an `edges:` spec keeps its vertex labels.

    Used when reading artifacts whose embeddings refer to the labels written out by `serialize`.
    """
    text = spec.strip()
    if not text.startswith("edges:"):
        return parse_pattern(text)
    edges = _explicit_edges(text[len("edges:"):])
    return PatternGraph(max(max(edge) for edge in edges) + 1, tuple(edges), name=None)


def is_isomorphic(first: PatternGraph, second: PatternGraph) -> bool:
    if first.v != second.v or first.e != second.e:
        return False
    return canonical_pattern(first.edges).edges == canonical_pattern(second.edges).edges


def has_disjoint_odd_cycles(pattern: PatternGraph) -> bool:
    """Whether the vertex set splits into two parts that each span a non-bipartite subgraph."""
    vertices = list(range(pattern.v))
    graph = pattern.graph
    for mask in range(1, 1 << (pattern.v - 1)):
        left = [x for x in vertices if mask >> x & 1]
        right = [x for x in vertices if not mask >> x & 1]
        if not nx.is_bipartite(graph.subgraph(left)) and not nx.is_bipartite(graph.subgraph(right)):
            return True
    return False
