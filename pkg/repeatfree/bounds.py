import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from math import ceil, comb
from typing import Iterator, List, Optional

from marko import Markdown

from repeatfree.errors import PreconditionError
from repeatfree.pattern import (
    PatternGraph,
    PatternKind,
    classify,
    has_disjoint_odd_cycles,
    is_isomorphic,
    parse_pattern,
)

logger = logging.getLogger(__name__)

LARGE_N = "valid only for n sufficiently large"
UP_TO_THETA = "up to constant factors (component reduction)"


class BoundKind(str, Enum):
    LOWER = "lower"
    UPPER = "upper"
    ANNOTATION = "annotation"


@dataclass(frozen=True)
class BoundEntry:
    """One evaluated bound on f_k(n, H).

    Args:
        name: Short identifier, e.g. "local-lemma".
        kind: Lower bound, upper bound, or an annotation that claims nothing.
        value: Numeric value at this n, when the statement has one.
        exponent: Exponent of n for asymptotic statements.
        constant: Leading constant, only where the statement gives one.
        applicable: Whether the applicability condition holds for this pattern and k.
        condition: The applicability condition in words.
        anchor: Which statement of the theory the entry comes from.
        asymptotic: The entry is an O/Omega statement.
        caveat: Validity caveat ("n sufficiently large", component reduction).
    """

    name: str
    kind: BoundKind
    value: Optional[Fraction] = None
    exponent: Optional[Fraction] = None
    constant: Optional[Fraction] = None
    applicable: bool = True
    condition: str = ""
    anchor: str = ""
    asymptotic: bool = False
    caveat: str = ""

    @property
    def holds_at_n(self) -> bool:
        """The numeric value is an unconditional bound at this n."""
        return self.applicable and self.value is not None and not self.asymptotic and not self.caveat


@dataclass
class BoundReport:
    n: int
    k: int
    pattern: PatternGraph
    v: int
    e: int
    m: Optional[int]
    entries: List[BoundEntry] = field(default_factory=list)

    @property
    def applicable(self) -> List[BoundEntry]:
        return [entry for entry in self.entries if entry.applicable]

    @property
    def best_lower(self) -> Fraction:
        return max(e.value for e in self.entries if e.kind is BoundKind.LOWER and e.holds_at_n)

    @property
    def best_upper(self) -> Fraction:
        return min(e.value for e in self.entries if e.kind is BoundKind.UPPER and e.holds_at_n)

    @property
    def best_lower_exponent(self) -> Optional[Fraction]:
        exponents = [e.exponent for e in self.applicable if e.kind is BoundKind.LOWER and e.exponent is not None]
        return max(exponents) if exponents else None

    @property
    def best_upper_exponent(self) -> Optional[Fraction]:
        exponents = [e.exponent for e in self.applicable if e.kind is BoundKind.UPPER and e.exponent is not None]
        return min(exponents) if exponents else None

    def find(self, name: str) -> Optional[BoundEntry]:
        return next((entry for entry in self.entries if entry.name == name), None)


def _fmt(x: Optional[Fraction]) -> str:
    if x is None:
        return "-"
    return str(x)


def lll_exponent(v: int, e: int, k: int) -> Fraction:
    """max(1, (kv - 2) / ((k - 1) e))."""
    return max(Fraction(1), Fraction(k * v - 2, (k - 1) * e))


def tree_matching_constant(m: int, k: int) -> Fraction:
    """1 / q for q = (4k(km + 1)(k^2 - k + 1))^(1 / (k - 1)), exact for k = 2 and rounded otherwise."""
    base = 4 * k * (k * m + 1) * (k * k - k + 1)
    if k == 2:
        return Fraction(1, base)
    return Fraction(base ** (-1.0 / (k - 1))).limit_denominator(10**12)


def smallest_k_linear(pattern: PatternGraph) -> Optional[int]:
    """Explicit k with f_k(n, H) = O(n) from the local lemma bound: ceil((e - 2) / (e - v)).

    Returns:
        int: The bound, or None unless H is connected with e > v.
    """
    if not pattern.is_connected or pattern.e <= pattern.v:
        return None
    return ceil(Fraction(pattern.e - 2, pattern.e - pattern.v))


def _theta_paths(pattern: PatternGraph) -> Optional[int]:
    if pattern.v % 2 or pattern.v < 6:
        return None
    paths = (pattern.v - 2) // 2
    if pattern.e != 3 * paths:
        return None
    theta = parse_pattern(f"theta:3:{paths}")
    return paths if is_isomorphic(theta, pattern) else None


def _cycle_length(pattern: PatternGraph) -> Optional[int]:
    if pattern.is_connected and pattern.v == pattern.e and all(d == 2 for d in pattern.degrees):
        return pattern.v
    return None


def _subdivided_clique(pattern: PatternGraph) -> Optional[int]:
    for t in range(3, 6):
        if pattern.v == t + comb(t, 2) and is_isomorphic(parse_pattern(f"subdiv:K{t}"), pattern):
            return t
    return None


def _components(pattern: PatternGraph) -> List[PatternGraph]:
    return [pattern.component_pattern(vertices) for vertices in pattern.components()]


def _exact_entries(n: int, pattern: PatternGraph, k: int, kind: PatternKind) -> Iterator[BoundEntry]:
    yield BoundEntry("trivial-range", BoundKind.LOWER, Fraction(n - 1), anchor="every proper colouring has >= n-1 colours")
    yield BoundEntry("trivial-range", BoundKind.UPPER, Fraction(comb(n, 2)), anchor="rainbow colouring")
    yield BoundEntry(
        "chromatic-index",
        BoundKind.LOWER,
        Fraction(n),
        applicable=n % 2 == 1 and n >= 3,
        condition="n odd",
        anchor="K_n has chromatic index n for odd n",
    )
    yield BoundEntry(
        "pigeonhole-edges",
        BoundKind.LOWER,
        Fraction(ceil(Fraction(comb(n, 2), k - 1))),
        applicable=pattern.v == 2 and pattern.e == 1,
        condition="H = K2",
        anchor="each colour class of a proper colouring holds <= k-1 edges",
    )
    non_bipartite = kind is PatternKind.NON_BIPARTITE
    yield BoundEntry(
        "odd-cycle-additive",
        BoundKind.UPPER,
        Fraction(n if n % 2 else n + 1),
        applicable=non_bipartite and n >= 3,
        condition="H non-bipartite",
        anchor="additive colouring a+b mod n: no two distinct odd cycles are colour-isomorphic",
    )
    disjoint_odd = non_bipartite and has_disjoint_odd_cycles(pattern)
    yield BoundEntry(
        "even-extension",
        BoundKind.UPPER,
        Fraction(n - 1),
        applicable=non_bipartite and n % 2 == 0 and n >= 4 and (k >= 3 or disjoint_odd),
        condition="n even, H non-bipartite and k >= 3, or k = 2 and H has two vertex-disjoint odd cycles",
        anchor="additive colouring of K_{n-1} extended uniquely to a 1-factorization of K_n",
    )


def _asymptotic_entries(n: int, pattern: PatternGraph, k: int, kind: PatternKind) -> Iterator[BoundEntry]:
    components = _components(pattern)
    connected = len(components) == 1
    caveat_upper = "" if connected else "minimum over components"
    caveat_lower = "" if connected else UP_TO_THETA

    exponent = min(lll_exponent(c.v, c.e, k) for c in components)
    yield BoundEntry(
        "local-lemma",
        BoundKind.UPPER,
        exponent=exponent,
        condition="any H",
        anchor="random (kv-2)-bounded colouring via the local lemma, then Vizing refinement",
        asymptotic=True,
        caveat=caveat_upper,
    )

    bipartite_linear = kind is not PatternKind.NON_BIPARTITE and Fraction(pattern.e) >= Fraction(
        k * pattern.v - 2, k - 1
    )
    yield BoundEntry(
        "linear-threshold",
        BoundKind.UPPER,
        exponent=Fraction(1),
        applicable=bipartite_linear,
        condition="H bipartite with e >= k/(k-1) v - 2/(k-1)",
        anchor="local-lemma exponent drops to 1, so f is Theta(n)",
        asymptotic=True,
    )

    if kind is PatternKind.FOREST:
        yield from _forest_entries(n, pattern, k, components, caveat_lower)
    else:
        yield BoundEntry(
            "algebraic-linear",
            BoundKind.ANNOTATION,
            applicable=True,
            condition="H contains a cycle",
            anchor="random algebraic colouring: some k has f_k(n, H) = O(n); no explicit k",
        )

    paths = _theta_paths(pattern)
    yield BoundEntry(
        "theta-lower",
        BoundKind.LOWER,
        exponent=Fraction(4, 3),
        applicable=paths is not None and k == 2,
        condition="H = theta graph with l >= 2 paths of length 3 (C6 for l = 2), k = 2",
        anchor="auxiliary graph on pairs contains a theta subgraph once C = o(n^(4/3))",
        asymptotic=True,
    )
    yield from _open_problems(n, pattern, k, kind)


def _forest_entries(n, pattern, k, components, caveat_lower) -> Iterator[BoundEntry]:
    trees = [c for c in components]
    is_tree = len(trees) == 1
    m = pattern.e if is_tree else max(t.e for t in trees)

    yield BoundEntry(
        "tree-local-lemma",
        BoundKind.UPPER,
        exponent=min(Fraction(k * (t.e + 1) - 2, (k - 1) * t.e) for t in trees),
        condition="H a forest",
        anchor="local lemma bound with v = m + 1",
        asymptotic=True,
        caveat="" if is_tree else "minimum over components",
    )

    if k == 2:
        lower_exponent = Fraction(2)
    else:
        lower_exponent = min(max(Fraction(k, k - 1), Fraction(t.e + 1, t.e)) for t in trees)
    yield BoundEntry(
        "forest-lower",
        BoundKind.LOWER,
        exponent=lower_exponent,
        condition="H a forest",
        anchor="max of the matching-graph exponent k/(k-1) and the pigeonhole exponent (m+1)/m",
        asymptotic=True,
        caveat=caveat_lower,
    )

    constant = tree_matching_constant(m, k)
    exponent = Fraction(k, k - 1)
    yield BoundEntry(
        "tree-matching-lower",
        BoundKind.LOWER,
        value=constant * Fraction(n) ** 2 if k == 2 else Fraction(n ** float(exponent)) * constant,
        exponent=exponent,
        constant=constant,
        applicable=is_tree,
        condition="H a tree with m edges",
        anchor="n^(k/(k-1)) / q with q = (4k(km+1)(k^2-k+1))^(1/(k-1))",
        caveat=LARGE_N,
    )
    yield BoundEntry(
        "tree-quadratic-lower",
        BoundKind.LOWER,
        value=Fraction(n * n, 24 * (2 * m + 1)),
        exponent=Fraction(2),
        constant=Fraction(1, 24 * (2 * m + 1)),
        applicable=is_tree and k == 2,
        condition="H a tree with m edges, k = 2",
        anchor="n^2 / (24(2m+1)), the k = 2 case of the matching-graph bound",
        caveat=LARGE_N,
    )
    yield BoundEntry(
        "clique-matching",
        BoundKind.UPPER,
        value=Fraction(n * n, 2 * m) if m >= 2 else None,
        exponent=Fraction(2),
        constant=Fraction(1, 2 * m),
        applicable=is_tree and m >= 2,
        condition="H a tree with m >= 2 edges (any k, as f decreases in k)",
        anchor="(1+o(1)) n^2 / (2m): edge-disjoint K_{2m+1} each split into near-perfect matchings",
        asymptotic=True,
        caveat=LARGE_N,
    )
    yield BoundEntry(
        "vandermonde",
        BoundKind.UPPER,
        exponent=Fraction(3, 2),
        applicable=is_tree and m >= 2 and k >= 3,
        condition="H a tree with >= 2 edges, k >= 3",
        anchor="quadratic colouring over F_q^2: no three vertices meet the same two colours",
        asymptotic=True,
    )
    yield BoundEntry(
        "pigeonhole-tuples",
        BoundKind.LOWER,
        exponent=min(Fraction(t.e + 1, t.e) for t in trees),
        condition="H a forest",
        anchor="Theta(n^(m+1)) copies but O(C^m) colour tuples; each vertex meets <= m+1 copies per tuple",
        asymptotic=True,
        caveat=caveat_lower,
    )
    yield BoundEntry(
        "algebraic-tree",
        BoundKind.ANNOTATION,
        exponent=Fraction(m + 1, m),
        applicable=is_tree,
        condition="H a tree with m edges",
        anchor="random algebraic colouring: some k' has f_k'(n, T) = O(n^((m+1)/m)); no explicit k'",
    )


def _open_problems(n, pattern, k, kind) -> Iterator[BoundEntry]:
    cycle = _cycle_length(pattern)
    yield BoundEntry(
        "open-c4-linear",
        BoundKind.ANNOTATION,
        applicable=cycle == 4 and k == 2,
        condition="H = C4, k = 2",
        anchor="open: is f_2(n, C4) = Theta(n)? only O(n^(3/2)) is known",
    )
    yield BoundEntry(
        "open-c6-exponent",
        BoundKind.ANNOTATION,
        applicable=cycle == 6 and k == 2,
        condition="H = C6, k = 2",
        anchor="open: the exponent of f_2(n, C6) lies in [4/3, 5/3]",
    )
    yield BoundEntry(
        "open-long-even-cycles",
        BoundKind.ANNOTATION,
        applicable=cycle is not None and cycle % 2 == 0 and cycle >= 8 and k == 2,
        condition="H = C_2m, k = 2",
        anchor="open: does the exponent of f_2(n, C_2m) tend to 2?",
    )
    yield BoundEntry(
        "open-tree-threshold",
        BoundKind.ANNOTATION,
        applicable=kind is PatternKind.FOREST and pattern.is_connected,
        condition="H a tree with m edges",
        anchor="suspected: f_k(n, T) = Theta(n^((m+1)/m)) exactly from k = m+1 on",
    )
    yield BoundEntry(
        "open-subdivision",
        BoundKind.ANNOTATION,
        applicable=_subdivided_clique(pattern) is not None and k == 2,
        condition="H = 1-subdivision of K_t, k = 2",
        anchor="test case: can e >= (3/2) v - 3 be pushed towards 2v for linear f_2?",
    )
    yield BoundEntry(
        "open-odd-cycle-even-n",
        BoundKind.ANNOTATION,
        applicable=cycle is not None and cycle % 2 == 1 and n % 2 == 0 and k == 2,
        condition="H an odd cycle, n even, k = 2",
        anchor="open: f_2(n, H) is only known to lie in [n-1, n+1]",
    )


def bound_report(n: int, pattern: PatternGraph, k: int) -> BoundReport:
    """Evaluate every bound on f_k(n, H) whose applicability condition holds.

    Exact statements get numeric values at n, statements with explicit constants are evaluated with a
    "sufficiently large n" caveat, and O/Omega statements are reported as exponents only.

    Args:
        n (int): Host size.
        pattern (PatternGraph): The pattern H.
        k (int): Repeat multiplicity, at least 2.

    Returns:
        BoundReport: All entries, applicable or not, in a fixed order.
    """
    if k < 2:
        raise PreconditionError(f"k must be at least 2, got {k}")
    kind = classify(pattern).kind
    report = BoundReport(n, k, pattern, pattern.v, pattern.e, pattern.e if kind is PatternKind.FOREST else None)
    report.entries.extend(_exact_entries(n, pattern, k, kind))
    report.entries.extend(_asymptotic_entries(n, pattern, k, kind))
    logger.debug("bound report for f_%d(%d, %s): %d entries", k, n, pattern, len(report.entries))
    return report


def valid_lower_bound(n: int, pattern: PatternGraph, k: int) -> int:
    """Largest lower bound on f_k(n, H) that holds unconditionally at this n."""
    return int(ceil(bound_report(n, pattern, k).best_lower))


def render_records(report: BoundReport) -> str:
    """One tab-separated record per entry: name, kind, exponent, constant, applicable, anchor."""
    lines = []
    for entry in report.entries:
        fields = [
            entry.name,
            entry.kind.value,
            _fmt(entry.exponent),
            _fmt(entry.constant),
            str(entry.applicable).lower(),
            entry.anchor,
        ]
        lines.append("\t".join(fields))
    return "\n".join(lines) + "\n"


def render_table(report: BoundReport) -> str:
    """Human-readable table of the applicable entries plus the best bounds."""
    spec = report.pattern.name or report.pattern.serialize()
    lines = [f"f_{report.k}({report.n}, {spec})  v={report.v} e={report.e}" + (f" m={report.m}" if report.m else "")]
    lines.append(f"{'name':<22} {'kind':<10} {'value':>14} {'exponent':>9} {'constant':>14}  caveat")
    for entry in report.applicable:
        value = "-" if entry.value is None else f"{float(entry.value):.6g}"
        lines.append(
            f"{entry.name:<22} {entry.kind.value:<10} {value:>14} {_fmt(entry.exponent):>9} "
            f"{_fmt(entry.constant):>14}  {entry.caveat}"
        )
    lines.append(f"best lower: {report.best_lower}   best upper: {report.best_upper}")
    lines.append(f"exponents: lower {_fmt(report.best_lower_exponent)}   upper {_fmt(report.best_upper_exponent)}")
    return "\n".join(lines) + "\n"


def render_markdown(report: BoundReport) -> str:
    spec = report.pattern.name or report.pattern.serialize()
    lines = [
        f"## Bounds on f_{report.k}({report.n}, {spec})",
        "",
        "| name | kind | value | exponent | constant | condition | caveat |",
        "| --- | --- | --- | --- | --- | --- | --- |",
    ]
    for entry in report.applicable:
        value = "-" if entry.value is None else f"{float(entry.value):.6g}"
        lines.append(
            f"| {entry.name} | {entry.kind.value} | {value} | {_fmt(entry.exponent)} | {_fmt(entry.constant)} "
            f"| {entry.condition} | {entry.caveat} |"
        )
    lines.append("")
    lines.append(f"Best valid bounds at this n: {report.best_lower} <= f <= {report.best_upper}")
    return "\n".join(lines) + "\n"


def render_html(report: BoundReport) -> str:
    """The Markdown report rendered to HTML with GitHub-flavoured tables."""
    return Markdown(extensions=["gfm"]).convert(render_markdown(report))


__all__ = [
    "BoundEntry",
    "BoundKind",
    "BoundReport",
    "bound_report",
    "lll_exponent",
    "render_html",
    "render_markdown",
    "render_records",
    "render_table",
    "smallest_k_linear",
    "tree_matching_constant",
    "valid_lower_bound",
]
