import logging
from functools import cached_property
from pathlib import Path
from typing import Dict, Iterator, Mapping, Optional, Tuple, Union

import numpy as np

from repeatfree.errors import FormatError, PreconditionError
from repeatfree.utils import format_meta, num_pairs, pair_index, parse_meta_line, upper_pairs

logger = logging.getLogger(__name__)

FORMAT_HEADER = "rfc v1"


class EdgeColouring:
    """An edge-colouring of the complete graph K_n.

    Colours are stored per pair u < v in lexicographic pair order and are census-compacted: the
    colour ids are exactly 0..C-1 and each one is used by at least one edge.

    Args:
        n (int): Number of host vertices.
        pair_colours: Colour of every pair, in the order of `utils.upper_pairs(n)`. Arbitrary
            integer ids are accepted and compacted (order-preserving).
        meta (dict, optional): Construction provenance (family, parameters, seed, measurements).
    """

    def __init__(self, n: int, pair_colours, meta: Optional[Mapping[str, object]] = None):
        if n < 1:
            raise PreconditionError(f"a colouring needs n >= 1, got {n}")
        raw = np.asarray(pair_colours, dtype=np.int64).reshape(-1)
        if raw.shape[0] != num_pairs(n):
            raise PreconditionError(f"K_{n} has {num_pairs(n)} edges, got {raw.shape[0]} colours")
        if raw.size:
            _, compact = np.unique(raw, return_inverse=True)
            compact = compact.reshape(-1).astype(np.int64)
        else:
            compact = raw
        compact.setflags(write=False)
        self._n = int(n)
        self._colours = compact
        self._meta: Dict[str, object] = dict(meta or {})

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, meta: Optional[Mapping[str, object]] = None) -> "EdgeColouring":
        """Build a colouring from a symmetric n x n colour matrix (the diagonal is ignored)."""
        matrix = np.asarray(matrix)
        n = matrix.shape[0]
        iu, ju = upper_pairs(n)
        return cls(n, matrix[iu, ju], meta)

    @classmethod
    def from_edges(cls, n: int, colour_of: Mapping[Tuple[int, int], int], meta=None) -> "EdgeColouring":
        """Build a colouring from a mapping {(u, v): colour} covering every pair."""
        colours = np.empty(num_pairs(n), dtype=np.int64)
        seen = np.zeros(num_pairs(n), dtype=bool)
        for (u, v), c in colour_of.items():
            index = pair_index(u, v, n)
            colours[index] = c
            seen[index] = True
        if not seen.all():
            raise PreconditionError("the colour map does not cover every pair of K_n")
        return cls(n, colours, meta)

    @property
    def n(self) -> int:
        return self._n

    @property
    def pair_colours(self) -> np.ndarray:
        return self._colours

    @property
    def meta(self) -> Dict[str, object]:
        return dict(self._meta)

    @cached_property
    def C(self) -> int:
        return int(self._colours.max()) + 1 if self._colours.size else 0

    @cached_property
    def matrix(self) -> np.ndarray:
        """Symmetric colour matrix with -1 on the diagonal."""
        matrix = np.full((self._n, self._n), -1, dtype=np.int64)
        iu, ju = upper_pairs(self._n)
        matrix[iu, ju] = self._colours
        matrix[ju, iu] = self._colours
        matrix.setflags(write=False)
        return matrix

    @cached_property
    def class_sizes(self) -> np.ndarray:
        return np.bincount(self._colours, minlength=self.C)

    def colour_of(self, u: int, v: int) -> int:
        if u == v:
            raise PreconditionError(f"({u}, {v}) is not an edge")
        return int(self._colours[pair_index(u, v, self._n)])

    def pairs(self) -> Iterator[Tuple[int, int, int]]:
        """Yield (u, v, colour) for every pair u < v in lexicographic order."""
        iu, ju = upper_pairs(self._n)
        for u, v, c in zip(iu.tolist(), ju.tolist(), self._colours.tolist()):
            yield u, v, c

    def colour_class(self, colour: int) -> np.ndarray:
        """Edges of one colour as a (size, 2) array."""
        iu, ju = upper_pairs(self._n)
        mask = self._colours == colour
        return np.stack([iu[mask], ju[mask]], axis=1)

    def with_meta(self, **meta) -> "EdgeColouring":
        merged = dict(self._meta)
        merged.update(meta)
        return EdgeColouring(self._n, self._colours, merged)

    def to_text(self) -> str:
        """Serialize to the `rfc v1` format (pairs sorted, metadata sorted by key)."""
        lines = [FORMAT_HEADER, f"n={self._n} colours={self.C}"]
        lines.extend(f"{u} {v} {c}" for u, v, c in self.pairs())
        lines.extend(format_meta(self._meta))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "EdgeColouring":
        """Parse the `rfc v1` format.

        Raises:
            FormatError: On a bad header, a missing or repeated pair, or a colour census mismatch.
        """
        lines = [line for line in text.splitlines() if line.strip()]
        if not lines or lines[0].strip() != FORMAT_HEADER:
            raise FormatError(f"expected header {FORMAT_HEADER!r}")
        if len(lines) < 2:
            raise FormatError("missing size line")
        try:
            fields = dict(token.split("=", 1) for token in lines[1].split())
            n, declared = int(fields["n"]), int(fields["colours"])
        except (KeyError, ValueError) as exc:
            raise FormatError(f"malformed size line {lines[1]!r}") from exc
        if n < 1:
            raise FormatError(f"invalid vertex count {n}")

        colours = np.full(num_pairs(n), -1, dtype=np.int64)
        meta: Dict[str, object] = {}
        for number, line in enumerate(lines[2:], start=3):
            if line.lstrip().startswith("#"):
                item = parse_meta_line(line)
                if item is None:
                    raise FormatError(f"line {number}: malformed metadata {line!r}")
                meta[item[0]] = item[1]
                continue
            if meta:
                raise FormatError(f"line {number}: edge line after metadata")
            try:
                u, v, c = (int(x) for x in line.split())
            except ValueError as exc:
                raise FormatError(f"line {number}: expected 'u v c', got {line!r}") from exc
            if not (0 <= u < v < n):
                raise FormatError(f"line {number}: pair {u} {v} is not u < v < {n}")
            if not (0 <= c < declared):
                raise FormatError(f"line {number}: colour {c} outside [0, {declared})")
            index = pair_index(u, v, n)
            if colours[index] >= 0:
                raise FormatError(f"line {number}: pair {u} {v} listed twice")
            colours[index] = c
        if (colours < 0).any():
            raise FormatError(f"{int((colours < 0).sum())} pairs of K_{n} have no colour")
        used = np.unique(colours).size
        if used != declared:
            raise FormatError(f"header declares {declared} colours but {used} are used")
        return cls(n, colours, meta)

    def write(self, path: Union[str, Path]):
        Path(path).write_text(self.to_text())
        logger.info("wrote K_%d colouring with %d colours to %s", self._n, self.C, path)

    @classmethod
    def read(cls, path: Union[str, Path]) -> "EdgeColouring":
        return cls.from_text(Path(path).read_text())

    def __eq__(self, other):
        if not isinstance(other, EdgeColouring):
            return NotImplemented
        return self._n == other._n and np.array_equal(self._colours, other._colours)

    def __hash__(self):
        return hash((self._n, self._colours.tobytes()))

    def __repr__(self):
        family = self._meta.get("family", "?")
        return f"EdgeColouring(n={self._n}, C={self.C}, family={family})"
