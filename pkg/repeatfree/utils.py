import re
from typing import Iterator, Mapping, Optional, Tuple

import numpy as np

META_LINE = re.compile(r"^#\s*([A-Za-z_][\w.-]*)=(.*)$")


def make_rng(seed: Optional[int]) -> np.random.Generator:
    """Create the generator used for every randomized construction.

    The bit generator is PCG64 (O'Neill's permuted congruential generator, 128-bit state,
    64-bit output), so identical seeds reproduce identical colourings on every platform.

    Args:
        seed: Non-negative integer seed. None is mapped to 0, there is no hidden entropy.

    Returns:
        np.random.Generator: A fresh generator.
    """
    return np.random.Generator(np.random.PCG64(0 if seed is None else int(seed)))


def num_pairs(n: int) -> int:
    return n * (n - 1) // 2


def upper_pairs(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """All pairs u < v of [0, n) in lexicographic order, as two index arrays."""
    return np.triu_indices(n, 1)


def pair_index(u: int, v: int, n: int) -> int:
    """Position of the pair {u, v} in the lexicographic order of upper_pairs(n)."""
    if u > v:
        u, v = v, u
    return u * (2 * n - u - 1) // 2 + (v - u - 1)


def pair_index_array(u: np.ndarray, v: np.ndarray, n: int) -> np.ndarray:
    """Vectorised pair_index for arrays of endpoints."""
    lo = np.minimum(u, v).astype(np.int64)
    hi = np.maximum(u, v).astype(np.int64)
    return lo * (2 * n - lo - 1) // 2 + (hi - lo - 1)


def parse_meta_line(line: str) -> Optional[Tuple[str, str]]:
    """Extract a `# key=value` metadata line.

    Args:
        line (str): A line of a text artifact, e.g. "# family=additive".

    Returns:
        Optional[tuple]: The (key, value) pair, or None if the line is not a metadata line.
    """
    match = META_LINE.match(line.strip())
    if match is None:
        return None
    return match.group(1), match.group(2).strip()


def format_meta(meta: Mapping[str, object]) -> Iterator[str]:
    """Render metadata as `# key=value` lines, sorted by key so files are byte-stable."""
    for key in sorted(meta):
        yield f"# {key}={meta[key]}"
