import networkx as nx
import numpy as np
import pytest

from repeatfree.colouring import EdgeColouring
from repeatfree.constructors import additive_colouring
from repeatfree.errors import PreconditionError
from repeatfree.pattern import parse_pattern
from repeatfree.utils import make_rng, num_pairs, upper_pairs
from repeatfree.verifier import RepeatStatus, check_proper, find_repeats
from repeatfree.vizing import class_degrees, misra_gries, pad_colours, vizing_refine


def random_bounded_colouring(n, cap, rng):
    """Random colouring whose classes have maximum degree at most `cap`."""
    palette = int(rng.integers(1, num_pairs(n) + 1))
    load = np.zeros((palette + num_pairs(n), n), dtype=np.int64)
    colours = np.empty(num_pairs(n), dtype=np.int64)
    iu, ju = upper_pairs(n)
    fresh = palette
    for index in rng.permutation(num_pairs(n)):
        u, v = int(iu[index]), int(ju[index])
        options = [c for c in range(palette) if load[c, u] < cap and load[c, v] < cap]
        if options:
            c = int(rng.choice(options))
        else:
            c, fresh = fresh, fresh + 1
        colours[index] = c
        load[c, u] += 1
        load[c, v] += 1
    return EdgeColouring(n, colours)


def refines(fine, coarse):
    """Every class of `fine` lies inside one class of `coarse`."""
    pairs = np.stack([fine.pair_colours, coarse.pair_colours], axis=1)
    return np.unique(pairs, axis=0).shape[0] == fine.C


class TestMisraGries:
    @pytest.mark.parametrize("seed", range(10))
    def test_random_graphs(self, seed):
        """Test a proper colouring with at most Delta + 1 colours on random graphs."""
        graph = nx.gnp_random_graph(14, 0.5, seed=seed)
        edges = sorted((min(u, v), max(u, v)) for u, v in graph.edges)
        colouring = misra_gries(edges)
        assert set(colouring) == set(edges)
        delta = max(d for _, d in graph.degree)
        assert max(colouring.values()) <= delta
        for x in graph.nodes:
            around = [colouring[(min(x, y), max(x, y))] for y in graph.neighbors(x)]
            assert len(around) == len(set(around))

    def test_odd_cycle_needs_three(self):
        """Test an odd cycle gets exactly three colours."""
        colouring = misra_gries([(0, 1), (1, 2), (0, 2)])
        assert sorted(colouring.values()) == [0, 1, 2]


class TestClassDegrees:
    def test_one_factorization(self):
        """Test every class of a proper colouring has degree 1."""
        assert class_degrees(additive_colouring(7)).tolist() == [1] * 7

    def test_monochromatic(self):
        """Test a monochromatic K_5 has class degree 4."""
        assert class_degrees(EdgeColouring(5, np.zeros(10))).tolist() == [4]


class TestVizingRefine:
    def test_property_suite(self):
        """Test 500 random b-bounded colourings: proper output, at most (b+1)C colours, refined partition."""
        rng = make_rng(17)
        failures = 0
        for _ in range(500):
            n = int(rng.integers(3, 21))
            b = int(rng.integers(1, 5))
            col = random_bounded_colouring(n, b, rng)
            out = vizing_refine(col, b)
            ok = check_proper(out).proper and out.C <= (b + 1) * col.C and refines(out, col)
            failures += not ok
        assert failures == 0

    def test_rejects_unbounded(self):
        """Test a class of degree above b raises PreconditionError."""
        with pytest.raises(PreconditionError):
            vizing_refine(EdgeColouring(5, np.zeros(10)), 3)

    def test_monochromatic_k5(self):
        """Test a monochromatic K_5 becomes a proper colouring with at most 5 colours."""
        out = vizing_refine(EdgeColouring(5, np.zeros(10)), 4)
        assert check_proper(out).proper
        assert out.C == 5
        assert out.meta["refined_b"] == 4

    def test_proper_input_unchanged(self):
        """Test a proper colouring keeps its classes."""
        col = additive_colouring(9)
        assert vizing_refine(col, 1) == col

    def test_thread_independent(self):
        """Test the refined colouring does not depend on the thread count."""
        col = random_bounded_colouring(16, 3, make_rng(5))
        assert vizing_refine(col, 3, threads=1) == vizing_refine(col, 3, threads=4)


class TestPadColours:
    def test_reaches_target(self):
        """Test padding reaches the target, stays proper and refines the input."""
        col = additive_colouring(7)
        padded = pad_colours(col, 15)
        assert padded.C == 15
        assert check_proper(padded).proper
        assert refines(padded, col)

    def test_keeps_repeat_freeness(self):
        """Test splitting classes cannot create a repeat."""
        padded = pad_colours(additive_colouring(9), 20)
        assert find_repeats(padded, parse_pattern("C3"), 2).status is RepeatStatus.ABSENT

    def test_rainbow_target(self):
        """Test padding all the way gives the rainbow colouring."""
        assert pad_colours(additive_colouring(5), 10).C == 10

    @pytest.mark.parametrize("target", [4, 11])
    def test_out_of_range(self, target):
        """Test targets below C or above C(n, 2) are rejected."""
        with pytest.raises(PreconditionError):
            pad_colours(additive_colouring(5), target)

    def test_improper_input(self):
        """Test an improper colouring is rejected."""
        with pytest.raises(PreconditionError):
            pad_colours(EdgeColouring(4, [0, 0, 1, 2, 3, 4]), 6)
