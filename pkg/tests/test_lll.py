from fractions import Fraction

import pytest

from repeatfree.copies import CopyIndex
from repeatfree.errors import ExactLimitError, PreconditionError, ResampleBudgetExhausted
from repeatfree.lll import BadEvent, lll_colouring, lll_exponent, lll_palette
from repeatfree.pattern import parse_pattern
from repeatfree.verifier import RepeatStatus, check_proper, find_repeats


@pytest.fixture()
def c4():
    return parse_pattern("C4")


class TestPalette:
    def test_exponent(self, c4):
        """Test the colour exponent of C4 at k = 2 is 3/2."""
        assert lll_exponent(c4, 2) == Fraction(3, 2)

    def test_palette_uses_larger_exponent(self, c4):
        """Test the palette follows n^(3/2) for C4 and n^2 for a single edge at k = 3."""
        assert abs(lll_palette(16, c4, 2, 0.25) - 256) <= 1
        assert abs(lll_palette(10, parse_pattern("K2"), 3, 0.5) - 200) <= 1


class TestLLLColouring:
    @pytest.mark.parametrize("n", [30, 40])
    def test_c4_no_repeat(self, c4, n):
        """Test at least 8 of 10 seeds succeed and every success is certified free of 2-repeats of C4."""
        successes = 0
        for seed in range(10):
            try:
                col = lll_colouring(n, c4, 2, seed=seed)
            except ResampleBudgetExhausted:
                continue
            assert check_proper(col).proper
            assert col.C <= 4 * n**1.5
            assert col.meta["constant"] == round(col.C / n**1.5, 6)
            assert find_repeats(col, c4, 2).status is RepeatStatus.ABSENT
            successes += 1
        assert successes >= 8

    def test_single_edge_is_rainbow(self):
        """Test no 2-repeat of K2 forces every class down to one edge."""
        col = lll_colouring(8, parse_pattern("K2"), 2, seed=3)
        assert col.C == 28

    def test_seeded(self, c4):
        """Test the same seed gives the same colouring."""
        assert lll_colouring(14, c4, 2, seed=6) == lll_colouring(14, c4, 2, seed=6)

    def test_resamples_are_local(self, c4, mocker):
        """Test that after the first full scan only copies touching recoloured edges are refreshed."""
        spy = mocker.spy(CopyIndex, "refresh")
        col = lll_colouring(12, c4, 2, seed=1, gamma=4.0)
        assert col.meta["resamples"] > 0
        assert find_repeats(col, c4, 2).status is RepeatStatus.ABSENT
        first = spy.call_args_list[0]
        assert len(first.args) == 2
        total = len(spy.spy_return_list[0])
        local = [rows for call, rows in zip(spy.call_args_list, spy.spy_return_list) if len(call.args) == 3]
        assert local
        assert all(len(rows) < total for rows in local)

    def test_budget_exhausted(self, c4):
        """Test a single-colour palette without back-offs gives up and reports the star event."""
        with pytest.raises(ResampleBudgetExhausted) as info:
            lll_colouring(12, c4, 2, seed=0, gamma=64.0, max_resamples=1, max_backoffs=0)
        event = info.value.last_event
        assert isinstance(event, BadEvent)
        assert event.kind == "star"
        assert len(event.pairs) == 2 * c4.v - 1

    def test_non_bipartite(self):
        """Test a triangle is rejected."""
        with pytest.raises(PreconditionError):
            lll_colouring(10, parse_pattern("C3"), 2)

    def test_k_below_two(self, c4):
        """Test k = 1 is rejected."""
        with pytest.raises(PreconditionError):
            lll_colouring(10, c4, 1)

    def test_host_too_large(self, c4):
        """Test n above the in-memory limit is rejected."""
        with pytest.raises(ExactLimitError):
            lll_colouring(61, c4, 2)
