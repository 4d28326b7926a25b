from itertools import product

import numpy as np
import pytest

from repeatfree.errors import FieldOverflowError, PreconditionError, SingularSystemError
from repeatfree.field import (
    MAX_MODULUS,
    MultiPoly,
    PrimeFieldCtx,
    eval_poly,
    eval_poly_array,
    is_prime,
    monomials,
    next_prime_at_least,
    sample_poly,
    solve_vandermonde3,
    solve_vandermonde3_array,
)
from repeatfree.utils import make_rng


@pytest.fixture()
def f7():
    return PrimeFieldCtx(7)


class TestPrimes:
    def test_small_primes(self):
        """Test is_prime against trial division below 500."""
        for x in range(500):
            expected = x >= 2 and all(x % p for p in range(2, int(x**0.5) + 1))
            assert is_prime(x) == expected

    @pytest.mark.parametrize("x, q", [(2, 2), (4, 5), (11, 11), (25, 29), (101, 101), (102, 103)])
    def test_next_prime(self, x, q):
        """Test next_prime_at_least on small inputs."""
        assert next_prime_at_least(x) == q

    def test_largest_32_bit_prime(self):
        """Test the largest prime below 2^32 is reachable."""
        assert next_prime_at_least(4294967280) == 4294967291

    def test_overflow(self):
        """Test that no prime above the largest 32-bit prime is returned."""
        with pytest.raises(FieldOverflowError):
            next_prime_at_least(4294967292)

    def test_below_two(self):
        """Test next_prime_at_least rejects x < 2."""
        with pytest.raises(PreconditionError):
            next_prime_at_least(1)


class TestPrimeFieldCtx:
    def test_not_prime(self):
        """Test a composite modulus is rejected."""
        with pytest.raises(PreconditionError):
            PrimeFieldCtx(9)

    def test_too_large(self):
        """Test a modulus beyond 32 bits is rejected."""
        with pytest.raises(FieldOverflowError):
            PrimeFieldCtx(MAX_MODULUS + 2)

    def test_arithmetic(self, f7):
        """Test the basic operations reduce into 0..q-1."""
        assert f7.add(5, 4) == 2
        assert f7.sub(2, 5) == 4
        assert f7.mul(3, 5) == 1
        assert f7.inv(3) == 5
        assert f7.element(-1) == 6

    def test_inverse_of_zero(self, f7):
        """Test 0 has no inverse."""
        with pytest.raises(ZeroDivisionError):
            f7.inv(0)

    def test_inv_array(self, f7):
        """Test the vectorised inverse agrees with the scalar one."""
        values = np.arange(1, 7)
        assert f7.inv_array(values).tolist() == [f7.inv(int(x)) for x in values]


class TestMultiPoly:
    def test_monomial_order(self):
        """Test monomials are ordered by degree, then descending lex."""
        assert list(monomials(2, 1)) == [(0, 0), (1, 0), (0, 1)]
        assert list(monomials(2, 2))[3:] == [(2, 0), (1, 1), (0, 2)]

    def test_monomial_count(self):
        """Test the simplex has C(t + d, d) monomials."""
        assert len(list(monomials(4, 3))) == 35

    def test_coefficient_count_checked(self, f7):
        """Test a wrong number of coefficients raises."""
        with pytest.raises(PreconditionError):
            MultiPoly(2, 1, f7, (1, 2))

    def test_from_coeffs_rejects_high_degree(self, f7):
        """Test exponents outside the degree simplex are rejected."""
        with pytest.raises(PreconditionError):
            MultiPoly.from_coeffs(2, 2, f7, {(2, 1): 1})

    def test_constant(self, f7):
        """Test a constant polynomial evaluates to its value everywhere."""
        p = MultiPoly.constant(2, 3, f7, 4)
        assert eval_poly(p, (3, 5)) == 4
        assert eval_poly(p, (0, 0)) == 4

    def test_eval(self, f7):
        """Test evaluation of x^2 + 3xy + 5 at (2, 4) over F_7."""
        p = MultiPoly.from_coeffs(2, 2, f7, {(2, 0): 1, (1, 1): 3, (0, 0): 5})
        assert eval_poly(p, (2, 4)) == (4 + 24 + 5) % 7

    def test_eval_dimension_mismatch(self, f7):
        """Test a point with the wrong number of coordinates raises."""
        p = MultiPoly.constant(2, 1, f7, 1)
        with pytest.raises(PreconditionError):
            eval_poly(p, (1, 2, 3))

    def test_eval_array_matches_scalar(self):
        """Test vectorised evaluation against the scalar evaluator on every point of F_5^2."""
        ctx = PrimeFieldCtx(5)
        p = sample_poly(2, 4, ctx, make_rng(3))
        points = np.array(list(product(range(5), repeat=2)))
        assert eval_poly_array(p, points).tolist() == [eval_poly(p, tuple(x)) for x in points.tolist()]

    def test_eval_array_large_prime(self):
        """Test vectorised evaluation does not overflow near the 32-bit limit."""
        ctx = PrimeFieldCtx(4294967291)
        p = sample_poly(3, 3, ctx, make_rng(11))
        points = make_rng(12).integers(0, ctx.q, size=(20, 3))
        assert eval_poly_array(p, points).tolist() == [eval_poly(p, tuple(x)) for x in points.tolist()]

    def test_sample_is_seeded(self, f7):
        """Test equal seeds give equal polynomials."""
        assert sample_poly(2, 3, f7, make_rng(5)) == sample_poly(2, 3, f7, make_rng(5))


class TestVandermonde:
    def test_solution_satisfies_system(self):
        """Test every non-degenerate system over F_5 against the three equations."""
        ctx = PrimeFieldCtx(5)
        for a, b, c, d in product(range(5), repeat=4):
            if a == c or a == 1 or c == 1:
                continue
            x1, x2, x3 = solve_vandermonde3(a, b, c, d, ctx)
            for x, y in ((a, b), (c, d), (1, (a + c) % 5)):
                assert (x1 + x2 * x + x3 * x * x) % 5 == y

    def test_solution_is_unique(self):
        """Test the solution is the only one, by exhaustive search over F_5^3."""
        ctx = PrimeFieldCtx(5)
        a, b, c, d = 2, 3, 4, 0
        solutions = [
            x
            for x in product(range(5), repeat=3)
            if all((x[0] + x[1] * u + x[2] * u * u) % 5 == y for u, y in ((a, b), (c, d), (1, (a + c) % 5)))
        ]
        assert solutions == [solve_vandermonde3(a, b, c, d, ctx)]

    @pytest.mark.parametrize("a, c", [(2, 2), (1, 3), (3, 1), (6, 1)])
    def test_singular(self, f7, a, c):
        """Test that coinciding nodes raise SingularSystemError."""
        with pytest.raises(SingularSystemError):
            solve_vandermonde3(a, 0, c, 0, f7)

    def test_array_matches_scalar(self, f7):
        """Test the vectorised solver agrees with the scalar one."""
        rows = [(a, b, c, d) for a, b, c, d in product(range(7), repeat=4) if len({a, c, 1}) == 3][:200]
        a, b, c, d = (np.array(col) for col in zip(*rows))
        x1, x2, x3 = solve_vandermonde3_array(a, b, c, d, f7)
        assert list(zip(x1.tolist(), x2.tolist(), x3.tolist())) == [solve_vandermonde3(*row, f7) for row in rows]


class TestFieldInvariants:
    # upper 10^-4 quantiles of chi-square with q - 1 degrees of freedom
    CHI_SQUARE_CRITICAL = {3: 18.42, 5: 23.51, 7: 27.86}

    @pytest.mark.parametrize("q", [3, 5, 7])
    def test_sample_poly_is_uniform(self, q):
        """Test every coefficient position of 10^4 sampled polynomials is uniform over F_q by a chi-square test."""
        ctx = PrimeFieldCtx(q)
        rng = make_rng(q)
        draws = 10_000
        coefficients = np.array([sample_poly(2, 2, ctx, rng).coefficients for _ in range(draws)])
        expected = draws / q
        for column in coefficients.T:
            counts = np.bincount(column, minlength=q)
            assert counts.size == q
            statistic = float(((counts - expected) ** 2 / expected).sum())
            assert statistic < self.CHI_SQUARE_CRITICAL[q]

    @pytest.mark.parametrize("q", [3, 5, 7, 11])
    def test_vandermonde_recovers_coefficients(self, q):
        """Test 1000 random quadratics through the node (1, a + c) are recovered from their values at a and c."""
        ctx = PrimeFieldCtx(q)
        rng = make_rng(100 + q)
        rows, expected = [], []
        while len(rows) < 1000:
            a, c, x2, x3 = (int(x) for x in rng.integers(0, q, size=4))
            if len({a, c, 1}) < 3:
                continue
            x1 = (a + c - x2 - x3) % q
            b = (x1 + x2 * a + x3 * a * a) % q
            d = (x1 + x2 * c + x3 * c * c) % q
            assert solve_vandermonde3(a, b, c, d, ctx) == (x1, x2, x3)
            rows.append((a, b, c, d))
            expected.append((x1, x2, x3))
        a, b, c, d = (np.array(col) for col in zip(*rows))
        x1, x2, x3 = solve_vandermonde3_array(a, b, c, d, ctx)
        assert list(zip(x1.tolist(), x2.tolist(), x3.tolist())) == expected

    def test_eval_matches_monomial_sum(self):
        """Test both evaluators against a direct sum over monomials for random t <= 4 and d <= 6."""
        rng = make_rng(21)
        for _ in range(60):
            q = int(rng.choice([3, 5, 7, 11, 13]))
            t, d = int(rng.integers(1, 5)), int(rng.integers(1, 7))
            ctx = PrimeFieldCtx(q)
            p = sample_poly(t, d, ctx, rng)
            points = rng.integers(0, q, size=(25, t))
            naive = []
            for point in points.tolist():
                total = 0
                for exponent, coefficient in p.coeffs.items():
                    term = coefficient
                    for x, e in zip(point, exponent):
                        term *= x**e
                    total += term
                naive.append(total % q)
            assert [eval_poly(p, tuple(point)) for point in points.tolist()] == naive
            assert eval_poly_array(p, points).tolist() == naive
