from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from freeconv.errors import DomainError, ParseError
from freeconv.measures import Atomic, MomentSequence, moments
from freeconv.word_engine import (
    AlternatingCheckReport,
    NonCrossingPartition,
    Word,
    alternating_centered_check,
    alternating_index_words,
    catalan,
    centered_product_moment,
    clear_cache,
    enumerate_nc,
    mixed_moment,
)
from oracles import mixed_moment_bruteforce, nc_partitions

rationals = st.fractions(
    min_value=Fraction(-3), max_value=Fraction(3), max_denominator=12
)


class TestEnumeration:
    @pytest.mark.parametrize("n,count", [(1, 1), (2, 2), (3, 5), (4, 14), (6, 132)])
    def test_counts_match_catalan(self, n, count):
        parts = list(enumerate_nc(n))
        assert len(parts) == count == catalan(n)

    def test_each_produced_once(self):
        parts = [p.blocks for p in enumerate_nc(5)]
        assert len(parts) == len(set(parts)) == catalan(5)

    def test_agrees_with_bruteforce_filter(self):
        ours = {p.blocks for p in enumerate_nc(6)}
        brute = {
            tuple(sorted(tuple(sorted(b)) for b in part))
            for part in nc_partitions(6)
        }
        assert ours == brute

    def test_rejects_out_of_range(self):
        with pytest.raises(DomainError):
            list(enumerate_nc(0))
        with pytest.raises(DomainError):
            list(enumerate_nc(15))

    def test_partition_type_rejects_crossing(self):
        with pytest.raises(DomainError):
            NonCrossingPartition([(1, 3), (2, 4)])
        with pytest.raises(DomainError):
            NonCrossingPartition([(1, 2), (2, 3)])

    def test_block_lookup(self):
        p = NonCrossingPartition([(1, 4), (2, 3)])
        assert p.block_of(3) == (2, 3)
        assert p.n == 4


class TestWord:
    def test_text_round_trip(self):
        w = Word.from_text("T1^2 T2 T1 T3^3")
        assert w.letters == (1, 1, 2, 1, 3, 3, 3)
        assert w.as_text() == "T1^2 T2 T1 T3^3"

    def test_from_exponents(self):
        assert Word.from_exponents([(2, 3)]).letters == (2, 2, 2)

    def test_parse_errors(self):
        for bad in ("", "X2", "T0", "T1^0", "T1 ^2"):
            with pytest.raises(ParseError):
                Word.from_text(bad)

    def test_multiplicity(self):
        w = Word((1, 2, 1, 2))
        assert w.multiplicity(1) == 2
        assert w.variables == (1, 2)


class TestMixedMoment:
    def test_singleton_factorization(self):
        a = MomentSequence([Fraction(2, 3)])
        b = MomentSequence([Fraction(-1, 5)])
        assert mixed_moment((a, b), Word((1, 2))) == Fraction(-2, 15)

    def test_alternating_bernoulli_word(self, bernoulli):
        m = moments(bernoulli, 4)
        assert mixed_moment((m, m), Word((1, 2, 1, 2))) == Fraction(3, 16)

    def test_centered_alternating_vanishes(self):
        centered = MomentSequence([0, 1, 0, 2])
        assert mixed_moment((centered, centered), Word((1, 2, 1, 2))) == 0

    @given(st.lists(rationals, min_size=6, max_size=6))
    @settings(max_examples=25, deadline=None)
    def test_single_variable_recovers_moments(self, ms):
        marginal = MomentSequence(ms)
        for k in range(1, 7):
            assert mixed_moment((marginal,), Word((1,) * k)) == marginal.m(k)

    def test_matches_bruteforce_on_random_words(self):
        rngs = [
            MomentSequence([Fraction(1, 2)] * 6),
            MomentSequence([Fraction(k, 3) for k in (1, 2, 1, 2, 1, 2)]),
            MomentSequence([Fraction(k, 5) for k in (2, 3, -1, 4, 0, 2)]),
        ]
        words = [
            (1, 2, 1, 2),
            (1, 2, 3, 2, 1),
            (2, 2, 1, 3),
            (3, 1, 1, 2, 2, 1),
            (1, 1, 1, 1, 1, 1),
        ]
        for w in words:
            expected = mixed_moment_bruteforce(
                {1: list(rngs[0]), 2: list(rngs[1]), 3: list(rngs[2])}, w
            )
            assert mixed_moment(rngs, Word(w)) == expected

    def test_trace_invariance_under_cyclic_shifts(self, bernoulli, two_point):
        m1 = moments(bernoulli, 6)
        m2 = moments(two_point, 6)
        for length in range(1, 7):
            for word in product((1, 2), repeat=length):
                base = mixed_moment((m1, m2), Word(word))
                for shift in range(1, length):
                    rotated = word[shift:] + word[:shift]
                    assert mixed_moment((m1, m2), Word(rotated)) == base

    def test_order_shortfall_raises(self, bernoulli):
        short = moments(bernoulli, 2)
        with pytest.raises(DomainError):
            mixed_moment((short, short), Word((1, 1, 1)))

    def test_missing_marginal_raises(self, bernoulli):
        with pytest.raises(DomainError):
            mixed_moment((moments(bernoulli, 2),), Word((1, 2)))

    def test_cache_can_be_cleared(self, bernoulli):
        m = moments(bernoulli, 4)
        v1 = mixed_moment((m, m), Word((1, 2, 1, 2)))
        clear_cache()
        assert mixed_moment((m, m), Word((1, 2, 1, 2))) == v1


class TestCenteredProducts:
    def test_expansion_matches_manual(self, bernoulli, two_point):
        # tau((T1 - 1/2)(T2 - 3/2)) = tau(T1 T2) - (1/2)tau(T2)
        #   - (3/2)tau(T1) + 3/4 for these marginals
        m1 = moments(bernoulli, 2)
        m2 = moments(two_point, 2)
        got = centered_product_moment((m1, m2), [(1, 1), (2, 1)])
        manual = (
            mixed_moment((m1, m2), Word((1, 2)))
            - Fraction(1, 2) * Fraction(3, 2)
            - Fraction(3, 2) * Fraction(1, 2)
            + Fraction(1, 2) * Fraction(3, 2)
        )
        assert got == manual == 0

    def test_centered_squares(self, bernoulli):
        m = moments(bernoulli, 4)
        # single centered square: tau(T^2 - m_2) = 0
        assert centered_product_moment((m,), [(1, 2)]) == 0

    def test_rejects_empty(self, bernoulli):
        with pytest.raises(DomainError):
            centered_product_moment((moments(bernoulli, 2),), [])


class TestAlternatingChecks:
    def test_index_word_count(self):
        # n * (n-1)^(length-1) alternating words
        assert len(list(alternating_index_words(3, 4))) == 3 * 2 ** 3

    def test_first_powers_vanish(self, bernoulli, two_point):
        report = alternating_centered_check(
            (moments(bernoulli, 4), moments(two_point, 4)), 4, exponents=(1,)
        )
        assert report.all_zero
        assert len(report.words) == sum(2 * 1 ** (l - 1) for l in range(1, 5))

    def test_centered_squares_vanish(self, bernoulli, two_point):
        report = alternating_centered_check(
            (moments(bernoulli, 8), moments(two_point, 8)), 4, exponents=(2,)
        )
        assert report.all_zero

    def test_three_variables_mixed_exponents(self, bernoulli, two_point):
        third = Atomic([(Fraction(1, 2), Fraction(1, 3)), (2, Fraction(2, 3))])
        marginals = (
            moments(bernoulli, 10),
            moments(two_point, 10),
            moments(third, 10),
        )
        report = alternating_centered_check(marginals, 5, exponents=(1, 2))
        assert report.all_zero
        assert isinstance(report, AlternatingCheckReport)
