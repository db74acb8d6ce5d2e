import json
import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import quad

from freeconv.errors import DomainError, ParseError
from freeconv.measures import (
    Atomic,
    DensityGrid,
    MomentSequence,
    Semicircle,
    absolute_moment,
    as_fraction,
    hankel_psd,
    in_m_plus,
    is_positive_supported,
    krein_k,
    krein_k_exact,
    measure_from_json,
    measure_to_json,
    moments,
    psi,
    psi_exact,
)


def semicircle_density_moment(center, radius, k):
    """Quadrature of the semicircle density, the independent moment oracle."""
    def f(x):
        return (
            2.0 / (math.pi * radius ** 2)
            * math.sqrt(max(radius ** 2 - (x - center) ** 2, 0.0))
            * x ** k
        )
    val, err = quad(f, center - radius, center + radius, limit=200)
    return val, err


class TestConstruction:
    def test_atomic_weights_must_sum_to_one(self):
        with pytest.raises(DomainError):
            Atomic([(0, Fraction(1, 2)), (1, Fraction(1, 3))])

    def test_atomic_negative_weight_rejected(self):
        with pytest.raises(DomainError):
            Atomic([(0, Fraction(3, 2)), (1, Fraction(-1, 2))])

    def test_atomic_duplicate_locations_rejected(self):
        with pytest.raises(DomainError):
            Atomic([(1, "1/2"), (1, "1/2")])

    def test_atomic_accepts_string_rationals(self):
        mu = Atomic([("0", "1/2"), ("1", "1/2")])
        assert mu.weight_at(1) == Fraction(1, 2)

    def test_semicircle_radius_positive(self):
        with pytest.raises(DomainError):
            Semicircle(0, 0)

    def test_grid_needs_two_nodes(self):
        with pytest.raises(DomainError):
            DensityGrid([1.0], [1.0])

    def test_grid_must_be_normalized(self):
        with pytest.raises(DomainError):
            DensityGrid([0.0, 1.0], [2.0, 2.0])
        grid = DensityGrid.normalized([0.0, 1.0], [2.0, 2.0])
        assert abs(np.trapezoid(grid.f, grid.x) - 1.0) < 1e-14

    def test_grid_must_ascend(self):
        with pytest.raises(DomainError):
            DensityGrid([1.0, 0.0], [1.0, 1.0])

    def test_support_flags(self, bernoulli, rademacher):
        assert is_positive_supported(bernoulli)
        assert in_m_plus(bernoulli)
        assert not is_positive_supported(rademacher)
        assert not in_m_plus(Atomic([(0, 1)]))
        assert in_m_plus(Semicircle(3, 2))
        assert not is_positive_supported(Semicircle(0, 2))


class TestMoments:
    def test_point_mass_powers(self, delta_one):
        assert list(moments(delta_one, 4)) == [1, 1, 1, 1]

    def test_bernoulli_projection(self, bernoulli):
        assert list(moments(bernoulli, 3)) == [Fraction(1, 2)] * 3

    def test_standard_semicircle_catalan(self, standard_semicircle):
        # density quadrature and Catalan counts agree on [0,1,0,2,0,5]
        seq = moments(standard_semicircle, 6)
        assert list(seq) == [0, 1, 0, 2, 0, 5]
        for k in range(1, 7):
            val, _ = semicircle_density_moment(0.0, 2.0, k)
            assert abs(float(seq.m(k)) - val) < 1e-7

    def test_semicircle_quadrature_high_order(self, standard_semicircle):
        seq = moments(standard_semicircle, 10)
        for k in range(1, 11):
            val, _ = semicircle_density_moment(0.0, 2.0, k)
            assert abs(float(seq.m(k)) - val) < 1e-9 * max(1.0, abs(val))

    def test_shifted_semicircle_binomial_expansion(self):
        mu = Semicircle(Fraction(3), Fraction(1, 2))
        seq = moments(mu, 6)
        for k in range(1, 7):
            val, err = semicircle_density_moment(3.0, 0.5, k)
            assert abs(float(seq.m(k)) - val) < 1e-7 * max(1.0, abs(val))

    def test_grid_moments_match_atomic_limit(self):
        xs = np.linspace(0.0, 4.0, 4001)
        fs = np.where(np.abs(xs - 2.0) <= 1.0, 0.5, 0.0)
        grid = DensityGrid.normalized(xs, fs)
        seq = moments(grid, 3)
        # uniform on [1, 3]: m_1 = 2, m_2 = 13/3, m_3 = 10
        assert abs(float(seq.m(1)) - 2.0) < 1e-3
        assert abs(float(seq.m(2)) - 13.0 / 3.0) < 1e-2
        assert abs(float(seq.m(3)) - 10.0) < 3e-2

    def test_order_must_be_positive(self, bernoulli):
        with pytest.raises(DomainError):
            moments(bernoulli, 0)

    def test_absolute_moment_symmetric_atoms(self, rademacher):
        assert absolute_moment(rademacher, 3) == 1

    def test_moment_sequence_accessors(self):
        seq = MomentSequence(["1/2", "1/3"])
        assert seq.m(0) == 1
        assert seq.m(2) == Fraction(1, 3)
        with pytest.raises(DomainError):
            seq.m(3)
        assert seq.truncate(1).order == 1

    def test_hankel_psd_detects_impossible_sequence(self):
        ok = MomentSequence([Fraction(1, 2), Fraction(1, 2)])
        bad = MomentSequence([0, -1])  # variance would be negative
        assert hankel_psd(ok)
        assert not hankel_psd(bad)


class TestPsi:
    def test_point_mass_closed_form(self):
        rng = np.random.default_rng(3)
        c = 1.7
        mu = Atomic([(Fraction(17, 10), 1)])
        for _ in range(20):
            z = complex(rng.normal(), abs(rng.normal()) + 0.1)
            expected = z * c / (1 - z * c)
            assert abs(psi(mu, z) - expected) < 1e-12 * abs(expected)

    def test_delta_one_at_minus_one(self, delta_one):
        assert abs(psi(delta_one, -1 + 0j) - (-0.5)) < 1e-15

    def test_bernoulli_negative_axis_closed_form(self, bernoulli):
        for x in (0.1, 0.5, 1.0, 3.0):
            expected = -x / (2.0 * (1.0 + x))
            assert abs(psi(bernoulli, complex(-x)) - expected) < 1e-14
            assert psi_exact(bernoulli, Fraction(-x).limit_denominator(10)) is not None

    def test_exact_matches_float(self, bernoulli):
        x = Fraction(-3, 7)
        assert abs(float(psi_exact(bernoulli, x)) - psi(bernoulli, complex(x)).real) < 1e-15

    def test_grid_psi_matches_atomic_refinement(self):
        # narrow bump around 1 approximates a point mass at 1
        xs = np.linspace(0.9, 1.1, 2001)
        fs = np.ones_like(xs)
        grid = DensityGrid.normalized(xs, fs)
        z = complex(-0.7, 0.0)
        expected = z * 1.0 / (1 - z * 1.0)
        assert abs(psi(grid, z) - expected) < 5e-3

    def test_conjugate_symmetry(self, bernoulli, two_point):
        rng = np.random.default_rng(11)
        for mu in (bernoulli, two_point):
            for _ in range(100):
                z = complex(rng.normal(scale=2.0), abs(rng.normal(scale=2.0)) + 1e-3)
                assert abs(psi(mu, z.conjugate()) - psi(mu, z).conjugate()) < 1e-12

    def test_rejects_positive_axis(self, bernoulli):
        with pytest.raises(DomainError):
            psi(bernoulli, 0.5 + 0j)
        with pytest.raises(DomainError):
            psi(bernoulli, 0j)

    def test_rejects_unsupported_measures(self, rademacher, standard_semicircle):
        with pytest.raises(DomainError):
            psi(rademacher, -1 + 0j)
        with pytest.raises(DomainError):
            psi(standard_semicircle, -1 + 0j)


class TestKrein:
    def test_point_mass_is_linear(self):
        mu = Atomic([(Fraction(5, 2), 1)])
        for z in (-0.3 + 0j, 0.2 + 0.7j, -2 + 0j):
            assert abs(krein_k(mu, z) - 2.5 * z) < 1e-12

    def test_delta_one_half_point(self, delta_one):
        assert abs(krein_k(delta_one, -0.5 + 0j) - (-0.5)) < 1e-15

    def test_bernoulli_value(self, bernoulli):
        assert krein_k_exact(bernoulli, Fraction(-1)) == Fraction(-1, 3)
        assert abs(krein_k(bernoulli, -1 + 0j) - (-1 / 3)) < 1e-14

    def test_negative_axis_profile(self, bernoulli, two_point, delta_one):
        # psi in (-1, 0], K <= psi <= 0, K strictly decreasing on a log grid
        for mu in (bernoulli, two_point, delta_one):
            xs = np.logspace(-3, 1, 40)
            psis = [psi(mu, complex(-x)).real for x in xs]
            values = [krein_k(mu, complex(-x)).real for x in xs]
            assert all(-1 < p <= 0 for p in psis)
            assert all(k <= p <= 0 for k, p in zip(values, psis))
            assert all(b < a for a, b in zip(values, values[1:]))

    def test_vanishes_at_zero_minus(self, two_point):
        assert abs(krein_k(two_point, complex(-1e-12)).real) < 1e-11

    def test_pole_detection(self):
        # psi of delta_1 at z -> +inf on the real line tends to -1
        mu = Atomic([(1, 1)])
        with pytest.raises(DomainError):
            krein_k(mu, complex(1e14, 1e-20))


class TestJson:
    def test_atomic_round_trip(self, bernoulli):
        text = measure_to_json(bernoulli)
        back = measure_from_json(text)
        assert back == bernoulli

    def test_schema_example(self):
        mu = measure_from_json('{"kind":"atomic","atoms":[["0","1/2"],["1","1/2"]]}')
        assert mu.weight_at(0) == Fraction(1, 2)

    def test_semicircle_round_trip(self, standard_semicircle):
        back = measure_from_json(measure_to_json(standard_semicircle))
        assert float(back.radius) == 2.0

    def test_grid_round_trip(self):
        grid = DensityGrid.normalized([0.0, 1.0, 2.0], [0.0, 1.0, 0.0])
        back = measure_from_json(measure_to_json(grid))
        assert np.allclose(back.x, grid.x)

    def test_bad_json_raises_parse_error(self):
        with pytest.raises(ParseError):
            measure_from_json("{not json")
        with pytest.raises(ParseError):
            measure_from_json('{"kind": "mystery"}')
        with pytest.raises(ParseError):
            measure_from_json('{"atoms": []}')

    def test_invalid_values_raise_domain_error(self):
        with pytest.raises(DomainError):
            measure_from_json('{"kind":"atomic","atoms":[["0","1/3"]]}')

    def test_as_fraction_rejects_garbage(self):
        with pytest.raises(ParseError):
            as_fraction("one half")
        assert as_fraction(0.5) == Fraction(1, 2)
