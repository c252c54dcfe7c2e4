"""
Tests for counting profiles, Poincare sums, the truncated measure and the
gap report.

Reference values come from the free group F_2, whose spheres have
4 * 3^(k-1) elements, and from free semigroups on k letters, whose levels
have k^n elements.
"""

import math

import pytest

from shadowtree.certificate import semigroup_enumerate
from shadowtree.cocycles import default_spec
from shadowtree.errors import ConventionMismatch, InsufficientRange, SubcriticalExponent
from shadowtree.exponents import (
    annulus_sums,
    counting_profile,
    first_generation_bound,
    fit_window,
    gap_report,
    growth_lower_bound_check,
    partial_sums_by_depth,
    poincare_partial,
    ps_truncation,
    shadow_measure,
    word_length_exponent,
)
from shadowtree.groups import free_tree
from shadowtree.shadows import shadow

LOG3 = math.log(3)
CONVENTION = 'busemann-tree'


def _f2_sphere_counts(depth):
    return [1] + [4 * 3 ** (k - 1) for k in range(1, depth + 1)]


def _f2_profile(depth=10):
    return counting_profile(list(range(depth + 1)), weights=_f2_sphere_counts(depth), convention=CONVENTION)


def _free_semigroup(letters, depth):
    model = free_tree(max(2, len(letters)))
    seed = [model.element(w) for w in letters]
    spec = default_spec(model)
    enumeration = semigroup_enumerate(seed, depth, [spec])
    return enumeration, enumeration.magnitudes[spec.convention]


class TestCountingProfile:
    """Slope of log n(R) over the trimmed window."""

    def test_window_trims_ends(self):
        assert fit_window(list(range(11))) == [2, 3, 4, 5, 6, 7, 8, 9]

    def test_free_group_growth(self):
        profile = _f2_profile()
        assert profile.counts[:3] == [1.0, 5.0, 17.0]
        assert profile.window == (2, 9)
        assert profile.delta_hat == pytest.approx(LOG3, abs=0.02)
        assert not profile.insufficient_range

    def test_free_semigroup_growth(self):
        _, magnitudes = _free_semigroup(("a", "b", "c"), 7)
        profile = counting_profile(magnitudes, convention=CONVENTION)
        assert profile.delta_hat == pytest.approx(LOG3, abs=0.02)
        assert profile.total == 3280

    def test_complete_below_cuts_grid(self):
        profile = counting_profile(list(range(11)), weights=_f2_sphere_counts(10), complete_below=6)
        assert profile.grid == [0, 1, 2, 3, 4, 5]

    def test_too_short(self):
        profile = counting_profile([0.0])
        assert profile.insufficient_range
        assert profile.delta_hat == 0.0
        with pytest.raises(InsufficientRange):
            counting_profile([0.0], strict=True)

    def test_empty(self):
        with pytest.raises(InsufficientRange):
            counting_profile([])

    def test_frame(self):
        frame = _f2_profile().to_frame()
        assert list(frame.columns) == ['R', 'n_R', 'log_n_R', 'annulus', 'in_window']
        assert frame['in_window'].sum() == 8


class TestPoincareSums:
    """Partial Poincare series."""

    def test_free_group_closed_form(self):
        """1 + 4 e^-2 / (1 - 3 e^-2) for F_2 at s = 2."""
        expected = 1 + 4 * math.exp(-2) / (1 - 3 * math.exp(-2))
        value = poincare_partial(list(range(16)), 2.0, weights=_f2_sphere_counts(15))
        assert value == pytest.approx(expected, rel=1e-4)
        assert value == pytest.approx(1.91136, abs=1e-4)

    def test_large_exponent_keeps_identity(self):
        value = poincare_partial(list(range(16)), 50.0, weights=_f2_sphere_counts(15))
        assert value == pytest.approx(1.0, abs=1e-12)

    def test_nonpositive_exponent(self):
        with pytest.raises(ValueError):
            poincare_partial([1.0], 0.0)

    def test_sums_by_depth_at_critical_exponent(self):
        """Each level of the free semigroup on two letters adds 2^k e^{-k log 2} = 1."""
        enumeration, magnitudes = _free_semigroup(("a", "b"), 3)
        levels = [n.level for n in enumeration.nodes]
        assert partial_sums_by_depth(levels, magnitudes, math.log(2)) == pytest.approx([1.0, 2.0, 3.0, 4.0])

    def test_annulus_sums_agree(self):
        _, magnitudes = _free_semigroup(("a", "b"), 4)
        frame = annulus_sums(magnitudes, 0.5)
        assert frame['count'].tolist() == [1, 2, 4, 8, 16]
        assert frame['difference'].max() == pytest.approx(0.0, abs=1e-12)


class TestTruncatedMeasure:
    """Normalized Patterson-Sullivan truncation and shadow masses."""

    def test_weights_and_cylinder_mass(self):
        enumeration, magnitudes = _free_semigroup(("a", "b", "c"), 5)
        elements = [n.element for n in enumeration.nodes]
        truncation = ps_truncation(elements, magnitudes, 2.0, LOG3)
        assert truncation.weights.sum() == pytest.approx(1.0)
        assert len(truncation.elements) == len(elements) - 1
        cylinder = shadow(elements[1], 1.0)
        assert shadow_measure(truncation, cylinder) == pytest.approx(1 / 3)

    def test_first_generation_bound(self):
        enumeration, magnitudes = _free_semigroup(("a", "b", "c"), 5)
        elements = [n.element for n in enumeration.nodes]
        truncation = ps_truncation(elements, magnitudes, 2.0, LOG3)
        shadows = [shadow(g, 1.0) for g in elements[1:4]]
        bound = first_generation_bound(truncation, shadows, 0.5, [1.0, 1.0, 1.0])
        assert bound == pytest.approx(math.exp(0.5) / 3)

    def test_dropping_the_deepest_generation_renormalizes(self):
        enumeration, magnitudes = _free_semigroup(("a", "b", "c"), 5)
        nodes = enumeration.nodes
        full = ps_truncation([n.element for n in nodes], magnitudes, 2.0, LOG3)
        kept = [i for i, n in enumerate(nodes) if n.level < 5]
        shallow = ps_truncation([nodes[i].element for i in kept], [magnitudes[i] for i in kept], 2.0, LOG3)
        deepest = math.fsum(w for n, w in zip(nodes[1:], full.weights) if n.level == 5)
        assert shallow.weights.sum() == pytest.approx(1.0)
        assert shallow.weights == pytest.approx(full.weights[:len(shallow.weights)] / (1.0 - deepest))
        assert shadow_measure(shallow, shadow(nodes[1].element, 1.0)) == pytest.approx(1 / 3)

    def test_subcritical_exponent(self):
        enumeration, magnitudes = _free_semigroup(("a", "b", "c"), 3)
        elements = [n.element for n in enumeration.nodes]
        with pytest.raises(SubcriticalExponent):
            ps_truncation(elements, magnitudes, 1.0, LOG3)


class TestGrowthAndGap:
    """Growth lower bound and the approximation/gap assertions."""

    def test_growth_bound_holds(self):
        result = growth_lower_bound_check(_f2_profile())
        assert result.passed
        assert result.C == 1.0

    def test_growth_bound_fails_for_inflated_exponent(self):
        result = growth_lower_bound_check(_f2_profile(), delta_hat=LOG3 + 0.5)
        assert not result.passed
        assert result.C > 10

    def test_growth_bound_stability(self):
        result = growth_lower_bound_check(_f2_profile(10), second=_f2_profile(12))
        assert result.stable

    def test_gap_between_semigroup_and_group(self):
        _, magnitudes = _free_semigroup(("a", "b"), 8)
        semigroup = counting_profile(magnitudes, convention=CONVENTION)
        report = gap_report(_f2_profile(), semigroup, 0.7, B1=1.5, seed_size=2)
        assert report.violations == []
        assert [a.name for a in report.assertions] == ['approximation', 'strict_gap', 'log_bounds']

    def test_no_gap_against_itself(self):
        _, magnitudes = _free_semigroup(("a", "b"), 8)
        semigroup = counting_profile(magnitudes, convention=CONVENTION)
        assert gap_report(semigroup, semigroup, 0.7).violations == ['strict_gap']

    def test_convention_mismatch(self):
        other = counting_profile(list(range(11)), weights=_f2_sphere_counts(10), convention='projective-omega1')
        with pytest.raises(ConventionMismatch):
            gap_report(other, _f2_profile(), 0.7)


class TestWordLengthExponent:
    """Growth of distinct elements per generation."""

    def test_free_counts(self):
        result = word_length_exponent([1, 3, 9, 27])
        assert result.value == pytest.approx(LOG3)
        assert result.exact

    def test_collapsed_counts(self):
        result = word_length_exponent([1, 3, 8])
        assert not result.exact
        assert result.value == pytest.approx(math.log(8 / 3))

    def test_single_generation(self):
        with pytest.raises(InsufficientRange):
            word_length_exponent([1])
