"""
Tests for adjusters, base points, scales and the empirical construction constants.
"""

import dataclasses
import math

import numpy as np
import pytest

from shadowtree.boundary import circle_point, dist, tree_point
from shadowtree.certificate import certify
from shadowtree.cocycles import default_spec
from shadowtree.construction import (
    ams_quality,
    choose_base_points,
    complete_magnitude,
    construct_seed,
    convergence_depth,
    derive_scales,
    find_adjusters,
    thin_candidates,
    validate_scales,
)
from shadowtree.errors import AmsSearchFailed, ScaleInfeasible, SeedNotFound
from shadowtree.groups import enumerate_ball, free_tree, fuchsian

TEST_SEED = 0


def _end(prefix, fill, base=64):
    letters = list(prefix)
    while len(letters) < 48:
        letters.append(fill)
    return tree_point(letters, metric_base=base)


class TestAdjusters:
    """Loxodromic adjusters and their separation quality."""

    def test_quality_of_generator(self):
        model = free_tree(2, metric_base=64)
        assert ams_quality(model.element("a"), model.identity()) == 1.0

    def test_quality_of_conjugate(self):
        """abA has its axis through a, so its fixed points are 1/64 apart."""
        model = free_tree(2, metric_base=64)
        assert ams_quality(model.element("abA"), model.identity()) == pytest.approx(1 / 64)

    def test_quality_when_product_is_trivial(self):
        model = free_tree(2, metric_base=64)
        assert ams_quality(model.element("a"), model.element("A")) == 0.0

    def test_radius_one_fixes_conjugates(self):
        model = free_tree(2, metric_base=64)
        result = find_adjusters(enumerate_ball(model, 3), candidate_depth=1)
        assert result.radius == 1
        assert result.quality == 1.0
        assert result.epsilon_tilde == pytest.approx(0.5)
        assert len(result.adjusters) == 5
        assert result.per_radius[0]['quality'] < 1.0
        assert result.to_dict()['label'] == 'EMPIRICAL'

    def test_parabolic_group_fails(self):
        model = fuchsian([[[1, 1], [0, 1]]])
        with pytest.raises(AmsSearchFailed):
            find_adjusters(enumerate_ball(model, 3), candidate_depth=0)


class TestScales:
    """Base points and the scales derived from d(y, x)."""

    def test_base_points_in_base_64_tree(self):
        model = free_tree(2, metric_base=64)
        x, y, x_source, y_source = choose_base_points(enumerate_ball(model, 4), 0.5, default_spec(model))
        assert dist(x, y) == pytest.approx(1 / 64)
        assert x_source.word_length == 4
        assert x.coords[0] == y.coords[0]

    def test_no_admissible_y(self):
        model = free_tree(2, metric_base=64)
        with pytest.raises(ScaleInfeasible):
            choose_base_points(enumerate_ball(model, 4), 1e-30, default_spec(model))

    def test_circle_scales(self):
        """A chord of 0.12 gives t0 = 0.08, s1 = 0.09, s2 = 0.15."""
        x = circle_point(0.0)
        y = circle_point(2.0 * math.asin(0.06))
        scales = derive_scales(x, y, 1.0)
        assert scales.d == pytest.approx(0.12)
        assert scales.t0 == pytest.approx(0.08)
        assert scales.s1 == pytest.approx(0.09)
        assert scales.s2 == pytest.approx(0.15)
        assert scales.epsilon0 == pytest.approx(0.12 / 13)

    def test_tree_scales_need_small_d(self):
        """At base 2 the ends must share four letters to get d = 1/16 < 1/8."""
        scales = derive_scales(_end((0, 0, 0, 0), 0, base=2), _end((0, 0, 0, 0), 2, base=2), 0.5)
        assert scales.d == pytest.approx(1 / 16)
        with pytest.raises(ScaleInfeasible):
            derive_scales(_end((0,), 0, base=2), _end((0,), 2, base=2), 0.5)

    def test_explicit_eps0_bound(self):
        x, y = _end((0,), 0), _end((0,), 2)
        with pytest.raises(ScaleInfeasible):
            derive_scales(x, y, 0.5, epsilon0=1 / 64 / 12)

    def test_validate(self):
        scales = derive_scales(_end((0,), 0), _end((0,), 2), 0.5)
        assert validate_scales(scales) == (True, [])
        broken = dataclasses.replace(scales, t0=scales.t0 * 2)
        is_valid, errors = validate_scales(broken)
        assert not is_valid
        assert any(e.startswith('t0') for e in errors)


class TestConstants:
    """Convergence depth and complete magnitude."""

    def test_convergence_depth(self):
        """aa . A = a leaves the t0 ball around a^oo, so N = ||aa|| + 1."""
        model = free_tree(2, metric_base=64)
        ball = enumerate_ball(model, 3)
        x = _end((0,), 0)
        adjusters = enumerate_ball(model, 1).elements
        assert convergence_depth(ball, x, 1 / 96, adjusters, default_spec(model)) == 3

    def test_complete_magnitude(self):
        model = free_tree(2)
        assert complete_magnitude(enumerate_ball(model, 3), default_spec(model)) == 3.0


class TestConstructSeed:
    """Stage reporting of the full construction."""

    def test_base_two_tree_stops_at_scales(self):
        """Ends from the radius-3 ball share at most two letters with a^oo, too far at base 2."""
        model = free_tree(2)
        progress = {}
        with pytest.raises(ScaleInfeasible):
            construct_seed(enumerate_ball(model, 3), 0.5, default_spec(model), candidate_depth=1,
                           progress=progress)
        assert progress['stage'] == 'derive_scales'
        assert progress['adjusters'].epsilon_tilde == pytest.approx(0.5)


class TestSelectSeed:
    """Seeds of F_2 at base 64, where x = a^oo, t0 = 1/96 and N = 3.

    The identity serves the candidates aa..x with x != A. Words of one
    annulus conflict only when they share all but their last letter, so
    class 0 holds one word per prefix: 3^(n-3) words of length n.
    """

    @pytest.fixture(scope='class')
    def ball(self):
        return enumerate_ball(free_tree(2, metric_base=64), 7)

    def _construct(self, ball, delta, **kwargs):
        model = ball.model
        return construct_seed(ball, delta, default_spec(model), candidate_depth=1, safety=1.0, max_pairs=30000,
                              rng=np.random.default_rng(TEST_SEED), **kwargs)

    @pytest.fixture(scope='class')
    def result(self, ball):
        return self._construct(ball, 0.2217)

    def test_three_words_in_one_class(self, ball, result):
        model = ball.model
        selection = result.selection
        assert [model.format_word(s.word) for s in result.seed] == ['aaaa', 'aaba', 'aaBa']
        assert selection.annulus == 4
        assert selection.class_index == 0
        assert selection.adjuster.is_identity
        assert selection.threshold == pytest.approx(1.0)
        assert selection.weight == pytest.approx(3 * math.exp(-4 * 0.2217))
        assert selection.truncated == []

    def test_identity_group_constants(self, result):
        constants = result.constants
        assert constants.c_excess == 0.0
        assert constants.finite_by_adjuster['id'] == 0.0
        assert constants.finite_by_adjuster['a'] == 1.0
        assert constants.shadow_scan.for_margin(1.0) == 3.0
        assert constants.coloring_threshold_for(0.0) == pytest.approx(3.0)
        assert constants.selection_threshold_for(1.0) == pytest.approx(math.exp(0.2217))

    def test_trace_records_failed_annuli(self, result):
        trace = result.selection.trace
        assert all(row['best_weight'] < row['threshold'] for row in trace[:-1])
        assert trace[-1]['annulus'] == 4
        assert trace[-1]['adjuster'] == 'id'
        assert trace[-1]['accepted_class'] == 0

    def test_seed_certifies_at_depth_eight(self, result):
        certificate = certify(result.seed, result.scales, 0.2217, 8, rays=5, rng=np.random.default_rng(TEST_SEED))
        assert certificate.status == 'PASS'

    def test_larger_target_takes_a_longer_annulus(self, ball):
        result = self._construct(ball, 0.35)
        assert result.selection.annulus == 5
        assert len(result.seed) == 9
        assert all(len(s.word) == 5 for s in result.seed)
        assert result.selection.weight == pytest.approx(9 * math.exp(-5 * 0.35))

    def test_group_exponent_target_is_out_of_reach(self):
        """Disjoint sibling shadows force a prefix code, so W >= 1 needs delta <= (n - 3) log 3 / n."""
        ball = enumerate_ball(free_tree(2, metric_base=64), 8)
        with pytest.raises(SeedNotFound) as info:
            self._construct(ball, 0.9)
        details = info.value.details
        assert details['best_weight'] < details['threshold']
        assert details['trace']
        assert all(row['best_weight'] < row['threshold'] for row in details['trace'])

    def test_candidate_cap_thins_evenly(self, ball):
        result = self._construct(ball, 0.2, max_candidates=4)
        model = ball.model
        selection = result.selection
        assert selection.truncated == [4]
        row = next(r for r in selection.trace if r['annulus'] == 4 and r['adjuster'] == 'id')
        assert row['annulus_candidates'] == 9
        assert row['candidates_total'] == 7
        assert row['candidates'] == 3
        assert row['truncated']
        assert [model.format_word(s.word) for s in result.seed] == ['aaaa', 'aaba', 'aaBB']
        assert selection.to_dict()['truncated_annuli'] == [4]


class TestThinning:
    def test_evenly_spaced(self):
        assert thin_candidates(range(10), 4) == [0, 3, 6, 9]

    def test_short_lists_untouched(self):
        assert thin_candidates([1, 2], 5) == [1, 2]

    def test_limit_of_one_rejected(self):
        with pytest.raises(ValueError):
            thin_candidates(range(5), 1)
