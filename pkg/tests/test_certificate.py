"""
Tests for the semigroup enumeration and the seed certificate.

The certified example lives in F_2 with the base-64 tree metric: x = a^oo,
y = a b^oo at d = 1/64, so t0 = 1/96 and both shadow scales t0/2 and t0/4
cut one letter off a word. The seed {aaab, aabb} is free, its words start
with aa (close to x) and its inverses start with B (far from x).
"""

import math

import numpy as np
import pytest

from shadowtree.boundary import tree_point
from shadowtree.certificate import (
    FAIL,
    PASS,
    REQUIRED_CHECKS,
    compose_fits,
    certify,
    fit_comparability,
    replay_certificate,
    semigroup_enumerate,
    separation_check,
    tree_size,
)
from shadowtree.cocycles import default_spec
from shadowtree.construction import derive_scales
from shadowtree.errors import BudgetExceeded
from shadowtree.groups import free_tree

TEST_SEED = 0
TEST_DELTA = 0.1


def _model():
    return free_tree(2, metric_base=64)


def _end(prefix, fill):
    letters = list(prefix)
    while len(letters) < 48:
        letters.append(fill)
    return tree_point(letters, metric_base=64)


def _scales(x_prefix=(0,), x_fill=0, y_prefix=(0,), y_fill=2):
    return derive_scales(_end(x_prefix, x_fill), _end(y_prefix, y_fill), 0.5)


def _seed(model, words=("aaab", "aabb")):
    return [model.element(w) for w in words]


class TestSemigroupEnumerate:
    """Full product trees of a seed."""

    def test_tree_size(self):
        assert tree_size(3, 4) == 121
        assert tree_size(1, 5) == 6

    def test_node_count_and_order(self):
        model = free_tree(3)
        enumeration = semigroup_enumerate(_seed(model, ("a", "b", "c")), 4)
        assert len(enumeration) == 121
        assert enumeration.nodes[0].letters == ()
        assert enumeration.nodes[1].letters == (0,)
        assert enumeration.nodes[4].letters == (0, 0)
        assert enumeration.collisions == 0

    def test_collision_recorded(self):
        """a . A returns to the identity at level 2."""
        model = free_tree(2)
        enumeration = semigroup_enumerate(_seed(model, ("a", "A")), 2)
        assert enumeration.first_collision == ((), (0, 1))

    def test_budget(self):
        model = free_tree(3)
        with pytest.raises(BudgetExceeded):
            semigroup_enumerate(_seed(model, ("a", "b", "c")), 4, max_nodes=100)

    def test_magnitudes_attached(self):
        model = free_tree(2)
        spec = default_spec(model)
        enumeration = semigroup_enumerate(_seed(model, ("ab",)), 3, [spec])
        assert enumeration.magnitudes[spec.convention] == [0.0, 2.0, 4.0, 6.0]
        frame = enumeration.to_frame()
        assert list(frame.columns) == ['letters', 'level', 'word', spec.convention]

    def test_empty_seed(self):
        with pytest.raises(ValueError):
            semigroup_enumerate([], 2)


class TestComparabilityFits:
    """(B, b) fits between word length and magnitude."""

    def test_linear_values(self):
        fit = fit_comparability([1, 2, 3], [2.0, 4.0, 6.0])
        assert fit.B == pytest.approx(2.0)
        assert fit.b == pytest.approx(0.0)
        assert fit.depth == 3

    def test_offset_values(self):
        fit = fit_comparability([0, 1, 2], [1.0, 1.0, 2.0])
        assert fit.B == pytest.approx(1.0)
        assert fit.b == pytest.approx(1.0)
        assert fit.holds(2, 2.0)

    def test_composition(self):
        first = fit_comparability([1, 2, 3], [2.0, 4.0, 6.0])
        second = fit_comparability([0, 1, 2], [1.0, 1.0, 2.0])
        composite = compose_fits(first, second, [2.0, 4.0], [1.0, 2.0])
        assert composite.B == pytest.approx(2.0)
        assert composite.b == pytest.approx(2.0)
        assert composite.holds


class TestCertify:
    """Finite-depth certificates of the base-64 example."""

    def test_scales(self):
        scales = _scales()
        assert scales.d == pytest.approx(1 / 64)
        assert scales.t0 == pytest.approx(1 / 96)

    def test_passing_seed(self):
        model = _model()
        certificate = certify(_seed(model), _scales(), TEST_DELTA, 3)
        assert certificate.status == PASS
        assert set(REQUIRED_CHECKS) <= set(certificate.checks)
        assert certificate.node_count == 15
        assert certificate.d0 == 4.0
        assert certificate.min_weight_ratio == pytest.approx(2 * math.exp(-4 * TEST_DELTA))
        assert certificate.free_depth == 3
        assert certificate.r > 0

    def test_threads_agree(self):
        model = _model()
        single = certify(_seed(model), _scales(), TEST_DELTA, 3)
        threaded = certify(_seed(model), _scales(), TEST_DELTA, 3, workers=2)
        assert threaded.status == single.status
        assert {k: v.passed for k, v in threaded.checks.items()} == {k: v.passed for k, v in single.checks.items()}
        assert threaded.checks['nesting'].checked == single.checks['nesting'].checked

    def test_geodesic_rays(self):
        model = _model()
        certificate = certify(_seed(model), _scales(), TEST_DELTA, 3, rays=5, rng=np.random.default_rng(TEST_SEED))
        assert certificate.auxiliary['geodesic_rays'].passed

    def test_weighted_sum_fails_for_large_delta(self):
        """2 e^{-4 delta} < 1 once delta > log(2) / 4."""
        model = _model()
        certificate = certify(_seed(model), _scales(), 0.5, 3)
        assert certificate.status == FAIL
        assert certificate.failed_checks == ['weighted_sum']
        assert certificate.checks['weighted_sum'].counterexample == [[]]

    def test_repeated_letter_fails(self):
        """A seed listing one element twice has coinciding sibling shadows."""
        model = _model()
        certificate = certify(_seed(model, ("aaab", "aaab")), _scales(), TEST_DELTA, 2)
        assert 'sibling_disjoint' in certificate.failed_checks
        assert 'freeness' in certificate.failed_checks
        assert certificate.free_depth == 0
        assert certificate.checks['freeness'].counterexample == [[0], [1]]

    def test_separation_fails_far_from_x(self):
        """With x = B^oo the products start far away and the inverses come close."""
        model = _model()
        scales = _scales(x_prefix=(3,), x_fill=3, y_prefix=(3,), y_fill=0)
        certificate = certify(_seed(model), scales, TEST_DELTA, 2)
        assert not certificate.checks['separation'].passed
        assert certificate.checks['separation'].detail['witness_in_annulus']

    def test_separation_check_directly(self):
        model = _model()
        enumeration = semigroup_enumerate(_seed(model), 2)
        result = separation_check(enumeration, _scales())
        assert result.passed
        assert result.detail['min_inverse_distance'] == 1.0

    def test_depth_must_be_two(self):
        with pytest.raises(ValueError):
            certify(_seed(_model()), _scales(), TEST_DELTA, 1)

    def test_replay_agrees(self):
        model = _model()
        certificate = certify(_seed(model), _scales(), TEST_DELTA, 3)
        replay = replay_certificate(certificate.to_dict(), model)
        assert replay.agrees
        assert replay.replayed_status == PASS

    def test_serialized_form(self):
        model = _model()
        data = certify(_seed(model), _scales(), TEST_DELTA, 2).to_dict()
        assert data['seed_labels'] == ['aaab', 'aabb']
        assert data['seed_words'] == [[0, 0, 0, 2], [0, 0, 2, 2]]
        assert data['constants']['D0'] == 4.0
        assert data['fits']['busemann-tree']['depth_L']['B'] == pytest.approx(4.0)
