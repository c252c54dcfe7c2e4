"""
Tests for shadows in the three models and the conical-limit trace.
"""

import math

import numpy as np
import pytest

from shadowtree.boundary import act, circle_point, compactify, projective_point, sample_boundary, tree_point
from shadowtree.cocycles import default_spec
from shadowtree.errors import ModelMismatch, NotGeodesic
from shadowtree.groups import SEMIGROUP_MODE, free_tree, fuchsian, inverse, linear, multiply
from shadowtree.shadows import (
    ARC,
    CAP,
    CYLINDER,
    EMPTY,
    FULL,
    conical_trace,
    contains,
    diameter,
    disjoint,
    nested,
    sample_shadow,
    shadow,
    shadow_magnitude_audit,
    shadows_frame,
)

TEST_SEED = 0

# Source arc half-width acos(0.3) for gamma^-1 . 0 at distance 0.6 from the centre and eps = 1
HALF_TAN = math.sqrt(0.7 / 1.3)
ARC_SPAN = 4.0 * math.atan(1.0 / (4.0 * HALF_TAN))


def _tree():
    return free_tree(2)


def _dilation():
    return fuchsian([[[2, 0], [0, "1/2"]]]).generator(0)


class TestTreeShadows:
    """Shadows in the tree are cylinders."""

    def test_unit_scale_is_word_cylinder(self):
        """S_1(ab) is the cylinder of ab with diameter 1/4."""
        s = shadow(_tree().element("ab"), 1.0)
        assert s.body == CYLINDER
        assert s.prefix == (0, 2)
        assert diameter(s) == pytest.approx(0.25)

    def test_smaller_scale_drops_letters(self):
        model = _tree()
        assert shadow(model.element("ab"), 0.5).prefix == (0,)
        assert shadow(model.element("ab"), 0.25).body == FULL

    def test_scale_above_diameter_is_empty(self):
        assert shadow(_tree().element("ab"), 1.5).body == EMPTY

    def test_nonpositive_scale(self):
        with pytest.raises(ValueError):
            shadow(_tree().element("a"), 0.0)

    def test_set_predicates(self):
        model = _tree()
        parent = shadow(model.element("ab"), 1.0)
        child = shadow(model.element("abb"), 1.0)
        sibling = shadow(model.element("aB"), 1.0)
        assert nested(child, parent)
        assert not nested(parent, child)
        assert disjoint(parent, sibling)
        assert not disjoint(parent, child)

    def test_contains(self):
        s = shadow(_tree().element("ab"), 1.0)
        assert contains(s, tree_point((0, 2, 2, 2)))
        assert not contains(s, tree_point((0, 3, 3, 3)))

    def test_samples_stay_inside(self):
        s = shadow(_tree().element("ab"), 1.0)
        points = sample_shadow(s, 10, np.random.default_rng(TEST_SEED), depth=8)
        assert len(points) == 10
        assert all(contains(s, p) for p in points)

    def test_shadow_magnitude_is_exact_in_the_tree(self):
        """sigma(gamma, gamma^-1 x) equals |gamma| on the cylinder."""
        model = _tree()
        gamma = model.element("ab")
        points = sample_shadow(shadow(gamma, 1.0), 20, np.random.default_rng(TEST_SEED))
        assert shadow_magnitude_audit(gamma, 1.0, default_spec(model), points) == 0.0

    def test_mixed_models(self):
        with pytest.raises(ModelMismatch):
            nested(shadow(_tree().element("a"), 1.0), shadow(_dilation(), 1.0))


class TestFuchsianShadows:
    """Shadows on the circle are arcs around the attracting point."""

    def test_dilation_arc(self):
        s = shadow(_dilation(), 1.0)
        assert s.body == ARC
        assert s.span == pytest.approx(ARC_SPAN, rel=1e-9)
        assert s.wrap
        assert contains(s, circle_point(0.0))
        assert not contains(s, circle_point(math.pi))
        assert diameter(s) == pytest.approx(2.0 * math.sin(ARC_SPAN / 2.0), rel=1e-9)

    def test_identity_is_full(self):
        model = fuchsian([[[2, 0], [0, "1/2"]]])
        assert shadow(model.identity(), 1.0).body == FULL
        assert shadow(model.identity(), 2.5).body == EMPTY

    def test_higher_power_is_nested(self):
        model = fuchsian([[[2, 0], [0, "1/2"]]])
        first = shadow(model.element([0]), 1.0)
        second = shadow(model.element([0, 0]), 1.0)
        assert second.span < first.span
        assert nested(second, first)

    def test_shadow_pulled_back_by_a_prefix(self):
        """S(g h) = g S(h; g^-1 o) and S(g) = g S(id; g^-1 o) pointwise on sampled circle points."""
        model = fuchsian([[[2, 0], [0, "1/2"]], [[2, 1], [1, 1]]])
        g, h = model.element([1, 0]), model.element([0])
        base = compactify(inverse(g))
        points = sample_boundary(model, 500, np.random.default_rng(TEST_SEED))
        for whole, pulled in ((shadow(multiply(g, h), 0.3), shadow(h, 0.3, base=base)),
                              (shadow(g, 0.3), shadow(model.identity(), 0.3, base=base))):
            assert pulled.body == ARC
            assert all(contains(whole, act(g, p)) == contains(pulled, p) for p in points)

    def test_moved_base_needs_the_disk(self):
        with pytest.raises(ModelMismatch):
            shadow(_tree().element("a"), 0.5, base=circle_point(0.0))


class TestCapShadows:
    """Linear shadows are sampled caps around the attracting direction."""

    def test_diagonal_cap(self):
        g = linear([[[4, 0], [0, "1/4"]]], mode=SEMIGROUP_MODE).generator(0)
        s = shadow(g, 0.5)
        assert s.body == CAP
        assert contains(s, projective_point((1.0, 0.0)))
        assert not contains(s, projective_point((0.0, 1.0)))
        assert diameter(s) < 0.5

    def test_identity_cap_is_full(self):
        model = linear([[[4, 0], [0, "1/4"]]], mode=SEMIGROUP_MODE)
        assert shadow(model.identity(), 0.5).body == FULL


class TestConicalTrace:
    """Nested shadows along a ray shrink to a witness point."""

    def test_tree_ray(self):
        model = _tree()
        ray = [model.element(w) for w in ("a", "ab", "abb")]
        witness = conical_trace(ray, 1.0)
        assert witness.diameters == pytest.approx([0.5, 0.25, 0.125])
        assert witness.point.coords[:3] == (0, 2, 2)
        assert witness.to_dict()['sequence'] == ['a', 'ab', 'abb']

    def test_ray_checked_against_seed(self):
        model = _tree()
        seed = [model.element("ab")]
        ray = [model.element(w) for w in ("ab", "abab", "ababab")]
        assert conical_trace(ray, 1.0, seed=seed).point.coords[:6] == (0, 2, 0, 2, 0, 2)

    def test_backtracking_ray(self):
        model = _tree()
        with pytest.raises(NotGeodesic):
            conical_trace([model.element("ab"), model.element("a")], 1.0)

    def test_identity_ray(self):
        with pytest.raises(NotGeodesic):
            conical_trace([_tree().identity()], 1.0)

    def test_frame(self):
        model = _tree()
        frame = shadows_frame([shadow(model.element("ab"), 1.0), shadow(_dilation(), 1.0)])
        assert frame['body'].tolist() == [CYLINDER, ARC]
        assert frame.loc[0, 'prefix'] == 'ab'
