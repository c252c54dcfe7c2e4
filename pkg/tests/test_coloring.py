"""
Tests for the magnitude coloring.
"""

import numpy as np
import pytest

from shadowtree.cocycles import default_spec, magnitude
from shadowtree.coloring import magnitude_partition
from shadowtree.groups import enumerate_ball, free_tree, inverse, multiply

TEST_SEED = 0


def _labels(model, partition):
    return [[model.format_key(g.key) for g in c] for c in partition.classes]


class TestMagnitudePartition:
    """Greedy coloring of the conflict graph ||a^-1 b|| < C."""

    def test_small_example(self):
        """At C = 1.5, ab conflicts with a (a^-1 ab = b) but a and b do not conflict."""
        model = free_tree(2)
        elements = [model.element(w) for w in ("ab", "a", "b")]
        partition = magnitude_partition(elements, 1.5, default_spec(model))
        assert _labels(model, partition) == [['a', 'b'], ['ab']]
        assert partition.edge_count == 1
        assert partition.verified
        assert partition.min_within_class == 2.0

    def test_default_conflict_set(self):
        """N counts the identity, b and B: the class bound is 2N - 1 = 5."""
        model = free_tree(2)
        elements = [model.element(w) for w in ("a", "b", "ab")]
        partition = magnitude_partition(elements, 1.5, default_spec(model))
        assert partition.conflict_set_size == 3
        assert partition.class_bound == 5
        assert len(partition) <= partition.class_bound

    def test_reference_conflict_set(self):
        """With a reference ball, N = #{||g|| < C} = 5 on B(1)."""
        model = free_tree(2)
        reference = enumerate_ball(model, 2)
        elements = [model.element(w) for w in ("a", "b", "ab")]
        partition = magnitude_partition(elements, 1.5, default_spec(model), reference=reference)
        assert partition.conflict_set_size == 5

    def test_sphere_classes_are_separated(self):
        model = free_tree(2)
        sphere = enumerate_ball(model, 3).at_depth(3)
        partition = magnitude_partition(sphere, 3.0, default_spec(model))
        assert partition.verified
        assert sum(len(c) for c in partition.classes) == len(sphere)
        assert len(partition) <= partition.class_bound

    def test_duplicates_rejected(self):
        model = free_tree(2)
        with pytest.raises(ValueError):
            magnitude_partition([model.element("a"), model.element("a")], 1.5, default_spec(model))

    def test_threshold_must_be_positive(self):
        model = free_tree(2)
        with pytest.raises(ValueError):
            magnitude_partition([model.element("a")], 0.0, default_spec(model))

    def test_empty_input(self):
        partition = magnitude_partition([], 1.5, default_spec(free_tree(2)))
        assert partition.classes == []
        assert partition.to_dict()['class_count'] == 0

    def test_soundness_on_random_instances(self):
        """10^3 seeded instances: every class keeps ||a^-1 b|| >= C with at most 2N - 1 classes."""
        model = free_tree(2)
        spec = default_spec(model)
        ball = enumerate_ball(model, 3).nontrivial()
        rng = np.random.default_rng(TEST_SEED)
        for _ in range(1000):
            size = int(rng.integers(2, 12))
            picks = rng.choice(len(ball), size=size, replace=False)
            elements = [ball[int(i)] for i in picks]
            threshold = float(rng.uniform(0.5, 6.5))
            partition = magnitude_partition(elements, threshold, spec)
            assert partition.verified
            assert sum(len(c) for c in partition.classes) == size
            assert len(partition) <= partition.class_bound
            for members in partition.classes:
                for a in members:
                    for b in members:
                        if a.key != b.key:
                            assert magnitude(multiply(inverse(a), b), spec) >= threshold
