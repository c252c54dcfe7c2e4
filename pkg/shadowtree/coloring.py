"""
Coloring module for shadowtree.
Partitions a finite element set so that ||a^-1 b|| >= C inside every class.
"""

import logging
import math
from dataclasses import dataclass, field

import networkx as nx

from shadowtree.cocycles import magnitude
from shadowtree.groups import inverse, multiply, sort_enumeration_order

logger = logging.getLogger(__name__)


@dataclass
class ColoringPartition:
    """Greedy partition with its soundness audit."""

    threshold: float
    classes: list
    conflict_set_size: int
    edge_count: int = 0
    min_within_class: float = math.inf
    verified: bool = True
    colors: dict = field(default_factory=dict, repr=False)

    @property
    def class_bound(self):
        """Greedy bound 2N - 1 from the conflict degree."""
        return max(2 * self.conflict_set_size - 1, 1)

    def __len__(self):
        return len(self.classes)

    def to_dict(self):
        return {
            'threshold': self.threshold,
            'class_count': len(self.classes),
            'class_sizes': [len(c) for c in self.classes],
            'conflict_set_size': self.conflict_set_size,
            'class_bound': self.class_bound,
            'edge_count': self.edge_count,
            'min_within_class': None if math.isinf(self.min_within_class) else self.min_within_class,
            'verified': self.verified,
        }


def _ordered_strategy(order):
    rank = {node: i for i, node in enumerate(order)}

    def strategy(graph, colors):
        return sorted(graph, key=rank.__getitem__)

    return strategy


def magnitude_partition(elements, threshold, spec, reference=None):
    """
    Greedy coloring of the conflict graph ||a^-1 b|| < C or ||b^-1 a|| < C.

    Args:
        elements: deduplicated GroupElements
        threshold: C > 0
        spec: CocycleSpec giving the magnitude
        reference: optional elements over which N = #{||g|| < C} is counted;
            by default N counts the identity plus every relative position
            a^-1 b between inputs with magnitude below C

    Returns:
        ColoringPartition
    """
    if threshold <= 0:
        raise ValueError(f"Coloring threshold must be positive, got {threshold}")
    order = sort_enumeration_order(elements)
    keys = [g.key for g in order]
    if len(set(keys)) != len(keys):
        raise ValueError("Coloring input contains duplicate elements")
    if not order:
        return ColoringPartition(threshold=threshold, classes=[], conflict_set_size=0)

    graph = nx.Graph()
    graph.add_nodes_from(range(len(order)))
    inverses = [inverse(g) for g in order]
    relative = {}
    small = {order[0].model.identity().key}
    for i in range(len(order)):
        for j in range(i + 1, len(order)):
            forward = multiply(inverses[i], order[j])
            backward = multiply(inverses[j], order[i])
            m_forward = magnitude(forward, spec)
            m_backward = magnitude(backward, spec)
            relative[(i, j)] = min(m_forward, m_backward)
            if m_forward < threshold:
                small.add(forward.key)
            if m_backward < threshold:
                small.add(backward.key)
            if m_forward < threshold or m_backward < threshold:
                graph.add_edge(i, j)

    colors = nx.greedy_color(graph, strategy=_ordered_strategy(list(range(len(order)))))
    classes = [[] for _ in range(max(colors.values()) + 1)]
    for i in range(len(order)):
        classes[colors[i]].append(order[i])

    if reference is not None:
        conflict_size = sum(1 for g in reference if magnitude(g, spec) < threshold)
    else:
        conflict_size = len(small)

    min_within = math.inf
    for (i, j), value in relative.items():
        if colors[i] == colors[j]:
            min_within = min(min_within, value)
    verified = min_within >= threshold
    if not verified:
        logger.warning("Coloring audit failed: within-class magnitude %.6g < %.6g", min_within, threshold)
    logger.info("Colored %d elements into %d classes (C=%.6g, N=%d, %d conflicts)",
                len(order), len(classes), threshold, conflict_size, graph.number_of_edges())
    return ColoringPartition(threshold=float(threshold), classes=classes, conflict_set_size=conflict_size,
                             edge_count=graph.number_of_edges(), min_within_class=min_within,
                             verified=verified, colors={order[i].key: c for i, c in colors.items()})
