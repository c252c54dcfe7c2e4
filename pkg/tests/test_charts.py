"""
Tests for the dashboard figures.
"""

import math

import pandas as pd

from shadowtree.charts import (
    create_arc_chart,
    create_cone_chart,
    create_hull_chart,
    create_profile_chart,
    create_sequence_chart,
    create_w_trace_chart,
)


def _profile(counts, insufficient=False):
    return {'grid': list(range(len(counts))), 'counts': counts, 'window': [1, len(counts) - 1],
            'intercept': 0.0, 'delta_hat': math.log(3), 'insufficient_range': insufficient}


class TestCharts:
    """Trace counts of each figure."""

    def test_profile_with_and_without_fit(self):
        report = {'group_profile': _profile([1, 5, 17, 53]),
                  'semigroup_profile': _profile([1, 2], insufficient=True)}
        fig = create_profile_chart(report)
        assert len(fig.data) == 3
        assert fig.data[0].y[0] == 0.0

    def test_empty_w_trace(self):
        assert len(create_w_trace_chart([]).data) == 0

    def test_w_trace(self):
        trace = [{'annulus': 3, 'best_weight': 0.4, 'threshold': 1.0},
                 {'annulus': 4, 'best_weight': 1.2, 'threshold': 1.0, 'accepted_class': 0}]
        fig = create_w_trace_chart(trace)
        assert len(fig.data) == 2

    def test_hull_fit_line(self):
        fit = {'minima': [[1, 1.0], [2, 3.0]], 'hull': [[1, 1.0], [2, 3.0]], 'status': 'fit', 'C': 2.0, 'c': 1.0}
        fig = create_hull_chart(fit)
        assert len(fig.data) == 3
        assert list(fig.data[2].y) == [1.0, 3.0]

    def test_cone_needs_two_columns(self):
        assert len(create_cone_chart(pd.DataFrame()).data) == 0
        vectors = pd.DataFrame({'k1': [1.0], 'k2': [-1.0], 'margin': [1.414]})
        assert len(create_cone_chart(vectors).data) == 1

    def test_arcs_skip_other_bodies(self):
        shadows = pd.DataFrame({'word': ['a', 'b'], 'body': ['arc', 'cylinder'],
                                'start': [0.0, 1.0], 'span': [0.5, 0.5]})
        assert len(create_arc_chart(shadows).data) == 2

    def test_sequence(self):
        report = {'sequence': [{'delta': 0.3, 'delta_hat': 0.28}, {'delta': 0.6, 'delta_hat': 0.55}],
                  'group_delta_hat': 1.1}
        assert len(create_sequence_chart(report).data) == 1
