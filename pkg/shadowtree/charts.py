"""
Charts module for shadowtree.
Creates the Plotly figures shown by the dashboard from emitted reports.
"""

import math

import numpy as np
import pandas as pd
import plotly.graph_objects as go

PRIMARY = "#6d3a46"
ACCENT = "#C9A227"
MUTED = "#8a8a8a"


def _layout(fig, title, x_title, y_title):
    fig.update_layout(
        title=dict(text=title, font=dict(size=18, color=PRIMARY, family='Arial, sans-serif'), x=0.5,
                   xanchor='center'),
        xaxis_title=x_title,
        yaxis_title=y_title,
        template='plotly_white',
        legend=dict(orientation="h", yanchor="bottom", y=1.02, xanchor="right", x=1),
        height=420,
    )
    return fig


def create_profile_chart(report, title="log n(R) against R"):
    """
    Counting profiles of the group and the semigroup with their fitted lines.

    Args:
        report: report dict as loaded from JSON

    Returns:
        plotly.graph_objects.Figure
    """
    fig = go.Figure()
    styles = {'group_profile': (PRIMARY, 'group'), 'semigroup_profile': (ACCENT, 'semigroup')}
    for key, (color, label) in styles.items():
        profile = report.get(key)
        if not profile:
            continue
        grid = profile['grid']
        logs = [math.log(n) if n > 0 else None for n in profile['counts']]
        fig.add_trace(go.Scatter(x=grid, y=logs, mode='markers', name=f"{label} log n(R)",
                                 marker=dict(color=color, size=8)))
        if not profile.get('insufficient_range'):
            lo, hi = profile['window']
            xs = np.array([lo, hi], dtype=float)
            fig.add_trace(go.Scatter(x=xs, y=profile['intercept'] + profile['delta_hat'] * xs, mode='lines',
                                     name=f"{label} slope {profile['delta_hat']:.4f}",
                                     line=dict(color=color, dash='dash')))
    return _layout(fig, title, "R", "log n(R)")


def create_w_trace_chart(trace, title="Seed selection by annulus"):
    """
    Best class weight W per scanned annulus against the selection threshold.

    Args:
        trace: list of dicts with annulus, best_weight, threshold
    """
    frame = pd.DataFrame(trace)
    fig = go.Figure()
    if frame.empty:
        return _layout(fig, title, "annulus n", "W")
    colors = [ACCENT if 'accepted_class' in row and not pd.isna(row['accepted_class']) else PRIMARY
              for _, row in frame.iterrows()]
    fig.add_trace(go.Bar(x=frame['annulus'], y=frame['best_weight'], marker=dict(color=colors), name='best W'))
    fig.add_trace(go.Scatter(x=frame['annulus'], y=frame['threshold'], mode='lines', name='threshold',
                             line=dict(color=MUTED, dash='dot')))
    return _layout(fig, title, "annulus n", "W")


def create_hull_chart(fit, title="Root gap against word length"):
    """
    Per-length minima of the root gap, their lower hull and the fitted line C k - c.

    Args:
        fit: the report's anosov_fit dict
    """
    fig = go.Figure()
    minima = np.array(fit['minima'], dtype=float)
    hull = np.array(fit['hull'], dtype=float)
    fig.add_trace(go.Scatter(x=minima[:, 0], y=minima[:, 1], mode='markers', name='minimum',
                             marker=dict(color=PRIMARY, size=8)))
    fig.add_trace(go.Scatter(x=hull[:, 0], y=hull[:, 1], mode='lines', name='lower hull',
                             line=dict(color=MUTED)))
    if fit.get('status') == 'fit':
        ks = minima[:, 0]
        fig.add_trace(go.Scatter(x=ks, y=fit['C'] * ks - fit['c'], mode='lines',
                                 name=f"C={fit['C']:.4f}, c={fit['c']:.4f}", line=dict(color=ACCENT, dash='dash')))
    return _layout(fig, title, "word length", "min root")


def create_cone_chart(vectors, title="Cone vectors"):
    """
    Stored cone vectors by their first two simple roots.

    Args:
        vectors: DataFrame with columns k1..kd and margin (the cone CSV)
    """
    fig = go.Figure()
    columns = [c for c in vectors.columns if c.startswith('k')]
    if len(columns) < 2:
        return _layout(fig, title, "alpha1", "alpha2")
    values = vectors[columns].to_numpy(dtype=float)
    roots = values[:, :-1] - values[:, 1:]
    y = roots[:, 1] if roots.shape[1] > 1 else np.zeros(len(roots))
    fig.add_trace(go.Scatter(x=roots[:, 0], y=y, mode='markers', name='vector',
                             marker=dict(color=vectors['margin'], colorscale='Burg', showscale=True,
                                         colorbar=dict(title='margin'))))
    return _layout(fig, title, "alpha1", "alpha2")


def create_arc_chart(shadows, title="Shadows on the circle"):
    """
    Arc shadows of a Fuchsian run drawn on the unit circle.

    Args:
        shadows: DataFrame from the shadows CSV (word, body, start, span)
    """
    fig = go.Figure()
    theta = np.linspace(0, 2 * math.pi, 361)
    fig.add_trace(go.Scatter(x=np.cos(theta), y=np.sin(theta), mode='lines', name='circle',
                             line=dict(color=MUTED, width=1)))
    arcs = shadows[shadows['body'] == 'arc'] if 'body' in shadows else shadows.iloc[0:0]
    for i, (_, row) in enumerate(arcs.iterrows()):
        angles = np.linspace(row['start'], row['start'] + row['span'], 100)
        radius = 1.0 + 0.04 * (i + 1)
        fig.add_trace(go.Scatter(x=radius * np.cos(angles), y=radius * np.sin(angles), mode='lines',
                                 name=str(row['word']), line=dict(width=4)))
    fig.update_yaxes(scaleanchor='x', scaleratio=1)
    return _layout(fig, title, "", "")


def create_sequence_chart(report, title="Semigroup estimates against targets"):
    """
    delta_hat of each sequence run against its target, with the group estimate.

    Args:
        report: sequence report dict
    """
    rows = pd.DataFrame(report['sequence'])
    fig = go.Figure()
    fig.add_trace(go.Scatter(x=rows['delta'], y=rows['delta_hat'], mode='lines+markers', name='semigroup',
                             line=dict(color=PRIMARY)))
    fig.add_hline(y=report['group_delta_hat'], line=dict(color=ACCENT, dash='dash'),
                  annotation_text='group')
    return _layout(fig, title, "target delta", "delta_hat")
