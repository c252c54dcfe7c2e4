"""
Exponents module for shadowtree.
Handles counting profiles and slope estimates of the critical exponent,
Poincare partial sums, truncated Patterson-Sullivan measures, and the
growth and gap checks comparing a semigroup with its ambient group.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd
from scipy import stats

from shadowtree.boundary import compactify
from shadowtree.errors import ConventionMismatch, InsufficientRange, SubcriticalExponent
from shadowtree.groups import FUCHSIAN, TREE
from shadowtree.shadows import EMPTY, FULL, contains

logger = logging.getLogger(__name__)

LOW_TRIM = 0.2
HIGH_TRIM = 0.1
MIN_WINDOW_POINTS = 4
BAND_Z = 1.96
GROWTH_CAP = 10.0
GROWTH_STABILITY = 0.5
DEFAULT_GAP_MARGIN = 0.02
DEFAULT_DELTA_TOLERANCE = 0.05


@dataclass
class CountingProfile:
    """n(R) = #{||g|| < R + 1} on a unit grid with a slope estimate.

    ``delta_hat`` is a regression estimate of the growth rate; ``band`` is
    1.96 standard errors of the slope.
    """

    grid: list
    counts: list
    annulus_sizes: list
    delta_hat: float
    intercept: float = 0.0
    band: float = 0.0
    residual: float = 0.0
    window: tuple = (0, 0)
    insufficient_range: bool = False
    convention: str = ''
    depth: Optional[int] = None
    truncated: bool = False
    total: float = 0.0

    def to_frame(self):
        """
        Profile table for CSV export.

        Returns:
            pandas.DataFrame: R, n_R, log_n_R, annulus, in_window
        """
        lo, hi = self.window
        return pd.DataFrame({
            'R': self.grid,
            'n_R': self.counts,
            'log_n_R': [math.log(c) if c > 0 else float('nan') for c in self.counts],
            'annulus': self.annulus_sizes,
            'in_window': [lo <= r <= hi for r in self.grid],
        })

    def to_dict(self):
        return {
            'delta_hat': self.delta_hat,
            'estimate': 'regression',
            'intercept': self.intercept,
            'band': self.band,
            'residual': self.residual,
            'window': list(self.window),
            'insufficient_range': self.insufficient_range,
            'convention': self.convention,
            'depth': self.depth,
            'truncated': self.truncated,
            'total': self.total,
            'grid': self.grid,
            'counts': self.counts,
        }


def fit_window(grid):
    """Grid points kept after trimming the lowest 20% and highest 10% of the range."""
    if not grid:
        return []
    lo, hi = min(grid), max(grid)
    span = hi - lo
    return [r for r in grid if lo + LOW_TRIM * span <= r <= hi - HIGH_TRIM * span]


def slope_fit(grid, counts):
    """
    Regression of log n(R) on R over the trimmed window.

    Returns:
        dict with window, slope, intercept, band, residual; slope is None
        when fewer than 4 window points remain
    """
    kept = set(fit_window(grid))
    window = [r for r, n in zip(grid, counts) if n > 0 and r in kept]
    result = {'window': window, 'slope': None, 'intercept': 0.0, 'band': 0.0, 'residual': 0.0}
    if len(window) < MIN_WINDOW_POINTS:
        return result
    x = np.array(window, dtype=float)
    y = np.log([counts[grid.index(r)] for r in window])
    fit = stats.linregress(x, y)
    predicted = fit.intercept + fit.slope * x
    result.update(slope=float(fit.slope), intercept=float(fit.intercept), band=float(BAND_Z * fit.stderr),
                  residual=float(np.sqrt(np.mean((y - predicted) ** 2))))
    return result


def counting_profile(magnitudes, weights=None, complete_below=None, strict=False, convention='', depth=None,
                     truncated=False):
    """
    Grid counts n(R) and the slope of log n(R) over the trimmed window.

    Args:
        magnitudes: magnitude of every element
        weights: optional multiplicities (defaults to 1 each)
        complete_below: magnitudes below this value are fully enumerated;
            the grid stops at R + 1 <= complete_below
        strict: raise instead of flagging when the window is too short

    Returns:
        CountingProfile

    Raises:
        InsufficientRange: strict and fewer than 4 window points
    """
    values = np.asarray(list(magnitudes), dtype=float)
    if values.size == 0:
        raise InsufficientRange("Counting profile of an empty element set")
    w = np.ones_like(values) if weights is None else np.asarray(list(weights), dtype=float)
    top = math.floor(values.max())
    if complete_below is not None:
        top = min(top, math.floor(complete_below) - 1)
    bottom = math.floor(values.min())
    grid = list(range(bottom, max(top, bottom) + 1))

    bins = np.floor(values).astype(int)
    annulus = [float(w[bins == r].sum()) for r in grid]
    counts = [float(w[values < r + 1].sum()) for r in grid]
    fit = slope_fit(grid, counts)
    window = fit['window']

    profile = CountingProfile(grid=grid, counts=counts, annulus_sizes=annulus, delta_hat=0.0,
                              window=(window[0], window[-1]) if window else (bottom, bottom),
                              convention=convention, depth=depth, truncated=truncated, total=float(w.sum()))
    if fit['slope'] is None:
        if strict:
            raise InsufficientRange(f"Only {len(window)} grid points in the fit window",
                                    points=len(window), grid=grid)
        logger.warning("Counting profile has %d window points; delta_hat set to 0", len(window))
        profile.insufficient_range = True
        return profile

    profile.delta_hat = fit['slope']
    profile.intercept = fit['intercept']
    profile.band = fit['band']
    profile.residual = fit['residual']
    logger.info("delta_hat=%.6g (band %.3g, residual %.3g) over R in [%d, %d]", profile.delta_hat,
                profile.band, profile.residual, window[0], window[-1])
    return profile


def poincare_partial(magnitudes, s, weights=None):
    """Partial Poincare sum: sum of w e^{-s m} over the enumerated set."""
    if s <= 0:
        raise ValueError(f"Exponent s must be positive, got {s}")
    if weights is None:
        return math.fsum(math.exp(-s * m) for m in magnitudes)
    return math.fsum(wt * math.exp(-s * m) for m, wt in zip(magnitudes, weights))


def partial_sums_by_depth(levels, magnitudes, s):
    """
    Q(s) restricted to words of length <= k, for k = 0..max level.

    Increments that stay bounded below are consistent with divergence of
    the series at s; they are never a proof of it.
    """
    levels = np.asarray(levels)
    values = np.asarray(magnitudes, dtype=float)
    return [poincare_partial(values[levels <= k], s) for k in range(int(levels.max()) + 1)]


def annulus_sums(magnitudes, delta):
    """
    Sum of e^{-delta m} per annulus n <= m < n+1, computed two ways.

    Returns:
        pandas.DataFrame: annulus, count, grouped, direct, difference
    """
    values = np.asarray(list(magnitudes), dtype=float)
    frame = pd.DataFrame({'annulus': np.floor(values).astype(int), 'weight': np.exp(-delta * values)})
    grouped = frame.groupby('annulus')['weight'].agg(['count', 'sum'])
    rows = []
    for n, row in grouped.iterrows():
        direct = math.fsum(math.exp(-delta * m) for m in values if n <= m < n + 1)
        rows.append({'annulus': int(n), 'count': int(row['count']), 'grouped': float(row['sum']),
                     'direct': direct, 'difference': abs(float(row['sum']) - direct)})
    return pd.DataFrame(rows, columns=['annulus', 'count', 'grouped', 'direct', 'difference'])


@dataclass
class MeasureTruncation:
    """nu_s supported on the nontrivial enumerated elements, chi = 1."""

    s: float
    elements: list
    magnitudes: np.ndarray
    weights: np.ndarray
    normalizer: float
    delta_hat: float

    def to_frame(self):
        model = self.elements[0].model if self.elements else None
        return pd.DataFrame({
            'word': [model.format_word(g.word) for g in self.elements] if model else [],
            'magnitude': self.magnitudes,
            'weight': self.weights,
        })


def ps_truncation(elements, magnitudes, s, delta_hat):
    """
    Truncated Patterson-Sullivan measure at exponent s.

    Args:
        elements: enumerated semigroup elements (the identity is dropped)
        magnitudes: matching magnitudes
        s: exponent, strictly above delta_hat
        delta_hat: current estimate of the semigroup exponent

    Returns:
        MeasureTruncation with weights summing to 1

    Raises:
        SubcriticalExponent: s <= delta_hat
    """
    if s <= delta_hat:
        raise SubcriticalExponent(f"s = {s:.6g} is not above delta_hat = {delta_hat:.6g}", s=s, delta_hat=delta_hat)
    kept = [(g, m) for g, m in zip(elements, magnitudes) if not g.is_identity]
    if not kept:
        raise SubcriticalExponent("No nontrivial element to carry the measure", s=s)
    support = [g for g, _ in kept]
    values = np.array([m for _, m in kept], dtype=float)
    raw = np.exp(-s * values)
    normalizer = math.fsum(raw.tolist())
    return MeasureTruncation(s=float(s), elements=support, magnitudes=values, weights=raw / normalizer,
                             normalizer=normalizer, delta_hat=float(delta_hat))


def _in_shadow(g, s):
    kind = g.model.kind
    if kind == TREE:
        word = g.value
        return len(word) >= len(s.prefix) and tuple(word[:len(s.prefix)]) == s.prefix
    if kind == FUCHSIAN:
        # disk points count inside the convex hull of the arc
        z = compactify(g).coords
        middle = s.start + s.span / 2.0
        unit = complex(math.cos(middle), math.sin(middle))
        return (z * unit.conjugate()).real >= math.cos(s.span / 2.0)
    return contains(s, compactify(g))


def shadow_measure(truncation, s):
    """nu_s mass of the elements whose compactified points lie in the shadow."""
    if s.body == EMPTY:
        return 0.0
    if s.body == FULL:
        return math.fsum(truncation.weights.tolist())
    return math.fsum(w for g, w in zip(truncation.elements, truncation.weights) if _in_shadow(g, s))


def first_generation_bound(truncation, shadows, delta, norms):
    """
    Smallest C1 with nu_s(S(gamma)) <= C1 e^{-delta ||gamma||} over first-generation shadows.

    Args:
        shadows: shadows S_{t0/2}(gamma) for gamma in the seed
        norms: matching magnitudes ||gamma||
    """
    return max(shadow_measure(truncation, sh) * math.exp(delta * m) for sh, m in zip(shadows, norms))


@dataclass
class GrowthBound:
    C: float
    passed: bool
    cap: float
    second_C: Optional[float] = None
    stable: Optional[bool] = None

    def to_dict(self):
        return {'C': self.C, 'pass': self.passed, 'cap': self.cap, 'second_C': self.second_C, 'stable': self.stable}


def _growth_constant(profile, delta_hat):
    lo, hi = profile.window
    ratios = [math.exp(delta_hat * r) / n for r, n in zip(profile.grid, profile.counts) if lo <= r <= hi and n > 0]
    return max([1.0] + ratios)


def growth_lower_bound_check(profile, delta_hat=None, second=None, cap=GROWTH_CAP):
    """
    Smallest C >= 1 with n(R) >= e^{delta_hat R} / C over the fit window.

    Passes when C is within ``cap`` and, if a second profile from another
    depth is given, the two constants agree within 50%.

    Returns:
        GrowthBound
    """
    delta_hat = profile.delta_hat if delta_hat is None else delta_hat
    C = _growth_constant(profile, delta_hat)
    passed = C <= cap
    second_C, stable = None, None
    if second is not None:
        second_C = _growth_constant(second, delta_hat)
        stable = abs(C - second_C) <= GROWTH_STABILITY * max(C, second_C)
        passed = passed and second_C <= cap and stable
    return GrowthBound(C=float(C), passed=passed, cap=cap, second_C=second_C, stable=stable)


@dataclass
class GapAssertion:
    name: str
    holds: bool
    lhs: float
    rhs: float
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        return {'name': self.name, 'holds': self.holds, 'lhs': self.lhs, 'rhs': self.rhs, 'detail': self.detail}


@dataclass
class GapReport:
    delta: float
    group_delta_hat: float
    semigroup_delta_hat: float
    assertions: list

    @property
    def violations(self):
        return [a.name for a in self.assertions if not a.holds]

    def to_dict(self):
        return {
            'delta': self.delta,
            'group_delta_hat': self.group_delta_hat,
            'semigroup_delta_hat': self.semigroup_delta_hat,
            'assertions': [a.to_dict() for a in self.assertions],
            'violations': self.violations,
        }


def gap_report(group_profile, semigroup_profile, delta, B1=None, seed_size=None,
               tol=DEFAULT_DELTA_TOLERANCE, margin=DEFAULT_GAP_MARGIN):
    """
    Ordered approximation, strict-gap and log-bound assertions.

    The log-bound sandwich (1/B1) log #S <= delta_hat <= B1 log #S is judged
    against the semigroup estimate widened by its band.

    Raises:
        ConventionMismatch: profiles use different magnitude conventions
    """
    if group_profile.convention != semigroup_profile.convention:
        raise ConventionMismatch(f"{group_profile.convention} vs {semigroup_profile.convention}",
                                 group=group_profile.convention, semigroup=semigroup_profile.convention)
    ours = semigroup_profile.delta_hat
    theirs = group_profile.delta_hat
    bands = {'group_band': group_profile.band, 'semigroup_band': semigroup_profile.band}
    assertions = [
        GapAssertion('approximation', delta - tol <= ours, delta - tol, ours, dict(bands, tol=tol)),
        GapAssertion('strict_gap', ours + margin <= theirs, ours + margin, theirs, dict(bands, margin=margin)),
    ]
    if B1 is not None and seed_size:
        log_size = math.log(seed_size)
        lower, upper = log_size / B1, B1 * log_size
        band = semigroup_profile.band
        holds = lower <= ours + band and ours - band <= upper
        assertions.append(GapAssertion('log_bounds', holds, lower, upper,
                                       dict(bands, delta_hat=ours, B1=B1, seed_size=seed_size)))
    report = GapReport(delta=float(delta), group_delta_hat=theirs, semigroup_delta_hat=ours, assertions=assertions)
    if report.violations:
        logger.warning("Gap report violations: %s", ', '.join(report.violations))
    return report


@dataclass
class WordLengthExponent:
    value: float
    counts: list
    exact: bool

    def to_dict(self):
        return {'value': self.value, 'counts': self.counts, 'exact': self.exact}


def word_length_exponent(levels):
    """
    log(c_L / c_{L-1}) from the number of distinct elements per generation.

    ``exact`` records c_k = c_1^k for every k, the free count.
    """
    counts = list(levels)
    if len(counts) < 2 or counts[-2] == 0:
        raise InsufficientRange("Need at least two generations", counts=counts)
    value = math.log(counts[-1] / counts[-2])
    exact = all(c == counts[1] ** k for k, c in enumerate(counts))
    return WordLengthExponent(value=value, counts=counts, exact=exact)
