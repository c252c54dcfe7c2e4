"""
Construction module for shadowtree.
Finds loxodromic adjusters, base points and scales, scans the empirical
constants, and selects a seed from one color class of one magnitude annulus.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from shadowtree.boundary import compactify, dist, loxodromic_data
from shadowtree.certificate import ConstructionScales, certify
from shadowtree.cocycles import (
    DEFAULT_SAFETY, EMPIRICAL, estimate_cocycle_constants, finite_constant, magnitude, sample_pairs,
)
from shadowtree.coloring import magnitude_partition
from shadowtree.errors import (
    AmsSearchFailed, BudgetExceeded, NotLoxodromic, PrecisionExhausted, ScaleInfeasible, SeedNotFound,
)
from shadowtree.groups import inverse, multiply, sort_enumeration_order
from shadowtree.shadows import disjoint, shadow

logger = logging.getLogger(__name__)

DEFAULT_CANDIDATE_DEPTH = 2
DEFAULT_SAMPLE_RADIUS = 4
DEFAULT_SCAN_RADIUS = 4
DEFAULT_MAX_PAIRS = 20000
DEFAULT_MAX_CANDIDATES = 800
PRECERTIFY_DEPTH = 2
TIE_MARGIN = 1e-9


def ams_quality(gamma, f):
    """
    Loxodromic separation of gamma f.

    The minimum of d(h+, h-), d(h, h-), d(h+, h^-1) and d(h, h^-1) for
    h = gamma f; 0 when h is not loxodromic.
    """
    h = multiply(gamma, f)
    try:
        data = loxodromic_data(h)
    except NotLoxodromic:
        return 0.0
    here = compactify(h)
    there = compactify(inverse(h))
    return float(min(dist(data.attracting, data.repelling), dist(here, data.repelling),
                     dist(data.attracting, there), dist(here, there)))


@dataclass
class AdjusterResult:
    """Finite adjuster set F with its empirical separation."""

    adjusters: list
    epsilon_tilde: float
    radius: int
    quality: float
    assignment: dict = field(default_factory=dict, repr=False)
    per_radius: list = field(default_factory=list)
    worst: Optional[object] = None
    sample_count: int = 0
    label: str = EMPIRICAL

    def adjuster_for(self, gamma):
        """Adjuster recorded for gamma, identity if none."""
        return self.assignment.get(gamma.key, self.adjusters[0])

    def to_dict(self):
        model = self.adjusters[0].model
        return {
            'adjusters': [model.format_word(f.word) for f in self.adjusters],
            'epsilon_tilde': self.epsilon_tilde,
            'radius': self.radius,
            'quality': self.quality,
            'per_radius': self.per_radius,
            'worst_sample': model.format_word(self.worst.word) if self.worst is not None else None,
            'sample_count': self.sample_count,
            'label': self.label,
        }


def find_adjusters(ball, candidate_depth=DEFAULT_CANDIDATE_DEPTH, sample_radius=DEFAULT_SAMPLE_RADIUS,
                   samples=None):
    """
    Search the balls F_r (r <= candidate_depth) for loxodromic adjusters.

    For each r, every sampled gamma takes its best f in F_r; the quality
    of F_r is the worst of these. The best radius wins, ties going to the
    smaller one, and eps_tilde is half its quality.

    Args:
        ball: enumerated Ball
        candidate_depth: largest word length of an adjuster
        sample_radius: nontrivial ball elements up to this length are sampled
        samples: explicit sample elements, overriding sample_radius

    Returns:
        AdjusterResult

    Raises:
        AmsSearchFailed: some sample has no loxodromic gamma f for any r
    """
    if samples is None:
        samples = [g for g in ball.nontrivial() if g.word_length <= sample_radius]
    samples = list(samples)
    if not samples:
        raise AmsSearchFailed("No sample elements for the adjuster search", sample_radius=sample_radius)

    best = None
    per_radius = []
    for r in range(candidate_depth + 1):
        finite = [g for g in ball if g.word_length <= r]
        assignment = {}
        quality = math.inf
        worst = None
        for gamma in samples:
            top, chosen = 0.0, None
            for f in finite:
                q = ams_quality(gamma, f)
                if q > top:
                    top, chosen = q, f
            if chosen is not None:
                assignment[gamma.key] = chosen
            if top < quality:
                quality, worst = top, gamma
        per_radius.append({'radius': r, 'size': len(finite), 'quality': quality})
        logger.debug("Adjuster radius %d: |F|=%d, quality %.6g", r, len(finite), quality)
        if best is None or quality > best[1]:
            best = (r, quality, finite, assignment, worst)

    r, quality, finite, assignment, worst = best
    if quality <= 0:
        raise AmsSearchFailed(
            f"No adjuster set up to word length {candidate_depth} makes every sample loxodromic",
            worst=ball.model.format_word(worst.word) if worst is not None else None, per_radius=per_radius)
    logger.info("Adjusters: |F|=%d at radius %d, eps_tilde=%.6g (%s)", len(finite), r, quality / 2, EMPIRICAL)
    return AdjusterResult(adjusters=finite, epsilon_tilde=quality / 2.0, radius=r, quality=quality,
                          assignment=assignment, per_radius=per_radius, worst=worst, sample_count=len(samples))


def choose_base_points(ball, epsilon_tilde, spec):
    """
    Pick x and y among attracting fixed points of enumerated loxodromics.

    x belongs to the loxodromic of largest magnitude (first in BFS order on
    ties); y is the attracting point at the largest distance d from x with
    0 < d < eps_tilde / 4.

    Returns:
        tuple: (x, y, x_source, y_source) where the sources are the elements

    Raises:
        ScaleInfeasible: no admissible y
    """
    fixed = []
    for g in ball.nontrivial():
        try:
            fixed.append((g, loxodromic_data(g).attracting))
        except NotLoxodromic:
            continue
    if not fixed:
        raise ScaleInfeasible("No loxodromic element in the ball")

    top = max(magnitude(g, spec) for g, _ in fixed)
    x_source, x = next((g, p) for g, p in fixed if magnitude(g, spec) == top)
    bound = epsilon_tilde / 4.0
    y_source, y, best = None, None, 0.0
    for g, p in fixed:
        d = dist(p, x)
        if 0 < d < bound and d > best:
            y_source, y, best = g, p, d
    if y is None:
        raise ScaleInfeasible(f"No attracting point within (0, {bound:.6g}) of x",
                              x_source=ball.model.format_word(x_source.word), bound=bound)
    logger.info("Base points: x from %s, y from %s at distance %.6g", x_source.label(), y_source.label(), best)
    return x, y, x_source, y_source


def derive_scales(x, y, epsilon_tilde, epsilon0=None):
    """
    Scales from d = d(y, x): t0 = 2d/3, s1 = 3d/4, s2 = 5d/4, eps0 = d/13.

    Raises:
        ScaleInfeasible: unless 0 < d < eps_tilde / 4, or eps0 >= d/12
    """
    d = dist(x, y)
    if not 0 < d < epsilon_tilde / 4.0:
        raise ScaleInfeasible(f"d(y, x) = {d:.6g} is not in (0, eps_tilde/4 = {epsilon_tilde / 4:.6g})",
                              d=d, epsilon_tilde=epsilon_tilde)
    eps0 = d / 13.0 if epsilon0 is None else float(epsilon0)
    if not 0 < eps0 < d / 12.0:
        raise ScaleInfeasible(f"eps0 = {eps0:.6g} must lie in (0, d/12)", d=d, epsilon0=eps0)
    scales = ConstructionScales(x=x, y=y, epsilon_tilde=float(epsilon_tilde), t0=2.0 * d / 3.0,
                                s1=3.0 * d / 4.0, s2=5.0 * d / 4.0, epsilon0=eps0)
    logger.info("Scales: d=%.6g t0=%.6g s1=%.6g s2=%.6g eps0=%.6g", d, scales.t0, scales.s1, scales.s2, eps0)
    return scales


def validate_scales(scales, rel_tol=1e-12):
    """
    Check the scale invariants numerically.

    Returns:
        tuple: (is_valid, errors)
    """
    errors = []
    d = scales.d
    for name, value, expected in (('t0', scales.t0, 2 * d / 3), ('s1', scales.s1, 3 * d / 4),
                                  ('s2', scales.s2, 5 * d / 4)):
        if not math.isclose(value, expected, rel_tol=rel_tol):
            errors.append(f"{name} = {value:.12g} differs from {expected:.12g}")
    if not 0 < scales.t0 < scales.s1 < d < scales.s2 < 2 * scales.t0:
        errors.append("ordering 0 < t0 < s1 < d < s2 < 2 t0 violated")
    if not scales.t0 < scales.epsilon_tilde / 4:
        errors.append(f"t0 = {scales.t0:.6g} is not below eps_tilde/4 = {scales.epsilon_tilde / 4:.6g}")
    if not 0 < scales.epsilon0 < d / 12:
        errors.append(f"eps0 = {scales.epsilon0:.6g} is not in (0, d/12)")
    return len(errors) == 0, errors


@dataclass
class ShadowConstant:
    value: float
    margin: float
    pairs_checked: int
    intersecting: int
    exhaustive: bool
    unresolved: int = 0
    # (gap, running max of ||alpha^-1 beta||) where the running max grows
    profile: list = field(default_factory=list)

    def for_margin(self, margin):
        """C_shadow restricted to intersecting pairs with magnitude gap at most ``margin``."""
        value = 0.0
        for gap, top in self.profile:
            if gap > margin + 1e-9:
                break
            value = top
        return value

    def to_dict(self):
        return {'value': self.value, 'margin': self.margin, 'pairs_checked': self.pairs_checked,
                'intersecting': self.intersecting, 'exhaustive': self.exhaustive, 'unresolved': self.unresolved,
                'profile': self.profile, 'label': EMPIRICAL}


def shadow_separation_constant(ball, spec, t0, c_finite, scan_radius=DEFAULT_SCAN_RADIUS,
                               max_pairs=DEFAULT_MAX_PAIRS, rng=None, samples=None):
    """
    Empirical C_shadow over pairs whose S_{t0/8} shadows meet.

    Pairs (alpha, beta) of the sub-ball of radius ``scan_radius`` with
    0 <= ||beta|| - ||alpha|| <= 2 C_finite + 1 and non-disjoint shadows
    contribute ||alpha^-1 beta||; unresolved predicates count as meeting.
    The profile records the maximum as a function of the gap.

    Returns:
        ShadowConstant
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    elements = [g for g in ball if g.word_length <= scan_radius]
    norms = [magnitude(g, spec) for g in elements]
    shadows = [shadow(g, t0 / 8.0, samples) for g in elements]
    margin = 2.0 * c_finite + 1.0
    pairs = sample_pairs(len(elements), max_pairs, rng)
    exhaustive = len(elements) ** 2 <= max_pairs
    hits = []
    unresolved = 0
    for i, j in pairs:
        gap = norms[j] - norms[i]
        if gap < 0 or gap > margin:
            continue
        apart = disjoint(shadows[i], shadows[j])
        if apart is True:
            continue
        if apart is None:
            unresolved += 1
        hits.append((gap, magnitude(multiply(inverse(elements[i]), elements[j]), spec)))
    profile = []
    for gap, value in sorted(hits):
        if not profile or value > profile[-1][1]:
            profile.append([float(gap), float(value)])
    value = profile[-1][1] if profile else 0.0
    logger.info("C_shadow=%.6g over %d intersecting pairs (%s)", value, len(hits),
                'exhaustive' if exhaustive else f"{len(pairs)} sampled")
    return ShadowConstant(value=value, margin=margin, pairs_checked=len(pairs), intersecting=len(hits),
                          exhaustive=exhaustive, unresolved=unresolved, profile=profile)


def convergence_depth(ball, x, t0, adjusters, spec):
    """
    Smallest n such that every gamma with ||gamma|| >= n and d(gamma, x) < t0/2
    keeps d(gamma f, x) < t0 for every adjuster f.
    """
    worst = None
    for g in ball.nontrivial():
        if dist(compactify(g), x) >= t0 / 2:
            continue
        for f in adjusters:
            if dist(compactify(multiply(g, f)), x) >= t0:
                m = magnitude(g, spec)
                worst = m if worst is None else max(worst, m)
                break
    depth = 0 if worst is None else int(math.floor(worst)) + 1
    logger.info("Convergence depth N=%d", depth)
    return depth


@dataclass
class ConstructionConstants:
    """Every empirical constant the seed selection consumes."""

    c_triple: float
    c_finite: float
    c_shadow: float
    safety: float
    convergence_depth: int
    delta: float
    cocycle: Optional[object] = None
    shadow_scan: Optional[ShadowConstant] = None
    c_excess: float = 0.0
    finite_by_adjuster: dict = field(default_factory=dict)

    @property
    def coloring_threshold(self):
        return self.safety * (self.c_shadow + 2.0 * self.c_finite)

    @property
    def selection_threshold(self):
        """e^{delta C_finite} / A^delta with A = e^{-C_triple}."""
        return math.exp(self.delta * self.safety * (self.c_finite + self.c_triple))

    def finite_for(self, f):
        """C_finite({f}) for one adjuster, the whole-set value when f was not scanned."""
        return self.finite_by_adjuster.get(f.model.format_word(f.word), self.c_finite)

    def coloring_threshold_for(self, c_finite):
        """safety (C_shadow(2 c + 1) + 2 c) for a group whose adjuster moves magnitudes by at most c."""
        c_shadow = self.shadow_scan.for_margin(2.0 * c_finite + 1.0) if self.shadow_scan else self.c_shadow
        return self.safety * (c_shadow + 2.0 * c_finite)

    def selection_threshold_for(self, c_finite):
        """e^{delta safety (c + C_excess)}: W at or above it keeps the adjusted seed's series divergent."""
        return math.exp(self.delta * self.safety * (c_finite + self.c_excess))

    def to_dict(self):
        return {
            'c_triple': self.c_triple,
            'c_finite': self.c_finite,
            'c_shadow': self.c_shadow,
            'c_excess': self.c_excess,
            'safety': self.safety,
            'coloring_threshold': self.coloring_threshold,
            'selection_threshold': self.selection_threshold,
            'finite_by_adjuster': dict(self.finite_by_adjuster),
            'convergence_depth': self.convergence_depth,
            'cocycle': self.cocycle.to_dict() if self.cocycle is not None else None,
            'shadow_scan': self.shadow_scan.to_dict() if self.shadow_scan is not None else None,
            'label': EMPIRICAL,
        }


def construction_constants(ball, spec, scales, adjusters, delta, safety=DEFAULT_SAFETY,
                           scan_radius=DEFAULT_SCAN_RADIUS, max_pairs=DEFAULT_MAX_PAIRS, rng=None, samples=None):
    """Estimate C_triple(t0), C_excess, C_finite per adjuster, C_shadow and the convergence depth N."""
    rng = rng if rng is not None else np.random.default_rng(0)
    sub_ball = [g for g in ball if g.word_length <= scan_radius]
    cocycle = estimate_cocycle_constants(sub_ball, spec, scales.t0, adjusters=adjusters.adjusters,
                                         safety=safety, max_pairs=max_pairs, rng=rng)
    norms = [magnitude(g, spec) for g in sub_ball]
    per_adjuster = {f.model.format_word(f.word): finite_constant(sub_ball, spec, [f], norms=norms)
                    for f in adjusters.adjusters}
    scan = shadow_separation_constant(ball, spec, scales.t0, cocycle.c_finite, scan_radius=scan_radius,
                                      max_pairs=max_pairs, rng=rng, samples=samples)
    depth = convergence_depth(ball, scales.x, scales.t0, adjusters.adjusters, spec)
    return ConstructionConstants(c_triple=cocycle.c_triple, c_finite=cocycle.c_finite, c_shadow=scan.value,
                                 safety=safety, convergence_depth=depth, delta=float(delta),
                                 cocycle=cocycle, shadow_scan=scan, c_excess=cocycle.c_excess,
                                 finite_by_adjuster=per_adjuster)


@dataclass
class SeedSelection:
    seed: list
    annulus: int
    class_index: int
    adjuster: object
    weight: float
    threshold: float
    refinements: int
    trace: list
    partition: Optional[object] = None
    truncated: list = field(default_factory=list)

    def to_dict(self):
        model = self.seed[0].model
        return {
            'seed': [model.format_word(s.word) for s in self.seed],
            'annulus': self.annulus,
            'class_index': self.class_index,
            'adjuster': model.format_word(self.adjuster.word),
            'weight': self.weight,
            'threshold': self.threshold,
            'refinements': self.refinements,
            'truncated_annuli': self.truncated,
            'trace': self.trace,
            'partition': self.partition.to_dict() if self.partition is not None else None,
        }


def complete_magnitude(ball, spec):
    """Magnitudes below this value are fully enumerated: the minimum at the deepest BFS depth."""
    deepest = max(g.word_length for g in ball)
    return min(magnitude(g, spec) for g in ball.at_depth(deepest))


def thin_candidates(candidates, limit):
    """
    Keep ``limit`` evenly spaced members of an enumeration-ordered list.

    The first and last members are always kept; shorter lists come back whole.
    """
    candidates = list(candidates)
    if limit >= len(candidates):
        return candidates
    if limit < 2:
        raise ValueError(f"Thinning keeps at least two candidates, got {limit}")
    picks = np.unique(np.round(np.linspace(0, len(candidates) - 1, limit)).astype(int))
    return [candidates[int(i)] for i in picks]


def group_by_adjuster(candidates, adjusters):
    """
    Split candidates by the first adjuster in F order that makes them eps_tilde-loxodromic.

    Returns:
        list of (adjuster, members) in F order; unserved candidates are dropped
    """
    groups = {}
    for g in candidates:
        for index, f in enumerate(adjusters.adjusters):
            if ams_quality(g, f) > adjusters.epsilon_tilde:
                groups.setdefault(index, []).append(g)
                break
    return [(adjusters.adjusters[i], groups[i]) for i in sorted(groups)]


def _shares(sizes, limit):
    total = sum(sizes)
    if total <= limit:
        return list(sizes)
    return [min(size, max(2, (limit * size) // total)) for size in sizes]


def select_seed(ball, delta, scales, adjusters, constants, spec, max_candidates=DEFAULT_MAX_CANDIDATES,
                precertify=True, samples=None):
    """
    Scan annuli n <= ||gamma|| < n+1 upward from the convergence depth.

    Candidates are the annulus elements within t0/2 of x. Each goes to the
    first adjuster f in F (identity first) that makes it eps_tilde-loxodromic,
    and each adjuster group is colored with its own threshold
    safety (C_shadow(2 c_f + 1) + 2 c_f), where c_f = C_finite({f}); pairs
    exactly at the threshold conflict. When an annulus holds more than
    ``max_candidates`` served candidates, every group is thinned to its
    proportional share (at least two) of evenly spaced members and the trace
    marks it truncated. W sums e^{-delta ||gamma||} over a class; the first
    class with at least two members, W >= e^{delta safety (c_f + C_excess)}
    and a depth-2 pre-certificate wins.

    Returns:
        SeedSelection

    Raises:
        SeedNotFound: with the W trace, when every complete annulus fails
    """
    model = ball.model
    norms = {g.key: magnitude(g, spec) for g in ball}
    ceiling = complete_magnitude(ball, spec)
    lowest = min(constants.selection_threshold_for(constants.finite_for(f)) for f in adjusters.adjusters)
    trace = []
    truncated = []
    refinements = 0
    n = constants.convergence_depth
    while n + 1 <= ceiling:
        candidates = [g for g in ball.nontrivial()
                      if n <= norms[g.key] < n + 1 and dist(compactify(g), scales.x) < scales.t0 / 2]
        groups = group_by_adjuster(candidates, adjusters) if len(candidates) >= 2 else []
        if not groups:
            trace.append({'annulus': n, 'adjuster': None, 'annulus_candidates': len(candidates),
                          'candidates_total': 0, 'candidates': 0, 'truncated': False, 'classes': 0,
                          'best_weight': 0.0, 'threshold': lowest})
            n += 1
            continue
        shares = _shares([len(members) for _, members in groups], max_candidates)
        for (f, members), share in zip(groups, shares):
            c_f = constants.finite_for(f)
            threshold = constants.selection_threshold_for(c_f)
            row = {'annulus': n, 'adjuster': model.format_word(f.word), 'annulus_candidates': len(candidates),
                   'candidates_total': len(members), 'candidates': min(share, len(members)),
                   'truncated': share < len(members), 'classes': 0, 'best_weight': 0.0, 'threshold': threshold}
            trace.append(row)
            if row['truncated']:
                logger.warning("Annulus %d: thinning %d candidates for adjuster %s to %d", n, len(members),
                               row['adjuster'], share)
                if n not in truncated:
                    truncated.append(n)
                members = thin_candidates(members, share)
            if len(members) < 2:
                continue
            partition = magnitude_partition(members, constants.coloring_threshold_for(c_f) * (1.0 + TIE_MARGIN),
                                            spec)
            row['classes'] = len(partition)
            for index, cls in enumerate(partition.classes):
                if len(cls) < 2:
                    continue
                weight = math.fsum(math.exp(-delta * norms[g.key]) for g in cls)
                row['best_weight'] = max(row['best_weight'], weight)
                if weight < threshold:
                    continue
                seed = [multiply(g, f) for g in sort_enumeration_order(cls)]
                if precertify:
                    try:
                        check = certify(seed, scales, delta, PRECERTIFY_DEPTH, spec=spec, samples=samples)
                    except (BudgetExceeded, PrecisionExhausted) as exc:
                        logger.warning("Pre-certification of class %d in annulus %d aborted: %s", index, n, exc)
                        refinements += 1
                        continue
                    if not check.passed:
                        refinements += 1
                        logger.warning("Class %d in annulus %d fails pre-certification (%s); refining", index, n,
                                       ', '.join(check.failed_checks))
                        continue
                row['accepted_class'] = index
                logger.info("Seed of %d elements from class %d of annulus %d, adjuster %s (W=%.6g >= %.6g)",
                            len(seed), index, n, row['adjuster'], weight, threshold)
                return SeedSelection(seed=seed, annulus=n, class_index=index, adjuster=f, weight=weight,
                                     threshold=threshold, refinements=refinements, trace=trace,
                                     partition=partition, truncated=truncated)
        logger.debug("Annulus %d: best W=%.6g", n, max(row['best_weight'] for row in trace if row['annulus'] == n))
        n += 1

    best = max((t['best_weight'] for t in trace), default=0.0)
    raise SeedNotFound(f"No seed found in annuli below {ceiling:.6g} (best W={best:.6g}, need {lowest:.6g})",
                       trace=trace, best_weight=best, threshold=lowest, refinements=refinements,
                       truncated_annuli=truncated)


@dataclass
class ConstructionResult:
    adjusters: AdjusterResult
    scales: ConstructionScales
    constants: ConstructionConstants
    selection: SeedSelection
    base_sources: tuple = ()

    @property
    def seed(self):
        return self.selection.seed

    def to_dict(self):
        model = self.selection.seed[0].model
        return {
            'adjusters': self.adjusters.to_dict(),
            'scales': self.scales.to_dict(),
            'constants': self.constants.to_dict(),
            'selection': self.selection.to_dict(),
            'base_sources': [model.format_word(g.word) for g in self.base_sources],
        }


def construct_seed(ball, delta, spec, candidate_depth=DEFAULT_CANDIDATE_DEPTH, sample_radius=DEFAULT_SAMPLE_RADIUS,
                   safety=DEFAULT_SAFETY, scan_radius=DEFAULT_SCAN_RADIUS, max_pairs=DEFAULT_MAX_PAIRS,
                   max_candidates=DEFAULT_MAX_CANDIDATES, rng=None, samples=None, progress=None):
    """
    Run adjusters, base points, scales, constants and seed selection in order.

    ``progress``, when given, is a dict updated with the current stage name
    and every finished stage's result, so a caller can report how far a
    failing run got.

    Returns:
        ConstructionResult
    """
    progress = progress if progress is not None else {}
    progress['stage'] = 'find_adjusters'
    adjusters = find_adjusters(ball, candidate_depth, sample_radius)
    progress['adjusters'] = adjusters

    progress['stage'] = 'derive_scales'
    x, y, x_source, y_source = choose_base_points(ball, adjusters.epsilon_tilde, spec)
    scales = derive_scales(x, y, adjusters.epsilon_tilde)
    is_valid, errors = validate_scales(scales)
    if not is_valid:
        raise ScaleInfeasible("Derived scales violate their invariants", errors=errors)
    progress['scales'] = scales

    progress['stage'] = 'estimate_constants'
    constants = construction_constants(ball, spec, scales, adjusters, delta, safety=safety,
                                       scan_radius=scan_radius, max_pairs=max_pairs, rng=rng, samples=samples)
    progress['constants'] = constants

    progress['stage'] = 'select_seed'
    selection = select_seed(ball, delta, scales, adjusters, constants, spec, max_candidates=max_candidates,
                            samples=samples)
    progress['selection'] = selection
    return ConstructionResult(adjusters=adjusters, scales=scales, constants=constants, selection=selection,
                              base_sources=(x_source, y_source))
