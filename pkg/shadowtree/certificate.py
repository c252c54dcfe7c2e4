"""
Certificate module for shadowtree.
Enumerates the |S|-ary product tree of a seed and verifies the nesting,
disjointness, step-magnitude and weighted-sum properties, freeness,
first-letter separation and the E/E' witness annulus, to a finite depth.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from shadowtree.boundary import compactify, dist, point_from_dict, point_to_dict
from shadowtree.cocycles import default_spec, magnitude
from shadowtree.errors import BudgetExceeded, NotGeodesic, ScaleInfeasible
from shadowtree.groups import FUCHSIAN, inverse, multiply
from shadowtree.shadows import conical_trace, disjoint, nested, shadow

logger = logging.getLogger(__name__)

PASS = 'PASS'
FAIL = 'FAIL'

DEFAULT_MAX_NODES = 250000
DISTANCE_NODE_CAP = 2000
FIT_STABILITY = 0.25
WEIGHT_TOLERANCE = 1e-12

# Checks whose conjunction decides PASS
REQUIRED_CHECKS = ('nesting', 'sibling_disjoint', 'step_magnitude', 'weighted_sum',
                   'freeness', 'obs_avoidance', 'definite_distance', 'separation')


@dataclass(frozen=True)
class ConstructionScales:
    """Base points and the scales derived from d = d(y, x)."""

    x: object
    y: object
    epsilon_tilde: float
    t0: float
    s1: float
    s2: float
    epsilon0: float

    @property
    def d(self):
        return dist(self.x, self.y)

    def to_dict(self):
        return {
            'x': point_to_dict(self.x),
            'y': point_to_dict(self.y),
            'd': self.d,
            'epsilon_tilde': self.epsilon_tilde,
            't0': self.t0,
            's1': self.s1,
            's2': self.s2,
            'epsilon0': self.epsilon0,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(x=point_from_dict(data['x']), y=point_from_dict(data['y']),
                   epsilon_tilde=float(data['epsilon_tilde']), t0=float(data['t0']),
                   s1=float(data['s1']), s2=float(data['s2']), epsilon0=float(data['epsilon0']))


@dataclass(frozen=True)
class SemigroupNode:
    """A product s_{i1} ... s_{im} of seed letters."""

    letters: tuple
    element: object

    @property
    def level(self):
        return len(self.letters)


@dataclass
class SemigroupEnumeration:
    seed: list
    depth: int
    nodes: list
    collisions: int = 0
    first_collision: Optional[tuple] = None
    magnitudes: Dict[str, list] = field(default_factory=dict)

    def __len__(self):
        return len(self.nodes)

    def at_level(self, level):
        return [n for n in self.nodes if n.level == level]

    def unique_elements(self):
        seen = set()
        out = []
        for node in self.nodes:
            if node.element.key not in seen:
                seen.add(node.element.key)
                out.append(node.element)
        return out

    def to_frame(self):
        """
        Enumeration dump: one row per node with its magnitudes.

        Returns:
            pandas.DataFrame
        """
        model = self.seed[0].model if self.seed else None
        rows = []
        for i, node in enumerate(self.nodes):
            row = {
                'letters': '.'.join(str(x) for x in node.letters) or 'id',
                'level': node.level,
                'word': model.format_word(node.element.word) if model else 'id',
            }
            for convention, values in self.magnitudes.items():
                row[convention] = values[i]
            rows.append(row)
        return pd.DataFrame(rows)


def tree_size(width, depth):
    """Number of nodes 1 + w + ... + w^depth of the full w-ary tree."""
    if width == 1:
        return depth + 1
    return (width ** (depth + 1) - 1) // (width - 1)


def semigroup_enumerate(seed, depth, specs=None, max_nodes=DEFAULT_MAX_NODES):
    """
    All products of at most ``depth`` seed letters, identity included.

    Nodes are listed level by level, lexicographically by letter tuple.
    Distinct letter tuples with the same canonical key are counted as
    collisions; the first one found is recorded.

    Args:
        seed: nonempty list of GroupElements
        depth: L >= 0
        specs: CocycleSpecs whose magnitudes are attached to every node
        max_nodes: budget on the full tree size

    Returns:
        SemigroupEnumeration
    """
    seed = list(seed)
    if not seed:
        raise ValueError("Seed must be nonempty")
    if depth < 0:
        raise ValueError(f"Depth must be nonnegative, got {depth}")
    size = tree_size(len(seed), depth)
    if max_nodes is not None and size > max_nodes:
        raise BudgetExceeded(f"Product tree of {size} nodes exceeds the budget of {max_nodes}",
                             nodes=size, budget=max_nodes)

    root = SemigroupNode(letters=(), element=seed[0].model.identity())
    nodes = [root]
    owner = {root.element.key: root.letters}
    collisions = 0
    first_collision = None
    frontier = [root]
    for _ in range(depth):
        next_frontier = []
        for parent in frontier:
            for i, s in enumerate(seed):
                child = SemigroupNode(letters=parent.letters + (i,), element=multiply(parent.element, s))
                if child.element.key in owner:
                    collisions += 1
                    if first_collision is None:
                        first_collision = (owner[child.element.key], child.letters)
                else:
                    owner[child.element.key] = child.letters
                nodes.append(child)
                next_frontier.append(child)
        frontier = next_frontier

    magnitudes = {}
    for spec in specs or []:
        magnitudes[spec.convention] = [magnitude(node.element, spec) for node in nodes]
    if collisions:
        logger.info("Semigroup enumeration to depth %d: %d nodes, %d key collisions", depth, len(nodes), collisions)
    return SemigroupEnumeration(seed=seed, depth=depth, nodes=nodes, collisions=collisions,
                                first_collision=first_collision, magnitudes=magnitudes)


@dataclass
class CheckResult:
    """Outcome of one certified property with its counterexample slot."""

    name: str
    passed: bool
    checked: int = 0
    unresolved: int = 0
    counterexample: Optional[list] = None
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            'name': self.name,
            'passed': self.passed,
            'checked': self.checked,
            'unresolved': self.unresolved,
            'counterexample': self.counterexample,
            'detail': self.detail,
        }


@dataclass
class ComparabilityFit:
    """(B, b) with (1/B)|g| - b <= ||g|| <= B|g| + b on the fitted points."""

    B: float
    b: float
    depth: int
    count: int

    def holds(self, length, value, tol=1e-9):
        return length / self.B - self.b - tol <= value <= self.B * length + self.b + tol

    def to_dict(self):
        return {'B': self.B, 'b': self.b, 'depth': self.depth, 'count': self.count}


def fit_comparability(lengths, values, depth=None):
    """
    Fit word-length/magnitude comparability constants.

    B is the larger of the steepest ratio ||g||/|g| and the inverse of the
    shallowest ratio at the deepest level, and at least 1; b is the
    largest remaining violation.

    Args:
        lengths: word lengths |g|_S
        values: magnitudes ||g||
        depth: label for the fit (deepest length when omitted)

    Returns:
        ComparabilityFit
    """
    lengths = np.asarray(lengths, dtype=float)
    values = np.asarray(values, dtype=float)
    positive = lengths >= 1
    if not positive.any():
        return ComparabilityFit(B=1.0, b=float(np.max(np.abs(values))) if len(values) else 0.0,
                                depth=int(depth or 0), count=int(len(values)))
    ratios = values[positive] / lengths[positive]
    deepest = lengths.max()
    at_deepest = values[lengths == deepest] / deepest
    B = max(1.0, float(ratios.max()))
    if at_deepest.min() > 0:
        B = max(B, 1.0 / float(at_deepest.min()))
    upper = values - B * lengths
    lower = lengths / B - values
    b = max(0.0, float(upper.max()), float(lower.max()))
    return ComparabilityFit(B=B, b=b, depth=int(depth if depth is not None else deepest), count=int(len(values)))


@dataclass
class CompositeFit:
    B: float
    b: float
    holds: bool
    worst_violation: float
    pair: tuple

    def to_dict(self):
        return {'B': self.B, 'b': self.b, 'holds': self.holds,
                'worst_violation': self.worst_violation, 'pair': list(self.pair)}


def compose_fits(first, second, values_first, values_second, pair=('phi1', 'phi2')):
    """
    Compare two magnitudes through their word-length fits.

    With B2 = B1 B1', ||g||_1 <= B2 ||g||_2 + B2 b1' + b1 and
    ||g||_1 >= ||g||_2 / B2 - b1' / B2 - b1. The bound is checked on every
    supplied pair of values.

    Returns:
        CompositeFit
    """
    B2 = first.B * second.B
    b2 = max(B2 * second.b + first.b, second.b / B2 + first.b)
    worst = 0.0
    for v1, v2 in zip(values_first, values_second):
        worst = max(worst, v1 - (B2 * v2 + b2), (v2 / B2 - b2) - v1)
    return CompositeFit(B=B2, b=b2, holds=worst <= 1e-9, worst_violation=float(worst), pair=tuple(pair))


def separation_check(enumeration, scales):
    """
    E/E' witness check at the deepest level.

    Depth-L products stay within t0 + eps0 of x, inverses of all nontrivial
    products stay beyond 2 t0, y lies in the open annulus (s1, s2) around x,
    and no product or inverse enters that annulus.
    """
    x, y = scales.x, scales.y
    d = dist(x, y)
    deepest = enumeration.at_level(enumeration.depth)
    near_bound = scales.t0 + scales.epsilon0
    worst_near = 0.0
    offender = None
    annulus_hits = []
    for node in deepest:
        value = dist(compactify(node.element), x)
        worst_near = max(worst_near, value)
        if value > near_bound and offender is None:
            offender = list(node.letters)
        if scales.s1 < value < scales.s2:
            annulus_hits.append(list(node.letters))
    nearest_inverse = math.inf
    for node in enumeration.nodes:
        if node.level == 0:
            continue
        value = dist(compactify(inverse(node.element)), x)
        if value <= 2 * scales.t0 and offender is None:
            offender = list(node.letters)
        nearest_inverse = min(nearest_inverse, value)
        if scales.s1 < value < scales.s2:
            annulus_hits.append(list(node.letters))
    witness = scales.s1 < d < scales.s2
    passed = worst_near <= near_bound and nearest_inverse > 2 * scales.t0 and witness and not annulus_hits
    return CheckResult(name='separation', passed=passed, checked=len(enumeration.nodes),
                       counterexample=offender or (annulus_hits[0] if annulus_hits else None),
                       detail={'max_product_distance': worst_near, 'near_bound': near_bound,
                               'min_inverse_distance': nearest_inverse, 'far_bound': 2 * scales.t0,
                               'witness_distance': d, 'witness_in_annulus': witness,
                               'annulus_hits': len(annulus_hits)})


def _node_shadows(parent, kids, seed, scales, samples):
    """
    Outer S_{t0/2} shadow of a parent and inner S_{t0/4} shadows of its children.

    Fuchsian shadows are pulled back by the parent, so they are arcs seen
    from parent^-1 o; nesting and disjointness survive the pullback and
    deep arcs stay above float resolution.
    """
    if parent.element.model.kind != FUCHSIAN:
        return (shadow(parent.element, scales.t0 / 2, samples),
                [shadow(k.element, scales.t0 / 4, samples) for k in kids])
    base = compactify(inverse(parent.element))
    outer = shadow(parent.element.model.identity(), scales.t0 / 2, base=base)
    return outer, [shadow(seed[k.letters[-1]], scales.t0 / 4, base=base) for k in kids]


def _tree_checks(nodes, children, seed, seed_norm_inverse, scales, delta, spec, samples):
    """Properties (1)-(4) for one chunk of parent nodes."""
    outcome = {
        'nesting': [0, 0, None], 'sibling_disjoint': [0, 0, None],
        'step_magnitude': [0, None, 0.0], 'weighted_sum': [0, None, math.inf],
    }
    for parent in nodes:
        kids = children[parent.letters]
        outer, inner = _node_shadows(parent, kids, seed, scales, samples)
        for kid, s in zip(kids, inner):
            result = nested(s, outer)
            outcome['nesting'][0] += 1
            if result is None:
                outcome['nesting'][1] += 1
            if result is not True and outcome['nesting'][2] is None:
                outcome['nesting'][2] = [list(parent.letters), list(kid.letters)]
        for i in range(len(kids)):
            for j in range(i + 1, len(kids)):
                result = disjoint(inner[i], inner[j])
                outcome['sibling_disjoint'][0] += 1
                if result is None:
                    outcome['sibling_disjoint'][1] += 1
                if result is not True and outcome['sibling_disjoint'][2] is None:
                    outcome['sibling_disjoint'][2] = [list(kids[i].letters), list(kids[j].letters)]

        parent_norm = magnitude(parent.element, spec)
        total = 0.0
        for kid in kids:
            step = magnitude(multiply(inverse(kid.element), parent.element), spec)
            outcome['step_magnitude'][0] += 1
            outcome['step_magnitude'][2] = max(outcome['step_magnitude'][2], step)
            if step > seed_norm_inverse + 1e-9 and outcome['step_magnitude'][1] is None:
                outcome['step_magnitude'][1] = [list(parent.letters), list(kid.letters)]
            total += math.exp(-delta * magnitude(kid.element, spec))
        ratio = total / math.exp(-delta * parent_norm)
        outcome['weighted_sum'][0] += 1
        if ratio < outcome['weighted_sum'][2]:
            outcome['weighted_sum'][2] = ratio
        if ratio < 1.0 - WEIGHT_TOLERANCE and outcome['weighted_sum'][1] is None:
            outcome['weighted_sum'][1] = [list(parent.letters)]
    return outcome


def _merge(outcomes):
    merged = {
        'nesting': [0, 0, None], 'sibling_disjoint': [0, 0, None],
        'step_magnitude': [0, None, 0.0], 'weighted_sum': [0, None, math.inf],
    }
    for part in outcomes:
        for name in ('nesting', 'sibling_disjoint'):
            merged[name][0] += part[name][0]
            merged[name][1] += part[name][1]
            merged[name][2] = merged[name][2] or part[name][2]
        merged['step_magnitude'][0] += part['step_magnitude'][0]
        merged['step_magnitude'][1] = merged['step_magnitude'][1] or part['step_magnitude'][1]
        merged['step_magnitude'][2] = max(merged['step_magnitude'][2], part['step_magnitude'][2])
        merged['weighted_sum'][0] += part['weighted_sum'][0]
        merged['weighted_sum'][1] = merged['weighted_sum'][1] or part['weighted_sum'][1]
        merged['weighted_sum'][2] = min(merged['weighted_sum'][2], part['weighted_sum'][2])
    return merged


def _obs_avoidance(enumeration, scales):
    targets = [compactify(inverse(s)) for s in enumeration.seed]
    closest = math.inf
    offender = None
    checked = 0
    for node in enumeration.nodes:
        if node.level == 0:
            continue
        here = compactify(node.element)
        for i, target in enumerate(targets):
            checked += 1
            value = dist(here, target)
            if value < closest:
                closest = value
            if value < scales.epsilon0 and offender is None:
                offender = [list(node.letters), [i]]
    return CheckResult(name='obs_avoidance', passed=offender is None, checked=checked, counterexample=offender,
                       detail={'min_distance': closest, 'epsilon0': scales.epsilon0})


def _definite_distance(enumeration, cap=DISTANCE_NODE_CAP):
    nodes = [n for n in enumeration.nodes if n.level > 0][:cap]
    points = [compactify(n.element) for n in nodes]
    r = math.inf
    pair = None
    checked = 0
    for i in range(len(nodes)):
        for j in range(i + 1, len(nodes)):
            if nodes[i].letters[0] == nodes[j].letters[0]:
                continue
            checked += 1
            value = dist(points[i], points[j])
            if value < r:
                r = value
                pair = [list(nodes[i].letters), list(nodes[j].letters)]
    if checked == 0:
        return CheckResult(name='definite_distance', passed=False, checked=0,
                           detail={'r': None, 'audited_nodes': len(nodes), 'reason': 'no first-letter-distinct pairs'})
    return CheckResult(name='definite_distance', passed=r > 0, checked=checked,
                       counterexample=pair if r <= 0 else None,
                       detail={'r': r, 'closest_pair': pair, 'audited_nodes': len(nodes)})


def _freeness(enumeration):
    if enumeration.first_collision is None:
        return CheckResult(name='freeness', passed=True, checked=len(enumeration.nodes),
                           detail={'free_depth': enumeration.depth, 'collisions': 0})
    first, second = enumeration.first_collision
    free_depth = max(len(first), len(second)) - 1
    return CheckResult(name='freeness', passed=False, checked=len(enumeration.nodes),
                       counterexample=[list(first), list(second)],
                       detail={'free_depth': free_depth, 'collisions': enumeration.collisions})


def ray_check(seed, scales, depth, count=10, rng=None, samples=None):
    """
    Conical traces along random geodesic rays of the product tree.

    Returns:
        CheckResult; informational, not part of the PASS conjunction
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    failures = []
    for _ in range(count):
        letters = rng.integers(0, len(seed), size=depth).tolist()
        ray = []
        g = seed[0].model.identity()
        for i in letters:
            g = multiply(g, seed[i])
            ray.append(g)
        try:
            conical_trace(ray, scales.t0 / 4, seed=seed, samples=samples)
        except NotGeodesic as exc:
            failures.append({'letters': letters, 'reason': exc.message})
    return CheckResult(name='geodesic_rays', passed=not failures, checked=count,
                       counterexample=failures[0]['letters'] if failures else None,
                       detail={'failures': len(failures)})


@dataclass
class SeedCertificate:
    """Finite-depth verification record of a seed."""

    seed: list
    delta: float
    depth: int
    scales: ConstructionScales
    checks: Dict[str, CheckResult]
    d0: float
    r: Optional[float]
    min_weight_ratio: float
    fits: dict = field(default_factory=dict)
    composite: Optional[CompositeFit] = None
    node_count: int = 0
    convention: str = ''
    refinements: int = 0
    auxiliary: Dict[str, CheckResult] = field(default_factory=dict)

    @property
    def status(self):
        return PASS if all(self.checks[name].passed for name in REQUIRED_CHECKS if name in self.checks) else FAIL

    @property
    def passed(self):
        return self.status == PASS

    @property
    def failed_checks(self):
        return [name for name in REQUIRED_CHECKS if name in self.checks and not self.checks[name].passed]

    @property
    def free_depth(self):
        return self.checks['freeness'].detail.get('free_depth', 0)

    def seed_words(self):
        return [list(s.word) for s in self.seed]

    def to_dict(self):
        model = self.seed[0].model
        return {
            'status': self.status,
            'failed_checks': self.failed_checks,
            'seed_words': self.seed_words(),
            'seed_labels': [model.format_word(s.word) for s in self.seed],
            'seed_size': len(self.seed),
            'delta': self.delta,
            'depth': self.depth,
            'convention': self.convention,
            'scales': self.scales.to_dict(),
            'checks': {name: check.to_dict() for name, check in self.checks.items()},
            'auxiliary': {name: check.to_dict() for name, check in self.auxiliary.items()},
            'constants': {'D0': self.d0, 'r': self.r, 'min_weight_ratio': self.min_weight_ratio},
            'fits': {name: {key: (value.to_dict() if hasattr(value, 'to_dict') else value)
                            for key, value in entry.items()}
                     for name, entry in self.fits.items()},
            'composite_fit': self.composite.to_dict() if self.composite else None,
            'free_depth': self.free_depth,
            'node_count': self.node_count,
            'refinements': self.refinements,
            'metric': model.describe_metric(),
        }


def _fit_entry(enumeration, convention, depth):
    lengths = [n.level for n in enumeration.nodes]
    values = enumeration.magnitudes[convention]
    deep = fit_comparability(lengths, values, depth)
    shallow_idx = [i for i, n in enumerate(lengths) if n <= depth - 2]
    shallow = fit_comparability([lengths[i] for i in shallow_idx], [values[i] for i in shallow_idx], depth - 2)
    stable = (abs(deep.B - shallow.B) <= FIT_STABILITY * max(deep.B, shallow.B)
              and abs(deep.b - shallow.b) <= FIT_STABILITY * max(deep.b, shallow.b, 1.0))
    coverage = sum(1 for n, v in zip(lengths, values) if deep.holds(n, v)) / len(values)
    return {'depth_L': deep, 'depth_L_minus_2': shallow, 'stable': stable, 'coverage': coverage}


def certify(seed, scales, delta, depth, spec=None, specs=None, samples=None, max_nodes=DEFAULT_MAX_NODES,
            workers=1, rays=0, rng=None):
    """
    Verify a seed on its full product tree to depth L.

    Args:
        seed: nonempty list of GroupElements S
        scales: ConstructionScales
        delta: target exponent
        depth: certification depth L >= 2
        spec: CocycleSpec of the magnitude used by the properties
        specs: additional CocycleSpecs fitted for comparability
        samples: CapSamples for the linear model
        max_nodes: budget on the tree size
        workers: threads used for the per-node shadow checks
        rays: number of random geodesic rays traced (0 skips the audit)
        rng: numpy Generator for the ray audit

    Returns:
        SeedCertificate; unresolved sampled predicates count as failures
    """
    seed = list(seed)
    if not seed:
        raise ValueError("Seed must be nonempty")
    if depth < 2:
        raise ValueError(f"Certification depth must be at least 2, got {depth}")
    if scales.t0 <= 0:
        raise ScaleInfeasible("Scales must be positive", t0=scales.t0)
    model = seed[0].model
    spec = spec or default_spec(model)
    all_specs = [spec] + [s for s in (specs or []) if s.convention != spec.convention]

    enumeration = semigroup_enumerate(seed, depth, all_specs, max_nodes=max_nodes)
    children = {}
    for node in enumeration.nodes:
        if node.level > 0:
            children.setdefault(node.letters[:-1], []).append(node)
    parents = [n for n in enumeration.nodes if n.level < depth]
    d0 = max(magnitude(inverse(s), spec) for s in seed)

    if workers > 1 and len(parents) > workers:
        chunks = [parents[i::workers] for i in range(workers)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(
                lambda chunk: _tree_checks(chunk, children, seed, d0, scales, delta, spec, samples), chunks))
    else:
        parts = [_tree_checks(parents, children, seed, d0, scales, delta, spec, samples)]
    merged = _merge(parts)

    checks = {}
    for name in ('nesting', 'sibling_disjoint'):
        checked, unresolved, offender = merged[name]
        checks[name] = CheckResult(name=name, passed=offender is None, checked=checked, unresolved=unresolved,
                                   counterexample=offender,
                                   detail={'conservative': unresolved > 0})
        if unresolved:
            logger.warning("%d unresolved %s predicates counted as failures", unresolved, name)
    checked, offender, largest = merged['step_magnitude']
    checks['step_magnitude'] = CheckResult(name='step_magnitude', passed=offender is None, checked=checked,
                                           counterexample=offender, detail={'max_step': largest, 'D0': d0})
    checked, offender, ratio = merged['weighted_sum']
    checks['weighted_sum'] = CheckResult(name='weighted_sum', passed=offender is None, checked=checked,
                                         counterexample=offender, detail={'min_ratio': ratio})
    checks['freeness'] = _freeness(enumeration)
    checks['obs_avoidance'] = _obs_avoidance(enumeration, scales)
    checks['definite_distance'] = _definite_distance(enumeration)
    checks['separation'] = separation_check(enumeration, scales)

    fits = {s.convention: _fit_entry(enumeration, s.convention, depth) for s in all_specs}
    composite = None
    if len(all_specs) >= 2:
        first, second = all_specs[0].convention, all_specs[1].convention
        composite = compose_fits(fits[first]['depth_L'], fits[second]['depth_L'],
                                 enumeration.magnitudes[first], enumeration.magnitudes[second],
                                 pair=(first, second))

    auxiliary = {}
    if rays:
        auxiliary['geodesic_rays'] = ray_check(seed, scales, depth, count=rays, rng=rng, samples=samples)

    certificate = SeedCertificate(
        seed=seed, delta=float(delta), depth=depth, scales=scales, checks=checks, d0=float(d0),
        r=checks['definite_distance'].detail.get('r'), min_weight_ratio=float(ratio), fits=fits,
        composite=composite, node_count=len(enumeration.nodes), convention=spec.convention, auxiliary=auxiliary,
    )
    logger.info("Certificate for #S=%d at depth %d: %s (%d nodes)", len(seed), depth, certificate.status,
                len(enumeration.nodes))
    if not certificate.passed:
        logger.warning("Failed checks: %s", ', '.join(certificate.failed_checks))
    return certificate


@dataclass
class ReplayResult:
    agrees: bool
    recorded_status: str
    replayed_status: str
    mismatches: List[str]
    certificate: SeedCertificate

    def to_dict(self):
        return {'agrees': self.agrees, 'recorded_status': self.recorded_status,
                'replayed_status': self.replayed_status, 'mismatches': self.mismatches}


def replay_certificate(data, model, spec=None, specs=None, samples=None, max_nodes=DEFAULT_MAX_NODES):
    """
    Re-run every check of a serialized certificate.

    Args:
        data: dict produced by SeedCertificate.to_dict
        model: GroupModel the seed words refer to

    Returns:
        ReplayResult comparing statuses and per-check outcomes
    """
    seed = [model.element(word) for word in data['seed_words']]
    scales = ConstructionScales.from_dict(data['scales'])
    certificate = certify(seed, scales, data['delta'], data['depth'], spec=spec, specs=specs,
                          samples=samples, max_nodes=max_nodes)
    mismatches = []
    for name, recorded in data.get('checks', {}).items():
        replayed = certificate.checks.get(name)
        if replayed is None or replayed.passed != recorded['passed']:
            mismatches.append(name)
    agrees = not mismatches and certificate.status == data['status']
    if not agrees:
        logger.warning("Replay disagrees with the recorded certificate: %s", mismatches or 'status')
    return ReplayResult(agrees=agrees, recorded_status=data['status'], replayed_status=certificate.status,
                        mismatches=mismatches, certificate=certificate)
