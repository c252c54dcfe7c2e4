"""
Anosov module for shadowtree.
Fits the linear root-gap growth of a matrix semigroup, builds theta-cones
from relative positions of orbit points, and measures the coarse triangle
defect of d_phi.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from shadowtree.certificate import fit_comparability
from shadowtree.cocycles import cartan_projection, partial_projection
from shadowtree.errors import ModelMismatch, NoSamples, PhiConeMismatch
from shadowtree.groups import TREE, inverse, multiply

logger = logging.getLogger(__name__)

DEFAULT_SWEEP = (2, 3, 4, 5)
DEFAULT_MAX_PAIRS = 20000
DEFAULT_TRIPLES = 2000
RECHECK_TOL = 1e-9
PHI_POSITIVITY = 1e-9
ZERO_VECTOR = 1e-12


def min_root(kappa, theta):
    """min over alpha in theta of alpha(kappa); theta holds 0-based root indices."""
    values = kappa.simple_roots() if hasattr(kappa, 'simple_roots') else np.diff(-np.asarray(kappa))
    return float(min(values[i] for i in theta))


def lower_hull(points):
    """Lower convex hull of (x, y) points by the monotone chain."""
    pts = sorted(set(points))
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) <= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


@dataclass
class AnosovFit:
    """alpha(kappa(g)) >= C |g|_S - c for alpha in theta, or a no-gap verdict."""

    theta: tuple
    C: float
    c: float
    depth: int
    hull: list
    minima: list
    no_gap: bool = False
    coverage: float = 0.0
    recheck_passed: bool = False

    def to_dict(self):
        return {
            'theta': [i + 1 for i in self.theta],
            'C': self.C,
            'c': self.c,
            'depth': self.depth,
            'hull': [list(p) for p in self.hull],
            'minima': self.minima,
            'status': 'no-gap' if self.no_gap else 'fit',
            'coverage': self.coverage,
            'recheck_passed': self.recheck_passed,
        }

    def hull_frame(self):
        return pd.DataFrame(self.hull, columns=['word_length', 'min_root'])


def _check_matrix_nodes(nodes):
    if nodes and nodes[0].element.model.kind == TREE:
        raise ModelMismatch("Anosov fits need a linear or Fuchsian model")


def anosov_fit(nodes, theta, depth=None):
    """
    Fit (C, c) from the per-length minima m_k of min_{alpha in theta} alpha(kappa).

    C is the slope of the lowest line through the deepest minimum that
    stays below every (k, m_k), i.e. max_{k<L} (m_L - m_k) / (L - k), and
    c = max(0, C L - m_L). A nonpositive C is reported as no-gap.

    Args:
        nodes: SemigroupNodes (letters and element) up to the depth
        theta: 0-based simple-root indices
        depth: L; the deepest level present when omitted

    Returns:
        AnosovFit
    """
    nodes = list(nodes)
    _check_matrix_nodes(nodes)
    theta = tuple(sorted(set(theta)))
    values = [(n.level, min_root(cartan_projection(n.element), theta)) for n in nodes]
    L = depth if depth is not None else max(k for k, _ in values)
    by_length = {}
    for k, m in values:
        if k <= L:
            by_length[k] = min(m, by_length.get(k, math.inf))
    lengths = sorted(by_length)
    minima = [[k, by_length[k]] for k in lengths]
    deepest = by_length[L]
    slopes = [(deepest - by_length[k]) / (L - k) for k in lengths if k < L]
    C = max(slopes) if slopes else 0.0
    hull = lower_hull([(k, by_length[k]) for k in lengths])
    if C <= 0:
        logger.info("Anosov fit: no gap (slope %.6g)", C)
        return AnosovFit(theta=theta, C=float(C), c=0.0, depth=L, hull=hull, minima=minima, no_gap=True)
    c = max(0.0, C * L - deepest)

    covered = sum(1 for k, m in values if k <= L and m >= C * k - c - RECHECK_TOL)
    total = sum(1 for k, _ in values if k <= L)
    coverage = covered / total if total else 0.0
    fit = AnosovFit(theta=theta, C=float(C), c=float(c), depth=L, hull=hull, minima=minima,
                    coverage=coverage, recheck_passed=covered == total)
    if not fit.recheck_passed:
        logger.warning("Anosov recheck covers %.1f%% of words", 100 * coverage)
    logger.info("Anosov fit: C=%.6g c=%.6g at depth %d", fit.C, fit.c, L)
    return fit


def word_distance(first, second):
    """Distance in the free semigroup tree between two letter tuples."""
    common = 0
    for a, b in zip(first, second):
        if a != b:
            break
        common += 1
    return len(first) + len(second) - 2 * common


def _pairs(count, max_pairs, rng):
    if count * (count - 1) <= max_pairs:
        return [(i, j) for i in range(count) for j in range(count) if i != j]
    left = rng.integers(0, count, size=max_pairs)
    right = rng.integers(0, count, size=max_pairs)
    return [(int(i), int(j)) for i, j in zip(left, right) if i != j]


def _key(v):
    return tuple(round(x, 9) for x in v)


@dataclass
class ConeSpec:
    """Stored generating vectors of a theta-cone with its wall margin."""

    theta: tuple
    separation: int
    vectors: list = field(repr=False)
    wall_margin: float
    iota_closed: bool
    midpoint_ok: bool
    pair_count: int
    audit_depth: int

    @property
    def admissible(self):
        return self.iota_closed and self.midpoint_ok and self.wall_margin > 0

    def to_frame(self):
        """Cone vectors for external plotting of root-space projections."""
        if not self.vectors:
            return pd.DataFrame()
        d = len(self.vectors[0])
        frame = pd.DataFrame(self.vectors, columns=[f"k{i + 1}" for i in range(d)])
        frame['margin'] = [_margin(v, self.theta) for v in self.vectors]
        return frame

    def to_dict(self):
        return {
            'theta': [i + 1 for i in self.theta],
            'B': self.separation,
            'b': self.wall_margin,
            'wall_margin': self.wall_margin,
            'iota_closed': self.iota_closed,
            'midpoint_ok': self.midpoint_ok,
            'theta_admissible': self.admissible,
            'vector_count': len(self.vectors),
            'pair_count': self.pair_count,
            'audit_depth': self.audit_depth,
        }


def _margin(v, theta):
    v = np.asarray(v, dtype=float)
    roots = v[:-1] - v[1:]
    return float(min(roots[i] for i in theta) / np.linalg.norm(v))


def cone_build(nodes, theta, separation, max_pairs=DEFAULT_MAX_PAIRS, rng=None, midpoint_samples=2000):
    """
    Collect p_theta(kappa(g1^-1 g2)) over pairs at word distance >= B.

    The vector set is closed under the opposition involution; the wall
    margin b is the smallest min_alpha alpha(v)/|v| over stored vectors.
    Wall separation of the convexified set is checked on pairwise
    midpoints.

    Raises:
        NoSamples: no pair reaches the separation
    """
    nodes = list(nodes)
    _check_matrix_nodes(nodes)
    if separation < 1:
        raise ValueError(f"Separation B must be at least 1, got {separation}")
    theta = tuple(sorted(set(theta)))
    rng = rng if rng is not None else np.random.default_rng(0)
    inverses = [inverse(n.element) for n in nodes]

    stored = {}
    pair_count = 0
    for i, j in _pairs(len(nodes), max_pairs, rng):
        if word_distance(nodes[i].letters, nodes[j].letters) < separation:
            continue
        pair_count += 1
        kappa = partial_projection(cartan_projection(multiply(inverses[i], nodes[j].element)), theta)
        if kappa.norm() < ZERO_VECTOR:
            continue
        for v in (kappa.array(), kappa.iota().array()):
            stored.setdefault(_key(v), v)
    if pair_count == 0:
        raise NoSamples(f"No pair at word distance >= {separation}", separation=separation)
    if not stored:
        raise NoSamples("Every relative position projects to zero", separation=separation)

    vectors = list(stored.values())
    keys = set(stored)
    iota_closed = all(_key(-v[::-1]) in keys for v in vectors)
    wall_margin = min(_margin(v, theta) for v in vectors)

    midpoint_ok = True
    count = len(vectors)
    if count > 1:
        if count * (count - 1) // 2 <= midpoint_samples:
            pairs = [(a, b) for a in range(count) for b in range(a + 1, count)]
        else:
            picks = rng.integers(0, count, size=(midpoint_samples, 2))
            pairs = [(int(a), int(b)) for a, b in picks if a != b]
        for a, b in pairs:
            mid = (vectors[a] / np.linalg.norm(vectors[a]) + vectors[b] / np.linalg.norm(vectors[b])) / 2.0
            if np.linalg.norm(mid) < ZERO_VECTOR or _margin(mid, theta) <= 0:
                midpoint_ok = False
                break
    depth = max(n.level for n in nodes)
    logger.info("Cone at B=%d: %d vectors, wall margin %.6g", separation, len(vectors), wall_margin)
    return ConeSpec(theta=theta, separation=separation, vectors=[v.tolist() for v in vectors],
                    wall_margin=float(wall_margin), iota_closed=iota_closed, midpoint_ok=midpoint_ok,
                    pair_count=pair_count, audit_depth=depth)


@dataclass
class ConeSweep:
    cones: dict
    best: Optional[int]

    def to_dict(self):
        chosen = self.cones.get(self.best) if self.best is not None else None
        return {'best_B': self.best,
                'B': chosen.separation if chosen is not None else None,
                'b': chosen.wall_margin if chosen is not None else None,
                'sweep': {str(B): (cone.to_dict() if cone is not None else None) for B, cone in self.cones.items()}}


def sweep_cone(nodes, theta, separations=DEFAULT_SWEEP, max_pairs=DEFAULT_MAX_PAIRS, rng=None):
    """Build the cone for each B and report the smallest B with a positive margin."""
    cones = {}
    best = None
    for B in separations:
        try:
            cone = cone_build(nodes, theta, B, max_pairs=max_pairs, rng=rng)
        except NoSamples:
            cones[B] = None
            continue
        cones[B] = cone
        if best is None and cone.wall_margin > 0:
            best = B
    return ConeSweep(cones=cones, best=best)


def dphi(first, second, phi):
    """d_phi(g1 o, g2 o) = phi(kappa(g1^-1 g2))."""
    return phi(cartan_projection(multiply(inverse(first), second)))


@dataclass
class DphiReport:
    phi: str
    max_defect: float
    sample_count: int
    Q: float
    q: float
    asymmetry: float
    symmetric_phi: bool
    audit_depth: int

    def to_dict(self):
        return {
            'phi': self.phi,
            'max_defect': self.max_defect,
            'sample_count': self.sample_count,
            'qi_constants': {'Q': self.Q, 'q': self.q},
            'asymmetry': self.asymmetry,
            'symmetric_phi': self.symmetric_phi,
            'audit_depth': self.audit_depth,
        }


def triangle_defect(nodes, phi, cone=None, triples=DEFAULT_TRIPLES, max_pairs=DEFAULT_MAX_PAIRS, rng=None):
    """
    Coarse triangle defect of d_phi over sampled triples of orbit points.

    Args:
        nodes: SemigroupNodes
        phi: LinearFunctional
        cone: ConeSpec whose vectors phi must be positive on
        triples: number of sampled triples (all when fewer exist)

    Returns:
        DphiReport with the max of d(1,3) - d(1,2) - d(2,3), the QI fit of
        word distance against |kappa|, and the largest asymmetry

    Raises:
        PhiConeMismatch: phi(v) < 1e-9 |v| on a stored cone vector
    """
    nodes = list(nodes)
    _check_matrix_nodes(nodes)
    rng = rng if rng is not None else np.random.default_rng(0)
    if cone is not None:
        for v in cone.vectors:
            if phi(v) < PHI_POSITIVITY * np.linalg.norm(v):
                raise PhiConeMismatch(f"{phi.name} is not positive on cone vector {v}", vector=list(v))

    n = len(nodes)
    if n ** 3 <= triples:
        picks = [(a, b, c) for a in range(n) for b in range(n) for c in range(n)]
    else:
        picks = [tuple(int(x) for x in row) for row in rng.integers(0, n, size=(triples, 3))]
    cache = {}

    def distance(a, b):
        if (a, b) not in cache:
            cache[(a, b)] = dphi(nodes[a].element, nodes[b].element, phi)
        return cache[(a, b)]

    defect = -math.inf
    for a, b, c in picks:
        defect = max(defect, distance(a, c) - distance(a, b) - distance(b, c))

    word, size, asymmetry = [], [], 0.0
    for i, j in _pairs(n, max_pairs, rng):
        word.append(word_distance(nodes[i].letters, nodes[j].letters))
        size.append(cartan_projection(multiply(inverse(nodes[i].element), nodes[j].element)).norm())
        asymmetry = max(asymmetry, abs(distance(i, j) - distance(j, i)))
    qi = fit_comparability(word, size)
    symmetric = np.allclose(phi.coeffs, phi.iota().coeffs)
    if symmetric and asymmetry > 1e-8:
        logger.warning("d_phi asymmetry %.3g for an iota-invariant phi", asymmetry)
    return DphiReport(phi=phi.name, max_defect=float(defect), sample_count=len(picks), Q=qi.B, q=qi.b,
                      asymmetry=float(asymmetry), symmetric_phi=bool(symmetric),
                      audit_depth=max(node.level for node in nodes))
