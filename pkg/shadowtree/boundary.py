"""
Boundary module for shadowtree.
Handles the compactification of each model, its compatible metric, the
boundary action, loxodromic fixed points and boundary sampling.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from shadowtree.errors import ModelMismatch, NotLoxodromic, LinearAlgebraFailure
from shadowtree.groups import TREE, FUCHSIAN, LINEAR, free_reduce, inverse

logger = logging.getLogger(__name__)

INTERIOR = 'interior'
BOUNDARY = 'boundary'

TWO_PI = 2.0 * math.pi

# Default truncation depth for tree ends
END_DEPTH = 48

_CAYLEY = np.array([[1.0, -1.0j], [1.0, 1.0j]])
_CAYLEY_INV = np.array([[0.5, 0.5], [0.5j, -0.5j]])


@dataclass(frozen=True)
class CompactifiedPoint:
    """A point of the compactification of one model.

    coords holds a tuple of letters (tree: reduced word or truncated end),
    a complex number in the closed unit disk (fuchsian), or a unit vector
    tuple normalized up to sign (linear).
    """

    kind: str
    tag: str
    coords: object
    dual: Optional[tuple] = None
    metric_base: int = 2

    @property
    def is_boundary(self):
        return self.tag == BOUNDARY

    @property
    def depth(self):
        """Truncation depth of a tree end."""
        return len(self.coords) if self.kind == TREE else None

    @property
    def angle(self):
        """Angle in [0, 2*pi) of a Fuchsian point."""
        return math.atan2(self.coords.imag, self.coords.real) % TWO_PI

    def vector(self):
        return np.array(self.coords, dtype=float)


@dataclass(frozen=True)
class LoxodromicData:
    attracting: CompactifiedPoint
    repelling: CompactifiedPoint


def disk_matrix(g):
    """Conjugate a real 2x2 matrix to the SU(1,1) action on the unit disk."""
    return _CAYLEY @ np.array(g, dtype=float) @ _CAYLEY_INV


def mobius(matrix, z):
    """Apply a complex 2x2 matrix as a Mobius map to z."""
    return (matrix[0, 0] * z + matrix[0, 1]) / (matrix[1, 0] * z + matrix[1, 1])


def normalize_direction(v):
    """Unit vector with the sign fixed by its largest-magnitude entry."""
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if not np.isfinite(norm) or norm == 0:
        raise LinearAlgebraFailure("Cannot normalize a zero or non-finite direction")
    v = v / norm
    pivot = int(np.argmax(np.abs(v)))
    if v[pivot] < 0:
        v = -v
    return v


def tree_point(letters, tag=BOUNDARY, metric_base=2):
    return CompactifiedPoint(kind=TREE, tag=tag, coords=tuple(letters), metric_base=metric_base)


def circle_point(angle):
    return CompactifiedPoint(kind=FUCHSIAN, tag=BOUNDARY, coords=complex(math.cos(angle), math.sin(angle)))


def disk_point(z, tag=INTERIOR):
    return CompactifiedPoint(kind=FUCHSIAN, tag=tag, coords=complex(z))


def projective_point(v, dual=None, tag=BOUNDARY):
    vec = tuple(normalize_direction(v).tolist())
    dual_vec = tuple(normalize_direction(dual).tolist()) if dual is not None else None
    return CompactifiedPoint(kind=LINEAR, tag=tag, coords=vec, dual=dual_vec)


def top_direction(g):
    """Left singular direction of the largest singular value."""
    u, _, _ = np.linalg.svd(np.array(g, dtype=float))
    return normalize_direction(u[:, 0])


def compactify(g):
    """
    Embed an element into the compactification of its model.

    Tree elements map to their reduced word; Fuchsian elements to
    Cayley(g.i) in the open disk. Linear elements have no compactified
    metric and are represented by their top singular direction.
    """
    model = g.model
    if model.kind == TREE:
        return tree_point(g.value, tag=INTERIOR, metric_base=model.metric_base)
    if model.kind == FUCHSIAN:
        m = disk_matrix(g.value)
        return disk_point(m[0, 1] / m[1, 1])
    return projective_point(top_direction(g.value), tag=INTERIOR)


def common_prefix_length(u, v):
    n = 0
    for a, b in zip(u, v):
        if a != b:
            break
        n += 1
    return n


def dist(p, q):
    """
    Compatible metric between two points of the same model.

    Tree: b^(-cpl), 0 for equal points. Fuchsian: Euclidean distance in
    the closed disk. Linear: sine of the principal angle between directions.
    """
    if p.kind != q.kind:
        raise ModelMismatch(f"Cannot measure distance between {p.kind} and {q.kind} points")
    if p.kind == TREE:
        if p.coords == q.coords and p.tag == q.tag:
            return 0.0
        return float(p.metric_base) ** (-common_prefix_length(p.coords, q.coords))
    if p.kind == FUCHSIAN:
        return abs(p.coords - q.coords)
    cos = float(np.dot(p.vector(), q.vector()))
    return math.sqrt(max(0.0, 1.0 - cos * cos))


def act(g, p):
    """Action of a group element on a compactified point."""
    model = g.model
    if model.kind != p.kind:
        raise ModelMismatch(f"Cannot act by a {model.kind} element on a {p.kind} point")
    if model.kind == TREE:
        return CompactifiedPoint(kind=TREE, tag=p.tag, coords=free_reduce(g.value, p.coords),
                                 metric_base=p.metric_base)
    if model.kind == FUCHSIAN:
        z = mobius(disk_matrix(g.value), p.coords)
        if p.is_boundary:
            z = z / abs(z)
        return CompactifiedPoint(kind=FUCHSIAN, tag=p.tag, coords=complex(z))
    matrix = np.array(g.value, dtype=float)
    dual = None
    if p.dual is not None:
        dual = np.linalg.inv(matrix).T @ np.array(p.dual)
    return projective_point(matrix @ p.vector(), dual=dual, tag=p.tag)


def _tree_axis(g, depth):
    word = g.value
    t = 0
    while t < len(word) // 2 and word[t] == word[len(word) - 1 - t] ^ 1:
        t += 1
    core = word[t:len(word) - t]
    if not core:
        raise NotLoxodromic("Identity has no axis", word=list(g.word))
    prefix = word[:t]
    core_inv = tuple(letter ^ 1 for letter in reversed(core))
    repeats = depth // len(core) + 1
    attracting = (prefix + core * repeats)[:max(depth, len(prefix) + 1)]
    repelling = (prefix + core_inv * repeats)[:max(depth, len(prefix) + 1)]
    base = g.model.metric_base
    return LoxodromicData(tree_point(attracting, metric_base=base), tree_point(repelling, metric_base=base))


def _fuchsian_fixed_points(g):
    model = g.model
    (a, _), (_, d) = g.value
    trace = a + d
    threshold = 2 if model.exact else 2 + model.tolerance
    if abs(trace) <= threshold:
        raise NotLoxodromic(f"|trace| = {float(abs(trace)):.6g} <= 2", word=list(g.word))
    m = disk_matrix(g.value)
    eigenvalues, eigenvectors = np.linalg.eig(m)
    order = np.argsort(-np.abs(eigenvalues))
    points = []
    for idx in order:
        v = eigenvectors[:, idx]
        if abs(v[1]) < 1e-300:
            raise LinearAlgebraFailure("Degenerate eigenvector for Fuchsian element", word=list(g.word))
        w = v[0] / v[1]
        points.append(circle_point(math.atan2(w.imag, w.real)))
    return LoxodromicData(points[0], points[1])


def _attracting_direction(matrix, max_squarings=40, gap=1e-12):
    p = np.array(matrix, dtype=float)
    p = p / np.linalg.norm(p)
    for _ in range(max_squarings):
        s = np.linalg.svd(p, compute_uv=False)
        if not np.all(np.isfinite(s)):
            raise LinearAlgebraFailure("Non-finite singular values in power iteration")
        if s[1] <= gap * s[0]:
            return top_direction(p)
        p = p @ p
        p = p / np.linalg.norm(p)
    return None


def _linear_fixed_points(g):
    matrix = np.array(g.value, dtype=float)
    inv = np.linalg.inv(matrix)
    attracting = _attracting_direction(matrix)
    repelling = _attracting_direction(inv)
    if attracting is None or repelling is None:
        raise NotLoxodromic("Eigenvalue gap below tolerance", word=list(g.word))
    attracting_dual = _attracting_direction(inv.T)
    repelling_dual = _attracting_direction(matrix.T)
    return LoxodromicData(projective_point(attracting, dual=attracting_dual),
                          projective_point(repelling, dual=repelling_dual))


def loxodromic_data(g, depth=END_DEPTH):
    """
    Attracting and repelling fixed points of a loxodromic element.

    Raises:
        NotLoxodromic: identity (tree), |trace| <= 2 (fuchsian), or no
            singular-value gap under repeated squaring (linear)
    """
    kind = g.model.kind
    if kind == TREE:
        return _tree_axis(g, depth)
    if kind == FUCHSIAN:
        return _fuchsian_fixed_points(g)
    return _linear_fixed_points(g)


def is_loxodromic(g):
    try:
        loxodromic_data(g)
    except NotLoxodromic:
        return False
    return True


def quasi_uniform_directions(d, n, rng):
    """
    Quasi-uniform unit directions in R^d up to sign.

    d = 2 uses evenly spaced angles on [0, pi), d = 3 a Fibonacci lattice on
    the upper hemisphere, higher d normalized Gaussian samples from ``rng``.
    """
    if d == 2:
        angles = (np.arange(n) + 0.5) * math.pi / n
        return np.column_stack([np.cos(angles), np.sin(angles)])
    if d == 3:
        i = np.arange(n) + 0.5
        z = i / n
        phi = i * math.pi * (3.0 - math.sqrt(5.0))
        r = np.sqrt(1.0 - z * z)
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    samples = rng.standard_normal((n, d))
    return samples / np.linalg.norm(samples, axis=1, keepdims=True)


def sample_boundary(model, n, rng, depth=END_DEPTH, prefix=()):
    """
    Seeded boundary samples for a model.

    Args:
        model: GroupModel
        n: number of samples
        rng: numpy Generator
        depth: tree truncation depth
        prefix: tree only, reduced prefix every sample must start with

    Returns:
        list of CompactifiedPoint
    """
    if model.kind == TREE:
        letters = 2 * model.rank
        points = []
        for _ in range(n):
            word = list(prefix)
            while len(word) < depth:
                choices = [x for x in range(letters) if not word or x != word[-1] ^ 1]
                word.append(choices[int(rng.integers(len(choices)))])
            points.append(tree_point(word, metric_base=model.metric_base))
        return points
    if model.kind == FUCHSIAN:
        return [circle_point(a) for a in rng.uniform(0.0, TWO_PI, size=n)]
    return [projective_point(v) for v in quasi_uniform_directions(model.dimension, n, rng)]


def convergence_threshold(ball, epsilon, samples):
    """
    Word-length threshold for source-sink dynamics on a ball.

    For every enumerated g with dist(g, g^-1) >= 2*epsilon, every sample p
    with dist(p, g^-1) >= epsilon must satisfy dist(g.p, g) < epsilon.
    The threshold is one more than the largest word length that fails.

    Returns:
        dict: threshold, checked, failures
    """
    worst = -1
    checked = 0
    failures = 0
    for g in ball.nontrivial():
        here = compactify(g)
        there = compactify(inverse(g))
        if dist(here, there) < 2 * epsilon:
            continue
        checked += 1
        for p in samples:
            if dist(p, there) < epsilon:
                continue
            if dist(act(g, p), here) >= epsilon:
                failures += 1
                worst = max(worst, g.word_length)
                break
    return {'threshold': worst + 1, 'checked': checked, 'failures': failures}


def point_to_dict(p):
    """Serializable form of a compactified point."""
    if p.kind == TREE:
        coords = list(p.coords)
    elif p.kind == FUCHSIAN:
        coords = [p.coords.real, p.coords.imag]
    else:
        coords = list(p.coords)
    return {'kind': p.kind, 'tag': p.tag, 'coords': coords,
            'dual': list(p.dual) if p.dual is not None else None, 'metric_base': p.metric_base}


def point_from_dict(data):
    kind = data['kind']
    if kind == TREE:
        coords = tuple(int(x) for x in data['coords'])
    elif kind == FUCHSIAN:
        coords = complex(data['coords'][0], data['coords'][1])
    else:
        coords = tuple(float(x) for x in data['coords'])
    dual = tuple(data['dual']) if data.get('dual') is not None else None
    return CompactifiedPoint(kind=kind, tag=data['tag'], coords=coords, dual=dual,
                             metric_base=int(data.get('metric_base', 2)))
