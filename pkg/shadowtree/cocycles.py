"""
Cocycles module for shadowtree.
Handles Cartan projections, root and functional evaluations, Busemann and
Iwasawa cocycles, Gromov products, magnitudes, GPS defects and the
empirical coarse constants.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np

from shadowtree.boundary import act, common_prefix_length, compactify, dist
from shadowtree.errors import DegeneratePair, LinearAlgebraFailure, ModelMismatch, NoSamples
from shadowtree.groups import FUCHSIAN, LINEAR, TREE, inverse, multiply

logger = logging.getLogger(__name__)

BUSEMANN_TREE = 'busemann-tree'
BUSEMANN_FUCHSIAN = 'busemann-fuchsian'
PROJECTIVE_OMEGA1 = 'projective-omega1'
DUAL_PROJECTIVE = 'dual-projective'
CARTAN_MAGNITUDE = 'cartan-magnitude'
COCYCLE_KINDS = (BUSEMANN_TREE, BUSEMANN_FUCHSIAN, PROJECTIVE_OMEGA1, DUAL_PROJECTIVE, CARTAN_MAGNITUDE)

DEFAULT_SAFETY = 1.5
EMPIRICAL = 'EMPIRICAL'


@dataclass(frozen=True)
class CartanVector:
    """Descending log singular values, optionally tagged with a root subset."""

    entries: tuple
    theta: Optional[tuple] = None

    def array(self):
        return np.array(self.entries, dtype=float)

    @property
    def dimension(self):
        return len(self.entries)

    def simple_roots(self):
        """Values alpha_i(kappa) = kappa_i - kappa_{i+1}."""
        a = self.array()
        return a[:-1] - a[1:]

    def root(self, i):
        return float(self.entries[i] - self.entries[i + 1])

    def iota(self):
        """Opposition involution: reverse and negate."""
        return CartanVector(tuple(-x for x in reversed(self.entries)), self.theta)

    def norm(self):
        return float(np.linalg.norm(self.array()))


@dataclass(frozen=True)
class LinearFunctional:
    """phi(kappa) = sum c_i kappa_i."""

    coeffs: tuple
    theta_compatible: bool = False
    name: str = 'phi'

    def __call__(self, kappa):
        values = kappa.array() if isinstance(kappa, CartanVector) else np.asarray(kappa, dtype=float)
        return float(np.dot(np.array(self.coeffs, dtype=float), values))

    def iota(self):
        """phi composed with the opposition involution."""
        return LinearFunctional(tuple(-c for c in reversed(self.coeffs)), self.theta_compatible, f"{self.name}.iota")


def omega(k, d):
    """Fundamental weight omega_k on SL(d): sum of the first k entries."""
    return LinearFunctional(tuple(1.0 if i < k else 0.0 for i in range(d)), name=f"omega{k}")


@dataclass(frozen=True)
class CocycleSpec:
    kind: str
    phi: Optional[LinearFunctional] = None
    theta: Optional[tuple] = None
    coarse_constant: float = 0.0

    @property
    def convention(self):
        """Magnitude convention string recorded in every report."""
        if self.kind == CARTAN_MAGNITUDE:
            theta = 'all' if self.theta is None else ','.join(str(i + 1) for i in self.theta)
            return f"{self.kind}({self.phi.name}; theta={theta})"
        return self.kind


def default_spec(model):
    if model.kind == TREE:
        return CocycleSpec(BUSEMANN_TREE)
    if model.kind == FUCHSIAN:
        return CocycleSpec(BUSEMANN_FUCHSIAN)
    return CocycleSpec(PROJECTIVE_OMEGA1)


@lru_cache(maxsize=1 << 18)
def _cartan_entries(value):
    a = np.array(value, dtype=float)
    if not np.all(np.isfinite(a)):
        raise LinearAlgebraFailure("Non-finite matrix entries")
    try:
        s = np.linalg.svd(a, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise LinearAlgebraFailure(f"SVD failed: {exc}") from exc
    if s[-1] <= 0 or not np.all(np.isfinite(s)):
        raise LinearAlgebraFailure("Matrix is singular")
    return tuple(float(x) for x in np.log(s))


def _matrix_of(g):
    if hasattr(g, 'model'):
        if g.model.kind == TREE:
            raise ModelMismatch("Tree elements have no Cartan projection")
        return g.value
    return tuple(tuple(float(x) for x in row) for row in np.asarray(g, dtype=float))


def cartan_projection(g):
    """
    Cartan projection kappa(g) via SVD.

    Args:
        g: GroupElement with a matrix value, or a square matrix

    Returns:
        CartanVector with descending entries
    """
    return CartanVector(_cartan_entries(_matrix_of(g)))


def partial_projection(kappa, theta):
    """
    Orthogonal projection onto a_theta = intersection of ker(alpha) for alpha not in theta.

    Args:
        kappa: CartanVector
        theta: iterable of 0-based simple-root indices (alpha_1 is 0)

    Returns:
        CartanVector tagged with theta
    """
    theta = tuple(sorted(set(theta)))
    d = kappa.dimension
    rows = []
    for i in range(d - 1):
        if i not in theta:
            row = np.zeros(d)
            row[i], row[i + 1] = 1.0, -1.0
            rows.append(row)
    rows.append(np.ones(d))
    constraints = np.array(rows)
    projector = np.eye(d) - np.linalg.pinv(constraints) @ constraints
    return CartanVector(tuple(float(x) for x in projector @ kappa.array()), theta)


def theta_compatible(phi, theta, rng, samples=100, tol=1e-9):
    """Check phi(p_theta(kappa)) = phi(kappa) on random trace-zero kappa."""
    d = len(phi.coeffs)
    for _ in range(samples):
        v = np.sort(rng.standard_normal(d))[::-1]
        kappa = CartanVector(tuple(v - v.mean()))
        if abs(phi(kappa) - phi(partial_projection(kappa, theta))) > tol:
            return False
    return True


def magnitude(g, spec):
    """
    sigma-magnitude of an element.

    busemann-tree: reduced word length; busemann-fuchsian: 2 log s1
    (the displacement of i); projective-omega1: log s1; dual-projective:
    log s1(g^-1); cartan-magnitude: phi(kappa_theta(g)).
    """
    kind = spec.kind
    if kind == BUSEMANN_TREE:
        if g.model.kind != TREE:
            raise ModelMismatch("busemann-tree magnitude needs a tree element")
        return float(len(g.value))
    kappa = _cartan_entries(_matrix_of(g))
    if kind == BUSEMANN_FUCHSIAN:
        return 2.0 * kappa[0]
    if kind == PROJECTIVE_OMEGA1:
        return kappa[0]
    if kind == DUAL_PROJECTIVE:
        return -kappa[-1]
    vector = CartanVector(kappa)
    if spec.theta is not None:
        vector = partial_projection(vector, spec.theta)
    return spec.phi(vector)


def busemann(gamma, x):
    """
    Busemann cocycle beta(gamma, x) for the tree and Fuchsian models.

    Tree: |gamma^-1| - 2 cpl(gamma^-1, x), an exact integer. Fuchsian:
    b_x(gamma^-1 . 0) with b_x(w) = log(|x - w|^2 / (1 - |w|^2)), so that
    beta(gamma, x) approaches d(0, gamma.0) = 2 log s1 away from gamma^-1.
    """
    model = gamma.model
    if model.kind != x.kind:
        raise ModelMismatch(f"{model.kind} element with {x.kind} point")
    if model.kind == TREE:
        inv = model.inverse_value(gamma.value)
        return len(inv) - 2 * common_prefix_length(inv, x.coords)
    if model.kind == FUCHSIAN:
        w = compactify(inverse(gamma)).coords
        return math.log(abs(x.coords - w) ** 2 / (1.0 - abs(w) ** 2))
    raise ModelMismatch("Busemann cocycle is defined for tree and Fuchsian models")


def gromov_product(x, y):
    """
    Gromov product of two distinct boundary points.

    Tree: 2 cpl(x, y). Fuchsian: 2 log(2 / |x - y|).
    """
    if x.kind != y.kind:
        raise ModelMismatch(f"{x.kind} and {y.kind} points")
    if x.kind == TREE:
        if x.coords == y.coords:
            raise DegeneratePair("Coincident tree ends")
        return 2 * common_prefix_length(x.coords, y.coords)
    if x.kind == FUCHSIAN:
        gap = abs(x.coords - y.coords)
        if gap < 1e-300:
            raise DegeneratePair("Coincident circle points")
        return 2.0 * math.log(2.0 / gap)
    raise ModelMismatch("Use projective_pairing for the linear model")


def projective_pairing(w, v):
    """G(w, v) = log(|w||v| / |<w, v>|) for a covector w and a vector v."""
    w = np.asarray(w, dtype=float)
    v = np.asarray(v, dtype=float)
    inner = abs(float(np.dot(w, v)))
    if inner < 1e-300:
        raise DegeneratePair("Covector and vector are not transverse")
    return math.log(np.linalg.norm(w) * np.linalg.norm(v) / inner)


def iwasawa_cocycle(g, frame=None, tol=1e-9):
    """
    Iwasawa cocycle B(g, kP): log of the positive diagonal of R in g.k = QR.

    Args:
        g: GroupElement or square matrix
        frame: orthonormal matrix k; identity when omitted

    Returns:
        numpy array in a
    """
    a = np.array(_matrix_of(g), dtype=float)
    k = np.eye(a.shape[0]) if frame is None else np.asarray(frame, dtype=float)
    if np.max(np.abs(k.T @ k - np.eye(k.shape[0]))) > tol:
        raise LinearAlgebraFailure("Frame is not orthonormal")
    _, r = np.linalg.qr(a @ k)
    diagonal = np.abs(np.diag(r))
    if np.any(diagonal <= 1e-300) or not np.all(np.isfinite(diagonal)):
        raise LinearAlgebraFailure("Rank deficiency in Iwasawa decomposition")
    return np.log(diagonal)


@dataclass(frozen=True)
class GPSTriple:
    """(sigma, sigma_bar, G) with the model's pairing."""

    sigma: CocycleSpec
    sigma_bar: CocycleSpec
    model_kind: str

    def sigma_value(self, gamma, y):
        if self.model_kind == LINEAR:
            v = y.vector()
            return math.log(np.linalg.norm(gamma.as_array() @ v) / np.linalg.norm(v))
        return busemann(gamma, y)

    def sigma_bar_value(self, gamma, x):
        if self.model_kind == LINEAR:
            w = np.array(x.dual if x.dual is not None else x.coords, dtype=float)
            return math.log(np.linalg.norm(np.linalg.inv(gamma.as_array()).T @ w) / np.linalg.norm(w))
        return busemann(gamma, x)

    def pairing(self, x, y):
        if self.model_kind == LINEAR:
            w = x.dual if x.dual is not None else x.coords
            return projective_pairing(w, y.coords)
        return gromov_product(x, y)

    def act_bar(self, gamma, x):
        if self.model_kind == LINEAR:
            w = np.array(x.dual if x.dual is not None else x.coords, dtype=float)
            return type(x)(kind=x.kind, tag=x.tag, coords=tuple(np.linalg.inv(gamma.as_array()).T @ w))
        return act(gamma, x)

    def act(self, gamma, y):
        if self.model_kind == LINEAR:
            return type(y)(kind=y.kind, tag=y.tag, coords=tuple(gamma.as_array() @ y.vector()))
        return act(gamma, y)


def gps_triple(model):
    """Standard GPS triple of a model: Busemann pair or projective pair."""
    if model.kind == TREE:
        spec = CocycleSpec(BUSEMANN_TREE)
        return GPSTriple(spec, spec, TREE)
    if model.kind == FUCHSIAN:
        spec = CocycleSpec(BUSEMANN_FUCHSIAN)
        return GPSTriple(spec, spec, FUCHSIAN)
    return GPSTriple(CocycleSpec(PROJECTIVE_OMEGA1), CocycleSpec(DUAL_PROJECTIVE), LINEAR)


def gps_defect(triple, samples):
    """
    Largest |(sigma_bar(g,x) + sigma(g,y)) - (G(g x, g y) - G(x, y))| over samples.

    Args:
        triple: GPSTriple
        samples: iterable of (gamma, x, y); x lives in sigma_bar's space

    Returns:
        float
    """
    worst = 0.0
    for gamma, x, y in samples:
        lhs = triple.sigma_bar_value(gamma, x) + triple.sigma_value(gamma, y)
        rhs = triple.pairing(triple.act_bar(gamma, x), triple.act(gamma, y)) - triple.pairing(x, y)
        worst = max(worst, abs(lhs - rhs))
    return float(worst)


@dataclass
class CocycleConstants:
    """Empirical coarse constants, raw and scaled by the safety factor."""

    epsilon: float
    c_triple: float
    c_finite: float
    properness_depth: int
    pair_samples: int
    admissible_pairs: int
    safety: float = DEFAULT_SAFETY
    label: str = EMPIRICAL
    min_magnitude_by_depth: list = field(default_factory=list)
    # one-sided: largest ||ab|| - ||a|| - ||b|| over admissible pairs, at least 0
    c_excess: float = 0.0

    @property
    def c_triple_safe(self):
        return self.safety * self.c_triple

    @property
    def c_finite_safe(self):
        return self.safety * self.c_finite

    def to_dict(self):
        return {
            'epsilon': self.epsilon,
            'c_triple': self.c_triple,
            'c_triple_safe': self.c_triple_safe,
            'c_finite': self.c_finite,
            'c_finite_safe': self.c_finite_safe,
            'c_excess': self.c_excess,
            'properness_depth': self.properness_depth,
            'pair_samples': self.pair_samples,
            'admissible_pairs': self.admissible_pairs,
            'safety': self.safety,
            'label': self.label,
        }


def sample_pairs(count, max_pairs, rng):
    """All ordered index pairs when few enough, otherwise a seeded sample."""
    if count * count <= max_pairs:
        return [(i, j) for i in range(count) for j in range(count)]
    left = rng.integers(0, count, size=max_pairs)
    right = rng.integers(0, count, size=max_pairs)
    return list(zip(left.tolist(), right.tolist()))


def properness_depth(elements, spec):
    """Depth beyond which the minimum magnitude per BFS depth is nondecreasing."""
    by_depth = {}
    for g in elements:
        m = magnitude(g, spec)
        by_depth[g.word_length] = min(m, by_depth.get(g.word_length, math.inf))
    depths = sorted(by_depth)
    minima = [by_depth[n] for n in depths]
    start = len(minima) - 1
    while start > 0 and minima[start - 1] <= minima[start]:
        start -= 1
    return (depths[start] if depths else 0), minima


def finite_constant(elements, spec, adjusters, norms=None):
    """Largest | ||g f|| - ||g|| | or | ||f g|| - ||g|| | over g in elements and f in F and F^-1."""
    elements = list(elements)
    norms = norms if norms is not None else [magnitude(g, spec) for g in elements]
    finite = list(adjusters) + [inverse(f) for f in adjusters]
    worst = 0.0
    for g, m in zip(elements, norms):
        for f in finite:
            worst = max(worst, abs(magnitude(multiply(g, f), spec) - m), abs(magnitude(multiply(f, g), spec) - m))
    return float(worst)


def estimate_cocycle_constants(elements, spec, epsilon, adjusters=None, safety=DEFAULT_SAFETY,
                               max_pairs=20000, rng=None):
    """
    Empirical C_triple(epsilon), C_finite(F) and properness depth.

    Args:
        elements: enumerated elements (a Ball or a list)
        spec: CocycleSpec
        epsilon: separation for the triple constant
        adjusters: finite set F; identity only when omitted
        safety: factor applied to the reported safe values
        max_pairs: pair budget before switching to seeded sampling
        rng: numpy Generator for sampling

    Returns:
        CocycleConstants
    """
    elements = list(elements)
    if not elements:
        raise NoSamples("Cannot estimate constants on an empty ball")
    rng = rng if rng is not None else np.random.default_rng(0)

    norms = [magnitude(g, spec) for g in elements]
    inverse_points = [compactify(inverse(g)) for g in elements]
    points = [compactify(g) for g in elements]

    pairs = sample_pairs(len(elements), max_pairs, rng)
    c_triple = 0.0
    c_excess = 0.0
    admissible = 0
    for i, j in pairs:
        if dist(inverse_points[i], points[j]) < epsilon:
            continue
        admissible += 1
        product = multiply(elements[i], elements[j])
        defect = magnitude(product, spec) - norms[i] - norms[j]
        c_triple = max(c_triple, abs(defect))
        c_excess = max(c_excess, defect)

    finite = list(adjusters) if adjusters else [elements[0].model.identity()]
    c_finite = finite_constant(elements, spec, finite, norms=norms)

    depth, minima = properness_depth(elements, spec)
    logger.info("Constants at epsilon=%.6g: C_triple=%.6g over %d admissible pairs, C_finite=%.6g",
                epsilon, c_triple, admissible, c_finite)
    return CocycleConstants(epsilon=float(epsilon), c_triple=float(c_triple), c_finite=float(c_finite),
                            c_excess=float(c_excess),
                            properness_depth=depth, pair_samples=len(pairs), admissible_pairs=admissible,
                            safety=safety, min_magnitude_by_depth=minima)
