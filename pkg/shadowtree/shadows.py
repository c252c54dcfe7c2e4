"""
Shadows module for shadowtree.
Handles shadows S_eps(g) = g(M - B_eps(g^-1)) as tree cylinders, circle arcs
or sampled projective caps, and the set predicates built on them.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from shadowtree.boundary import (
    TWO_PI, act, circle_point, compactify, projective_point, quasi_uniform_directions, sample_boundary, tree_point,
)
from shadowtree.cocycles import gps_triple, magnitude
from shadowtree.errors import ModelMismatch, NoSamples, NotGeodesic
from shadowtree.groups import FUCHSIAN, LINEAR, TREE, inverse, multiply

logger = logging.getLogger(__name__)

CYLINDER = 'cylinder'
ARC = 'arc'
CAP = 'cap'
FULL = 'full'
EMPTY = 'empty'

ANGLE_TOL = 1e-12
DEFAULT_CAP_SAMPLES = 1000


@dataclass(frozen=True)
class CapSamples:
    """Shared quasi-uniform sample set for linear-model shadows."""

    directions: np.ndarray = field(repr=False, compare=False)
    resolution: float

    @classmethod
    def build(cls, d, n=DEFAULT_CAP_SAMPLES, rng=None):
        rng = rng if rng is not None else np.random.default_rng(0)
        directions = quasi_uniform_directions(d, n, rng)
        gram = np.clip(np.abs(directions @ directions.T), 0.0, 1.0)
        sines = np.sqrt(1.0 - gram ** 2)
        np.fill_diagonal(sines, np.inf)
        resolution = float(np.max(np.min(sines, axis=1)))
        return cls(directions=directions, resolution=resolution)


@dataclass(frozen=True)
class Shadow:
    """A shadow with a model-specific body.

    ``body`` is CYLINDER (``prefix``), ARC (``start``, ``span``, ``wrap``),
    CAP (``inside``/``borderline`` masks over shared samples), or one of
    the degenerate values FULL and EMPTY.
    """

    gamma: object = field(compare=False)
    epsilon: float
    body: str
    prefix: tuple = ()
    start: float = 0.0
    span: float = 0.0
    wrap: bool = False
    inside: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    borderline: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    samples: Optional[CapSamples] = field(default=None, compare=False, repr=False)

    @property
    def kind(self):
        return self.gamma.model.kind

    @property
    def is_degenerate(self):
        return self.body in (FULL, EMPTY)

    @property
    def metric_base(self):
        return self.gamma.model.metric_base

    def describe(self):
        if self.body == CYLINDER:
            return f"cylinder({self.gamma.model.format_key(self.prefix)})"
        if self.body == ARC:
            return f"arc(start={self.start:.6f}, span={self.span:.6f}, wrap={self.wrap})"
        if self.body == CAP:
            return f"cap({int(self.inside.sum())}/{len(self.inside)} samples)"
        return self.body


def _tree_scale(epsilon, base):
    """Largest integer k with base^(-k) >= epsilon; -1 when epsilon > 1."""
    if epsilon > 1.0:
        return -1
    k = int(math.floor(-math.log(epsilon) / math.log(base) + 1e-12))
    while float(base) ** (-(k + 1)) >= epsilon:
        k += 1
    while k > 0 and float(base) ** (-k) < epsilon:
        k -= 1
    return k


def _tree_shadow(gamma, epsilon):
    k = _tree_scale(epsilon, gamma.model.metric_base)
    if k < 0:
        return Shadow(gamma=gamma, epsilon=epsilon, body=EMPTY)
    word = gamma.value
    if len(word) <= k:
        return Shadow(gamma=gamma, epsilon=epsilon, body=FULL)
    return Shadow(gamma=gamma, epsilon=epsilon, body=CYLINDER, prefix=tuple(word[:len(word) - k]))


def _normalize(angle):
    return angle % TWO_PI


def _arc_contains(start, span, angle, tol=1e-9):
    return _normalize(angle - start) <= span + tol or _normalize(angle - start) >= TWO_PI - tol


def _fuchsian_shadow(gamma, epsilon, base=None):
    c = (compactify(inverse(gamma)) if base is None else act(inverse(gamma), base)).coords
    radius = abs(c)
    if radius < 1e-15:
        body = EMPTY if epsilon > 1.0 else FULL
        return Shadow(gamma=gamma, epsilon=epsilon, body=body)
    kappa = (1.0 + radius * radius - epsilon * epsilon) / (2.0 * radius)
    if kappa >= 1.0:
        return Shadow(gamma=gamma, epsilon=epsilon, body=FULL)
    if kappa < -1.0:
        return Shadow(gamma=gamma, epsilon=epsilon, body=EMPTY)
    phi = math.atan2(c.imag, c.real)
    half = math.acos(kappa)
    source_start = phi + half
    source_end = phi - half + TWO_PI
    if source_end - source_start < ANGLE_TOL:
        return Shadow(gamma=gamma, epsilon=epsilon, body=EMPTY)

    image_start = act(gamma, circle_point(source_start)).angle
    image_end = act(gamma, circle_point(source_end)).angle
    image_mid = act(gamma, circle_point(phi + math.pi)).angle
    span = _normalize(image_end - image_start)
    if not _arc_contains(image_start, span, image_mid):
        image_start, span = image_end, TWO_PI - span
    start = _normalize(image_start)
    return Shadow(gamma=gamma, epsilon=epsilon, body=ARC, start=start, span=span,
                  wrap=start + span > TWO_PI)


def _cap_shadow(gamma, epsilon, samples):
    inv = np.linalg.inv(gamma.as_array())
    center = compactify(inverse(gamma)).vector()
    pulled = samples.directions @ inv.T
    pulled = pulled / np.linalg.norm(pulled, axis=1, keepdims=True)
    cos = np.clip(np.abs(pulled @ center), 0.0, 1.0)
    margin = np.sqrt(1.0 - cos ** 2) - epsilon
    s = np.linalg.svd(inv, compute_uv=False)
    lipschitz = s[0] * s[1] / s[-1] ** 2
    borderline = np.abs(margin) <= lipschitz * samples.resolution
    inside = margin >= 0
    if not inside.any() and not borderline.any():
        return Shadow(gamma=gamma, epsilon=epsilon, body=EMPTY)
    return Shadow(gamma=gamma, epsilon=epsilon, body=CAP, inside=inside, borderline=borderline, samples=samples)


def shadow(gamma, epsilon, samples=None, base=None):
    """
    Shadow S_eps(gamma) in the element's model.

    Args:
        gamma: GroupElement
        epsilon: positive scale
        samples: CapSamples for the linear model; built with defaults if omitted
        base: interior disk point the shadow is cast from (Fuchsian only);
            the origin when omitted. S(g h) = g S(h; g^-1 o) lets deep
            shadows be compared after pulling back by g.

    Returns:
        Shadow, possibly with the degenerate FULL or EMPTY body
    """
    if epsilon <= 0:
        raise ValueError(f"Shadow scale must be positive, got {epsilon}")
    kind = gamma.model.kind
    if base is not None and kind != FUCHSIAN:
        raise ModelMismatch(f"Shadows from a moved base point need a Fuchsian model, not {kind}")
    if kind == TREE:
        return _tree_shadow(gamma, epsilon)
    if kind == FUCHSIAN:
        return _fuchsian_shadow(gamma, epsilon, base)
    if samples is None:
        samples = CapSamples.build(gamma.model.dimension)
    if gamma.is_identity:
        # the identity compactifies to the interior basepoint
        body = EMPTY if epsilon > 1.0 else FULL
        return Shadow(gamma=gamma, epsilon=epsilon, body=body, samples=samples)
    return _cap_shadow(gamma, epsilon, samples)


def _check_same_model(a, b):
    if a.kind != b.kind:
        raise ModelMismatch(f"Cannot compare {a.kind} and {b.kind} shadows")


def _cap_masks(s):
    """(definitely-in, possibly-in) masks of a cap or degenerate shadow."""
    if s.body == CAP:
        return s.inside & ~s.borderline, s.inside | s.borderline
    n = len(s.samples.directions) if s.samples is not None else 0
    value = s.body == FULL
    return np.full(n, value), np.full(n, value)


def nested(inner, outer):
    """
    Whether inner is contained in outer.

    Returns True or False, or None when sampled caps cannot decide at their
    resolution.
    """
    _check_same_model(inner, outer)
    if inner.body == EMPTY or outer.body == FULL:
        return True
    if outer.body == EMPTY or inner.body == FULL:
        return False
    if inner.body == CYLINDER:
        return inner.prefix[:len(outer.prefix)] == outer.prefix
    if inner.body == ARC:
        offset = _normalize(inner.start - outer.start)
        if offset > TWO_PI - 1e-9:
            offset = 0.0
        return offset + inner.span <= outer.span + 1e-9
    inner_sure, inner_maybe = _cap_masks(inner)
    outer_sure, outer_maybe = _cap_masks(outer)
    if np.any(inner_sure & ~outer_maybe):
        return False
    if np.all(~inner_maybe | outer_sure):
        return True
    return None


def disjoint(first, second):
    """Whether two shadows are disjoint; None when caps are unresolved."""
    _check_same_model(first, second)
    if first.body == EMPTY or second.body == EMPTY:
        return True
    if first.body == FULL or second.body == FULL:
        return False
    if first.body == CYLINDER:
        n = min(len(first.prefix), len(second.prefix))
        return first.prefix[:n] != second.prefix[:n]
    if first.body == ARC:
        def overlaps(a, b):
            return _normalize(b.start - a.start) < a.span - 1e-12
        return not (overlaps(first, second) or overlaps(second, first))
    first_sure, first_maybe = _cap_masks(first)
    second_sure, second_maybe = _cap_masks(second)
    if np.any(first_sure & second_sure):
        return False
    if not np.any(first_maybe & second_maybe):
        return True
    return None


def diameter(s):
    """
    Diameter in the compatible metric.

    Cylinders: base^(-|prefix|). Arcs: chord of the endpoints, 2 beyond a
    half-circle. Caps: largest projective distance between possibly-in samples.
    """
    if s.body == EMPTY:
        return 0.0
    if s.body == CYLINDER:
        return float(s.metric_base) ** (-len(s.prefix))
    if s.body == ARC:
        return 2.0 * math.sin(s.span / 2.0) if s.span <= math.pi else 2.0
    if s.body == FULL:
        return 1.0 if s.kind in (TREE, LINEAR) else 2.0
    _, maybe = _cap_masks(s)
    points = s.samples.directions[maybe]
    if len(points) < 2:
        return 0.0
    gram = np.clip(np.abs(points @ points.T), 0.0, 1.0)
    return float(np.sqrt(1.0 - gram.min() ** 2))


def contains(s, point):
    """
    Boundary point membership.

    Tree ends are tested on their stored truncation; linear points use the
    cap margin directly.
    """
    if s.body == EMPTY:
        return False
    if s.body == FULL:
        return True
    if s.body == CYLINDER:
        return tuple(point.coords[:len(s.prefix)]) == s.prefix
    if s.body == ARC:
        return _arc_contains(s.start, s.span, point.angle)
    q = act(inverse(s.gamma), point)
    center = compactify(inverse(s.gamma))
    cos = abs(float(np.dot(q.vector(), center.vector())))
    return math.sqrt(max(0.0, 1.0 - cos * cos)) >= s.epsilon


def sample_shadow(s, n, rng, depth=48):
    """Boundary points drawn from inside a shadow."""
    if s.body == EMPTY:
        return []
    model = s.gamma.model
    if s.body == FULL:
        return sample_boundary(model, n, rng, depth=depth)
    if s.body == CYLINDER:
        return sample_boundary(model, n, rng, depth=max(depth, len(s.prefix) + 1), prefix=s.prefix)
    if s.body == ARC:
        return [circle_point(s.start + t) for t in rng.uniform(0.0, s.span, size=n)]
    sure, _ = _cap_masks(s)
    chosen = s.samples.directions[sure][:n]
    return [projective_point(v) for v in chosen]


def shadow_magnitude_audit(gamma, epsilon, spec, points, samples=None):
    """
    Largest |sigma(gamma, gamma^-1 x) - ||gamma||| over points x of S_eps(gamma).

    Points outside the shadow are ignored; the result is an empirical
    estimate of the shadow magnitude constant.
    """
    s = shadow(gamma, epsilon, samples)
    triple = gps_triple(gamma.model)
    norm = magnitude(gamma, spec)
    inv = inverse(gamma)
    worst = None
    for x in points:
        if not contains(s, x):
            continue
        value = triple.sigma_value(gamma, act(inv, x))
        worst = max(worst or 0.0, abs(value - norm))
    if worst is None:
        raise NoSamples(f"No sample lies in {s.describe()}")
    return float(worst)


@dataclass
class ConicalWitness:
    point: object
    sequence: list
    epsilon: float
    diameters: list

    def to_dict(self):
        model = self.sequence[0].model
        if self.point.kind == TREE:
            point = model.format_key(self.point.coords)
        elif self.point.kind == FUCHSIAN:
            point = self.point.angle
        else:
            point = list(self.point.coords)
        return {
            'point': point,
            'sequence': [model.format_word(g.word) for g in self.sequence],
            'epsilon': self.epsilon,
            'diameters': self.diameters,
        }


def _check_geodesic(ray, seed_keys):
    for parent, child in zip(ray, ray[1:]):
        if seed_keys is not None:
            step = multiply(inverse(parent), child)
            if step.key not in seed_keys:
                raise NotGeodesic(f"{child.label()} is not a child of {parent.label()}")
        elif len(child.word) <= len(parent.word) or child.word[:len(parent.word)] != parent.word:
            raise NotGeodesic(f"{child.label()} does not extend {parent.label()}")


def conical_trace(ray, epsilon, depth=None, seed=None, samples=None):
    """
    Witness point in the nested intersection of shadows along a ray.

    Args:
        ray: list of elements gamma_1, gamma_2, ... with gamma_{n+1} in gamma_n.S
        epsilon: shadow scale
        depth: number of ray elements used (all when omitted)
        seed: optional seed elements used to verify each step
        samples: CapSamples for the linear model

    Returns:
        ConicalWitness
    """
    ray = list(ray)[:depth] if depth else list(ray)
    if not ray or all(g.is_identity for g in ray):
        raise NotGeodesic("Ray is empty or constant at the identity")
    seed_keys = {s.key for s in seed} if seed is not None else None
    _check_geodesic(ray, seed_keys)

    shadows = [shadow(g, epsilon, samples) for g in ray]
    for n in range(1, len(shadows)):
        if nested(shadows[n], shadows[n - 1]) is not True:
            raise NotGeodesic(f"Shadow of {ray[n].label()} is not nested in its parent",
                              index=n)
    diameters = [diameter(s) for s in shadows]
    if any(b >= a for a, b in zip(diameters, diameters[1:])):
        raise NotGeodesic("Shadow diameters are not strictly decreasing", diameters=diameters)

    last = shadows[-1]
    model = ray[0].model
    if last.body == CYLINDER:
        point = tree_point(last.prefix, metric_base=model.metric_base)
    elif last.body == ARC:
        point = circle_point(last.start + last.span / 2.0)
    else:
        sure = np.ones(len(last.inside), dtype=bool)
        for s in shadows:
            sure &= _cap_masks(s)[0]
        if not sure.any():
            raise NotGeodesic("No sample is certified in every cap")
        point = projective_point(last.samples.directions[int(np.argmax(sure))])
    if not all(contains(s, point) for s in shadows):
        raise NotGeodesic("Witness point escapes a shadow")
    return ConicalWitness(point=point, sequence=ray, epsilon=float(epsilon), diameters=diameters)


def shadows_frame(shadows):
    """
    Dump shadows for external plotting.

    Returns:
        pandas.DataFrame: word, epsilon, body, prefix, start, span, wrap, diameter
    """
    rows = []
    for s in shadows:
        model = s.gamma.model
        rows.append({
            'word': model.format_word(s.gamma.word),
            'epsilon': s.epsilon,
            'body': s.body,
            'prefix': model.format_key(s.prefix) if s.body == CYLINDER else '',
            'start': s.start if s.body == ARC else None,
            'span': s.span if s.body == ARC else None,
            'wrap': s.wrap if s.body == ARC else None,
            'diameter': diameter(s),
        })
    return pd.DataFrame(rows, columns=['word', 'epsilon', 'body', 'prefix', 'start', 'span', 'wrap', 'diameter'])
