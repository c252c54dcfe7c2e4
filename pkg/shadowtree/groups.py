"""
Group models module for shadowtree.
Handles the three concrete models (free tree, Fuchsian, linear), element
arithmetic with canonical keys, and breadth-first ball enumeration.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
import sympy

from shadowtree.errors import ConfigError, ModelMismatch, PrecisionExhausted

logger = logging.getLogger(__name__)

TREE = 'free-tree'
FUCHSIAN = 'fuchsian'
LINEAR = 'linear'
MODEL_KINDS = (TREE, FUCHSIAN, LINEAR)

GROUP_MODE = 'group'
SEMIGROUP_MODE = 'semigroup'

# Exact entries beyond this many bits are treated as exhausted precision
DEFAULT_MAX_BITS = 4096
DEFAULT_GRID_BITS = 40
DEFAULT_TOLERANCE = 1e-9

TREE_LETTERS = 'abcdefghijklmnopqrstuvwxyz'


def to_fraction(value):
    """
    Parse an exact matrix entry.

    Args:
        value: int, Fraction, float, or a string such as "5/3" or "-2"

    Returns:
        Fraction
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError(f"Boolean is not a matrix entry: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(str(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise ValueError(f"Unsupported matrix entry: {value!r}")


def _freeze(matrix):
    return tuple(tuple(row) for row in matrix)


def _as_object_array(matrix):
    return np.array(matrix, dtype=object)


def _matrix_determinant(matrix, exact):
    if exact:
        return sympy.Matrix(matrix).det()
    return float(np.linalg.det(np.array(matrix, dtype=float)))


def _matrix_inverse(matrix, exact):
    d = len(matrix)
    if exact:
        if d == 2:
            (a, b), (c, e) = matrix
            det = a * e - b * c
            return ((e / det, -b / det), (-c / det, a / det))
        inverse = sympy.Matrix(matrix).inv()
        return tuple(
            tuple(Fraction(int(sympy.fraction(inverse[i, j])[0]), int(sympy.fraction(inverse[i, j])[1]))
                  for j in range(d))
            for i in range(d)
        )
    return _freeze(np.linalg.inv(np.array(matrix, dtype=float)).tolist())


def _identity_matrix(d, exact):
    one, zero = (Fraction(1), Fraction(0)) if exact else (1.0, 0.0)
    return tuple(tuple(one if i == j else zero for j in range(d)) for i in range(d))


def free_reduce(left, right):
    """Concatenate two reduced tree words, cancelling at the junction."""
    cut = 0
    limit = min(len(left), len(right))
    while cut < limit and left[len(left) - 1 - cut] == right[cut] ^ 1:
        cut += 1
    return tuple(left[:len(left) - cut]) + tuple(right[cut:])


def reduce_word(letters):
    """Freely reduce an arbitrary letter sequence."""
    out = []
    for letter in letters:
        if out and out[-1] == letter ^ 1:
            out.pop()
        else:
            out.append(letter)
    return tuple(out)


@dataclass(frozen=True)
class GroupModel:
    """A concrete group (or semigroup) model with its generator list.

    Tree letters are integers 0..2k-1 where letter ``i ^ 1`` is the inverse
    of letter ``i``. Matrix generators are stored as tuples of rows.
    """

    kind: str
    generators: tuple
    rank: int
    names: tuple
    inverse_index: tuple
    exact: bool = True
    mode: str = GROUP_MODE
    metric_base: int = 2
    grid_bits: int = DEFAULT_GRID_BITS
    tolerance: float = DEFAULT_TOLERANCE
    max_bits: int = DEFAULT_MAX_BITS

    @property
    def is_tree(self):
        return self.kind == TREE

    @property
    def dimension(self):
        """Matrix size d (2 for Fuchsian); 0 for the tree."""
        return 0 if self.is_tree else len(self.generators[0])

    def identity_value(self):
        if self.is_tree:
            return ()
        return _identity_matrix(self.dimension, self.exact)

    def canonical_key(self, value):
        """
        Canonical dedup key of a representation value.

        Tree words are their own key. Matrices are normalized by the sign
        of their first nonzero entry; float matrices are then rounded to a
        2^-grid_bits grid.
        """
        if self.is_tree:
            return value
        flat = [x for row in value for x in row]
        pivot = next((x for x in flat if abs(x) > (0 if self.exact else self.tolerance)), None)
        if pivot is not None and pivot < 0:
            flat = [-x for x in flat]
        if self.exact:
            return tuple(flat)
        scale = float(2 ** self.grid_bits)
        return tuple(int(round(x * scale)) for x in flat)

    def inverse_value(self, value):
        if self.is_tree:
            return tuple(letter ^ 1 for letter in reversed(value))
        return _matrix_inverse(value, self.exact)

    def multiply_values(self, left, right):
        if self.is_tree:
            return free_reduce(left, right)
        if self.exact:
            product = _as_object_array(left).dot(_as_object_array(right))
        else:
            product = np.array(left, dtype=float) @ np.array(right, dtype=float)
        return _freeze(product.tolist())

    def identity(self):
        """The identity element: empty word, word length 0."""
        value = self.identity_value()
        return GroupElement(word=(), value=value, key=self.canonical_key(value), word_length=0, model=self)

    def generator(self, index):
        """The element spelled by a single generator index."""
        value = self.generators[index]
        return GroupElement(word=(index,), value=value, key=self.canonical_key(value),
                            word_length=1, model=self)

    def element(self, spelling):
        """
        Build an element from a spelling.

        Args:
            spelling: sequence of generator indices, or for the tree model a
                string of letters where uppercase marks inverses ("abA")

        Returns:
            GroupElement
        """
        if isinstance(spelling, str):
            if not self.is_tree:
                raise ValueError("String spellings are only supported for the tree model")
            spelling = [self.names.index(ch) for ch in spelling]
        result = self.identity()
        for index in spelling:
            if index < 0:
                # negative index -i-1 spells the inverse of generator i
                step = inverse(self.generator(-index - 1))
            else:
                step = self.generator(index)
            result = multiply(result, step)
        return result

    def format_word(self, word):
        """Human-readable spelling of a word of generator indices."""
        parts = []
        for index in word:
            if index >= 0:
                parts.append(self.names[index])
            else:
                parts.append(f"{self.names[-index - 1]}^-1")
        joiner = '' if self.is_tree else '.'
        return joiner.join(parts) if parts else 'id'

    def format_key(self, key):
        if self.is_tree:
            return ''.join(self.names[letter] for letter in key) or 'id'
        return ' '.join(str(x) for x in key)

    def describe_metric(self):
        """Compatible metric used by this model, for report headers."""
        if self.kind == TREE:
            return f"tree ultrametric {self.metric_base}^(-cpl(u,v))"
        if self.kind == FUCHSIAN:
            return "chordal distance on the closed unit disk after gamma -> Cayley(gamma*i)"
        return "projective sine of principal angle on boundary directions"


@dataclass(frozen=True)
class GroupElement:
    """An element carried with its defining word, value and canonical key."""

    word: tuple
    value: tuple
    key: tuple
    word_length: int
    model: GroupModel = field(compare=False, repr=False, hash=False, default=None)

    @property
    def is_identity(self):
        return self.key == self.model.canonical_key(self.model.identity_value())

    def as_array(self):
        """Float numpy array of a matrix value."""
        return np.array(self.value, dtype=float)

    def label(self):
        return self.model.format_word(self.word)


def _check_precision(model, value, word):
    if model.is_tree:
        return
    if model.exact:
        for row in value:
            for x in row:
                if max(abs(x.numerator).bit_length(), x.denominator.bit_length()) > model.max_bits:
                    raise PrecisionExhausted(
                        f"Exact entries exceed {model.max_bits} bits for word {model.format_word(word)}",
                        word=list(word))
    elif not np.all(np.isfinite(np.array(value, dtype=float))):
        raise PrecisionExhausted(f"Non-finite entries for word {model.format_word(word)}", word=list(word))


def multiply(a, b, known=None):
    """
    Multiply two elements of the same model.

    Args:
        a: left factor
        b: right factor
        known: optional dict canonical key -> GroupElement; when the product
            key was seen before, the shorter known spelling is kept

    Returns:
        GroupElement
    """
    if a.model is not b.model and a.model != b.model:
        raise ModelMismatch("Elements belong to different models")
    model = a.model
    value = model.multiply_values(a.value, b.value)
    word = a.word + b.word
    _check_precision(model, value, word)
    key = model.canonical_key(value)
    if known is not None and key in known and known[key].word_length <= len(word):
        seen = known[key]
        return GroupElement(word=seen.word, value=value, key=key, word_length=seen.word_length, model=model)
    return GroupElement(word=word, value=value, key=key, word_length=len(word), model=model)


def inverse(g):
    """Inverse element; the word uses inverse generators when available."""
    model = g.model
    word = []
    for index in reversed(g.word):
        if index < 0:
            word.append(-index - 1)
        elif model.inverse_index[index] >= 0:
            word.append(model.inverse_index[index])
        else:
            word.append(-index - 1)
    value = model.inverse_value(g.value)
    return GroupElement(word=tuple(word), value=value, key=model.canonical_key(value),
                        word_length=g.word_length, model=model)


@dataclass(frozen=True)
class Ball:
    """Result of a breadth-first enumeration."""

    model: GroupModel
    radius: int
    elements: tuple
    index: dict = field(compare=False, repr=False)
    truncated: bool = False

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def at_depth(self, depth):
        return [g for g in self.elements if g.word_length == depth]

    def nontrivial(self):
        return [g for g in self.elements if g.word_length > 0]

    def to_frame(self):
        """
        Export the enumeration as a DataFrame for CSV diffing.

        Returns:
            pandas.DataFrame: columns canonical_key, word, word_length
        """
        rows = [{
            'canonical_key': self.model.format_key(g.key),
            'word': self.model.format_word(g.word),
            'word_length': g.word_length,
        } for g in self.elements]
        return pd.DataFrame(rows, columns=['canonical_key', 'word', 'word_length'])


def enumerate_ball(model, radius, max_elements=None):
    """
    Breadth-first closure of products of at most ``radius`` generators.

    Elements are deduplicated by canonical key; each keeps the word of its
    first discovery, which is the shortest and, among those, the
    lexicographically smallest spelling built from canonical prefixes.

    Args:
        model: GroupModel
        radius: nonnegative integer L
        max_elements: optional cap; hitting it returns a truncated ball

    Returns:
        Ball
    """
    if radius < 0:
        raise ValueError(f"Radius must be nonnegative, got {radius}")
    if not model.generators:
        raise ValueError("Generator list is empty")

    identity = model.identity()
    index = {identity.key: identity}
    elements = [identity]
    frontier = [identity]
    generators = [model.generator(i) for i in range(len(model.generators))]
    truncated = False

    for depth in range(1, radius + 1):
        next_frontier = []
        for g in frontier:
            for s in generators:
                h = multiply(g, s)
                if h.key in index:
                    continue
                index[h.key] = h
                elements.append(h)
                next_frontier.append(h)
                if max_elements is not None and len(elements) >= max_elements:
                    truncated = True
                    break
            if truncated:
                break
        frontier = next_frontier
        logger.debug("Depth %d: %d new elements", depth, len(next_frontier))
        if truncated or not frontier:
            break

    if truncated:
        logger.warning("Enumeration truncated at %d elements (radius %d)", len(elements), radius)
    return Ball(model=model, radius=radius, elements=tuple(elements), index=index, truncated=truncated)


def free_tree(rank, metric_base=2):
    """
    Free group of the given rank acting on its Cayley tree.

    Args:
        rank: k >= 2
        metric_base: b >= 2 for the compatible ultrametric b^(-cpl)

    Returns:
        GroupModel
    """
    if rank < 2:
        raise ConfigError("Free tree rank must be at least 2", [f"model.rank: {rank} < 2"])
    if metric_base < 2:
        raise ConfigError("Tree metric base must be at least 2", [f"model.metric_base: {metric_base} < 2"])
    names = []
    for i in range(rank):
        names.extend([TREE_LETTERS[i], TREE_LETTERS[i].upper()])
    letters = tuple((i,) for i in range(2 * rank))
    return GroupModel(kind=TREE, generators=letters, rank=rank, names=tuple(names),
                      inverse_index=tuple(i ^ 1 for i in range(2 * rank)), exact=True,
                      metric_base=int(metric_base))


def validate_matrices(matrices, exact=True, tolerance=DEFAULT_TOLERANCE):
    """
    Validate square generator matrices of determinant 1.

    Returns:
        tuple: (is_valid, errors) where errors name the offending generator
    """
    errors = []
    if not matrices:
        return False, ["generators: at least one generator is required"]
    d = len(matrices[0])
    for i, m in enumerate(matrices):
        if len(m) != d or any(len(row) != d for row in m):
            errors.append(f"generators[{i}]: expected a {d}x{d} matrix")
            continue
        det = _matrix_determinant(m, exact)
        if exact and det != 1:
            errors.append(f"generators[{i}]: determinant {det} != 1")
        elif not exact and abs(det - 1.0) > tolerance:
            errors.append(f"generators[{i}]: determinant {det:.12g} differs from 1")
    return len(errors) == 0, errors


def matrix_model(kind, matrices, exact=True, mode=GROUP_MODE, names=None,
                 tolerance=DEFAULT_TOLERANCE, grid_bits=DEFAULT_GRID_BITS, max_bits=DEFAULT_MAX_BITS):
    """
    Fuchsian or linear model from generator matrices.

    In group mode the inverse of every generator is appended unless the
    list already contains it.

    Returns:
        GroupModel
    """
    if kind not in (FUCHSIAN, LINEAR):
        raise ConfigError(f"Unknown matrix model kind: {kind}", [f"model.kind: {kind}"])
    if exact:
        frozen = [_freeze([[to_fraction(x) for x in row] for row in m]) for m in matrices]
    else:
        frozen = [_freeze([[float(x) for x in row] for row in m]) for m in matrices]
    is_valid, errors = validate_matrices(frozen, exact, tolerance)
    if not is_valid:
        raise ConfigError("Invalid generator matrices", [f"model.{e}" for e in errors])
    if kind == FUCHSIAN and len(frozen[0]) != 2:
        raise ConfigError("Fuchsian generators must be 2x2", ["model.generators: not 2x2"])

    base_names = list(names) if names else [f"g{i}" for i in range(len(frozen))]
    draft = GroupModel(kind=kind, generators=tuple(frozen), rank=len(frozen[0]), names=tuple(base_names),
                       inverse_index=tuple([-1] * len(frozen)), exact=exact, mode=mode,
                       grid_bits=grid_bits, tolerance=tolerance, max_bits=max_bits)
    generators = list(frozen)
    gen_names = list(base_names)
    inverse_index = [-1] * len(generators)

    if mode == GROUP_MODE:
        keys = [draft.canonical_key(m) for m in generators]
        for i in range(len(frozen)):
            inv = draft.inverse_value(frozen[i])
            inv_key = draft.canonical_key(inv)
            if inv_key in keys:
                j = keys.index(inv_key)
                inverse_index[i] = j
                inverse_index[j] = i
                continue
            generators.append(inv)
            gen_names.append(f"{base_names[i]}^-1")
            keys.append(inv_key)
            inverse_index.append(i)
            inverse_index[i] = len(generators) - 1

    return GroupModel(kind=kind, generators=tuple(generators), rank=len(frozen[0]), names=tuple(gen_names),
                      inverse_index=tuple(inverse_index), exact=exact, mode=mode,
                      grid_bits=grid_bits, tolerance=tolerance, max_bits=max_bits)


def fuchsian(matrices, **kwargs):
    """Fuchsian model from SL(2,R) generators."""
    return matrix_model(FUCHSIAN, matrices, **kwargs)


def linear(matrices, **kwargs):
    """Linear model from SL(d,R) generators."""
    return matrix_model(LINEAR, matrices, **kwargs)


def elements_by_key(elements) -> Dict[tuple, 'GroupElement']:
    return {g.key: g for g in elements}


def sort_enumeration_order(elements) -> List['GroupElement']:
    """BFS order then lexicographic word, the fixed order used for greedy passes."""
    return sorted(elements, key=lambda g: (g.word_length, len(g.word), tuple(g.word)))
