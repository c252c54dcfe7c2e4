"""
Configuration module for shadowtree.
Loads, validates and saves run configurations (JSON), and builds the group
model and cocycle specs they describe.
"""

import copy
import json
import logging
from pathlib import Path
from typing import List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from shadowtree.cocycles import (
    BUSEMANN_FUCHSIAN, BUSEMANN_TREE, CARTAN_MAGNITUDE, COCYCLE_KINDS, DUAL_PROJECTIVE, PROJECTIVE_OMEGA1,
    CocycleSpec, LinearFunctional, default_spec, omega,
)
from shadowtree.errors import ConfigError
from shadowtree.groups import FUCHSIAN, GROUP_MODE, LINEAR, MODEL_KINDS, SEMIGROUP_MODE, TREE, free_tree, matrix_model

logger = logging.getLogger(__name__)

# Every documented default lives here
DEFAULT_CONFIG = {
    'model': {
        'kind': TREE,
        'rank': 2,
        'metric_base': 2,
        'generators': None,
        'names': None,
        'exact': True,
        'mode': GROUP_MODE,
    },
    'cocycle': {
        'kind': None,
        'phi': None,
        'theta': None,
        'extra': [],
    },
    'construction': {
        'delta': None,
        'fraction': 0.8,
        'fractions': [],
        'enumeration_depth': 8,
        'certification_depth': 3,
        'certification_depths': [],
        'safety': 1.5,
        'candidate_depth': 2,
        'sample_radius': 4,
        'scan_radius': 4,
        'max_pairs': 20000,
        'max_candidates': 800,
        'max_elements': 250000,
        'max_nodes': 250000,
        'seed_words': None,
        'certify': True,
        'rays': 10,
    },
    'anosov': {
        'enabled': True,
        'theta': [1],
        'phi': None,
        'separations': [2, 3, 4, 5],
        'depth': None,
        'triples': 2000,
    },
    'tolerances': {
        'float_grid_bits': 40,
        'float_tolerance': 1e-9,
        'gap_margin': 0.02,
        'delta_tolerance': 0.05,
        'cap_samples': 1000,
        'growth_cap': 10.0,
    },
    'seed': 0,
    'output': {
        'directory': 'reports',
        'name': 'report',
        'emit': 'json',
        'excel': False,
    },
}

Entry = Union[int, float, str]


class ModelBlock(BaseModel):
    model_config = ConfigDict(extra='forbid')

    kind: str = TREE
    rank: int = 2
    metric_base: int = 2
    generators: Optional[List[List[List[Entry]]]] = None
    names: Optional[List[str]] = None
    exact: bool = True
    mode: str = GROUP_MODE

    @field_validator('kind')
    @classmethod
    def _known_kind(cls, value):
        if value not in MODEL_KINDS:
            raise ValueError(f"must be one of {', '.join(MODEL_KINDS)}")
        return value

    @field_validator('mode')
    @classmethod
    def _known_mode(cls, value):
        if value not in (GROUP_MODE, SEMIGROUP_MODE):
            raise ValueError(f"must be '{GROUP_MODE}' or '{SEMIGROUP_MODE}'")
        return value

    @model_validator(mode='after')
    def _generators_present(self):
        if self.kind == TREE:
            if self.rank < 2:
                raise ValueError("tree rank must be at least 2")
            if self.metric_base < 2:
                raise ValueError("tree metric_base must be at least 2")
        elif not self.generators:
            raise ValueError(f"{self.kind} model needs generators")
        return self


class CocycleBlock(BaseModel):
    model_config = ConfigDict(extra='forbid')

    kind: Optional[str] = None
    phi: Optional[Union[str, List[float]]] = None
    theta: Optional[List[int]] = None
    extra: List[str] = Field(default_factory=list)

    @field_validator('kind')
    @classmethod
    def _known_kind(cls, value):
        if value is not None and value not in COCYCLE_KINDS:
            raise ValueError(f"must be one of {', '.join(COCYCLE_KINDS)}")
        return value


class ConstructionBlock(BaseModel):
    model_config = ConfigDict(extra='forbid')

    delta: Optional[float] = None
    fraction: float = 0.8
    fractions: List[float] = Field(default_factory=list)
    enumeration_depth: int = Field(8, ge=1)
    certification_depth: int = Field(3, ge=2)
    certification_depths: List[int] = Field(default_factory=list)
    safety: float = Field(1.5, gt=0)
    candidate_depth: int = Field(2, ge=0)
    sample_radius: int = Field(4, ge=1)
    scan_radius: int = Field(4, ge=1)
    max_pairs: int = Field(20000, ge=1)
    max_candidates: int = Field(800, ge=2)
    max_elements: int = Field(250000, ge=1)
    max_nodes: int = Field(250000, ge=1)
    seed_words: Optional[List[List[int]]] = None
    certify: bool = True
    rays: int = Field(10, ge=0)

    @field_validator('fraction')
    @classmethod
    def _open_unit(cls, value):
        if not 0 < value < 1:
            raise ValueError("auto fraction must lie in (0, 1)")
        return value

    @field_validator('fractions')
    @classmethod
    def _all_open_unit(cls, values):
        for value in values:
            if not 0 < value < 1:
                raise ValueError(f"sequence fraction {value} must lie in (0, 1)")
        return values

    @model_validator(mode='after')
    def _depths_match_fractions(self):
        if self.certification_depths:
            expected = len(self.fractions) or 1
            if len(self.certification_depths) != expected:
                raise ValueError(f"certification_depths has {len(self.certification_depths)} entries, "
                                 f"expected {expected} (one per sequence fraction)")
        return self


class AnosovBlock(BaseModel):
    model_config = ConfigDict(extra='forbid')

    enabled: bool = True
    theta: List[int] = Field(default_factory=lambda: [1])
    phi: Optional[Union[str, List[float]]] = None
    separations: List[int] = Field(default_factory=lambda: [2, 3, 4, 5])
    depth: Optional[int] = None
    triples: int = Field(2000, ge=1)


class ToleranceBlock(BaseModel):
    model_config = ConfigDict(extra='forbid')

    float_grid_bits: int = Field(40, ge=8)
    float_tolerance: float = Field(1e-9, gt=0)
    gap_margin: float = Field(0.02, ge=0)
    delta_tolerance: float = Field(0.05, ge=0)
    cap_samples: int = Field(1000, ge=10)
    growth_cap: float = Field(10.0, ge=1)


class OutputBlock(BaseModel):
    model_config = ConfigDict(extra='forbid')

    directory: str = 'reports'
    name: str = 'report'
    emit: str = 'json'
    excel: bool = False

    @field_validator('emit')
    @classmethod
    def _known_format(cls, value):
        if value not in ('json', 'csv', 'both'):
            raise ValueError("must be 'json', 'csv' or 'both'")
        return value


class RunConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    model: ModelBlock = Field(default_factory=ModelBlock)
    cocycle: CocycleBlock = Field(default_factory=CocycleBlock)
    construction: ConstructionBlock = Field(default_factory=ConstructionBlock)
    anosov: AnosovBlock = Field(default_factory=AnosovBlock)
    tolerances: ToleranceBlock = Field(default_factory=ToleranceBlock)
    seed: int = 0
    output: OutputBlock = Field(default_factory=OutputBlock)

    def echo(self):
        """Plain dict of the validated configuration, for the report header."""
        return self.model_dump()


def _field_path(loc):
    path = ''
    for part in loc:
        if isinstance(part, int):
            path += f"[{part}]"
        else:
            path += f".{part}" if path else str(part)
    return path


def deep_merge(base, override):
    """Recursively merge ``override`` into a copy of ``base``."""
    merged = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def parse_config(data):
    """
    Validate a configuration dict merged over the defaults.

    Raises:
        ConfigError: with one ``path: reason`` entry per offending field
    """
    merged = deep_merge(DEFAULT_CONFIG, data or {})
    try:
        config = RunConfig.model_validate(merged)
    except ValidationError as exc:
        field_errors = [f"{_field_path(e['loc'])}: {e['msg']}" for e in exc.errors()]
        raise ConfigError("Invalid configuration: " + '; '.join(field_errors), field_errors) from None
    # matrix determinants and shapes are checked by building the model
    build_model(config)
    return config


def load_config(path):
    """
    Load a JSON configuration file.

    Args:
        path: path to the file

    Returns:
        RunConfig
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Configuration file not found: {path}", [f"config: {path} does not exist"])
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Configuration is not valid JSON: {exc}", [f"config: line {exc.lineno}: {exc.msg}"])
    logger.info("Loaded configuration from %s", path)
    return parse_config(data)


def save_config(config, path):
    """Write a configuration as UTF-8 JSON with indent 2."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(config.echo(), f, ensure_ascii=False, indent=2, sort_keys=True)
    return path


def update_config(config, **overrides):
    """
    New validated configuration with block overrides merged in.

    Example: update_config(config, construction={'fraction': 0.5}, seed=3)
    """
    return parse_config(deep_merge(config.echo(), overrides))


def build_model(config):
    """
    GroupModel described by the model block.

    Raises:
        ConfigError: bad rank, base or generator matrices (field path names the generator)
    """
    block = config.model
    tolerances = config.tolerances
    if block.kind == TREE:
        return free_tree(block.rank, metric_base=block.metric_base)
    try:
        return matrix_model(block.kind, block.generators, exact=block.exact, mode=block.mode, names=block.names,
                            tolerance=tolerances.float_tolerance, grid_bits=tolerances.float_grid_bits)
    except (ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"Cannot parse generators: {exc}", [f"model.generators: {exc}"]) from None


def _functional(value, d, label):
    if value is None or value == 'omega1':
        return omega(1, d)
    if isinstance(value, str):
        if value.startswith('omega') and value[5:].isdigit():
            return omega(int(value[5:]), d)
        raise ConfigError(f"Unknown functional {value}", [f"{label}: unknown functional {value!r}"])
    if len(value) != d:
        raise ConfigError("Functional has the wrong length", [f"{label}: expected {d} coefficients"])
    return LinearFunctional(tuple(float(x) for x in value), name='phi')


def _theta(values, d, label):
    theta = tuple(sorted({int(i) - 1 for i in values}))
    if any(i < 0 or i >= d - 1 for i in theta):
        raise ConfigError("Root index out of range", [f"{label}: roots are numbered 1..{d - 1}"])
    return theta


def _spec_for(kind, model, block):
    if kind == CARTAN_MAGNITUDE:
        d = model.dimension
        theta = _theta(block.theta, d, 'cocycle.theta') if block.theta else None
        return CocycleSpec(CARTAN_MAGNITUDE, phi=_functional(block.phi, d, 'cocycle.phi'), theta=theta)
    return CocycleSpec(kind)


def build_specs(config, model):
    """
    Primary magnitude spec and the extra specs fitted for comparability.

    Returns:
        tuple: (spec, extra_specs)
    """
    block = config.cocycle
    allowed = {TREE: {BUSEMANN_TREE},
               FUCHSIAN: {BUSEMANN_FUCHSIAN, PROJECTIVE_OMEGA1, DUAL_PROJECTIVE, CARTAN_MAGNITUDE},
               LINEAR: {PROJECTIVE_OMEGA1, DUAL_PROJECTIVE, CARTAN_MAGNITUDE}}[model.kind]
    for label, kind in [('cocycle.kind', block.kind)] + [(f"cocycle.extra[{i}]", k) for i, k in enumerate(block.extra)]:
        if kind is not None and kind not in allowed:
            raise ConfigError(f"Cocycle {kind} does not fit a {model.kind} model",
                              [f"{label}: {kind} is not available for {model.kind}"])
    spec = default_spec(model) if block.kind is None else _spec_for(block.kind, model, block)
    extra = [_spec_for(kind, model, block) for kind in block.extra]
    return spec, extra


def anosov_settings(config, model):
    """(theta, phi) for the Anosov stage in 0-based root indices."""
    d = model.dimension
    return _theta(config.anosov.theta, d, 'anosov.theta'), _functional(config.anosov.phi, d, 'anosov.phi')
