"""
Pipeline module for shadowtree.
Runs enumerate, group exponent, construction, certification, semigroup
exponents and the Anosov stage in order, and collects every result into a
RunReport. A failing stage ends the run with a partial report.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from shadowtree.anosov import anosov_fit, sweep_cone, triangle_defect
from shadowtree.certificate import certify, fit_comparability, semigroup_enumerate
from shadowtree.cocycles import magnitude
from shadowtree.config import anosov_settings, build_model, build_specs, update_config
from shadowtree.construction import (
    choose_base_points, complete_magnitude, construct_seed, derive_scales, find_adjusters,
)
from shadowtree.errors import ConfigError, InsufficientRange, ShadowtreeError
from shadowtree.exponents import (
    annulus_sums, counting_profile, first_generation_bound, gap_report, growth_lower_bound_check,
    partial_sums_by_depth, poincare_partial, ps_truncation, word_length_exponent,
)
from shadowtree.groups import LINEAR, TREE, enumerate_ball
from shadowtree.shadows import CapSamples, shadow, shadows_frame

logger = logging.getLogger(__name__)

COMPLETE = 'complete'
PARTIAL = 'partial'

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CERTIFICATE_FAIL = 2
EXIT_SEED_NOT_FOUND = 3
EXIT_CONFIG_ERROR = 4

# Offsets above delta_hat at which the truncated measure is built
PS_OFFSETS = (0.3, 0.15, 0.05)
PS_STABILITY = 0.5


@dataclass
class RunReport:
    """Everything one pipeline run produced, complete or partial.

    ``sections`` holds JSON-ready dicts keyed by result name; ``artifacts``
    holds the DataFrames that go into the CSV bundle and the workbook.
    Telemetry is kept apart so the canonical JSON stays deterministic.
    """

    config: dict
    metric: str = ''
    status: str = COMPLETE
    stage: str = ''
    error: Optional[dict] = None
    sections: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict, repr=False)
    telemetry: dict = field(default_factory=lambda: {'stages': {}, 'counts': {}})

    @property
    def certificate_status(self):
        certificate = self.sections.get('certificate')
        return certificate['status'] if certificate else None

    @property
    def exit_code(self):
        if self.error is not None:
            code = self.error.get('code')
            if code == 'config-error':
                return EXIT_CONFIG_ERROR
            if code == 'seed-not-found':
                return EXIT_SEED_NOT_FOUND
            if self.certificate_status == 'FAIL':
                return EXIT_CERTIFICATE_FAIL
            return EXIT_FAILURE
        if self.certificate_status == 'FAIL':
            return EXIT_CERTIFICATE_FAIL
        return EXIT_OK

    def fail(self, stage, exc):
        self.status = PARTIAL
        self.stage = stage
        if isinstance(exc, ShadowtreeError):
            self.error = exc.to_dict()
        else:
            self.error = {'code': 'invalid-input', 'message': str(exc), 'details': {}}
        trace = self.error['details'].get('trace')
        if trace:
            self.artifacts['w_trace'] = pd.DataFrame(trace)
        logger.error("Stage %s failed: %s", stage, self.error['message'])

    def to_dict(self):
        data = {
            'config': self.config,
            'metric': self.metric,
            'status': self.status,
            'stage': self.stage,
            'error': self.error,
            'exit_code': self.exit_code,
        }
        data.update(self.sections)
        return data


def _samples(state):
    model = state['model']
    if model.kind != LINEAR:
        return None
    if 'samples' not in state:
        config = state['config']
        state['samples'] = CapSamples.build(model.dimension, n=config.tolerances.cap_samples,
                                            rng=np.random.default_rng(config.seed))
    return state['samples']


def _enumerate(state, report):
    config = state['config']
    ball = state.get('ball')
    if ball is None:
        model = build_model(config)
        ball = enumerate_ball(model, config.construction.enumeration_depth,
                              max_elements=config.construction.max_elements)
    else:
        # a reused ball brings its own model
        model = ball.model
    spec, extra = build_specs(config, model)
    state.update(model=model, spec=spec, extra=extra, ball=ball)
    report.metric = model.describe_metric()
    report.telemetry['counts']['ball'] = len(ball)
    report.sections['ball'] = {'radius': ball.radius, 'size': len(ball), 'truncated': ball.truncated}
    report.artifacts['ball'] = ball.to_frame()


def _group_exponent(state, report):
    ball, spec = state['ball'], state['spec']
    if 'group_profile' not in state:
        complete_below = complete_magnitude(ball, spec)
        state['group_profile'] = counting_profile([magnitude(g, spec) for g in ball], complete_below=complete_below,
                                                  convention=spec.convention, depth=ball.radius,
                                                  truncated=ball.truncated)
    profile = state['group_profile']
    report.sections['group_profile'] = profile.to_dict()
    report.artifacts['group_profile'] = profile.to_frame()

    construction = state['config'].construction
    if construction.delta is not None:
        delta = float(construction.delta)
    else:
        if profile.insufficient_range:
            raise InsufficientRange("Group profile too short to set delta automatically", window=profile.window)
        delta = construction.fraction * profile.delta_hat
    if delta <= 0:
        raise InsufficientRange(f"Target delta {delta:.6g} is not positive", delta=delta)
    state['delta'] = delta
    report.sections['delta'] = {'value': delta, 'auto': construction.delta is None,
                                'fraction': construction.fraction if construction.delta is None else None}
    logger.info("Target delta=%.6g (group delta_hat=%.6g)", delta, profile.delta_hat)


def _scales_for_given_seed(state):
    construction = state['config'].construction
    ball, spec = state['ball'], state['spec']
    try:
        adjusters = find_adjusters(ball, construction.candidate_depth, construction.sample_radius)
        x, y, _, _ = choose_base_points(ball, adjusters.epsilon_tilde, spec)
        return derive_scales(x, y, adjusters.epsilon_tilde)
    except ShadowtreeError as exc:
        if construction.certify:
            raise
        logger.warning("No scales for the given seed (%s); shadow checks skipped", exc)
        return None


def _construct(state, report):
    config = state['config']
    construction = config.construction
    model = state['model']
    if construction.seed_words:
        seed = [model.element(word) for word in construction.seed_words]
        state.update(seed=seed, scales=_scales_for_given_seed(state), refinements=0)
        report.sections['construction'] = {
            'given_seed': [model.format_word(s.word) for s in seed],
            'scales': state['scales'].to_dict() if state['scales'] is not None else None,
        }
        return
    progress = state.setdefault('progress', {})
    result = construct_seed(state['ball'], state['delta'], state['spec'],
                            candidate_depth=construction.candidate_depth, sample_radius=construction.sample_radius,
                            safety=construction.safety, scan_radius=construction.scan_radius,
                            max_pairs=construction.max_pairs, max_candidates=construction.max_candidates,
                            rng=state['rng'], samples=_samples(state), progress=progress)
    state.update(seed=result.seed, scales=result.scales, refinements=result.selection.refinements)
    report.sections['construction'] = result.to_dict()
    report.artifacts['w_trace'] = pd.DataFrame(result.selection.trace)


def _certify(state, report):
    construction = state['config'].construction
    if not construction.certify:
        logger.info("Certification disabled by configuration")
        return
    certificate = certify(state['seed'], state['scales'], state['delta'], construction.certification_depth,
                          spec=state['spec'], specs=state['extra'], samples=_samples(state),
                          max_nodes=construction.max_nodes, workers=state['threads'], rays=construction.rays,
                          rng=state['rng'])
    certificate.refinements = state.get('refinements', 0)
    state['certificate'] = certificate
    report.sections['certificate'] = certificate.to_dict()


def _enumerate_semigroup(state, report):
    config = state['config']
    depth = max(config.construction.certification_depth, config.anosov.depth or 0)
    enumeration = semigroup_enumerate(state['seed'], depth, [state['spec']] + state['extra'],
                                      max_nodes=config.construction.max_nodes)
    state['enumeration'] = enumeration
    report.telemetry['counts']['semigroup_nodes'] = len(enumeration)
    report.sections['semigroup'] = {'depth': depth, 'nodes': len(enumeration),
                                    'unique_elements': len(enumeration.unique_elements()),
                                    'collisions': enumeration.collisions}
    report.artifacts['enumeration'] = enumeration.to_frame()


def _distinct(nodes, depth):
    """First node of each element at word length <= depth, with its magnitude index."""
    seen = {}
    for i, node in enumerate(nodes):
        if node.level <= depth and node.element.key not in seen:
            seen[node.element.key] = i
    return sorted(seen.values())


def _semigroup_profile(enumeration, convention, depth):
    values = enumeration.magnitudes[convention]
    kept = [i for i in _distinct(enumeration.nodes, depth) if enumeration.nodes[i].level >= 1]
    deepest = [values[i] for i, n in enumerate(enumeration.nodes) if n.level == depth]
    return counting_profile([values[i] for i in kept], complete_below=min(deepest), convention=convention,
                            depth=depth)


def _exponents(state, report):
    config = state['config']
    tolerances = config.tolerances
    enumeration, spec, seed = state['enumeration'], state['spec'], state['seed']
    L = config.construction.certification_depth
    convention = spec.convention
    values = enumeration.magnitudes[convention]

    profile = _semigroup_profile(enumeration, convention, L)
    report.sections['semigroup_profile'] = profile.to_dict()
    report.artifacts['semigroup_profile'] = profile.to_frame()

    certificate = state.get('certificate')
    if certificate is not None:
        B1 = certificate.fits[convention]['depth_L'].B
    else:
        B1 = fit_comparability([n.level for n in enumeration.nodes], values, L).B
    gap = gap_report(state['group_profile'], profile, state['delta'], B1=B1, seed_size=len(seed),
                     tol=tolerances.delta_tolerance, margin=tolerances.gap_margin)
    report.sections['gap_report'] = gap.to_dict()

    shallow = _semigroup_profile(enumeration, convention, L - 1) if L >= 3 else None
    growth = growth_lower_bound_check(profile, second=shallow, cap=tolerances.growth_cap)
    report.sections['growth'] = growth.to_dict()

    per_level = []
    for k in range(L + 1):
        per_level.append(len({n.element.key for n in enumeration.nodes if n.level == k}))
    report.sections['word_length_exponent'] = word_length_exponent(per_level).to_dict()

    indices = _distinct(enumeration.nodes, L)
    elements = [enumeration.nodes[i].element for i in indices]
    magnitudes = [values[i] for i in indices]
    levels = [enumeration.nodes[i].level for i in indices]
    report.sections['patterson_sullivan'] = _patterson_sullivan(state, report, elements, magnitudes, profile)

    sums = partial_sums_by_depth(levels, magnitudes, state['delta'])
    increments = [b - a for a, b in zip(sums, sums[1:])]
    report.sections['partial_sums'] = {
        's': state['delta'],
        'by_depth': sums,
        'increments': increments,
        'consistent_with_divergence': bool(increments) and min(increments) > 0
                                      and increments[-1] >= 0.5 * increments[0],
        'total': poincare_partial(magnitudes, state['delta']),
    }
    report.artifacts['annulus_sums'] = annulus_sums(magnitudes, state['delta'])


def _patterson_sullivan(state, report, elements, magnitudes, profile):
    delta_hat = profile.delta_hat
    scales = state.get('scales')
    spec, seed = state['spec'], state['seed']
    shadows = None
    if scales is not None:
        shadows = [shadow(g, scales.t0 / 2.0, _samples(state)) for g in seed]
        report.artifacts['shadows'] = shadows_frame(shadows)
    norms = [magnitude(g, spec) for g in seed]
    runs = []
    for offset in PS_OFFSETS:
        s = delta_hat + offset
        truncation = ps_truncation(elements, magnitudes, s, delta_hat)
        entry = {'s': s, 'normalizer': truncation.normalizer, 'weight_sum': math.fsum(truncation.weights.tolist())}
        if shadows is not None:
            entry['C1'] = first_generation_bound(truncation, shadows, state['delta'], norms)
        runs.append(entry)
        if offset == PS_OFFSETS[-1]:
            report.artifacts['ps_measure'] = truncation.to_frame()
    bounds = [r['C1'] for r in runs if 'C1' in r]
    stable = None
    if bounds:
        stable = max(bounds) - min(bounds) <= PS_STABILITY * max(bounds)
    return {'delta_hat': delta_hat, 'runs': runs, 'C1_stable': stable}


def _anosov(state, report):
    config = state['config']
    model = state['model']
    if model.kind == TREE or not config.anosov.enabled:
        return
    theta, phi = anosov_settings(config, model)
    depth = config.anosov.depth or config.construction.certification_depth
    nodes = [n for n in state['enumeration'].nodes if n.level <= depth]
    fit = anosov_fit(nodes, theta, depth=depth)
    report.sections['anosov_fit'] = fit.to_dict()
    report.artifacts['hull'] = fit.hull_frame()

    sweep = sweep_cone(nodes, theta, separations=tuple(config.anosov.separations),
                       max_pairs=config.construction.max_pairs, rng=state['rng'])
    report.sections['cone'] = sweep.to_dict()
    cone = sweep.cones.get(sweep.best) if sweep.best is not None else None
    if cone is not None:
        report.artifacts['cone_vectors'] = cone.to_frame()
    defect = triangle_defect(nodes, phi, cone=cone if cone is not None and cone.admissible else None,
                             triples=config.anosov.triples, max_pairs=config.construction.max_pairs,
                             rng=state['rng'])
    report.sections['dphi'] = defect.to_dict()


STAGES = (
    ('enumerate', _enumerate),
    ('estimate_group_exponent', _group_exponent),
    ('construct', _construct),
    ('certify', _certify),
    ('enumerate_semigroup', _enumerate_semigroup),
    ('exponents', _exponents),
    ('anosov', _anosov),
)


def run_pipeline(config, ball=None, threads=1, cache=None):
    """
    Run every stage on a validated configuration.

    Args:
        config: RunConfig
        ball: previously enumerated Ball to reuse
        threads: worker threads for certification
        cache: dict shared between runs of a sequence (ball, group profile)

    Returns:
        RunReport; complete, or partial with the failing stage's diagnostics
    """
    report = RunReport(config=config.echo())
    state = {'config': config, 'threads': max(1, int(threads)), 'rng': np.random.default_rng(config.seed),
             'ball': ball}
    if cache:
        state.update(cache)
    started = time.perf_counter()
    for name, step in STAGES:
        report.stage = name
        began = time.perf_counter()
        try:
            step(state, report)
        except (ShadowtreeError, ValueError, ArithmeticError) as exc:
            stage = state.get('progress', {}).get('stage', name) if name == 'construct' else name
            report.fail(stage, exc)
            break
        finally:
            report.telemetry['stages'][name] = time.perf_counter() - began
    report.telemetry['wall_clock'] = time.perf_counter() - started
    if cache is not None:
        for key in ('ball', 'model', 'group_profile', 'samples'):
            if key in state:
                cache[key] = state[key]
    logger.info("Run finished: %s at stage %s (exit %d)", report.status, report.stage, report.exit_code)
    return report


@dataclass
class SequenceReport:
    """Runs at increasing target exponents sharing one group enumeration."""

    runs: list
    group_delta_hat: float
    increasing: bool
    below_group: bool

    @property
    def exit_code(self):
        return next((r.exit_code for r in self.runs if r.exit_code != EXIT_OK), EXIT_OK)

    def rows(self):
        out = []
        for run in self.runs:
            delta = run.sections.get('delta', {}).get('value')
            profile = run.sections.get('semigroup_profile', {})
            out.append({'delta': delta, 'delta_hat': profile.get('delta_hat'), 'status': run.status,
                        'certificate': run.certificate_status, 'stage': run.stage})
        return out

    def to_frame(self):
        return pd.DataFrame(self.rows(), columns=['delta', 'delta_hat', 'status', 'certificate', 'stage'])

    def to_dict(self):
        return {
            'mode': 'sequence',
            'group_delta_hat': self.group_delta_hat,
            'increasing': self.increasing,
            'below_group': self.below_group,
            'sequence': self.rows(),
            'runs': [run.to_dict() for run in self.runs],
            'exit_code': self.exit_code,
        }


def run_sequence(config, threads=1):
    """
    Run the pipeline once per configured fraction, in increasing order.

    ``construction.certification_depths`` gives one depth per fraction;
    otherwise every run uses ``certification_depth``.

    Returns:
        SequenceReport
    """
    construction = config.construction
    fractions = list(construction.fractions) or [construction.fraction]
    depths = list(construction.certification_depths) or [construction.certification_depth] * len(fractions)
    if len(depths) != len(fractions):
        raise ConfigError(f"{len(depths)} certification depths for {len(fractions)} fractions",
                          ["construction.certification_depths: one depth per sequence fraction"])
    # depths travel with their fractions
    pairs = sorted(zip(fractions, depths))
    cache = {}
    runs = []
    for fraction, depth in pairs:
        logger.info("Sequence run at fraction %.4g, depth %d", fraction, depth)
        run_config = update_config(config, construction={'fraction': fraction, 'delta': None,
                                                         'certification_depth': depth})
        runs.append(run_pipeline(run_config, threads=threads, cache=cache))
    group = cache.get('group_profile')
    group_delta_hat = group.delta_hat if group is not None else 0.0
    estimates = [r.sections.get('semigroup_profile', {}).get('delta_hat') for r in runs]
    complete = all(e is not None for e in estimates)
    increasing = complete and all(a < b for a, b in zip(estimates, estimates[1:]))
    below_group = complete and all(e < group_delta_hat for e in estimates)
    if not (increasing and below_group):
        logger.warning("Sequence estimates %s do not increase strictly below %.6g", estimates, group_delta_hat)
    return SequenceReport(runs=runs, group_delta_hat=group_delta_hat, increasing=increasing, below_group=below_group)
