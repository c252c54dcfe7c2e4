"""
Tests for the staged pipeline, partial reports and sequence runs.
"""

import math
from pathlib import Path

import pytest

from shadowtree.config import load_config, parse_config, update_config
from shadowtree.errors import ConfigError
from shadowtree.pipeline import (
    COMPLETE,
    EXIT_CONFIG_ERROR,
    EXIT_FAILURE,
    EXIT_OK,
    PARTIAL,
    RunReport,
    run_pipeline,
    run_sequence,
)

CONFIG_DIR = Path(__file__).resolve().parent.parent / 'configs'


def _diagonal():
    return load_config(CONFIG_DIR / 'diagonal.json')


class TestDiagonalRun:
    """The diagonal semigroup has exact Anosov constants and a trivial cone."""

    @pytest.fixture(scope='class')
    def report(self):
        return run_pipeline(_diagonal())

    def test_complete(self, report):
        assert report.status == COMPLETE
        assert report.error is None
        assert report.exit_code == EXIT_OK

    def test_no_certificate_requested(self, report):
        assert 'certificate' not in report.sections
        assert report.sections['construction']['given_seed'] == ['D']
        assert report.sections['construction']['scales'] is None

    def test_anosov_sections(self, report):
        assert report.sections['anosov_fit']['C'] == pytest.approx(2 * math.log(2))
        assert report.sections['anosov_fit']['recheck_passed']
        assert report.sections['cone']['best_B'] == 1
        assert report.sections['dphi']['max_defect'] == pytest.approx(0.0, abs=1e-9)

    def test_exponent_sections(self, report):
        assert report.sections['word_length_exponent']['exact']
        assert report.sections['semigroup_profile']['insufficient_range']
        assert report.sections['semigroup']['nodes'] == 7
        assert report.sections['delta'] == {'value': 0.1, 'auto': False, 'fraction': None}
        assert report.sections['partial_sums']['by_depth'][0] == pytest.approx(1.0)

    def test_artifacts(self, report):
        assert {'ball', 'group_profile', 'semigroup_profile', 'enumeration', 'hull'} <= set(report.artifacts)
        assert len(report.artifacts['ball']) == 13

    def test_telemetry_kept_apart(self, report):
        assert 'telemetry' not in report.to_dict()
        assert set(report.telemetry['stages']) == {'enumerate', 'estimate_group_exponent', 'construct', 'certify',
                                                   'enumerate_semigroup', 'exponents', 'anosov'}


class TestPartialReports:
    """A failing stage ends the run and names itself."""

    def test_scale_stage_failure(self):
        """At base 2 no two ends of the radius-3 ball are within eps_tilde/4 = 1/8."""
        config = parse_config({'construction': {'enumeration_depth': 3, 'delta': 0.5, 'candidate_depth': 1}})
        report = run_pipeline(config)
        assert report.status == PARTIAL
        assert report.stage == 'derive_scales'
        assert report.error['code'] == 'scale-infeasible'
        assert report.exit_code == EXIT_FAILURE
        assert 'group_profile' in report.sections

    def test_auto_delta_needs_range(self):
        config = parse_config({'construction': {'enumeration_depth': 2}})
        report = run_pipeline(config)
        assert report.stage == 'estimate_group_exponent'
        assert report.error['code'] == 'insufficient-range'
        assert report.exit_code == EXIT_FAILURE

    def test_exit_code_mapping(self):
        report = RunReport(config={})
        report.error = {'code': 'config-error', 'message': '', 'details': {}}
        assert report.exit_code == EXIT_CONFIG_ERROR
        report.error = {'code': 'seed-not-found', 'message': '', 'details': {}}
        assert report.exit_code == 3
        report.error = None
        report.sections['certificate'] = {'status': 'FAIL'}
        assert report.exit_code == 2


class TestSequence:
    """Runs at increasing fractions of the group exponent."""

    def test_two_fractions(self):
        config = update_config(_diagonal(), construction={'fractions': [0.6, 0.3]})
        sequence = run_sequence(config)
        data = sequence.to_dict()
        assert data['mode'] == 'sequence'
        assert len(sequence.runs) == 2
        deltas = [row['delta'] for row in sequence.rows()]
        assert deltas[0] < deltas[1]
        assert deltas[1] == pytest.approx(2 * deltas[0])
        assert all(run.status == COMPLETE for run in sequence.runs)
        assert sequence.exit_code == EXIT_OK
        assert list(sequence.to_frame().columns) == ['delta', 'delta_hat', 'status', 'certificate', 'stage']

    def test_depth_count_must_match(self):
        with pytest.raises(ConfigError) as info:
            update_config(_diagonal(), construction={'fractions': [0.3, 0.6], 'certification_depths': [4]})
        assert info.value.field_errors[0].startswith('construction')

    def test_single_depth_without_fractions(self):
        config = update_config(_diagonal(), construction={'certification_depths': [5]})
        assert config.construction.certification_depths == [5]

    def test_depths_follow_their_fractions(self):
        config = update_config(_diagonal(), construction={'fractions': [0.6, 0.3], 'certification_depths': [3, 4]})
        sequence = run_sequence(config)
        echoed = [run.config['construction'] for run in sequence.runs]
        assert [c['fraction'] for c in echoed] == [0.3, 0.6]
        assert [c['certification_depth'] for c in echoed] == [4, 3]


class TestShippedConfigs:
    """End-to-end runs of the configurations in configs/."""

    @pytest.fixture(scope='class')
    def free_tree_report(self):
        return run_pipeline(load_config(CONFIG_DIR / 'free_tree.json'))

    def test_free_tree_certifies(self, free_tree_report):
        report = free_tree_report
        assert report.error is None
        assert report.certificate_status == 'PASS'
        assert 'refinements' in report.sections['certificate']
        assert report.sections['construction']['selection']['seed'] == ['aaaa', 'aaba', 'aaBa']

    def test_free_tree_exponents(self, free_tree_report):
        sections = free_tree_report.sections
        delta = sections['delta']['value']
        exponent = sections['word_length_exponent']
        assert exponent['exact']
        assert exponent['value'] == pytest.approx(math.log(3))
        delta_hat = sections['semigroup_profile']['delta_hat']
        assert delta - 0.05 <= delta_hat <= math.log(3) - 0.02
        assert sections['gap_report']['violations'] == []

    def test_free_tree_first_generation_bound(self, free_tree_report):
        sections = free_tree_report.sections
        delta = sections['delta']['value']
        patterson = sections['patterson_sullivan']
        assert patterson['C1_stable']
        bounds = [run['C1'] for run in patterson['runs'] if 'C1' in run]
        assert bounds
        # every seed cylinder carries a third of the mass
        assert bounds == pytest.approx([math.exp(4 * delta) / 3] * len(bounds), rel=1e-3)

    def test_tree_sequence_increases_below_the_group(self):
        sequence = run_sequence(load_config(CONFIG_DIR / 'tree_sequence.json'))
        assert [run.certificate_status for run in sequence.runs] == ['PASS'] * 3
        assert [len(run.sections['construction']['selection']['seed']) for run in sequence.runs] == [3, 9, 27]
        assert sequence.increasing
        assert sequence.below_group

    def test_schottky_certifies_below_the_group(self):
        report = run_pipeline(load_config(CONFIG_DIR / 'schottky.json'))
        sections = report.sections
        assert report.certificate_status == 'PASS'
        assert sections['semigroup_profile']['delta_hat'] < sections['group_profile']['delta_hat']
        assert sections['gap_report']['violations'] == []

    def test_positive_cone_reports_wall_margin(self):
        report = run_pipeline(load_config(CONFIG_DIR / 'positive_sl2.json'))
        cone = report.sections['cone']
        assert cone['b'] is not None and cone['b'] > 0
        assert report.sections['anosov_fit']['C'] > 0
