"""
Tests for configuration loading, validation and model construction.
"""

from pathlib import Path

import pytest

from shadowtree.config import (
    DEFAULT_CONFIG,
    anosov_settings,
    build_model,
    build_specs,
    load_config,
    parse_config,
    save_config,
    update_config,
)
from shadowtree.errors import ConfigError
from shadowtree.groups import LINEAR, TREE

CONFIG_DIR = Path(__file__).resolve().parent.parent / 'configs'


class TestParseConfig:
    """Validation with one path-qualified message per bad field."""

    def test_defaults(self):
        config = parse_config({})
        assert config.model.kind == TREE
        assert config.construction.fraction == 0.8
        assert config.construction.certification_depth == 3
        assert config.tolerances.cap_samples == 1000
        assert config.echo()['output'] == DEFAULT_CONFIG['output']

    def test_bad_determinant_names_generator(self):
        data = {'model': {'kind': 'linear', 'generators': [[[1, 0], [0, 1]], [[2, 0], [0, 1]]]}}
        with pytest.raises(ConfigError) as info:
            parse_config(data)
        assert info.value.field_errors == ["model.generators[1]: determinant 2 != 1"]

    def test_fraction_outside_unit_interval(self):
        with pytest.raises(ConfigError) as info:
            parse_config({'construction': {'fraction': 1.5}})
        assert len(info.value.field_errors) == 1
        assert info.value.field_errors[0].startswith('construction.fraction')

    def test_unknown_key(self):
        with pytest.raises(ConfigError) as info:
            parse_config({'construction': {'bogus': 1}})
        assert info.value.field_errors[0].startswith('construction.bogus')

    def test_matrix_model_needs_generators(self):
        with pytest.raises(ConfigError):
            parse_config({'model': {'kind': 'fuchsian'}})

    def test_certification_depth_minimum(self):
        with pytest.raises(ConfigError):
            parse_config({'construction': {'certification_depth': 1}})


class TestFiles:
    """JSON files on disk."""

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / 'absent.json')

    def test_invalid_json(self, tmp_path):
        path = tmp_path / 'broken.json'
        path.write_text('{"model": ', encoding='utf-8')
        with pytest.raises(ConfigError):
            load_config(path)

    def test_save_and_load(self, tmp_path):
        config = load_config(CONFIG_DIR / 'diagonal.json')
        path = save_config(config, tmp_path / 'copy.json')
        assert load_config(path).echo() == config.echo()

    def test_update(self):
        config = update_config(parse_config({}), construction={'fraction': 0.5}, seed=3)
        assert config.construction.fraction == 0.5
        assert config.seed == 3
        assert config.construction.enumeration_depth == 8

    @pytest.mark.parametrize("name", ["diagonal.json", "free_tree.json", "positive_sl2.json", "schottky.json",
                                      "tree_sequence.json"])
    def test_shipped_configs_load(self, name):
        config = load_config(CONFIG_DIR / name)
        model = build_model(config)
        spec, _ = build_specs(config, model)
        assert spec.convention


class TestBuilders:
    """Models and magnitude specs described by a configuration."""

    def test_tree_model(self):
        model = build_model(parse_config({'model': {'rank': 3, 'metric_base': 64}}))
        assert model.kind == TREE
        assert model.metric_base == 64
        assert len(model.generators) == 6

    def test_diagonal_specs(self):
        config = load_config(CONFIG_DIR / 'diagonal.json')
        model = build_model(config)
        spec, extra = build_specs(config, model)
        assert model.kind == LINEAR
        assert spec.convention == "cartan-magnitude(omega1; theta=1)"
        assert extra == []

    def test_cocycle_must_fit_model(self):
        config = parse_config({'cocycle': {'kind': 'cartan-magnitude'}})
        with pytest.raises(ConfigError) as info:
            build_specs(config, build_model(config))
        assert info.value.field_errors[0].startswith('cocycle.kind')

    def test_anosov_settings(self):
        config = load_config(CONFIG_DIR / 'diagonal.json')
        theta, phi = anosov_settings(config, build_model(config))
        assert theta == (0,)
        assert phi.name == 'omega1'

    def test_root_index_out_of_range(self):
        config = update_config(load_config(CONFIG_DIR / 'diagonal.json'), anosov={'theta': [2]})
        with pytest.raises(ConfigError):
            anosov_settings(config, build_model(config))
