"""Config validation, file round-trips, and disorder-sampling contracts."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinprobe import ConfigError, ExperimentConfig, sample_realization


class TestConfigValidation:
    def test_defaults_valid(self):
        ExperimentConfig().validate()

    def test_empty_jx_list(self):
        with pytest.raises(ConfigError, match="jx_list"):
            ExperimentConfig(jx_list=()).validate()

    def test_negative_jx(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(jx_list=(0.0, -0.5)).validate()

    def test_unknown_engine(self):
        with pytest.raises(ConfigError, match="unknown engines"):
            ExperimentConfig(engines=("exact", "tensor")).validate()

    def test_bad_temperature(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(kT=0.0).validate()

    def test_kernel_rates_must_pair(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(p=1.0).validate()

    def test_schema_version_checked(self):
        with pytest.raises(ConfigError, match="schema_version"):
            ExperimentConfig(schema_version=99).validate()

    def test_n_cut_bounded_by_bath(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(n_bath=3, n_cut=9).validate()


class TestConfigIO:
    def test_file_round_trip(self, tmp_path):
        config = ExperimentConfig(n_bath=4, n_cut=10, seed=7, jx_list=(0.0, 1.0),
                                  engines=("nmme",))
        path = tmp_path / "config.json"
        config.to_file(path)
        loaded = ExperimentConfig.from_file(path)
        assert loaded == config

    def test_unknown_keys_rejected(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text('{"n_bath": 4, "temperature": 0.25}')
        with pytest.raises(ConfigError, match="unknown config keys"):
            ExperimentConfig.from_file(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            ExperimentConfig.from_file(tmp_path / "nope.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="not valid JSON"):
            ExperimentConfig.from_file(path)

    def test_override(self):
        config = ExperimentConfig().override(n_bath=6, realizations=2)
        assert config.n_bath == 6 and config.realizations == 2
        with pytest.raises(ConfigError):
            ExperimentConfig().override(kT=-1.0)


class TestSampling:
    CONFIG = ExperimentConfig(n_bath=5, seed=123)

    def test_determinism(self):
        a = sample_realization(self.CONFIG, 0.5, 3)
        b = sample_realization(self.CONFIG, 0.5, 3)
        np.testing.assert_array_equal(a.bz, b.bz)
        np.testing.assert_array_equal(a.bx, b.bx)
        np.testing.assert_array_equal(a.lam, b.lam)
        np.testing.assert_array_equal(a.jx, b.jx)

    def test_streams_independent(self):
        a = sample_realization(self.CONFIG, 0.5, 0)
        b = sample_realization(self.CONFIG, 0.5, 1)
        assert not np.array_equal(a.bz, b.bz)

    def test_jx_keyed(self):
        a = sample_realization(self.CONFIG, 0.5, 0)
        b = sample_realization(self.CONFIG, 1.0, 0)
        assert not np.array_equal(a.jx, b.jx)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(min_value=0.0, max_value=2.0), st.integers(min_value=0, max_value=50))
    def test_ranges(self, jx, stream):
        config = ExperimentConfig(n_bath=4, seed=99)
        m = sample_realization(config, jx, stream)
        half = 0.5 * config.delta
        assert np.all(m.bz >= config.b0z - half) and np.all(m.bz <= config.b0z + half)
        assert np.all(m.bx >= config.b0z - half) and np.all(m.bx <= config.b0z + half)
        assert np.all(np.abs(m.lam) <= config.lambda_max)
        upper = m.jx[np.triu_indices(4, k=1)]
        assert np.all(np.abs(upper) <= jx)
        assert np.all(m.jx[np.tril_indices(4)] == 0.0)

    def test_zero_detuning_degenerate(self):
        config = ExperimentConfig(n_bath=3, delta=0.0, seed=5)
        m = sample_realization(config, 0.5, 0)
        np.testing.assert_array_equal(m.bz, np.full(3, config.b0z))
        np.testing.assert_array_equal(m.bx, np.full(3, config.b0z))

    def test_zero_jx_no_couplings(self):
        m = sample_realization(self.CONFIG, 0.0, 2)
        np.testing.assert_array_equal(m.jx, np.zeros((5, 5)))

    def test_invalid_args(self):
        with pytest.raises(ConfigError):
            sample_realization(self.CONFIG, -0.1, 0)
        with pytest.raises(ConfigError):
            sample_realization(self.CONFIG, 0.5, -1)
