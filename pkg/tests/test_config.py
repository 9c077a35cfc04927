import numpy as np
import pytest

from infohop.config import ExperimentConfig, load_config, save_config
from infohop.errors import ParameterError
from infohop.pid import GoalWeights
from infohop.reporting import read_csv, write_csv


class TestDefaults:
    def test_model_parameter_defaults(self):
        cfg = ExperimentConfig()
        assert cfg.network.N == 100
        assert cfg.network.w_T == 2.3
        assert cfg.network.lambda_r == 1e-3
        assert cfg.training.optimizer == "adam"
        assert cfg.training.eta == 0.05
        assert cfg.training.epochs == 5000
        assert cfg.training.reps == 1
        assert cfg.binning.n_t == 2
        assert cfg.binning.n_r == 60
        assert cfg.binning.sigma_t == 1e-6
        assert cfg.binning.sigma_r == 0.5
        assert cfg.binning.padding == 1.0
        assert cfg.testing.sequential is False
        assert cfg.testing.N_iter == 100
        assert cfg.testing.theta == 0.95

    def test_defaults_survive_empty_sections(self):
        cfg = ExperimentConfig.from_dict({"network": {}, "training": {}})
        assert cfg.training.epochs == 5000
        assert cfg.network.w_T == 2.3


class TestRoundTrip:
    def test_yaml_round_trip_identity(self, tmp_path):
        cfg = ExperimentConfig.from_dict({
            "method": "hebbian",
            "network": {"N": 64, "lambda_r": 0.01},
            "training": {"epochs": 17},
            "goal": {"red": 0.5, "syn": -0.25},
            "patterns": {"source": "correlated", "persistence": 0.8, "m": 9},
            "run": {"seeds": [3, 1, 4], "jobs": 2},
        })
        path = tmp_path / "config.yaml"
        save_config(path, cfg)
        again = load_config(path)
        assert again == cfg
        save_config(tmp_path / "config2.yaml", again)
        assert (tmp_path / "config2.yaml").read_text() == path.read_text()

    def test_unknown_keys_rejected(self):
        with pytest.raises(ParameterError):
            ExperimentConfig.from_dict({"network": {"M": 3}})
        with pytest.raises(ParameterError):
            ExperimentConfig.from_dict({"nets": {}})


class TestValidation:
    def test_sequential_not_implemented(self):
        with pytest.raises(ParameterError):
            ExperimentConfig.from_dict({"testing": {"sequential": True}})

    def test_unknown_optimizer(self):
        with pytest.raises(ParameterError):
            ExperimentConfig.from_dict({"training": {"optimizer": "sgd"}})

    def test_correlated_needs_persistence(self):
        with pytest.raises(ParameterError):
            ExperimentConfig.from_dict({"patterns": {"source": "correlated"}})

    def test_pattern_count_from_alpha(self):
        cfg = ExperimentConfig.from_dict({"network": {"N": 50},
                                          "patterns": {"alpha": 0.3}})
        assert cfg.pattern_count() == 15

    def test_pattern_count_requires_m_or_alpha(self):
        with pytest.raises(ParameterError):
            ExperimentConfig().pattern_count()


class TestConversions:
    def test_goal_weights_order(self):
        cfg = ExperimentConfig.from_dict({"goal": {"unq_R": 1.0, "unq_T": 2.0,
                                                   "red": 3.0, "syn": 4.0, "res": 5.0}})
        assert cfg.goal_weights() == GoalWeights(1.0, 2.0, 3.0, 4.0, 5.0)

    def test_train_config_carries_table_parameters(self):
        cfg = ExperimentConfig()
        tc = cfg.train_config(seed=7)
        assert tc.epochs == 5000 and tc.eta == 0.05
        assert tc.target_weight == 2.3 and tc.lambda_r == 1e-3
        assert tc.binning.n_r == 60 and tc.binning.sigma_t == 1e-6
        assert tc.seed == 7

    def test_trainer_dispatch(self):
        assert ExperimentConfig.from_dict({"method": "hebbian"}).trainer().method == "hebbian"
        assert ExperimentConfig().trainer().method == "infomorphic"


class TestCsv:
    def test_write_read_round_trip(self, tmp_path):
        rows = [{"a": 1, "b": 0.25, "c": "x"}, {"a": 2, "b": -1.5e-9, "c": "y"}]
        path = write_csv(tmp_path / "t.csv", ("a", "b", "c"), rows)
        text = path.read_text()
        assert text.splitlines()[0] == "a,b,c"
        assert not any(line != line.rstrip() for line in text.splitlines())
        back = read_csv(path)
        assert float(back[1]["b"]) == -1.5e-9

    def test_floats_written_in_round_trip_form(self, tmp_path):
        value = 1.0 / 3.0
        path = write_csv(tmp_path / "f.csv", ("v",), [{"v": value}])
        assert float(read_csv(path)[0]["v"]) == value

    def test_numpy_scalars_normalized(self, tmp_path):
        path = write_csv(tmp_path / "n.csv", ("v",), [{"v": np.float64(0.1)}])
        assert path.read_text().splitlines()[1] == "0.1"
