import json
import logging
from pathlib import Path

import numpy as np
import pytest

from src.models.training import TrainConfig
from src.utils.config import PROJECT_ROOT, default_seed, load_config, replace_env_vars, resolve_path
from src.utils.errors import UsageError
from src.utils.logger import set_verbosity, setup_logger
from src.utils.validators import (
    is_constant_name, is_variable_name, validate_mask, validate_probability_vector, validate_unit_interval,
)

MINIMAL = {
    'program_path': 'programs/toy.slash',
    'npp_bindings': {'digit': {'flavor': 'nn', 'input_shape': [28, 28]}},
    'dataset': {'kind': 'mnist_addition'},
}


def write_config(path, data):
    path.write_text(json.dumps(data), encoding='utf-8')
    return path


class TestSettings:

    def test_load_default(self):
        config = load_config()
        assert config['solver']['max_candidates'] > 0
        assert config['logging']['level'] == 'INFO'

    def test_missing_section(self, tmp_path):
        path = tmp_path / "settings.yaml"
        path.write_text("solver: {}\n")
        with pytest.raises(ValueError, match="circuit"):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_config(tmp_path / "none.yaml")

    def test_env_substitution(self, monkeypatch):
        monkeypatch.setenv('SLASH_TEST_DIR', '/tmp/runs')
        assert replace_env_vars("dir: ${SLASH_TEST_DIR}") == "dir: /tmp/runs"
        assert replace_env_vars("dir: ${SLASH_UNDEFINED_VAR}") == "dir: ${SLASH_UNDEFINED_VAR}"

    def test_resolve_path(self):
        assert resolve_path("programs") == PROJECT_ROOT / "programs"
        assert resolve_path("/abs") == Path("/abs")

    def test_default_seed(self, monkeypatch):
        monkeypatch.setenv('SLASH_SEED', '42')
        assert default_seed() == 42
        monkeypatch.setenv('SLASH_SEED', '')
        assert default_seed(7) == 7


class TestTrainConfig:

    def test_defaults(self, tmp_path):
        config = TrainConfig.load(write_config(tmp_path / "train.json", MINIMAL))
        assert config.batch_size == 100
        assert config.schedule.period == 1
        assert config.schedule.weighting == 'unit'
        assert config.optimizer.learning_rate == 0.005
        assert config.program_path == str(tmp_path / "programs" / "toy.slash")

    def test_absolute_program_path(self, tmp_path):
        data = dict(MINIMAL, program_path=str(tmp_path / "p.slash"))
        assert TrainConfig.load(write_config(tmp_path / "train.json", data)).program_path == str(tmp_path / "p.slash")

    @pytest.mark.parametrize("change", [
        {'batch_size': 0},
        {'unknown': 1},
        {'schedule': {'weighting': 'inverse'}},
        {'npp_bindings': {'d': {'flavor': 'nn+pc', 'input_shape': [3]}}},
        {'npp_bindings': {'d': {'flavor': 'cnn', 'input_shape': [3]}}},
        {'dataset': {'kind': 'mnist_addition', 'missing': 1.0}},
        {'dataset': {'kind': 'mnist_addition', 'downscale': 10}},
    ])
    def test_invalid(self, tmp_path, change):
        with pytest.raises(UsageError, match="configuração inválida"):
            TrainConfig.load(write_config(tmp_path / "train.json", dict(MINIMAL, **change)))

    def test_bad_json(self, tmp_path):
        path = tmp_path / "train.json"
        path.write_text("{")
        with pytest.raises(UsageError, match="JSON inválido"):
            TrainConfig.load(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(UsageError):
            TrainConfig.load(tmp_path / "none.json")

    @pytest.mark.parametrize("name", ["train_mnist.json", "train_mnist_pc.json", "train_attribute_world.json"])
    def test_shipped_configs(self, name):
        config = TrainConfig.load(PROJECT_ROOT / "config" / name)
        assert Path(config.program_path).exists()


class TestLogger:

    def test_stderr_only(self, capsys):
        logger = setup_logger("slash.test")
        logger.info("mensagem")
        captured = capsys.readouterr()
        assert captured.out == ""
        assert "mensagem" in captured.err

    def test_verbosity(self):
        setup_logger("slash.verbosity")
        set_verbosity('DEBUG', "slash.verbosity")
        assert logging.getLogger("slash.verbosity").level == logging.DEBUG


class TestValidators:

    def test_names(self):
        assert is_variable_name("X1")
        assert not is_variable_name("x")
        assert is_constant_name("i1")
        assert not is_constant_name("_a")

    def test_probability_vector(self):
        assert validate_probability_vector(np.array([0.25, 0.75]))
        assert not validate_probability_vector(np.array([0.5, 0.6]))
        assert validate_probability_vector(np.array([0.5, 0.6]), normalized=False)
        assert not validate_probability_vector(np.array([-0.1, 1.1]))
        assert not validate_probability_vector(np.array([np.nan, 1.0]))

    def test_mask_and_range(self):
        assert validate_mask(None, (2, 2))
        assert not validate_mask(np.ones((2, 2)), (2, 2))
        assert validate_mask(np.ones((2, 2), dtype=bool), (2, 2))
        assert validate_unit_interval(np.array([2.0, 0.5]), np.array([False, True]))
        assert not validate_unit_interval(np.array([2.0, 0.5]))
