# Import necessary libraries and packages
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import json
import logging
import pytest
from pydantic import ValidationError

from utils.config_handler import (
    EvalConfig, RunConfig, SynthConfig, TrainConfig, TransferConfig, default_synth_config,
    default_train_config, default_zoom_config, load_defaults
)
from utils.data_generator import write_synthetic
from utils.exceptions import UsageError
from utils.logger import setup_logger


@pytest.fixture
def run_json(tmp_path):
    cfg = SynthConfig(c_s=3, c_u=2, k=4, k_lat_signal=2, d=5, n_per_class=3, n_scales=2, seed=11)
    return write_synthetic(cfg, tmp_path / 'data')


def test_defaults_file_has_every_section():
    defaults = load_defaults()
    for section in ('train', 'transfer', 'synthetic', 'zoom', 'evaluation', 'logging_config'):
        assert section in defaults, f"Missing '{section}' section in default config"


def test_default_factories_apply_overrides():
    assert default_train_config().margin == 1.0
    assert default_train_config(epochs=3).epochs == 3
    assert default_synth_config().n_scales == 2
    assert default_zoom_config(steps=4).steps == 4


def test_train_config_constraints():
    with pytest.raises(ValidationError):
        TrainConfig(epochs=0)
    with pytest.raises(ValidationError):
        TrainConfig(learning_rate=-0.1)
    with pytest.raises(ValidationError):
        TrainConfig(batch_size=1)
    with pytest.raises(ValidationError):
        TrainConfig(loss_weights=(1.0, -1.0))
    with pytest.raises(ValidationError):
        TrainConfig(optimizer='adam')
    with pytest.raises(ValidationError):
        TrainConfig(combiner_mode='diagonal')
    with pytest.raises(ValidationError):
        TrainConfig(combiner_epochs=0)
    assert default_train_config().combiner_mode == 'scalar'
    assert TrainConfig(batch_size=1, loss_weights=(1.0, 0.0)).batch_size == 1, "No triplets, no pair requirement"
    assert TrainConfig(batch_size=16).triplet_cap == 16
    assert TrainConfig(max_triplets_per_batch=4).triplet_cap == 4


def test_transfer_config_lambda_alias():
    assert TransferConfig(**{'lambda': 0.5}).lambda_ == 0.5
    assert TransferConfig(lambda_=2.0).lambda_ == 2.0
    with pytest.raises(ValidationError):
        TransferConfig(**{'lambda': -1.0})


def test_eval_config_holdout_range():
    with pytest.raises(ValidationError):
        EvalConfig(holdout_fraction=1.0)


def test_run_config_resolves_relative_paths(run_json):
    config = RunConfig.from_json(str(run_json))
    assert config.seed == 11 and config.train.seed == 11
    assert config.attributes_path == run_json.parent / 'attributes.zslm'
    assert config.output_dir == run_json.parent / 'run'
    assert config.train.epochs == load_defaults()['train']['epochs'], "YAML defaults fill unset fields"


def test_run_config_dotted_overrides(run_json):
    config = RunConfig.from_json(str(run_json), {'train.epochs': 2, 'transfer.lambda': 0.0, 'space': 'la', 'seed': None})
    assert config.train.epochs == 2
    assert config.transfer.lambda_ == 0.0
    assert config.space == 'la'
    assert config.seed == 11


def test_run_config_errors(tmp_path, run_json):
    with pytest.raises(UsageError):
        RunConfig.from_json(str(tmp_path / 'missing.json'))

    broken = tmp_path / 'broken.json'
    broken.write_text('{"seed": ')
    with pytest.raises(UsageError):
        RunConfig.from_json(str(broken))

    raw = json.loads(run_json.read_text())
    raw['feature_paths'] = raw['feature_paths'][:1]
    mismatched = run_json.parent / 'mismatched.json'
    mismatched.write_text(json.dumps(raw))
    with pytest.raises(ValidationError):
        RunConfig.from_json(str(mismatched))

    raw = json.loads(run_json.read_text())
    raw['split_path'] = 'nowhere.json'
    dangling = run_json.parent / 'dangling.json'
    dangling.write_text(json.dumps(raw))
    with pytest.raises(ValidationError):
        RunConfig.from_json(str(dangling))


def test_logger_level_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv('ZSL_LOG', 'debug')
    logger = setup_logger(log_file=str(tmp_path / 'zsl.log'))
    assert logger.name == 'zsl_ldf'
    assert logging.getLogger().level == logging.DEBUG

    monkeypatch.setenv('ZSL_LOG', 'ERROR')
    setup_logger(log_file=str(tmp_path / 'zsl.log'))
    assert logging.getLogger().level == logging.ERROR


def test_logger_ignores_unknown_environment_level(tmp_path, monkeypatch):
    monkeypatch.setenv('ZSL_LOG', 'loud')
    log_file = tmp_path / 'logs' / 'zsl.log'
    setup_logger(log_file=str(log_file))
    assert logging.getLogger().level == logging.INFO, "The configured level stays in force"
    for handler in logging.getLogger().handlers:
        handler.flush()
    assert "Ignoring unknown ZSL_LOG value 'loud'" in log_file.read_text()


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
