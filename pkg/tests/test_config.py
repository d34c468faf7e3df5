import json

import pytest

from app.config import Settings, load_settings
from app.model import FitConfig


def test_defaults(monkeypatch):
    monkeypatch.delenv("CAE_DELTA", raising=False)
    settings = Settings()
    assert settings.delta == 0.1
    assert settings.lambda_ is None
    assert settings.cv_folds == 5
    assert settings.kernel == "gaussian"


def test_environment_variables(monkeypatch):
    monkeypatch.setenv("CAE_DELTA", "0.25")
    monkeypatch.setenv("CAE_KERNEL", "linear")
    settings = Settings()
    assert settings.delta == 0.25
    assert settings.kernel == "linear"


def test_precedence_flags_over_file_over_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("CAE_DELTA", "0.3")
    monkeypatch.setenv("CAE_SEED", "9")
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"delta": 0.2, "seed": 4}), encoding="utf-8")
    settings = load_settings(path, seed=11, lambda_=None)
    assert settings.delta == 0.2
    assert settings.seed == 11
    assert settings.lambda_ is None


def test_unknown_config_key(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"bandwith": 2.0}), encoding="utf-8")
    with pytest.raises(ValueError, match="Unknown config keys"):
        load_settings(path)


def test_config_must_be_object(tmp_path):
    path = tmp_path / "config.json"
    path.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ValueError):
        load_settings(path)


def test_invalid_values_rejected():
    with pytest.raises(ValueError):
        load_settings(kernel="polynomial")
    with pytest.raises(ValueError):
        load_settings(delta=0.0)


def test_fit_config_from_settings():
    cfg = FitConfig.from_settings(load_settings(delta=0.05, sigma=2.0, lambda_=0.3), seed=8)
    assert cfg.delta == 0.05
    assert cfg.lambda_ == 0.3
    assert cfg.kernel.sigma == 2.0
    assert cfg.seed == 8


def test_zero_lambda_rejected():
    with pytest.raises(ValueError):
        load_settings(lambda_=0.0)
