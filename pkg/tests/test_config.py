import json

import pytest

from paperchat.config import AppConfig
from paperchat.errors import BadConfig


def test_defaults():
    config = AppConfig()
    assert config.api_base == "https://api.openai.com/v1"
    assert config.chat_model == "gpt-4"
    assert config.embed_model == "text-embedding-ada-002"
    assert config.max_total_tokens == 8192
    assert config.reserved_for_reply == 1024
    assert config.target_ratio == 0.5
    assert not config.mock_mode


def test_env_overrides_with_type_coercion():
    env = {
        "PAPERCHAT_API_KEY": "k-123",
        "PAPERCHAT_EMBED_DIMENSION": "256",
        "PAPERCHAT_TEMPERATURE": "0.7",
        "PAPERCHAT_MOCK_MODE": "true",
        "PAPERCHAT_CHAT_MODEL": "gpt-4-turbo",
    }
    config = AppConfig.load(env=env)
    assert config.api_key == "k-123"
    assert config.embed_dimension == 256
    assert config.temperature == 0.7
    assert config.mock_mode is True
    assert config.chat_model == "gpt-4-turbo"


def test_env_mock_short_form():
    assert AppConfig.load(env={"PAPERCHAT_MOCK": "1"}).mock_mode is True
    assert AppConfig.load(env={"PAPERCHAT_MOCK": "0"}).mock_mode is False
    assert AppConfig.load(env={}).mock_mode is False


def test_config_file_overrides_env(tmp_path):
    path = tmp_path / "conf.json"
    path.write_text(json.dumps({"chat_model": "from-file", "k_retrieve": 7}))
    env = {"PAPERCHAT_CHAT_MODEL": "from-env"}
    config = AppConfig.load(path, env=env)
    assert config.chat_model == "from-file"  # file wins
    assert config.k_retrieve == 7


def test_config_file_unknown_keys_rejected(tmp_path):
    path = tmp_path / "conf.json"
    path.write_text(json.dumps({"no_such_option": 1}))
    with pytest.raises(BadConfig):
        AppConfig.load(path, env={})
