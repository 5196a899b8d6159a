"""Runtime configuration: environment variables, optional JSON file override.

Nothing here is hard-coded into the clients; backends receive base URL,
model names, and key exclusively through this object.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import BadConfig

ENV_PREFIX = "PAPERCHAT_"

_TRUTHY = {"1", "true", "yes", "on"}


@dataclass
class AppConfig:
    api_base: str = "https://api.openai.com/v1"
    api_key: str = ""
    chat_model: str = "gpt-4"
    embed_model: str = "text-embedding-ada-002"
    embed_dimension: int = 1536
    temperature: float = 0.0
    mock_mode: bool = False
    mock_dimension: int = 64
    k_retrieve: int = 4
    max_total_tokens: int = 8192
    reserved_for_reply: int = 1024
    target_ratio: float = 0.5
    ratio_tolerance: float = 0.15
    distill_max_retries: int = 2
    embed_batch_size: int = 16
    chunk_max_tokens: int | None = None
    data_dir: str = ""

    @classmethod
    def load(cls, config_file: str | Path | None = None, env: dict | None = None) -> "AppConfig":
        """Defaults, then environment, then the config file (file wins)."""
        env = os.environ if env is None else env
        values: dict = {}
        for spec in fields(cls):
            raw = env.get(ENV_PREFIX + spec.name.upper())
            if raw is None:
                continue
            values[spec.name] = _coerce(spec.type, raw)
        # PAPERCHAT_MOCK is the documented short form of the mock-mode flag.
        if "mock_mode" not in values and env.get(ENV_PREFIX + "MOCK") is not None:
            values["mock_mode"] = _coerce("bool", env[ENV_PREFIX + "MOCK"])
        if config_file is not None:
            overrides = json.loads(Path(config_file).read_text(encoding="utf-8"))
            known = {spec.name for spec in fields(cls)}
            unknown = set(overrides) - known
            if unknown:
                raise BadConfig(f"unknown config keys: {sorted(unknown)}")
            values.update(overrides)
        return cls(**values)


def _coerce(type_name: str, raw: str):
    if "bool" in type_name:
        return raw.strip().lower() in _TRUTHY
    if "int" in type_name:
        return int(raw)
    if "float" in type_name:
        return float(raw)
    return raw
