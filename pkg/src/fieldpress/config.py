"""Configuration: one JSON file plus FIELDPRESS_* environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path


@dataclass
class AppConfig:
    root: str = "fieldpress-data"
    provider: str = "offline"              # offline | remote
    provider_endpoint: str = ""
    credential_path: str = ""
    offline_script_path: str = ""
    language: str = "id-ID"
    chunk_len_s: float = 30.0
    confidence_threshold: float = 0.9
    fps_cap: float = 2.0
    blur_threshold: float = 100.0
    dedup_hamming: int = 4
    balance_min: int = 1200
    balance_max: int = 2500
    train_fraction: float = 0.5
    parallelism: int = 2
    api_token: str = ""

    @classmethod
    def load(cls, config_path: str | Path | None = None,
             env: dict | None = None) -> "AppConfig":
        """File values first, then FIELDPRESS_<FIELD> environment overrides."""
        env = os.environ if env is None else env
        values: dict = {}
        path = config_path or env.get("FIELDPRESS_CONFIG")
        if path and Path(path).exists():
            values.update(json.loads(Path(path).read_text(encoding="utf-8")))
        cfg = cls()
        for f in fields(cls):
            raw = env.get(f"FIELDPRESS_{f.name.upper()}")
            if raw is None:
                raw = values.get(f.name)
            if raw is None:
                continue
            kind = type(getattr(cfg, f.name))
            setattr(cfg, f.name, kind(raw))
        return cfg
