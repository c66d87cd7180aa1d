"""Runtime configuration, loadable from a JSON file.

The file path comes from the CLI `--config` flag or the MIRON_CONFIG
environment variable; every field has a usable default.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

ENV_VAR = "MIRON_CONFIG"


@dataclass
class RunConfig:
    seed: int = 0
    max_iterations: int = 100
    kv_file: str | None = None       # backing data for the kv_query action
    clock_time: str | None = None    # fix the clock for reproducible runs
    idle_timeout_s: float = 1800.0   # service: tear down idle sessions
    base_dir: Path = field(default_factory=Path)

    def resolve(self, path: str | None) -> Path | None:
        if path is None:
            return None
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p


def load_config(path: str | os.PathLike | None = None) -> RunConfig:
    """Read configuration; fall back to MIRON_CONFIG, then to defaults."""
    if path is None:
        path = os.environ.get(ENV_VAR)
    if path is None:
        return RunConfig()
    p = Path(path)
    doc = json.loads(p.read_text("utf-8"))
    cfg = RunConfig(base_dir=p.parent)
    for key in ("seed", "max_iterations", "kv_file", "clock_time", "idle_timeout_s"):
        if key in doc:
            setattr(cfg, key, doc[key])
    return cfg
