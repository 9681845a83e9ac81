"""
Configuration manager for falconerlab
Holds run defaults, loads json5 config files or earlier reports for replay,
and resolves the frozen RunConfig handed to the labs
"""

import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import json5
import psutil

from .errors import ValidationError
from .logger import log_debug, log_warning

THREADS_ENV = "FALCONERLAB_THREADS"

CSV_CONFIG_PREFIX = "# config: "


def default_threads() -> int:
    """FALCONERLAB_THREADS if set, else the logical CPU count"""
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            threads = int(raw)
        except ValueError:
            raise ValidationError(f"{THREADS_ENV}={raw!r} is not an integer")
        if threads < 1:
            raise ValidationError(f"{THREADS_ENV} must be at least 1")
        return threads
    return psutil.cpu_count() or 1


@dataclass(frozen=True)
class RunConfig:
    """Resolved settings for one run; everything but threads goes into the report header"""

    subcommand: str
    params: Tuple[Tuple[str, Any], ...] = ()
    seed: int = 0
    trials: int = 50
    budget: int = 10 ** 9
    fractal_budget: int = 10 ** 8
    bitmap_limit: int = 2 ** 27
    depth: int = 6
    epsilons: Tuple[str, ...] = ("1/16", "1/32", "1/64", "1/128", "1/256")
    format: str = "json"
    threads: int = field(default=1, compare=False)

    def header(self) -> Dict[str, Any]:
        data = asdict(self)
        data.pop("threads")
        data["params"] = dict(self.params)
        data["epsilons"] = list(self.epsilons)
        return data


class ConfigManager:
    """Manages run configuration: defaults, an optional loaded file, then flag overrides"""

    def __init__(self, config_file: Optional[Path] = None):
        # Default configuration values
        self.default_config = {
            "seed": 0,
            "trials": 50,
            "budget": 10 ** 9,
            "fractal_budget": 10 ** 8,
            "bitmap_limit": 2 ** 27,
            "depth": 6,
            "epsilons": ["1/16", "1/32", "1/64", "1/128", "1/256"],
            "format": "json",
        }
        self.config = self.default_config.copy()
        self.params: Dict[str, Any] = {}
        self.config_file = Path(config_file) if config_file else None
        if self.config_file:
            self._load_config()

    def _load_config(self):
        """Load a json5 config file, a JSON report or a CSV report header"""
        try:
            text = self.config_file.read_text()
        except OSError as e:
            raise ValidationError(f"cannot read config file {self.config_file}: {e}")

        first = text.lstrip().splitlines()[0] if text.strip() else ""
        try:
            if first.startswith(CSV_CONFIG_PREFIX.strip()):
                loaded = json5.loads(first[len(CSV_CONFIG_PREFIX.strip()):])
            else:
                loaded = json5.loads(text)
        except ValueError as e:
            raise ValidationError(f"config file {self.config_file} is not valid json5: {e}")
        if not isinstance(loaded, dict):
            raise ValidationError(f"config file {self.config_file} must hold an object")

        # a report carries its settings under "config"
        if "config" in loaded and isinstance(loaded["config"], dict):
            loaded = loaded["config"]

        params = loaded.pop("params", None) or {}
        loaded.pop("subcommand", None)
        for key in [k for k in loaded if k not in self.default_config]:
            log_warning(f"ignoring unknown setting '{key}'", "CONFIG")
            loaded.pop(key)
        self.config.update(loaded)
        self.params.update(params)
        log_debug(f"configuration loaded from {self.config_file}", "CONFIG")

    def get_setting(self, key: str, default: Any = None) -> Any:
        """Get a configuration setting"""
        return self.config.get(key, default)

    def set_setting(self, key: str, value: Any):
        """Set a configuration setting; None leaves the current value"""
        if value is not None:
            self.config[key] = value

    def set_param(self, key: str, value: Any):
        if value is not None:
            self.params[key] = value

    def get_param(self, key: str, default: Any = None) -> Any:
        return self.params.get(key, default)

    def get_all_settings(self) -> Dict[str, Any]:
        """Get all configuration settings"""
        return self.config.copy()

    def resolve(self, subcommand: str, threads: Optional[int] = None) -> RunConfig:
        """Freeze the merged settings; validation of ranges happens here"""
        c = self.config
        for key in ("trials", "budget", "fractal_budget", "bitmap_limit"):
            if not isinstance(c[key], int) or c[key] < 1:
                raise ValidationError(f"{key} must be a positive integer, got {c[key]!r}")
        if not isinstance(c["depth"], int) or c["depth"] < 0:
            raise ValidationError(f"depth must be a non-negative integer, got {c['depth']!r}")
        if c["format"] not in ("json", "csv"):
            raise ValidationError(f"format must be json or csv, got {c['format']!r}")
        threads = threads if threads is not None else default_threads()
        if threads < 1:
            raise ValidationError("--threads must be at least 1")
        return RunConfig(
            subcommand=subcommand,
            params=tuple(sorted(self.params.items())),
            seed=int(c["seed"]),
            trials=c["trials"],
            budget=c["budget"],
            fractal_budget=c["fractal_budget"],
            bitmap_limit=c["bitmap_limit"],
            depth=c["depth"],
            epsilons=tuple(str(e) for e in c["epsilons"]),
            format=c["format"],
            threads=threads,
        )
