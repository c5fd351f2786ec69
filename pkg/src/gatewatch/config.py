"""Pipeline configuration shared by CLI subcommands and the label service."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    store_path: Path = Path("store")
    gateway_config: Path | None = None
    rules_path: Path | None = None  # None = bundled seed rules
    patterns_path: Path | None = None  # None = bundled seed patterns
    shorteners_path: Path | None = None  # None = bundled list
    blocklist_path: Path | None = None
    out_dir: Path = Path("out")
    simhash_threshold: int = 10
    burst_min: int = 72
    otp_min_digits: int = 4
    otp_max_digits: int = 6
    safety_factor: float = 0.5
    workers: int = 1

    def __post_init__(self):
        if self.simhash_threshold < 0 or self.simhash_threshold > 64:
            raise ConfigError("simhash_threshold must be within 0..64")
        if self.burst_min < 1:
            raise ConfigError("burst_min must be >= 1")
        if not (1 <= self.otp_min_digits <= self.otp_max_digits):
            raise ConfigError("otp digit bounds must satisfy 1 <= min <= max")
        if not (0 < self.safety_factor <= 1):
            raise ConfigError("safety_factor must be in (0, 1]")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        import yaml

        with Path(path).open(encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: expected a mapping")
        kwargs = {}
        for key in (
            "store_path",
            "gateway_config",
            "rules_path",
            "patterns_path",
            "shorteners_path",
            "blocklist_path",
            "out_dir",
        ):
            if key in raw:
                kwargs[key] = Path(raw[key])
        for key in (
            "simhash_threshold",
            "burst_min",
            "otp_min_digits",
            "otp_max_digits",
            "workers",
        ):
            if key in raw:
                kwargs[key] = int(raw[key])
        if "safety_factor" in raw:
            kwargs["safety_factor"] = float(raw["safety_factor"])
        unknown = set(raw) - {
            "store_path", "gateway_config", "rules_path", "patterns_path",
            "shorteners_path", "blocklist_path", "out_dir", "simhash_threshold",
            "burst_min", "otp_min_digits", "otp_max_digits", "safety_factor",
            "workers",
        }
        if unknown:
            raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
        try:
            return cls(**kwargs)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc
