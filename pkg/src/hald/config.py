"""Flat key=value pipeline configuration.

Precedence is command line > config file > defaults, and the resolved
snapshot is copied into every output directory so any run can be
reproduced from its artifacts alone.
"""

from __future__ import annotations

from pathlib import Path

from .errors import ConfigError

_TRUE = {"true", "1", "yes", "on"}
_FALSE = {"false", "0", "no", "off"}


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (type, default)
KEYS: dict[str, tuple] = {
    "paths.corpus_dir": (str, ""),
    "paths.model_dir": (str, ""),
    "paths.out_dir": (str, ""),
    "facing": (str, "right"),
    "split.seed": (int, 1),
    "region.margin": (float, 0.02),
    "canny.sigma": (float, 1.4),
    "canny.low_ratio": (float, 0.08),
    "canny.high_ratio": (float, 0.20),
    "edge.enhance_first": (bool, True),
    "enhance.tile": (int, 64),
    "enhance.clip": (float, 4.0),
    "template.max_size": (int, 96),
    "template.weight_dir": (str, ""),
    "frankfort.sn_offset_deg": (float, 7.0),
    "gn.rule": (str, "arc_mid"),
    "ransac.seed": (int, 1234),
    "ransac.iterations": (int, 500),
    "ransac.inlier_band": (float, 2.0),
    "thresholds.file": (str, ""),
}


class PipelineConfig:
    """Typed view over the flat key space."""

    def __init__(self, values: dict | None = None):
        self.values = {key: default for key, (_, default) in KEYS.items()}
        if values:
            for key, value in values.items():
                self.set(key, value)
        self.validate()

    def set(self, key: str, value) -> None:
        if key not in KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        kind, _ = KEYS[key]
        if isinstance(value, str) and kind is not str:
            try:
                value = _parse_bool(value) if kind is bool else kind(value)
            except ValueError as exc:
                raise ConfigError(f"{key}: {exc}") from None
        if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
            raise ConfigError(f"{key}: expected {kind.__name__}, got {value!r}")
        self.values[key] = value

    def __getitem__(self, key: str):
        return self.values[key]

    def validate(self) -> None:
        v = self.values
        checks = [
            (v["facing"] in ("left", "right"), "facing must be left or right"),
            (v["region.margin"] >= 0, "region.margin must be >= 0"),
            (v["canny.sigma"] > 0, "canny.sigma must be positive"),
            (0 < v["canny.low_ratio"] < v["canny.high_ratio"] <= 1,
             "need 0 < canny.low_ratio < canny.high_ratio <= 1"),
            (v["enhance.tile"] >= 8, "enhance.tile must be >= 8"),
            (1.0 <= v["enhance.clip"] <= 40.0, "enhance.clip must be in [1, 40]"),
            (v["template.max_size"] >= 8, "template.max_size must be >= 8"),
            (v["frankfort.sn_offset_deg"] >= 0, "frankfort.sn_offset_deg must be >= 0"),
            (v["gn.rule"] in ("arc_mid", "chord_max"),
             "gn.rule must be arc_mid or chord_max"),
            (v["ransac.iterations"] >= 1, "ransac.iterations must be >= 1"),
            (v["ransac.inlier_band"] > 0, "ransac.inlier_band must be positive"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)

    def snapshot(self) -> str:
        return "\n".join(f"{key}={self.values[key]}" for key in KEYS) + "\n"


def load_config(path) -> PipelineConfig:
    config = PipelineConfig()
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        config.set(key.strip(), value.strip())
    config.validate()
    return config


def resolve_config(config_path, overrides: dict) -> PipelineConfig:
    """Config file (when given) plus command-line overrides."""
    config = load_config(config_path) if config_path else PipelineConfig()
    for key, value in overrides.items():
        if value is not None:
            config.set(key, value)
    config.validate()
    return config
