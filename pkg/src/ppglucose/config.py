"""Pipeline configuration loaded from JSON.

Keys may be nested (``{"als": {"lambda": 1e6}}``) or dotted
(``{"als.lambda": 1e6}``). Unknown keys are rejected.
"""

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigError, PpgError
from .features import PeakParams, SCHEMAS
from .preprocess import AlsConfig, GaussianConfig
from .regression import DEFAULT_K


@dataclass(frozen=True)
class SplitConfig:
    train_frac: float = 0.75
    seed: int = 0
    by: str = "trial"

    def __post_init__(self):
        if not 0 < self.train_frac < 1:
            raise ConfigError(f"split.train_frac must lie in (0, 1), got {self.train_frac}")
        if self.by not in ("trial", "subject"):
            raise ConfigError(f"split.by must be 'trial' or 'subject', got {self.by!r}")


@dataclass(frozen=True)
class PipelineConfig:
    als: AlsConfig = field(default_factory=AlsConfig)
    gauss: GaussianConfig = field(default_factory=GaussianConfig)
    peak: PeakParams = field(default_factory=PeakParams)
    schema_id: str = "stats-v1"
    k: int = DEFAULT_K
    standardize: bool = True
    split: SplitConfig = field(default_factory=SplitConfig)

    def __post_init__(self):
        if self.schema_id not in SCHEMAS:
            raise ConfigError(f"schema_id must be one of {sorted(SCHEMAS)}, got {self.schema_id!r}")
        if int(self.k) != self.k or self.k < 1:
            raise ConfigError(f"k must be a positive integer, got {self.k}")

    def with_seed(self, seed):
        return replace(self, split=replace(self.split, seed=int(seed)))


# dotted key -> (section, field)
_KEYS = {
    "als.lambda": ("als", "lam"),
    "als.p": ("als", "p"),
    "als.max_iters": ("als", "max_iters"),
    "als.tol": ("als", "tol"),
    "gauss.c": ("gauss", "c"),
    "gauss.w": ("gauss", "w"),
    "peak.min_separation": ("peak", "min_separation"),
    "peak.prominence_frac": ("peak", "prominence_frac"),
    "peak.relative_prominence": ("peak", "relative_prominence"),
    "peak.derivative_separation_frac": ("peak", "derivative_separation_frac"),
    "split.train_frac": ("split", "train_frac"),
    "split.seed": ("split", "seed"),
    "split.by": ("split", "by"),
    "schema_id": (None, "schema_id"),
    "k": (None, "k"),
    "regression.standardize": (None, "standardize"),
}


def _flatten(obj, prefix=""):
    out = {}
    for key, value in obj.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(_flatten(value, name + "."))
        else:
            out[name] = value
    return out


def config_from_dict(data):
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    flat = _flatten(data)
    unknown = sorted(set(flat) - set(_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    sections = {"als": {}, "gauss": {}, "peak": {}, "split": {}, None: {}}
    for key, value in flat.items():
        section, name = _KEYS[key]
        sections[section][name] = value
    try:
        return PipelineConfig(
            als=AlsConfig(**sections["als"]),
            gauss=GaussianConfig(**sections["gauss"]),
            peak=PeakParams(**sections["peak"]),
            split=SplitConfig(**sections["split"]),
            **sections[None],
        )
    except ConfigError:
        raise
    except (TypeError, ValueError, PpgError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path=None):
    if path is None:
        return PipelineConfig()
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return config_from_dict(data)


def config_to_dict(cfg):
    return {
        "als": {"lambda": cfg.als.lam, "p": cfg.als.p, "max_iters": cfg.als.max_iters, "tol": cfg.als.tol},
        "gauss": {"c": cfg.gauss.c, "w": cfg.gauss.w},
        "peak": {
            "min_separation": cfg.peak.min_separation,
            "prominence_frac": cfg.peak.prominence_frac,
            "relative_prominence": cfg.peak.relative_prominence,
            "derivative_separation_frac": cfg.peak.derivative_separation_frac,
        },
        "schema_id": cfg.schema_id,
        "k": cfg.k,
        "regression": {"standardize": cfg.standardize},
        "split": {"train_frac": cfg.split.train_frac, "seed": cfg.split.seed, "by": cfg.split.by},
    }
