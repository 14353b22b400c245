"""Tool configuration.

One :class:`Config` carries every tunable, so the geometric oracle and the
reflow ground truth always read the same thresholds. Files may be TOML or
JSON with sections ``filter``, ``layout``, ``oracle``, ``reflow``,
``remote`` and ``harness``; anything omitted keeps its default.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FilterConfig:
    min_width_px: int = 5
    min_height_px: int = 5
    min_area_px2: int = 25
    decorative_keywords: frozenset[str] = frozenset({"scrim", "background", "divider", "shadow"})
    interactive_types: frozenset[str] = frozenset({
        "Button", "ImageButton", "EditText", "Switch", "CheckBox",
        "RadioButton", "SeekBar", "Spinner",
    })
    container_types: frozenset[str] = frozenset({
        "LinearLayout", "RelativeLayout", "FrameLayout", "ConstraintLayout",
        "RecyclerView", "ScrollView", "ViewGroup",
    })

    def __post_init__(self) -> None:
        if min(self.min_width_px, self.min_height_px, self.min_area_px2) <= 0:
            raise ConfigError("filter thresholds must be positive")
        if not self.decorative_keywords or not self.interactive_types or not self.container_types:
            raise ConfigError("filter keyword sets must be non-empty")


@dataclass(frozen=True)
class AdjacencyThreshold:
    """Edge-gap threshold: ``clamp(round(frac * extent), min_px, max_px)``."""

    min_px: int
    max_px: int
    frac: float

    def __post_init__(self) -> None:
        if not 0 < self.min_px <= self.max_px:
            raise ConfigError(f"need 0 < min_px <= max_px, got {self.min_px}, {self.max_px}")
        if not 0 < self.frac < 1:
            raise ConfigError(f"frac must be in (0, 1), got {self.frac}")


@dataclass(frozen=True)
class LayoutConfig:
    horizontal: AdjacencyThreshold = AdjacencyThreshold(20, 120, 0.04)
    vertical: AdjacencyThreshold = AdjacencyThreshold(20, 150, 0.06)


@dataclass(frozen=True)
class OracleConfig:
    text_overlap_ratio: float = 0.3
    occlusion_coverage: float = 0.3
    containment_ratio: float = 0.95
    clip_slack_px: int = 2
    navbar_slack_px: int = 4
    null_display_max_widgets: int = 1
    null_display_min_window_frac: float = 0.3


@dataclass(frozen=True)
class ReflowConfig:
    folded_size: tuple[int, int] = (1080, 2092)
    unfolded_size: tuple[int, int] = (1812, 2092)
    min_window_frac: float = 0.1
    system_inset_bottom: int = 0


@dataclass(frozen=True)
class RemoteConfig:
    endpoint: str | None = None
    model: str | None = None
    api_key_env: str = "REASON_API_KEY"
    timeout_s: float = 60.0
    retries: int = 2
    backoff_s: float = 1.0
    max_in_flight: int = 4

    def resolved(self) -> RemoteConfig:
        """Fill endpoint/model from ``REASON_ENDPOINT`` / ``REASON_MODEL`` when unset."""
        return replace(
            self,
            endpoint=self.endpoint or os.environ.get("REASON_ENDPOINT"),
            model=self.model or os.environ.get("REASON_MODEL"),
        )

    @property
    def api_key(self) -> str | None:
        return os.environ.get(self.api_key_env)


@dataclass(frozen=True)
class HarnessConfig:
    workers: int = 4


@dataclass(frozen=True)
class Config:
    filter: FilterConfig = field(default_factory=FilterConfig)
    layout: LayoutConfig = field(default_factory=LayoutConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    reflow: ReflowConfig = field(default_factory=ReflowConfig)
    remote: RemoteConfig = field(default_factory=RemoteConfig)
    harness: HarnessConfig = field(default_factory=HarnessConfig)


def _coerce(cls: type, current: Any, values: dict[str, Any]) -> Any:
    known = {f.name: f for f in fields(cls)}
    unknown = set(values) - set(known)
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    updates: dict[str, Any] = {}
    for key, value in values.items():
        old = getattr(current, key)
        if isinstance(old, frozenset):
            value = frozenset(value)
        elif isinstance(old, tuple):
            value = tuple(value)
        elif isinstance(old, AdjacencyThreshold):
            if isinstance(value, dict):
                value = AdjacencyThreshold(**value)
            else:
                value = AdjacencyThreshold(*value)
        updates[key] = value
    return replace(current, **updates)


def config_from_dict(data: dict[str, Any]) -> Config:
    cfg = Config()
    sections = {f.name: f for f in fields(Config)}
    unknown = set(data) - set(sections)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    for name, values in data.items():
        if not isinstance(values, dict):
            raise ConfigError(f"section {name!r} must be a table")
        current = getattr(cfg, name)
        try:
            cfg = replace(cfg, **{name: _coerce(type(current), current, values)})
        except TypeError as exc:
            raise ConfigError(f"section {name!r}: {exc}") from exc
    return cfg


def load_config(path: str | Path | None) -> Config:
    if path is None:
        return Config()
    path = Path(path)
    raw = path.read_bytes()
    try:
        if path.suffix.lower() == ".json":
            data = json.loads(raw)
        else:
            data = tomllib.loads(raw.decode("utf-8"))
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(data)
