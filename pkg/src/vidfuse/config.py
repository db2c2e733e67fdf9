"""Pipeline configuration in a flat ``key = value`` file format.

Lines are ``key = value`` pairs; blank lines and ``#`` comments are
skipped.  List values are comma-separated.  Example::

    # selection and flow parameters
    n_kf = 6
    alpha = 1.0
    iterations = 100
    epsilon = 1e-4
    mag_bins = 16
    ang_bins = 16
    mag_cap = 20.0
    # fusion plan
    modalities = spatial, temporal
    stages = frame_cross, self, video_cross, reconcile
    # optional default paths
    frames_dir = data/frames/v01
    output = out/

The same format carries a standalone fusion plan (``modalities`` and
``stages`` keys only) for the ``fuse`` command's ``--plan`` flag.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

from .fusion_engine import FUSION_STAGES, FusionPlan
from .motion_features import HistogramConfig
from .optical_flow import FlowParams

__all__ = ["ConfigError", "PipelineConfig", "load_key_values", "load_fusion_plan"]


class ConfigError(ValueError):
    """A configuration file or value that cannot be used."""


def load_key_values(path: str | Path) -> dict[str, str]:
    """Parse a ``key = value`` file into a string-to-string mapping."""
    result: dict[str, str] = {}
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key in {raw!r}")
        if key in result:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        result[key] = value.strip()
    return result


def _parse_list(value: str) -> tuple[str, ...]:
    items = tuple(item.strip() for item in value.split(",") if item.strip())
    return items


@dataclass(frozen=True)
class PipelineConfig:
    """Everything the pipeline commands need beyond their positional args."""

    n_kf: int = 6
    alpha: float = 1.0
    iterations: int = 100
    epsilon: float = 1e-4
    mag_bins: int = 16
    ang_bins: int = 16
    mag_cap: float = 20.0
    modalities: tuple[str, ...] = ()
    stages: tuple[str, ...] = FUSION_STAGES
    frames_dir: str = ""
    output: str = ""

    def __post_init__(self) -> None:
        # construct the derived views once to surface bad values early
        self.flow_params()
        self.histogram_config()
        self.fusion_plan()
        if self.n_kf < 2:
            raise ConfigError(f"n_kf must be >= 2, got {self.n_kf}")

    def flow_params(self) -> FlowParams:
        try:
            return FlowParams(alpha=self.alpha, iterations=self.iterations,
                              epsilon=self.epsilon)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def histogram_config(self) -> HistogramConfig:
        try:
            return HistogramConfig(mag_bins=self.mag_bins, ang_bins=self.ang_bins,
                                   mag_cap=self.mag_cap)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def fusion_plan(self) -> FusionPlan:
        try:
            return FusionPlan(modalities=self.modalities, stages=self.stages)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        pairs = load_key_values(path)
        kwargs: dict = {}
        converters = {
            "n_kf": int, "iterations": int, "mag_bins": int, "ang_bins": int,
            "alpha": float, "epsilon": float, "mag_cap": float,
            "modalities": _parse_list, "stages": _parse_list,
            "frames_dir": str, "output": str,
        }
        known = {f.name for f in fields(cls)}
        for key, raw in pairs.items():
            if key not in known:
                raise ConfigError(f"{path}: unknown config key {key!r}")
            try:
                kwargs[key] = converters[key](raw)
            except ValueError as exc:
                raise ConfigError(f"{path}: bad value for {key!r}: {raw!r}") from exc
        try:
            return cls(**kwargs)
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from exc

    def to_file(self, path: str | Path) -> None:
        """Write the config back out; ``from_file`` recovers it exactly."""
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                rendered = ", ".join(value)
            elif isinstance(value, float):
                rendered = repr(value)
            else:
                rendered = str(value)
            lines.append(f"{f.name} = {rendered}")
        Path(path).write_text("\n".join(lines) + "\n")


def load_fusion_plan(path: str | Path) -> FusionPlan:
    """Load a fusion plan (``modalities``/``stages`` keys) from a file."""
    pairs = load_key_values(path)
    unknown = set(pairs) - {"modalities", "stages"}
    if unknown:
        raise ConfigError(
            f"{path}: unknown fusion-plan keys {sorted(unknown)} "
            "(expected 'modalities' and/or 'stages')")
    kwargs: dict = {}
    if "modalities" in pairs:
        kwargs["modalities"] = _parse_list(pairs["modalities"])
    if "stages" in pairs:
        kwargs["stages"] = _parse_list(pairs["stages"])
    try:
        return FusionPlan(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
