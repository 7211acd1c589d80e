"""Flat ``key = value`` configuration for the pipeline and the generator.

One format serves both the pipeline configuration and the ``plantspec``
generator configuration: one assignment per line, ``#`` comments, blank
lines ignored, unknown keys rejected. CLI flags override file values.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError
from .graph import NodeKind
from .mining import DEFAULT_EXCLUDED_KINDS
from .synth import ExtraUnit, Granularity, PlantSpec


def read_kv_file(path: str | Path) -> dict[str, str]:
    values: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def write_kv_file(path: str | Path, values: dict[str, str]) -> None:
    lines = [f"{k} = {values[k]}" for k in sorted(values)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass
class PipelineConfig:
    plc_xml: Path | None = None
    io_csv: Path | None = None
    rtls_csv: Path | None = None
    labeled_rtls_csv: Path | None = None
    ground_truth: Path | None = None
    out_dir: Path = Path("out")
    mode: str = "classify"
    window_ms: int = 500
    min_matches: int = 5
    band: int | None = None
    kmeans_k: int | None = None
    dbscan_eps: float | None = None
    dbscan_min_pts: int = 3
    raw_trajectory_queries: bool = False
    min_support: int = 2
    min_nodes: int = 3
    max_nodes: int = 12
    excluded_kinds: tuple[NodeKind, ...] = tuple(sorted(DEFAULT_EXCLUDED_KINDS))
    root_anchored_only: bool = False
    seed: int = 42
    log_level: str = "INFO"

    _PATHS = ("plc_xml", "io_csv", "rtls_csv", "labeled_rtls_csv", "ground_truth", "out_dir")
    _INTS = ("window_ms", "min_matches", "band", "kmeans_k", "dbscan_min_pts",
             "min_support", "min_nodes", "max_nodes", "seed")
    _FLOATS = ("dbscan_eps",)
    _BOOLS = ("raw_trajectory_queries", "root_anchored_only")

    @classmethod
    def from_dict(cls, values: dict[str, str]) -> "PipelineConfig":
        cfg = cls()
        cfg.update(values)
        return cfg

    def update(self, values: dict[str, str | int | float | bool | Path | None]) -> None:
        known = {f.name for f in fields(self) if not f.name.startswith("_")}
        for key, raw in values.items():
            if key not in known:
                raise ConfigError(f"unknown configuration key {key!r}")
            if raw is None:
                continue
            if key in self._PATHS:
                setattr(self, key, Path(str(raw)))
            elif key in self._INTS:
                try:
                    setattr(self, key, int(raw))
                except ValueError:
                    raise ConfigError(f"{key}: expected integer, got {raw!r}") from None
            elif key in self._FLOATS:
                try:
                    setattr(self, key, float(raw))
                except ValueError:
                    raise ConfigError(f"{key}: expected number, got {raw!r}") from None
            elif key in self._BOOLS:
                setattr(self, key, str(raw).lower() in ("1", "true", "yes"))
            elif key == "excluded_kinds":
                if isinstance(raw, (tuple, list)):
                    kinds = tuple(raw)
                else:
                    names = [n.strip() for n in str(raw).split(",") if n.strip()]
                    try:
                        kinds = tuple(NodeKind(n) for n in names)
                    except ValueError as exc:
                        raise ConfigError(f"excluded_kinds: {exc}") from None
                setattr(self, key, tuple(sorted(set(kinds))))
            else:
                setattr(self, key, str(raw))
        self.validate()

    def validate(self) -> None:
        if self.mode not in ("classify", "cluster"):
            raise ConfigError(f"mode must be classify or cluster, got {self.mode!r}")
        if self.window_ms <= 0:
            raise ConfigError("window_ms must be positive")
        if self.min_matches < 1:
            raise ConfigError("min_matches must be >= 1")
        if self.band is not None and self.band < 0:
            raise ConfigError("band must be non-negative")
        if self.min_support < 2:
            raise ConfigError("min_support must be >= 2")
        if not (2 <= self.min_nodes <= self.max_nodes):
            raise ConfigError("need 2 <= min_nodes <= max_nodes")
        if self.log_level.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR"):
            raise ConfigError(f"unknown log_level {self.log_level!r}")

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        return cls.from_dict(read_kv_file(path))

    def require(self, *keys: str) -> None:
        for key in keys:
            value = getattr(self, key)
            if value is None:
                raise ConfigError(f"configuration key {key!r} is required for this command")
            if key != "out_dir" and isinstance(value, Path) and not value.exists():
                raise ConfigError(f"{key}: file not found: {value}")


_SPEC_KEYS = {
    "levels": int,
    "rows_per_level": int,
    "places_per_row": int,
    "tray_count": int,
    "material_kinds": int,
    "seed": int,
    "rtls_rate_hz": float,
    "rtls_noise_sigma_m": float,
    "sim_duration_s": float,
    "location_granularity": str,
    "extra_components": str,
}


def plant_spec_from_dict(values: dict[str, str]) -> PlantSpec:
    """Build a PlantSpec from ``plantspec`` file values.

    ``extra_components`` is a semicolon list of
    ``name:sensors:actuators:attach:waypoint`` entries.
    """
    kwargs: dict = {}
    for key, raw in values.items():
        if key not in _SPEC_KEYS:
            raise ConfigError(f"unknown plantspec key {key!r}")
        caster = _SPEC_KEYS[key]
        if key == "location_granularity":
            try:
                kwargs[key] = Granularity(raw)
            except ValueError:
                raise ConfigError(f"location_granularity must be Place|Row|Level, got {raw!r}") from None
        elif key == "extra_components":
            units = []
            for chunk in str(raw).split(";"):
                chunk = chunk.strip()
                if not chunk:
                    continue
                parts = chunk.split(":")
                if len(parts) != 5:
                    raise ConfigError(
                        f"extra component {chunk!r} must be name:sensors:actuators:attach:waypoint"
                    )
                units.append(
                    ExtraUnit(parts[0], int(parts[1]), int(parts[2]), parts[3], parts[4])
                )
            kwargs[key] = tuple(units)
        else:
            try:
                kwargs[key] = caster(raw)
            except ValueError:
                raise ConfigError(f"{key}: expected {caster.__name__}, got {raw!r}") from None
    return PlantSpec(**kwargs)


def plant_spec_to_dict(spec: PlantSpec) -> dict[str, str]:
    extras = ";".join(
        f"{u.name}:{u.sensors}:{u.actuators}:{u.attach}:{u.waypoint}"
        for u in spec.extra_components
    )
    return {
        "levels": str(spec.levels),
        "rows_per_level": str(spec.rows_per_level),
        "places_per_row": str(spec.places_per_row),
        "tray_count": str(spec.tray_count),
        "material_kinds": str(spec.material_kinds),
        "seed": str(spec.seed),
        "rtls_rate_hz": repr(spec.rtls_rate_hz),
        "rtls_noise_sigma_m": repr(spec.rtls_noise_sigma_m),
        "sim_duration_s": repr(spec.sim_duration_s),
        "location_granularity": spec.location_granularity.value,
        "extra_components": extras,
    }
