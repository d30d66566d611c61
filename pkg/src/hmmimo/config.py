"""Network configuration and flat key-value config files."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any


class ConfigError(ValueError):
    """Raised when a configuration value is missing, malformed or inconsistent."""


PLACEMENTS = ("radial", "area")
NU_CRITERIA = ("distance", "beta")
DL_SPLITS = ("proportional", "equal")


@dataclass(frozen=True)
class NetworkConfig:
    """Scenario parameters.

    Distances are in meters, powers in watts, the carrier frequency in GHz
    and the bandwidth in Hz. Defaults reproduce the reference scenario:
    256 antennas, 16 users, a 1 km disk and a 200 m near-user radius.
    """

    total_antennas: int = 256
    users: int = 16
    cbs_antennas: int = 64
    coverage_radius: float = 1000.0
    nu_distance_threshold: float = 200.0
    ucm_cluster_size: int = 5
    carrier_frequency: float = 2.0
    ap_height: float = 12.0
    ue_height: float = 1.7
    d0: float = 10.0
    d1: float = 50.0
    shadowing_stddev: float = 8.0
    p_d: float = 0.2
    p_u: float = 0.2
    noise_density: float = -174.0
    noise_figure: float = 9.0
    bandwidth: float = 5e6
    rng_seed: int = 0
    epochs: int = 10_000
    # "radial": radius ~ U(0, R); "area": radius = R*sqrt(u)
    placement: str = "radial"
    nu_criterion: str = "distance"
    nu_beta_threshold_db: float = -100.0
    dl_split: str = "proportional"
    pilot_overhead: bool = False
    frame_symbols: int = 24
    rb_subcarriers: int = 8

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def bad(key, why):
            raise ConfigError(f"invalid value for '{key}': {why} (got {getattr(self, key)!r})")

        if self.total_antennas < 1:
            bad("total_antennas", "must be >= 1")
        if self.users < 1:
            bad("users", "must be >= 1")
        if not 0 < self.cbs_antennas <= self.total_antennas:
            bad("cbs_antennas", f"must satisfy 0 < N_b <= M = {self.total_antennas}")
        if not self.coverage_radius > 0:
            bad("coverage_radius", "must be > 0")
        if self.nu_distance_threshold < 0:
            bad("nu_distance_threshold", "must be >= 0")
        if self.ucm_cluster_size < 1:
            bad("ucm_cluster_size", "must be >= 1")
        if self.ucm_cluster_size > self.total_antennas:
            bad("ucm_cluster_size", f"must be <= M = {self.total_antennas}")
        if not 0 < self.d0 < self.d1 < self.coverage_radius:
            bad("d0", f"breakpoints must satisfy 0 < d0 < d1 < radius (d1={self.d1})")
        for key in ("carrier_frequency", "ap_height", "ue_height", "p_d", "p_u", "bandwidth"):
            if not getattr(self, key) > 0:
                bad(key, "must be > 0")
        if self.shadowing_stddev < 0:
            bad("shadowing_stddev", "must be >= 0")
        if self.epochs < 1:
            bad("epochs", "must be >= 1")
        if self.rng_seed < 0:
            bad("rng_seed", "must be >= 0")
        if self.placement not in PLACEMENTS:
            bad("placement", f"must be one of {PLACEMENTS}")
        if self.nu_criterion not in NU_CRITERIA:
            bad("nu_criterion", f"must be one of {NU_CRITERIA}")
        if self.dl_split not in DL_SPLITS:
            bad("dl_split", f"must be one of {DL_SPLITS}")
        if self.frame_symbols < 1 or self.rb_subcarriers < 1:
            bad("frame_symbols", "frame_symbols and rb_subcarriers must be >= 1")
        if self.pilot_overhead and self.users >= self.frame_symbols * self.rb_subcarriers:
            bad("pilot_overhead", "K pilots do not fit into one resource block")

    @property
    def n_aps(self) -> int:
        return self.total_antennas - self.cbs_antennas

    def replace(self, **changes) -> "NetworkConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


_ALIASES = {
    "m": "total_antennas",
    "k": "users",
    "n_b": "cbs_antennas",
    "nb": "cbs_antennas",
    "seed": "rng_seed",
    "radius": "coverage_radius",
    "threshold": "nu_distance_threshold",
    "cluster_size": "ucm_cluster_size",
    "sigma_sd": "shadowing_stddev",
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _convert(key: str, kind: type, raw: str) -> Any:
    text = raw.strip().strip('"').strip("'")
    try:
        if kind is bool:
            low = text.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(text)
        if kind is int:
            value = float(text)
            if value != int(value):
                raise ValueError(text)
            return int(value)
        if kind is float:
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"invalid value for '{key}': cannot parse {raw.strip()!r} as {kind.__name__}") from None


def _field_types() -> dict[str, type]:
    lookup = {"int": int, "float": float, "str": str, "bool": bool}
    return {f.name: lookup[f.type] if isinstance(f.type, str) else f.type for f in fields(NetworkConfig)}


def config_from_mapping(values: dict[str, Any], base: NetworkConfig | None = None) -> NetworkConfig:
    """Build a validated config from ``values`` layered over ``base`` (or the defaults)."""
    types = _field_types()
    kwargs = {}
    for key, raw in values.items():
        name = _ALIASES.get(key.lower(), key)
        if name not in types:
            raise ConfigError(f"unknown configuration key '{key}'")
        kwargs[name] = raw if not isinstance(raw, str) else _convert(key, types[name], raw)
        if types[name] is float and isinstance(kwargs[name], int):
            kwargs[name] = float(kwargs[name])
    base = base or NetworkConfig()
    return dataclasses.replace(base, **kwargs)


def parse_config_text(text: str) -> dict[str, str]:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":" if ":" in line else None
        if sep is None:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = line.split(sep, 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: missing key")
        values[key] = value
    return values


def load_config(path: str | Path, **overrides) -> NetworkConfig:
    """Read a flat ``key = value`` file; missing keys fall back to defaults.

    Keyword ``overrides`` (already typed) are applied after the file.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    values: dict[str, Any] = parse_config_text(text)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_mapping(values)
