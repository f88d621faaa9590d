"""Experiment configuration: TOML file, named presets and flag overrides.

Precedence is flags > file > preset > defaults.  The config hash covers every
field that influences sampled results, so rows from different settings never
mix in one results store.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .circuit import BASIS_CODE, ShuttleChannel
from .decoder import SOLVERS

PRESETS = ("desk", "full")
MIN_FIT_SHOTS = 1000

# fields excluded from the hash: they do not change any sampled number
_UNHASHED = ("name", "output", "analysis", "hardware")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AnalysisConfig:
    axis: str = "auto"  # "ber", "cer" or "auto" (the grid with more than one value)
    fit_distances: tuple[int, ...] = ()  # empty: all swept distances
    fit_points: int = 6  # values per slice entering the threshold fit
    target: float = 1e-12

    def validate(self):
        if self.axis not in ("auto", "ber", "cer"):
            raise ConfigError(f"analysis.axis must be auto, ber or cer, got {self.axis!r}")
        if self.fit_points < 1:
            raise ConfigError("analysis.fit_points must be positive")
        if not 0 < self.target < 1:
            raise ConfigError("analysis.target must lie in (0, 1)")


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    distances: tuple[int, ...] = (5, 7, 9, 11)
    rounds: int | None = None  # None: d rounds at distance d
    cer: tuple[float, ...] = (0.001,)
    ber: tuple[float, ...] = (0.0,)
    shuttle_channel: str = "unbiased"
    basis: str = "Z"
    shots: int = 100_000
    shots_by_distance: tuple[tuple[int, int], ...] = ()
    seed: int = 0
    cz_error_source: str = "cer"
    solver: str = "auto"
    output: str = "results"
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    hardware: tuple[tuple[str, float], ...] = ()

    def validate(self) -> "ExperimentConfig":
        if not self.distances:
            raise ConfigError("distances must be non-empty")
        for d in self.distances:
            if isinstance(d, bool) or not isinstance(d, int) or d < 3 or d % 2 == 0:
                raise ConfigError(f"distances must be odd integers >= 3, got {d!r}")
        if self.rounds is not None and (not isinstance(self.rounds, int) or self.rounds < 1):
            raise ConfigError(f"rounds must be a positive integer, got {self.rounds!r}")
        for name in ("cer", "ber"):
            grid = getattr(self, name)
            if not grid:
                raise ConfigError(f"{name} grid must be non-empty")
            for p in grid:
                if not (isinstance(p, (int, float)) and 0 <= p < 1):
                    raise ConfigError(f"{name} values must be probabilities in [0, 1), got {p!r}")
        try:
            ShuttleChannel(self.shuttle_channel)
        except ValueError:
            raise ConfigError(f"shuttle_channel must be unbiased or biased, got {self.shuttle_channel!r}") from None
        if self.basis not in BASIS_CODE:
            raise ConfigError(f"basis must be Z or X, got {self.basis!r}")
        if self.cz_error_source not in ("cer", "ber"):
            raise ConfigError(f"cz_error_source must be cer or ber, got {self.cz_error_source!r}")
        if self.solver not in SOLVERS:
            raise ConfigError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if self.shots < 1 or any(s < 1 for _, s in self.shots_by_distance):
            raise ConfigError("shot counts must be positive")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        self.analysis.validate()
        return self

    def rounds_for(self, d: int) -> int:
        return self.rounds if self.rounds is not None else d

    def shots_for(self, d: int) -> int:
        return dict(self.shots_by_distance).get(d, self.shots)

    def fit_warnings(self) -> list[str]:
        low = [d for d in self.distances if self.shots_for(d) < MIN_FIT_SHOTS]
        return [f"distance {d}: fewer than {MIN_FIT_SHOTS} shots, too few for a fit" for d in low]

    def hashed_dict(self) -> dict:
        out = {}
        for f in fields(self):
            if f.name in _UNHASHED:
                continue
            v = getattr(self, f.name)
            out[f.name] = [list(x) if isinstance(x, tuple) else x for x in v] if isinstance(v, tuple) else v
        out["cer"] = [float(p) for p in self.cer]
        out["ber"] = [float(p) for p in self.ber]
        return out

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.hashed_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def to_toml(self) -> str:
        """Round-trippable TOML text of this config."""
        lines = [f"# config hash {self.config_hash}"]
        d = asdict(self)
        analysis = d.pop("analysis")
        hardware = d.pop("hardware")
        sbd = d.pop("shots_by_distance")
        for k, v in d.items():
            if v is not None:
                lines.append(f"{k} = {_toml_value(v)}")
        if sbd:
            lines.append("")
            lines.append("[shots_by_distance]")
            lines += [f'"{k}" = {v}' for k, v in sbd]
        lines.append("")
        lines.append("[analysis]")
        lines += [f"{k} = {_toml_value(v)}" for k, v in analysis.items()]
        if hardware:
            lines.append("")
            lines.append("[hardware]")
            lines += [f"{k} = {_toml_value(v)}" for k, v in hardware]
        return "\n".join(lines) + "\n"


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return str(v)


def _coerce(raw: dict, source: str) -> dict:
    """Turn TOML/flag values into ExperimentConfig field values."""
    known = {f.name for f in fields(ExperimentConfig)}
    out = {}
    for key, v in raw.items():
        if key not in known:
            raise ConfigError(f"{source}: unknown key {key!r}")
        if key in ("distances",):
            v = tuple(int(x) for x in v)
        elif key in ("cer", "ber"):
            v = tuple(float(x) for x in (v if isinstance(v, (list, tuple)) else [v]))
        elif key == "shots_by_distance":
            v = tuple(sorted((int(k), int(s)) for k, s in dict(v).items()))
        elif key == "analysis":
            a = dict(v)
            bad = set(a) - {f.name for f in fields(AnalysisConfig)}
            if bad:
                raise ConfigError(f"{source}: unknown analysis keys {sorted(bad)}")
            if "fit_distances" in a:
                a["fit_distances"] = tuple(int(x) for x in a["fit_distances"])
            v = AnalysisConfig(**a)
        elif key == "hardware":
            v = tuple(sorted((str(k), float(x)) for k, x in dict(v).items()))
        elif key in ("shots", "seed", "rounds") and v is not None:
            v = int(v)
        elif key == "basis":
            v = str(v).upper()
        out[key] = v
    return out


def preset(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; expected one of {PRESETS}")
    text = resources.files("busnoise").joinpath("presets", f"{name}.toml").read_text()
    return tomllib.loads(text)


def load_config(path: str | Path | None = None, *, preset_name: str | None = None,
                overrides: dict | None = None) -> ExperimentConfig:
    merged: dict = {}
    if preset_name:
        merged.update(_coerce(preset(preset_name), f"preset {preset_name}"))
    if path is not None:
        try:
            raw = tomllib.loads(Path(path).read_text())
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"{path}: {e}") from None
        merged.update(_coerce(raw, str(path)))
    if overrides:
        merged.update(_coerce({k: v for k, v in overrides.items() if v is not None}, "flags"))
    return replace(ExperimentConfig(), **merged).validate()
