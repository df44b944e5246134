"""Declarative experiment descriptions and their INI serialization.

One file describes one run end to end: turbulence model, beam, modal
basis, channel layout, turbulence strength, simulator grid, seed.
Experiments have too many parameters for positional flags, so the
command line only points at a file and optionally overrides a few
fields.  ``to_ini``/``from_ini`` round-trip exactly, which is what
makes emitted metadata reusable as input.

Strength can be given as any one of cn2, r0, or the target fundamental
depletion |rate * length|; exactly one must be present, and segmented
channels instead carry an explicit cn2 per segment.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .modes import HG, LG
from .turbulence import CUSTOM, KOLMOGOROV, VON_KARMAN

__all__ = ["ConfigError", "ExperimentConfig"]

STRENGTH_KEYS = ("cn2", "r0", "lambda00L")


class ConfigError(ValueError):
    """Invalid or inconsistent experiment description."""


@dataclass(frozen=True)
class ExperimentConfig:
    # turbulence: the desk-scale von Karman channel unless overridden.
    # A 1 m outer scale keeps the phase spectrum flat below 1/L0, which
    # is what lets a synthesis comb starting at f0 = 0.2 1/m carry the
    # full coupling strength; pure Kolmogorov puts a quarter of the
    # fundamental's depletion below that comb.
    kind: str = VON_KARMAN
    inner_scale: float = 1e-3
    outer_scale: float = 1.0
    damping_file: str | None = None
    # beam (waist sits at the channel midpoint)
    wavelength: float = 850e-9
    waist: float = 0.04
    # basis
    family: str = LG
    n_max: int = 8
    # channel: uniform length with one strength, or explicit segments
    length: float = 1.0
    segments: tuple[tuple[float, float], ...] | None = None
    strength_kind: str | None = "lambda00L"
    strength_value: float | None = 0.1
    # simulator grid and ensemble
    n_points: int = 512
    pitch: float = 1.2 / 512
    f0: float = 0.2
    components: int = 400
    subharmonic_levels: int = 0
    realizations: int = 500
    screens: int = 1
    dz: float = 0.0
    workers: int | None = None
    input_mode: str | None = None
    # bookkeeping
    seed: int = 0
    out_dir: str = "out"

    def __post_init__(self):
        if self.kind not in (KOLMOGOROV, VON_KARMAN, CUSTOM):
            raise ConfigError(f"turbulence/kind: unknown kind {self.kind!r}")
        if self.kind == CUSTOM and not self.damping_file:
            raise ConfigError("turbulence/damping_file: required for custom kind")
        if self.wavelength <= 0.0 or self.waist <= 0.0:
            raise ConfigError("beam: wavelength and waist must be positive")
        if self.family not in (HG, LG):
            raise ConfigError(f"basis/family: must be HG or LG, got {self.family!r}")
        if self.n_max < 0:
            raise ConfigError("basis/n_max: must be non-negative")
        if self.segments is not None:
            if self.strength_kind is not None:
                raise ConfigError(
                    "strength: segmented channels carry cn2 per segment; "
                    "remove the strength section"
                )
            if not self.segments:
                raise ConfigError("channel/segments: need at least one segment")
            for i, (seg_len, seg_cn2) in enumerate(self.segments):
                if seg_len <= 0.0 or seg_cn2 < 0.0:
                    raise ConfigError(
                        f"channel/segments: entry {i + 1} must be "
                        "'length cn2' with positive length"
                    )
            total = sum(s[0] for s in self.segments)
            if not math.isclose(total, self.length, rel_tol=1e-12):
                object.__setattr__(self, "length", total)
        else:
            if self.length <= 0.0:
                raise ConfigError("channel/length: must be positive")
            if self.strength_kind not in STRENGTH_KEYS:
                raise ConfigError(
                    "strength: exactly one of "
                    + ", ".join(STRENGTH_KEYS)
                    + f" (got {self.strength_kind!r})"
                )
            if self.strength_value is None or self.strength_value < 0.0:
                raise ConfigError("strength: value must be non-negative")
        if self.dz > 0.0 and not math.isclose(
            self.screens * self.dz, self.length, rel_tol=1e-9
        ):
            raise ConfigError(
                f"simulator/dz: screens*dz = {self.screens * self.dz:g} must "
                f"equal the channel length {self.length:g}"
            )
        if self.seed < 0:
            raise ConfigError("run/seed: must be non-negative")

    # -- serialization ------------------------------------------------

    def to_ini(self) -> str:
        parser = configparser.ConfigParser()
        parser.optionxform = str  # keep key case (lambda00L)
        parser["turbulence"] = {
            "kind": self.kind,
            "inner_scale": repr(self.inner_scale),
            "outer_scale": repr(self.outer_scale),
        }
        if self.damping_file is not None:
            parser["turbulence"]["damping_file"] = self.damping_file
        parser["beam"] = {
            "wavelength": repr(self.wavelength),
            "waist": repr(self.waist),
        }
        parser["basis"] = {"family": self.family, "n_max": str(self.n_max)}
        parser["channel"] = {"length": repr(self.length)}
        if self.segments is not None:
            parser["channel"]["segments"] = "\n" + "\n".join(
                f"{seg_len!r} {seg_cn2!r}" for seg_len, seg_cn2 in self.segments
            )
        else:
            parser["strength"] = {self.strength_kind: repr(self.strength_value)}
        parser["simulator"] = {
            "n_points": str(self.n_points),
            "pitch": repr(self.pitch),
            "f0": repr(self.f0),
            "components": str(self.components),
            "subharmonic_levels": str(self.subharmonic_levels),
            "realizations": str(self.realizations),
            "screens": str(self.screens),
            "dz": repr(self.dz),
        }
        if self.workers is not None:
            parser["simulator"]["workers"] = str(self.workers)
        if self.input_mode is not None:
            parser["simulator"]["input_mode"] = self.input_mode
        parser["run"] = {"seed": str(self.seed), "out_dir": self.out_dir}
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    def save(self, path) -> None:
        Path(path).write_text(self.to_ini())

    @classmethod
    def from_ini(cls, text: str) -> "ExperimentConfig":
        parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
        parser.optionxform = str
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config: {exc}") from exc
        known = {
            "turbulence": {"kind", "inner_scale", "outer_scale", "damping_file"},
            "beam": {"wavelength", "waist"},
            "basis": {"family", "n_max"},
            "channel": {"length", "segments"},
            "strength": set(STRENGTH_KEYS),
            "simulator": {
                "n_points", "pitch", "f0", "components", "subharmonic_levels",
                "realizations", "screens", "dz", "workers", "input_mode",
            },
            "run": {"seed", "out_dir"},
        }
        for section in parser.sections():
            if section not in known:
                raise ConfigError(f"unknown section [{section}]")
            for key in parser[section]:
                if key not in known[section]:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")

        values: dict = {}

        def grab(section: str, key: str, field: str, conv) -> None:
            if parser.has_option(section, key):
                raw = parser.get(section, key)
                try:
                    values[field] = conv(raw)
                except ValueError as exc:
                    raise ConfigError(f"{section}/{key}: {exc}") from exc

        grab("turbulence", "kind", "kind", str)
        grab("turbulence", "inner_scale", "inner_scale", float)
        grab("turbulence", "outer_scale", "outer_scale", float)
        grab("turbulence", "damping_file", "damping_file", str)
        grab("beam", "wavelength", "wavelength", float)
        grab("beam", "waist", "waist", float)
        grab("basis", "family", "family", str)
        grab("basis", "n_max", "n_max", int)
        grab("channel", "length", "length", float)
        if parser.has_option("channel", "segments"):
            rows = []
            for line in parser.get("channel", "segments").strip().splitlines():
                parts = line.split()
                if len(parts) != 2:
                    raise ConfigError(
                        "channel/segments: each line must be 'length cn2', got "
                        f"{line.strip()!r}"
                    )
                rows.append((float(parts[0]), float(parts[1])))
            values["segments"] = tuple(rows)
        if parser.has_section("strength"):
            found = [k for k in STRENGTH_KEYS if parser.has_option("strength", k)]
            if len(found) != 1:
                raise ConfigError(
                    "strength: exactly one of " + ", ".join(STRENGTH_KEYS)
                )
            values["strength_kind"] = found[0]
            values["strength_value"] = float(parser.get("strength", found[0]))
        elif "segments" in values:
            values["strength_kind"] = None
            values["strength_value"] = None
        grab("simulator", "n_points", "n_points", int)
        grab("simulator", "pitch", "pitch", float)
        grab("simulator", "f0", "f0", float)
        grab("simulator", "components", "components", int)
        grab("simulator", "subharmonic_levels", "subharmonic_levels", int)
        grab("simulator", "realizations", "realizations", int)
        grab("simulator", "screens", "screens", int)
        grab("simulator", "dz", "dz", float)
        grab("simulator", "workers", "workers", int)
        grab("simulator", "input_mode", "input_mode", str)
        grab("run", "seed", "seed", int)
        grab("run", "out_dir", "out_dir", str)
        return cls(**values)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        return cls.from_ini(path.read_text())

    def override(self, **changes) -> "ExperimentConfig":
        unknown = set(changes) - {f.name for f in fields(self)}
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return replace(self, **changes)
