"""TOML run configuration validated by pydantic; every physical quantity carries a unit."""
from __future__ import annotations

import math
import re
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Annotated, Any, Callable, Literal

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, ValidationError

from src.core.errors import ConfigError
from src.core.units import parse_quantity
from src.ensemble.geometry import DEFAULT_R_MIN, GeometryKind, GeometrySpec
from src.magnetometry.sensitivity import Mode, Scheme, SensitivityConfig
from src.noise.trajectories import NoiseMode
from src.spins.operators import SpinAxis


def _unit(kind: str) -> Callable[[Any], float]:
    def parse(value: Any) -> float:
        return parse_quantity(value, kind)

    return parse


Time = Annotated[float, BeforeValidator(_unit("time"))]
Length = Annotated[float, BeforeValidator(_unit("length"))]
Frequency = Annotated[float, BeforeValidator(_unit("frequency"))]
Density = Annotated[float, BeforeValidator(_unit("density"))]
Volume = Annotated[float, BeforeValidator(_unit("volume"))]

Command = Literal["simulate", "verify-sequence", "gap", "squeeze", "sensitivity", "sweep", "project-check"]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GeometryConfig(_Section):
    kind: GeometryKind
    n: int | None = Field(default=None, ge=1)
    spacing: Length = 10.0
    lx: Length = 30.0
    ly: Length = 30.0
    lz: Length = 9.0
    density: Density | None = None
    seed: int | None = None
    r_min: Length = DEFAULT_R_MIN
    quant_axis: str = "z"

    def to_spec(self, run_seed: int) -> GeometrySpec:
        return GeometrySpec(
            kind=self.kind,
            n=self.n,
            spacing=self.spacing,
            lx=self.lx,
            ly=self.ly,
            lz=self.lz,
            density=self.density,
            seed=run_seed if self.seed is None else self.seed,
            r_min=self.r_min,
            quant_axis=SpinAxis.named(self.quant_axis),
        )


class SequenceConfig(_Section):
    template: Literal["mrev8_echo", "wahuha", "spin_echo", "cpmg"] = "mrev8_echo"
    variant: Literal["1a", "2a"] = "2a"
    tau: Time = 1.4
    epsilon: float | None = Field(default=None, ge=0.0)
    tau_plus: Time | None = None
    tau_minus: Time | None = None
    n_pi: int = Field(default=2, ge=1)
    file: str | None = None


class NoiseConfig(_Section):
    gamma: Frequency = 0.0
    tau_c: Time = 100.0
    mode: NoiseMode = NoiseMode.PER_SPIN
    n_traj: int = Field(default=200, ge=1)
    dt: Time | None = None
    workers: int | None = Field(default=None, ge=1)


class SimulateConfig(_Section):
    cycles: int = Field(default=12, ge=1)
    variants: list[Literal["1a", "2a"]] = ["1a", "2a"]
    dynamics: Literal["sequence", "average"] = "sequence"
    noisy: bool = True


class SqueezeConfig(_Section):
    n: int = Field(ge=2)
    d: Frequency
    t_max: Time
    points: int = Field(default=50, ge=2)
    gamma: Frequency = 0.0


class SensitivitySection(_Section):
    volume: Volume = 9.0e5
    density: Density = 1.0e-3
    conversion: float = Field(default=0.9, gt=0.0, le=1.0)
    contrast: float = Field(default=1.0, gt=0.0, le=1.0)
    t2: Time = 300.0
    tau: Time = 1.5
    schemes: list[Scheme] = [Scheme.ECHO_ONLY, Scheme.CPMG, Scheme.MREV8, Scheme.SQUEEZE_1A, Scheme.SQUEEZE_2A]
    mode: Mode = Mode.SEQUENTIAL
    ac_frequency: Frequency = 2.0 * math.pi * 22e-3
    alpha_tilde: float | None = Field(default=None, ge=0.0)
    decay_power: float = Field(default=2.0, gt=0.0)
    epsilon_fraction: float = Field(default=0.7, gt=0.0, le=1.0)
    pulse_error: float = Field(default=0.0, ge=0.0, le=1.0)

    def to_domain(self, scheme: Scheme | None = None) -> SensitivityConfig:
        return SensitivityConfig(
            volume=self.volume,
            density=self.density,
            conversion=self.conversion,
            contrast=self.contrast,
            t2=self.t2,
            tau=self.tau,
            scheme=scheme or self.schemes[0],
            mode=self.mode,
            ac_frequency=self.ac_frequency,
            alpha_tilde=self.alpha_tilde,
            decay_power=self.decay_power,
            epsilon_fraction=self.epsilon_fraction,
            pulse_error=self.pulse_error,
        )


class SweepConfig(_Section):
    density_min: Density = 2e-6
    density_max: Density = 1e-3
    points: int = Field(default=31, ge=1)
    conversions: list[float] = [0.23, 0.9]
    crossover: bool = False


class RunConfig(_Section):
    command: Command | None = None
    seed: int = 0
    out: str | None = None
    geometry: GeometryConfig | None = None
    sequence: SequenceConfig = SequenceConfig()
    noise: NoiseConfig = NoiseConfig()
    simulate: SimulateConfig = SimulateConfig()
    squeeze: SqueezeConfig | None = None
    sensitivity: SensitivitySection = SensitivitySection()
    sweep: SweepConfig = SweepConfig()


def _locate(text: str, loc: tuple[Any, ...]) -> int | None:
    """1-based line of the offending key, searched inside its [section] when there is one."""
    keys = [part for part in loc if isinstance(part, str)]
    if not keys:
        return None
    lines = text.splitlines()
    start = 0
    if len(keys) > 1:
        header = re.compile(rf"^\s*\[{re.escape(keys[0])}\]\s*$")
        for i, line in enumerate(lines):
            if header.match(line):
                start = i + 1
                break
    pattern = re.compile(rf"^\s*{re.escape(keys[-1])}\s*=")
    for i in range(start, len(lines)):
        if pattern.match(lines[i]):
            return i + 1
    header = re.compile(rf"^\s*\[{re.escape(keys[-1])}\]\s*$")
    for i, line in enumerate(lines):
        if header.match(line):
            return i + 1
    return None


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: invalid TOML: {exc}") from exc
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        first = exc.errors()[0]
        loc = tuple(first.get("loc", ()))
        key = ".".join(str(part) for part in loc)
        message = first.get("msg", "invalid value")
        raise ConfigError(f"{source}: {key}: {message}", key=key, line=_locate(text, loc)) from exc


def load_config(path: Path | None) -> tuple[RunConfig, str]:
    """Parsed config and the raw text it came from (hashed into CSV headers)."""
    if path is None:
        return RunConfig(), ""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path)), text
