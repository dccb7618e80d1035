"""Pulse-sequence data model, its line-oriented text format and the pulse-error contrast model."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from src.core.errors import InputError
from src.spins.evolution import CollectiveRotation
from src.spins.operators import ID2, SpinAxis

CYCLIC_TOL = 1e-10
_NAMED_AXES = ("x", "y", "z", "-x", "-y", "-z")


@dataclass(frozen=True)
class Rotation:
    """Instantaneous collective rotation by `angle` (rad) about `axis`."""

    axis: SpinAxis
    angle: float

    def __post_init__(self) -> None:
        if not (-2.0 * math.pi < self.angle <= 2.0 * math.pi):
            raise InputError(f"rotation angle must lie in (-2pi, 2pi], got {self.angle}")

    @property
    def gate(self) -> CollectiveRotation:
        return CollectiveRotation(self.axis, self.angle)

    @property
    def single_spin(self) -> np.ndarray:
        return self.gate.single_spin


@dataclass(frozen=True)
class Delay:
    duration: float

    def __post_init__(self) -> None:
        if not self.duration > 0:
            raise InputError(f"delays must be positive, got {self.duration}")


PulseEvent = Union[Rotation, Delay]


def pulse(axis: str, angle: float = math.pi / 2) -> Rotation:
    return Rotation(SpinAxis.named(axis), angle)


@dataclass(frozen=True)
class PulseSequence:
    events: tuple[PulseEvent, ...]
    name: str = "custom"

    def __post_init__(self) -> None:
        object.__setattr__(self, "events", tuple(self.events))
        for event in self.events:
            if not isinstance(event, (Rotation, Delay)):
                raise InputError(f"unsupported pulse event {event!r}")
        if self.cycle_time <= 0:
            raise InputError("a pulse sequence needs at least one delay")

    @property
    def cycle_time(self) -> float:
        return float(sum(e.duration for e in self.events if isinstance(e, Delay)))

    @property
    def rotations(self) -> list[Rotation]:
        return [e for e in self.events if isinstance(e, Rotation)]

    @property
    def n_pulses(self) -> int:
        return len(self.rotations)

    def net_single_spin(self) -> np.ndarray:
        """Product of the single-spin rotations, latest on the left."""
        u = ID2.copy()
        for rotation in self.rotations:
            u = rotation.single_spin @ u
        return u

    @property
    def is_cyclic(self) -> bool:
        # u^(x)N is proportional to the identity iff u is
        u = self.net_single_spin()
        return bool(abs(u[0, 1]) < CYCLIC_TOL and abs(u[1, 0]) < CYCLIC_TOL and abs(u[0, 0] - u[1, 1]) < CYCLIC_TOL)

    def require_cyclic(self) -> None:
        if not self.is_cyclic:
            raise InputError(f"sequence {self.name!r} is not cyclic: its net rotation is not the identity")

    def repeat(self, times: int) -> PulseSequence:
        if times < 1:
            raise InputError("repeat count must be >= 1")
        return PulseSequence(self.events * times, name=f"{self.name}x{times}")

    def __add__(self, other: PulseSequence) -> PulseSequence:
        return PulseSequence(self.events + other.events, name=f"{self.name}+{other.name}")

    def to_text(self) -> str:
        lines = [f"# {self.name}: {self.n_pulses} pulses, t_c = {self.cycle_time!r} us"]
        for event in self.events:
            if isinstance(event, Delay):
                lines.append(f"DELAY {event.duration!r}")
            else:
                lines.append(f"ROT {axis_label(event.axis)} {event.angle!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, name: str = "custom") -> PulseSequence:
        return cls(tuple(_parse_lines(text.splitlines())), name=name)


def axis_label(axis: SpinAxis) -> str:
    for label in _NAMED_AXES:
        if np.allclose(SpinAxis.named(label).vector, axis.vector, atol=1e-15):
            return label
    return ",".join(repr(float(c)) for c in axis.vector)


def _parse_axis(token: str, lineno: int) -> SpinAxis:
    try:
        if "," in token:
            parts = [float(p) for p in token.split(",")]
            if len(parts) != 3:
                raise ValueError(token)
            return SpinAxis.of(*parts)
        return SpinAxis.named(token)
    except (ValueError, InputError) as exc:
        raise InputError(f"line {lineno}: bad rotation axis {token!r}") from exc


def _parse_lines(lines: Iterable[str]) -> list[PulseEvent]:
    events: list[PulseEvent] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        keyword = parts[0].upper()
        try:
            if keyword == "DELAY" and len(parts) == 2:
                events.append(Delay(float(parts[1])))
            elif keyword == "ROT" and len(parts) == 3:
                events.append(Rotation(_parse_axis(parts[1], lineno), float(parts[2])))
            else:
                raise InputError(f"line {lineno}: expected 'ROT axis angle' or 'DELAY us', got {raw.strip()!r}")
        except ValueError as exc:
            if isinstance(exc, InputError) and str(exc).startswith("line "):
                raise
            raise InputError(f"line {lineno}: {exc}") from exc
    return events


def pulse_error_contrast(contrast: float, p: float, k: int) -> float:
    """C' = C (1 - p)^k for k pulses with depolarizing probability p each."""
    if not 0.0 <= p <= 1.0:
        raise InputError(f"pulse error probability must be in [0, 1], got {p}")
    if k < 0:
        raise InputError("pulse count must be >= 0")
    return contrast * (1.0 - p) ** k


def max_pulse_error(k: int, min_ratio: float) -> float:
    """Largest per-pulse error keeping C'/C >= min_ratio over k pulses."""
    if k < 1 or not 0.0 < min_ratio <= 1.0:
        raise InputError("need k >= 1 and a contrast ratio in (0, 1]")
    return 1.0 - min_ratio ** (1.0 / k)
