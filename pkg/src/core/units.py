"""Physical constants and the unit boundary.

Internally hbar = 1: energies are angular frequencies in rad/us, times in us,
lengths in nm, densities in nm^-3. Everything a user types carries a unit
suffix and is converted here exactly once.
"""
from __future__ import annotations

import math
import re

from scipy import constants as sc

from src.core.errors import InputError

G_FACTOR = 2.0023

_GMUB = G_FACTOR * sc.physical_constants["Bohr magneton"][0]

# mu0/(4 pi) (g muB)^2 / hbar in rad s^-1 m^3, then rad us^-1 nm^3
J0_SI = sc.mu_0 / (4.0 * math.pi) * _GMUB**2 / sc.hbar
J0 = J0_SI * 1e21

# hbar/(g muB) in T s
HBAR_OVER_GMUB = sc.hbar / _GMUB

US_PER_S = 1e6
CM3_TO_NM3 = 1e-21

_UNITS: dict[str, dict[str, float]] = {
    "time": {"s": 1e6, "ms": 1e3, "us": 1.0, "µs": 1.0, "ns": 1e-3},
    "length": {"m": 1e9, "cm": 1e7, "mm": 1e6, "um": 1e3, "µm": 1e3, "nm": 1.0},
    "frequency": {
        "Hz": 2.0 * math.pi * 1e-6,
        "kHz": 2.0 * math.pi * 1e-3,
        "MHz": 2.0 * math.pi,
        "GHz": 2.0 * math.pi * 1e3,
        "rad/s": 1e-6,
        "rad/us": 1.0,
        "1/s": 1e-6,
        "1/us": 1.0,
    },
    "density": {"cm^-3": CM3_TO_NM3, "m^-3": 1e-27, "nm^-3": 1.0},
    "volume": {"nm^3": 1.0, "um^3": 1e9, "cm^3": 1e21},
    "angle": {"rad": 1.0, "deg": math.pi / 180.0},
}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([^\s]+)\s*$")


def unit_kinds() -> tuple[str, ...]:
    return tuple(_UNITS)


def parse_quantity(text: str, kind: str) -> float:
    """'3 kHz' -> 0.01885 (rad/us). Raises InputError on a bare number or wrong unit."""
    if kind not in _UNITS:
        raise InputError(f"unknown quantity kind {kind!r}")
    if not isinstance(text, str):
        raise InputError(f"{kind} value {text!r} needs a unit suffix")
    match = _QUANTITY.match(text)
    if match is None:
        raise InputError(f"cannot parse {kind} quantity {text!r}; expected '<number> <unit>'")
    value, unit = float(match.group(1)), match.group(2)
    table = _UNITS[kind]
    if unit not in table:
        raise InputError(f"unit {unit!r} is not a {kind} unit; use one of {sorted(table)}")
    return value * table[unit]


def format_quantity(value: float, kind: str, unit: str) -> str:
    return f"{value / _UNITS[kind][unit]:.12g} {unit}"
