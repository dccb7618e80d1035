from __future__ import annotations


class SpinSimError(Exception):
    """Base error; `exit_code` is what the CLI returns when it escapes."""

    exit_code = 1


class InputError(SpinSimError, ValueError):
    exit_code = 2


class SizeGuardError(InputError):
    pass


class PlacementError(InputError):
    """Random placement could not honour the exclusion radius."""


class ConfigError(SpinSimError):
    exit_code = 2

    def __init__(self, message: str, key: str | None = None, line: int | None = None) -> None:
        self.key = key
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")


class NumericalContractError(SpinSimError):
    exit_code = 3
