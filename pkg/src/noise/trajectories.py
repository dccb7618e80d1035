"""Monte-Carlo trajectories under a fluctuating field sum_k omega_k(t) f.S_k, f = z unless a frame is given."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from src.core.errors import InputError
from src.core.logger import get_logger, log_event
from src.noise.ou_process import collective_projection, per_spin_variance, sample_ou_paths, substream
from src.spins.evolution import CollectiveRotation, EvolutionStep, apply_gate, evolve
from src.spins.operators import (
    X_AXIS,
    Basis,
    OperatorMatrix,
    SpinAxis,
    StateVector,
    expectation,
    identity,
    symmetric_projector,
)

FIELD_TOL = 1e-12


class NoiseMode(str, Enum):
    PER_SPIN = "per_spin"
    COLLECTIVE_ONLY = "collective_only"


@dataclass(frozen=True)
class NoiseModel:
    gamma: float
    tau_c: float
    mode: NoiseMode = NoiseMode.PER_SPIN

    def __post_init__(self) -> None:
        if self.gamma < 0:
            raise InputError(f"gamma must be >= 0, got {self.gamma}")
        if self.tau_c <= 0:
            raise InputError(f"tau_c must be positive, got {self.tau_c}")

    def variance(self, n: int) -> float:
        return per_spin_variance(self.gamma, self.tau_c, n)


@dataclass(frozen=True)
class TrajectoryConfig:
    n_traj: int
    dt: float
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        if self.n_traj < 1:
            raise InputError("need at least one trajectory")
        if self.dt <= 0:
            raise InputError("dt must be positive")
        if self.workers < 1:
            raise InputError("workers must be >= 1")

    def check_against(self, noise: NoiseModel) -> None:
        if self.dt > noise.tau_c / 10.0 * (1.0 + 1e-12):
            raise InputError(f"dt={self.dt} us exceeds tau_c/10 = {noise.tau_c / 10.0} us")


@dataclass(frozen=True)
class NoisyResult:
    times: np.ndarray
    samples: dict[str, np.ndarray]

    @property
    def n_traj(self) -> int:
        first = next(iter(self.samples.values()))
        return int(first.shape[0])

    @property
    def means(self) -> dict[str, np.ndarray]:
        return {key: s.mean(axis=0) for key, s in self.samples.items()}

    @property
    def stderr(self) -> dict[str, np.ndarray]:
        if self.n_traj < 2:
            return {key: np.zeros(s.shape[1]) for key, s in self.samples.items()}
        return {key: s.std(axis=0, ddof=1) / math.sqrt(s.shape[0]) for key, s in self.samples.items()}


def _sz_table(n: int, basis: Basis, mode: NoiseMode) -> np.ndarray:
    """Diagonals the field rows couple to: S_z^k per spin, or J_z alone for collective noise."""
    if basis is Basis.DICKE:
        return (n / 2.0 - np.arange(n + 1, dtype=float))[None, :]
    idx = np.arange(2**n)
    # site 0 is the most significant bit, bit value 0 is spin up
    bits = (idx[None, :] >> (n - 1 - np.arange(n))[:, None]) & 1
    table = 0.5 - bits.astype(float)
    if mode is NoiseMode.COLLECTIVE_ONLY:
        return table.sum(axis=0, keepdims=True)
    return table


class _NoisePath:
    """Piecewise-constant field rows on a dt grid with exact time integrals."""

    def __init__(self, rows: np.ndarray, dt: float) -> None:
        self.rows = rows
        self.dt = dt
        self.cum = np.concatenate([np.zeros((rows.shape[0], 1)), np.cumsum(rows, axis=1) * dt], axis=1)

    def integral(self, t: float) -> np.ndarray:
        i = min(int(t // self.dt), self.rows.shape[1] - 1)
        return self.cum[:, i] + (t - i * self.dt) * self.rows[:, i]

    def value(self, t: float) -> np.ndarray:
        return self.rows[:, min(int(t // self.dt), self.rows.shape[1] - 1)]


def _draw_rows(noise: NoiseModel, cfg: TrajectoryConfig, n: int, basis: Basis, total: float, index: int) -> np.ndarray:
    n_bins = max(1, int(math.ceil(total / cfg.dt - 1e-9)))
    paths = sample_ou_paths(noise.tau_c, noise.variance(n), cfg.dt, n_bins, n, substream(cfg.seed, index))
    if noise.mode is NoiseMode.COLLECTIVE_ONLY:
        return collective_projection(paths)[None, :]
    if basis is not Basis.FULL:
        raise InputError("per-spin noise needs the FULL basis; use collective_only in the DICKE basis")
    return paths


def _free_step(state: StateVector, h: OperatorMatrix, t0: float, duration: float, path: _NoisePath, table: np.ndarray) -> StateVector:
    if duration == 0.0:
        return state
    if h.is_diagonal:
        phase = (path.integral(t0 + duration) - path.integral(t0)) @ table
        return evolve(state, h, duration, extra_diagonal=phase / duration)
    # piecewise-constant field: split at the grid edges
    t, end = t0, t0 + duration
    while t < end - 1e-15:
        edge = min((math.floor(t / path.dt + 1e-12) + 1) * path.dt, end)
        state = evolve(state, h, edge - t, extra_diagonal=path.value(t) @ table)
        t = edge
    return state


def _run_trajectory(
    index: int,
    state: StateVector,
    steps: Sequence[EvolutionStep],
    noise: NoiseModel,
    cfg: TrajectoryConfig,
    observables: Mapping[str, OperatorMatrix],
    table: np.ndarray,
    total: float,
) -> np.ndarray:
    path = _NoisePath(_draw_rows(noise, cfg, state.n, state.basis, total, index), cfg.dt)
    t = 0.0
    rows: list[list[float]] = []
    for step in steps:
        if step.gate is not None:
            state = apply_gate(state, step.gate)
        else:
            state = _free_step(state, step.hamiltonian, t, step.duration, path, table)  # type: ignore[arg-type]
            t += step.duration
        if step.record:
            rows.append([expectation(state, op) for op in observables.values()])
    return np.array(rows).T


def noise_frame(field: np.ndarray) -> tuple[float, CollectiveRotation | None]:
    """(|field|, U) with U S_z U^dagger = field.S / |field| on every spin.

    U is None when the field already points along +z or vanishes.
    """
    field = np.asarray(field, dtype=float)
    if field.shape != (3,):
        raise InputError(f"noise field must be a 3-vector, got shape {field.shape}")
    strength = float(np.linalg.norm(field))
    if strength < FIELD_TOL:
        return 0.0, None
    unit = field / strength
    axis = np.cross([0.0, 0.0, 1.0], unit)
    sin_angle = float(np.linalg.norm(axis))
    if sin_angle < FIELD_TOL:
        return strength, None if unit[2] > 0 else CollectiveRotation(X_AXIS, math.pi)
    return strength, CollectiveRotation(SpinAxis.of(*axis), math.atan2(sin_angle, unit[2]))


def _conjugate_all(
    rotation: CollectiveRotation,
    state: StateVector,
    steps: list[EvolutionStep],
    observables: Mapping[str, OperatorMatrix],
) -> tuple[StateVector, list[EvolutionStep], dict[str, OperatorMatrix]]:
    """Rewrite the problem for psi' = U^dagger psi, where the noise couples to S_z alone."""
    u = rotation.matrix(state.n, state.basis)
    u_dag = u.dagger()
    # schedules reuse one hamiltonian object per cycle; holding op keeps its id unique
    seen: dict[int, tuple[OperatorMatrix, OperatorMatrix]] = {}

    def conj(op: OperatorMatrix) -> OperatorMatrix:
        if id(op) not in seen:
            seen[id(op)] = (op, u_dag @ op @ u)
        return seen[id(op)][1]

    rotated: list[EvolutionStep] = []
    for step in steps:
        if step.gate is not None:
            gate = step.gate.matrix(state.n, state.basis) if isinstance(step.gate, CollectiveRotation) else step.gate
            rotated.append(EvolutionStep(gate=conj(gate), record=step.record))
        else:
            rotated.append(EvolutionStep(duration=step.duration, hamiltonian=conj(step.hamiltonian), record=step.record))  # type: ignore[arg-type]
    frame_state = apply_gate(state, u_dag)
    return frame_state, rotated, {key: u_dag @ op @ u for key, op in observables.items()}


def run_noisy_schedule(
    state: StateVector,
    steps: Sequence[EvolutionStep],
    noise: NoiseModel,
    cfg: TrajectoryConfig,
    observables: Mapping[str, OperatorMatrix],
    field: np.ndarray | None = None,
) -> NoisyResult:
    """Average `observables` over trajectories at every recorded step.

    Trajectory i draws its field from substream(seed, i) and results are
    assembled by index, so the output does not depend on `workers`.

    `field` is the direction and strength the noise couples to, omega_k f.S_k
    instead of omega_k S_z^k; average-Hamiltonian runs pass the cycle-averaged
    toggled S_z here. The run is carried out in the frame where f points
    along z, with gamma scaled by |f|^2.
    """
    cfg.check_against(noise)
    if not observables:
        raise InputError("no observables requested")
    steps = list(steps)
    if field is not None:
        strength, rotation = noise_frame(field)
        noise = replace(noise, gamma=noise.gamma * strength**2)
        if rotation is not None:
            state, steps, observables = _conjugate_all(rotation, state, steps, observables)
    if not any(s.record for s in steps):
        last = steps[-1]
        steps[-1] = EvolutionStep(duration=last.duration, hamiltonian=last.hamiltonian, gate=last.gate, record=True)
    times, t = [], 0.0
    for step in steps:
        if step.hamiltonian is not None:
            t += step.duration
        if step.record:
            times.append(t)
    table = _sz_table(state.n, state.basis, noise.mode)

    def one(index: int) -> np.ndarray:
        return _run_trajectory(index, state, steps, noise, cfg, observables, table, t)

    log_event(
        get_logger(),
        "INFO",
        "noisy_run_started",
        n=state.n,
        basis=state.basis.value,
        mode=noise.mode.value,
        gamma=noise.gamma,
        n_traj=cfg.n_traj,
        records=len(times),
    )
    if cfg.workers == 1:
        results = [one(i) for i in range(cfg.n_traj)]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(one, range(cfg.n_traj)))
    stacked = np.stack(results)  # (n_traj, n_obs, n_records)
    samples = {key: stacked[:, k, :] for k, key in enumerate(observables)}
    return NoisyResult(times=np.array(times), samples=samples)


def evolve_noisy(
    state: StateVector,
    h: OperatorMatrix,
    noise: NoiseModel,
    cfg: TrajectoryConfig,
    t: float,
    observables: Mapping[str, OperatorMatrix],
    n_points: int = 1,
) -> NoisyResult:
    """Free evolution under h plus noise, sampled at n_points equally spaced times up to t."""
    if t <= 0 or n_points < 1:
        raise InputError("need t > 0 and n_points >= 1")
    steps = [EvolutionStep(duration=t / n_points, hamiltonian=h, record=True) for _ in range(n_points)]
    return run_noisy_schedule(state, steps, noise, cfg, observables)


def leakage_observable(n: int) -> OperatorMatrix:
    """1 - P_sym, the weight outside the J = N/2 multiplet."""
    return identity(n, Basis.FULL) - symmetric_projector(n)


def leakage_probe(states: Sequence[StateVector]) -> np.ndarray:
    if not states:
        return np.zeros(0)
    n = states[0].n
    op = leakage_observable(n)
    return np.array([max(expectation(s, op), 0.0) for s in states])


def fit_decay_rate(times: np.ndarray, values: np.ndarray, t_min: float | None = None, t_max: float | None = None) -> float:
    """Rate k of values ~ A e^{-k t} from a log-linear least-squares fit over [t_min, t_max]."""
    times, values = np.asarray(times, dtype=float), np.asarray(values, dtype=float)
    mask = np.ones_like(times, dtype=bool)
    if t_min is not None:
        mask &= times >= t_min
    if t_max is not None:
        mask &= times <= t_max
    mask &= values > 0
    if mask.sum() < 2:
        raise InputError("need at least two positive points to fit a decay rate")
    slope, _ = np.polyfit(times[mask], np.log(values[mask]), 1)
    return float(-slope)
