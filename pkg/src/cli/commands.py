"""Subcommand implementations. Each returns a Table; app.py renders and writes it."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

import numpy as np

from src.analysis.squeezing import (
    moment_observables,
    nu_optimal,
    xi2_from_moments,
    xi2_ideal,
    xi2_metrological,
    xi2_noisy_protected,
    xi2_noisy_unprotected,
)
from src.cli.config import RunConfig, SequenceConfig, load_config
from src.cli.output import Table, config_digest, render_csv, write_csv
from src.core.errors import ConfigError, InputError, NumericalContractError
from src.core.logger import log_event
from src.core.settings import get_settings
from src.core.units import J0
from src.ensemble.gaps import GapKind, gap_estimate, gap_exact
from src.ensemble.geometry import (
    GeometryKind,
    SpinEnsemble,
    build_ensemble,
    coupling_mean,
    coupling_median,
    nearest_neighbour_coupling,
)
from src.ensemble.table_io import read_positions, write_positions
from src.magnetometry.sensitivity import crossover_fraction, density_sweep, evaluate_point, t_epr
from src.models.hamiltonians import Variant, h_ising, ideal_oat, project_check
from src.noise.trajectories import NoiseModel, TrajectoryConfig, leakage_observable, run_noisy_schedule
from src.sequences.average_hamiltonian import (
    alpha_tilde,
    effective_field_vector,
    field_angle,
    magnus,
    magnus_terms,
    moment_t6,
    sequence_schedule,
    toggling_frames,
)
from src.sequences.pulses import PulseSequence
from src.sequences.templates import (
    cpmg,
    delays_for_epsilon,
    fit_average_hamiltonian,
    mrev8_with_echo,
    reference_ensemble,
    spin_echo,
    wahuha,
)
from src.spins.evolution import EvolutionStep, evolve, run_schedule
from src.spins.operators import X_AXIS, Z_AXIS, Basis, SpinAxis, check_size, coherent_state, expectation

H1_RESIDUAL_MAX = 1e-6
H2_RELATIVE_MAX = 1e-9


@dataclass(frozen=True)
class RunContext:
    config: RunConfig
    config_text: str
    seed: int
    logger: logging.Logger
    workers: int | None = None
    geometry_file: Path | None = None


def _ensemble(ctx: RunContext) -> SpinEnsemble:
    if ctx.geometry_file is not None:
        positions = read_positions(ctx.geometry_file)
        axis = SpinAxis.named(ctx.config.geometry.quant_axis) if ctx.config.geometry else Z_AXIS
        return SpinEnsemble(positions=positions, quant_axis=axis).with_couplings()
    if ctx.config.geometry is None:
        raise ConfigError("a [geometry] section is required for this command", key="geometry")
    return build_ensemble(ctx.config.geometry.to_spec(ctx.seed))


def _mrev(cfg: SequenceConfig, variant: Variant) -> PulseSequence:
    if cfg.tau_plus is not None or cfg.tau_minus is not None:
        return mrev8_with_echo(cfg.tau, cfg.tau_plus, cfg.tau_minus, variant)
    if cfg.epsilon is not None:
        tau_plus, tau_minus = delays_for_epsilon(cfg.tau, cfg.epsilon, variant)
        return mrev8_with_echo(cfg.tau, tau_plus, tau_minus, variant)
    return mrev8_with_echo(cfg.tau, variant=variant)


def build_sequence(cfg: SequenceConfig) -> PulseSequence:
    if cfg.file is not None:
        path = Path(cfg.file)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read sequence file {path}: {exc}", key="sequence.file") from exc
        return PulseSequence.from_text(text, name=path.stem)
    if cfg.template == "mrev8_echo":
        return _mrev(cfg, cfg.variant)
    if cfg.template == "wahuha":
        return wahuha(cfg.tau)
    if cfg.template == "spin_echo":
        return spin_echo(cfg.tau)
    return cpmg(cfg.tau, cfg.n_pi)


def _trajectories(ctx: RunContext) -> tuple[NoiseModel, TrajectoryConfig]:
    noise = ctx.config.noise
    workers = ctx.workers or noise.workers or get_settings().workers
    model = NoiseModel(gamma=noise.gamma, tau_c=noise.tau_c, mode=noise.mode)
    dt = noise.dt if noise.dt is not None else noise.tau_c / 20.0
    return model, TrajectoryConfig(n_traj=noise.n_traj, dt=dt, seed=ctx.seed, workers=workers)


def _steps(seq: PulseSequence, h_int, cycles: int, dynamics: str) -> list[EvolutionStep]:
    if dynamics == "sequence":
        return sequence_schedule(seq, h_int, cycles)
    hbar = magnus(toggling_frames(seq, h_int), 1)
    return [EvolutionStep(duration=seq.cycle_time, hamiltonian=hbar, record=True) for _ in range(cycles)]


def cmd_simulate(ctx: RunContext) -> Table:
    """Stroboscopic squeezing curves for each variant, noiseless and noisy."""
    sim = ctx.config.simulate
    ensemble = _ensemble(ctx)
    n = ensemble.n
    check_size(n, Basis.FULL)
    h_int = h_ising(ensemble)
    observables = moment_observables(n, Basis.FULL)
    observables["leakage"] = leakage_observable(n)
    table = Table(["variant", "noisy", "cycle", "t_us", "jx", "jy", "jz", "xi2", "leakage"])

    for variant in sim.variants:
        seq = _mrev(ctx.config.sequence, variant)
        mean_axis = "x" if variant == "1a" else "z"
        psi = coherent_state(X_AXIS if variant == "1a" else Z_AXIS, n, Basis.FULL)
        steps = _steps(seq, h_int, sim.cycles, sim.dynamics)
        started = time.perf_counter()
        _, states = run_schedule(psi, steps)
        for cycle, state in enumerate(states, start=1):
            moments = {key: expectation(state, op) for key, op in observables.items()}
            report = xi2_from_moments(moments, n, mean_axis)
            table.add(variant, False, cycle, cycle * seq.cycle_time, moments["jx"], moments["jy"], moments["jz"], report.xi2, moments["leakage"])
        log_event(
            ctx.logger,
            "INFO",
            "noiseless_curve_done",
            variant=variant,
            cycles=sim.cycles,
            latency_ms=round((time.perf_counter() - started) * 1000, 2),
        )
        if not sim.noisy or ctx.config.noise.gamma == 0.0:
            continue
        model, traj = _trajectories(ctx)
        # average dynamics runs in the toggling frame, where the lab S_z noise is the averaged toggled S_z
        field = effective_field_vector(seq) if sim.dynamics == "average" else None
        started = time.perf_counter()
        result = run_noisy_schedule(psi, steps, model, traj, observables, field=field)
        means = result.means
        for k, t in enumerate(result.times):
            moments = {key: float(values[k]) for key, values in means.items()}
            report = xi2_from_moments(moments, n, mean_axis)
            table.add(variant, True, k + 1, float(t), moments["jx"], moments["jy"], moments["jz"], report.xi2, moments["leakage"])
        log_event(
            ctx.logger,
            "INFO",
            "noisy_curve_done",
            variant=variant,
            n_traj=traj.n_traj,
            latency_ms=round((time.perf_counter() - started) * 1000, 2),
        )
    table.meta["n"] = n
    return table


def cmd_verify_sequence(ctx: RunContext) -> Table:
    """Average-Hamiltonian report for the configured sequence on a reference ensemble."""
    cfg = ctx.config.sequence
    seq = build_sequence(cfg)
    ensemble = _ensemble(ctx) if (ctx.config.geometry or ctx.geometry_file) else reference_ensemble()
    h = h_ising(ensemble)
    h1, h2, h3 = magnus_terms(toggling_frames(seq, h), 3)
    scale = h.norm()
    field = effective_field_vector(seq)
    table = Table(["quantity", "value"])
    table.add("name", seq.name)
    table.add("n_pulses", seq.n_pulses)
    table.add("cycle_time_us", seq.cycle_time)
    table.add("h2_norm_relative", h2.norm() / scale)
    table.add("h3_norm_relative", h3.norm() / scale)
    moment = moment_t6(h3)
    table.add("moment_t6", moment)
    if ensemble.density is not None:
        table.add("alpha_tilde", alpha_tilde(moment, ensemble.density))
    table.add("field_x", float(field[0]))
    table.add("field_y", float(field[1]))
    table.add("field_z", float(field[2]))
    table.add("field_nu", field_angle(field))

    if cfg.template == "mrev8_echo" and cfg.file is None:
        fit = fit_average_hamiltonian(h1, ensemble, cfg.variant)
        table.add("epsilon", fit.epsilon)
        table.add("scale", fit.scale)
        table.add("fit_relative_residual", fit.relative_residual)
        violated = fit.relative_residual >= H1_RESIDUAL_MAX or h2.norm() / scale >= H2_RELATIVE_MAX
        if violated:
            log_event(
                ctx.logger,
                "ERROR",
                "sequence_contract_violated",
                residual=fit.relative_residual,
                h2_relative=h2.norm() / scale,
            )
            raise NumericalContractError(
                f"{seq.name}: H1 fit residual {fit.relative_residual:.2e}, H2 relative norm {h2.norm() / scale:.2e}"
            )
    return table


def _nn_coupling(ctx: RunContext, ensemble: SpinEnsemble) -> tuple[GapKind, float] | None:
    geometry = ctx.config.geometry
    if ctx.geometry_file is not None or geometry is None:
        return None
    if geometry.kind is GeometryKind.CHAIN_1D:
        return GapKind.CHAIN_DIPOLAR, J0 / geometry.spacing**3
    if geometry.kind is GeometryKind.LATTICE_2D:
        return GapKind.LATTICE_DIPOLAR, J0 / geometry.spacing**3
    if ensemble.density is None:
        return None
    return GapKind.RANDOM, nearest_neighbour_coupling(ensemble.density)


def cmd_gap(ctx: RunContext, export_geometry: Path | None = None) -> Table:
    ensemble = _ensemble(ctx)
    if export_geometry is not None and ensemble.positions is not None:
        write_positions(export_geometry, ensemble.positions)
        log_event(ctx.logger, "INFO", "geometry_exported", path=str(export_geometry), n=ensemble.n)
    result = gap_exact(ensemble)
    table = Table(["quantity", "value"])
    table.add("n", ensemble.n)
    table.add("gap_exact", result.gap)
    table.add("gap_sign", result.sign)
    table.add("gap_warning", result.warning)
    table.add("symmetric_energy", result.symmetric_energy)
    scaling = _nn_coupling(ctx, ensemble)
    if scaling is not None:
        kind, d_0 = scaling
        table.add("gap_estimate_kind", kind.value)
        table.add("gap_estimate", gap_estimate(kind, ensemble.n, d_0, n_s=ensemble.density))
    table.add("coupling_mean", coupling_mean(ensemble))
    table.add("coupling_median", coupling_median(ensemble))
    return table


def cmd_squeeze(ctx: RunContext) -> Table:
    """Closed-form and exact OAT squeezing, plus the noisy closed forms at Gamma t."""
    sq = ctx.config.squeeze
    if sq is None:
        raise ConfigError("a [squeeze] section is required for this command", key="squeeze")
    h = ideal_oat(sq.d, sq.n, Basis.DICKE)
    psi = coherent_state(X_AXIS, sq.n, Basis.DICKE)
    table = Table(["t_us", "chi", "xi2_ideal", "xi2_noisy_unprotected", "xi2_noisy_protected", "xi2_simulated", "jx", "nu_opt"])
    for t in np.linspace(0.0, sq.t_max, sq.points):
        chi = sq.d * float(t)
        report = xi2_metrological(evolve(psi, h, float(t)), "x")
        gamma_t = sq.gamma * float(t)
        table.add(
            float(t),
            chi,
            xi2_ideal(sq.n, chi),
            xi2_noisy_unprotected(sq.n, chi, gamma_t),
            xi2_noisy_protected(sq.n, chi, gamma_t),
            report.xi2,
            report.jx_mean,
            nu_optimal(sq.n, chi)[0],
        )
    return table


_SENSITIVITY_COLUMNS = ["scheme", "n_s_cm3", "N", "T_opt_us", "t_sqz_us", "xi", "eta_T_per_sqrtHz", "xi_source"]


def cmd_sensitivity(ctx: RunContext) -> Table:
    section = ctx.config.sensitivity
    table = Table(list(_SENSITIVITY_COLUMNS))
    for scheme in section.schemes:
        point = evaluate_point(section.to_domain(scheme))
        table.add(scheme, point.density_cm3, point.n, point.total, point.t_sqz, point.xi, point.eta, point.xi_source)
    table.meta["t_epr_us"] = t_epr(section.density, section.conversion)
    return table


def cmd_sweep(ctx: RunContext) -> Table:
    section, sweep = ctx.config.sensitivity, ctx.config.sweep
    if sweep.density_max < sweep.density_min:
        raise ConfigError("sweep.density_max must be >= sweep.density_min", key="sweep.density_max")
    densities = np.geomspace(sweep.density_min, sweep.density_max, sweep.points)
    base = section.to_domain()
    table = Table(["conversion"] + list(_SENSITIVITY_COLUMNS))
    for conversion in sweep.conversions:
        for curve in density_sweep(replace(base, conversion=conversion), densities, section.schemes):
            for p in curve.points:
                table.add(conversion, curve.scheme, p.density_cm3, p.n, p.total, p.t_sqz, p.xi, p.eta, p.xi_source)
    if sweep.crossover:
        f_star = crossover_fraction(base, densities)
        table.meta["crossover_fraction"] = "none" if f_star is None else f_star
        log_event(ctx.logger, "INFO", "crossover_found", conversion=f_star)
    return table


def cmd_project_check(ctx: RunContext) -> Table:
    ensemble = _ensemble(ctx)
    table = Table(["target", "c_quad", "expected_c_quad", "c_id", "relative_residual", "c_quad_error", "ok"])
    failed = []
    for target in ("zz", "dq"):
        fit = project_check(ensemble, target)
        table.add(target, fit.c_quad, fit.expected_c_quad, fit.c_id, fit.relative_residual, fit.c_quad_error, fit.satisfies_contract)
        if not fit.satisfies_contract:
            failed.append(target)
    if failed:
        log_event(ctx.logger, "ERROR", "projection_contract_violated", targets=failed, n=ensemble.n)
        raise NumericalContractError(f"projection identity violated for {', '.join(failed)}")
    return table


COMMANDS: dict[str, Callable[[RunContext], Table]] = {
    "simulate": cmd_simulate,
    "verify-sequence": cmd_verify_sequence,
    "gap": cmd_gap,
    "squeeze": cmd_squeeze,
    "sensitivity": cmd_sensitivity,
    "sweep": cmd_sweep,
    "project-check": cmd_project_check,
}


def regenerate_goldens(config_dir: Path, out_dir: Path, logger: logging.Logger, workers: int | None = None) -> Table:
    """Run every recipe in config_dir that names its command; one CSV per recipe."""
    paths = sorted(config_dir.glob("*.toml"))
    if not paths:
        raise InputError(f"no recipes found in {config_dir}")
    table = Table(["recipe", "command", "rows", "path"])
    for path in paths:
        config, text = load_config(path)
        if config.command is None:
            log_event(logger, "WARN", "recipe_skipped", recipe=path.name, reason="no command key")
            continue
        ctx = RunContext(config=config, config_text=text, seed=config.seed, logger=logger, workers=workers)
        result = COMMANDS[config.command](ctx)
        target = out_dir / f"{path.stem}.csv"
        write_csv(render_csv(result, config.command, config_digest(text), config.seed), target)
        log_event(logger, "INFO", "golden_written", recipe=path.name, rows=len(result.rows))
        table.add(path.name, config.command, len(result.rows), str(target))
    return table

