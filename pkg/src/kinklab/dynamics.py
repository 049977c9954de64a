"""Classical dynamics: velocity-Verlet integration and mode diagnostics.

Initial conditions follow the semi-classical picture: a mode carrying ``n``
phonons gets energy ``n * hbar * omega``, placed entirely in the kinetic
term, and thermal states draw each mode's energy from the Bose-Einstein
mean occupation with a random phase.  Energies and spectra are measured in
normal coordinates relative to the relaxed kink.
"""

from __future__ import annotations

import math
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericalError
from .models import ChainState, ModelSpec, gradient, potential_energy
from .modes import ModeBasis
from .relax import Equilibrium

DEFAULT_HBAR = 1.9e-5


@dataclass
class SimConfig:
    """Knobs for one classical run.

    ``temperature`` is measured in units of hbar (the occupation factor is
    ``1/(exp(omega/T) - 1)``).  ``mode_overrides`` maps 0-based mode index
    to an exact phonon count, replacing the thermal energy of that mode.
    ``sample_occupations`` switches thermal occupations from the mean to a
    geometric draw per mode.
    """

    dt: float
    steps: int
    record_every: int = 1
    hbar: float = DEFAULT_HBAR
    temperature: float = 0.0
    rng_seed: int = 0
    mode_overrides: dict = field(default_factory=dict)
    sample_occupations: bool = False

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if self.steps < 1:
            raise ConfigError("steps must be at least 1")
        if self.record_every < 1:
            raise ConfigError("record_every must be at least 1")
        if not self.hbar > 0:
            raise ConfigError("hbar must be positive")
        if self.temperature < 0:
            raise ConfigError("temperature must be non-negative")


@dataclass
class Trajectory:
    """Recorded snapshots of one integration."""

    times: np.ndarray
    states: list
    total_energy: np.ndarray


ModeSeries = namedtuple("ModeSeries", ["theta", "theta_dot", "energy"])
DftResult = namedtuple("DftResult", ["freqs", "magnitudes", "data_sum"])


def default_dt(basis: ModeBasis, samples_per_period: int = 50) -> float:
    """Timestep resolving the fastest mode with ``samples_per_period`` points."""
    return 2.0 * math.pi / float(basis.freqs[0]) / samples_per_period


def occupation(omega: float, temperature: float) -> float:
    """Bose-Einstein mean phonon number at temperature T (units of hbar)."""
    if temperature <= 0.0:
        return 0.0
    x = omega / temperature
    if x > 700.0:
        return 0.0
    return 1.0 / math.expm1(x)


def phonon_kick(basis: ModeBasis, eq: Equilibrium, j: int, n: float,
                hbar: float = DEFAULT_HBAR) -> ChainState:
    """Equilibrium positions plus an all-kinetic kick of ``n`` phonons in mode ``j``.

    The kinetic energy is exactly ``n * hbar * omega_j`` because the mode
    column has unit norm.
    """
    if not 0 <= j < basis.n:
        raise ConfigError(f"mode index {j} out of range [0, {basis.n})")
    if n < 0:
        raise ConfigError("phonon count must be non-negative")
    amp = math.sqrt(2.0 * n * hbar * basis.freqs[j])
    return ChainState(eq.positions.copy(), amp * basis.vectors[:, j])


def thermal_state(basis: ModeBasis, eq: Equilibrium, cfg: SimConfig) -> ChainState:
    """Thermal (plus per-mode override) initial condition.

    Each mode receives energy ``E_j = <n_j> hbar omega_j`` split between
    coordinate and velocity by a uniformly random phase from the seeded
    generator; overridden modes get an exact phonon count instead.
    """
    rng = np.random.default_rng(cfg.rng_seed)
    w = basis.freqs
    n_modes = basis.n
    occ = np.array([occupation(w[j], cfg.temperature) for j in range(n_modes)])
    if cfg.sample_occupations and cfg.temperature > 0.0:
        # geometric thermal draw with the Bose-Einstein mean: P(n) ~ q^n
        q = np.exp(-w / cfg.temperature)
        occ = rng.geometric(1.0 - q) - 1.0
    for j, n_override in cfg.mode_overrides.items():
        occ[int(j)] = float(n_override)
    energy = occ * cfg.hbar * w
    phases = rng.uniform(0.0, 2.0 * math.pi, n_modes)
    theta = np.sqrt(2.0 * energy) / w * np.sin(phases)
    theta_dot = np.sqrt(2.0 * energy) * np.cos(phases)
    return ChainState(
        eq.positions + basis.vectors @ theta,
        basis.vectors @ theta_dot,
    )


def integrate(spec: ModelSpec, state: ChainState, cfg: SimConfig) -> Trajectory:
    """Velocity-Verlet integration, recording every ``record_every`` steps."""
    x = state.positions.copy()
    v = state.velocities.copy()
    if x.shape != (spec.n_particles,):
        raise ConfigError("state does not match the model size")

    n_snap = cfg.steps // cfg.record_every + 1
    times = np.empty(n_snap)
    energies = np.empty(n_snap)
    states = []

    def record(slot, step):
        times[slot] = step * cfg.dt
        energies[slot] = potential_energy(spec, x) + 0.5 * float(v @ v)
        states.append(ChainState(x.copy(), v.copy()))

    f = -gradient(spec, x)
    record(0, 0)
    slot = 1
    half_dt = 0.5 * cfg.dt
    for step in range(1, cfg.steps + 1):
        v += half_dt * f
        x += cfg.dt * v
        f = -gradient(spec, x)
        if not np.all(np.isfinite(f)):
            raise NumericalError(f"non-finite force at step {step}")
        v += half_dt * f
        if step % cfg.record_every == 0:
            record(slot, step)
            slot += 1
    return Trajectory(times=times, states=states, total_energy=energies)


def mode_series(traj: Trajectory, basis: ModeBasis, eq: Equilibrium,
                j: int) -> ModeSeries:
    """Normal coordinate, velocity and energy of mode ``j`` along a trajectory.

    Displacements are measured from the relaxed positions, so a fresh
    ``n``-phonon kick reads back as energy ``n hbar omega`` at t = 0.
    """
    if not 0 <= j < basis.n:
        raise ConfigError(f"mode index {j} out of range [0, {basis.n})")
    col = basis.vectors[:, j]
    x0 = eq.positions
    theta = np.array([float(col @ (s.positions - x0)) for s in traj.states])
    theta_dot = np.array([float(col @ s.velocities) for s in traj.states])
    w2 = basis.freqs[j] ** 2
    energy = 0.5 * (theta_dot ** 2 + w2 * theta ** 2)
    return ModeSeries(theta=theta, theta_dot=theta_dot, energy=energy)


def dft(series, duration: float) -> DftResult:
    """Discrete Fourier transform magnitudes of a real series.

    ``F(k) = sum_j x(j) exp(-2 pi i (k-1)(j-1) / L)`` with 1-based j, k.
    Bin k maps to angular frequency ``2 pi (k-1) / duration``; bins
    k = 2 .. L/2 are returned and the k = 1 bin (the plain data sum) is
    reported separately.
    """
    series = np.asarray(series, dtype=float)
    length = len(series)
    if length < 4 or length % 2 != 0:
        raise ConfigError(f"series length must be even and >= 4, got {length}")
    spectrum = np.fft.fft(series)
    k = np.arange(1, length // 2)  # numpy bin k-1 for k = 2 .. L/2
    freqs = 2.0 * math.pi * k / duration
    return DftResult(
        freqs=freqs,
        magnitudes=np.abs(spectrum[1:length // 2]),
        data_sum=float(spectrum[0].real),
    )


def energy_drift(traj: Trajectory, window_fraction: float = 0.1) -> float:
    """Relative secular energy drift between the first and last windows.

    Total energy under a symplectic integrator oscillates within a step;
    comparing window means isolates the secular part.
    """
    e = traj.total_energy
    m = max(1, int(len(e) * window_fraction))
    first = float(np.mean(e[:m]))
    last = float(np.mean(e[-m:]))
    scale = abs(first) if first != 0.0 else 1.0
    return abs(last - first) / scale


def running_average(values, window: int) -> np.ndarray:
    """Centered moving average used for smoothed mode-energy output."""
    values = np.asarray(values, dtype=float)
    if window <= 1:
        return values.copy()
    kernel = np.ones(window) / window
    return np.convolve(values, kernel, mode="same")
