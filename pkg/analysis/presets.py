"""
Named initial data: zero, single-mode, taylor-green and rough-envelope.

Rough fields have Fourier coefficients |k|^{-(s + d/2)} with seeded
phases drawn per mode, so a mode keeps its phase across resolutions.
"""
import logging

import numpy as np

from lagrangian.dynamics import ModelF
from spectral.grid import Field, GridSpec, inverse, mode_numbers, wavenumbers
from spectral.operators import leray_H

logger = logging.getLogger(__name__)


def _mode_phases(grid: GridSpec, seed: int, components: int) -> np.ndarray:
    """Uniform phases in [0, 2pi), shape (components,) + grid.shape."""
    m = mode_numbers(grid).reshape(grid.d, -1).astype(int).T
    phases = np.empty((components, m.shape[0]))
    for c in range(components):
        for idx, mode in enumerate(m):
            key = [seed, c] + [int(x) + 10_000 for x in mode]
            phases[c, idx] = np.random.default_rng(key).random()
    return 2 * np.pi * phases.reshape((components,) + grid.shape)


def rough_envelope(grid: GridSpec, rank: int = 0, exponent: float = 0.5, seed: int = 0,
                   amplitude: float = 1.0, symmetric: bool = False) -> Field:
    """
    Mean-zero field with |f_hat(k)| = amplitude |k|^{-(exponent + d/2)};
    the Nyquist planes are left empty.
    """
    comps = grid.d ** rank
    k2 = np.sum(wavenumbers(grid) ** 2, axis=0)
    m = mode_numbers(grid)
    keep = (k2 > 0) & np.all(np.abs(m) < grid.n // 2, axis=0)
    env = np.where(keep, np.where(keep, k2, 1.0) ** (-(exponent + grid.d / 2) / 2), 0.0)
    spec = amplitude * env * np.exp(1j * _mode_phases(grid, seed, comps)) * grid.size
    values = inverse(spec, grid)
    values = values.reshape((grid.d,) * rank + grid.shape)
    if symmetric:
        values = 0.5 * (values + values.swapaxes(0, 1))
    return Field(grid, values, rank, symmetric)


# ── Closed-form presets ────────────────────────────────────────────

def _vector(grid: GridSpec, *components) -> Field:
    x = grid.coordinates()
    comps = list(components) + [np.zeros_like(x[0])] * (grid.d - len(components))
    return Field(grid, np.stack(comps), 1)


def shear_velocity(grid: GridSpec, amplitude: float) -> Field:
    """(A sin x_2, 0, ...)."""
    x = grid.coordinates()
    return _vector(grid, amplitude * np.sin(x[1]))


def taylor_green(grid: GridSpec, amplitude: float) -> Field:
    x = grid.coordinates()
    cz = np.cos(x[2]) if grid.d == 3 else 1.0
    return _vector(grid,
                   amplitude * np.sin(x[0]) * np.cos(x[1]) * cz,
                   -amplitude * np.cos(x[0]) * np.sin(x[1]) * cz)


def single_mode_stress(grid: GridSpec, amplitude: float) -> Field:
    """A sin(x_1) times a fixed symmetric matrix."""
    x = grid.coordinates()
    mat = np.eye(grid.d) + 0.5 * (np.ones((grid.d, grid.d)) - np.eye(grid.d))
    values = amplitude * mat.reshape((grid.d, grid.d) + (1,) * grid.d) * np.sin(x[0])
    return Field(grid, values, 2, True)


def taylor_green_stress(grid: GridSpec, amplitude: float) -> Field:
    x = grid.coordinates()
    c = amplitude * np.cos(x[0]) * np.cos(x[1])
    values = np.zeros((grid.d, grid.d) + grid.shape)
    values[0, 0] = c
    values[1, 1] = -c
    return Field(grid, values, 2, True)


def velocity_preset(name: str, grid: GridSpec, amplitude: float, alpha: float = 0.5,
                    seed: int = 0) -> Field:
    """Divergence-free velocity presets."""
    if name == "zero":
        return Field.zeros(grid, 1)
    if name == "single-mode":
        return shear_velocity(grid, amplitude)
    if name == "taylor-green":
        return taylor_green(grid, amplitude)
    if name == "rough-envelope":
        # u0 needs C^{1+alpha}
        return leray_H(rough_envelope(grid, 1, 1 + alpha, seed, amplitude))
    raise ValueError(f"unknown preset {name!r}")


def state_preset(name: str, model: ModelF, grid: GridSpec, amplitude: float,
                 alpha: float = 0.5, seed: int = 0) -> Field:
    """Initial stress (Oldroyd-B) or magnetic field (MHD)."""
    if model.state_rank == 1:
        # magnetic fields are divergence-free like velocities
        return velocity_preset(name, grid, amplitude, alpha, seed + 1)
    if name == "zero":
        return Field.zeros(grid, 2, True)
    if name == "single-mode":
        return single_mode_stress(grid, amplitude)
    if name == "taylor-green":
        return taylor_green_stress(grid, amplitude)
    if name == "rough-envelope":
        return rough_envelope(grid, 2, alpha, seed + 1, amplitude, symmetric=True)
    raise ValueError(f"unknown preset {name!r}")


def build_initial_data(rc, grid: GridSpec, model: ModelF) -> tuple[Field, Field]:
    """(u0, sigma0) for a RunConfig."""
    u0 = velocity_preset(rc.u0_preset, grid, rc.u0_amplitude, rc.alpha, rc.seed)
    sigma0 = state_preset(rc.sigma0_preset, model, grid, rc.sigma0_amplitude, rc.alpha, rc.seed)
    logger.info("initial data: u0=%s (%.3g), sigma0=%s (%.3g)",
                rc.u0_preset, u0.max_abs(), rc.sigma0_preset, sigma0.max_abs())
    return u0, sigma0
