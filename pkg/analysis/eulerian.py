"""
Independent Eulerian reference: pseudo-spectral method of lines with
exponential time differencing (ETDRK4) in Fourier space.

    u_t = nu Lap u + H div(stress(s) [- u (x) u])
    s_t = -u . grad s + F(grad u, s)

Nothing from the Lagrangian solver is reused.
"""
import logging
from dataclasses import dataclass

import numpy as np

from errors import GrowthError, NonFiniteError, RankMismatchError
from lagrangian.solver import check_divergence_free
from spectral.grid import (Field, GridSpec, Path, dealias, dealias_mask, directional_derivative,
                           forward, gradient, laplacian_symbol, outer)
from spectral.operators import leray_divergence_spectrum

logger = logging.getLogger(__name__)

CONTOUR_POINTS = 32


def etdrk4_coefficients(lin: np.ndarray, dt: float, n_roots: int = CONTOUR_POINTS) -> dict:
    """
    ETDRK4 weights for a diagonal linear operator, evaluated by averaging
    over a circle of roots of unity around each dt*lin.
    """
    roots = np.exp(1j * np.pi * (np.arange(n_roots) + 0.5) / n_roots)
    lr = dt * lin[..., None] + roots
    exp_lr = np.exp(lr)
    lr3 = lr ** 3
    return {
        "exp_full": np.exp(dt * lin),
        "exp_half": np.exp(0.5 * dt * lin),
        "f0": dt * ((np.exp(lr / 2.0) - 1) / lr).mean(-1).real,
        "f1": dt * ((-4 - lr + exp_lr * (4 - 3 * lr + lr ** 2)) / lr3).mean(-1).real,
        "f2": dt * ((2 + lr + exp_lr * (lr - 2)) / lr3).mean(-1).real,
        "f3": dt * ((-4 - 3 * lr - lr ** 2 + exp_lr * (4 - lr)) / lr3).mean(-1).real,
    }


@dataclass(frozen=True, eq=False)
class EulerianSolution:
    u: Path
    sigma: Path


class EulerianIntegrator:
    """Steps the coupled spectra (u_hat, s_hat) forward with ETDRK4."""

    def __init__(self, sc, grid: GridSpec, dt: float):
        self.sc = sc
        self.grid = grid
        self.model = sc.model
        self.dt = dt
        self.rank = sc.model.state_rank
        self.u_coeff = etdrk4_coefficients(-sc.nu * laplacian_symbol(grid), dt)
        self.s_coeff = etdrk4_coefficients(np.zeros(grid.shape), dt)

    def _fields(self, u_hat, s_hat) -> tuple[Field, Field]:
        u = Field.from_spectrum(self.grid, u_hat, 1)
        s = Field.from_spectrum(self.grid, s_hat, self.rank, self.model.symmetric_state)
        return u, s

    def tendency(self, u_hat: np.ndarray, s_hat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        u, s = self._fields(u_hat, s_hat)
        stress = self.model.stress(s).spectrum
        if self.sc.navier_stokes:
            stress = stress - outer(u, u, symmetric=True).spectrum
        n_u = leray_divergence_spectrum(stress, self.grid)

        g = gradient(u)
        forcing = Field(self.grid, self.model.evaluate(g.values, s.values), self.rank)
        n_s = (dealias(forcing) - directional_derivative(u, s)).spectrum * dealias_mask(self.grid)
        if self.model.symmetric_state:
            n_s = 0.5 * (n_s + n_s.swapaxes(0, 1))
        return n_u, n_s

    def step(self, u_hat: np.ndarray, s_hat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        cu, cs = self.u_coeff, self.s_coeff
        nu_v, ns_v = self.tendency(u_hat, s_hat)
        ua = cu["exp_half"] * u_hat + cu["f0"] * nu_v
        sa = cs["exp_half"] * s_hat + cs["f0"] * ns_v
        nu_a, ns_a = self.tendency(ua, sa)
        ub = cu["exp_half"] * u_hat + cu["f0"] * nu_a
        sb = cs["exp_half"] * s_hat + cs["f0"] * ns_a
        nu_b, ns_b = self.tendency(ub, sb)
        uc = cu["exp_half"] * ua + cu["f0"] * (2 * nu_b - nu_v)
        sc_ = cs["exp_half"] * sa + cs["f0"] * (2 * ns_b - ns_v)
        nu_c, ns_c = self.tendency(uc, sc_)
        u_new = (cu["exp_full"] * u_hat + cu["f1"] * nu_v
                 + 2 * cu["f2"] * (nu_a + nu_b) + cu["f3"] * nu_c)
        s_new = (cs["exp_full"] * s_hat + cs["f1"] * ns_v
                 + 2 * cs["f2"] * (ns_a + ns_b) + cs["f3"] * ns_c)
        return u_new, s_new


def eulerian_reference(sc, u0: Field, sigma0: Field, substeps: int = 1) -> EulerianSolution:
    """Frames of u and sigma at the nodes of sc.time_grid."""
    check_divergence_free(u0)
    if sigma0.rank != sc.model.state_rank:
        raise RankMismatchError(f"{sc.model.kind} needs a rank-{sc.model.state_rank} sigma0")
    tg = sc.time_grid
    grid = u0.grid
    dt = tg.dt / substeps
    integrator = EulerianIntegrator(sc, grid, dt)

    u_hat = forward(u0.values, grid).astype(complex)
    s_hat = forward(sigma0.values, grid).astype(complex)
    u_frames, s_frames = [u0], [sigma0]
    for m in range(tg.M):
        t_fail = (m + 1) * tg.dt
        try:
            for _ in range(substeps):
                u_hat, s_hat = integrator.step(u_hat, s_hat)
        except NonFiniteError as exc:
            raise GrowthError(f"Eulerian reference blew up before t = {t_fail:.4g}",
                              time=t_fail) from exc
        if not (np.all(np.isfinite(u_hat)) and np.all(np.isfinite(s_hat))):
            raise GrowthError(f"Eulerian reference blew up at t = {t_fail:.4g}", time=t_fail)
        u, s = integrator._fields(u_hat, s_hat)
        cfl = u.max_abs() * dt / grid.h
        if cfl > 1:
            logger.warning("CFL number %.2f > 1 at t = %.4g", cfl, t_fail)
        u_frames.append(u)
        s_frames.append(s)
    return EulerianSolution(Path(tg, tuple(u_frames)), Path(tg, tuple(s_frames)))
