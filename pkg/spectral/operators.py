"""
Eulerian solution operators on the torus.

    heat semigroup      e^{t nu Lap}
    Riesz transforms    R_i = i k_i / |k|
    Leray projector     H = I - k k^T / |k|^2
    U(sigma)(t) = int_0^t e^{(t-s) nu Lap} H div sigma(s) ds
    G(sigma)(t) = grad U(sigma)(t)

Odd symbols and Calderon-Zygmund multipliers use the Nyquist-zeroed
wavenumbers; the heat factor uses the full ones. The zero mode is
annihilated by every multiplier.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

import config
from errors import GridMismatchError, RankMismatchError
from spectral.grid import (Field, GridSpec, Path, directional_derivative,
                           laplacian_symbol, odd_wavenumbers)

logger = logging.getLogger(__name__)

# below this value of nu*|k|^2*dt the quadrature weights use their Taylor series
SERIES_THRESHOLD = 1e-2


def _letters(grid: GridSpec) -> str:
    return "xyz"[: grid.d]


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
#  FOURIER MULTIPLIERS
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

@dataclass(frozen=True)
class Multiplier:
    """
    Degree-0 homogeneous Fourier symbol.

    symbol(k) receives wavenumbers of shape (d, ...) with |k| > 0 and
    returns out_comps + in_comps + k.shape[1:]. Scalar symbols
    (in_rank = out_rank = 0) act on every component of any field.
    """

    symbol: Callable[[np.ndarray], np.ndarray]
    name: str = "K"
    in_rank: int = 0
    out_rank: int = 0

    def __post_init__(self):
        if not self.is_homogeneous():
            raise ValueError(f"symbol {self.name} is not homogeneous of degree 0")

    def is_homogeneous(self, samples: int = 16, seed: int = 7, tol: float = 1e-10) -> bool:
        rng = np.random.default_rng(seed)
        checked = 0
        for d in (2, 3):
            k = rng.normal(size=(d, samples))
            try:
                base = np.asarray(self.symbol(k))
            except IndexError:
                # symbol names an axis this dimension does not have
                continue
            checked += 1
            if not np.all(np.isfinite(base)):
                return False
            for lam in (0.25, 3.0):
                if not np.allclose(self.symbol(lam * k), base, rtol=tol, atol=tol):
                    return False
        return checked > 0

    def evaluate(self, grid: GridSpec) -> np.ndarray:
        k = np.array(odd_wavenumbers(grid))
        zero = np.all(k == 0, axis=0)
        k[0][zero] = 1.0
        m = np.asarray(self.symbol(k), dtype=complex)
        return np.where(zero, 0.0, m)

    def __matmul__(self, other: "Multiplier") -> "Multiplier":
        a, b = self, other
        if a.in_rank == a.out_rank == 0 or b.in_rank == b.out_rank == 0:
            return Multiplier(lambda k: _scalar_compose(a, b, k), f"{a.name}{b.name}",
                              max(b.in_rank, a.in_rank), max(a.out_rank, b.out_rank))
        if a.in_rank == b.out_rank == 1 and b.in_rank == 1 and a.out_rank == 1:
            return Multiplier(lambda k: np.einsum("ij...,jl...->il...", a.symbol(k), b.symbol(k)),
                              f"{a.name}{b.name}", 1, 1)
        raise RankMismatchError(f"cannot compose {a.name} after {b.name}")


def _scalar_compose(a: Multiplier, b: Multiplier, k: np.ndarray) -> np.ndarray:
    return np.asarray(a.symbol(k)) * np.asarray(b.symbol(k))


def _unit(k: np.ndarray) -> np.ndarray:
    return k / np.sqrt(np.sum(k ** 2, axis=0))


def riesz_multiplier(i: int) -> Multiplier:
    """R_i with symbol i k_i / |k| (axis i is 0-based)."""
    return Multiplier(lambda k: 1j * _unit(k)[i], f"R{i}")


def leray_multiplier() -> Multiplier:
    def symbol(k):
        e = _unit(k)
        d = k.shape[0]
        eye = np.eye(d).reshape((d, d) + (1,) * (k.ndim - 1))
        return eye - e[:, None] * e[None, :]
    return Multiplier(symbol, "H", 1, 1)


def riesz_leray_riesz() -> Multiplier:
    """(R H R . sigma)_{ia} = R_a H_ij R_l sigma_jl; rank-2 to rank-2."""
    leray = leray_multiplier()

    def symbol(k):
        e = _unit(k)
        h = leray.symbol(k)
        # out (i, a), in (j, l)
        return -np.einsum("a...,ij...,l...->iajl...", e, h, e)
    return Multiplier(symbol, "RHR", 2, 2)


def cz_apply(K: Multiplier, f: Field) -> Field:
    """Spectral multiplication by K's symbol; the zero mode is dropped."""
    m = K.evaluate(f.grid)
    g = _letters(f.grid)
    if K.in_rank == K.out_rank == 0:
        return Field.from_spectrum(f.grid, m * f.spectrum, f.rank, f.symmetric)
    if f.rank != K.in_rank:
        raise RankMismatchError(f"{K.name} expects rank {K.in_rank}, got {f.rank}")
    out_idx, in_idx = "abcd"[: K.out_rank], "efgh"[: K.in_rank]
    spec = np.einsum(f"{out_idx}{in_idx}{g},{in_idx}{g}->{out_idx}{g}", m, f.spectrum)
    return Field.from_spectrum(f.grid, spec, K.out_rank)


def riesz(f: Field, i: int) -> Field:
    return cz_apply(riesz_multiplier(i), f)


def leray_H(v: Field) -> Field:
    if v.rank != 1:
        raise RankMismatchError("leray_H needs a vector field")
    return cz_apply(leray_multiplier(), v)


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
#  HEAT SEMIGROUP
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def heat_semigroup(f: Field, t: float, nu: float | None = None) -> Field:
    if t < 0:
        raise ValueError(f"heat semigroup needs t >= 0, got {t}")
    if t == 0:
        return f
    nu = config.VISCOSITY if nu is None else nu
    factor = np.exp(-nu * laplacian_symbol(f.grid) * t)
    return Field.from_spectrum(f.grid, factor * f.spectrum, f.rank, f.symmetric)


def op_L(u0: Field, t: float, nu: float | None = None) -> Field:
    """L(u0)(t) = e^{t nu Lap} u0."""
    return heat_semigroup(u0, t, nu)


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
#  DUHAMEL OPERATORS
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def leray_divergence_spectrum(sigma_spec: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Spectrum of H div sigma; sigma_spec is (..., d, d) + grid.shape."""
    g = _letters(grid)
    k = odd_wavenumbers(grid)
    div = np.einsum(f"...jl{g},l{g}->...j{g}", sigma_spec, 1j * k)
    return np.einsum(f"ij{g},...j{g}->...i{g}", _leray_symbol(grid), div)


@lru_cache(maxsize=None)
def _leray_symbol(grid: GridSpec) -> np.ndarray:
    return leray_multiplier().evaluate(grid)


def _gradient_spectrum(u_spec: np.ndarray, grid: GridSpec) -> np.ndarray:
    """(grad u)_ia = i k_a u_i, appended as the last tensor index."""
    k = odd_wavenumbers(grid)
    return np.stack([1j * k[a] * u_spec for a in range(grid.d)], axis=-grid.d - 1)


def _phi_weights(lam: np.ndarray, delta: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Exact weights of int_0^delta e^{-lam (delta - r)} h(r) dr for h linear
    between h(0) and h(delta): returns (decay, w_start, w_end).
    """
    x = lam * delta
    small = x < SERIES_THRESHOLD
    xs = np.where(small, 1.0, x)
    lam_s = np.where(small, 1.0, lam)
    phi0 = np.where(small,
                    delta * (1 - x / 2 + x ** 2 / 6 - x ** 3 / 24 + x ** 4 / 120),
                    -np.expm1(-xs) / lam_s)
    i1 = np.where(small,
                  delta * (0.5 - x / 6 + x ** 2 / 24 - x ** 3 / 120 + x ** 4 / 720),
                  phi0 - (1 - np.exp(-xs) * (1 + xs)) / (lam_s * xs))
    return np.exp(-x), phi0 - i1, i1


def _duhamel(knots: list[np.ndarray], times: list[float], lam: np.ndarray) -> np.ndarray:
    """Exponential quadrature of a piecewise-linear source up to times[-1]."""
    acc = np.zeros_like(knots[0])
    for m in range(len(times) - 1):
        decay, w0, w1 = _phi_weights(lam, times[m + 1] - times[m])
        acc = decay * acc + w0 * knots[m] + w1 * knots[m + 1]
    return acc


def _duhamel_path(knots: np.ndarray, dt: float, lam: np.ndarray) -> np.ndarray:
    """Same quadrature recorded at every node of a uniform grid."""
    decay, w0, w1 = _phi_weights(lam, dt)
    out = np.zeros_like(knots)
    for m in range(len(knots) - 1):
        out[m + 1] = decay * out[m] + w0 * knots[m] + w1 * knots[m + 1]
    return out


def _stress_source(sigma: Path) -> np.ndarray:
    if sigma.rank != 2:
        raise RankMismatchError("Duhamel operators take rank-2 stress paths")
    return leray_divergence_spectrum(sigma.spectra(), sigma.grid)


def _lam(grid: GridSpec, nu: float | None) -> np.ndarray:
    return (config.VISCOSITY if nu is None else nu) * laplacian_symbol(grid)


def _u_spectrum(sigma: Path, t: float, nu: float | None) -> np.ndarray:
    tg = sigma.time_grid
    tg.check_time(t)
    source = _stress_source(sigma)
    nodes = tg.nodes
    last = int(np.searchsorted(nodes, t, side="right")) - 1
    m = tg.index_of(t)
    if m is not None:
        knots, times = list(source[: m + 1]), list(nodes[: m + 1])
    else:
        w = (t - nodes[last]) / tg.dt
        knots = list(source[: last + 1]) + [(1 - w) * source[last] + w * source[last + 1]]
        times = list(nodes[: last + 1]) + [t]
    if len(times) == 1:
        return np.zeros_like(source[0])
    return _duhamel(knots, times, _lam(sigma.grid, nu))


def op_U(sigma: Path, t: float, nu: float | None = None) -> Field:
    """Velocity Duhamel term at time t; zero at t = 0 and divergence-free."""
    return Field.from_spectrum(sigma.grid, _u_spectrum(sigma, t, nu), 1)


def op_G(sigma: Path, t: float, nu: float | None = None) -> Field:
    """Velocity-gradient Duhamel term at time t."""
    return Field.from_spectrum(
        sigma.grid, _gradient_spectrum(_u_spectrum(sigma, t, nu), sigma.grid), 2)


def op_U_path(sigma: Path, nu: float | None = None) -> Path:
    spectra = _duhamel_path(_stress_source(sigma), sigma.time_grid.dt, _lam(sigma.grid, nu))
    return Path(sigma.time_grid, tuple(Field.from_spectrum(sigma.grid, s, 1) for s in spectra))


def op_G_path(sigma: Path, nu: float | None = None) -> Path:
    spectra = _duhamel_path(_stress_source(sigma), sigma.time_grid.dt, _lam(sigma.grid, nu))
    return Path(sigma.time_grid, tuple(
        Field.from_spectrum(sigma.grid, _gradient_spectrum(s, sigma.grid), 2) for s in spectra))


def op_G_steady(sigma: Field, t: float, nu: float | None = None) -> Field:
    """G of a time-independent stress: (1 - e^{t nu Lap}) R H R sigma / nu."""
    if t < 0:
        raise ValueError(f"op_G_steady needs t >= 0, got {t}")
    if sigma.rank != 2:
        raise RankMismatchError("op_G_steady takes a rank-2 stress")
    if t == 0:
        return Field.zeros(sigma.grid, 2)
    lam = _lam(sigma.grid, nu)
    safe = np.where(lam > 0, lam, 1.0)
    weight = np.where(lam > 0, -np.expm1(-lam * t) / safe, t)
    u_spec = weight * leray_divergence_spectrum(sigma.spectrum, sigma.grid)
    return Field.from_spectrum(sigma.grid, _gradient_spectrum(u_spec, sigma.grid), 2)


def steady_limit(sigma: Field, nu: float | None = None) -> Field:
    """Large-time saturation of op_G_steady: R H R sigma / nu."""
    nu = config.VISCOSITY if nu is None else nu
    return cz_apply(riesz_leray_riesz(), sigma) / nu


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
#  COMMUTATORS
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def commutator_steady(eta: Field, K: Multiplier, f: Field) -> Field:
    """[eta . grad, K] f = eta . grad(K f) - K(eta . grad f)."""
    return directional_derivative(eta, cz_apply(K, f)) - cz_apply(K, directional_derivative(eta, f))


def _advected(eta: Path, sigma: Path) -> Path:
    if eta.time_grid != sigma.time_grid:
        raise GridMismatchError("eta and sigma must share a time grid")
    return eta.zip_map(sigma, directional_derivative)


def commutator_U(eta: Path, sigma: Path, t: float, nu: float | None = None) -> Field:
    """eta(t) . grad U(sigma)(t) - U(eta(s) . grad sigma(s))(t)."""
    advected = _advected(eta, sigma)
    return directional_derivative(eta.at(t), op_U(sigma, t, nu)) - op_U(advected, t, nu)


def commutator_G(eta: Path, sigma: Path, t: float, nu: float | None = None) -> Field:
    """eta(t) . grad G(sigma)(t) - G(eta(s) . grad sigma(s))(t)."""
    advected = _advected(eta, sigma)
    return directional_derivative(eta.at(t), op_G(sigma, t, nu)) - op_G(advected, t, nu)


def commutator_U_path(eta: Path, sigma: Path, nu: float | None = None) -> Path:
    advected = op_U_path(_advected(eta, sigma), nu)
    transported = eta.zip_map(op_U_path(sigma, nu), directional_derivative)
    return transported - advected


def commutator_G_path(eta: Path, sigma: Path, nu: float | None = None) -> Path:
    advected = op_G_path(_advected(eta, sigma), nu)
    transported = eta.zip_map(op_G_path(sigma, nu), directional_derivative)
    return transported - advected

