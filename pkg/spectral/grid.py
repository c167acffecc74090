"""
Periodic grid, sampled tensor fields and their spectral mirror.

Everything lives on the torus [0, L)^d with n points per axis.
Tensor components come first in every values array, grid axes last:
a rank-2 field on a 2D grid has shape (2, 2, n, n).
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Iterator

import numpy as np
from scipy import ndimage

import config
from errors import GridMismatchError, NonFiniteError, RankMismatchError

logger = logging.getLogger(__name__)

try:
    import pyfftw
    import pyfftw.interfaces.scipy_fft as _fft

    pyfftw.interfaces.cache.enable()
    FFTW_AVAILABLE = True
except ImportError:
    from scipy import fft as _fft

    FFTW_AVAILABLE = False
    logger.debug("pyfftw not available, using scipy.fft")


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
#  GRID
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

@dataclass(frozen=True)
class GridSpec:
    d: int = 2
    n: int = 32
    L: float = 2 * np.pi

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"d must be 2 or 3, got {self.d}")
        if self.n < 8 or self.n % 2:
            raise ValueError(f"n must be even and >= 8, got {self.n}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")

    @property
    def h(self) -> float:
        return self.L / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n ** self.d

    @property
    def cell_volume(self) -> float:
        return self.h ** self.d

    @property
    def axes(self) -> tuple[int, ...]:
        """Grid axes of a values array, counted from the end."""
        return tuple(range(-self.d, 0))

    def coordinates(self) -> np.ndarray:
        """Grid points x_j = j*h, shape (d, n, ..., n)."""
        return _coordinates(self)

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.d, self.n * factor, self.L)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@lru_cache(maxsize=None)
def _coordinates(grid: GridSpec) -> np.ndarray:
    x = np.arange(grid.n) * grid.h
    return _frozen(np.array(np.meshgrid(*([x] * grid.d), indexing="ij")))


@lru_cache(maxsize=None)
def mode_numbers(grid: GridSpec) -> np.ndarray:
    """Integer mode numbers m in [-n/2, n/2) per axis, shape (d, n, ..., n)."""
    m = np.fft.fftfreq(grid.n, 1.0 / grid.n)
    return _frozen(np.array(np.meshgrid(*([m] * grid.d), indexing="ij")))


@lru_cache(maxsize=None)
def wavenumbers(grid: GridSpec) -> np.ndarray:
    """Full wavenumbers k = 2*pi*m/L; use for even symbols."""
    return _frozen(mode_numbers(grid) * (2 * np.pi / grid.L))


@lru_cache(maxsize=None)
def odd_wavenumbers(grid: GridSpec) -> np.ndarray:
    """Wavenumbers with the Nyquist entry of each axis set to zero."""
    k = wavenumbers(grid).copy()
    k[mode_numbers(grid) == -grid.n // 2] = 0.0
    return _frozen(k)


@lru_cache(maxsize=None)
def laplacian_symbol(grid: GridSpec) -> np.ndarray:
    """|k|^2 on the full wavenumbers."""
    return _frozen(np.sum(wavenumbers(grid) ** 2, axis=0))


@lru_cache(maxsize=None)
def dealias_mask(grid: GridSpec) -> np.ndarray:
    """2/3 rule: keep modes with |m| < n/3 on every axis."""
    keep = np.abs(mode_numbers(grid)) < grid.n / 3
    return _frozen(np.all(keep, axis=0).astype(float))


@lru_cache(maxsize=None)
def pair_offsets(grid: GridSpec, stencil: str = "dyadic") -> np.ndarray:
    """
    Integer lattice offsets used for pair sampling, shape (K, d).

    "dyadic": 2^k along each axis plus the diagonals e_i +- e_j.
    "all":    every nonzero offset in (-n/2, n/2]^d.
    """
    d, n = grid.d, grid.n
    if stencil == "all":
        r = np.arange(-n // 2 + 1, n // 2 + 1)
        offsets = np.array(np.meshgrid(*([r] * d), indexing="ij")).reshape(d, -1).T
        offsets = offsets[np.any(offsets != 0, axis=1)]
        return _frozen(offsets)
    if stencil != "dyadic":
        raise ValueError(f"unknown stencil {stencil!r}")

    eye = np.eye(d, dtype=int)
    directions = [eye[i] for i in range(d)]
    for i in range(d):
        for j in range(i + 1, d):
            directions.append(eye[i] + eye[j])
            directions.append(eye[i] - eye[j])
    offsets = []
    s = 1
    while s <= n // 2:
        offsets.extend(s * e for e in directions)
        s *= 2
    return _frozen(np.array(offsets, dtype=int))


def offset_lengths(grid: GridSpec, offsets: np.ndarray) -> np.ndarray:
    """Periodic distance spanned by each offset."""
    wrapped = np.minimum(np.abs(offsets), grid.n - np.abs(offsets))
    return grid.h * np.sqrt(np.sum(wrapped ** 2, axis=1))


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
#  FIELDS
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def forward(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    return _fft.fftn(values, axes=grid.axes)


def inverse(spectrum: np.ndarray, grid: GridSpec) -> np.ndarray:
    return _fft.ifftn(spectrum, axes=grid.axes).real


@dataclass(frozen=True, eq=False)
class Field:
    """
    Real tensor field sampled on a GridSpec.

    values has shape (d,)*rank + grid.shape and is read-only.
    """

    grid: GridSpec
    values: np.ndarray
    rank: int = 0
    symmetric: bool = False

    def __post_init__(self):
        if self.rank not in (0, 1, 2):
            raise RankMismatchError(f"rank must be 0, 1 or 2, got {self.rank}")
        values = np.array(self.values, dtype=float, copy=True)
        expected = (self.grid.d,) * self.rank + self.grid.shape
        if values.shape != expected:
            raise RankMismatchError(f"values shape {values.shape} != {expected}")
        if not np.all(np.isfinite(values)):
            raise NonFiniteError("field values must be finite")
        if self.symmetric:
            if self.rank != 2:
                raise RankMismatchError("only rank-2 fields can be symmetric")
            if not np.array_equal(values, values.swapaxes(0, 1)):
                raise ValueError("symmetric flag set but values[i][j] != values[j][i]")
        object.__setattr__(self, "values", _frozen(values))

    # ── Construction ──────────────────────────────────────────────────
    @classmethod
    def zeros(cls, grid: GridSpec, rank: int = 0, symmetric: bool = False) -> "Field":
        return cls(grid, np.zeros((grid.d,) * rank + grid.shape), rank, symmetric)

    @classmethod
    def from_spectrum(cls, grid: GridSpec, spectrum: np.ndarray, rank: int,
                      symmetric: bool = False) -> "Field":
        values = inverse(spectrum, grid)
        if symmetric:
            values = 0.5 * (values + values.swapaxes(0, 1))
        return cls(grid, values, rank, symmetric)

    @classmethod
    def from_function(cls, grid: GridSpec, fn: Callable, rank: int = 0,
                      symmetric: bool = False) -> "Field":
        """fn receives the coordinate arrays x_1..x_d and returns samples."""
        x = grid.coordinates()
        shape = (grid.d,) * rank + grid.shape
        values = np.broadcast_to(np.asarray(fn(*x), dtype=float), shape)
        return cls(grid, values, rank, symmetric)

    # ── Spectral mirror ───────────────────────────────────────────────
    @cached_property
    def spectrum(self) -> np.ndarray:
        return _frozen(forward(self.values, self.grid))

    # ── Views ─────────────────────────────────────────────────────────
    @property
    def component_shape(self) -> tuple[int, ...]:
        return (self.grid.d,) * self.rank

    def component(self, *index: int) -> "Field":
        if len(index) != self.rank:
            raise RankMismatchError(f"need {self.rank} indices, got {len(index)}")
        return Field(self.grid, self.values[index], 0)

    def transpose(self) -> "Field":
        if self.rank != 2:
            raise RankMismatchError("transpose needs a rank-2 field")
        return Field(self.grid, self.values.swapaxes(0, 1), 2, self.symmetric)

    def symmetrized(self) -> "Field":
        if self.rank != 2:
            raise RankMismatchError("symmetrized needs a rank-2 field")
        v = self.values
        return Field(self.grid, 0.5 * (v + v.swapaxes(0, 1)), 2, True)

    def mean_free(self) -> "Field":
        mean = self.values.mean(axis=self.grid.axes, keepdims=True)
        return Field(self.grid, self.values - mean, self.rank, self.symmetric)

    def like(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values, self.rank, self.symmetric)

    # ── Arithmetic ────────────────────────────────────────────────────
    def _check(self, other: "Field") -> None:
        if self.grid != other.grid:
            raise GridMismatchError(f"{self.grid} vs {other.grid}")
        if self.rank != other.rank:
            raise RankMismatchError(f"rank {self.rank} vs rank {other.rank}")

    def __add__(self, other: "Field") -> "Field":
        self._check(other)
        return Field(self.grid, self.values + other.values, self.rank,
                     self.symmetric and other.symmetric)

    def __sub__(self, other: "Field") -> "Field":
        self._check(other)
        return Field(self.grid, self.values - other.values, self.rank,
                     self.symmetric and other.symmetric)

    def __mul__(self, scalar: float) -> "Field":
        return Field(self.grid, self.values * float(scalar), self.rank, self.symmetric)

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> "Field":
        return self * (1.0 / scalar)

    def __neg__(self) -> "Field":
        return self * -1.0

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __repr__(self) -> str:
        return f"Field(rank={self.rank}, d={self.grid.d}, n={self.grid.n})"


def spectral_derivative(f: Field, axis: int) -> Field:
    """d f / d x_axis (axis is 0-based); Nyquist mode of the result is zero."""
    if not 0 <= axis < f.grid.d:
        raise ValueError(f"axis {axis} out of range for d={f.grid.d}")
    k = odd_wavenumbers(f.grid)[axis]
    return Field.from_spectrum(f.grid, 1j * k * f.spectrum, f.rank, f.symmetric)


def gradient(f: Field) -> Field:
    """Appends a derivative index: (grad u)_ij = d_j u_i."""
    if f.rank > 1:
        raise RankMismatchError("gradient is defined for rank 0 and 1 fields")
    k = odd_wavenumbers(f.grid)
    spec = f.spectrum
    dspec = np.stack([1j * k[j] * spec for j in range(f.grid.d)], axis=f.rank)
    return Field.from_spectrum(f.grid, dspec, f.rank + 1)


def divergence(f: Field) -> Field:
    """Contracts the last tensor index against the derivative."""
    if f.rank < 1:
        raise RankMismatchError("divergence needs a rank 1 or 2 field")
    k = odd_wavenumbers(f.grid)
    spec = f.spectrum
    dspec = sum(1j * k[j] * np.take(spec, j, axis=f.rank - 1) for j in range(f.grid.d))
    return Field.from_spectrum(f.grid, dspec, f.rank - 1)


def dealias(f: Field) -> Field:
    return Field.from_spectrum(f.grid, f.spectrum * dealias_mask(f.grid), f.rank,
                               f.symmetric)


def dealiased_product(values: np.ndarray, grid: GridSpec, rank: int,
                      symmetric: bool = False) -> Field:
    """Wrap raw pointwise-product samples as a 2/3-truncated Field."""
    spectrum = forward(values, grid) * dealias_mask(grid)
    return Field.from_spectrum(grid, spectrum, rank, symmetric)


def directional_derivative(eta: Field, f: Field) -> Field:
    """(eta . grad) f, dealiased."""
    if eta.rank != 1:
        raise RankMismatchError("eta must be a vector field")
    if eta.grid != f.grid:
        raise GridMismatchError("eta and f live on different grids")
    values = sum(eta.values[j] * spectral_derivative(f, j).values for j in range(f.grid.d))
    return dealiased_product(values, f.grid, f.rank, f.symmetric)


def outer(a: Field, b: Field, symmetric: bool = False) -> Field:
    """a_i b_j, dealiased."""
    if a.rank != 1 or b.rank != 1:
        raise RankMismatchError("outer needs two vector fields")
    values = a.values[:, None] * b.values[None, :]
    if symmetric:
        values = 0.5 * (values + values.swapaxes(0, 1))
    return dealiased_product(values, a.grid, 2, symmetric)


def matvec(g: Field, b: Field) -> Field:
    """g_ij b_j, dealiased."""
    if g.rank != 2 or b.rank != 1:
        raise RankMismatchError("matvec needs a rank-2 and a rank-1 field")
    return dealiased_product(np.einsum("ij...,j...->i...", g.values, b.values), g.grid, 1)


def matmul(a: Field, b: Field) -> Field:
    """a_ik b_kj, dealiased."""
    if a.rank != 2 or b.rank != 2:
        raise RankMismatchError("matmul needs two rank-2 fields")
    return dealiased_product(np.einsum("ik...,kj...->ij...", a.values, b.values), a.grid, 2)


def resample(f: Field, grid: GridSpec) -> Field:
    """Spectral pad or truncate onto another resolution of the same box."""
    if grid.d != f.grid.d or grid.L != f.grid.L:
        raise GridMismatchError("resample keeps d and L fixed")
    if grid == f.grid:
        return f
    n_src, n_dst = f.grid.n, grid.n
    keep = min(n_src, n_dst) // 2
    # modes strictly inside the smaller grid's band; its Nyquist is dropped
    m = np.arange(-keep + 1, keep)
    src_idx, dst_idx = m % n_src, m % n_dst
    out = np.zeros(f.component_shape + grid.shape, dtype=complex)
    comps = (slice(None),) * f.rank
    out[comps + np.ix_(*([dst_idx] * grid.d))] = \
        f.spectrum[comps + np.ix_(*([src_idx] * grid.d))]
    out *= (n_dst / n_src) ** grid.d
    return Field.from_spectrum(grid, out, f.rank, f.symmetric)


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
#  OFF-GRID INTERPOLATION
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

class Interpolant:
    """
    Evaluates one Field at arbitrary periodic positions.

    "spline" uses cubic B-splines with periodic wrap; "trig" sums the
    resolved Fourier series and is exact on the grid.
    """

    def __init__(self, f: Field, method: str | None = None):
        self.field = f
        self.method = method or config.INTERPOLATION_METHOD
        if self.method == "spline":
            flat = f.values.reshape((-1,) + f.grid.shape)
            self._coeffs = [ndimage.spline_filter(c, order=3, mode="grid-wrap")
                            for c in flat]
        elif self.method == "trig":
            flat = f.spectrum.reshape((-1,) + f.grid.shape)
            self._coeffs = [c / f.grid.size for c in flat]
        else:
            raise ValueError(f"unknown interpolation method {self.method!r}")

    def __call__(self, points: np.ndarray) -> np.ndarray:
        """points has shape (d, ...); returns component_shape + points.shape[1:]."""
        points = np.asarray(points, dtype=float)
        grid = self.field.grid
        if points.shape[0] != grid.d:
            raise RankMismatchError(f"points must have leading axis {grid.d}")
        if not np.all(np.isfinite(points)):
            raise NonFiniteError("interpolation points must be finite")
        out_shape = points.shape[1:]
        flat_pts = points.reshape(grid.d, -1)
        if self.method == "spline":
            coords = flat_pts / grid.h
            out = [ndimage.map_coordinates(c, coords, order=3, mode="grid-wrap",
                                           prefilter=False) for c in self._coeffs]
        else:
            out = [self._trig(c, flat_pts) for c in self._coeffs]
        return np.stack(out).reshape(self.field.component_shape + out_shape)

    def _trig(self, coeffs: np.ndarray, pts: np.ndarray) -> np.ndarray:
        grid = self.field.grid
        k = 2 * np.pi / grid.L * np.fft.fftfreq(grid.n, 1.0 / grid.n)
        letters = "abc"[: grid.d]
        expr = letters + "," + ",".join(f"p{c}" for c in letters) + "->p"
        result = np.empty(pts.shape[1])
        chunk = config.TRIG_INTERPOLATION_CHUNK
        for start in range(0, pts.shape[1], chunk):
            sl = slice(start, start + chunk)
            phases = [np.exp(1j * np.outer(pts[ax, sl], k)) for ax in range(grid.d)]
            result[sl] = np.einsum(expr, coeffs, *phases, optimize=True).real
        return result


def interpolate(f: Field, points: np.ndarray, method: str | None = None) -> np.ndarray:
    return Interpolant(f, method)(points)


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
#  TIME GRID & PATHS
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

@dataclass(frozen=True)
class TimeGrid:
    T: float
    M: int

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")

    @property
    def dt(self) -> float:
        return self.T / self.M

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.M + 1) * self.dt

    def index_of(self, t: float) -> int | None:
        """Node index of t, or None when t falls between nodes."""
        m = int(round(t / self.dt))
        if 0 <= m <= self.M and abs(m * self.dt - t) <= 1e-12 * max(self.T, 1.0):
            return m
        return None

    def check_time(self, t: float) -> None:
        if t < 0:
            raise ValueError(f"t must be nonnegative, got {t}")
        if t > self.T * (1 + 1e-12):
            raise ValueError(f"t = {t} exceeds T = {self.T}")


@dataclass(frozen=True, eq=False)
class Path:
    """Fields at the M+1 nodes of a TimeGrid, all on one grid with one rank."""

    time_grid: TimeGrid
    frames: tuple[Field, ...] = field(default_factory=tuple)

    def __post_init__(self):
        frames = tuple(self.frames)
        if len(frames) != self.time_grid.M + 1:
            raise ValueError(f"need {self.time_grid.M + 1} frames, got {len(frames)}")
        first = frames[0]
        for f in frames[1:]:
            if f.grid != first.grid:
                raise GridMismatchError("path frames live on different grids")
            if f.rank != first.rank:
                raise RankMismatchError("path frames have different ranks")
        object.__setattr__(self, "frames", frames)

    @classmethod
    def constant(cls, time_grid: TimeGrid, f: Field) -> "Path":
        return cls(time_grid, (f,) * (time_grid.M + 1))

    @classmethod
    def from_values(cls, time_grid: TimeGrid, grid: GridSpec, values: np.ndarray,
                    rank: int, symmetric: bool = False) -> "Path":
        return cls(time_grid, tuple(Field(grid, v, rank, symmetric) for v in values))

    @classmethod
    def from_function(cls, time_grid: TimeGrid, fn: Callable[[float], Field]) -> "Path":
        return cls(time_grid, tuple(fn(t) for t in time_grid.nodes))

    @property
    def grid(self) -> GridSpec:
        return self.frames[0].grid

    @property
    def rank(self) -> int:
        return self.frames[0].rank

    @property
    def symmetric(self) -> bool:
        return all(f.symmetric for f in self.frames)

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self) -> Iterator[Field]:
        return iter(self.frames)

    def __getitem__(self, m: int) -> Field:
        return self.frames[m]

    def values(self) -> np.ndarray:
        return np.stack([f.values for f in self.frames])

    def spectra(self) -> np.ndarray:
        return np.stack([f.spectrum for f in self.frames])

    def at(self, t: float) -> Field:
        """Frame at t, linear in time between nodes."""
        self.time_grid.check_time(t)
        m = self.time_grid.index_of(t)
        if m is not None:
            return self.frames[m]
        s = t / self.time_grid.dt
        lo = min(int(np.floor(s)), self.time_grid.M - 1)
        w = s - lo
        return self.frames[lo] * (1 - w) + self.frames[lo + 1] * w

    def map(self, fn: Callable[[Field], Field]) -> "Path":
        return Path(self.time_grid, tuple(fn(f) for f in self.frames))

    def zip_map(self, other: "Path", fn: Callable[[Field, Field], Field]) -> "Path":
        self._check(other)
        return Path(self.time_grid, tuple(fn(a, b) for a, b in zip(self.frames, other.frames)))

    def _check(self, other: "Path") -> None:
        if self.time_grid != other.time_grid:
            raise GridMismatchError("paths live on different time grids")

    def __add__(self, other: "Path") -> "Path":
        return self.zip_map(other, lambda a, b: a + b)

    def __sub__(self, other: "Path") -> "Path":
        return self.zip_map(other, lambda a, b: a - b)

    def __mul__(self, scalar: float) -> "Path":
        return self.map(lambda f: f * scalar)

    __rmul__ = __mul__

