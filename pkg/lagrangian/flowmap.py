"""
Lagrangian flow maps X(a) = a + chi(a) with periodic displacement chi.
"""
import logging
from dataclasses import dataclass

import numpy as np

import config
from errors import InvertibilityError, RankMismatchError
from spectral.grid import Field, GridSpec, Interpolant, gradient, pair_offsets, offset_lengths

logger = logging.getLogger(__name__)


def wrap(displacement: np.ndarray, L: float) -> np.ndarray:
    """Map displacements into [-L/2, L/2)."""
    return (displacement + L / 2) % L - L / 2


def pointwise_spectral_norm(matrices: np.ndarray) -> np.ndarray:
    """matrices has shape (d, d) + grid; returns grid-shaped 2-norms."""
    moved = np.moveaxis(matrices, (0, 1), (-2, -1))
    return np.linalg.norm(moved, ord=2, axis=(-2, -1))


@dataclass(frozen=True, eq=False)
class FlowMap:
    chi: Field

    def __post_init__(self):
        if self.chi.rank != 1:
            raise RankMismatchError("flow map displacement must be a vector field")

    @classmethod
    def identity(cls, grid: GridSpec) -> "FlowMap":
        return cls(Field.zeros(grid, 1))

    @property
    def grid(self) -> GridSpec:
        return self.chi.grid

    @property
    def is_identity(self) -> bool:
        return not np.any(self.chi.values)

    def positions(self) -> np.ndarray:
        """X at the grid labels, shape (d,) + grid.shape (not wrapped)."""
        return self.grid.coordinates() + self.chi.values

    def max_gradient_norm(self) -> float:
        """max_a |grad chi(a)| in the pointwise spectral norm."""
        if self.is_identity:
            return 0.0
        return float(np.max(pointwise_spectral_norm(gradient(self.chi).values)))


def grad_label(X: FlowMap) -> Field:
    """grad_a X = I + grad chi."""
    d = X.grid.d
    eye = np.eye(d).reshape((d, d) + (1,) * d)
    return Field(X.grid, eye + gradient(X.chi).values, 2)


def jacobian_determinant(X: FlowMap) -> Field:
    moved = np.moveaxis(grad_label(X).values, (0, 1), (-2, -1))
    return Field(X.grid, np.linalg.det(moved), 0)


def compose(f: Field, X: FlowMap, method: str | None = None) -> Field:
    """f o X sampled at the grid labels."""
    if X.is_identity:
        return f
    values = Interpolant(f, method)(X.positions())
    if f.symmetric:
        values = 0.5 * (values + values.swapaxes(0, 1))
    return Field(f.grid, values, f.rank, f.symmetric)


def invert_map(X: FlowMap, method: str | None = None,
               tol: float = config.INVERSION_TOL,
               max_iter: int = config.INVERSION_MAX_ITER) -> FlowMap:
    """
    A = X^{-1} per grid point: a <- x - chi(a), then Newton on the
    residual X(a) - x for points the fixed-point sweep leaves behind.
    """
    if X.is_identity:
        return X
    grid = X.grid
    x = grid.coordinates()
    chi_at = Interpolant(X.chi, method)
    a = x - X.chi.values

    def residual(a):
        return wrap(a + chi_at(a) - x, grid.L)

    r = residual(a)
    for _ in range(max_iter):
        if np.max(np.abs(r)) < tol:
            break
        a = x - chi_at(a)
        r = residual(a)

    if np.max(np.abs(r)) >= tol:
        logger.debug("fixed-point inversion stalled at %.2e, switching to Newton",
                     np.max(np.abs(r)))
        grad_at = Interpolant(gradient(X.chi), method)
        d = grid.d
        for _ in range(max_iter):
            if np.max(np.abs(r)) < tol:
                break
            jac = np.moveaxis(grad_at(a), (0, 1), (-2, -1)) + np.eye(d)
            step = np.linalg.solve(jac, np.moveaxis(r, 0, -1)[..., None])[..., 0]
            a = a - np.moveaxis(step, -1, 0)
            r = residual(a)

    worst = float(np.max(np.abs(r)))
    if not np.isfinite(worst) or worst >= tol:
        raise InvertibilityError(f"flow map inversion residual {worst:.3e} >= {tol:.1e}")
    return FlowMap(Field(grid, wrap(a - x, grid.L), 1))


@dataclass(frozen=True)
class ChordArcReport:
    min_ratio: float
    max_ratio: float
    lam: float
    within_bound: bool
    pairs: int = 0


def chord_arc(X: FlowMap, lam: float, slack: float = config.CHORD_ARC_SLACK,
              stencil: str = "dyadic") -> ChordArcReport:
    """
    Extreme ratios |a - b| / |X(a) - X(b)| over the sampled pairs, and
    whether they sit inside [1/lam, lam] up to the relative slack.
    """
    if lam < 1:
        raise ValueError(f"chord-arc bound needs lam >= 1, got {lam}")
    grid = X.grid
    offsets = pair_offsets(grid, stencil)
    labels = offset_lengths(grid, offsets)
    lo, hi = np.inf, 0.0
    chi = X.chi.values
    for s, dist in zip(offsets, labels):
        shifted = np.roll(chi, tuple(-s), axis=grid.axes)
        lifted = s.reshape((grid.d,) + (1,) * grid.d) * grid.h + shifted - chi
        particle = np.sqrt(np.sum(lifted ** 2, axis=0))
        ratio = dist / particle
        lo = min(lo, float(ratio.min()))
        hi = max(hi, float(ratio.max()))
    within = lo >= (1 - slack) / lam and hi <= lam * (1 + slack)
    return ChordArcReport(lo, hi, float(lam), bool(within), len(offsets) * grid.size)
