"""
Sampled estimators for the Holder / Lebesgue norms of fields and paths.

Pointwise magnitudes are Euclidean (vectors) or Frobenius (matrices).
Holder seminorms are lower bounds: the supremum is taken over the
pair offsets of a stencil, not over all pairs.
"""
import logging
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from errors import GridMismatchError
from spectral.grid import Field, Path, pair_offsets, offset_lengths, spectral_derivative

logger = logging.getLogger(__name__)

SpatialNorm = Callable[[Field], float]


@dataclass(frozen=True)
class NormParams:
    alpha: float = 0.5
    beta: float = 0.75
    p: float = 2.0
    stencil: str = "dyadic"

    def in_admissible_range(self) -> bool:
        return 0 < self.alpha < 1 and 0.5 < self.beta < 1 and 1 < self.p < np.inf


# ── Pointwise helpers ──────────────────────────────────────────────

def _magnitude(values: np.ndarray, rank: int) -> np.ndarray:
    if rank == 0:
        return np.abs(values)
    return np.sqrt(np.sum(values ** 2, axis=tuple(range(rank))))


def _grad_values(f: Field) -> np.ndarray:
    """Gradient of any rank, derivative index last among components."""
    return np.stack([spectral_derivative(f, j).values for j in range(f.grid.d)], axis=f.rank)


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
#  SPATIAL NORMS
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def _sup(values: np.ndarray, rank: int) -> float:
    return float(np.max(_magnitude(values, rank)))


def _lp(values: np.ndarray, rank: int, p: float, cell_volume: float) -> float:
    mag = _magnitude(values, rank)
    if np.isinf(p):
        return float(np.max(mag))
    return float((np.sum(mag ** p) * cell_volume) ** (1.0 / p))


def _holder(values: np.ndarray, rank: int, f: Field, alpha: float, stencil: str) -> float:
    grid = f.grid
    offsets = pair_offsets(grid, stencil)
    dists = offset_lengths(grid, offsets)
    best = 0.0
    for s, dist in zip(offsets, dists):
        shifted = np.roll(values, tuple(-s), axis=grid.axes)
        jump = float(np.max(_magnitude(shifted - values, rank)))
        best = max(best, jump / dist ** alpha)
    return best


def sup_norm(f: Field) -> float:
    return _sup(f.values, f.rank)


def lp_norm(f: Field, p: float = 2.0) -> float:
    """Rectangle-rule L^p norm over the box."""
    return _lp(f.values, f.rank, p, f.grid.cell_volume)


def holder_seminorm(f: Field, alpha: float, stencil: str = "dyadic") -> float:
    """max over sampled pairs of |f(x) - f(y)| / dist(x, y)^alpha."""
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    return _holder(f.values, f.rank, f, alpha, stencil)


def norm_c_alpha(f: Field, params: NormParams) -> float:
    return sup_norm(f) + holder_seminorm(f, params.alpha, params.stencil)


def norm_c1alpha(f: Field, params: NormParams) -> float:
    grad = _grad_values(f)
    r = f.rank + 1
    return sup_norm(f) + _sup(grad, r) + _holder(grad, r, f, params.alpha, params.stencil)


def norm_alpha_p(f: Field, params: NormParams) -> float:
    """|f|_{C^alpha} + |f|_{L^p}."""
    return norm_c_alpha(f, params) + lp_norm(f, params.p)


def norm_1alpha_p(f: Field, params: NormParams) -> float:
    """|f|_{C^{1+alpha}} + |f|_{W^{1,p}}."""
    grad = _grad_values(f)
    r = f.rank + 1
    vol = f.grid.cell_volume
    return (sup_norm(f) + _sup(grad, r)
            + _holder(grad, r, f, params.alpha, params.stencil)
            + lp_norm(f, params.p) + _lp(grad, r, params.p, vol))


def spatial_norm(kind: str, params: NormParams) -> SpatialNorm:
    """'alpha_p' or '1alpha_p' bound to params."""
    if kind == "alpha_p":
        return lambda f: norm_alpha_p(f, params)
    if kind == "1alpha_p":
        return lambda f: norm_1alpha_p(f, params)
    raise ValueError(f"unknown spatial norm {kind!r}")


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
#  PATH NORMS
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def path_norm_sup(path: Path, spatial: SpatialNorm) -> float:
    return max(spatial(f) for f in path)


def path_norm_lip(path: Path, spatial: SpatialNorm) -> float:
    """Sup part plus the Lipschitz seminorm; exact for piecewise-linear paths."""
    dt = path.time_grid.dt
    lip = max(spatial(path[m + 1] - path[m]) / dt for m in range(len(path) - 1))
    return path_norm_sup(path, spatial) + lip


def path_seminorm_beta(path: Path, beta: float, spatial: SpatialNorm) -> float:
    """max over node pairs of spatial(f(t) - f(s)) / |t - s|^beta."""
    if not 0 < beta <= 1:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    nodes = path.time_grid.nodes
    if beta == 1:
        dt = path.time_grid.dt
        return max(spatial(path[m + 1] - path[m]) / dt for m in range(len(path) - 1))
    best = 0.0
    for m in range(len(path)):
        for n in range(m + 1, len(path)):
            best = max(best, spatial(path[n] - path[m]) / (nodes[n] - nodes[m]) ** beta)
    return best


def path_norm_beta(path: Path, beta: float, spatial: SpatialNorm) -> float:
    """C^beta(0, T; spatial) norm: sup in time plus the beta seminorm."""
    return path_norm_sup(path, spatial) + path_seminorm_beta(path, beta, spatial)


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
#  COMPOSITES
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

@dataclass(frozen=True)
class NormReport:
    """
    Measured norms of a perturbation (X', tau' [, v']) and its data.

    The scalar fields describe X'; N, M, M1 and the P norms are the
    composite path quantities of the Lipschitz estimates.
    """

    lInf: float
    lP: float
    holderSemi: float
    c1AlphaP: float
    pathBeta: float
    pathLip: float
    N: float
    M: float
    M1: float
    P: float
    P_delta: float
    delta: float

    def as_row(self) -> dict:
        return asdict(self)


def default_delta(K: float) -> float:
    """delta = 1 / (4K) with K floored at 1."""
    return 1.0 / (4.0 * max(K, 1.0))


def composite_norms(dX: Path, dtau: Path, params: NormParams,
                    dv: Path | None = None, du0: Field | None = None,
                    delta: float | None = None) -> NormReport:
    """Assemble N(T), M(T), M1(T) and the plain and delta-weighted P norms."""
    if dX.time_grid != dtau.time_grid or (dv is not None and dv.time_grid != dX.time_grid):
        raise GridMismatchError("perturbation paths must share a time grid")
    a_p = spatial_norm("alpha_p", params)
    one_a_p = spatial_norm("1alpha_p", params)

    x_beta_1 = path_norm_beta(dX, params.beta, one_a_p)
    x_beta_0 = path_norm_beta(dX, params.beta, a_p)
    x_sup_1 = path_norm_sup(dX, one_a_p)
    tau_beta = path_norm_beta(dtau, params.beta, a_p)
    tau_sup = path_norm_sup(dtau, a_p)
    v_sup = path_norm_sup(dv, one_a_p) if dv is not None else 0.0
    u0_a = norm_alpha_p(du0, params) if du0 is not None else 0.0
    u0_1a = norm_1alpha_p(du0, params) if du0 is not None else 0.0
    delta = default_delta(0.0) if delta is None else delta

    P = x_beta_1 + tau_beta
    M = P + u0_1a
    return NormReport(
        lInf=path_norm_sup(dX, sup_norm),
        lP=path_norm_sup(dX, lambda f: lp_norm(f, params.p)),
        holderSemi=path_norm_sup(dX, lambda f: holder_seminorm(f, params.alpha, params.stencil)),
        c1AlphaP=x_sup_1,
        pathBeta=x_beta_1,
        pathLip=path_norm_lip(dX, one_a_p),
        N=x_beta_0 + x_sup_1 + tau_sup + u0_a,
        M=M,
        M1=M + v_sup,
        P=P,
        P_delta=P + delta * v_sup,
        delta=delta,
    )
