"""
Constitutive laws dtau/dt = F(g, tau) along particle paths, their
derivatives, and the RK4 integrator that drives them.

Arrays carry tensor components first: g is (d, d, ...), tau is
(d, d, ...) for Oldroyd-B and (d, ...) for MHD.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from errors import GrowthError, RankMismatchError
from spectral.grid import Field, Path, TimeGrid, outer

logger = logging.getLogger(__name__)

ArrayFn = Callable[..., np.ndarray]


@dataclass(frozen=True)
class ModelF:
    """
    F(g, tau) with exact partial derivatives.

    stress maps the Lagrangian state to the Eulerian added stress that
    enters H div; dstress is its derivative.
    """

    kind: str
    state_rank: int
    evaluate: ArrayFn
    d1: ArrayFn
    d2: ArrayFn
    stress: Callable[[Field], Field]
    dstress: Callable[[Field, Field], Field]
    envelope: Callable[[float, float], float] | None = None
    params: dict = field(default_factory=dict)

    @property
    def symmetric_state(self) -> bool:
        return self.state_rank == 2


# ── Oldroyd-B ──────────────────────────────────────────────────────

def _gt(a, b):
    return np.einsum("ik...,kj...->ij...", a, b)


def _tgT(t, g):
    return np.einsum("ik...,jk...->ij...", t, g)


def _sym(a):
    return a + a.swapaxes(0, 1)


def oldroyd_b(relaxation_rate: float = 1.0, coupling: float = 1.0) -> ModelF:
    """F = g tau + tau g^T - r tau + c (g + g^T)."""
    r, c = relaxation_rate, coupling

    def evaluate(g, tau):
        return _gt(g, tau) + _tgT(tau, g) - r * tau + c * _sym(g)

    def d1(g, tau, dg):
        return _gt(dg, tau) + _tgT(tau, dg) + c * _sym(dg)

    def d2(g, tau, dtau):
        return _gt(g, dtau) + _tgT(dtau, g) - r * dtau

    return ModelF(
        kind="oldroyd-b",
        state_rank=2,
        evaluate=evaluate,
        d1=d1,
        d2=d2,
        stress=lambda tau: tau,
        dstress=lambda tau, dtau: dtau,
        envelope=lambda G, K: 2 * G * K + r * K + 2 * c * G,
        params={"relaxation_rate": r, "coupling": c},
    )


# ── MHD ────────────────────────────────────────────────────────────

def mhd() -> ModelF:
    """State is the magnetic field b; F = g b and the stress is b (x) b."""

    def evaluate(g, b):
        return np.einsum("ij...,j...->i...", g, b)

    def d1(g, b, dg):
        return np.einsum("ij...,j...->i...", dg, b)

    def d2(g, b, db):
        return np.einsum("ij...,j...->i...", g, db)

    return ModelF(
        kind="mhd",
        state_rank=1,
        evaluate=evaluate,
        d1=d1,
        d2=d2,
        stress=lambda b: outer(b, b, symmetric=True),
        dstress=lambda b, db: (outer(b, db) + outer(db, b)).symmetrized(),
        envelope=lambda G, K: G * K,
    )


def custom(evaluate: ArrayFn, d1: ArrayFn, d2: ArrayFn, state_rank: int = 2,
           stress: Callable[[Field], Field] | None = None,
           dstress: Callable[[Field, Field], Field] | None = None,
           envelope: Callable[[float, float], float] | None = None) -> ModelF:
    """User-supplied law; derivatives are not generated automatically."""
    if state_rank == 2:
        stress = stress or (lambda tau: tau)
        dstress = dstress or (lambda tau, dtau: dtau)
    elif stress is None or dstress is None:
        raise ValueError("vector-state custom models must supply stress and dstress")
    return ModelF("custom", state_rank, evaluate, d1, d2, stress, dstress, envelope)


def build_model(name: str, relaxation_rate: float = 1.0, coupling: float = 1.0) -> ModelF:
    if name == "oldroyd-b":
        return oldroyd_b(relaxation_rate, coupling)
    if name == "mhd":
        return mhd()
    raise ValueError(f"unknown model {name!r}")


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
#  POINTWISE EVALUATION
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def _raw(x) -> np.ndarray:
    return x.values if isinstance(x, Field) else np.asarray(x, dtype=float)


def _check_shapes(model: ModelF, g: np.ndarray, tau: np.ndarray) -> None:
    d = g.shape[0] if g.ndim else 0
    if g.ndim < 2 or g.shape[:2] != (d, d):
        raise RankMismatchError(f"g must be a (d, d, ...) array, got {g.shape}")
    expected = (d,) * model.state_rank
    if tau.shape[: model.state_rank] != expected or tau.shape[model.state_rank:] != g.shape[2:]:
        raise RankMismatchError(
            f"{model.kind} state must have shape {expected} + {g.shape[2:]}, got {tau.shape}")


def _wrap_like(template, values: np.ndarray, model: ModelF):
    if isinstance(template, Field):
        out = Field(template.grid, values, model.state_rank)
        return out.symmetrized() if model.symmetric_state else out
    return values


def eval_F(model: ModelF, g, tau):
    """F(g, tau) pointwise; accepts arrays or Fields."""
    graw, traw = _raw(g), _raw(tau)
    _check_shapes(model, graw, traw)
    return _wrap_like(tau, model.evaluate(graw, traw), model)


def eval_DF(model: ModelF, g, tau, dg, dtau):
    """D1F(g, tau) dg + D2F(g, tau) dtau."""
    graw, traw, dgraw, dtraw = _raw(g), _raw(tau), _raw(dg), _raw(dtau)
    _check_shapes(model, graw, traw)
    _check_shapes(model, dgraw, dtraw)
    return _wrap_like(tau, model.d1(graw, traw, dgraw) + model.d2(graw, traw, dtraw), model)


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
#  STRESS ODE
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def _rk4_step(rhs: Callable, y: np.ndarray, g0, gmid, g1, dt: float) -> np.ndarray:
    k1 = rhs(g0, y)
    k2 = rhs(gmid, y + 0.5 * dt * k1)
    k3 = rhs(gmid, y + 0.5 * dt * k2)
    k4 = rhs(g1, y + dt * k3)
    return y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_tau(model: ModelF, g_path: Path, tau0: Field) -> Path:
    """
    RK4 per label on the path's time grid, g linear in time between nodes.
    Symmetric states are re-symmetrized after every step.
    """
    if g_path.rank != 2:
        raise RankMismatchError("g_path frames must be rank 2")
    if tau0.rank != model.state_rank:
        raise RankMismatchError(f"{model.kind} state must be rank {model.state_rank}")
    tg = g_path.time_grid
    dt = tg.dt
    y = tau0.values.copy()
    if model.symmetric_state:
        y = 0.5 * (y + y.swapaxes(0, 1))
    frames = [Field(tau0.grid, y, model.state_rank, model.symmetric_state)]
    for m in range(tg.M):
        g0, g1 = g_path[m].values, g_path[m + 1].values
        y = _rk4_step(model.evaluate, y, g0, 0.5 * (g0 + g1), g1, dt)
        if model.symmetric_state:
            y = 0.5 * (y + y.swapaxes(0, 1))
        if not np.all(np.isfinite(y)):
            t_fail = (m + 1) * dt
            raise GrowthError(f"stress blew up at t = {t_fail:.4g}", time=t_fail)
        frames.append(Field(tau0.grid, y, model.state_rank, model.symmetric_state))
    return Path(tg, tuple(frames))


def _sampled_envelope(model: ModelF, d: int, samples: int = 256, seed: int = 0) -> Callable:
    rng = np.random.default_rng(seed)
    g_dirs = rng.normal(size=(d, d, samples))
    g_dirs /= np.sqrt(np.sum(g_dirs ** 2, axis=(0, 1)))
    t_dirs = rng.normal(size=(d,) * model.state_rank + (samples,))
    axes = tuple(range(model.state_rank))
    t_dirs /= np.sqrt(np.sum(t_dirs ** 2, axis=axes))

    def envelope(G, K):
        vals = model.evaluate(G * g_dirs, K * t_dirs)
        return float(np.max(np.sqrt(np.sum(vals ** 2, axis=axes))))
    return envelope


def apriori_bound(model: ModelF, g_sup: float, K0: float, time_grid: TimeGrid,
                  d: int = 2, substeps: int = 20) -> np.ndarray:
    """
    Comparison function K(t) with K' = envelope(|g|_inf, K), K(0) = K0,
    at the nodes of time_grid; dominates |tau(t)|_inf.
    """
    env = model.envelope or _sampled_envelope(model, d)
    h = time_grid.dt / substeps
    K = float(K0)
    out = [K]
    for _ in range(time_grid.M):
        for _ in range(substeps):
            k1 = env(g_sup, K)
            k2 = env(g_sup, K + 0.5 * h * k1)
            k3 = env(g_sup, K + 0.5 * h * k2)
            k4 = env(g_sup, K + h * k3)
            K += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(K)
    return np.array(out)
