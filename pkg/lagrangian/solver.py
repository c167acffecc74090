"""
Lagrangian fixed-point solver.

A state is (X, tau) on the Stokes branch and (X, tau, v) on the
Navier-Stokes branch, with X = id + chi sampled at the time nodes.
One Picard step evaluates the Eulerian velocity through the Duhamel
operators, pulls it back to labels, and integrates X and tau again.
"""
import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

import config
from analysis.norms import (NormParams, default_delta, path_norm_beta, path_norm_lip,
                            path_norm_sup, spatial_norm)
from errors import InvariantViolation, NonConvergenceError, RankMismatchError
from lagrangian.dynamics import ModelF, build_model, eval_DF, integrate_tau
from lagrangian.flowmap import FlowMap, compose, grad_label, invert_map
from spectral.grid import (Field, Path, TimeGrid, directional_derivative, divergence,
                           gradient, outer)
from spectral.operators import (commutator_G, commutator_U, op_G, op_G_path, op_L, op_U,
                                op_U_path)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    time_grid: TimeGrid
    model: ModelF
    params: NormParams = field(default_factory=NormParams)
    branch: str = "stokes"
    gamma: float | None = None
    tol_fp: float = config.FIXED_POINT_TOL
    max_iter: int = config.FIXED_POINT_MAX_ITER
    nu: float = config.VISCOSITY
    interpolation: str = config.INTERPOLATION_METHOD
    delta: float | None = None

    def __post_init__(self):
        if self.tol_fp <= 0:
            raise ValueError("tol_fp must be positive")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.branch not in config.BRANCHES:
            raise ValueError(f"unknown branch {self.branch!r}")

    @property
    def navier_stokes(self) -> bool:
        return self.branch == "navier-stokes"

    @classmethod
    def from_run_config(cls, rc, T: float | None = None) -> "SolverConfig":
        return cls(
            time_grid=TimeGrid(rc.T if T is None else T, rc.M),
            model=build_model(rc.model, rc.relaxation_rate, rc.coupling),
            params=NormParams(rc.alpha, rc.beta, rc.p, rc.stencil),
            branch=rc.branch,
            gamma=rc.gamma,
            tol_fp=rc.tol_fp,
            max_iter=rc.max_iter,
            nu=rc.nu,
            interpolation=rc.interpolation,
            delta=rc.delta,
        )


@dataclass(frozen=True, eq=False)
class LagrangianState:
    """Displacement chi, Lagrangian stress tau and (Navier-Stokes) velocity v."""

    chi: Path
    tau: Path
    v: Path | None = None

    def __post_init__(self):
        if self.chi.rank != 1:
            raise RankMismatchError("chi must be a path of vector fields")
        paths = [self.tau] + ([self.v] if self.v is not None else [])
        if any(p.time_grid != self.chi.time_grid for p in paths):
            raise ValueError("state paths must share one time grid")
        if np.any(self.chi[0].values):
            raise ValueError("X(0) must be the identity map")

    @property
    def time_grid(self) -> TimeGrid:
        return self.chi.time_grid

    def flowmaps(self) -> list[FlowMap]:
        return [FlowMap(c) for c in self.chi]

    @classmethod
    def initial(cls, sc: SolverConfig, u0: Field, sigma0: Field) -> "LagrangianState":
        """(identity, sigma0 frozen in time [, L(u0) frames])."""
        tg = sc.time_grid
        chi = Path.constant(tg, Field.zeros(u0.grid, 1))
        tau = Path.constant(tg, sigma0)
        v = None
        if sc.navier_stokes:
            v = Path.from_function(tg, lambda t: op_L(u0, t, sc.nu))
        return cls(chi, tau, v)


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
#  LAGRANGIAN NONLINEARITIES
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

@dataclass(frozen=True, eq=False)
class Evaluation:
    """Eulerian and Lagrangian fields produced from one state."""

    inverses: list[FlowMap]
    state_eulerian: Path
    sigma: Path
    inertia: Path | None
    u: Path
    grad_u: Path
    velocity: Path
    g: Path


def _evaluate(state: LagrangianState, sc: SolverConfig, u0: Field,
              inertia: bool) -> Evaluation:
    tg = state.time_grid
    method = sc.interpolation
    flows = state.flowmaps()
    inverses = [invert_map(X, method) for X in flows]

    # sigma(s) = tau(s) o X(s)^{-1}, recomputed every call
    eul_state = Path(tg, tuple(compose(t, A, method) for t, A in zip(state.tau, inverses)))
    sigma = eul_state.map(sc.model.stress)

    heat = [op_L(u0, t, sc.nu) for t in tg.nodes]
    u_path = Path(tg, tuple(heat)) + op_U_path(sigma, sc.nu)
    g_path = Path(tg, tuple(gradient(h) for h in heat)) + op_G_path(sigma, sc.nu)

    w = None
    if inertia:
        if state.v is None:
            raise ValueError("the inertial term needs a velocity path v")
        eul_v = [compose(v, A, method) for v, A in zip(state.v, inverses)]
        w = Path(tg, tuple(outer(e, e, symmetric=True) for e in eul_v))
        u_path = u_path - op_U_path(w, sc.nu)
        g_path = g_path - op_G_path(w, sc.nu)

    velocity = Path(tg, tuple(compose(u, X, method) for u, X in zip(u_path, flows)))
    g = Path(tg, tuple(compose(gu, X, method) for gu, X in zip(g_path, flows)))
    return Evaluation(inverses, eul_state, sigma, w, u_path, g_path, velocity, g)


def _node(state: LagrangianState, t: float) -> int:
    m = state.time_grid.index_of(t)
    if m is None:
        raise ValueError(f"t = {t} is not a node of the state's time grid")
    return m


def cal_U(state: LagrangianState, sc: SolverConfig, u0: Field, t: float) -> Field:
    """U(X, tau)(t) = L(u0) o X + U(tau o X^{-1}) o X."""
    return _evaluate(state, sc, u0, inertia=False).velocity[_node(state, t)]


def cal_V(state: LagrangianState, sc: SolverConfig, u0: Field, t: float) -> Field:
    """V(X, tau, v)(t) = U(X, tau) - U((v (x) v) o X^{-1}) o X."""
    return _evaluate(state, sc, u0, inertia=True).velocity[_node(state, t)]


def lag_g(state: LagrangianState, sc: SolverConfig, u0: Field, t: float) -> Field:
    """g = (grad u) o X, including the inertial term on the Navier-Stokes branch."""
    return _evaluate(state, sc, u0, inertia=sc.navier_stokes).g[_node(state, t)]


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
#  FIXED-POINT MAP
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def state_size(state: LagrangianState, params: NormParams) -> float:
    """|(X - I, tau [, v])| in Lip(C^{1+a,p}) x Lip(C^{a,p}) [x L^inf(C^{1+a,p})]."""
    size = (path_norm_lip(state.chi, spatial_norm("1alpha_p", params))
            + path_norm_lip(state.tau, spatial_norm("alpha_p", params)))
    if state.v is not None:
        size += path_norm_sup(state.v, spatial_norm("1alpha_p", params))
    return size


def check_invariant_set(state: LagrangianState, sc: SolverConfig) -> None:
    """Raise InvariantViolation when a frame leaves the admissible set."""
    for m, X in enumerate(state.flowmaps()):
        grad = X.max_gradient_norm()
        if grad > config.MAX_DISPLACEMENT_GRADIENT:
            raise InvariantViolation(
                f"|grad chi| = {grad:.3f} > {config.MAX_DISPLACEMENT_GRADIENT} at frame {m}",
                frame=m)
    if sc.gamma is not None:
        size = state_size(state, sc.params)
        if size > sc.gamma:
            raise InvariantViolation(f"state size {size:.4g} exceeds gamma = {sc.gamma}")


def _integrate_positions(velocity: Path) -> Path:
    dt = velocity.time_grid.dt
    chi = cumulative_trapezoid(velocity.values(), dx=dt, axis=0, initial=0)
    return Path.from_values(velocity.time_grid, velocity.grid, chi, 1)


def apply_S(state: LagrangianState, sc: SolverConfig, u0: Field, sigma0: Field) -> LagrangianState:
    """
    X_new = a + int U ds (trapezoid), tau_new from dtau/dt = F(g, tau)
    with tau_new(0) = sigma0, and v_new = V on the Navier-Stokes branch.
    """
    check_invariant_set(state, sc)
    ev = _evaluate(state, sc, u0, inertia=sc.navier_stokes)
    chi_new = _integrate_positions(ev.velocity)
    tau_new = integrate_tau(sc.model, ev.g, sigma0)
    new = LagrangianState(chi_new, tau_new, ev.velocity if sc.navier_stokes else None)
    check_invariant_set(new, sc)
    return new


def state_distance(a: LagrangianState, b: LagrangianState, params: NormParams,
                   delta: float | None = None) -> float:
    """P distance; the velocity part is weighted by delta when both carry v."""
    dist = (path_norm_beta(a.chi - b.chi, params.beta, spatial_norm("1alpha_p", params))
            + path_norm_beta(a.tau - b.tau, params.beta, spatial_norm("alpha_p", params)))
    if a.v is not None and b.v is not None:
        weight = default_delta(0.0) if delta is None else delta
        dist += weight * path_norm_sup(a.v - b.v, spatial_norm("1alpha_p", params))
    return dist


@dataclass(frozen=True)
class HistoryRow:
    iteration: int
    distance: float
    ratio: float
    wall_time: float


@dataclass(frozen=True, eq=False)
class SolveResult:
    state: LagrangianState
    history: list[HistoryRow]
    u: Path
    sigma: Path
    grad_u: Path
    velocity: Path
    g: Path
    delta: float | None

    @property
    def iterations(self) -> int:
        return len(self.history)


def measure_delta(z0: LagrangianState, z1: LagrangianState, params: NormParams) -> float:
    """delta = 1/(4K), K = |v1 - v0| / |(X1 - X0, tau1 - tau0)|_P."""
    if z0.v is None or z1.v is None:
        return default_delta(0.0)
    xt = state_distance(LagrangianState(z1.chi, z1.tau), LagrangianState(z0.chi, z0.tau), params)
    dv = path_norm_sup(z1.v - z0.v, spatial_norm("1alpha_p", params))
    K = dv / xt if xt > 0 else 0.0
    return default_delta(K)


def check_divergence_free(u0: Field) -> None:
    div = divergence(u0).max_abs()
    if div > 1e-10 * max(1.0, u0.max_abs()):
        raise ValueError(f"u0 must be divergence-free, max |div u0| = {div:.3e}")


# consecutive growing distances before the iteration is declared divergent
DIVERGENCE_PATIENCE = 3


def picard_solve(sc: SolverConfig, u0: Field, sigma0: Field,
                 initial_state: LagrangianState | None = None) -> SolveResult:
    """Iterate z <- S(z) until successive P distances drop below tol_fp."""
    check_divergence_free(u0)
    if sigma0.rank != sc.model.state_rank:
        raise RankMismatchError(f"{sc.model.kind} needs a rank-{sc.model.state_rank} sigma0")

    z = initial_state or LagrangianState.initial(sc, u0, sigma0)
    history: list[HistoryRow] = []
    delta = sc.delta
    growing = 0
    start = time.perf_counter()
    for k in range(1, sc.max_iter + 1):
        z_new = apply_S(z, sc, u0, sigma0)
        if sc.navier_stokes and delta is None:
            delta = measure_delta(z, z_new, sc.params)
            logger.info("measured delta = %.4g", delta)
        dist = state_distance(z_new, z, sc.params, delta)
        prev = history[-1].distance if history else None
        ratio = dist / prev if prev else float("nan")
        history.append(HistoryRow(k, dist, ratio, time.perf_counter() - start))
        logger.info("iteration %d: distance %.3e ratio %.3f", k, dist, ratio)
        z = z_new
        if dist < sc.tol_fp:
            break
        growing = growing + 1 if ratio > 1 else 0
        if growing >= DIVERGENCE_PATIENCE or not np.isfinite(dist):
            raise NonConvergenceError(
                f"Picard iteration diverging at iteration {k} (T too large?)", history)
    else:
        raise NonConvergenceError(
            f"no convergence after {sc.max_iter} iterations (T too large?)", history)

    ev = _evaluate(z, sc, u0, inertia=sc.navier_stokes)
    return SolveResult(z, history, ev.u, ev.state_eulerian, ev.grad_u, ev.velocity, ev.g,
                       delta if sc.navier_stokes else None)


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
#  LINEARIZATION
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

@dataclass(frozen=True, eq=False)
class LinearizedMaps:
    """Derivatives at time t in Lagrangian form (already composed with X)."""

    dU: Field
    dg: Field
    dT: Field
    grad_dU: Field
    dV: Field | None = None


def linearized_maps(state: LagrangianState, sc: SolverConfig, u0: Field,
                    direction: LagrangianState, t: float, du0: Field | None = None,
                    dsigma0: Field | None = None) -> LinearizedMaps:
    """
    Directional derivatives of U, g, T (and V) along (X', tau' [, v'])
    with data perturbation du0. In Eulerian form, with eta = X' o X^{-1}
    and delta = tau' o X^{-1}:

        U' = eta.grad L(u0) + L(u0') + [eta.grad, U] sigma + U(delta)
        g' = eta.grad L(grad u0) + L(grad u0') + [eta.grad, G] sigma + G(delta)
    """
    m = _node(state, t)
    method = sc.interpolation
    model = sc.model
    tg = state.time_grid
    if dsigma0 is not None and not np.allclose(direction.tau[0].values, dsigma0.values):
        raise ValueError("direction tau'(0) must equal dsigma0")
    du0 = du0 if du0 is not None else Field.zeros(u0.grid, 1)

    ev = _evaluate(state, sc, u0, inertia=sc.navier_stokes)
    A = ev.inverses
    eta = Path(tg, tuple(compose(x, a, method) for x, a in zip(direction.chi, A)))
    eul_dtau = Path(tg, tuple(compose(x, a, method) for x, a in zip(direction.tau, A)))
    dsigma = Path(tg, tuple(model.dstress(s, ds) for s, ds in zip(ev.state_eulerian, eul_dtau)))

    heat = op_L(u0, t, sc.nu)
    dheat = op_L(du0, t, sc.nu)
    eta_t = eta[m]
    du_e = (directional_derivative(eta_t, heat) + dheat
            + commutator_U(eta, ev.sigma, t, sc.nu) + op_U(dsigma, t, sc.nu))
    dg_e = (directional_derivative(eta_t, gradient(heat)) + gradient(dheat)
            + commutator_G(eta, ev.sigma, t, sc.nu) + op_G(dsigma, t, sc.nu))

    dv_e = None
    if sc.navier_stokes:
        eul_v = Path(tg, tuple(compose(v, a, method) for v, a in zip(state.v, A)))
        eul_dv = Path(tg, tuple(compose(v, a, method) for v, a in zip(direction.v, A)))
        dw = eul_v.zip_map(eul_dv, lambda u, du: outer(u, du) + outer(du, u))
        dv_e = du_e - commutator_U(eta, ev.inertia, t, sc.nu) - op_U(dw, t, sc.nu)
        dg_e = dg_e - commutator_G(eta, ev.inertia, t, sc.nu) - op_G(dw, t, sc.nu)

    X = state.flowmaps()[m]
    dU = compose(du_e, X, method)
    dg = compose(dg_e, X, method)
    dV = compose(dv_e, X, method) if dv_e is not None else None
    dT = eval_DF(model, ev.g[m], state.tau[m], dg, direction.tau[m])

    grad_X = grad_label(X)
    grad_dX = gradient(direction.chi[m])
    g = ev.g[m]
    grad_dU = Field(u0.grid,
                    np.einsum("ik...,kj...->ij...", dg.values, grad_X.values)
                    + np.einsum("ik...,kj...->ij...", g.values, grad_dX.values), 2)
    return LinearizedMaps(dU, dg, dT, grad_dU, dV)
