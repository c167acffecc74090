"""
Verification battery.

Each check measures the left side of one quantitative estimate over a
controlled family of inputs and compares it against the claimed
right-side shape with a fitted constant. Nothing here proves a bound;
a report says whether the sampled numbers are consistent with one.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid
from sklearn.linear_model import LinearRegression

import config
from analysis.eulerian import eulerian_reference
from analysis.norms import (NormParams, lp_norm, norm_1alpha_p, norm_alpha_p, norm_c1alpha,
                            norm_c_alpha, path_norm_beta, path_norm_sup, spatial_norm, sup_norm)
from analysis.presets import (build_initial_data, rough_envelope, shear_velocity,
                              single_mode_stress, taylor_green)
from errors import ConfigError
from lagrangian.dynamics import ModelF, apriori_bound
from lagrangian.flowmap import ChordArcReport, FlowMap, chord_arc, pointwise_spectral_norm
from lagrangian.solver import (LagrangianState, SolveResult, SolverConfig, apply_S,
                               measure_delta, picard_solve, state_distance)
from spectral.grid import Field, GridSpec, Path, TimeGrid, directional_derivative
from spectral.operators import (Multiplier, commutator_G_path, commutator_U_path,
                                commutator_steady, cz_apply, op_G_path, op_U_path,
                                riesz_multiplier)

logger = logging.getLogger(__name__)

# ε vs ε/2 runs must differ by a factor inside [1.8, 2.2]
LINEARITY_BAND = (0.9, 1.1)
STEADY_PLATEAU_TOL = 0.15
STEADY_GROWTH_MIN = 1.3
CONTRACTION_TARGET = 0.5
CROSS_VALIDATION_TOL = 1e-3
REFINEMENT_RATIO_MIN = 3.0


@dataclass
class BoundCheckReport:
    """
    Outcome of one check. samples are (scale, measured) pairs; scale is
    T, n, epsilon or t depending on the experiment, and bounds holds the
    matching fitted right-hand sides.
    """

    bound_name: str
    fitted_constant: float
    scaling_exponent: float
    samples: list[tuple[float, float]] = field(default_factory=list)
    bounds: list[float] = field(default_factory=list)
    passed: bool = True
    first_violation: tuple[float, float] | None = None
    details: dict = field(default_factory=dict)

    def rows(self) -> list[dict]:
        rows = []
        for i, (scale, measured) in enumerate(self.samples):
            bound = self.bounds[i] if i < len(self.bounds) else float("nan")
            rows.append({
                "bound": self.bound_name,
                "scale": scale,
                "measured": measured,
                "bound_value": bound,
                "within": bool(not measured > bound) if np.isfinite(bound) else True,
            })
        return rows

    def summary_line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        line = (f"{status}  {self.bound_name:<17} C={self.fitted_constant:.4g} "
                f"exponent={self.scaling_exponent:.3f} samples={len(self.samples)}")
        if self.first_violation is not None:
            scale, measured = self.first_violation
            line += f"  first violation at scale {scale:.4g} (measured {measured:.4g})"
        return line


# ── Fitting ────────────────────────────────────────────────────────

def fit_exponent(scales: Sequence[float], measured: Sequence[float]) -> float:
    """Slope of log(measured) against log(scale); nan with < 2 usable points."""
    s = np.asarray(scales, dtype=float)
    m = np.asarray(measured, dtype=float)
    keep = (s > 0) & (m > 0) & np.isfinite(m)
    if keep.sum() < 2:
        return float("nan")
    model = LinearRegression().fit(np.log(s[keep])[:, None], np.log(m[keep]))
    return float(model.coef_[0])


def fit_bound(name: str, scales: Sequence[float], measured: Sequence[float],
              shape: Sequence[float], reference: int = 0,
              slack: float = config.BOUND_SLACK) -> BoundCheckReport:
    """
    C = measured / shape at the reference sample; every sample must then
    satisfy measured <= C * shape * (1 + slack).
    """
    measured = [float(v) for v in measured]
    shape = [float(v) for v in shape]
    C = measured[reference] / shape[reference] if shape[reference] > 0 else 0.0
    floor = 1e-14 * max(max(measured, default=0.0), 1.0)
    bounds = [C * s * (1 + slack) for s in shape]
    violation = None
    for scale, m, b in zip(scales, measured, bounds):
        if not np.isfinite(m) or m > b + floor:
            violation = (float(scale), m)
            break
    return BoundCheckReport(
        bound_name=name,
        fitted_constant=C,
        scaling_exponent=fit_exponent(scales, measured),
        samples=[(float(s), m) for s, m in zip(scales, measured)],
        bounds=bounds,
        passed=violation is None,
        first_violation=violation,
    )


def _fail(report: BoundCheckReport, reason: str) -> None:
    report.passed = False
    report.details.setdefault("failures", []).append(reason)
    logger.warning("%s: %s", report.bound_name, reason)


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
#  DUHAMEL OPERATOR BOUNDS
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def _largest_first(T_sweep: Sequence[float]) -> list[float]:
    if not T_sweep:
        raise ValueError("T sweep is empty")
    return sorted((float(T) for T in T_sweep), reverse=True)


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def check_U_bound(sigma_family: Sequence[Field], T_sweep: Sequence[float], params: NormParams,
                  M: int = 16, nu: float | None = None) -> BoundCheckReport:
    """sup_t |U sigma|_{a,p} <= C sqrt(T) |sigma|_{a,p} for time-constant sigma."""
    a_p = spatial_norm("alpha_p", params)
    Ts = _largest_first(T_sweep)
    measured = []
    for T in Ts:
        tg = TimeGrid(T, M)
        worst = 0.0
        for sigma in sigma_family:
            u = op_U_path(Path.constant(tg, sigma), nu)
            worst = max(worst, _ratio(path_norm_sup(u, a_p), a_p(sigma)))
        measured.append(worst)
        logger.debug("U bound: T=%.4g measured %.4g", T, worst)
    return fit_bound("u-bound", Ts, measured, [math.sqrt(T) for T in Ts])


def check_G_bound(sigma_family: Sequence[Field], T_sweep: Sequence[float], params: NormParams,
                  M: int = 16, nu: float | None = None) -> BoundCheckReport:
    """sup_t |G sigma|_{a,p} <= C |sigma|_{C^b(a,p)}, uniformly in T."""
    a_p = spatial_norm("alpha_p", params)
    Ts = _largest_first(T_sweep)
    measured = []
    for T in Ts:
        tg = TimeGrid(T, M)
        worst = 0.0
        for sigma in sigma_family:
            path = Path.constant(tg, sigma)
            g = op_G_path(path, nu)
            worst = max(worst, _ratio(path_norm_sup(g, a_p),
                                      path_norm_beta(path, params.beta, a_p)))
        measured.append(worst)
    return fit_bound("g-bound", Ts, measured, [1.0] * len(Ts))


def check_commU_bound(eta_fn: Callable[[float], Field], sigma_family: Sequence[Field],
                      T_sweep: Sequence[float], params: NormParams, M: int = 16,
                      nu: float | None = None) -> BoundCheckReport:
    """
    sup_t |[eta.grad, U] sigma|_{a,p}
        <= C (T^{1-b} |eta|_{C^b(C^a)} + T^{1/2} |eta|_{L^inf(C^{1+a})}) |sigma|_{L^inf(a,p)}
    """
    a_p = spatial_norm("alpha_p", params)
    Ts = _largest_first(T_sweep)
    measured, shape = [], []
    for T in Ts:
        tg = TimeGrid(T, M)
        eta = Path.from_function(tg, eta_fn)
        eta_beta = path_norm_beta(eta, params.beta, lambda f: norm_c_alpha(f, params))
        eta_lip = path_norm_sup(eta, lambda f: norm_c1alpha(f, params))
        worst = 0.0
        for sigma in sigma_family:
            path = Path.constant(tg, sigma)
            comm = commutator_U_path(eta, path, nu)
            worst = max(worst, _ratio(path_norm_sup(comm, a_p), path_norm_sup(path, a_p)))
        measured.append(worst)
        shape.append(T ** (1 - params.beta) * eta_beta + math.sqrt(T) * eta_lip)
    return fit_bound("comm-u", Ts, measured, shape)


def check_commG_bound(eta_fn: Callable[[float], Field], sigma_family: Sequence[Field],
                      T_sweep: Sequence[float], params: NormParams, M: int = 16,
                      nu: float | None = None) -> BoundCheckReport:
    """sup_t |[eta.grad, G] sigma|_{a,p} <= C |eta|_{C^b(C^{1+a})} |sigma|_{C^b(a,p)}."""
    a_p = spatial_norm("alpha_p", params)
    Ts = _largest_first(T_sweep)
    measured, shape = [], []
    for T in Ts:
        tg = TimeGrid(T, M)
        eta = Path.from_function(tg, eta_fn)
        eta_norm = path_norm_beta(eta, params.beta, lambda f: norm_c1alpha(f, params))
        worst = 0.0
        for sigma in sigma_family:
            path = Path.constant(tg, sigma)
            comm = commutator_G_path(eta, path, nu)
            worst = max(worst, _ratio(path_norm_sup(comm, a_p),
                                      path_norm_beta(path, params.beta, a_p)))
        measured.append(worst)
        shape.append(eta_norm)
    return fit_bound("comm-g", Ts, measured, shape)


def check_steady_comm_bound(eta_fn: Callable[[GridSpec], Field],
                            sigma_fn: Callable[[GridSpec], Field],
                            grids: Sequence[GridSpec], params: NormParams,
                            K: Multiplier | None = None) -> BoundCheckReport:
    """
    Resolution study for |[eta.grad, K] sigma|_{a,p} <= C |eta|_{C^{1+a}} |sigma|_{a,p}:
    the commutator's C^a norm plateaus under refinement while the single
    term eta.grad K sigma keeps growing. C is fitted on the coarsest grid.
    """
    K = K or riesz_multiplier(0) @ riesz_multiplier(1)
    measured, shape, plateau, growth = [], [], [], []
    for grid in grids:
        eta, sigma = eta_fn(grid), sigma_fn(grid)
        comm = commutator_steady(eta, K, sigma)
        measured.append(norm_alpha_p(comm, params))
        shape.append(norm_c1alpha(eta, params) * norm_alpha_p(sigma, params))
        plateau.append(norm_c_alpha(comm, params))
        growth.append(sup_norm(directional_derivative(eta, cz_apply(K, sigma))))
        logger.info("steady commutator n=%d: |comm|_Ca=%.4g, |eta.grad K sigma|_inf=%.4g",
                    grid.n, plateau[-1], growth[-1])

    report = fit_bound("steady-comm", [g.n for g in grids], measured, shape)
    report.details.update(comm_c_alpha=plateau, single_term_sup=growth)
    for i in range(1, len(grids)):
        change = abs(plateau[i] / plateau[i - 1] - 1) if plateau[i - 1] > 0 else 0.0
        factor = growth[i] / growth[i - 1] if growth[i - 1] > 0 else float("inf")
        if change >= STEADY_PLATEAU_TOL:
            _fail(report, f"commutator C^alpha norm moved {change:.1%} at n={grids[i].n}")
        if factor < STEADY_GROWTH_MIN:
            _fail(report, f"eta.grad K sigma grew only x{factor:.3f} at n={grids[i].n}")
    return report


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
#  CONVERGED-RUN CHECKS
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def chord_arc_lambda(grad_u: Path) -> np.ndarray:
    """lambda(t) = exp(int_0^t |grad u|_inf ds) at the nodes, trapezoid in time."""
    sup = [float(np.max(pointwise_spectral_norm(g.values))) for g in grad_u]
    integral = cumulative_trapezoid(sup, dx=grad_u.time_grid.dt, initial=0)
    return np.exp(integral)


def chord_arc_series(result: SolveResult, slack: float = config.CHORD_ARC_SLACK,
                     stencil: str = "dyadic") -> list[ChordArcReport]:
    lam = chord_arc_lambda(result.grad_u)
    return [chord_arc(FlowMap(chi), float(l), slack, stencil)
            for chi, l in zip(result.state.chi, lam)]


def check_chord_arc(result: SolveResult, slack: float = config.CHORD_ARC_SLACK,
                    stencil: str = "dyadic") -> BoundCheckReport:
    """Sampled |a - b| / |X(a) - X(b)| stays in [1/lambda(t), lambda(t)] per frame."""
    series = chord_arc_series(result, slack, stencil)
    nodes = result.state.time_grid.nodes
    samples, bounds, used = [], [], 0.0
    violation = None
    for t, rep in zip(nodes, series):
        worst = max(rep.max_ratio, 1.0 / rep.min_ratio)
        samples.append((float(t), worst))
        bounds.append(rep.lam * (1 + slack))
        if rep.lam > 1:
            used = max(used, math.log(worst) / math.log(rep.lam))
        if not rep.within_bound and violation is None:
            violation = (float(t), worst)
    report = BoundCheckReport("chord-arc", used, float("nan"), samples, bounds,
                              violation is None, violation)
    report.details["lambda"] = [rep.lam for rep in series]
    return report


def check_stress_growth(result: SolveResult, sc: SolverConfig) -> BoundCheckReport:
    """|tau(t)|_inf against the comparison function K(t) driven by sup |g|."""
    tau = result.state.tau
    g_sup = max(sup_norm(g) for g in result.g)
    K = apriori_bound(sc.model, g_sup, sup_norm(tau[0]), tau.time_grid, d=tau.grid.d)
    measured = [sup_norm(f) for f in tau]
    nodes = tau.time_grid.nodes
    violation = None
    for t, m, k in zip(nodes, measured, K):
        if m > k * (1 + 1e-6) + 1e-14:
            violation = (float(t), m)
            break
    used = max((_ratio(m, k) for m, k in zip(measured, K)), default=0.0)
    return BoundCheckReport("stress-growth", used, fit_exponent(nodes[1:], measured[1:]),
                            [(float(t), m) for t, m in zip(nodes, measured)], list(map(float, K)),
                            violation is None, violation, {"g_sup": g_sup})


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
#  DATA DEPENDENCE, UNIQUENESS, CONTRACTION
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def solution_difference(a: SolveResult, b: SolveResult, params: NormParams) -> float:
    """
    |X2 - X1|_{C^b(1+a,p)} + |tau2 - tau1|_{C^b(a,p)} + |dX2/dt - dX1/dt|_{L^inf(1+a,p)}.
    """
    one_a_p = spatial_norm("1alpha_p", params)
    return (path_norm_beta(a.state.chi - b.state.chi, params.beta, one_a_p)
            + path_norm_beta(a.state.tau - b.state.tau, params.beta, spatial_norm("alpha_p", params))
            + path_norm_sup(a.velocity - b.velocity, one_a_p))


def check_lipschitz_data(sc: SolverConfig, u0: Field, sigma0: Field, du0: Field,
                         dsigma0: Field, epsilons: Sequence[float]) -> BoundCheckReport:
    """
    Solve for (u0, sigma0) and (u0 + e du0, sigma0 + e dsigma0); the solution
    difference must scale linearly in e. C(T) is difference / data size
    at the largest e.
    """
    eps = sorted((float(e) for e in epsilons), reverse=True)
    base = picard_solve(sc, u0, sigma0)
    measured, data = [], []
    for e in eps:
        if e == 0:
            measured.append(0.0)
            data.append(0.0)
            continue
        pert = picard_solve(sc, u0 + du0 * e, sigma0 + dsigma0 * e)
        measured.append(solution_difference(pert, base, sc.params))
        data.append(norm_1alpha_p(du0 * e, sc.params) + norm_alpha_p(dsigma0 * e, sc.params))
        logger.info("lipschitz: eps=%.3g difference %.4g", e, measured[-1])

    report = fit_bound("lipschitz-data", eps, measured, data)
    ratios = []
    for i in range(1, len(eps)):
        if eps[i] == 0:
            if measured[i] > 0:
                _fail(report, "zero perturbation gave a nonzero difference")
            continue
        if measured[i - 1] == 0 and measured[i] == 0:
            continue
        raw = _ratio(measured[i - 1], measured[i])
        ratios.append(raw)
        normalized = raw / (eps[i - 1] / eps[i])
        lo, hi = LINEARITY_BAND
        if not lo <= normalized <= hi:
            _fail(report, f"difference ratio {raw:.3f} for eps {eps[i - 1]:.3g} -> {eps[i]:.3g}")
    report.details["ratios"] = ratios
    return report


def _guess_fields(model: ModelF, grid: GridSpec, amplitude: float) -> tuple[Field, Field]:
    phi = taylor_green(grid, amplitude)
    if model.state_rank == 1:
        return phi, shear_velocity(grid, amplitude)
    return phi, single_mode_stress(grid, amplitude)


def perturbed_state(state: LagrangianState, model: ModelF, amplitude: float) -> LagrangianState:
    """
    chi + t phi, tau + psi and (Navier-Stokes) v + phi, so that v stays
    the time derivative of the perturbed displacement.
    """
    tg = state.time_grid
    phi, psi = _guess_fields(model, state.chi.grid, amplitude)
    chi = Path(tg, tuple(c + phi * t for c, t in zip(state.chi, tg.nodes)))
    tau = state.tau.map(lambda f: f + psi)
    v = state.v.map(lambda f: f + phi) if state.v is not None else None
    return LagrangianState(chi, tau, v)


def check_uniqueness(sc: SolverConfig, u0: Field, sigma0: Field,
                     guess_amplitude: float = 1e-2) -> BoundCheckReport:
    """Two Picard runs from different initial guesses must land within 2 tol_fp."""
    first = picard_solve(sc, u0, sigma0)
    guess = perturbed_state(LagrangianState.initial(sc, u0, sigma0), sc.model, guess_amplitude)
    second = picard_solve(sc, u0, sigma0, initial_state=guess)
    dist = state_distance(first.state, second.state, sc.params, first.delta)
    allowed = 2 * sc.tol_fp
    logger.info("uniqueness: fixed points %.3e apart (allowed %.1e)", dist, allowed)
    passed = dist <= allowed
    return BoundCheckReport("uniqueness", dist / sc.tol_fp, float("nan"), [(1.0, dist)], [allowed],
                            passed, None if passed else (1.0, dist),
                            {"iterations": [first.iterations, second.iterations]})


def check_contraction(sc: SolverConfig, u0: Field, sigma0: Field, T_sweep: Sequence[float],
                      amplitude: float = 1e-3) -> BoundCheckReport:
    """
    |S z1 - S z2|_P / |z1 - z2|_P over a T sweep (delta-weighted P on the
    Navier-Stokes branch). Some T must reach CONTRACTION_TARGET, and the
    ratios must fall as T shrinks.
    """
    Ts = _largest_first(T_sweep)
    ratios, shape = [], []
    for T in Ts:
        run = replace(sc, time_grid=TimeGrid(T, sc.time_grid.M))
        z1 = apply_S(LagrangianState.initial(run, u0, sigma0), run, u0, sigma0)
        z2 = perturbed_state(z1, run.model, amplitude)
        s1 = apply_S(z1, run, u0, sigma0)
        s2 = apply_S(z2, run, u0, sigma0)
        delta = run.delta
        if run.navier_stokes and delta is None:
            delta = measure_delta(z1, s1, run.params)
        ratio = _ratio(state_distance(s1, s2, run.params, delta),
                       state_distance(z1, z2, run.params, delta))
        ratios.append(ratio)
        shape.append(max(T ** (1 - run.params.beta), math.sqrt(T)))
        logger.info("contraction: T=%.4g ratio %.4f", T, ratio)

    report = fit_bound("contraction", Ts, ratios, shape)
    if min(ratios) > CONTRACTION_TARGET:
        _fail(report, f"no T in the sweep reaches ratio <= {CONTRACTION_TARGET}")
    for i in range(1, len(Ts)):
        if ratios[i] > ratios[i - 1] * (1 + 1e-9):
            _fail(report, f"ratio rose from {ratios[i - 1]:.4f} to {ratios[i]:.4f} at T={Ts[i]:.4g}")
    return report


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
#  CROSS-VALIDATION
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

@dataclass(frozen=True)
class DifferenceSeries:
    """Per-frame Lagrangian minus Eulerian differences."""

    times: list[float]
    u_linf: list[float]
    u_l2: list[float]
    sigma_linf: list[float]
    sigma_l2: list[float]

    @property
    def max_linf(self) -> float:
        return max(max(self.u_linf), max(self.sigma_linf))

    def rows(self) -> list[dict]:
        return [{"t": t, "u_linf": a, "u_l2": b, "sigma_linf": c, "sigma_l2": d}
                for t, a, b, c, d in zip(self.times, self.u_linf, self.u_l2,
                                         self.sigma_linf, self.sigma_l2)]


def solver_difference(sc: SolverConfig, u0: Field, sigma0: Field,
                      substeps: int = 1) -> tuple[SolveResult, DifferenceSeries]:
    result = picard_solve(sc, u0, sigma0)
    reference = eulerian_reference(sc, u0, sigma0, substeps)
    du = result.u - reference.u
    ds = result.sigma - reference.sigma
    series = DifferenceSeries(
        times=[float(t) for t in sc.time_grid.nodes],
        u_linf=[sup_norm(f) for f in du],
        u_l2=[lp_norm(f, 2) for f in du],
        sigma_linf=[sup_norm(f) for f in ds],
        sigma_l2=[lp_norm(f, 2) for f in ds],
    )
    return result, series


def check_cross_validation(levels: Sequence[tuple[SolverConfig, Field, Field]],
                           tolerance: float = CROSS_VALIDATION_TOL,
                           substeps: int = 1) -> BoundCheckReport:
    """
    Lagrangian against Eulerian at one or more (n, M) levels, coarsest
    first. The finest level must agree within tolerance in L^inf and each
    doubling must shrink the difference by REFINEMENT_RATIO_MIN.
    """
    scales, diffs, series_by_n = [], [], {}
    for sc, u0, sigma0 in levels:
        _, series = solver_difference(sc, u0, sigma0, substeps)
        scales.append(u0.grid.n)
        diffs.append(series.max_linf)
        series_by_n[u0.grid.n] = series
        logger.info("cross-validation n=%d M=%d: max L^inf difference %.3e",
                    u0.grid.n, sc.time_grid.M, diffs[-1])

    report = BoundCheckReport("cross-validation", diffs[-1], fit_exponent(scales, diffs),
                              list(zip(map(float, scales), diffs)), [tolerance] * len(diffs))
    report.details["series"] = series_by_n
    if diffs[-1] > tolerance:
        report.first_violation = (float(scales[-1]), diffs[-1])
        _fail(report, f"finest difference {diffs[-1]:.3e} > {tolerance:.1e}")
    for i in range(1, len(diffs)):
        if diffs[i] > 0 and diffs[i - 1] / diffs[i] < REFINEMENT_RATIO_MIN:
            _fail(report, f"refinement to n={scales[i]} shrank the difference only "
                          f"x{diffs[i - 1] / diffs[i]:.2f}")
    return report


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
#  RUN-CONFIG DRIVERS
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def smooth_displacement(grid: GridSpec, amplitude: float = 0.1) -> Field:
    """(A sin x_2, A cos x_1, 0...)."""
    x = grid.coordinates()
    comps = [amplitude * np.sin(x[1]), amplitude * np.cos(x[0])]
    comps += [np.zeros_like(x[0])] * (grid.d - 2)
    return Field(grid, np.stack(comps), 1)


def stress_family(grid: GridSpec, alpha: float, seed: int) -> list[Field]:
    """Smooth single mode plus a rough C^alpha envelope."""
    return [single_mode_stress(grid, 1.0),
            rough_envelope(grid, 2, alpha, seed, 1.0, symmetric=True)]


def _grid(rc) -> GridSpec:
    return GridSpec(rc.d, rc.n, rc.L)


def _solver_inputs(rc, n: int | None = None, M: int | None = None):
    grid = _grid(rc) if n is None else GridSpec(rc.d, n, rc.L)
    sc = SolverConfig.from_run_config(rc)
    if M is not None:
        sc = replace(sc, time_grid=TimeGrid(rc.T, M))
    u0, sigma0 = build_initial_data(rc, grid, sc.model)
    return sc, u0, sigma0


def _eta_fn(grid: GridSpec) -> Callable[[float], Field]:
    eta0 = smooth_displacement(grid)
    return lambda t: eta0 * (1 + t)


def _run_u_bound(rc) -> BoundCheckReport:
    grid = _grid(rc)
    return check_U_bound(stress_family(grid, rc.alpha, rc.seed), rc.T_sweep,
                         NormParams(rc.alpha, rc.beta, rc.p, rc.stencil), rc.M, rc.nu)


def _run_g_bound(rc) -> BoundCheckReport:
    grid = _grid(rc)
    return check_G_bound(stress_family(grid, rc.alpha, rc.seed), rc.T_sweep,
                         NormParams(rc.alpha, rc.beta, rc.p, rc.stencil), rc.M, rc.nu)


def _run_comm_u(rc) -> BoundCheckReport:
    grid = _grid(rc)
    return check_commU_bound(_eta_fn(grid), stress_family(grid, rc.alpha, rc.seed), rc.T_sweep,
                             NormParams(rc.alpha, rc.beta, rc.p, rc.stencil), rc.M, rc.nu)


def _run_comm_g(rc) -> BoundCheckReport:
    grid = _grid(rc)
    return check_commG_bound(_eta_fn(grid), stress_family(grid, rc.alpha, rc.seed), rc.T_sweep,
                             NormParams(rc.alpha, rc.beta, rc.p, rc.stencil), rc.M, rc.nu)


def _run_steady_comm(rc) -> BoundCheckReport:
    ns = rc.refinements or [rc.n, 2 * rc.n]
    grids = [GridSpec(rc.d, n, rc.L) for n in ns]
    return check_steady_comm_bound(
        smooth_displacement,
        lambda grid: rough_envelope(grid, 2, rc.alpha, rc.seed, 1.0, symmetric=True),
        grids, NormParams(rc.alpha, rc.beta, rc.p, rc.stencil))


def _run_chord_arc(rc) -> BoundCheckReport:
    sc, u0, sigma0 = _solver_inputs(rc)
    return check_chord_arc(picard_solve(sc, u0, sigma0), stencil=rc.stencil)


def _run_stress_growth(rc) -> BoundCheckReport:
    sc, u0, sigma0 = _solver_inputs(rc)
    return check_stress_growth(picard_solve(sc, u0, sigma0), sc)


def _run_lipschitz(rc) -> BoundCheckReport:
    sc, u0, sigma0 = _solver_inputs(rc)
    du0, dsigma0 = _guess_fields(sc.model, u0.grid, 1.0)
    if sc.model.state_rank == 2:
        dsigma0 = rough_envelope(u0.grid, 2, rc.alpha, rc.seed + 7, 1.0, symmetric=True)
    return check_lipschitz_data(sc, u0, sigma0, du0, dsigma0, rc.epsilons)


def _run_uniqueness(rc) -> BoundCheckReport:
    return check_uniqueness(*_solver_inputs(rc))


def _run_contraction(rc) -> BoundCheckReport:
    return check_contraction(*_solver_inputs(rc), rc.T_sweep)


def cross_validation_levels(rc) -> list[tuple[SolverConfig, Field, Field]]:
    """One (config, u0, sigma0) per refinement level; M doubles with n."""
    ns = rc.refinements or [rc.n]
    return [_solver_inputs(rc, n, rc.M * n // ns[0]) for n in ns]


def _run_cross_validation(rc) -> BoundCheckReport:
    return check_cross_validation(cross_validation_levels(rc), substeps=rc.substeps)


CHECKS: dict[str, Callable] = {
    "u-bound": _run_u_bound,
    "g-bound": _run_g_bound,
    "comm-u": _run_comm_u,
    "comm-g": _run_comm_g,
    "steady-comm": _run_steady_comm,
    "chord-arc": _run_chord_arc,
    "stress-growth": _run_stress_growth,
    "lipschitz-data": _run_lipschitz,
    "uniqueness": _run_uniqueness,
    "contraction": _run_contraction,
    "cross-validation": _run_cross_validation,
}


def resolve_checks(name: str) -> list[str]:
    if name == "all":
        return list(CHECKS)
    if name not in CHECKS:
        raise ConfigError(f"unknown check {name!r}; choose from all, {', '.join(CHECKS)}")
    return [name]


def run_checks(names: Sequence[str], rc, workers: int = config.VERIFY_WORKERS) -> list[BoundCheckReport]:
    """Run the named checks in a thread pool; reports come back in name order."""
    for name in names:
        resolve_checks(name)
    logger.info("running %d check(s) with %d worker(s)", len(names), workers)
    if workers <= 1 or len(names) == 1:
        return [CHECKS[name](rc) for name in names]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda name: CHECKS[name](rc), names))
