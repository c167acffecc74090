"""Picard solver, Lagrangian maps and their linearization."""
import numpy as np
import pytest
from scipy.integrate import cumulative_trapezoid

from analysis.norms import NormParams
from analysis.presets import shear_velocity, single_mode_stress, taylor_green
from config import RunConfig
from errors import InvariantViolation, NonConvergenceError, RankMismatchError
from lagrangian.dynamics import eval_F, mhd, oldroyd_b
from lagrangian.flowmap import grad_label
from lagrangian.solver import (LagrangianState, SolverConfig, apply_S, cal_U, cal_V, lag_g,
                               linearized_maps, picard_solve, state_distance)
from spectral.grid import Field, GridSpec, Path, TimeGrid, divergence, gradient
from spectral.operators import op_L

GRID = GridSpec(2, 16)


def _config(model=None, T=0.05, M=4, **kw):
    return SolverConfig(TimeGrid(T, M), model or oldroyd_b(), NormParams(), **kw)


def test_zero_data_converges_in_one_iteration():
    sc = _config()
    result = picard_solve(sc, Field.zeros(GRID, 1), Field.zeros(GRID, 2, True))
    assert result.iterations == 1
    assert result.history[0].distance == 0.0
    assert all(f.max_abs() == 0.0 for f in result.u)


def test_solver_config_validation():
    with pytest.raises(ValueError):
        _config(tol_fp=0.0)
    with pytest.raises(ValueError):
        _config(branch="euler")
    with pytest.raises(ValueError):
        _config(gamma=-1.0)
    sc = SolverConfig.from_run_config(RunConfig(), T=0.2)
    assert sc.time_grid.T == 0.2 and sc.model.kind == "oldroyd-b"


def test_state_must_start_at_identity():
    tg = TimeGrid(0.1, 2)
    x, y = GRID.coordinates()
    chi = Path.constant(tg, Field(GRID, np.stack([0.1 * np.sin(y), 0 * x]), 1))
    with pytest.raises(ValueError):
        LagrangianState(chi, Path.constant(tg, Field.zeros(GRID, 2, True)))


def test_input_validation():
    sc = _config()
    x, y = GRID.coordinates()
    compressible = Field(GRID, np.stack([np.sin(x), 0 * x]), 1)
    with pytest.raises(ValueError):
        picard_solve(sc, compressible, Field.zeros(GRID, 2, True))
    with pytest.raises(RankMismatchError):
        picard_solve(sc, Field.zeros(GRID, 1), Field.zeros(GRID, 1))


def test_heat_flow_without_stress_is_recovered():
    # MHD with b = 0 on the Stokes branch: u(t) = e^{-2 nu t} u0 for Taylor-Green
    sc = _config(mhd(), T=0.1, M=8, interpolation="trig")
    u0 = taylor_green(GRID, 0.1)
    result = picard_solve(sc, u0, Field.zeros(GRID, 1))
    for t, u in zip(sc.time_grid.nodes, result.u):
        assert np.allclose(u.values, np.exp(-2 * sc.nu * t) * u0.values, atol=1e-12)
    assert all(f.max_abs() == 0.0 for f in result.state.tau)


def test_cal_U_at_zero_is_u0():
    sc = _config()
    u0 = taylor_green(GRID, 0.1)
    z = LagrangianState.initial(sc, u0, single_mode_stress(GRID, 0.1))
    assert np.allclose(cal_U(z, sc, u0, 0.0).values, u0.values, atol=1e-14)
    with pytest.raises(ValueError):
        cal_U(z, sc, u0, 0.01)


def test_oldroyd_b_small_data_contracts():
    sc = _config(T=0.05, M=4)
    result = picard_solve(sc, taylor_green(GRID, 0.1), single_mode_stress(GRID, 0.1))
    assert result.history[-1].distance < sc.tol_fp
    ratios = [h.ratio for h in result.history[1:]]
    assert ratios and max(ratios) <= 0.5
    assert result.state.chi[0].max_abs() == 0.0
    assert np.allclose(result.state.tau[0].values, single_mode_stress(GRID, 0.1).values)


def test_navier_stokes_branch_converges_and_carries_v():
    sc = _config(T=0.05, M=4, branch="navier-stokes")
    result = picard_solve(sc, taylor_green(GRID, 0.1), single_mode_stress(GRID, 0.1))
    assert result.state.v is not None
    assert result.delta is not None and 0 < result.delta <= 0.25
    # v is the velocity it reproduces
    for v, w in zip(result.state.v, result.velocity):
        assert np.allclose(v.values, w.values, atol=1e-6)


@pytest.mark.parametrize("branch", ["stokes", "navier-stokes"])
def test_reconstructed_velocity_is_divergence_free(branch):
    sc = _config(T=0.05, M=4, branch=branch, interpolation="trig")
    result = picard_solve(sc, taylor_green(GRID, 0.1), single_mode_stress(GRID, 0.1))
    for u in result.u:
        assert divergence(u).max_abs() < 1e-10


@pytest.mark.parametrize("branch", ["stokes", "navier-stokes"])
def test_label_gradient_of_velocity_is_g_times_grad_X(branch):
    sc = _config(T=0.05, M=4, branch=branch, interpolation="trig")
    u0, s0 = taylor_green(LIN_GRID, 0.1), single_mode_stress(LIN_GRID, 0.1)
    result = picard_solve(sc, u0, s0)
    for w, g, X in zip(result.velocity, result.g, result.state.flowmaps()):
        chain = np.einsum("ik...,kj...->ij...", g.values, grad_label(X).values)
        assert np.allclose(gradient(w).values, chain, atol=1e-9)


def test_first_iterate_follows_single_mode_duhamel_flow():
    # u0 = 0, X = id, tau = A sin(x_1): U(t) = (0, A_21 (1 - e^{-nu t}) / nu cos x_1)
    sc = _config(T=0.1, M=8, interpolation="trig")
    s0 = single_mode_stress(GRID, 0.2)
    z1 = apply_S(LagrangianState.initial(sc, Field.zeros(GRID, 1), s0), sc,
                 Field.zeros(GRID, 1), s0)
    x, _ = GRID.coordinates()
    nu, a21 = sc.nu, 0.5 * 0.2
    nodes = sc.time_grid.nodes
    speed = a21 * (1 - np.exp(-nu * nodes)) / nu
    displacement = cumulative_trapezoid(speed, nodes, initial=0)
    exact = a21 * (nodes - (1 - np.exp(-nu * nodes)) / nu) / nu
    for m, chi in enumerate(z1.chi):
        assert np.allclose(chi.values[0], 0.0, atol=1e-14)
        assert np.allclose(chi.values[1], displacement[m] * np.cos(x), atol=1e-13)
    assert np.allclose(displacement, exact, atol=1e-6)


def test_non_convergence_carries_history():
    sc = _config(tol_fp=1e-30, max_iter=2)
    with pytest.raises(NonConvergenceError) as info:
        picard_solve(sc, taylor_green(GRID, 0.1), single_mode_stress(GRID, 0.1))
    assert len(info.value.history) == 2
    assert info.value.exit_status == 3


def test_large_data_leaves_invariant_set():
    sc = _config(T=0.5, M=4)
    with pytest.raises(InvariantViolation):
        picard_solve(sc, taylor_green(GRID, 5.0), single_mode_stress(GRID, 0.1))


def test_gamma_bound_is_enforced():
    sc = _config(gamma=1e-6)
    with pytest.raises(InvariantViolation):
        picard_solve(sc, taylor_green(GRID, 0.1), single_mode_stress(GRID, 0.1))


def test_state_distance_is_symmetric_and_zero_on_diagonal():
    sc = _config()
    u0, s0 = taylor_green(GRID, 0.1), single_mode_stress(GRID, 0.1)
    z0 = LagrangianState.initial(sc, u0, s0)
    z1 = apply_S(z0, sc, u0, s0)
    assert state_distance(z0, z0, sc.params) == 0.0
    assert np.isclose(state_distance(z0, z1, sc.params), state_distance(z1, z0, sc.params))


# ── Linearization ──────────────────────────────────────────────────

LIN_GRID = GridSpec(2, 32)


def _shifted(z, direction, eps):
    v = None
    if z.v is not None:
        v = z.v + direction.v * eps
    return LagrangianState(z.chi + direction.chi * eps, z.tau + direction.tau * eps, v)


def _direction(z, model):
    tg = z.time_grid
    x, y = LIN_GRID.coordinates()
    phi = Field(LIN_GRID, np.stack([0.05 * np.sin(y), 0.05 * np.cos(x)]), 1)
    chi = Path(tg, tuple(phi * t for t in tg.nodes))
    if model.state_rank == 2:
        psi = single_mode_stress(LIN_GRID, 0.05)
    else:
        psi = shear_velocity(LIN_GRID, 0.05)
    tau = Path.constant(tg, psi)
    v = Path.constant(tg, phi) if z.v is not None else None
    return LagrangianState(chi, tau, v)


def _rel_close(analytic, fd, rtol=1e-3):
    scale = max(np.max(np.abs(fd)), 1e-12)
    return np.max(np.abs(analytic - fd)) <= rtol * scale


@pytest.mark.parametrize("model,branch", [
    (oldroyd_b(1.0, 1.0), "stokes"),
    (mhd(), "stokes"),
    (oldroyd_b(1.0, 1.0), "navier-stokes"),
], ids=["oldroyd-b", "mhd", "oldroyd-b-ns"])
def test_linearized_maps_match_central_differences(model, branch):
    sc = _config(model, T=0.05, M=4, branch=branch, interpolation="trig")
    u0 = taylor_green(LIN_GRID, 0.1)
    s0 = single_mode_stress(LIN_GRID, 0.1) if model.state_rank == 2 \
        else shear_velocity(LIN_GRID, 0.1)
    z = apply_S(LagrangianState.initial(sc, u0, s0), sc, u0, s0)
    direction = _direction(z, model)
    du0 = taylor_green(LIN_GRID, 0.05)
    t = sc.time_grid.T
    m = sc.time_grid.M
    eps = 1e-4

    lin = linearized_maps(z, sc, u0, direction, t, du0=du0)
    plus, minus = _shifted(z, direction, eps), _shifted(z, direction, -eps)
    u_plus, u_minus = u0 + du0 * eps, u0 - du0 * eps

    def central(fn):
        return (fn(plus, u_plus) - fn(minus, u_minus)) / (2 * eps)

    dU = central(lambda s, u: cal_U(s, sc, u, t).values)
    assert _rel_close(lin.dU.values, dU)

    dg = central(lambda s, u: lag_g(s, sc, u, t).values)
    assert _rel_close(lin.dg.values, dg)

    dT = central(lambda s, u: eval_F(model, lag_g(s, sc, u, t), s.tau[m]).values)
    assert _rel_close(lin.dT.values, dT)

    def grad_velocity(s, u):
        g = lag_g(s, sc, u, t).values
        return np.einsum("ik...,kj...->ij...", g, grad_label(s.flowmaps()[m]).values)
    assert _rel_close(lin.grad_dU.values, central(grad_velocity))

    if branch == "navier-stokes":
        dV = central(lambda s, u: cal_V(s, sc, u, t).values)
        assert _rel_close(lin.dV.values, dV)


def test_linearized_velocity_at_time_zero_is_data_perturbation():
    sc = _config(T=0.05, M=4, interpolation="trig")
    u0 = taylor_green(LIN_GRID, 0.1)
    s0 = single_mode_stress(LIN_GRID, 0.1)
    z = apply_S(LagrangianState.initial(sc, u0, s0), sc, u0, s0)
    du0 = taylor_green(LIN_GRID, 0.05)
    lin = linearized_maps(z, sc, u0, _direction(z, sc.model), 0.0, du0=du0)
    assert np.allclose(lin.dU.values, du0.values, atol=1e-14)


def test_linearization_checks_initial_stress_direction():
    sc = _config(T=0.05, M=4)
    u0 = taylor_green(LIN_GRID, 0.1)
    s0 = single_mode_stress(LIN_GRID, 0.1)
    z = LagrangianState.initial(sc, u0, s0)
    direction = _direction(z, sc.model)
    with pytest.raises(ValueError):
        linearized_maps(z, sc, u0, direction, 0.05, dsigma0=Field.zeros(LIN_GRID, 2, True))
