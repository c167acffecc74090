"""Constitutive laws, their derivatives and the stress integrator."""
import numpy as np
import pytest

from errors import GrowthError, RankMismatchError
from lagrangian.dynamics import (apriori_bound, build_model, custom, eval_DF, eval_F,
                                 integrate_tau, mhd, oldroyd_b)
from spectral.grid import Field, GridSpec, Path, TimeGrid

TINY = GridSpec(2, 8)


def _constant(grid, matrix, rank=2, symmetric=False):
    values = np.asarray(matrix, dtype=float).reshape(np.shape(matrix) + (1,) * grid.d)
    return Field(grid, np.broadcast_to(values, np.shape(matrix) + grid.shape), rank, symmetric)


def test_oldroyd_b_formula():
    model = oldroyd_b(relaxation_rate=2.0, coupling=0.5)
    g = np.array([[0.0, 1.0], [0.0, 0.0]])
    tau = np.eye(2)
    # g tau + tau g^T - r tau + c (g + g^T)
    expected = g + g.T - 2.0 * np.eye(2) + 0.5 * (g + g.T)
    assert np.allclose(eval_F(model, g, tau), expected)


def test_mhd_formula():
    g = np.array([[1.0, 2.0], [3.0, 4.0]])
    b = np.array([1.0, -1.0])
    assert np.allclose(eval_F(mhd(), g, b), [-1.0, -1.0])


@pytest.mark.parametrize("model", [oldroyd_b(1.5, 0.7), mhd()], ids=["oldroyd-b", "mhd"])
def test_derivatives_match_central_differences(model):
    rng = np.random.default_rng(0)
    shape = (2,) * model.state_rank + (5,)
    g, dg = rng.normal(size=(2, 2, 5)), rng.normal(size=(2, 2, 5))
    tau, dtau = rng.normal(size=shape), rng.normal(size=shape)
    eps = 1e-6
    fd = (eval_F(model, g + eps * dg, tau + eps * dtau)
          - eval_F(model, g - eps * dg, tau - eps * dtau)) / (2 * eps)
    assert np.allclose(eval_DF(model, g, tau, dg, dtau), fd, rtol=1e-6, atol=1e-8)


def test_mhd_stress_derivative(grid):
    model = mhd()
    x, y = grid.coordinates()
    b = Field(grid, np.stack([np.sin(y), np.cos(x)]), 1)
    db = Field(grid, np.stack([np.cos(x), np.zeros_like(x)]), 1)
    eps = 1e-6
    fd = (model.stress(b + db * eps) - model.stress(b - db * eps)) / (2 * eps)
    assert np.allclose(model.dstress(b, db).values, fd.values, atol=1e-8)


def test_shape_mismatch_is_rejected():
    with pytest.raises(RankMismatchError):
        eval_F(oldroyd_b(), np.zeros((2, 2, 3)), np.zeros((2, 3)))
    with pytest.raises(RankMismatchError):
        eval_F(mhd(), np.zeros((2, 3)), np.zeros((2, 3)))


def test_fields_come_back_symmetric(grid):
    x, y = grid.coordinates()
    g = Field(grid, np.stack([np.stack([np.sin(x), np.cos(y)]),
                              np.stack([np.zeros_like(x), -np.sin(x)])]), 2)
    tau = _constant(grid, np.eye(2), symmetric=True)
    out = eval_F(oldroyd_b(), g, tau)
    assert out.symmetric


def test_build_model_and_custom():
    assert build_model("mhd").kind == "mhd"
    assert build_model("oldroyd-b", 2.0).params["relaxation_rate"] == 2.0
    with pytest.raises(ValueError):
        build_model("giesekus")
    with pytest.raises(ValueError):
        custom(lambda g, t: t, lambda g, t, dg: 0 * t, lambda g, t, dt: dt, state_rank=1)


def test_relaxation_without_flow():
    tg = TimeGrid(1.0, 20)
    tau0 = _constant(TINY, [[1.0, 0.5], [0.5, 2.0]], symmetric=True)
    path = integrate_tau(oldroyd_b(relaxation_rate=1.0, coupling=1.0),
                         Path.constant(tg, Field.zeros(TINY, 2)), tau0)
    assert np.allclose(path[-1].values, np.exp(-1.0) * tau0.values, rtol=1e-5)
    assert path[-1].symmetric


def test_rk4_is_fourth_order():
    model = oldroyd_b(relaxation_rate=1.0, coupling=1.0)
    g = _constant(TINY, [[0.0, 2.0], [-0.5, 0.0]])
    tau0 = _constant(TINY, np.eye(2), symmetric=True)

    def final(M):
        return integrate_tau(model, Path.constant(TimeGrid(1.0, M), g), tau0)[-1].values

    reference = final(512)
    e4 = np.max(np.abs(final(4) - reference))
    e8 = np.max(np.abs(final(8) - reference))
    assert 8 <= e4 / e8 <= 32


def test_mhd_field_follows_linear_flow():
    # b' = g b with constant g = [[0, a], [0, 0]] gives b(t) = (b1 + a t b2, b2)
    a = 0.8
    tg = TimeGrid(1.0, 8)
    g = _constant(TINY, [[0.0, a], [0.0, 0.0]])
    b0 = _constant(TINY, [0.3, 1.0], rank=1)
    path = integrate_tau(mhd(), Path.constant(tg, g), b0)
    assert np.allclose(path[-1].values[0], 0.3 + a, atol=1e-12)
    assert np.allclose(path[-1].values[1], 1.0, atol=1e-12)


def test_blow_up_raises_growth_error():
    tg = TimeGrid(10.0, 1)
    g = _constant(TINY, [[1e150, 0.0], [0.0, 1e150]])
    tau0 = _constant(TINY, np.eye(2), symmetric=True)
    with np.errstate(all="ignore"), pytest.raises(GrowthError):
        integrate_tau(oldroyd_b(), Path.constant(tg, g), tau0)


def test_integrate_tau_checks_ranks():
    tg = TimeGrid(1.0, 2)
    with pytest.raises(RankMismatchError):
        integrate_tau(mhd(), Path.constant(tg, Field.zeros(TINY, 2)), Field.zeros(TINY, 2))


@pytest.mark.parametrize("model", [oldroyd_b(1.0, 1.0), mhd()], ids=["oldroyd-b", "mhd"])
def test_apriori_bound_dominates_stress(model):
    tg = TimeGrid(0.5, 10)
    g = _constant(TINY, [[0.3, 1.0], [-0.4, -0.3]])
    if model.state_rank == 2:
        tau0 = _constant(TINY, [[1.0, 0.2], [0.2, 0.5]], symmetric=True)
    else:
        tau0 = _constant(TINY, [0.6, -0.8], rank=1)
    path = integrate_tau(model, Path.constant(tg, g), tau0)
    g_sup = float(np.sqrt(np.sum(g.values[..., 0, 0] ** 2)))
    k0 = float(np.sqrt(np.sum(tau0.values[..., 0, 0] ** 2)))
    K = apriori_bound(model, g_sup, k0, tg)
    measured = [float(np.sqrt(np.sum(f.values[..., 0, 0] ** 2))) for f in path]
    assert np.all(np.array(measured) <= K * (1 + 1e-9))
    assert np.isclose(K[0], k0)
