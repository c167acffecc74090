"""Multipliers, heat semigroup, Duhamel operators and commutators."""
import numpy as np
import pytest
from hypothesis import given, strategies as st

from analysis.presets import rough_envelope, single_mode_stress
from errors import RankMismatchError
from spectral.grid import Field, GridSpec, Path, TimeGrid, divergence, gradient
from spectral.operators import (Multiplier, commutator_G, commutator_G_path, commutator_U,
                                commutator_U_path, commutator_steady, cz_apply, heat_semigroup,
                                leray_H, op_G, op_G_path, op_G_steady, op_L, op_U, op_U_path,
                                riesz, riesz_multiplier, steady_limit)


def _sine_stress(grid, A=1.0):
    return single_mode_stress(grid, A)


# ── Multipliers ────────────────────────────────────────────────────

def test_riesz_of_sine_is_cosine(grid):
    x, y = grid.coordinates()
    f = Field(grid, np.sin(x))
    assert np.allclose(riesz(f, 0).values, np.cos(x), atol=1e-12)
    assert riesz(f, 1).max_abs() < 1e-12


def test_riesz_squares_sum_to_minus_identity(grid):
    f = rough_envelope(grid, 0, 0.5, seed=3)
    total = riesz(riesz(f, 0), 0) + riesz(riesz(f, 1), 1)
    assert np.allclose(total.values, -f.mean_free().values, atol=1e-10)


def test_riesz_kills_constants(grid):
    assert riesz(Field(grid, np.full(grid.shape, 2.0)), 0).max_abs() < 1e-14


def test_multiplier_rejects_inhomogeneous_symbol():
    with pytest.raises(ValueError):
        Multiplier(lambda k: np.sqrt(np.sum(k ** 2, axis=0)), "abs")


def test_scalar_composition_acts_componentwise(grid):
    K = riesz_multiplier(0) @ riesz_multiplier(1)
    x, y = grid.coordinates()
    f = Field(grid, np.stack([np.sin(x + y), np.cos(x - y)]), 1)
    got = cz_apply(K, f)
    expected = riesz(riesz(f.component(0), 1), 0)
    assert np.allclose(got.values[0], expected.values, atol=1e-12)


def test_leray_annihilates_gradients(grid):
    phi = rough_envelope(grid, 0, 1.5, seed=1)
    assert leray_H(gradient(phi)).max_abs() < 1e-12


def test_leray_fixes_divergence_free_fields_and_is_idempotent(grid):
    v = rough_envelope(grid, 1, 0.5, seed=2)
    Hv = leray_H(v)
    assert divergence(Hv).max_abs() < 1e-12
    assert np.allclose(leray_H(Hv).values, Hv.values, atol=1e-12)


def test_leray_needs_vectors(grid):
    with pytest.raises(RankMismatchError):
        leray_H(Field.zeros(grid))


# ── Heat semigroup ─────────────────────────────────────────────────

def test_heat_decays_single_mode(grid):
    x, y = grid.coordinates()
    f = Field(grid, np.sin(x) * np.sin(2 * y))
    got = heat_semigroup(f, 0.3, nu=0.5)
    assert np.allclose(got.values, np.exp(-0.5 * 5 * 0.3) * f.values, atol=1e-12)
    assert op_L(f, 0.0) is f
    with pytest.raises(ValueError):
        heat_semigroup(f, -1.0)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_heat_semigroup_property(s, t):
    g = GridSpec(2, 16)
    f = rough_envelope(g, 0, 0.5, seed=4)
    lhs = heat_semigroup(heat_semigroup(f, s), t)
    rhs = heat_semigroup(f, s + t)
    assert np.allclose(lhs.values, rhs.values, atol=1e-12)


# ── Duhamel operators ──────────────────────────────────────────────

def test_op_U_single_mode_closed_form(grid):
    nu, A, T = 0.7, 0.3, 0.4
    tg = TimeGrid(T, 8)
    sigma = Path.constant(tg, _sine_stress(grid, A))
    x, _ = grid.coordinates()
    for t in (0.1, 0.25, 0.4):
        w = (1 - np.exp(-nu * t)) / nu
        u = op_U(sigma, t, nu)
        assert np.allclose(u.values[0], 0.0, atol=1e-12)
        assert np.allclose(u.values[1], 0.5 * A * w * np.cos(x), atol=1e-8)
        g = op_G(sigma, t, nu)
        assert np.allclose(g.values[1, 0], -0.5 * A * w * np.sin(x), atol=1e-8)


def test_op_U_vanishes_at_zero_and_is_divergence_free(grid):
    tg = TimeGrid(0.2, 4)
    sigma = Path.from_function(
        tg, lambda t: rough_envelope(grid, 2, 0.5, seed=5, symmetric=True) * (1 + t))
    assert op_U(sigma, 0.0).max_abs() == 0.0
    for u in op_U_path(sigma):
        assert divergence(u).max_abs() < 1e-12


def test_path_operators_match_pointwise_ones(grid):
    tg = TimeGrid(0.2, 4)
    sigma = Path.from_function(tg, lambda t: _sine_stress(grid) * np.cos(3 * t))
    for m, t in enumerate(tg.nodes):
        assert np.allclose(op_U_path(sigma)[m].values, op_U(sigma, t).values, atol=1e-13)
        assert np.allclose(op_G_path(sigma)[m].values, op_G(sigma, t).values, atol=1e-13)


def test_op_U_between_nodes_is_continuous(grid):
    tg = TimeGrid(0.2, 4)
    sigma = Path.constant(tg, _sine_stress(grid))
    a = op_U(sigma, 0.1)
    b = op_U(sigma, 0.1 + 1e-9)
    assert np.allclose(a.values, b.values, atol=1e-8)


def test_op_G_matches_steady_form_for_constant_stress(grid):
    tg = TimeGrid(0.3, 6)
    s = rough_envelope(grid, 2, 0.5, seed=6, symmetric=True)
    got = op_G(Path.constant(tg, s), 0.3)
    assert np.allclose(got.values, op_G_steady(s, 0.3).values, atol=1e-12)


def test_op_G_time_quadrature_is_second_order(grid):
    nu, omega, T, A = 1.0, 5.0, 1.0, 1.0
    x, _ = grid.coordinates()
    exact = (nu * np.cos(omega * T) + omega * np.sin(omega * T) - nu * np.exp(-nu * T)) \
        / (nu ** 2 + omega ** 2)
    errors = []
    for M in (16, 32, 64):
        tg = TimeGrid(T, M)
        sigma = Path.from_function(tg, lambda t: _sine_stress(grid, A) * np.cos(omega * t))
        g = op_G(sigma, T, nu)
        errors.append(np.max(np.abs(g.values[1, 0] + 0.5 * A * exact * np.sin(x))))
    for coarse, fine in zip(errors, errors[1:]):
        assert 3.5 <= coarse / fine <= 4.5


def test_steady_form_saturates(grid):
    s = rough_envelope(grid, 2, 0.5, seed=7, symmetric=True)
    late = op_G_steady(s, 60.0)
    assert np.allclose(late.values, steady_limit(s).values, atol=1e-10)
    assert op_G_steady(s, 0.0).max_abs() == 0.0


def test_duhamel_operators_need_rank_two(grid):
    tg = TimeGrid(0.1, 2)
    with pytest.raises(RankMismatchError):
        op_U(Path.constant(tg, Field.zeros(grid, 1)), 0.1)


# ── Commutators ────────────────────────────────────────────────────

def test_constant_eta_commutes(grid):
    eta = Field(grid, np.stack([np.full(grid.shape, 0.3), np.full(grid.shape, -0.2)]), 1)
    s = rough_envelope(grid, 2, 0.5, seed=8, symmetric=True)
    K = riesz_multiplier(0) @ riesz_multiplier(1)
    assert commutator_steady(eta, K, s).max_abs() < 1e-10

    tg = TimeGrid(0.1, 4)
    eta_path = Path.constant(tg, eta)
    sigma = Path.constant(tg, s)
    assert commutator_U(eta_path, sigma, 0.1).max_abs() < 1e-10
    assert commutator_G(eta_path, sigma, 0.1).max_abs() < 1e-10


def test_commutator_paths_match_pointwise(grid):
    tg = TimeGrid(0.1, 4)
    x, y = grid.coordinates()
    eta0 = Field(grid, np.stack([0.1 * np.sin(y), 0.1 * np.cos(x)]), 1)
    eta = Path.from_function(tg, lambda t: eta0 * (1 + t))
    sigma = Path.constant(tg, _sine_stress(grid))
    cu = commutator_U_path(eta, sigma)
    cg = commutator_G_path(eta, sigma)
    for m, t in enumerate(tg.nodes):
        assert np.allclose(cu[m].values, commutator_U(eta, sigma, t).values, atol=1e-12)
        assert np.allclose(cg[m].values, commutator_G(eta, sigma, t).values, atol=1e-12)


def test_zero_stress_gives_zero_commutator(grid):
    tg = TimeGrid(0.1, 2)
    x, y = grid.coordinates()
    eta = Path.constant(tg, Field(grid, np.stack([np.sin(y), np.cos(x)]), 1))
    assert commutator_U(eta, Path.constant(tg, Field.zeros(grid, 2, True)), 0.1).max_abs() == 0.0


def _on_coarse(fine: Field, coarse: GridSpec) -> np.ndarray:
    step = fine.grid.n // coarse.n
    index = (Ellipsis,) + (slice(None, None, step),) * coarse.d
    return fine.values[index]


@pytest.mark.parametrize("which", ["steady", "U", "G"])
def test_commutators_agree_under_refinement(which):
    tg = TimeGrid(0.1, 4)
    values = {}
    for n in (32, 64):
        g = GridSpec(2, n)
        x, y = g.coordinates()
        eta0 = Field(g, np.stack([0.1 * np.sin(y), 0.1 * np.cos(x)]), 1)
        f = _sine_stress(g)
        if which == "steady":
            values[n] = commutator_steady(eta0, riesz_multiplier(0) @ riesz_multiplier(1), f)
        else:
            eta = Path.from_function(tg, lambda t: eta0 * (1 + t))
            comm = commutator_U if which == "U" else commutator_G
            values[n] = comm(eta, Path.constant(tg, f), 0.1)
    assert values[32].max_abs() > 1e-3
    assert np.allclose(_on_coarse(values[64], GridSpec(2, 32)), values[32].values, atol=1e-10)
