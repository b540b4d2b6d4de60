"""Per-mode boundary value solver and the assembled linear system."""

import numpy as np
import pytest

from plateflow.fields import divergence, zeros_like_field
from plateflow.grid import TorusGrid
from plateflow.lift import IncompatibleDataError
from plateflow.modes import (
    SolverParams,
    energy_estimate_check,
    linear_residuals,
    mode_residuals,
    plate_symbol_damped,
    random_test_pair,
    solve_linear_full,
    solve_oscillatory_mode,
    solve_steady_mode,
    weak_form_B,
    weak_form_rhs,
)

from conftest import bubble_field, poly_field, poly_plate

TOL_MODE = 1e-10
TOL_WEAK = 1e-9

GRID = TorusGrid(5, 5, 16)


def _mode_data(grid, seed, with_g=False):
    rng = np.random.default_rng(seed)
    z = grid.nodes
    f_hat = np.stack([
        np.polynomial.polynomial.polyval(
            z, rng.standard_normal(4) + 1j * rng.standard_normal(4))
        for _ in range(3)
    ])
    h_hat = complex(rng.standard_normal() + 1j * rng.standard_normal())
    g_hat = None
    if with_g:
        bubble = (z * (1.0 - z)) ** 2
        g_hat = bubble * np.polynomial.polynomial.polyval(
            z, rng.standard_normal(3) + 1j * rng.standard_normal(3))
    return f_hat, g_hat, h_hat


def test_plate_symbol_exact_values():
    assert plate_symbol_damped(1, (1, 0)) == pytest.approx(1j)
    assert plate_symbol_damped(2, (1, 1)) == pytest.approx(4j)
    assert plate_symbol_damped(0, (1, 0)) == pytest.approx(1.0)
    # damping scales with mu_s in the imaginary part only
    a = plate_symbol_damped(3, (2, 1), mu_s=2.0)
    b = plate_symbol_damped(3, (2, 1), mu_s=1.0)
    assert a.real == b.real and a.imag == 2.0 * b.imag


@pytest.mark.parametrize("k,xi", [(1, (1, 0)), (2, (1, 1)), (3, (0, 2)),
                                  (-1, (2, 1)), (1, (0, 0))])
def test_oscillatory_mode_residuals(k, xi):
    f_hat, g_hat, h_hat = _mode_data(GRID, 50 + k + 7 * sum(xi), with_g=True)
    if xi == (0, 0):
        g_hat = None        # the axis mode carries its own solvability rule
    sol = solve_oscillatory_mode(GRID, k, xi, f_hat, g_hat, h_hat)
    res = mode_residuals(sol, f_hat, g_hat if g_hat is not None else None,
                         h_hat)
    scale = max(1.0, float(np.max(np.abs(f_hat))))
    for name, val in res.items():
        assert val < TOL_MODE * scale, (name, val)


def test_steady_mode_residuals():
    f_hat, g_hat, h_hat = _mode_data(GRID, 60, with_g=True)
    sol = solve_steady_mode(GRID, (1, 1), f_hat, g_hat, h_hat)
    res = mode_residuals(sol, f_hat, g_hat, h_hat)
    assert max(res.values()) < TOL_MODE * 10.0


def test_k_zero_must_use_steady_entry():
    with pytest.raises(ValueError):
        solve_oscillatory_mode(GRID, 0, (1, 0), *_mode_data(GRID, 61)[:1])


def test_test_pair_is_admissible():
    rng = np.random.default_rng(3)
    for k, xi in ((1, (1, 0)), (2, (1, 1)), (1, (0, 0))):
        pair = random_test_pair(GRID, k, xi, rng)
        m = GRID.n_z
        assert np.max(np.abs(pair.w[:, m])) < 1e-12          # top face
        assert abs(pair.w[0, 0]) < 1e-12 and abs(pair.w[1, 0]) < 1e-12
        kp = 2.0 * np.pi / GRID.t_period * k
        assert abs(pair.w[2, 0] + 1j * kp * pair.zeta) < 1e-12
        x1, x2 = (2.0 * np.pi / GRID.l_period * c for c in xi)
        div = 1j * x1 * pair.w[0] + 1j * x2 * pair.w[1] + GRID.d1 @ pair.w[2]
        assert np.max(np.abs(div)) < 1e-10


@pytest.mark.parametrize("k,xi", [(1, (1, 0)), (2, (1, 1)), (3, (0, 2))])
def test_weak_identity_on_solver_output(k, xi):
    f_hat, _, h_hat = _mode_data(GRID, 70 + k)
    sol = solve_oscillatory_mode(GRID, k, xi, f_hat, None, h_hat)
    rng = np.random.default_rng(k)
    for _ in range(3):
        pair = random_test_pair(GRID, k, xi, rng)
        lhs = weak_form_B(sol.u, sol.eta, pair)
        rhs = weak_form_rhs(f_hat, h_hat, pair)
        assert abs(lhs - rhs) / (abs(lhs) + abs(rhs)) < TOL_WEAK


def test_energy_check_conventions():
    f = poly_field(GRID, 80, components=3)
    h = poly_plate(GRID, 81)
    sol = solve_linear_full(f, None, h, grid=GRID, compute_ratio=False)
    c = energy_estimate_check(sol.u, sol.eta, f, h, 1)
    assert np.isfinite(c) and c > 0.0
    zero = zeros_like_field(GRID, components=3)
    zh = zeros_like_field(GRID, plate=True)
    zs = solve_linear_full(zero, None, zh, grid=GRID, compute_ratio=False)
    assert energy_estimate_check(zs.u, zs.eta, zero, zh, 1) == 0.0
    with pytest.raises(ValueError):
        energy_estimate_check(sol.u, sol.eta, f, h, 0)
    with pytest.raises(ValueError):
        energy_estimate_check(sol.u, sol.eta, f, h, 99)


def test_full_solve_zero_data_is_zero():
    sol = solve_linear_full(grid=GRID)
    assert np.max(np.abs(sol.u.coeffs)) == 0.0
    assert np.max(np.abs(sol.p.coeffs)) == 0.0
    assert np.max(np.abs(sol.eta.coeffs)) == 0.0
    assert sol.norm_ratio is None          # no data norm to divide by
    assert max(sol.residuals.values()) == 0.0


@pytest.mark.parametrize("route", ["lift", "direct"])
def test_full_solve_residuals_both_routes(route):
    f = poly_field(GRID, 82, components=3)
    h = poly_plate(GRID, 83)
    g = divergence(bubble_field(GRID, 84))
    sol = solve_linear_full(f, g, h, grid=GRID, route=route)
    scale = max(1.0, np.max(np.abs(f.coeffs)))
    for name, val in sol.residuals.items():
        assert val < 1e-9 * scale, (name, val)
    assert sol.norm_ratio is not None and sol.norm_ratio > 0.0


def test_unknown_route_rejected():
    with pytest.raises(ValueError):
        solve_linear_full(poly_field(GRID, 85), grid=GRID, route="middle")


def test_direct_route_rejects_incompatible_datum():
    bad = zeros_like_field(GRID)
    bad.coeffs[2, 2, 2, :] = 1.0
    with pytest.raises(IncompatibleDataError):
        solve_linear_full(None, bad, None, grid=GRID, route="direct")


def test_grid_mismatch_between_data_fields():
    other = TorusGrid(5, 5, 8)
    with pytest.raises(ValueError):
        solve_linear_full(poly_field(GRID, 86), None, poly_plate(other, 86),
                          grid=GRID)


def test_single_mode_data_stays_localized():
    f = zeros_like_field(GRID, components=3)
    prof = GRID.nodes * (1.0 - GRID.nodes)
    f.coeffs[3, 3, 2, :, 0] = prof
    f.coeffs[1, 1, 2, :, 0] = prof          # conjugate partner
    sol = solve_linear_full(f, None, None, grid=GRID, compute_ratio=False)
    mask = np.zeros((5, 5, 5), bool)
    mask[3, 3, 2] = mask[1, 1, 2] = True
    assert np.max(np.abs(sol.u.coeffs[~mask])) == 0.0
    assert np.max(np.abs(sol.p.coeffs[~mask])) == 0.0
    res = linear_residuals(sol.u, sol.p, sol.eta, f, None, None)
    assert max(res.values()) < TOL_MODE


def test_threaded_solve_matches_serial():
    f = poly_field(GRID, 87, components=3)
    h = poly_plate(GRID, 88)
    a = solve_linear_full(f, None, h, grid=GRID, threads=1)
    b = solve_linear_full(f, None, h, grid=GRID, threads=4)
    assert np.array_equal(a.u.coeffs, b.u.coeffs)
    assert np.array_equal(a.p.coeffs, b.p.coeffs)
    assert np.array_equal(a.eta.coeffs, b.eta.coeffs)


def test_solver_params_scale_viscosity():
    f = poly_field(GRID, 89, components=3)
    params = SolverParams(mu_f=2.5, mu_s=0.7)
    sol = solve_linear_full(f, None, None, grid=GRID, params=params)
    res = linear_residuals(sol.u, sol.p, sol.eta, f, None, None, params)
    assert max(res.values()) < 1e-9
    # residuals against the default parameters must NOT vanish
    res_wrong = linear_residuals(sol.u, sol.p, sol.eta, f, None, None)
    assert max(res_wrong.values()) > 1e-3
