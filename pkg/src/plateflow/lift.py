"""Right inverse of the divergence with homogeneous boundary values.

Mode by mode the lift is w' = i xi' phi, w3 = psi.  For xi' != 0 the layer
profile psi solves a Poisson-type two-point problem whose four boundary rows
(psi = 0 and psi' = g at both faces) are absorbed by two polynomial closure
columns; phi := (psi' - g)/|xi'|^2 then vanishes at the faces and the nodal
divergence equals g identically.  For xi' = 0 the lateral part is zero and
w3 is the antiderivative of g from the plate face, which requires the layer
mean of g to vanish.

The construction acts per time mode with no k dependence, so it commutes
exactly with time differentiation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .fields import SpectralField
from .grid import TorusGrid
from .norms import NormSpec, negative_norm, sobolev_norm


class IncompatibleDataError(ValueError):
    """Raised when a mean condition required by the problem fails."""


@lru_cache(maxsize=8)
def _antiderivative_matrix(grid: TorusGrid) -> np.ndarray:
    """Solve rows: value at node 0, then derivative match at nodes 0..N-1."""
    n = grid.n_z
    a = np.zeros((n + 1, n + 1))
    a[0, 0] = 1.0
    a[1:] = grid.d1[:n]
    return np.linalg.inv(a)


def antiderivative_from_plate(grid: TorusGrid, values: np.ndarray) -> np.ndarray:
    """Profile F with F(0) = 0 and F' = values, exact at nodes 0..N-1.

    `values` may carry leading batch axes; the node axis is last.
    """
    rhs = np.concatenate(
        [np.zeros(values.shape[:-1] + (1,), values.dtype), values[..., : grid.n_z]],
        axis=-1,
    )
    return rhs @ _antiderivative_matrix(grid).T


def _closure_solve(grid: TorusGrid, xi_sq: float,
                   rhs_profiles: np.ndarray) -> np.ndarray:
    """psi profiles for a batch of g profiles sharing one |xi'|^2 != 0.

    The interior rows impose (psi'' - |xi'|^2 psi) = g' up to an affine
    closure c0 + c1 x3 whose two coefficients free up the two extra boundary
    rows; rhs_profiles has shape (batch, N_z + 1).
    """
    n = grid.n_z
    d1, d2 = grid.d1, grid.dmat(2)
    interior = np.arange(1, n)
    a = np.zeros((n + 3, n + 3), complex)
    a[interior, : n + 1] = d2[interior] - xi_sq * np.eye(n + 1)[interior]
    a[interior, n + 1] = -1.0
    a[interior, n + 2] = -grid.nodes[interior]
    a[0, 0] = 1.0                    # psi(0) = 0
    a[n, n] = 1.0                    # psi(1) = 0
    a[n + 1, : n + 1] = d1[0]        # psi'(0) = g(0)
    a[n + 2, : n + 1] = d1[n]        # psi'(1) = g(1)
    dg = rhs_profiles @ d1.T
    rhs = np.zeros((rhs_profiles.shape[0], n + 3), complex)
    rhs[:, interior] = dg[:, interior]
    rhs[:, n + 1] = rhs_profiles[:, 0]
    rhs[:, n + 2] = rhs_profiles[:, n]
    sol = np.linalg.solve(a, rhs.T).T
    return sol[:, : n + 1]


@dataclass
class LiftResult:
    """Lifted field plus the worst-case constraint residuals."""

    w: SpectralField
    residual_div: float
    residual_bc: float


def lift_divergence(g_field: SpectralField, tol_compat: float = 1e-9) -> LiftResult:
    """Construct w with div w = g and w = 0 on both faces, mode by mode."""
    if g_field.components != 1:
        raise ValueError("the divergence lift expects a scalar field")
    grid = g_field.grid
    n = grid.n_z
    coeffs = g_field.coeffs
    scale = max(float(np.max(np.abs(coeffs))), 1e-300)

    # mean condition on the lateral zero mode, every time mode
    mid = (grid.n_x - 1) // 2
    zero_mode = coeffs[:, mid, mid, :]
    means = zero_mode @ grid.cheb_weights
    worst = float(np.max(np.abs(means)))
    if worst > tol_compat * max(scale, 1.0):
        raise IncompatibleDataError(
            f"layer mean of g on the xi'=0 mode is {worst:.3e}, not zero")

    w = np.zeros(coeffs.shape + (3,), complex)
    xi_sq = grid.xi_norm_sq()
    xp = grid.xi_phys

    flat_sq = xi_sq.reshape(-1)
    flat_g = coeffs.reshape(grid.n_t, -1, n + 1)
    flat_w = w.reshape(grid.n_t, -1, n + 1, 3)
    xi1 = np.broadcast_to(xp[:, None], (grid.n_x, grid.n_x)).reshape(-1)
    xi2 = np.broadcast_to(xp[None, :], (grid.n_x, grid.n_x)).reshape(-1)

    for val in np.unique(flat_sq):
        sel = np.where(flat_sq == val)[0]
        block = np.zeros((grid.n_t, sel.size, n + 1, 3), complex)
        if val == 0.0:
            block[..., 2] = antiderivative_from_plate(grid, flat_g[:, sel, :])
        else:
            batch = flat_g[:, sel, :].reshape(-1, n + 1)
            psi = _closure_solve(grid, float(val), batch)
            phi = (psi @ grid.d1.T - batch) / val
            psi = psi.reshape(grid.n_t, sel.size, n + 1)
            phi = phi.reshape(grid.n_t, sel.size, n + 1)
            block[..., 0] = 1j * xi1[sel][None, :, None] * phi
            block[..., 1] = 1j * xi2[sel][None, :, None] * phi
            block[..., 2] = psi
        flat_w[:, sel] = block

    w_field = SpectralField(grid, w, 3, g_field.real)

    div = (1j * xp[None, :, None, None] * w[..., 0]
           + 1j * xp[None, None, :, None] * w[..., 1]
           + np.einsum("ij,txyj->txyi", grid.d1, w[..., 2]))
    residual_div = float(np.max(np.abs(div - coeffs)))
    residual_bc = float(np.max(np.abs(w[:, :, :, (0, n), :])))
    return LiftResult(w_field, residual_div, residual_bc)


def lift_estimate_check(g_field: SpectralField, result: LiftResult,
                        q: float = 2.0) -> dict:
    """Empirical constants of the gradient and dual-norm bounds."""
    w = result.w
    grad_ratios = {}
    for level in (0, 1):
        num = sobolev_norm(w, NormSpec(0, level + 1, q, "slab"))
        den = sobolev_norm(g_field, NormSpec(0, level, q, "slab"))
        grad_ratios[level] = num / den if den > 0 else 0.0
    dual = negative_norm(g_field, q=q)
    low = sobolev_norm(w, NormSpec(0, 0, q, "slab"))
    return {
        "gradient_ratio_l0": grad_ratios[0],
        "gradient_ratio_l1": grad_ratios[1],
        "dual_ratio": (low / dual) if dual > 0 else 0.0,
    }
