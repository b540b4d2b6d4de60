"""Per-mode solves of the coupled fluid--plate system in frequency space.

Every retained frequency pair (integer time index k, integer lateral pair
xi') reduces the linearized interaction problem to a dense boundary-value
problem across the layer: Stokes momentum and continuity for the velocity
and pressure profiles plus one scalar equation for the plate amplitude.
This module assembles and solves those systems, synthesizes space-time
fields from the per-mode pieces, and carries the weak-form and energy
oracles that the validation suite leans on.

The xi' = 0 column is special: the plate amplitude vanishes there, the
tangential velocities decouple into scalar two-point problems, the vertical
velocity is the layer antiderivative of the divergence datum, and the
pressure constant is pinned by the plate-row compatibility at the face.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .fields import (
    PlateField,
    SpectralField,
    divergence,
    dt,
    dt_plate,
    dx3,
    gradient,
    is_conjugate_symmetric,
    laplacian,
    trace_bottom,
    trace_top,
    zeros_like_field,
)
from .grid import TorusGrid, cheb_eval, cheb_nodes, cheb_values_to_coeffs, clencurt_weights
from .lift import IncompatibleDataError, antiderivative_from_plate, lift_divergence
from .norms import x_norm, y_norm


@dataclass(frozen=True)
class SolverParams:
    """Physical coefficients and acceptance thresholds for the linear solver."""

    mu_f: float = 1.0
    mu_s: float = 1.0
    tol_eq: float = 1e-9
    tol_bc: float = 1e-9
    compat_tol: float = 1e-9


DEFAULT_PARAMS = SolverParams()


def plate_symbol_damped(k: int, xi: tuple[int, int], mu_s: float = 1.0,
                        t_period: float = 2.0 * np.pi,
                        l_period: float = 2.0 * np.pi) -> complex:
    """Fourth-order plate symbol with inertia and structural damping.

    Arguments are integer lattice frequencies; the 2*pi/period scaling to
    physical wave numbers is applied here.
    """
    kp = 2.0 * np.pi / t_period * k
    s1 = 2.0 * np.pi / l_period * xi[0]
    s2 = 2.0 * np.pi / l_period * xi[1]
    a2 = s1 * s1 + s2 * s2
    return a2 * a2 - kp * kp + 1j * kp * mu_s * a2


@dataclass
class ModeSolution:
    """Layer profiles of a single frequency mode.

    u rows are the velocity components at the collocation nodes; eta is the
    plate amplitude (identically zero on the xi' = 0 column).
    """

    grid: TorusGrid
    k: int
    xi: tuple[int, int]
    u: np.ndarray
    p: np.ndarray
    eta: complex

    @property
    def k_phys(self) -> float:
        return 2.0 * np.pi / self.grid.t_period * self.k

    @property
    def xi_phys(self) -> tuple[float, float]:
        s = 2.0 * np.pi / self.grid.l_period
        return (s * self.xi[0], s * self.xi[1])


def _data_profiles(grid, f_hat, g_hat, h_hat):
    m = grid.n_z + 1
    f_hat = np.zeros((3, m), complex) if f_hat is None else np.asarray(f_hat, complex)
    g_hat = np.zeros(m, complex) if g_hat is None else np.asarray(g_hat, complex)
    if f_hat.shape != (3, m) or g_hat.shape != (m,):
        raise ValueError("data profile shapes do not match the layer grid")
    return f_hat, g_hat, complex(h_hat)


def mode_system_matrix(grid: TorusGrid, k: int, xi: tuple[int, int],
                       mu_f: float = 1.0, mu_s: float = 1.0) -> np.ndarray:
    """Dense collocation matrix of one xi' != 0 mode.

    Unknown layout [u1; u2; u3; p; eta] with N_z + 1 nodal values per block.
    Momentum rows sit at interior nodes, continuity fills the pressure slots
    at every node, velocity boundary rows occupy the face slots, and the
    plate balance is the final row.
    """
    n = grid.n_z
    m = n + 1
    kp = 2.0 * np.pi / grid.t_period * k
    x1, x2 = (2.0 * np.pi / grid.l_period * c for c in xi)
    a2 = x1 * x1 + x2 * x2
    if a2 == 0.0:
        raise ValueError("xi' = 0 modes use the decoupled scalar route")
    d1 = grid.d1
    eye = np.eye(m)
    helm = 1j * kp * eye - mu_f * (grid.dmat(2) - a2 * eye)
    a = np.zeros((4 * m + 1, 4 * m + 1), complex)
    bu3, bp, last = 2 * m, 3 * m, 4 * m
    for off, grad_row in ((0, 1j * x1 * eye[1:n]),
                          (m, 1j * x2 * eye[1:n]),
                          (bu3, d1[1:n])):
        a[off + 1:off + n, off:off + m] = helm[1:n]
        a[off + 1:off + n, bp:bp + m] = grad_row
        a[off, off] = 1.0        # no-slip at the plate face (kinematic for u3)
        a[off + n, off + n] = 1.0  # rigid top face
    a[bu3, last] = 1j * kp       # u3(0) + ik eta = 0
    a[bp:bp + m, 0:m] = 1j * x1 * eye
    a[bp:bp + m, m:2 * m] = 1j * x2 * eye
    a[bp:bp + m, bu3:bu3 + m] = d1
    a[last, last] = plate_symbol_damped(k, xi, mu_s, grid.t_period, grid.l_period)
    a[last, bp] = -1.0
    a[last, bu3:bu3 + m] = 2.0 * mu_f * d1[0]
    return a


def _solve_axis_mode(grid, k, f_hat, g_hat, h_hat, params):
    """xi' = 0 route: scalar tangential problems and layer integration."""
    n = grid.n_z
    m = n + 1
    kp = 2.0 * np.pi / grid.t_period * k
    mean = grid.cheb_weights @ g_hat
    scale = max(1.0, float(np.max(np.abs(g_hat))))
    if abs(mean) > params.compat_tol * scale:
        raise IncompatibleDataError(
            f"divergence datum has layer mean {abs(mean):.3e} on the xi'=0 "
            f"column; the coupled system admits no periodic solution")
    d2 = grid.dmat(2)
    op = 1j * kp * np.eye(m) - params.mu_f * d2
    op[0] = 0.0
    op[0, 0] = 1.0
    op[n] = 0.0
    op[n, n] = 1.0
    rhs = f_hat[:2].copy()
    rhs[:, 0] = 0.0
    rhs[:, n] = 0.0
    u = np.zeros((3, m), complex)
    u[:2] = np.linalg.solve(op, rhs.T).T
    u[2] = antiderivative_from_plate(grid, g_hat)
    # vertical momentum fixes the pressure profile; the plate row pins its
    # constant through the face value
    slope = f_hat[2] - 1j * kp * u[2] + params.mu_f * (d2 @ u[2])
    p = antiderivative_from_plate(grid, slope)
    p += 2.0 * params.mu_f * (grid.d1[0] @ u[2]) - h_hat
    return ModeSolution(grid, k, (0, 0), u, p, 0.0 + 0.0j)


def _solve_any_mode(grid, k, xi, f_hat, g_hat, h_hat, params):
    f_hat, g_hat, h_hat = _data_profiles(grid, f_hat, g_hat, h_hat)
    m = grid.n_z + 1
    if not (f_hat.any() or g_hat.any() or h_hat):
        return ModeSolution(grid, k, tuple(xi), np.zeros((3, m), complex),
                            np.zeros(m, complex), 0.0 + 0.0j)
    if xi[0] == 0 and xi[1] == 0:
        return _solve_axis_mode(grid, k, f_hat, g_hat, h_hat, params)
    n = grid.n_z
    a = mode_system_matrix(grid, k, xi, params.mu_f, params.mu_s)
    b = np.zeros(4 * m + 1, complex)
    for j, off in enumerate((0, m, 2 * m)):
        b[off + 1:off + n] = f_hat[j, 1:n]
    b[3 * m:4 * m] = g_hat
    b[4 * m] = h_hat
    sol = np.linalg.solve(a, b)
    return ModeSolution(grid, k, tuple(xi), sol[:3 * m].reshape(3, m),
                        sol[3 * m:4 * m], complex(sol[4 * m]))


def solve_oscillatory_mode(grid: TorusGrid, k: int, xi: tuple[int, int],
                           f_hat=None, g_hat=None, h_hat=0.0,
                           params: SolverParams = DEFAULT_PARAMS) -> ModeSolution:
    """Solve one time-oscillatory mode (k != 0)."""
    if k == 0:
        raise ValueError("k = 0 is the steady plane; use solve_steady_mode")
    return _solve_any_mode(grid, k, xi, f_hat, g_hat, h_hat, params)


def solve_steady_mode(grid: TorusGrid, xi: tuple[int, int],
                      f_hat=None, g_hat=None, h_hat=0.0,
                      params: SolverParams = DEFAULT_PARAMS) -> ModeSolution:
    """Solve one steady (k = 0) mode."""
    return _solve_any_mode(grid, 0, xi, f_hat, g_hat, h_hat, params)


def mode_residuals(sol: ModeSolution, f_hat=None, g_hat=None, h_hat=0.0,
                   mu_f: float = 1.0, mu_s: float = 1.0) -> dict[str, float]:
    """Max-abs residual of every equation of one mode, from the profiles."""
    grid = sol.grid
    f_hat, g_hat, h_hat = _data_profiles(grid, f_hat, g_hat, h_hat)
    n = grid.n_z
    d1 = grid.d1
    kp = sol.k_phys
    x1, x2 = sol.xi_phys
    a2 = x1 * x1 + x2 * x2
    u, p = sol.u, sol.p
    grad_p = np.stack([1j * x1 * p, 1j * x2 * p, d1 @ p])
    mom = (1j * kp * u - mu_f * (u @ grid.dmat(2).T - a2 * u) + grad_p - f_hat)
    cont = 1j * x1 * u[0] + 1j * x2 * u[1] + d1 @ u[2] - g_hat
    bc = max(abs(u[0, 0]), abs(u[1, 0]), abs(u[2, 0] + 1j * kp * sol.eta),
             float(np.max(np.abs(u[:, n]))))
    sym = plate_symbol_damped(sol.k, sol.xi, mu_s, grid.t_period, grid.l_period)
    plate = abs(sym * sol.eta - p[0] + 2.0 * mu_f * (d1[0] @ u[2]) - h_hat)
    return {
        "momentum": float(np.max(np.abs(mom[:, 1:n]))),
        "continuity": float(np.max(np.abs(cont))),
        "bc": float(bc),
        "plate": float(plate),
    }


# ---- weak form and energy oracles -------------------------------------------


@dataclass
class TestPair:
    """Divergence-free velocity profile and plate amplitude for one mode.

    Members satisfy w(1) = 0, w'(0) = w'(1) = 0 laterally, w3(0) = -ik zeta,
    and i xi . w' + w3' = 0 at every node, so they pair admissibly with any
    candidate in the weak identity.
    """

    grid: TorusGrid
    k: int
    xi: tuple[int, int]
    w: np.ndarray
    zeta: complex


def random_test_pair(grid: TorusGrid, k: int, xi: tuple[int, int],
                     rng: np.random.Generator, extra_degree: int = 2) -> TestPair:
    """Draw a random admissible test pair built from polynomial bubbles."""
    z = grid.nodes
    m = grid.n_z + 1
    kp = 2.0 * np.pi / grid.t_period * k
    x1, x2 = (2.0 * np.pi / grid.l_period * c for c in xi)
    a2 = x1 * x1 + x2 * x2

    def poly(deg):
        c = rng.standard_normal(deg + 1) + 1j * rng.standard_normal(deg + 1)
        return np.polynomial.polynomial.polyval(z, c)

    w = np.zeros((3, m), complex)
    if a2 == 0.0:
        w[0] = z * (1.0 - z) * poly(extra_degree)
        w[1] = z * (1.0 - z) * poly(extra_degree)
        return TestPair(grid, k, tuple(xi), w, 0.0 + 0.0j)
    zeta = complex(rng.standard_normal() + 1j * rng.standard_normal())
    blend = (1.0 - z) ** 2 * (1.0 + 2.0 * z)       # 1 at the face, flat ends
    bubble = z ** 2 * (1.0 - z) ** 2 * poly(extra_degree)
    w3 = -1j * kp * zeta * blend + bubble
    w3p = grid.d1 @ w3
    swirl = z * (1.0 - z) * poly(extra_degree)
    w[0] = 1j * x1 * w3p / a2 - x2 * swirl
    w[1] = 1j * x2 * w3p / a2 + x1 * swirl
    w[2] = w3
    return TestPair(grid, k, tuple(xi), w, zeta)


def _fine_profiles(grid, values, x_fine):
    coeffs = cheb_values_to_coeffs(np.asarray(values, complex), axis=-1)
    return cheb_eval(coeffs[..., None, :], x_fine)


def weak_form_B(u_hat: np.ndarray, eta_hat: complex, pair: TestPair,
                mu_f: float = 1.0, mu_s: float = 1.0) -> complex:
    """Sesquilinear form of one mode problem against a test pair.

    Fluid terms are integrated on a refined Clenshaw-Curtis grid so that
    polynomial candidates are handled exactly; plate terms are algebraic in
    the amplitudes.
    """
    grid = pair.grid
    kp = 2.0 * np.pi / grid.t_period * pair.k
    x1, x2 = (2.0 * np.pi / grid.l_period * c for c in pair.xi)
    a2 = x1 * x1 + x2 * x2
    nf = 2 * grid.n_z
    zf = cheb_nodes(nf)
    wq = clencurt_weights(nf)
    u_hat = np.asarray(u_hat, complex)
    uf = _fine_profiles(grid, u_hat, zf)
    wf = _fine_profiles(grid, pair.w, zf)
    duf = _fine_profiles(grid, u_hat @ grid.d1.T, zf)
    dwf = _fine_profiles(grid, pair.w @ grid.d1.T, zf)
    grads = ((1j * x1 * uf, 1j * x1 * wf), (1j * x2 * uf, 1j * x2 * wf),
             (duf, dwf))
    integrand = sum((gu * np.conj(gw)).sum(axis=0) for gu, gw in grads)
    integrand = mu_f * integrand + 1j * kp * (uf * np.conj(wf)).sum(axis=0)
    fluid = complex(wq @ integrand)
    plate = (1j * kp ** 3 - 1j * kp * a2 * a2 + kp * kp * mu_s * a2)
    return fluid + plate * eta_hat * np.conj(pair.zeta)


def weak_form_rhs(f_hat: np.ndarray, h_hat: complex, pair: TestPair) -> complex:
    """Data side of the weak identity for the same test pair."""
    grid = pair.grid
    kp = 2.0 * np.pi / grid.t_period * pair.k
    nf = 2 * grid.n_z
    zf = cheb_nodes(nf)
    wq = clencurt_weights(nf)
    ff = _fine_profiles(grid, np.asarray(f_hat, complex), zf)
    wf = _fine_profiles(grid, pair.w, zf)
    fluid = complex(wq @ (ff * np.conj(wf)).sum(axis=0))
    return fluid - 1j * kp * h_hat * np.conj(pair.zeta)


def energy_estimate_check(u: SpectralField, eta: PlateField,
                          f: SpectralField, h: PlateField, k: int) -> float:
    """Empirical constant of the per-k energy bound; 0 on zero data.

    Compares the H1 velocity norm plus the weighted plate norms of the
    k-plane of the solution against the L2 size of the k-plane of the data.
    """
    if k == 0:
        raise ValueError("the energy bound concerns oscillatory planes; k != 0")
    grid = u.grid
    it = k + (grid.n_t - 1) // 2
    if not 0 <= it < grid.n_t:
        raise ValueError(f"time frequency {k} not retained on this grid")
    kp = 2.0 * np.pi / grid.t_period * k
    wq = grid.cheb_weights
    a2 = grid.xi_norm_sq()
    uc = u.coeffs[it]
    duc = np.einsum("ij,xyjc->xyic", grid.d1, uc)
    dens = (1.0 + a2)[:, :, None, None] * np.abs(uc) ** 2 + np.abs(duc) ** 2
    u_h1 = np.sqrt(float(np.einsum("xyjc,j->", dens, wq).real))
    ec = eta.coeffs[it]
    eta_22 = np.sqrt(float(np.sum((1.0 + a2) ** 2 * np.abs(ec) ** 2)))
    keta_12 = abs(kp) * np.sqrt(float(np.sum((1.0 + a2) * np.abs(ec) ** 2)))
    fc = f.coeffs[it]
    f_l2 = np.sqrt(float(np.einsum("xyjc,j->", np.abs(fc) ** 2, wq)))
    h_l2 = np.sqrt(float(np.sum(np.abs(h.coeffs[it]) ** 2)))
    if f_l2 + h_l2 == 0.0:
        return 0.0
    return (u_h1 + eta_22 + keta_12) / (f_l2 + h_l2)


# ---- synthesis and the full linear solve -------------------------------------


def synthesize(grid: TorusGrid, solutions) -> tuple[SpectralField, SpectralField, PlateField]:
    """Assemble space-time coefficient fields from per-mode solutions.

    Requires exactly one ModeSolution per retained (k, xi'); order does not
    matter.  Output fields are flagged real when the assembled coefficients
    are conjugate-symmetric.
    """
    m = grid.n_z + 1
    half_t = (grid.n_t - 1) // 2
    half_x = (grid.n_x - 1) // 2
    u_c = np.zeros((grid.n_t, grid.n_x, grid.n_x, m, 3), complex)
    p_c = np.zeros((grid.n_t, grid.n_x, grid.n_x, m), complex)
    e_c = np.zeros((grid.n_t, grid.n_x, grid.n_x), complex)
    seen = set()
    for sol in solutions:
        it = sol.k + half_t
        i1 = sol.xi[0] + half_x
        i2 = sol.xi[1] + half_x
        if not (0 <= it < grid.n_t and 0 <= i1 < grid.n_x and 0 <= i2 < grid.n_x):
            raise ValueError(f"mode {(sol.k, sol.xi)} is outside the retained lattice")
        if (it, i1, i2) in seen:
            raise ValueError(f"duplicate mode {(sol.k, sol.xi)}")
        seen.add((it, i1, i2))
        u_c[it, i1, i2] = sol.u.T
        p_c[it, i1, i2] = sol.p
        e_c[it, i1, i2] = sol.eta
    total = grid.n_t * grid.n_x * grid.n_x
    if len(seen) != total:
        raise ValueError(f"incomplete mode set: {len(seen)} of {total} supplied")
    real = all(is_conjugate_symmetric(c) for c in (u_c, p_c, e_c))
    return (SpectralField(grid, u_c, 3, real), SpectralField(grid, p_c, 1, real),
            PlateField(grid, e_c, real))


@dataclass
class LinearSolution:
    """Output of the full linear solve with its residual report."""

    u: SpectralField
    p: SpectralField
    eta: PlateField
    lift: SpectralField | None
    residuals: dict[str, float]
    norm_ratio: float | None


def _check_direct_compat(g, tol):
    wq = g.grid.cheb_weights
    mid = (g.grid.n_x - 1) // 2
    means = g.coeffs[:, mid, mid, :] @ wq
    scale = max(1.0, float(np.max(np.abs(g.coeffs))))
    worst = float(np.max(np.abs(means)))
    if worst > tol * scale:
        raise IncompatibleDataError(
            f"divergence datum has layer mean {worst:.3e} on the xi'=0 column")


def linear_residuals(u: SpectralField, p: SpectralField, eta: PlateField,
                     f=None, g=None, h=None,
                     params: SolverParams = DEFAULT_PARAMS) -> dict[str, float]:
    """Coefficient-space residuals of the assembled linear system.

    Momentum rows exclude the two face nodes, where boundary conditions
    replace the collocated equations.
    """
    grid = u.grid
    n = grid.n_z
    f = zeros_like_field(grid, 3) if f is None else f
    h = zeros_like_field(grid, plate=True) if h is None else h
    mom = dt(u) - params.mu_f * laplacian(u) + gradient(p) - f
    cont = divergence(u)
    if g is not None:
        cont = cont - g
    kin = trace_bottom(u, 2).coeffs + dt_plate(eta).coeffs
    bc = max(
        float(np.max(np.abs(trace_bottom(u, 0).coeffs))),
        float(np.max(np.abs(trace_bottom(u, 1).coeffs))),
        float(np.max(np.abs(kin))),
        float(np.max(np.abs(trace_top(u, 0).coeffs))),
        float(np.max(np.abs(trace_top(u, 1).coeffs))),
        float(np.max(np.abs(trace_top(u, 2).coeffs))),
    )
    kp = grid.k_phys[:, None, None]
    a2 = grid.xi_norm_sq()[None, :, :]
    sym = a2 * a2 - kp * kp + 1j * kp * params.mu_s * a2
    du3_face = dx3(u.component(2)).coeffs[..., 0]
    plate = (sym * eta.coeffs - p.coeffs[..., 0]
             + 2.0 * params.mu_f * du3_face - h.coeffs)
    return {
        "momentum": float(np.max(np.abs(mom.coeffs[:, :, :, 1:n, :]))),
        "continuity": float(np.max(np.abs(cont.coeffs))),
        "bc": float(bc),
        "plate": float(np.max(np.abs(plate))),
    }


def solve_linear_full(f: SpectralField | None = None,
                      g: SpectralField | None = None,
                      h: PlateField | None = None, *,
                      grid: TorusGrid | None = None,
                      params: SolverParams = DEFAULT_PARAMS,
                      route: str = "lift",
                      threads: int = 1,
                      compute_ratio: bool = True) -> LinearSolution:
    """Solve the linearized coupled system for time-periodic data.

    route "lift" removes the divergence datum with the layer lift and sends
    homogeneous-continuity data to the mode solves; route "direct" feeds the
    datum into the continuity rows unchanged.  The two must agree, which is
    the dual-path cross-check used by the validation oracles.
    """
    for cand in (f, g, h):
        if cand is not None:
            grid = cand.grid if grid is None else grid
    if grid is None:
        raise ValueError("no data supplied and no grid given")
    f = zeros_like_field(grid, 3) if f is None else f
    h = zeros_like_field(grid, plate=True) if h is None else h
    if f.components != 3:
        raise ValueError("forcing must have three components")
    for cand in (f, g, h):
        if cand is not None and cand.grid != grid:
            raise ValueError("data fields live on different grids")
    real_data = f.real and h.real and (g is None or g.real)

    w = None
    g_eff = None
    if route == "lift":
        if g is not None and g.coeffs.any():
            w = lift_divergence(g, tol_compat=params.compat_tol).w
            f_eff = f - dt(w) + params.mu_f * laplacian(w)
            h_eff = h - 2.0 * params.mu_f * trace_bottom(g)
        else:
            f_eff, h_eff = f, h
    elif route == "direct":
        if g is not None and g.coeffs.any():
            _check_direct_compat(g, params.compat_tol)
            g_eff = g
        f_eff, h_eff = f, h
    else:
        raise ValueError(f"unknown route {route!r}")

    m = grid.n_z + 1
    half_t = (grid.n_t - 1) // 2
    half_x = (grid.n_x - 1) // 2
    u_c = np.zeros((grid.n_t, grid.n_x, grid.n_x, m, 3), complex)
    p_c = np.zeros((grid.n_t, grid.n_x, grid.n_x, m), complex)
    e_c = np.zeros((grid.n_t, grid.n_x, grid.n_x), complex)
    fc = f_eff.coeffs
    gc = g_eff.coeffs if g_eff is not None else None
    hc = h_eff.coeffs

    triples = [(it, i1, i2)
               for it in range(grid.n_t)
               for i1 in range(grid.n_x)
               for i2 in range(grid.n_x)]
    if real_data:
        # conjugate symmetry: solve the closed half-lattice, reflect the rest
        triples = [idx for idx in triples
                   if (idx[0] - half_t, idx[1] - half_x, idx[2] - half_x) >= (0, 0, 0)]

    def solve_block(chunk):
        for it, i1, i2 in chunk:
            fh = fc[it, i1, i2].T
            gh = gc[it, i1, i2] if gc is not None else None
            hh = hc[it, i1, i2]
            if not (fh.any() or (gh is not None and gh.any()) or hh):
                continue
            sol = _solve_any_mode(grid, it - half_t, (i1 - half_x, i2 - half_x),
                                  fh, gh, hh, params)
            u_c[it, i1, i2] = sol.u.T
            p_c[it, i1, i2] = sol.p
            e_c[it, i1, i2] = sol.eta

    if threads > 1 and len(triples) > 1:
        chunks = [triples[i::threads] for i in range(threads)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(solve_block, c) for c in chunks if c]
            for fut in futures:
                fut.result()
    else:
        solve_block(triples)

    if real_data:
        for arr in (u_c, p_c, e_c):
            refl = np.conj(arr[::-1, ::-1, ::-1])
            arr += refl
            arr[half_t, half_x, half_x] *= 0.5

    u = SpectralField(grid, u_c, 3, real_data)
    p = SpectralField(grid, p_c, 1, real_data)
    eta = PlateField(grid, e_c, real_data)
    if w is not None:
        u = u + w

    residuals = linear_residuals(u, p, eta, f, g, h, params)
    ratio = None
    if compute_ratio:
        denom = y_norm(f, g, h, 2.0)
        if denom > 0.0:
            ratio = x_norm(u, p, eta, 2.0) / denom
    return LinearSolution(u, p, eta, w, residuals, ratio)
