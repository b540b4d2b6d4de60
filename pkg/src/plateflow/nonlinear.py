"""Deformed-geometry coupling: the interface-straightening map, the quadratic
interaction terms it induces, the smallness gate, and the fixed-point solver
for the fully coupled plate/fluid system.

The moving fluid domain is pulled back to the reference slab with the map
phi(t, x) = (x', x3 - (1 - x3) * eta(t, x')), which fixes the top face and
sends the bottom face onto the deformed interface at height -eta.  Written in
reference coordinates, the equations keep their flat-domain principal part;
everything the curvature of the map generates is collected into correction
terms that are polynomial or rational in eta, its derivatives, and the
unknowns.  Those corrections were re-derived here by the chain rule and
frozen only after an exact symbolic-differentiation oracle confirmed them,
term by term, against the physical-space operators composed with the map.

All pointwise products (including the rational factor 1/(1 + eta)) are
evaluated on a zero-padded time/lateral lattice and truncated back, so the
quadratic terms are alias-free; the layer direction needs no padding because
products of node values define the collocation product directly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .fields import (
    PlateField,
    SpectralField,
    dt,
    dt_plate,
    divergence,
    dx,
    dx3,
    gradient,
    lateral_gradient_plate,
    lateral_laplacian_plate,
    laplacian,
    pad_to_samples,
    padded_sizes,
    samples_to_truncated,
    trace_bottom,
    trace_top,
    zeros_like_field,
)
from .grid import TorusGrid, cheb_eval, cheb_values_to_coeffs
from .modes import DEFAULT_PARAMS, SolverParams, solve_linear_full
from .norms import NormSpec, negative_norm, s_norm, sobolev_norm, x_norm, y_norm

# Gate limits: the plate-norm budget keeps the geometry perturbative, the sup
# bound keeps the map bijective with room to spare, and the reciprocal bound
# keeps 1/(1 + eta) uniformly tame for the rational terms.
EPS0_DEFAULT = 0.1
SUP_ETA_LIMIT = 0.5
RECIPROCAL_LIMIT = 2.0


class DegenerateDeformationError(ValueError):
    """The deflection is too large for the straightening map to be usable."""


class PicardDivergenceError(RuntimeError):
    """Fixed-point iteration left its ball or stopped contracting."""

    def __init__(self, message: str, trace: list[dict] | None = None):
        super().__init__(message)
        self.trace = trace or []


# ---- the straightening map ----------------------------------------------------


def plate_eval(eta: PlateField, t, x1, x2) -> np.ndarray:
    """Evaluate a plate field at arbitrary (t, x1, x2) points by synthesis."""
    g = eta.grid
    t = np.asarray(t, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    shape = np.broadcast_shapes(t.shape, x1.shape, x2.shape)
    tb = np.broadcast_to(t, shape).ravel()
    xb = np.broadcast_to(x1, shape).ravel()
    yb = np.broadcast_to(x2, shape).ravel()
    et = np.exp(1j * np.outer(tb, g.k_phys))
    e1 = np.exp(1j * np.outer(xb, g.xi_phys))
    e2 = np.exp(1j * np.outer(yb, g.xi_phys))
    vals = np.einsum("bt,bi,bj,tij->b", et, e1, e2, eta.coeffs, optimize=True)
    vals = vals.reshape(shape)
    return vals.real if eta.real else vals


def _sup_deflection(eta: PlateField) -> float:
    g = eta.grid
    m_t, m_x = padded_sizes(g, 2.0)
    samples = pad_to_samples(eta.coeffs[..., None], g, m_t, m_x)[..., 0]
    return float(np.max(np.abs(samples)))


def _require_nondegenerate(eta: PlateField) -> None:
    sup = _sup_deflection(eta)
    if sup >= 1.0:
        raise DegenerateDeformationError(
            f"sup |eta| = {sup:.3f} >= 1; the straightening map degenerates"
        )


def deform_map(eta: PlateField, t, x) -> np.ndarray:
    """Image of reference points x under the straightening map at time t.

    x has the coordinates along its last axis; the lateral coordinates pass
    through unchanged and the layer coordinate moves to x3 - (1 - x3)*eta.
    """
    _require_nondegenerate(eta)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 3:
        raise ValueError("points must have 3 coordinates along the last axis")
    e = plate_eval(eta, t, x[..., 0], x[..., 1])
    out = x.astype(complex if np.iscomplexobj(e) else float).copy()
    out[..., 2] = x[..., 2] - (1.0 - x[..., 2]) * e
    return out


def deform_inverse(eta: PlateField, t, y) -> np.ndarray:
    """Pre-image of deformed-domain points y; inverse of deform_map."""
    _require_nondegenerate(eta)
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != 3:
        raise ValueError("points must have 3 coordinates along the last axis")
    e = plate_eval(eta, t, y[..., 0], y[..., 1])
    out = y.astype(complex if np.iscomplexobj(e) else float).copy()
    out[..., 2] = (y[..., 2] + e) / (1.0 + e)
    return out


# ---- geometry fields -----------------------------------------------------------


def _padded_plate(coeffs: np.ndarray, grid: TorusGrid, m_t: int, m_x: int,
                  real: bool) -> np.ndarray:
    samples = pad_to_samples(coeffs[..., None], grid, m_t, m_x)[..., 0]
    return samples.real if real else samples


def _padded_slab(coeffs: np.ndarray, grid: TorusGrid, m_t: int, m_x: int,
                 real: bool) -> np.ndarray:
    samples = pad_to_samples(coeffs, grid, m_t, m_x)
    return samples.real if real else samples


def e_matrix(eta: PlateField, pad_factor: float = 1.5) -> np.ndarray:
    """Gradient-correction tensor of the straightening map, as coefficients.

    Returns shape (N_t, N_x, N_x, N_z + 1, 3, 3).  Only the third row is
    nonzero: ((1 - x3) d1 eta, (1 - x3) d2 eta, -eta) / (1 + eta).
    """
    _require_nondegenerate(eta)
    g = eta.grid
    m_t, m_x = padded_sizes(g, pad_factor)
    eta_s = _padded_plate(eta.coeffs, g, m_t, m_x, eta.real)
    g1, g2 = lateral_gradient_plate(eta)
    g1_s = _padded_plate(g1.coeffs, g, m_t, m_x, eta.real)
    g2_s = _padded_plate(g2.coeffs, g, m_t, m_x, eta.real)
    tau = 1.0 / (1.0 + eta_s)
    rho = 1.0 - g.nodes
    es = np.zeros(eta_s.shape + (g.n_z + 1, 3, 3), dtype=tau.dtype)
    es[..., 2, 0] = (g1_s * tau)[..., None] * rho
    es[..., 2, 1] = (g2_s * tau)[..., None] * rho
    es[..., 2, 2] = (-eta_s * tau)[..., None]
    return samples_to_truncated(es, g, eta.real)


def normal_vector(eta: PlateField, pad_factor: float = 2.0) -> PlateField:
    """Unit normal of the deformed interface, parameterized by x'.

    Points away from the fluid layer; for the flat plate it is (0, 0, -1).
    """
    g = eta.grid
    m_t, m_x = padded_sizes(g, pad_factor)
    g1, g2 = lateral_gradient_plate(eta)
    g1_s = _padded_plate(g1.coeffs, g, m_t, m_x, eta.real)
    g2_s = _padded_plate(g2.coeffs, g, m_t, m_x, eta.real)
    norm = np.sqrt(1.0 + g1_s * g1_s + g2_s * g2_s)
    nu = np.stack([g1_s / norm, g2_s / norm, -1.0 / norm], axis=-1)
    return PlateField(g, samples_to_truncated(nu, g, eta.real), eta.real)


@dataclass
class DeformationData:
    """Geometry bundle for one deflection field."""

    eta: PlateField
    rho: np.ndarray                 # layer blend 1 - x3 at the nodes
    e: np.ndarray                   # gradient-correction tensor coefficients
    nu: PlateField                  # interface unit normal (3 trailing comps)
    one_plus_eta: PlateField        # layer Jacobian of the map
    inv_one_plus_eta: PlateField    # Jacobian of the inverse, dealiased


def deformation_data(eta: PlateField, pad_factor: float = 1.5) -> DeformationData:
    _require_nondegenerate(eta)
    g = eta.grid
    m_t, m_x = padded_sizes(g, pad_factor)
    eta_s = _padded_plate(eta.coeffs, g, m_t, m_x, eta.real)
    inv = samples_to_truncated(1.0 / (1.0 + eta_s), g, eta.real)
    one = eta.copy()
    mid = ((g.n_t - 1) // 2, (g.n_x - 1) // 2, (g.n_x - 1) // 2)
    one.coeffs[mid] += 1.0
    return DeformationData(
        eta=eta,
        rho=1.0 - g.nodes,
        e=e_matrix(eta, pad_factor),
        nu=normal_vector(eta),
        one_plus_eta=one,
        inv_one_plus_eta=PlateField(g, inv, eta.real),
    )


# ---- interaction terms ---------------------------------------------------------


@dataclass
class NonlinearTerms:
    """Right-hand-side corrections generated by one (u, p, eta) state.

    rf_tilde feeds the momentum slot and already includes the convective
    term; rf_deformation is the map-induced part alone, so it vanishes
    identically for a flat plate.  rd_tilde = div rd_vector feeds the
    divergence slot and is mean-free because rd_vector vanishes on both
    faces wherever u does.  r_eta and s_eta act on the plate row.
    """

    rf_tilde: SpectralField
    rd_tilde: SpectralField
    rd_vector: SpectralField
    r_eta: PlateField
    s_eta: PlateField
    rf_deformation: SpectralField


def compute_nonlinear_terms(u: SpectralField, p: SpectralField, eta: PlateField,
                            mu_f: float = 1.0,
                            pad_factor: float = 1.5) -> NonlinearTerms:
    """Evaluate every interaction term pseudospectrally on a padded lattice.

    The momentum correction acts only through layer derivatives: because the
    map moves points vertically, all second-derivative corrections contract
    against the third row of the gradient-correction tensor, i.e. against
    d3 d_k u, never against purely lateral second derivatives.
    """
    g = u.grid
    if p.grid != g or eta.grid != g:
        raise ValueError("fields live on different grids")
    if u.components != 3 or p.components != 1:
        raise ValueError("expected a 3-component velocity and a scalar pressure")
    _require_nondegenerate(eta)

    real_in = u.real and p.real and eta.real
    m_t, m_x = padded_sizes(g, pad_factor)

    eta_s = _padded_plate(eta.coeffs, g, m_t, m_x, real_in)
    det_s = _padded_plate(dt_plate(eta).coeffs, g, m_t, m_x, real_in)
    g1f, g2f = lateral_gradient_plate(eta)
    g1_s = _padded_plate(g1f.coeffs, g, m_t, m_x, real_in)
    g2_s = _padded_plate(g2f.coeffs, g, m_t, m_x, real_in)
    lap_s = _padded_plate(lateral_laplacian_plate(eta).coeffs, g, m_t, m_x, real_in)
    tau = 1.0 / (1.0 + eta_s)

    u_s = _padded_slab(u.coeffs, g, m_t, m_x, real_in)
    du1 = _padded_slab(dx(u, 1).coeffs, g, m_t, m_x, real_in)
    du2 = _padded_slab(dx(u, 2).coeffs, g, m_t, m_x, real_in)
    du3 = _padded_slab(dx3(u).coeffs, g, m_t, m_x, real_in)
    d31 = _padded_slab(dx3(dx(u, 1)).coeffs, g, m_t, m_x, real_in)
    d32 = _padded_slab(dx3(dx(u, 2)).coeffs, g, m_t, m_x, real_in)
    d33 = _padded_slab(dx3(u, 2).coeffs, g, m_t, m_x, real_in)
    dp3 = _padded_slab(dx3(p).coeffs, g, m_t, m_x, real_in)

    rho = 1.0 - g.nodes
    e31 = (g1_s * tau)[..., None] * rho
    e32 = (g2_s * tau)[..., None] * rho
    e33 = np.broadcast_to((-eta_s * tau)[..., None], e31.shape)

    grad_sq = g1_s * g1_s + g2_s * g2_s
    # div of the tensor row plus its quadratic companion, expanded in eta
    first_coef = (lap_s * tau)[..., None] * rho - 2.0 * (grad_sq * tau * tau)[..., None] * rho
    e3_norm_sq = e31 * e31 + e32 * e32 + e33 * e33
    e3_dot_u = e31 * u_s[..., 0] + e32 * u_s[..., 1] + e33 * u_s[..., 2]
    time_coef = (det_s * tau)[..., None] * rho

    rf_def = (
        -du3 * time_coef[..., None]
        + mu_f * (
            2.0 * (d31 * e31[..., None] + d32 * e32[..., None] + d33 * e33[..., None])
            + d33 * e3_norm_sq[..., None]
            + du3 * first_coef[..., None]
        )
        - du3 * e3_dot_u[..., None]
        - dp3[..., None] * np.stack([e31, e32, e33], axis=-1)
    )
    convective = (u_s[..., 0:1] * du1 + u_s[..., 1:2] * du2 + u_s[..., 2:3] * du3)
    rf_full = rf_def - convective

    rd = np.stack(
        [
            -eta_s[..., None] * u_s[..., 0],
            -eta_s[..., None] * u_s[..., 1],
            -(g1_s[..., None] * u_s[..., 0] + g2_s[..., None] * u_s[..., 1]) * rho,
        ],
        axis=-1,
    )

    rf_tilde = SpectralField(g, samples_to_truncated(rf_full, g, real_in), 3, real_in)
    rf_deformation = SpectralField(g, samples_to_truncated(rf_def, g, real_in), 3, real_in)
    rd_vector = SpectralField(g, samples_to_truncated(rd, g, real_in), 3, real_in)
    rd_tilde = divergence(rd_vector)

    # plate-row terms live on the bottom face, where the blend is 1
    du3_0 = du3[..., 0, :]
    t31 = mu_f * (du1[..., 0, 2] + du3_0[..., 0])
    t32 = mu_f * (du2[..., 0, 2] + du3_0[..., 1])
    e3_0 = np.stack([g1_s * tau, g2_s * tau, -eta_s * tau], axis=-1)
    a = mu_f * du3_0[..., :, None] * e3_0[..., None, :]
    s_eta_s = a + np.swapaxes(a, -1, -2)
    r_eta_s = (
        -(t31 + s_eta_s[..., 2, 0]) * g1_s
        - (t32 + s_eta_s[..., 2, 1]) * g2_s
        - s_eta_s[..., 2, 2]
    )

    r_eta = PlateField(g, samples_to_truncated(r_eta_s, g, real_in), real_in)
    s_eta = PlateField(g, samples_to_truncated(s_eta_s, g, real_in), real_in)
    return NonlinearTerms(rf_tilde, rd_tilde, rd_vector, r_eta, s_eta, rf_deformation)


# ---- smallness gate ------------------------------------------------------------


@dataclass(frozen=True)
class SmallnessReport:
    passed: bool
    plate_norm: float
    plate_limit: float
    sup_eta: float
    reciprocal_sup: float
    margin: float


def smallness_check(eta: PlateField, eps0: float = EPS0_DEFAULT,
                    q: float = 2.0) -> SmallnessReport:
    """Gate for the perturbative regime; fails rather than raising."""
    plate_norm = s_norm(eta, q)
    sup = _sup_deflection(eta)
    reciprocal = np.inf if sup >= 1.0 else 1.0 / (1.0 - sup)
    if sup < 1.0:
        g = eta.grid
        m_t, m_x = padded_sizes(g, 2.0)
        samples = _padded_plate(eta.coeffs, g, m_t, m_x, eta.real)
        low = np.min(1.0 + (samples.real if np.iscomplexobj(samples) else samples))
        reciprocal = np.inf if low <= 0.0 else float(1.0 / low)
    passed = (plate_norm <= eps0 and sup <= SUP_ETA_LIMIT
              and reciprocal <= RECIPROCAL_LIMIT)
    return SmallnessReport(
        passed=bool(passed),
        plate_norm=plate_norm,
        plate_limit=eps0,
        sup_eta=sup,
        reciprocal_sup=float(reciprocal),
        margin=eps0 - plate_norm,
    )


# ---- empirical bound ratios ------------------------------------------------------


def nonlinear_bound_ratios(u: SpectralField, p: SpectralField, eta: PlateField,
                           q: float = 2.0, eps0: float = EPS0_DEFAULT,
                           mu_f: float = 1.0, pad_factor: float = 1.5,
                           terms: NonlinearTerms | None = None) -> dict[str, float]:
    """Left/right quotients of the three quadratic-term estimates.

    The momentum right side keeps the squared velocity term outside the
    plate-norm factor so the quotient stays meaningful as eta -> 0, where
    the correction reduces to the convective term.  Zero data reports zero.
    """
    if terms is None:
        terms = compute_nonlinear_terms(u, p, eta, mu_f=mu_f, pad_factor=pad_factor)
    nu = sobolev_norm(u, NormSpec(1, 2, q, "slab"))
    ngp = sobolev_norm(gradient(p), NormSpec(0, 0, q, "slab"))
    ns = s_norm(eta, q)

    lhs_f = sobolev_norm(terms.rf_tilde, NormSpec(0, 0, q, "slab"))
    rhs_f = ((1.0 + eps0) * nu + ngp) * ns + nu * nu

    lhs_d = (sobolev_norm(terms.rd_tilde, NormSpec(0, 1, q, "slab"))
             + negative_norm(terms.rd_tilde, q=q, time_order=1))
    rhs_d = nu * ns

    lhs_e = sobolev_norm(terms.r_eta, NormSpec(0, 1.0 - 1.0 / q, q, "plate"))
    rhs_e = (1.0 + eps0) * (ns * nu + nu + sobolev_norm(p, NormSpec(0, 1, q, "slab")))

    def quot(lhs, rhs):
        return float(lhs / rhs) if rhs > 0.0 else 0.0

    return {
        "momentum": quot(lhs_f, rhs_f),
        "divergence": quot(lhs_d, rhs_d),
        "plate": quot(lhs_e, rhs_e),
    }


# ---- forcing pullback ------------------------------------------------------------


def compose_forcing(f, eta: PlateField, pad_factor: float = 1.5) -> SpectralField:
    """Pull a momentum forcing back through the straightening map.

    f is either a 3-component SpectralField or a callable f(t, x1, x2, x3)
    returning the three components (tuple or stacked trailing axis).  The
    composition is sampled on the padded lattice at the displaced layer
    coordinate and truncated back, so grid data is evaluated through its
    Chebyshev interpolant (polynomial continuation covers the small
    overhang where the displaced coordinate leaves [0, 1]).
    """
    g = eta.grid
    _require_nondegenerate(eta)
    moved = bool(np.any(eta.coeffs))
    if isinstance(f, SpectralField):
        if f.grid != g:
            raise ValueError("forcing grid does not match the deflection grid")
        if f.components != 3:
            raise ValueError("expected a 3-component forcing field")
        if not moved:
            return f.copy()

    m_t, m_x = padded_sizes(g, pad_factor)
    real_in = eta.real and (f.real if isinstance(f, SpectralField) else True)
    eta_s = _padded_plate(eta.coeffs, g, m_t, m_x, real_in)
    z = g.nodes
    displaced = z * (1.0 + eta_s[..., None]) - eta_s[..., None]

    if isinstance(f, SpectralField):
        samples = _padded_slab(f.coeffs, g, m_t, m_x, real_in)
        series = cheb_values_to_coeffs(samples, axis=3)
        # the inserted axis broadcasts each (t, x') column's series over that
        # column's displaced evaluation points
        composed = np.stack(
            [cheb_eval(series[..., c][..., None, :], displaced) for c in range(3)],
            axis=-1,
        )
    else:
        t_pts = g.t_period * np.arange(m_t) / m_t
        x_pts = g.l_period * np.arange(m_x) / m_x
        vals = f(
            t_pts[:, None, None, None],
            x_pts[None, :, None, None],
            x_pts[None, None, :, None],
            displaced,
        )
        if isinstance(vals, (tuple, list)):
            shape = displaced.shape
            vals = np.stack(
                [np.broadcast_to(np.asarray(v), shape) for v in vals], axis=-1
            )
        vals = np.asarray(vals)
        if vals.shape != displaced.shape + (3,):
            raise ValueError("forcing callable must produce 3 components per point")
        composed = vals.real if (real_in and np.iscomplexobj(vals)) else vals

    return SpectralField(g, samples_to_truncated(composed, g, real_in), 3, real_in)


# ---- fixed-point solver -----------------------------------------------------------


@dataclass(frozen=True)
class PicardConfig:
    """Knobs for the fixed-point iteration.

    eps is the data-smallness scale; the iterate ball defaults to sqrt(eps).
    Control-flow norms use q = 2 so the stopping rule is evaluated exactly.
    """

    eps: float = 1e-3
    radius: float | None = None
    max_iter: int = 25
    picard_tol: float = 1e-11
    tol_nl: float = 1e-9
    eps0: float = EPS0_DEFAULT
    q: float = 2.0
    pad_factor: float = 1.5
    threads: int = 1
    params: SolverParams = DEFAULT_PARAMS

    @property
    def ball_radius(self) -> float:
        return self.radius if self.radius is not None else float(np.sqrt(self.eps))


@dataclass
class PicardResult:
    u: SpectralField
    p: SpectralField
    eta: PlateField
    converged: bool
    iterations: int
    trace: list[dict]
    residuals: dict[str, float]
    radius: float
    in_ball: bool

    def trace_json(self) -> str:
        return json.dumps(
            {
                "converged": self.converged,
                "iterations": self.iterations,
                "radius": self.radius,
                "in_ball": self.in_ball,
                "residuals": self.residuals,
                "steps": self.trace,
            },
            indent=2,
        )


def picard_solve(f, h: PlateField | None, config: PicardConfig | None = None,
                 grid: TorusGrid | None = None) -> PicardResult:
    """Iterate the data-to-solution map of the linear system on the
    correction-augmented right-hand sides, starting from rest.

    Each sweep recomputes the pulled-back forcing and every interaction term
    at the current iterate, solves the linear system, and measures the step
    in the solution norm.  The iterate must stay inside the configured ball
    and keep contracting; leaving the ball or a step ratio >= 1 raises
    PicardDivergenceError with the trace attached.
    """
    config = config or PicardConfig()
    if h is None:
        if grid is None:
            if isinstance(f, SpectralField):
                grid = f.grid
            else:
                raise ValueError("grid is needed when both f and h are implicit")
        h = zeros_like_field(grid, plate=True)
    g = h.grid
    if isinstance(f, SpectralField) and f.grid != g:
        raise ValueError("f and h live on different grids")
    params = config.params
    radius = config.ball_radius

    u = zeros_like_field(g, components=3)
    p = zeros_like_field(g)
    eta = zeros_like_field(g, plate=True)
    mid_x = (g.n_x - 1) // 2

    data_norm = None
    if f is None or isinstance(f, SpectralField):
        data_norm = y_norm(f if f is not None else zeros_like_field(g, components=3),
                           None, h, q=config.q)

    trace: list[dict] = []
    converged = False
    prev_step = None
    iterations = 0
    for n in range(1, config.max_iter + 1):
        iterations = n
        f_t = None
        if f is not None:
            f_t = compose_forcing(f, eta, pad_factor=config.pad_factor)
        terms = compute_nonlinear_terms(u, p, eta, mu_f=params.mu_f,
                                        pad_factor=config.pad_factor)
        rhs_f = f_t + terms.rf_tilde if f_t is not None else terms.rf_tilde
        rhs_h = h + terms.r_eta
        # mean-free compatibility of the divergence slot, rechecked numerically
        layer_mean = terms.rd_tilde.coeffs[:, mid_x, mid_x, :] @ g.cheb_weights
        rd_mean = float(np.max(np.abs(layer_mean)))

        sol = solve_linear_full(rhs_f, terms.rd_tilde, rhs_h, grid=g,
                                params=params, route="lift",
                                threads=config.threads, compute_ratio=False)
        new_norm = x_norm(sol.u, sol.p, sol.eta, q=config.q)
        step = x_norm(sol.u - u, sol.p - p, sol.eta - eta, q=config.q)
        ratio = (step / prev_step) if prev_step else None

        gate = smallness_check(sol.eta, eps0=config.eps0, q=config.q)
        trace.append(
            {
                "iteration": n,
                "x_norm": new_norm,
                "step": step,
                "ratio": ratio,
                "rd_mean": rd_mean,
                "plate_norm": gate.plate_norm,
                "sup_eta": gate.sup_eta,
                "in_ball": bool(new_norm <= radius),
                "data_norm": data_norm,
            }
        )
        if not gate.passed:
            err = DegenerateDeformationError(
                f"smallness gate failed at iteration {n}: plate norm "
                f"{gate.plate_norm:.3e}, sup {gate.sup_eta:.3e}"
            )
            err.trace = trace
            raise err
        if new_norm > radius:
            raise PicardDivergenceError(
                f"iterate left the ball: {new_norm:.3e} > {radius:.3e}", trace
            )
        if ratio is not None and ratio >= 1.0 and step > 10.0 * config.picard_tol:
            raise PicardDivergenceError(
                f"contraction failed: step ratio {ratio:.3f} >= 1", trace
            )
        u, p, eta = sol.u, sol.p, sol.eta
        if step < config.picard_tol:
            converged = True
            break
        if step > 0.0:
            prev_step = step

    residuals = nonlinear_residual(u, p, eta, f, h, mu_f=params.mu_f,
                                   mu_s=params.mu_s, pad_factor=config.pad_factor)
    in_ball = x_norm(u, p, eta, q=config.q) <= radius
    return PicardResult(u=u, p=p, eta=eta, converged=converged,
                        iterations=iterations, trace=trace,
                        residuals=residuals, radius=radius, in_ball=in_ball)


# ---- full-system residuals ---------------------------------------------------------


def nonlinear_residual(u: SpectralField, p: SpectralField, eta: PlateField,
                       f=None, h: PlateField | None = None,
                       mu_f: float = 1.0, mu_s: float = 1.0,
                       pad_factor: float = 1.5) -> dict[str, float]:
    """Max-magnitude residuals of the six transformed-system equations.

    Momentum rows are collocated at interior nodes only; the two face rows
    belong to the trace conditions.  The plate row is evaluated in
    coefficient space against the damped symbol.
    """
    g = u.grid
    n = g.n_z
    terms = compute_nonlinear_terms(u, p, eta, mu_f=mu_f, pad_factor=pad_factor)
    f_t = compose_forcing(f, eta, pad_factor=pad_factor) if f is not None else None
    if h is None:
        h = zeros_like_field(g, plate=True)

    rhs_f = f_t + terms.rf_tilde if f_t is not None else terms.rf_tilde
    mom = dt(u) - mu_f * laplacian(u) + gradient(p) - rhs_f
    cont = divergence(u) - terms.rd_tilde

    kin = trace_bottom(u, 2).coeffs + dt_plate(eta).coeffs
    no_slip = max(
        float(np.max(np.abs(trace_bottom(u, 0).coeffs))),
        float(np.max(np.abs(trace_bottom(u, 1).coeffs))),
        float(np.max(np.abs(trace_top(u, 0).coeffs))),
        float(np.max(np.abs(trace_top(u, 1).coeffs))),
        float(np.max(np.abs(trace_top(u, 2).coeffs))),
    )

    kp = g.k_phys[:, None, None]
    a2 = g.xi_norm_sq()[None, :, :]
    sym = a2 * a2 - kp * kp + 1j * kp * mu_s * a2
    du3_face = dx3(u.component(2)).coeffs[..., 0]
    plate = (sym * eta.coeffs - p.coeffs[..., 0] + 2.0 * mu_f * du3_face
             - h.coeffs - terms.r_eta.coeffs)

    mid_x = (g.n_x - 1) // 2
    eta_mean = float(np.max(np.abs(eta.coeffs[:, mid_x, mid_x])))

    return {
        "momentum": float(np.max(np.abs(mom.coeffs[:, :, :, 1:n, :]))),
        "continuity": float(np.max(np.abs(cont.coeffs))),
        "plate": float(np.max(np.abs(plate))),
        "kinematic": float(np.max(np.abs(kin))),
        "no_slip": no_slip,
        "plate_mean": eta_mean,
    }
