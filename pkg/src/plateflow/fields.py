"""Coefficient containers and transforms for slab and plate fields.

Coefficients are stored in increasing signed frequency order along the time
and lateral axes (axis 0: k, axes 1-2: xi1, xi2), the Chebyshev node axis
next, and an optional trailing component axis.  The forward transform is the
lattice average, so synthesis is the plain sum over modes and Parseval holds
without weights.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .grid import TorusGrid

_PERIODIC_AXES = (0, 1, 2)


def _to_coeffs(samples: np.ndarray) -> np.ndarray:
    n = samples.shape[0] * samples.shape[1] * samples.shape[2]
    spec = np.fft.fftn(samples, axes=_PERIODIC_AXES) / n
    return np.fft.fftshift(spec, axes=_PERIODIC_AXES)


def _to_samples(coeffs: np.ndarray) -> np.ndarray:
    n = coeffs.shape[0] * coeffs.shape[1] * coeffs.shape[2]
    spec = np.fft.ifftshift(coeffs, axes=_PERIODIC_AXES)
    return np.fft.ifftn(spec, axes=_PERIODIC_AXES) * n


def _symmetrize(coeffs: np.ndarray) -> np.ndarray:
    """Project onto the conjugate-symmetric subspace c(-k,-xi) = conj(c(k,xi))."""
    flipped = coeffs[::-1, ::-1, ::-1]
    return 0.5 * (coeffs + np.conj(flipped))


@dataclass
class SpectralField:
    """Fourier x Chebyshev coefficients of a field on the slab.

    coeffs shape: (N_t, N_x, N_x, N_z + 1) for scalars and an extra trailing
    axis of length `components` for vector fields.  `real` records that the
    physical field is real valued (conjugate-symmetric coefficients).
    """

    grid: TorusGrid
    coeffs: np.ndarray
    components: int = 1
    real: bool = False

    def __post_init__(self):
        g = self.grid
        want = (g.n_t, g.n_x, g.n_x, g.n_z + 1)
        if self.components > 1:
            want = want + (self.components,)
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != want:
            raise ValueError(
                f"coefficient shape {self.coeffs.shape} does not match grid {want}"
            )

    def copy(self) -> "SpectralField":
        return replace(self, coeffs=self.coeffs.copy())

    def component(self, c: int) -> "SpectralField":
        if self.components == 1:
            if c != 0:
                raise ValueError("scalar field has only component 0")
            return self
        return SpectralField(self.grid, self.coeffs[..., c].copy(), 1, self.real)

    def __add__(self, other):
        _check_compatible(self, other)
        return replace(self, coeffs=self.coeffs + other.coeffs,
                       real=self.real and other.real)

    def __sub__(self, other):
        _check_compatible(self, other)
        return replace(self, coeffs=self.coeffs - other.coeffs,
                       real=self.real and other.real)

    def __mul__(self, scalar):
        real = self.real and np.isrealobj(np.asarray(scalar))
        return replace(self, coeffs=self.coeffs * scalar, real=real)

    __rmul__ = __mul__


@dataclass
class PlateField:
    """Fourier coefficients of a field on T x T0^2, shape (N_t, N_x, N_x)."""

    grid: TorusGrid
    coeffs: np.ndarray
    real: bool = False

    def __post_init__(self):
        g = self.grid
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        want3 = (g.n_t, g.n_x, g.n_x)
        if self.coeffs.shape != want3 and self.coeffs.shape[:3] != want3:
            raise ValueError(
                f"coefficient shape {self.coeffs.shape} does not match grid {want3}"
            )

    def copy(self) -> "PlateField":
        return replace(self, coeffs=self.coeffs.copy())

    def __add__(self, other):
        _check_compatible(self, other)
        return replace(self, coeffs=self.coeffs + other.coeffs,
                       real=self.real and other.real)

    def __sub__(self, other):
        _check_compatible(self, other)
        return replace(self, coeffs=self.coeffs - other.coeffs,
                       real=self.real and other.real)

    def __mul__(self, scalar):
        real = self.real and np.isrealobj(np.asarray(scalar))
        return replace(self, coeffs=self.coeffs * scalar, real=real)

    __rmul__ = __mul__


def _check_compatible(a, b):
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    if getattr(a, "components", 1) != getattr(b, "components", 1):
        raise ValueError("component counts differ")


def zeros_like_field(grid: TorusGrid, components: int = 1, real: bool = True,
                     plate: bool = False):
    if plate:
        return PlateField(grid, np.zeros((grid.n_t, grid.n_x, grid.n_x), complex), real)
    shape = (grid.n_t, grid.n_x, grid.n_x, grid.n_z + 1)
    if components > 1:
        shape += (components,)
    return SpectralField(grid, np.zeros(shape, complex), components, real)


# ---- transforms ------------------------------------------------------------


def forward_transform(grid: TorusGrid, samples: np.ndarray,
                      components: int | None = None) -> SpectralField:
    """Average-normalized analysis of nodal samples.

    samples shape: (N_t, N_x, N_x, N_z + 1[, components]) indexed by the
    uniform time/lateral lattice and the Chebyshev nodes.
    """
    samples = np.asarray(samples)
    if components is None:
        components = samples.shape[4] if samples.ndim == 5 else 1
    want_ndim = 5 if components > 1 else 4
    if samples.ndim != want_ndim:
        raise ValueError(f"expected {want_ndim}-d samples, got shape {samples.shape}")
    real = np.isrealobj(samples)
    coeffs = _to_coeffs(samples.astype(complex))
    if real:
        coeffs = _symmetrize(coeffs)  # keep the symmetry exact, not just close
    return SpectralField(grid, coeffs, components, real)


def inverse_transform(field: SpectralField) -> np.ndarray:
    """Synthesis back to nodal samples (complex; tiny imaginary part if real)."""
    return _to_samples(field.coeffs)


def physical_samples(field) -> np.ndarray:
    """Real-part synthesis for real-flagged fields, complex otherwise."""
    samples = _to_samples(field.coeffs)
    return samples.real if field.real else samples


def forward_transform_plate(grid: TorusGrid, samples: np.ndarray) -> PlateField:
    samples = np.asarray(samples)
    if samples.ndim != 3:
        raise ValueError(f"expected 3-d plate samples, got shape {samples.shape}")
    real = np.isrealobj(samples)
    coeffs = _to_coeffs(samples.astype(complex))
    if real:
        coeffs = _symmetrize(coeffs)
    return PlateField(grid, coeffs, real)


def inverse_transform_plate(field: PlateField) -> np.ndarray:
    return _to_samples(field.coeffs)


def is_conjugate_symmetric(coeffs: np.ndarray, tol: float = 1e-12) -> bool:
    dev = np.max(np.abs(coeffs - _symmetrize(coeffs)))
    scale = max(np.max(np.abs(coeffs)), 1e-300)
    return bool(dev <= tol * scale)


# ---- projections and traces -------------------------------------------------


def project_steady(field):
    """Keep only the k = 0 plane (time average in coefficient space)."""
    out = field.copy()
    mid = (field.grid.n_t - 1) // 2
    keep = out.coeffs[mid].copy()
    out.coeffs[:] = 0.0
    out.coeffs[mid] = keep
    return out


def project_oscillatory(field):
    """Zero the k = 0 plane; complement of project_steady."""
    out = field.copy()
    mid = (field.grid.n_t - 1) // 2
    out.coeffs[mid] = 0.0
    return out


def trace_bottom(field: SpectralField, component: int | None = None) -> PlateField:
    """Restriction to the plate face x3 = 0 (node 0)."""
    coeffs = field.coeffs[..., 0, :] if field.components > 1 else field.coeffs[..., 0]
    if field.components > 1:
        if component is None:
            raise ValueError("vector field trace needs a component index")
        coeffs = coeffs[..., component]
    return PlateField(field.grid, coeffs.copy(), field.real)


def trace_top(field: SpectralField, component: int | None = None) -> PlateField:
    coeffs = field.coeffs[..., -1, :] if field.components > 1 else field.coeffs[..., -1]
    if field.components > 1:
        if component is None:
            raise ValueError("vector field trace needs a component index")
        coeffs = coeffs[..., component]
    return PlateField(field.grid, coeffs.copy(), field.real)


# ---- spectral derivatives ----------------------------------------------------


def _k_axis(field):
    g = field.grid
    shape = [1] * field.coeffs.ndim
    shape[0] = g.n_t
    return g.k_phys.reshape(shape)


def _xi_axis(field, which: int):
    g = field.grid
    shape = [1] * field.coeffs.ndim
    shape[which] = g.n_x
    return g.xi_phys.reshape(shape)


def dt(field):
    """Time derivative (multiplication by i k)."""
    out = field.copy()
    out.coeffs = out.coeffs * (1j * _k_axis(field))
    return out


def dx(field, direction: int):
    """Lateral derivative along x1 (direction 1) or x2 (direction 2)."""
    if direction not in (1, 2):
        raise ValueError("lateral direction must be 1 or 2")
    out = field.copy()
    out.coeffs = out.coeffs * (1j * _xi_axis(field, direction))
    return out


def dx3(field: SpectralField, order: int = 1) -> SpectralField:
    """Layer derivative via the collocation matrix."""
    d = field.grid.dmat(order)
    out = field.copy()
    if field.components > 1:
        out.coeffs = np.einsum("ij,txyjc->txyic", d, field.coeffs)
    else:
        out.coeffs = np.einsum("ij,txyj->txyi", d, field.coeffs)
    return out


def gradient(field: SpectralField) -> SpectralField:
    """Spatial gradient of a scalar field, returned as a 3-component field."""
    if field.components != 1:
        raise ValueError("gradient expects a scalar field")
    parts = [dx(field, 1).coeffs, dx(field, 2).coeffs, dx3(field).coeffs]
    return SpectralField(field.grid, np.stack(parts, axis=-1), 3, field.real)


def divergence(field: SpectralField) -> SpectralField:
    """Spatial divergence of a 3-component field."""
    if field.components != 3:
        raise ValueError("divergence expects a 3-component field")
    c = field.coeffs
    out = (dx(SpectralField(field.grid, c[..., 0], 1, False), 1).coeffs
           + dx(SpectralField(field.grid, c[..., 1], 1, False), 2).coeffs
           + dx3(SpectralField(field.grid, c[..., 2], 1, False)).coeffs)
    return SpectralField(field.grid, out, 1, field.real)


def laplacian(field: SpectralField) -> SpectralField:
    """Full spatial Laplacian (lateral symbol plus layer collocation)."""
    g = field.grid
    xi_sq = g.xi_norm_sq()
    shape = [1] * field.coeffs.ndim
    shape[1] = shape[2] = g.n_x
    xi_sq = xi_sq.reshape(shape)
    lap = -xi_sq * field.coeffs + dx3(field, 2).coeffs
    return SpectralField(g, lap, field.components, field.real)


def lateral_gradient_plate(field: PlateField):
    """(d/dx1, d/dx2) of a plate field as two plate fields."""
    g = field.grid
    xi = g.xi_phys
    g1 = field.coeffs * (1j * xi[None, :, None])
    g2 = field.coeffs * (1j * xi[None, None, :])
    return (PlateField(g, g1, False), PlateField(g, g2, False))


def lateral_laplacian_plate(field: PlateField) -> PlateField:
    g = field.grid
    out = field.copy()
    out.coeffs = out.coeffs * (-g.xi_norm_sq()[None, :, :])
    return out


def dt_plate(field: PlateField) -> PlateField:
    g = field.grid
    out = field.copy()
    out.coeffs = out.coeffs * (1j * g.k_phys[:, None, None])
    return out


# ---- dealiased products -------------------------------------------------------


def _next_odd(n: int) -> int:
    return n if n % 2 == 1 else n + 1


def padded_sizes(grid: TorusGrid, factor: float = 1.5) -> tuple[int, int]:
    """Lattice sizes large enough to form quadratic products alias-free."""
    half_t = (grid.n_t - 1) // 2
    half_x = (grid.n_x - 1) // 2
    m_t = _next_odd(max(grid.n_t, int(np.ceil(factor * 2 * half_t + 1))))
    m_x = _next_odd(max(grid.n_x, int(np.ceil(factor * 2 * half_x + 1))))
    return m_t, m_x


def pad_coeffs(coeffs: np.ndarray, grid: TorusGrid, m_t: int, m_x: int) -> np.ndarray:
    """Embed centered coefficients into a larger centered lattice."""
    shape = list(coeffs.shape)
    shape[0], shape[1], shape[2] = m_t, m_x, m_x
    out = np.zeros(shape, dtype=complex)
    ot = (m_t - grid.n_t) // 2
    ox = (m_x - grid.n_x) // 2
    out[ot:ot + grid.n_t, ox:ox + grid.n_x, ox:ox + grid.n_x, ...] = coeffs
    return out


def truncate_coeffs(coeffs: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """Centered truncation back onto the grid lattice."""
    m_t, m_x = coeffs.shape[0], coeffs.shape[1]
    ot = (m_t - grid.n_t) // 2
    ox = (m_x - grid.n_x) // 2
    return coeffs[ot:ot + grid.n_t, ox:ox + grid.n_x, ox:ox + grid.n_x, ...].copy()


def pad_to_samples(coeffs: np.ndarray, grid: TorusGrid, m_t: int, m_x: int) -> np.ndarray:
    """Synthesize on the padded lattice (same Chebyshev nodes)."""
    return _to_samples(pad_coeffs(coeffs, grid, m_t, m_x))


def samples_to_truncated(samples: np.ndarray, grid: TorusGrid,
                         real: bool) -> np.ndarray:
    """Analyze padded-lattice samples and truncate to the grid lattice."""
    coeffs = truncate_coeffs(_to_coeffs(samples), grid)
    if real:
        coeffs = _symmetrize(coeffs)
    return coeffs
