"""Spectral solver for a time-periodic viscous fluid layer coupled to a
damped elastic plate, with validation oracles and a batch CLI.

The fluid occupies a slab over a lateral torus; its bottom face is a
vibrating plate driven by the fluid traction.  Everything is discretized
in frequency space: Fourier in time and the lateral directions, Chebyshev
collocation across the layer.
"""

from .grid import TorusGrid, cheb_nodes, cheb_eval, cheb_values_to_coeffs
from .fields import (
    PlateField,
    SpectralField,
    divergence,
    dt,
    dt_plate,
    dx,
    dx3,
    forward_transform,
    forward_transform_plate,
    gradient,
    inverse_transform,
    inverse_transform_plate,
    laplacian,
    lateral_gradient_plate,
    lateral_laplacian_plate,
    physical_samples,
    project_oscillatory,
    project_steady,
    trace_bottom,
    trace_top,
    zeros_like_field,
)
from .norms import (
    NormSpec,
    l2_norm,
    mixed_lr_lp_norm,
    negative_norm,
    s_norm,
    sobolev_norm,
    x_norm,
    y_norm,
)
from .io import read_field, read_field_json, write_field, write_field_json
from .lift import IncompatibleDataError, LiftResult, lift_divergence, \
    lift_estimate_check
from .modes import (
    DEFAULT_PARAMS,
    LinearSolution,
    ModeSolution,
    SolverParams,
    linear_residuals,
    mode_residuals,
    mode_system_matrix,
    plate_symbol_damped,
    solve_linear_full,
    solve_oscillatory_mode,
    solve_steady_mode,
    synthesize,
)
from .halfspace import (
    MultiplierSample,
    ResonanceRow,
    ScanReport,
    boundedness_scan,
    coupled_plate_symbol,
    halfspace_profiles,
    halfspace_residuals,
    is_resonant_lattice_point,
    multiplier_M,
    multiplier_sample,
    q0_symbol,
    resonance_report,
    undamped_multiplier,
    weighted_multiplier,
)
from .nonlinear import (
    DeformationData,
    DegenerateDeformationError,
    NonlinearTerms,
    PicardConfig,
    PicardDivergenceError,
    PicardResult,
    SmallnessReport,
    compose_forcing,
    compute_nonlinear_terms,
    deform_inverse,
    deform_map,
    deformation_data,
    e_matrix,
    nonlinear_bound_ratios,
    nonlinear_residual,
    normal_vector,
    picard_solve,
    plate_eval,
    smallness_check,
)
from .oracles import (
    ManufacturedCase,
    cross_validate_linear,
    embedding_ratio,
    fd_check,
    make_manufactured,
)

__version__ = "0.1.0"
