"""Numerical laboratory for a singularly perturbed four-well inclusion energy.

Builds nested laminates on periodic grids, evaluates their elastic and
surface energies exactly in frequency space, reproduces the stretched
exponential scaling law by parameter sweeps, and exercises the cone
bootstrap behind the matching lower bound.
"""

from .core import (
    A1, A2, A3, A4, B1, B2, CORNERS, COUPLING, P1, P2, P3, P4, WELLS,
    CouplingPolys, DiagMatrix, chi_diag, dist_to_K, eval_g, eval_h,
    in_qc_hull, phase_matrix, project_to_K,
)
from .energy import (
    EnergyBreakdown, direct_minimum, elastic_energy, elastic_energy_direct,
    h_minus1_seminorms, minimize_displacement, surface_energy, total_energy,
)
from .fields import (
    DisplacementField, Grid, PhaseField, ScalarField, SpectralField,
    forward, inverse, mean, read_phase_field, to_diag_fields, write_phase_field,
)
from .laminate import (
    LaminateSpec, LaminateState, analytic_energy_estimate, build,
    build_displacement, build_first_order, decompose_F, refine,
)
from .cones import (
    BootstrapParams, BootstrapReport, ConeSpec, bootstrap, comparison_gap,
    lipschitz_gap, low_mode_bound_check, mu_schedule, residual, termination_m,
    truncate, verify_concentration,
)
from .scaling import (
    FitResult, RateParams, SweepRecord, fit_scaling, fixed_order_envelope,
    optimize_params, rate_functions, surrogate, surrogate_full, sweep,
)

__version__ = "0.1.0"
