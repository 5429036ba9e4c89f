"""Contour-field dynamics for smooth 2D vortex systems.

Evolves the level curves of smooth planar vortices in polar contour
variables zeta(phi, w) = rho^2/2, together with the classical uniform-patch
limit, a weak-satellite reduced model, a perturbation pipeline around the
patch limit, invariant monitoring, and independent analytic/spectral oracles.
"""

from .geometry import (
    GriddedVorticity,
    PatchContour,
    PolarContourField,
    VortexRegion,
    VortexSystem,
    area_function,
    contour_field_from_sampler,
    ellipse_radius,
    gaussian_region,
    load_region,
    reconstruct_vorticity,
    save_region,
    scaled_profile_region,
)
from .kernels import (
    QuadratureSpec,
    hamiltonian,
    kernel_k,
    operator_n,
    patch_energy,
    patch_stream,
    peak_velocity,
    stream_at_point,
    stream_polar,
)
from .dynamics import (
    PerturbationState,
    SatelliteScenario,
    SimState,
    make_perturbation_state,
    perturbation_solve,
    run_satellite,
    solve_theta_kj,
    step_dipole,
    step_monopole,
    step_patch,
)
from .invariants import InvariantReport, casimir, count_level_components, first_moment, locate_critical_points, report
from .oracles import (
    SpectralState,
    compare_contours,
    kirchhoff_state,
    point_vortex_system,
    spectral_euler_step,
)

__version__ = "0.1.0"
