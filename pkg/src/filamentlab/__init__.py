"""filamentlab: numerical laboratory for self-similar vortex-filament flows.

The package reproduces the formation (backward in time) and emergence
(forward in time) of the corner singularity of the one-parameter family
of self-similar solutions of the filament flow X_t = X_s ^ X_ss and its
tangent flow T_t = T ^ T_ss, on the sphere (Euclidean signature) and on
the hyperbolic plane, with a uniform-grid finite-difference solver and a
Chebyshev spectral solver under several boundary-condition strategies.
"""

from .chebyshev import (ChebyshevGrid, cheb_antiderivative, cheb_derivative,
                        cheb_inverse, cheb_transform, spectral_filter,
                        spectral_interpolate)
from .diagnostics import (CurvatureProfile, RunReport, curvature_error,
                          curvature_from_T, curvature_from_z,
                          energy_trapezoid, frame_from_z,
                          staggered_dirichlet_energy, torsion_from_z)
from .fd import (FdBcKind, FdBoundaryCondition, TFieldState, UniformGrid,
                 fd_apply_bc, fd_rhs, fd_run_backward, fd_run_forward,
                 fd_step)
from .geometry import (Metric, NormTarget, dot_pm, normalize, stereo_inverse,
                       stereo_project, wedge_pm)
from .profiles import (AsymptoticConstants, CurveSamples, FrameProfile,
                       SelfSimilarParams, ZProfile, closed_form_A3,
                       extract_asymptotics, frenet_frames_at,
                       integrate_frenet_profile, integrate_profile_z,
                       reconstruct_X, z_profile_at)
from .spectral import (SpectralBcKind, ZFieldState, adaptive_refine,
                       bootstrap_first_step, sbdf2_step,
                       spectral_run_backward, spectral_run_forward,
                       spectral_run_forward_two_stage)

__version__ = "0.1.0"

__all__ = [
    "AsymptoticConstants", "ChebyshevGrid", "CurvatureProfile",
    "CurveSamples", "FdBcKind", "FdBoundaryCondition", "FrameProfile",
    "Metric", "NormTarget", "RunReport", "SelfSimilarParams",
    "SpectralBcKind", "TFieldState", "UniformGrid", "ZFieldState",
    "ZProfile", "adaptive_refine", "bootstrap_first_step",
    "cheb_antiderivative", "cheb_derivative", "cheb_inverse",
    "cheb_transform", "closed_form_A3", "curvature_error",
    "curvature_from_T", "curvature_from_z", "dot_pm", "energy_trapezoid",
    "extract_asymptotics", "fd_apply_bc", "fd_rhs", "fd_run_backward",
    "fd_run_forward", "fd_step", "frame_from_z", "frenet_frames_at",
    "integrate_frenet_profile", "integrate_profile_z", "normalize",
    "reconstruct_X", "sbdf2_step", "spectral_filter",
    "spectral_interpolate", "spectral_run_backward", "spectral_run_forward",
    "spectral_run_forward_two_stage", "staggered_dirichlet_energy",
    "stereo_inverse", "stereo_project", "torsion_from_z", "wedge_pm",
    "z_profile_at",
]
