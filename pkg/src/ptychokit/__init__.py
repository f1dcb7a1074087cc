"""Ptychographic phase retrieval: simulate overlapping-window diffraction
measurements and reconstruct the object with projection-based solvers.

The compiled kernel extension is optional; a pure numpy fallback with
identical arithmetic is selected at import when the extension is missing or
PTYCHOKIT_NO_EXTENSION is set.
"""

from ._kernels import backend_name
from .forward import DegenerateModelError, ForwardModel, NoiseSpec, add_noise, dft2
from .geometry import IlluminationScheme, build_scheme, shifted_probe, validate_scheme
from .lens import LensSpec, make_blr_lens, make_small_lens
from .metrics import ConvergenceTrace, MetricsRow, compute_metrics, global_phase_align
from .phantom import make_phantom
from .projectors import project_amplitude, project_range, truncation_mask
from .solvers import SolverConfig, SolverResult, run
from .spectral import ConnectionGraph, connection_spectral_init, truncated_spectral_init

__version__ = "0.1.0"

__all__ = [
    "ConnectionGraph",
    "ConvergenceTrace",
    "DegenerateModelError",
    "ForwardModel",
    "IlluminationScheme",
    "LensSpec",
    "MetricsRow",
    "NoiseSpec",
    "SolverConfig",
    "SolverResult",
    "__version__",
    "add_noise",
    "backend_name",
    "build_scheme",
    "compute_metrics",
    "connection_spectral_init",
    "dft2",
    "global_phase_align",
    "make_blr_lens",
    "make_phantom",
    "make_small_lens",
    "project_amplitude",
    "project_range",
    "run",
    "shifted_probe",
    "truncated_spectral_init",
    "truncation_mask",
    "validate_scheme",
]
