"""Convergence diagnostics: phase-aligned error and per-iteration residuals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .projectors import project_amplitude

__all__ = [
    "ConvergenceTrace",
    "MetricsRow",
    "compute_metrics",
    "global_phase_align",
]


def global_phase_align(u: np.ndarray, v: np.ndarray) -> tuple[float, float]:
    """Best global phase t and distance min_t ||u - exp(1j*t) v||.

    The optimal phase satisfies exp(1j*t) <u, v> = |<u, v>| in closed form;
    the distance is then evaluated as the norm of the explicit difference.
    The algebraically equivalent sqrt(||u||^2 + ||v||^2 - 2|<u, v>|) form
    cancels catastrophically and floors near sqrt(machine eps) relative, far
    too coarse for convergence thresholds around 1e-8. When the overlap
    vanishes t is reported as 0.
    """
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape:
        raise ValueError(f"shape mismatch: {u.shape} vs {v.shape}")
    overlap = complex(np.vdot(u, v))
    t = 0.0 if overlap == 0 else float(-np.angle(overlap))
    dist = float(np.linalg.norm(u - np.exp(1j * t) * v))
    return t, dist


@dataclass(frozen=True)
class MetricsRow:
    """One iteration's diagnostics, each normalized by ||amps||.

    eps_a: distance to the amplitude torus. eps_fq: distance to the operator
    range. eps_afq: gap between the two projections. eps_0: phase-aligned
    distance to the reference spectra (None without a reference). eps_delta:
    step to the next iterate (None on the final row).
    """

    iteration: int
    eps_a: float
    eps_fq: float
    eps_afq: float
    eps_0: float | None
    eps_delta: float | None


@dataclass(frozen=True)
class ConvergenceTrace:
    """Per-iteration metric rows; row i describes iterate i."""

    rows: tuple[MetricsRow, ...]
    amps_norm: float

    def __post_init__(self):
        for i, row in enumerate(self.rows):
            if row.iteration != i:
                raise ValueError(f"row {i} carries iteration {row.iteration}")

    def column(self, name: str) -> np.ndarray:
        """One metric across iterations, NaN where unavailable."""
        vals = [getattr(row, name) for row in self.rows]
        return np.array([np.nan if v is None else v for v in vals])


def compute_metrics(
    amps: np.ndarray,
    spectra: np.ndarray,
    range_projector,
    iteration: int = 0,
    next_spectra: np.ndarray | None = None,
    truth_spectra: np.ndarray | None = None,
) -> MetricsRow:
    """Diagnostics for one iterate; range_projector maps a stack to its projection."""
    scale = float(np.linalg.norm(amps))
    if scale == 0.0:
        raise ValueError("measured amplitudes are identically zero")
    on_torus = project_amplitude(amps, spectra)
    in_range = range_projector(spectra)
    eps_a = float(np.linalg.norm(on_torus - spectra)) / scale
    eps_fq = float(np.linalg.norm(in_range - spectra)) / scale
    eps_afq = float(np.linalg.norm(on_torus - in_range)) / scale
    eps_0 = None
    if truth_spectra is not None:
        _, dist = global_phase_align(spectra, truth_spectra)
        eps_0 = dist / scale
    eps_delta = None
    if next_spectra is not None:
        eps_delta = float(np.linalg.norm(next_spectra - spectra)) / scale
    return MetricsRow(
        iteration=iteration,
        eps_a=eps_a,
        eps_fq=eps_fq,
        eps_afq=eps_afq,
        eps_0=eps_0,
        eps_delta=eps_delta,
    )
