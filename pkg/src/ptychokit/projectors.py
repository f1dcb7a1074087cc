"""Projections used by the solvers: amplitude torus, operator range, truncation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .forward import ForwardModel

__all__ = [
    "TruncationMask",
    "project_amplitude",
    "project_range",
    "truncation_mask",
]


def project_amplitude(amps: np.ndarray, spectra: np.ndarray) -> np.ndarray:
    """Nearest stack with entrywise magnitudes amps; zero entries take phase 0.

    Entries of spectra with magnitude below 1e-300 are treated as zero and map
    to the real value amps there. Idempotent, and a no-op when the magnitudes
    already match.
    """
    amps = np.ascontiguousarray(amps, dtype=np.float64)
    spectra = np.ascontiguousarray(spectra, dtype=np.complex128)
    if amps.shape != spectra.shape:
        raise ValueError(f"shape mismatch: amps {amps.shape}, spectra {spectra.shape}")
    if amps.min(initial=0.0) < 0.0:
        raise ValueError("target amplitudes must be nonnegative")
    return _kernels.substitute_amplitude(amps, spectra)


def project_range(model: ForwardModel, spectra: np.ndarray) -> np.ndarray:
    """Orthogonal projection onto achievable spectra (windowed DFTs of images).

    Matrix free: per-frame adjoint DFT, conjugate-probe scatter, division by
    the overlap weights, probe-weighted extraction, forward DFT.
    """
    return model.apply_fq(model.reconstruct(spectra))


@dataclass(frozen=True)
class TruncationMask:
    """Keep/drop mask over a measurement stack with its amplitude threshold."""

    keep: np.ndarray
    threshold: float

    def apply(self, spectra: np.ndarray) -> np.ndarray:
        """Zero the dropped entries of a stack."""
        return np.where(self.keep, spectra, 0.0)

    @property
    def kept_fraction(self) -> float:
        return float(self.keep.mean())


def truncation_mask(amps: np.ndarray, percentile_keep: float) -> TruncationMask:
    """Mask keeping the strongest entries of the measured amplitudes.

    The threshold is the (1 - percentile_keep) quantile of the entries and the
    mask keeps strict exceedances, so roughly a percentile_keep fraction
    survives. percentile_keep = 1 keeps everything positive (threshold 0).
    """
    if not 0.0 < percentile_keep <= 1.0:
        raise ValueError("percentile_keep must lie in (0, 1]")
    amps = np.asarray(amps, dtype=np.float64)
    if percentile_keep >= 1.0:
        threshold = 0.0
    else:
        threshold = float(np.quantile(amps, 1.0 - percentile_keep))
    return TruncationMask(keep=amps > threshold, threshold=threshold)
