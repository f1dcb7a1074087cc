"""Convergence analysis for alternating projections on amplitude constraints.

Covers the misfit objective and its derivatives, the branch structure of the
residual map (I - P_a), per-iteration contraction diagnostics, and a dense
random-frame lab that reproduces the projector geometry with plain linear
algebra.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .metrics import global_phase_align
from .projectors import project_amplitude

__all__ = [
    "GenericFrameLab",
    "LabRun",
    "PolarVector",
    "RegionLabel",
    "ResidualPreimage",
    "ResidualRatios",
    "amplitude_misfit",
    "classify_region",
    "invert_residual_scalar",
    "misfit_curvature",
    "misfit_gradient",
    "phase_step_bound",
    "residual_ratios",
    "stagnation_sphere_gap",
]

ZERO_MAGNITUDE = 1e-300
RATIO_FLOOR = 1e-14


def amplitude_misfit(spectra: np.ndarray, amps: np.ndarray) -> float:
    """Half squared distance to the amplitude torus: 0.5 * ||(|spectra| - amps)||^2."""
    gap = np.abs(spectra) - amps
    return 0.5 * float(np.sum(gap * gap))


def misfit_gradient(spectra: np.ndarray, amps: np.ndarray) -> np.ndarray:
    """Gradient of amplitude_misfit, equal to 0.5 * (I - P_a) spectra.

    The directional derivative along w is 2 * Re<grad, w>. Requires every
    entry magnitude to clear 1e-300; the modulus is not differentiable at 0.
    """
    mag = np.abs(spectra)
    if mag.min() < ZERO_MAGNITUDE:
        raise ValueError("gradient undefined: some spectra entries are zero")
    return 0.5 * (spectra - project_amplitude(amps, spectra))


def misfit_curvature(spectra: np.ndarray, amps: np.ndarray, direction: np.ndarray) -> float:
    """Second directional derivative of amplitude_misfit along `direction`.

    In polar terms sum_j b_j^2 (1 - (a_j/c_j) sin^2(theta_j - phi_j)) with
    c, phi from spectra and b, theta from the direction; evaluated here via
    Im(direction * conj(spectra)) to avoid explicit angles.
    """
    mag = np.abs(spectra)
    if mag.min() < ZERO_MAGNITUDE:
        raise ValueError("curvature undefined: some spectra entries are zero")
    b_sq = direction.real**2 + direction.imag**2
    cross = (direction * np.conj(spectra)).imag
    return float(np.sum(b_sq) - np.sum(amps * cross * cross / mag**3))


@dataclass(frozen=True)
class PolarVector:
    """Magnitude/phase split of a complex stack; zero entries carry phase 0."""

    amplitudes: np.ndarray
    phases: np.ndarray

    def to_complex(self) -> np.ndarray:
        return self.amplitudes * np.exp(1j * self.phases)

    @classmethod
    def from_complex(cls, values: np.ndarray) -> "PolarVector":
        mag = np.abs(values)
        phases = np.where(mag >= ZERO_MAGNITUDE, np.angle(values), 0.0)
        return cls(amplitudes=mag, phases=phases)


@dataclass(frozen=True)
class ResidualPreimage:
    """Solutions eta of (I - P_a) eta = residual for one scalar entry.

    kind is "unique" (one point), "pair" (two points), or "circle" (the whole
    circle of the given radius, when the residual vanishes).
    """

    kind: str
    points: tuple[complex, ...]
    radius: float | None = None


def invert_residual_scalar(residual: complex, amp: float) -> ResidualPreimage:
    """Invert the scalar residual map z -> z - amp * z/|z|.

    With r = |residual|: r >= amp gives the unique preimage (r + amp) * rhat;
    0 < r < amp gives the pair (r +- amp) * rhat; residual = 0 gives the full
    circle of radius amp. The branch structure needs amp > 0.
    """
    if amp <= 0:
        raise ValueError("amplitude must be positive")
    z = complex(residual)
    r = abs(z)
    if r == 0.0:
        return ResidualPreimage(kind="circle", points=(), radius=amp)
    unit = z / r
    if r >= amp:
        return ResidualPreimage(kind="unique", points=((r + amp) * unit,))
    return ResidualPreimage(kind="pair", points=((r + amp) * unit, (r - amp) * unit))


@dataclass(frozen=True)
class RegionLabel:
    """Branch classification of a residual stack under the inverse map.

    kind "degenerate": some entry sits on the torus (|eta| = amp) where the
    inverse is a continuum. kind "paired": pair_count entries admit two
    preimages (magnitudes strictly inside (0, amp) or (amp, 2 amp)). kind
    "unique": every entry inverts uniquely.
    """

    kind: str
    pair_count: int


def classify_region(residuals: np.ndarray, amps: np.ndarray, rel_tol: float = 1e-12) -> RegionLabel:
    """Classify a residual stack by how many entries invert ambiguously."""
    mag = np.abs(np.asarray(residuals))
    amps = np.asarray(amps, dtype=np.float64)
    if mag.shape != amps.shape:
        raise ValueError(f"shape mismatch: {mag.shape} vs {amps.shape}")
    positive = amps > 0.0
    boundary = positive & (np.abs(mag - amps) <= rel_tol * amps)
    if boundary.any():
        return RegionLabel(kind="degenerate", pair_count=0)
    doubled = positive & (mag > 0.0) & (mag < 2.0 * amps) & (mag != amps)
    count = int(doubled.sum())
    if count == 0:
        return RegionLabel(kind="unique", pair_count=0)
    return RegionLabel(kind="paired", pair_count=count)


def stagnation_sphere_gap(residuals: np.ndarray, amps: np.ndarray) -> float:
    """Signed distance from the stagnation sphere identity.

    Stalled alternating projections satisfy sum (|eta| - a/2)^2 = sum a^2 / 4;
    returns the left side minus the right side.
    """
    mag = np.abs(np.asarray(residuals))
    amps = np.asarray(amps, dtype=np.float64)
    centered = mag - 0.5 * amps
    return float(np.sum(centered * centered) - 0.25 * np.sum(amps * amps))


def phase_step_bound(prev: np.ndarray, curr: np.ndarray, amps: np.ndarray) -> tuple[float, float]:
    """Both sides of the per-step phase-motion bound for consecutive iterates.

    Returns (lhs, rhs) with lhs = 2 sum a b_curr (1 - cos dphi) and
    rhs = sum (a - b_prev)^2 - sum (a - b_curr)^2; alternating-projection
    steps satisfy lhs <= rhs up to rounding.
    """
    pp = PolarVector.from_complex(prev)
    pc = PolarVector.from_complex(curr)
    amps = np.asarray(amps, dtype=np.float64)
    lhs = 2.0 * float(np.sum(amps * pc.amplitudes * (1.0 - np.cos(pc.phases - pp.phases))))
    prev_gap = amps - pp.amplitudes
    curr_gap = amps - pc.amplitudes
    rhs = float(np.sum(prev_gap * prev_gap) - np.sum(curr_gap * curr_gap))
    return lhs, rhs


@dataclass(frozen=True)
class ResidualRatios:
    """Per-iteration contraction factors of an alternating-projection run.

    data_residuals[l] is the distance from iterate l to the amplitude torus;
    range_residuals[l] the distance from the half step (torus projection of
    iterate l) back to the range. The ratio arrays hold successive quotients,
    NaN where the denominator fell below 1e-14 * ||amps||; converged_at is the
    first such index (None if never)."""

    data_residuals: np.ndarray
    range_residuals: np.ndarray
    data_ratios: np.ndarray
    range_ratios: np.ndarray
    converged_at: int | None


def residual_ratios(iterates, amps, range_projector) -> ResidualRatios:
    """Contraction diagnostics along a sequence of iterates."""
    amps = np.asarray(amps, dtype=np.float64)
    floor = RATIO_FLOOR * float(np.linalg.norm(amps))
    data = []
    rng_res = []
    for spectra in iterates:
        half = project_amplitude(amps, spectra)
        data.append(float(np.linalg.norm(half - spectra)))
        rng_res.append(float(np.linalg.norm(range_projector(half) - half)))
    data = np.array(data)
    rng_res = np.array(rng_res)

    def ratios(series):
        out = np.full(series.size, np.nan)
        for l in range(1, series.size):
            if series[l - 1] >= floor:
                out[l] = series[l] / series[l - 1]
        return out

    converged = None
    below = np.nonzero(data < floor)[0]
    if below.size:
        converged = int(below[0])
    return ResidualRatios(
        data_residuals=data,
        range_residuals=rng_res,
        data_ratios=ratios(data),
        range_ratios=ratios(rng_res),
        converged_at=converged,
    )


@dataclass(frozen=True)
class LabRun:
    """Trajectory record from the random-frame lab."""

    iterates: tuple[np.ndarray, ...]
    data_residuals: np.ndarray
    range_residuals: np.ndarray
    aligned_errors: np.ndarray | None


class GenericFrameLab:
    """Dense random-frame testbed for the alternating-projection geometry.

    Draws an i.i.d. complex Gaussian frame matrix (resampled while its
    condition number exceeds 1e12) and exposes the same projector pair the
    imaging model provides, with a QR factor standing in for the windowed DFT
    range. Warns when the measurement count is below 4 * signal_dim - 2, the
    generic threshold for injectivity up to global phase.
    """

    def __init__(self, signal_dim: int, measurement_dim: int, seed: int = 0):
        if signal_dim < 1 or measurement_dim < signal_dim:
            raise ValueError("need measurement_dim >= signal_dim >= 1")
        if measurement_dim < 4 * signal_dim - 2:
            warnings.warn(
                f"measurement_dim {measurement_dim} below the generic phase-retrieval "
                f"threshold {4 * signal_dim - 2}",
                stacklevel=2,
            )
        rng = np.random.default_rng(seed)
        for _ in range(50):
            frame = (
                rng.standard_normal((measurement_dim, signal_dim))
                + 1j * rng.standard_normal((measurement_dim, signal_dim))
            ) / np.sqrt(2.0)
            if np.linalg.cond(frame) <= 1e12:
                break
        else:
            raise RuntimeError("could not draw a well-conditioned frame")
        self.frame = frame
        self._basis = np.linalg.qr(frame)[0]

    def measure(self, signal: np.ndarray) -> np.ndarray:
        """Noiseless amplitudes |frame @ signal|."""
        return np.abs(self.frame @ signal)

    def project_range(self, vec: np.ndarray) -> np.ndarray:
        """Orthogonal projection onto the frame's column span."""
        return self._basis @ (self._basis.conj().T @ vec)

    def run_ap(
        self,
        amps: np.ndarray,
        start: np.ndarray,
        iterations: int,
        truth_spectra: np.ndarray | None = None,
    ) -> LabRun:
        """Alternate torus and range projections, recording residuals per iterate."""
        amps = np.asarray(amps, dtype=np.float64)
        scale = float(np.linalg.norm(amps))
        iterates = [np.asarray(start, dtype=np.complex128)]
        for _ in range(iterations):
            iterates.append(self.project_range(project_amplitude(amps, iterates[-1])))
        data = np.empty(len(iterates))
        rng_res = np.empty(len(iterates))
        aligned = np.empty(len(iterates)) if truth_spectra is not None else None
        for l, spectra in enumerate(iterates):
            half = project_amplitude(amps, spectra)
            data[l] = np.linalg.norm(half - spectra)
            rng_res[l] = np.linalg.norm(self.project_range(half) - half)
            if aligned is not None:
                _, dist = global_phase_align(spectra, truth_spectra)
                aligned[l] = dist / scale
        return LabRun(
            iterates=tuple(iterates),
            data_residuals=data,
            range_residuals=rng_res,
            aligned_errors=aligned,
        )
