"""Forward measurement model: windowed illumination, blockwise DFT, noise."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .geometry import IlluminationScheme, shifted_probe

__all__ = [
    "DARK_PROBE_FRACTION",
    "DegenerateModelError",
    "ForwardModel",
    "NoiseSpec",
    "add_noise",
    "dft2",
]

# probe pixels below this fraction of the probe peak count as dark when
# accumulating overlap weights, so Q*Q cannot pick up meaningless
# 1e-24 scale entries
DARK_PROBE_FRACTION = 1e-12


class DegenerateModelError(ValueError):
    """Raised when some window-covered pixel receives zero overlap weight."""


def dft2(frames: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Unitary 2-D DFT over the trailing two axes, positive-exponent forward.

    The forward transform is (1/m) * sum_r f(r) exp(+2j*pi*k.r/m) with the
    zero-frequency coefficient at index (0, 0); inverse=True applies the
    adjoint. Round trips are exact to floating point.
    """
    if inverse:
        return np.fft.fft2(frames, norm="ortho")
    return np.fft.ifft2(frames, norm="ortho")


class ForwardModel:
    """Windowed-DFT measurement operator for one scheme and lens.

    Precomputes the per-frame probes (the lens resampled at each fractional
    scan offset), integer window corners, and the overlap weights: the
    diagonal of Q*Q, i.e. the squared probe magnitudes accumulated over all
    windows. Raises DegenerateModelError if any pixel under a window ends up
    with zero weight.
    """

    def __init__(self, scheme: IlluminationScheme, lens: np.ndarray):
        lens = np.ascontiguousarray(lens, dtype=np.complex128)
        if lens.shape != (scheme.m, scheme.m):
            raise ValueError(
                f"lens shape {lens.shape} does not match window size m={scheme.m}"
            )
        self.scheme = scheme
        self.lens = lens
        self.anchors = np.ascontiguousarray(scheme.anchors)
        count = scheme.frame_count
        probes = np.empty((count, scheme.m, scheme.m), dtype=np.complex128)
        for k, frac in enumerate(scheme.fractions):
            probes[k] = shifted_probe(lens, (frac[0], frac[1]))
        peak = np.abs(probes).max()
        if peak > 0.0:
            probes[np.abs(probes) < DARK_PROBE_FRACTION * peak] = 0.0
        self.probes = probes
        n = scheme.n
        covered = np.zeros((n, n), dtype=bool)
        for ay, ax in self.anchors:
            covered[ay:ay + scheme.m, ax:ax + scheme.m] = True
        self.covered = covered
        weights = _kernels.scatter(probes, probes, self.anchors, n).real
        dead = covered & (weights == 0.0)
        if dead.any():
            where = np.argwhere(dead)[0]
            raise DegenerateModelError(
                f"{dead.sum()} window-covered pixels have zero overlap weight, "
                f"first at ({where[0]}, {where[1]})"
            )
        self.overlap_weights = weights
        inv = np.zeros_like(weights)
        np.divide(1.0, weights, out=inv, where=covered)
        self._inv_weights = inv

    @property
    def frame_count(self) -> int:
        return self.scheme.frame_count

    @property
    def n(self) -> int:
        return self.scheme.n

    @property
    def m(self) -> int:
        return self.scheme.m

    def extract(self, image: np.ndarray) -> np.ndarray:
        """Apply Q: probe-weighted windows of the object, shape (K, m, m)."""
        image = np.ascontiguousarray(image, dtype=np.complex128)
        return _kernels.gather(image, self.probes, self.anchors)

    def scatter_adjoint(self, frames: np.ndarray) -> np.ndarray:
        """Apply Q*: accumulate conjugate-probe-weighted frames onto the grid."""
        frames = np.ascontiguousarray(frames, dtype=np.complex128)
        return _kernels.scatter(frames, self.probes, self.anchors, self.n)

    def apply_fq(self, image: np.ndarray) -> np.ndarray:
        """Windowed spectra F Q image, shape (K, m, m)."""
        return dft2(self.extract(image))

    def reconstruct(self, spectra: np.ndarray) -> np.ndarray:
        """Least-squares object estimate (Q*Q)^-1 Q* F* spectra.

        Pixels never touched by a window stay zero.
        """
        return self.scatter_adjoint(dft2(spectra, inverse=True)) * self._inv_weights

    def forward_measure(self, image: np.ndarray) -> np.ndarray:
        """Noiseless measured amplitudes |F Q image|, shape (K, m, m)."""
        return np.abs(self.apply_fq(image))


@dataclass(frozen=True)
class NoiseSpec:
    """Additive intensity-noise parameters: one Gaussian draw per pixel."""

    sigma_std: float
    seed: int

    def __post_init__(self):
        if self.sigma_std < 0:
            raise ValueError("sigma_std must be nonnegative")


def add_noise(amps: np.ndarray, spec: NoiseSpec) -> tuple[np.ndarray, float]:
    """Perturb measured amplitudes with Gaussian intensity noise.

    Draws sigma ~ N(0, sigma_std^2) i.i.d. per pixel and returns
    sqrt(|amps^2 + sigma * amps|) together with the realized relative noise
    level ||noisy - amps|| / ||noisy|| (zero when the output vanishes).
    """
    rng = np.random.default_rng(spec.seed)
    sigma = rng.normal(0.0, spec.sigma_std, size=amps.shape)
    noisy = np.sqrt(np.abs(amps * amps + sigma * amps))
    denom = float(np.linalg.norm(noisy))
    level = float(np.linalg.norm(noisy - amps)) / denom if denom > 0 else 0.0
    return noisy, level
