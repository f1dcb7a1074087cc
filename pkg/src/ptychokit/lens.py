"""Lens synthesis: annular-spectrum designs for the illumination probe."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .forward import dft2

__all__ = ["BlrDesignReport", "LensSpec", "annulus_indicator", "make_blr_lens", "make_small_lens"]


@dataclass(frozen=True)
class LensSpec:
    """Lens design parameters.

    kind "small": zero-phase annular spectrum (compact, symmetric probe).
    kind "blr": band-limited random probe, a seeded random-phase annular
    spectrum alternately squeezed onto a real-space focus disk. r_inner and
    r_outer are fractions of the Nyquist radius m/2; focus_radius is in
    pixels (defaults to 0.16 * m when omitted).
    """

    kind: str
    m: int
    r_inner: float = 0.2
    r_outer: float = 0.45
    focus_radius: float | None = None
    design_iters: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("small", "blr"):
            raise ValueError(f"unknown lens kind {self.kind!r}")
        if self.m < 2:
            raise ValueError("lens grid must be at least 2 pixels")
        if not 0.0 <= self.r_inner < self.r_outer <= 1.0:
            raise ValueError("need 0 <= r_inner < r_outer <= 1 (fractions of Nyquist)")
        if self.focus_radius is not None and self.focus_radius <= 0:
            raise ValueError("focus_radius must be positive")
        if self.design_iters < 1:
            raise ValueError("design_iters must be at least 1")

    @property
    def focus_radius_pixels(self) -> float:
        return float(self.focus_radius) if self.focus_radius is not None else 0.16 * self.m


def annulus_indicator(m: int, r_inner: float, r_outer: float) -> np.ndarray:
    """Indicator of r_inner * m/2 < |freq| <= r_outer * m/2 on the DFT grid.

    Frequencies are the signed aliases of indices 0..m-1 (DC at (0, 0), no
    shift), so the annulus wraps around the corners of the array.
    """
    signed = np.minimum(np.arange(m), m - np.arange(m)).astype(np.float64)
    radius = np.hypot(signed[:, None], signed[None, :])
    nyquist = m / 2.0
    return (radius > r_inner * nyquist) & (radius <= r_outer * nyquist)


def _focus_disk(m: int, radius: float) -> np.ndarray:
    center = (m - 1) / 2.0
    coords = np.arange(m) - center
    return np.hypot(coords[:, None], coords[None, :]) <= radius


def make_small_lens(spec: LensSpec) -> np.ndarray:
    """Unit-norm lens whose spectrum is a flat zero-phase annulus.

    The centro-symmetric indicator makes the returned probe real up to
    rounding.
    """
    if spec.kind != "small":
        raise ValueError("make_small_lens needs a spec with kind='small'")
    indicator = annulus_indicator(spec.m, spec.r_inner, spec.r_outer).astype(np.complex128)
    if not indicator.any():
        raise ValueError("annulus is empty at this grid size")
    lens = dft2(indicator, inverse=True)
    return lens / np.linalg.norm(lens)


@dataclass(frozen=True)
class BlrDesignReport:
    """Per-iteration residuals of the band-limited random lens design.

    focus_leak[t] is the fraction of probe energy outside the focus disk
    before the t-th support squeeze; annulus_gap[t] the relative distance of
    the subsequent spectrum from the flat annulus model. stalled flags a run
    of more than design_iters/2 consecutive non-improving focus residuals.
    """

    focus_leak: np.ndarray
    annulus_gap: np.ndarray
    stalled: bool


def make_blr_lens(spec: LensSpec) -> tuple[np.ndarray, BlrDesignReport]:
    """Band-limited random lens: seeded annular spectrum focused onto a disk.

    Alternates a real-space squeeze onto the focus disk with a Fourier-space
    restore of the flat annulus amplitude (phases kept), ending on the Fourier
    restore so the returned unit-norm lens is exactly band limited.
    """
    if spec.kind != "blr":
        raise ValueError("make_blr_lens needs a spec with kind='blr'")
    indicator = annulus_indicator(spec.m, spec.r_inner, spec.r_outer)
    if not indicator.any():
        raise ValueError("annulus is empty at this grid size")
    disk = _focus_disk(spec.m, spec.focus_radius_pixels)
    rng = np.random.default_rng(spec.seed)
    spectrum = indicator * np.exp(2j * np.pi * rng.random((spec.m, spec.m)))
    focus_leak = np.empty(spec.design_iters)
    annulus_gap = np.empty(spec.design_iters)
    for t in range(spec.design_iters):
        probe = dft2(spectrum, inverse=True)
        energy = float(np.sum(np.abs(probe) ** 2))
        outside = float(np.sum(np.abs(probe[~disk]) ** 2))
        focus_leak[t] = outside / energy if energy > 0 else 0.0
        probe = np.where(disk, probe, 0.0)
        raw = dft2(probe)
        mag = np.abs(raw)
        phase = np.where(mag > 0.0, raw / np.where(mag > 0.0, mag, 1.0), 1.0)
        spectrum = indicator * phase
        scale = float(np.linalg.norm(raw))
        annulus_gap[t] = (
            float(np.linalg.norm(raw - spectrum * (scale / np.sqrt(indicator.sum())))) / scale
            if scale > 0
            else 0.0
        )
    lens = dft2(spectrum, inverse=True)
    lens = lens / np.linalg.norm(lens)
    stall_limit = spec.design_iters // 2
    longest = run = 0
    for t in range(1, spec.design_iters):
        run = run + 1 if focus_leak[t] >= focus_leak[t - 1] else 0
        longest = max(longest, run)
    return lens, BlrDesignReport(
        focus_leak=focus_leak,
        annulus_gap=annulus_gap,
        stalled=longest > stall_limit,
    )
