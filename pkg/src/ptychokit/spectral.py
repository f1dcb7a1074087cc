"""Spectral initializers: phase synchronization over the frame-overlap graph."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .forward import ForwardModel, dft2
from .projectors import project_amplitude, project_range, truncation_mask

__all__ = [
    "ConnectionGraph",
    "PowerIterationResult",
    "ambiguity_kernel",
    "connection_spectral_init",
    "lens_spectrum_phase",
    "power_top_eigpair",
    "range_projector_block",
    "truncated_spectral_init",
]

VANISHING_SPECTRUM = 1e-12


@dataclass(frozen=True)
class PowerIterationResult:
    """Top eigenpair estimate: Rayleigh value, unit vector, convergence flag."""

    value: float
    vector: np.ndarray
    converged: bool
    iterations: int


def power_top_eigpair(
    apply_fn,
    shape: tuple[int, ...],
    seed: int = 0,
    tol: float = 1e-8,
    max_iter: int = 5000,
    check_pairs: int = 5,
) -> PowerIterationResult:
    """Power iteration for a Hermitian positive semidefinite operator.

    apply_fn maps an array of the given shape to one of the same shape.
    Self-adjointness is spot-checked on `check_pairs` random vector pairs
    before iterating (tolerance 1e-10); the loop starts from a seeded complex
    Gaussian vector and stops when the relative eigen-residual drops below
    tol, flagging the result unconverged after max_iter sweeps.
    """
    rng = np.random.default_rng(seed)

    def draw():
        v = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        return v / np.linalg.norm(v)

    for _ in range(check_pairs):
        x, y = draw(), draw()
        ax, ay = apply_fn(x), apply_fn(y)
        gap = abs(complex(np.vdot(ax, y)) - complex(np.vdot(x, ay)))
        scale = max(1.0, np.linalg.norm(ax), np.linalg.norm(ay))
        if gap > 1e-10 * scale:
            raise ValueError(f"operator is not self-adjoint: pairing gap {gap:.3e}")

    vec = draw()
    value = 0.0
    converged = False
    sweeps = 0
    for sweeps in range(1, max_iter + 1):
        image = apply_fn(vec)
        value = float(np.real(np.vdot(vec, image)))
        residual = float(np.linalg.norm(image - value * vec))
        if residual <= tol * max(abs(value), 1e-30):
            converged = True
            break
        norm = float(np.linalg.norm(image))
        if norm == 0.0:
            value = 0.0
            converged = True
            break
        vec = image / norm
    return PowerIterationResult(value=value, vector=vec, converged=converged, iterations=sweeps)


def lens_spectrum_phase(lens: np.ndarray) -> np.ndarray:
    """Unimodular phase profile of the reversed-lens spectrum.

    Transforms the index-reversed lens, which is the adjoint transform of the
    lens itself, and keeps entrywise phases; entries whose magnitude falls
    below 1e-12 of the spectrum peak are set to 1. This is the phase ramp a
    window shift imprints on the spectra of slowly varying objects.
    """
    spectrum = dft2(np.asarray(lens, dtype=np.complex128), inverse=True)
    mag = np.abs(spectrum)
    live = mag > VANISHING_SPECTRUM * mag.max(initial=0.0)
    out = np.ones_like(spectrum)
    np.divide(spectrum, mag, out=out, where=live)
    return out


def _overlap_shift(model: ForwardModel, i: int, j: int) -> tuple[np.ndarray, tuple]:
    """Anchor offset of frames i, j and the window-i pixel slices they share."""
    delta = model.anchors[i] - model.anchors[j]
    m = model.m
    lo = np.maximum(0, -delta)
    hi = np.minimum(m, m - delta)
    return delta, (slice(lo[0], hi[0]), slice(lo[1], hi[1]))


def _masked_overlap_product(model: ForwardModel, i: int, j: int) -> tuple[np.ndarray, np.ndarray]:
    """Coverage-normalized probe product on the shared support, window-i coords.

    Entry r holds probes_i(r) * conj(probes_j(r + delta)) / overlap_weight at
    the common pixel, zero outside the overlap.
    """
    delta, (ry, rx) = _overlap_shift(model, i, j)
    m = model.m
    product = np.zeros((m, m), dtype=np.complex128)
    if ry.start >= ry.stop or rx.start >= rx.stop:
        return delta, product
    jy = slice(ry.start + delta[0], ry.stop + delta[0])
    jx = slice(rx.start + delta[1], rx.stop + delta[1])
    ay, ax = model.anchors[i]
    weights = model._inv_weights[ay + ry.start:ay + ry.stop, ax + rx.start:ax + rx.stop]
    product[ry, rx] = model.probes[i][ry, rx] * np.conj(model.probes[j][jy, jx]) * weights
    return delta, product


def ambiguity_kernel(model: ForwardModel, i: int, j: int) -> np.ndarray:
    """Cross-ambiguity kernel of frames i and j on the m-by-m cyclic lag grid.

    Direct-sum evaluation: with c the coverage-normalized probe overlap
    product, entry u is (1/m^2) sum_r c(r) exp(+2j*pi*u.r/m). The range
    projector couples entries of frames i and j through this kernel alone;
    see range_projector_block.
    """
    _, product = _masked_overlap_product(model, i, j)
    m = model.m
    expo = np.exp(2j * np.pi * np.outer(np.arange(m), np.arange(m)) / m)
    return (expo @ product @ expo.T) / (m * m)


def _ambiguity_kernel_fft(model: ForwardModel, i: int, j: int) -> np.ndarray:
    """FFT route to the same kernel ambiguity_kernel evaluates by direct sum."""
    _, product = _masked_overlap_product(model, i, j)
    return dft2(product) / model.m


def range_projector_block(model: ForwardModel, i: int, j: int) -> np.ndarray:
    """Dense (m^2, m^2) block of the range projector coupling frames i and j.

    Entry (k, k') equals exp(-2j*pi*k'.delta/m) times the ambiguity kernel at
    lag (k - k') mod m, with delta the anchor offset. Intended for small-m
    oracles; production code stays matrix free.
    """
    delta, _ = _overlap_shift(model, i, j)
    kernel = ambiguity_kernel(model, i, j)
    m = model.m
    idx = np.arange(m * m)
    ky, kx = np.divmod(idx, m)
    lag_y = (ky[:, None] - ky[None, :]) % m
    lag_x = (kx[:, None] - kx[None, :]) % m
    ramp = np.exp(-2j * np.pi * (ky * delta[0] + kx * delta[1]) / m)
    return kernel[lag_y, lag_x] * ramp[None, :]


def _circular_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cyclic 2-D convolution of real arrays, clipped at zero."""
    out = np.fft.ifft2(np.fft.fft2(a) * np.fft.fft2(b)).real
    return np.maximum(out, 0.0)


class ConnectionGraph:
    """Phase-synchronization operator over the frame-overlap graph.

    Vertices are stack entries. The similarity S = diag(a) P diag(a) couples
    entries of overlapping frames through the range projector P weighted by
    the measured amplitudes, so |S| entries are a(p) |P(p,q)| a(q) and the
    top eigenvector votes for the relative phases of the consistent stack.
    degree holds the row sums of |S|, accumulated pair by pair as cyclic
    convolutions of |ambiguity kernel| with the partner frame's amplitudes.

    Conjugating S by any per-pixel unit profile shared across frames (the
    reversed-lens spectrum phase is the classical choice) gives a unitarily
    equivalent operator whose eigenvector carries the profile as an extra
    modulation; it has to be divided out again before the vector can seed a
    solver, so the implementation synchronizes the projector phases directly.
    """

    def __init__(self, model: ForwardModel, amps: np.ndarray):
        amps = np.ascontiguousarray(amps, dtype=np.float64)
        shape = (model.frame_count, model.m, model.m)
        if amps.shape != shape:
            raise ValueError(f"amps shape {amps.shape} does not match stack {shape}")
        if amps.min() < 0.0:
            raise ValueError("measured amplitudes must be nonnegative")
        self.model = model
        self.amps = amps
        self.vertex_weights = amps
        anchors = model.anchors
        m = model.m
        degree = np.empty_like(amps)
        for i in range(model.frame_count):
            gaps = np.abs(anchors - anchors[i])
            partners = np.nonzero((gaps[:, 0] < m) & (gaps[:, 1] < m))[0]
            acc = np.zeros((m, m))
            for j in partners:
                kernel = _ambiguity_kernel_fft(model, i, int(j))
                acc += _circular_convolve(np.abs(kernel), amps[j])
            degree[i] = amps[i] * acc
        flat = np.argmin(degree)
        if degree.reshape(-1)[flat] <= 0.0:
            frame, rank = divmod(int(flat), m * m)
            raise ValueError(
                f"zero synchronization weight at frame {frame}, window pixel "
                f"{divmod(rank, m)}; amplitudes too sparse to couple"
            )
        self.degree = degree
        self._inv_sqrt_degree = 1.0 / np.sqrt(degree)

    def apply_similarity(self, stack: np.ndarray) -> np.ndarray:
        """S x = a * P(a * x) with P the range projector."""
        w = self.vertex_weights
        return w * project_range(self.model, w * stack)

    def apply_normalized(self, stack: np.ndarray) -> np.ndarray:
        """Degree-symmetrized similarity D^(-1/2) S D^(-1/2); spectrum in [-1, 1]."""
        d = self._inv_sqrt_degree
        return d * self.apply_similarity(d * stack)

    def top_eigpair(self, seed: int = 0, tol: float = 1e-8, max_iter: int = 5000) -> PowerIterationResult:
        """Top eigenpair of the normalized similarity.

        Power-iterates the identity-shifted operator (positive semidefinite
        since the spectrum lies in [-1, 1]) and reports the unshifted value.
        """
        shape = self.amps.shape

        def shifted(x):
            return self.apply_normalized(x) + x

        res = power_top_eigpair(shifted, shape, seed=seed, tol=tol, max_iter=max_iter)
        return replace(res, value=res.value - 1.0)


def connection_spectral_init(
    model: ForwardModel,
    amps: np.ndarray,
    seed: int = 0,
    tol: float = 1e-8,
    max_iter: int = 5000,
) -> tuple[np.ndarray, PowerIterationResult]:
    """Synchronization-based starting stack from the connection graph.

    Takes the top eigenvector of the degree-normalized similarity, undoes the
    degree symmetrization, substitutes the measured amplitudes, and projects
    onto the range. Returns the stack and the eigensolve record.
    """
    graph = ConnectionGraph(model, amps)
    res = graph.top_eigpair(seed=seed, tol=tol, max_iter=max_iter)
    guess = graph._inv_sqrt_degree * res.vector
    start = project_range(model, project_amplitude(amps, guess))
    return start, res


def truncated_spectral_init(
    model: ForwardModel,
    amps: np.ndarray,
    percentile_keep: float = 0.8,
    seed: int = 0,
    tol: float = 1e-8,
    max_iter: int = 5000,
) -> tuple[np.ndarray, PowerIterationResult]:
    """Starting stack from the truncated range operator.

    Power-iterates x -> T P T x with T zeroing weak-amplitude entries and P
    the range projector (Hermitian, eigenvalues in [0, 1]); the top
    eigenvector, amplitude-substituted and projected onto the range, seeds the
    solvers. Returns the stack and the eigensolve record.
    """
    mask = truncation_mask(amps, percentile_keep)

    def apply(x):
        return mask.apply(project_range(model, mask.apply(x)))

    res = power_top_eigpair(apply, amps.shape, seed=seed, tol=tol, max_iter=max_iter)
    start = project_range(model, project_amplitude(amps, res.vector))
    return start, res
