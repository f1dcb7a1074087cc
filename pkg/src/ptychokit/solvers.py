"""Reconstruction drivers: AP, RAAR, and their frame-synchronized variants."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .forward import ForwardModel, dft2
from .metrics import ConvergenceTrace, compute_metrics
from .projectors import project_amplitude, project_range
from .spectral import connection_spectral_init, truncated_spectral_init

__all__ = [
    "CGState",
    "SolverConfig",
    "SolverResult",
    "ap_step",
    "apply_frame_phases",
    "cg_step",
    "frame_sync_kernel",
    "line_search_alpha",
    "raar_step",
    "reconstruct_object",
    "run",
    "synchro_raar_step",
]

ALGORITHMS = ("ap", "raar", "synchro-raar", "synchro-cg")
INITS = ("random", "tps", "gcl")
SYNC_KERNELS = ("K", "curlyK")


@dataclass(frozen=True)
class SolverConfig:
    """Reconstruction settings.

    algorithm: one of ap | raar | synchro-raar | synchro-cg. init: random
    (seeded Gaussian object pushed through the forward map), tps, or gcl
    (spectral initializers). sync_kernel selects the frame-correlation kernel
    for the synchronized variants: "K" uses overlap-weight-compensated inner
    products, "curlyK" plain inner products with per-window weight
    normalization (the two agree when the overlap weights are constant).
    alpha_max / line_search_tol bound the synchro-cg step search;
    percentile_keep feeds the tps truncation.
    """

    algorithm: str
    iterations: int
    beta: float = 0.9
    init: str = "random"
    sync_kernel: str = "K"
    alpha_max: float = 2.0
    line_search_tol: float = 1e-6
    percentile_keep: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.init not in INITS:
            raise ValueError(f"unknown init {self.init!r}")
        if self.sync_kernel not in SYNC_KERNELS:
            raise ValueError(f"unknown sync kernel {self.sync_kernel!r}")
        if self.iterations < 0:
            raise ValueError("iterations must be nonnegative")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError("beta must lie in (0, 1]")
        if self.alpha_max <= 0 or self.line_search_tol <= 0:
            raise ValueError("alpha_max and line_search_tol must be positive")
        if not 0.0 < self.percentile_keep <= 1.0:
            raise ValueError("percentile_keep must lie in (0, 1]")


def ap_step(model: ForwardModel, amps: np.ndarray, spectra: np.ndarray) -> np.ndarray:
    """One alternating-projection sweep: range projection of the torus projection."""
    return project_range(model, project_amplitude(amps, spectra))


def raar_step(model: ForwardModel, amps: np.ndarray, spectra: np.ndarray, beta: float) -> np.ndarray:
    """One relaxed averaged alternating reflections sweep.

    Averages the double reflection with the amplitude projection,
    beta/2 (R R_a + I) + (1 - beta) P_a with R = 2P - I reflecting through
    the range, which expands to

        next = 2 beta P(P_a z) + (1 - 2 beta) P_a z + beta (z - P z).

    Both range projections share one pass by linearity. Fixed points of the
    alternating map stay fixed for any beta.
    """
    on_torus = project_amplitude(amps, spectra)
    projected = project_range(model, 2.0 * beta * on_torus - beta * spectra)
    return projected + (1.0 - 2.0 * beta) * on_torus + beta * spectra


def frame_sync_kernel(
    model: ForwardModel,
    frames: np.ndarray,
    amps: np.ndarray,
    variant: str = "K",
) -> np.ndarray:
    """Hermitian frame-correlation matrix from per-frame object patches.

    frames holds the adjoint-DFT of the torus-projected stack, one window per
    frame. Each frame is scattered to the object grid through its conjugate
    probe; entry (i, j) is the inner product of patches i and j, compensated
    by the inverse overlap weights and normalized by ||amps_i|| ||amps_j||
    (variant "K"), or the plain inner product normalized by the windowed
    sqrt-overlap-weighted frame norms (variant "curlyK").
    """
    if variant not in SYNC_KERNELS:
        raise ValueError(f"unknown sync kernel {variant!r}")
    count, m, _ = frames.shape
    n = model.n
    patches = np.empty((count, n * n), dtype=np.complex128)
    for k in range(count):
        patch = np.zeros((n, n), dtype=np.complex128)
        ay, ax = model.anchors[k]
        patch[ay:ay + m, ax:ax + m] = np.conj(model.probes[k]) * frames[k]
        patches[k] = patch.reshape(-1)
    if variant == "K":
        weighted = patches * np.sqrt(model._inv_weights).reshape(-1)[None, :]
        gram = weighted.conj() @ weighted.T
        norms = np.linalg.norm(amps.reshape(count, -1), axis=1)
    else:
        gram = patches.conj() @ patches.T
        norms = np.empty(count)
        for k in range(count):
            ay, ax = model.anchors[k]
            w = model.overlap_weights[ay:ay + m, ax:ax + m]
            norms[k] = np.sqrt(np.sum(w * np.abs(frames[k]) ** 2))
    norms = np.where(norms > 0.0, norms, 1.0)
    gram = gram / np.outer(norms, norms)
    return 0.5 * (gram + gram.conj().T)


def apply_frame_phases(spectra: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Rotate each frame by the phase of its entry of xi; zero entries rotate by 1."""
    mag = np.abs(xi)
    phases = np.where(mag > 0.0, xi / np.where(mag > 0.0, mag, 1.0), 1.0)
    return spectra * phases[:, None, None]


def _sync_phases(model: ForwardModel, amps: np.ndarray, on_torus: np.ndarray, variant: str) -> np.ndarray:
    """Per-frame alignment phases from the top eigenvector of the sync kernel."""
    frames = dft2(on_torus, inverse=True)
    kernel = frame_sync_kernel(model, frames, amps, variant)
    _, vecs = np.linalg.eigh(kernel)
    xi = vecs[:, -1]
    lead = np.argmax(np.abs(xi))
    anchor = xi[lead]
    if anchor != 0:
        xi = xi * np.conj(anchor / abs(anchor))
    return xi


def synchro_raar_step(
    model: ForwardModel,
    amps: np.ndarray,
    spectra: np.ndarray,
    beta: float,
    variant: str = "K",
) -> tuple[np.ndarray, np.ndarray]:
    """RAAR sweep with per-frame phase alignment before each range projection.

    Estimates one phase per frame from the sync kernel's top eigenvector and
    rotates the range projector's input by it, then takes the same relaxed
    reflection step as raar_step with the corrected projector. Consistent
    stacks are fixed points up to a global phase. Returns (next, xi).
    """
    on_torus = project_amplitude(amps, spectra)
    xi = _sync_phases(model, amps, on_torus, variant)
    aligned = apply_frame_phases(2.0 * beta * on_torus - beta * spectra, xi)
    projected = project_range(model, aligned)
    return projected + (1.0 - 2.0 * beta) * on_torus + beta * spectra, xi


def line_search_alpha(
    amps: np.ndarray,
    spectra: np.ndarray,
    direction: np.ndarray,
    alpha_max: float = 2.0,
    tol: float = 1e-6,
) -> float:
    """Step length minimizing || |spectra + alpha * direction| - amps || on [0, alpha_max].

    Coarse scan over 32 equispaced points brackets the minimum; golden-section
    refinement shrinks the bracket below tol.
    """

    def misfit(alpha):
        return float(np.linalg.norm(np.abs(spectra + alpha * direction) - amps))

    grid = np.linspace(0.0, alpha_max, 32)
    values = [misfit(alpha) for alpha in grid]
    best = int(np.argmin(values))
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, len(grid) - 1)]
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = misfit(x1), misfit(x2)
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = misfit(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = misfit(x2)
    return float(0.5 * (lo + hi))


@dataclass
class CGState:
    """Carry-over between synchro-cg sweeps: previous update and search direction."""

    delta_prev: np.ndarray | None = None
    direction_prev: np.ndarray | None = None


def cg_step(
    model: ForwardModel,
    amps: np.ndarray,
    spectra: np.ndarray,
    state: CGState,
    variant: str = "K",
    alpha_max: float = 2.0,
    line_search_tol: float = 1e-6,
) -> tuple[np.ndarray, CGState]:
    """One synchronized conjugate-gradient sweep.

    The update residual is the synchronized alternating-projection move; its
    conjugate direction uses the nonnegative Polak-Ribiere coefficient
    (restarting when the previous residual norm falls below 1e-14 ||amps||),
    and the step length comes from line_search_alpha.
    """
    on_torus = project_amplitude(amps, spectra)
    xi = _sync_phases(model, amps, on_torus, variant)
    delta = project_range(model, apply_frame_phases(on_torus, xi)) - spectra
    floor = 1e-14 * float(np.linalg.norm(amps))
    if state.delta_prev is None or np.linalg.norm(state.delta_prev) < floor:
        coeff = 0.0
        direction = delta
    else:
        num = float(np.real(np.vdot(delta, delta - state.delta_prev)))
        den = float(np.linalg.norm(state.delta_prev)) ** 2
        coeff = max(0.0, num / den)
        direction = delta + coeff * state.direction_prev
    alpha = line_search_alpha(amps, spectra, direction, alpha_max, line_search_tol)
    next_spectra = spectra + alpha * direction
    return next_spectra, CGState(delta_prev=delta, direction_prev=direction)


def reconstruct_object(model: ForwardModel, spectra: np.ndarray) -> np.ndarray:
    """Least-squares object estimate from a spectra stack."""
    return model.reconstruct(spectra)


@dataclass(frozen=True)
class SolverResult:
    """Final stack, the object reconstructed from it, and the metric trace."""

    spectra: np.ndarray
    image: np.ndarray
    trace: ConvergenceTrace


def _initial_stack(model: ForwardModel, amps: np.ndarray, config: SolverConfig) -> np.ndarray:
    if config.init == "random":
        rng = np.random.default_rng(config.seed)
        image = (
            rng.standard_normal((model.n, model.n))
            + 1j * rng.standard_normal((model.n, model.n))
        ) / np.sqrt(2.0)
        return model.apply_fq(image)
    if config.init == "tps":
        start, _ = truncated_spectral_init(
            model, amps, percentile_keep=config.percentile_keep, seed=config.seed
        )
        return start
    start, _ = connection_spectral_init(model, amps, seed=config.seed)
    return start


def run(
    model: ForwardModel,
    amps: np.ndarray,
    config: SolverConfig,
    truth_image: np.ndarray | None = None,
) -> SolverResult:
    """Run a configured solver, recording metrics for every iterate.

    The trace has iterations + 1 rows; row l describes iterate l, with its
    step size to the next iterate (absent on the final row) and, when
    truth_image is given, the phase-aligned distance to its spectra.
    """
    amps = np.ascontiguousarray(amps, dtype=np.float64)
    truth_spectra = model.apply_fq(truth_image) if truth_image is not None else None
    spectra = _initial_stack(model, amps, config)
    cg_state = CGState()
    rows = []

    def advance(current):
        nonlocal cg_state
        if config.algorithm == "ap":
            return ap_step(model, amps, current)
        if config.algorithm == "raar":
            return raar_step(model, amps, current, config.beta)
        if config.algorithm == "synchro-raar":
            nxt, _ = synchro_raar_step(model, amps, current, config.beta, config.sync_kernel)
            return nxt
        nxt, cg_state = cg_step(
            model,
            amps,
            current,
            cg_state,
            variant=config.sync_kernel,
            alpha_max=config.alpha_max,
            line_search_tol=config.line_search_tol,
        )
        return nxt

    projector = lambda stack: project_range(model, stack)
    for iteration in range(config.iterations):
        next_spectra = advance(spectra)
        rows.append(
            compute_metrics(
                amps,
                spectra,
                projector,
                iteration=iteration,
                next_spectra=next_spectra,
                truth_spectra=truth_spectra,
            )
        )
        spectra = next_spectra
    rows.append(
        compute_metrics(
            amps,
            spectra,
            projector,
            iteration=config.iterations,
            truth_spectra=truth_spectra,
        )
    )
    trace = ConvergenceTrace(rows=tuple(rows), amps_norm=float(np.linalg.norm(amps)))
    return SolverResult(spectra=spectra, image=model.reconstruct(spectra), trace=trace)
