"""Built-in property suite: projector identities, derivative oracles, branch
structure, contraction bounds, and reproducibility, each at a scale small
enough to run in seconds.

The checks mirror the invariants the solvers rely on. Each returns a
CheckResult with the measured residual so regressions show up as numbers,
not just flipped booleans. The gradient check accepts the gradient callable
as a parameter so a deliberately broken gradient can be shown to fail.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import (
    GenericFrameLab,
    amplitude_misfit,
    classify_region,
    invert_residual_scalar,
    misfit_curvature,
    misfit_gradient,
    residual_ratios,
    stagnation_sphere_gap,
)
from .forward import ForwardModel
from .geometry import IlluminationScheme, build_scheme
from .lens import LensSpec, make_blr_lens
from .phantom import make_phantom
from .projectors import project_amplitude, project_range
from .solvers import SolverConfig, ap_step, run
from .spectral import _ambiguity_kernel_fft, ambiguity_kernel

__all__ = [
    "CheckResult",
    "StepWitness",
    "desk_model",
    "find_step_increase_witness",
    "format_report",
    "gradient_check",
    "run_suite",
    "tiny_model",
]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    residual: float
    detail: str = ""


@dataclass(frozen=True)
class StepWitness:
    """A recorded pair of consecutive alternating-projection sweeps whose step
    sizes grew, showing the step norm is not monotone even while the misfit is."""

    seed: int
    iteration: int
    step_before: float
    step_after: float


def tiny_model(seed: int = 3) -> tuple[ForwardModel, np.ndarray, np.ndarray]:
    """8x8 object, four 4x4 windows, full-support random lens.

    The windows leave part of the grid unilluminated, so the dense operator
    is rank deficient; small enough that every operator fits in a dense
    matrix, which is what the pseudo-inverse and eigensolve oracles need.
    """
    rng = np.random.default_rng(seed)
    lens = (rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))) / np.sqrt(2.0)
    lens = lens / np.linalg.norm(lens)
    positions = np.array([[0, 0], [0, 4], [4, 0], [2, 2]], dtype=np.float64)
    scheme = IlluminationScheme(n=8, m=4, positions=positions)
    model = ForwardModel(scheme, lens)
    truth = make_phantom(8, seed=seed)
    amps = model.forward_measure(truth)
    return model, truth, amps


def desk_model(
    n: int = 32,
    m: int = 8,
    spacing: int = 4,
    lens_seed: int = 5,
    phantom_seed: int = 11,
) -> tuple[ForwardModel, np.ndarray, np.ndarray]:
    """Mid-size lattice scan with a designed band-limited random lens."""
    scheme = build_scheme(n, m, dx=spacing, dy=spacing)
    lens, _ = make_blr_lens(LensSpec(kind="blr", m=m, seed=lens_seed))
    model = ForwardModel(scheme, lens)
    truth = make_phantom(n, seed=phantom_seed)
    amps = model.forward_measure(truth)
    return model, truth, amps


def _random_stack(model: ForwardModel, rng) -> np.ndarray:
    shape = (model.frame_count, model.m, model.m)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def dense_range_matrix(model: ForwardModel) -> np.ndarray:
    """The forward operator as an explicit (K m^2, n^2) matrix, one basis image per column."""
    n = model.n
    cols = np.empty((model.frame_count * model.m * model.m, n * n), dtype=np.complex128)
    basis = np.zeros((n, n), dtype=np.complex128)
    for p in range(n):
        for q in range(n):
            basis[p, q] = 1.0
            cols[:, p * n + q] = model.apply_fq(basis).reshape(-1)
            basis[p, q] = 0.0
    return cols


def check_torus_projection_idempotent() -> CheckResult:
    model, _, amps = tiny_model()
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(5):
        z = _random_stack(model, rng)
        once = project_amplitude(amps, z)
        twice = project_amplitude(amps, once)
        worst = max(worst, np.abs(twice - once).max())
    return CheckResult("torus projection is idempotent", worst < 1e-12, worst)


def check_range_projection_idempotent() -> CheckResult:
    model, _, _ = tiny_model()
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(5):
        z = _random_stack(model, rng)
        once = project_range(model, z)
        twice = project_range(model, once)
        worst = max(worst, np.linalg.norm(twice - once) / np.linalg.norm(z))
    return CheckResult("range projection is idempotent", worst < 1e-10, worst)


def check_range_projection_self_adjoint() -> CheckResult:
    model, _, _ = tiny_model()
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(5):
        x = _random_stack(model, rng)
        y = _random_stack(model, rng)
        lhs = np.vdot(project_range(model, x), y)
        rhs = np.vdot(x, project_range(model, y))
        worst = max(worst, abs(lhs - rhs) / (np.linalg.norm(x) * np.linalg.norm(y)))
    return CheckResult("range projection is self-adjoint", worst < 1e-10, worst)


def check_range_projection_matches_pinv() -> CheckResult:
    model, _, _ = tiny_model()
    matrix = dense_range_matrix(model)
    dense = matrix @ np.linalg.pinv(matrix)
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(5):
        z = _random_stack(model, rng)
        fast = project_range(model, z).reshape(-1)
        slow = dense @ z.reshape(-1)
        worst = max(worst, np.linalg.norm(fast - slow) / np.linalg.norm(z))
    return CheckResult("range projection matches dense pseudo-inverse", worst < 1e-10, worst)


def check_ap_is_projected_gradient() -> CheckResult:
    """On the range, one alternating sweep equals a projected gradient step
    with unit step: z - 2 P grad = P(P_a z)."""
    model, _, amps = tiny_model()
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(10):
        z = project_range(model, _random_stack(model, rng))
        sweep = ap_step(model, amps, z)
        grad = misfit_gradient(z, amps)
        descent = z - 2.0 * project_range(model, grad)
        worst = max(worst, np.abs(sweep - descent).max() / np.linalg.norm(z))
    return CheckResult("alternating sweep equals projected gradient", worst < 1e-12, worst)


def gradient_check(grad_fn=None, seed: int = 6) -> CheckResult:
    """Central-difference check of the misfit gradient along random directions.

    grad_fn defaults to the production gradient; passing a corrupted callable
    must make this check fail, which is how the suite proves it has teeth.
    """
    if grad_fn is None:
        grad_fn = misfit_gradient
    rng = np.random.default_rng(seed)
    shape = (3, 4, 4)
    mag = rng.uniform(0.5, 1.5, shape)
    z = mag * np.exp(2j * np.pi * rng.uniform(size=shape))
    amps = rng.uniform(0.5, 1.5, shape)
    grad = grad_fn(z, amps)
    h = 1e-5
    worst = 0.0
    for _ in range(20):
        w = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
        fd = (amplitude_misfit(z + h * w, amps) - amplitude_misfit(z - h * w, amps)) / (2.0 * h)
        analytic = 2.0 * float(np.real(np.vdot(grad, w)))
        worst = max(worst, abs(fd - analytic) / max(abs(fd), 1e-30))
    return CheckResult("misfit gradient matches finite differences", worst < 1e-6, worst)


def check_curvature() -> CheckResult:
    rng = np.random.default_rng(7)
    shape = (3, 4, 4)
    mag = rng.uniform(0.5, 1.5, shape)
    z = mag * np.exp(2j * np.pi * rng.uniform(size=shape))
    amps = rng.uniform(0.5, 1.5, shape)
    h = 1e-4
    worst = 0.0
    for _ in range(20):
        w = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
        fd = (
            amplitude_misfit(z + h * w, amps)
            + amplitude_misfit(z - h * w, amps)
            - 2.0 * amplitude_misfit(z, amps)
        ) / (h * h)
        analytic = misfit_curvature(z, amps, w)
        worst = max(worst, abs(fd - analytic) / max(abs(fd), 1e-30))
    ok = worst < 1e-4

    # aligned direction: curvature collapses to the direction's energy
    w_aligned = rng.uniform(0.5, 1.5, shape) * z / np.abs(z)
    gap_one = abs(misfit_curvature(z, amps, w_aligned) - np.sum(np.abs(w_aligned) ** 2))
    # on the torus, orthogonal phase direction: curvature vanishes
    z_torus = amps * z / np.abs(z)
    w_orth = rng.uniform(0.5, 1.5, shape) * 1j * z_torus / np.abs(z_torus)
    gap_zero = abs(misfit_curvature(z_torus, amps, w_orth))
    ok = ok and gap_one < 1e-12 * np.sum(np.abs(w_aligned) ** 2) and gap_zero < 1e-12
    return CheckResult(
        "misfit curvature matches second differences and analytic cases",
        ok,
        worst,
        detail=f"aligned gap {gap_one:.2e}, torus-orthogonal gap {gap_zero:.2e}",
    )


def check_residual_inversion(samples: int = 200, seed: int = 8) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        amp = rng.uniform(0.1, 2.0)
        r = rng.uniform(0.0, 2.5) * amp
        if abs(r - amp) < 0.05 * amp:
            continue
        zeta = r * np.exp(2j * np.pi * rng.uniform())
        pre = invert_residual_scalar(zeta, amp)
        expected = "unique" if r >= amp else ("pair" if r > 0 else "circle")
        if pre.kind != expected:
            return CheckResult(
                "scalar residual inversion", False, np.inf, detail=f"kind {pre.kind} != {expected}"
            )
        for eta in pre.points:
            back = eta - amp * eta / abs(eta)
            worst = max(worst, abs(back - zeta))
            label = classify_region(np.array([eta]), np.array([amp]))
            want_pairs = 1 if pre.kind == "pair" else 0
            if label.pair_count != want_pairs:
                return CheckResult(
                    "scalar residual inversion",
                    False,
                    np.inf,
                    detail=f"|eta|={abs(eta):.3f} classified {label.kind} for a {pre.kind} branch",
                )
    circle = invert_residual_scalar(0.0, 1.3)
    for theta in (0.0, 1.0, 2.5):
        eta = circle.radius * np.exp(1j * theta)
        worst = max(worst, abs(eta - circle.radius * eta / abs(eta)))
    return CheckResult("scalar residual inversion round-trips", worst < 1e-14, worst)


def check_residual_contraction() -> CheckResult:
    model, _, amps = desk_model()
    from .solvers import _initial_stack

    config = SolverConfig(algorithm="ap", iterations=40, seed=17)
    spectra = _initial_stack(model, amps, config)
    iterates = [spectra]
    for _ in range(config.iterations):
        spectra = ap_step(model, amps, spectra)
        iterates.append(spectra)
    ratios = residual_ratios(iterates, amps, lambda stack: project_range(model, stack))
    finite = ratios.data_ratios[np.isfinite(ratios.data_ratios)]
    worst = float(finite.max()) if finite.size else 0.0
    return CheckResult(
        "alternating sweeps never expand the torus distance", worst <= 1.0 + 1e-12, worst
    )


def check_stagnation_sphere() -> CheckResult:
    lab = GenericFrameLab(2, 6, seed=9)
    rng = np.random.default_rng(9)
    signal = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    amps = lab.measure(signal)
    truth = lab.frame @ signal
    start = lab.project_range(truth * (1.0 + 1e-3 * rng.standard_normal(6)))
    run_rec = lab.run_ap(amps, start, 400)
    final = run_rec.iterates[-1]
    gap = abs(stagnation_sphere_gap(final - project_amplitude(amps, final), amps))
    scale = float(np.sum(amps * amps))
    return CheckResult("stalled iterates sit on the stagnation sphere", gap < 1e-8 * scale, gap / scale)


def find_step_increase_witness(
    model: ForwardModel,
    amps: np.ndarray,
    seeds=range(8),
    iterations: int = 60,
) -> StepWitness | None:
    """Search short alternating-projection runs for a growing step size."""
    for seed in seeds:
        config = SolverConfig(algorithm="ap", iterations=iterations, seed=seed)
        trace = run(model, amps, config).trace
        steps = trace.column("eps_delta")
        for l in range(len(steps) - 2):
            if np.isfinite(steps[l]) and np.isfinite(steps[l + 1]):
                if steps[l + 1] > steps[l] * (1.0 + 1e-9):
                    return StepWitness(
                        seed=seed,
                        iteration=l,
                        step_before=float(steps[l]),
                        step_after=float(steps[l + 1]),
                    )
    return None


def check_step_witness() -> CheckResult:
    model, _, amps = desk_model()
    witness = find_step_increase_witness(model, amps)
    if witness is None:
        return CheckResult("step sizes can grow between sweeps", False, np.inf)
    growth = witness.step_after / witness.step_before - 1.0
    return CheckResult(
        "step sizes can grow between sweeps",
        True,
        growth,
        detail=(
            f"seed {witness.seed}, iteration {witness.iteration}: "
            f"{witness.step_before:.6e} -> {witness.step_after:.6e}"
        ),
    )


def check_pairwise_blocks() -> CheckResult:
    model, _, _ = tiny_model()
    worst = 0.0
    for i, j in ((0, 0), (0, 3), (1, 3), (2, 3)):
        direct = ambiguity_kernel(model, i, j)
        fast = _ambiguity_kernel_fft(model, i, j)
        worst = max(worst, np.abs(direct - fast).max())
    return CheckResult("pairwise kernels agree between transform and direct sum", worst < 1e-10, worst)


def check_consistent_fixed_point() -> CheckResult:
    model, truth, amps = tiny_model()
    spectra = model.apply_fq(truth)
    stepped = ap_step(model, amps, spectra)
    gap = np.linalg.norm(stepped - spectra) / np.linalg.norm(spectra)
    return CheckResult("consistent stacks are alternating fixed points", gap < 1e-12, gap)


def check_reproducibility() -> CheckResult:
    model, truth, amps = tiny_model()
    config = SolverConfig(algorithm="raar", iterations=15, seed=12)
    first = run(model, amps, config, truth_image=truth).trace
    second = run(model, amps, config, truth_image=truth).trace
    same = all(
        np.array_equal(first.column(c), second.column(c), equal_nan=True)
        for c in ("eps_a", "eps_fq", "eps_afq", "eps_0", "eps_delta")
    )
    return CheckResult("same seed reproduces the trace bit for bit", same, 0.0 if same else np.inf)


def run_suite(grad_fn=None) -> list[CheckResult]:
    return [
        check_torus_projection_idempotent(),
        check_range_projection_idempotent(),
        check_range_projection_self_adjoint(),
        check_range_projection_matches_pinv(),
        check_ap_is_projected_gradient(),
        gradient_check(grad_fn),
        check_curvature(),
        check_residual_inversion(),
        check_consistent_fixed_point(),
        check_pairwise_blocks(),
        check_residual_contraction(),
        check_stagnation_sphere(),
        check_step_witness(),
        check_reproducibility(),
    ]


def format_report(results: list[CheckResult]) -> str:
    lines = []
    for res in results:
        flag = "PASS" if res.passed else "FAIL"
        line = f"[{flag}] {res.name}: residual {res.residual:.3e}"
        if res.detail:
            line += f" ({res.detail})"
        lines.append(line)
    failed = sum(not r.passed for r in results)
    lines.append(f"{len(results) - failed}/{len(results)} checks passed")
    return "\n".join(lines)
