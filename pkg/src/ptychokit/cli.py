"""Command-line driver: design lenses, simulate measurements, solve, verify.

Every command takes explicit seeds through flags or the config file, so two
invocations with the same arguments write the same bytes.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import arrayio
from .config import load_config, make_lens, realize
from .forward import ForwardModel, add_noise
from .geometry import IlluminationScheme
from .lens import LensSpec
from .solvers import run
from .verify import format_report, run_suite

MEASUREMENTS_FILE = "measurements.ptyc"
OBJECT_FILE = "object.ptyc"
POSITIONS_FILE = "positions.ptyc"
LENS_FILE = "lens.ptyc"
REPORT_FILE = "report.txt"
RECON_FILE = "psi_hat.ptyc"
TRACE_FILE = "trace.csv"


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def cmd_lens(args) -> int:
    try:
        spec = LensSpec(
            kind=args.kind,
            m=args.m,
            r_inner=args.r_inner,
            r_outer=args.r_outer,
            focus_radius=args.focus_radius,
            design_iters=args.design_iters,
            seed=args.seed,
        )
        lens, report = make_lens(spec)
    except ValueError as exc:
        return _fail(str(exc))
    arrayio.write_array(args.out, lens)
    print(f"wrote {args.out} ({args.kind}, {args.m}x{args.m})")
    if report is not None:
        print(f"design iterations: {len(report.focus_leak)}")
        print(f"final focus leak: {report.focus_leak[-1]:.3e}")
        print(f"final annulus gap: {report.annulus_gap[-1]:.3e}")
        if report.stalled:
            print("note: design residuals stopped improving before the iteration cap")
    return 0


def cmd_simulate(args) -> int:
    try:
        config = load_config(args.config)
        model, image, scheme = realize(config)
    except (ValueError, FileNotFoundError) as exc:
        return _fail(str(exc))
    amps = model.forward_measure(image)
    eps_sigma = 0.0
    if config.noise.sigma_std > 0.0:
        amps, eps_sigma = add_noise(amps, config.noise)
    out = config.output_directory
    os.makedirs(out, exist_ok=True)
    lens, _ = make_lens(config.lens)
    arrayio.write_array(os.path.join(out, MEASUREMENTS_FILE), amps)
    arrayio.write_array(os.path.join(out, OBJECT_FILE), image)
    arrayio.write_array(os.path.join(out, POSITIONS_FILE), scheme.positions)
    arrayio.write_array(os.path.join(out, LENS_FILE), lens)
    report_lines = [
        f"frames={model.frame_count}",
        f"n={model.n}",
        f"m={model.m}",
        f"sigma_std={config.noise.sigma_std!r}",
        f"eps_sigma={eps_sigma!r}",
    ]
    with open(os.path.join(out, REPORT_FILE), "w") as handle:
        handle.write("\n".join(report_lines) + "\n")
    print(f"wrote {model.frame_count} frames of {model.m}x{model.m} to {out}")
    print(f"relative noise level eps_sigma={eps_sigma:.6e}")
    return 0


def cmd_solve(args) -> int:
    try:
        config = load_config(args.config)
    except (ValueError, FileNotFoundError) as exc:
        return _fail(str(exc))
    data_dir = args.data or config.output_directory
    paths = {
        "measurements": os.path.join(data_dir, MEASUREMENTS_FILE),
        "positions": os.path.join(data_dir, POSITIONS_FILE),
        "lens": os.path.join(data_dir, LENS_FILE),
    }
    for label, path in paths.items():
        if not os.path.exists(path):
            return _fail(f"missing {label} file {path}")
    try:
        amps = arrayio.read_array(paths["measurements"])
        positions = arrayio.read_array(paths["positions"])
        lens = arrayio.read_array(paths["lens"])
    except ValueError as exc:
        return _fail(str(exc))
    m = config.lens.m
    n = config.object_n
    if lens.shape != (m, m):
        return _fail(f"lens file is {lens.shape}, config says m={m}")
    if positions.ndim != 2 or positions.shape[1] != 2:
        return _fail(f"positions file has shape {positions.shape}, expected (K, 2)")
    if amps.shape != (positions.shape[0], m, m):
        return _fail(
            f"measurements file is {amps.shape}, expected ({positions.shape[0]}, {m}, {m})"
        )
    try:
        scheme = IlluminationScheme(n=n, m=m, positions=positions)
        model = ForwardModel(scheme, np.ascontiguousarray(lens, dtype=np.complex128))
    except ValueError as exc:
        return _fail(str(exc))
    truth = None
    truth_path = os.path.join(data_dir, OBJECT_FILE)
    if not args.no_truth and os.path.exists(truth_path):
        truth = arrayio.read_array(truth_path)
        if truth.shape != (n, n):
            return _fail(f"ground-truth file is {truth.shape}, config says n={n}")
    result = run(model, np.ascontiguousarray(amps, dtype=np.float64), config.solver, truth_image=truth)
    out = config.output_directory
    os.makedirs(out, exist_ok=True)
    arrayio.write_array(os.path.join(out, RECON_FILE), result.image)
    comments = {"algorithm": config.solver.algorithm}
    if config.solver.algorithm in ("raar", "synchro-raar"):
        comments["beta"] = repr(config.solver.beta)
    arrayio.write_trace_csv(os.path.join(out, TRACE_FILE), result.trace, comments)
    last = result.trace.rows[-1]
    print(f"wrote {os.path.join(out, RECON_FILE)} and {os.path.join(out, TRACE_FILE)}")
    print(
        f"final metrics: eps_a={last.eps_a:.6e} eps_fq={last.eps_fq:.6e} "
        f"eps_afq={last.eps_afq:.6e}"
        + (f" eps_0={last.eps_0:.6e}" if last.eps_0 is not None else "")
    )
    return 0


def cmd_verify(args) -> int:
    del args
    results = run_suite()
    print(format_report(results))
    return 0 if all(r.passed for r in results) else 1


def cmd_export(args) -> int:
    if not os.path.exists(args.input):
        return _fail(f"missing input file {args.input}")
    try:
        image = arrayio.read_array(args.input)
    except ValueError as exc:
        return _fail(str(exc))
    if image.ndim != 2:
        return _fail(f"input has {image.ndim} dimensions, expected 2")
    if not np.all(np.isfinite(image.real)) or not np.all(np.isfinite(image.imag)):
        return _fail("input contains non-finite values")
    pgm, ppm = arrayio.export_images(image, args.out_prefix)
    print(f"wrote {pgm} and {ppm}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ptychokit",
        description="Simulate and reconstruct overlapping-window diffraction data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_lens = sub.add_parser("lens", help="design an illumination lens and write it to disk")
    p_lens.add_argument("--kind", choices=["small", "blr"], required=True)
    p_lens.add_argument("--m", type=int, required=True, help="lens side length in pixels")
    p_lens.add_argument("--r-inner", type=float, default=0.2, help="inner radius, fraction of Nyquist")
    p_lens.add_argument("--r-outer", type=float, default=0.45, help="outer radius, fraction of Nyquist")
    p_lens.add_argument("--focus-radius", type=float, default=None, help="focus disk radius in pixels")
    p_lens.add_argument("--design-iters", type=int, default=200)
    p_lens.add_argument("--seed", type=int, default=0)
    p_lens.add_argument("--out", required=True)
    p_lens.set_defaults(func=cmd_lens)

    p_sim = sub.add_parser("simulate", help="generate measurements from a config file")
    p_sim.add_argument("--config", required=True)
    p_sim.set_defaults(func=cmd_simulate)

    p_solve = sub.add_parser("solve", help="reconstruct from simulated or loaded measurements")
    p_solve.add_argument("--config", required=True)
    p_solve.add_argument("--data", default=None, help="directory holding the measurement files")
    p_solve.add_argument(
        "--no-truth",
        action="store_true",
        help="skip the ground-truth file even when present (drops the aligned-error column)",
    )
    p_solve.set_defaults(func=cmd_solve)

    p_verify = sub.add_parser("verify", help="run the built-in property suite")
    p_verify.set_defaults(func=cmd_verify)

    p_export = sub.add_parser("export", help="render a complex grid to PGM/PPM previews")
    p_export.add_argument("--input", required=True)
    p_export.add_argument("--out-prefix", required=True)
    p_export.set_defaults(func=cmd_export)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
