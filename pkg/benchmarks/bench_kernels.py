#!/usr/bin/env python
"""Time the compiled kernels against the pure numpy fallback.

Runs gather/scatter/amplitude-substitution individually and a full
alternating-projection sweep, printing per-call times for whichever backends
are importable. Works fine when only the fallback exists.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ptychokit._kernels import _fallback
from ptychokit.forward import ForwardModel
from ptychokit.geometry import build_scheme
from ptychokit.lens import LensSpec, make_blr_lens
from ptychokit.phantom import make_phantom
from ptychokit.solvers import ap_step

try:
    from ptychokit._kernels import _native
except ImportError:
    _native = None


def time_call(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description="Kernel backend timings")
    parser.add_argument("--n", type=int, default=128)
    parser.add_argument("--m", type=int, default=32)
    parser.add_argument("--spacing", type=int, default=8)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    scheme = build_scheme(args.n, args.m, args.spacing, args.spacing)
    lens, _ = make_blr_lens(LensSpec(kind="blr", m=args.m, seed=1))
    model = ForwardModel(scheme, lens)
    image = make_phantom(args.n, seed=2)
    amps = model.forward_measure(image)
    rng = np.random.default_rng(3)
    shape = (model.frame_count, args.m, args.m)
    spectra = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    frames = model.extract(image)

    print(f"grid {args.n}x{args.n}, {model.frame_count} windows of {args.m}x{args.m}")

    backends = [("fallback", _fallback)]
    if _native is not None:
        backends.append(("native", _native))
    else:
        print("native extension not built; timing fallback only")

    anchors = model.anchors
    probes = model.probes
    baseline = {}
    for name, impl in backends:
        t_gather = time_call(lambda: impl.gather(image, probes, anchors), args.repeats)
        t_scatter = time_call(lambda: impl.scatter(frames, probes, anchors, args.n), args.repeats)
        t_sub = time_call(lambda: impl.substitute_amplitude(amps, spectra), args.repeats)
        print(f"[{name}] gather {t_gather * 1e3:8.3f} ms   scatter {t_scatter * 1e3:8.3f} ms   "
              f"substitute {t_sub * 1e3:8.3f} ms")
        baseline[name] = (t_gather, t_scatter, t_sub)

    t_sweep = time_call(lambda: ap_step(model, amps, spectra), args.repeats)
    print(f"[{'native' if _native is not None else 'fallback'}] full sweep {t_sweep * 1e3:8.3f} ms "
          f"(selected backend, transform-dominated)")

    if _native is not None:
        fb, nat = baseline["fallback"], baseline["native"]
        for label, f, c in zip(("gather", "scatter", "substitute"), fb, nat):
            print(f"speedup {label}: {f / c:5.2f}x")

    # sanity: the two backends agree bitwise on the substitution kernel
    if _native is not None:
        a = _fallback.substitute_amplitude(amps, spectra)
        b = _native.substitute_amplitude(amps, spectra)
        print("bitwise equal:", bool(np.array_equal(a.view(np.float64), b.view(np.float64))))


if __name__ == "__main__":
    main()
