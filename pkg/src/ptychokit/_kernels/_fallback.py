"""Pure-numpy implementations of the per-frame hot loops.

These mirror the compiled kernels in _native.pyx operation for operation.
Complex products are written out as separate real multiplies and adds so
neither backend can fuse them differently (numpy's vectorized complex
multiply contracts to FMA on some CPUs; the compiled core is built with
contraction off), which keeps the two backends bitwise identical.
"""

from __future__ import annotations

import numpy as np

ZERO_MAGNITUDE = 1e-300


def gather(obj, probes, anchors):
    """Extract probe-weighted windows: out[k] = probes[k] * obj[window k]."""
    count, m, _ = probes.shape
    out = np.empty((count, m, m), dtype=np.complex128)
    for k in range(count):
        ay, ax = anchors[k]
        window = obj[ay:ay + m, ax:ax + m]
        pr, pi = probes[k].real, probes[k].imag
        wr, wi = window.real, window.imag
        out[k].real = pr * wr - pi * wi
        out[k].imag = pr * wi + pi * wr
    return out


def scatter(frames, probes, anchors, n):
    """Adjoint of gather: accumulate conj(probes[k]) * frames[k] into an n-by-n grid."""
    count, m, _ = probes.shape
    out = np.zeros((n, n), dtype=np.complex128)
    out_re = out.real
    out_im = out.imag
    for k in range(count):
        ay, ax = anchors[k]
        pr, pi = probes[k].real, probes[k].imag
        fr, fi = frames[k].real, frames[k].imag
        out_re[ay:ay + m, ax:ax + m] += pr * fr + pi * fi
        out_im[ay:ay + m, ax:ax + m] += pr * fi - pi * fr
    return out


def substitute_amplitude(amps, stack):
    """Replace entry magnitudes with amps, keeping phases; zeros take phase 0.

    Entries of stack with magnitude below 1e-300 count as zero and map to the
    real value amps there.
    """
    amps = np.ascontiguousarray(amps, dtype=np.float64)
    stack = np.ascontiguousarray(stack, dtype=np.complex128)
    re, im = stack.real, stack.imag
    mag = np.hypot(re, im)
    live = mag >= ZERO_MAGNITUDE
    scale = np.ones_like(mag)
    np.divide(amps, mag, out=scale, where=live)
    out = np.empty(stack.shape, dtype=np.complex128)
    out.real = np.where(live, re * scale, amps)
    out.imag = np.where(live, im * scale, 0.0)
    return out
