# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-frame hot loops: window gather/scatter and amplitude substitution.

Semantics match _fallback.py exactly. Complex values are handled through
float64 views as explicit (real, imag) pairs and every product is a separate
multiply so the arithmetic sequence is the rounded schoolbook formula on both
backends; the build turns floating-point contraction off to keep it that way.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport hypot

cnp.import_array()

ZERO_MAGNITUDE = 1e-300


def gather(obj, probes, anchors):
    """Extract probe-weighted windows: out[k] = probes[k] * obj[window k]."""
    obj = np.ascontiguousarray(obj, dtype=np.complex128)
    probes = np.ascontiguousarray(probes, dtype=np.complex128)
    anchors = np.ascontiguousarray(anchors, dtype=np.int64)
    cdef Py_ssize_t count = probes.shape[0]
    cdef Py_ssize_t m = probes.shape[1]
    cdef Py_ssize_t n = obj.shape[0]
    out = np.empty((count, m, m), dtype=np.complex128)
    cdef cnp.float64_t[:, :, ::1] obj_v = obj.view(np.float64).reshape(n, obj.shape[1], 2)
    cdef cnp.float64_t[:, :, :, ::1] probes_v = probes.view(np.float64).reshape(count, m, m, 2)
    cdef cnp.float64_t[:, :, :, ::1] out_v = out.view(np.float64).reshape(count, m, m, 2)
    cdef cnp.int64_t[:, ::1] anchors_v = anchors
    cdef Py_ssize_t k, i, j, ay, ax
    cdef double pr, pi, wr, wi
    for k in range(count):
        ay = anchors_v[k, 0]
        ax = anchors_v[k, 1]
        for i in range(m):
            for j in range(m):
                pr = probes_v[k, i, j, 0]
                pi = probes_v[k, i, j, 1]
                wr = obj_v[ay + i, ax + j, 0]
                wi = obj_v[ay + i, ax + j, 1]
                out_v[k, i, j, 0] = pr * wr - pi * wi
                out_v[k, i, j, 1] = pr * wi + pi * wr
    return out


def scatter(frames, probes, anchors, n):
    """Adjoint of gather: accumulate conj(probes[k]) * frames[k] into an n-by-n grid."""
    frames = np.ascontiguousarray(frames, dtype=np.complex128)
    probes = np.ascontiguousarray(probes, dtype=np.complex128)
    anchors = np.ascontiguousarray(anchors, dtype=np.int64)
    cdef Py_ssize_t count = probes.shape[0]
    cdef Py_ssize_t m = probes.shape[1]
    cdef Py_ssize_t side = n
    out = np.zeros((side, side), dtype=np.complex128)
    cdef cnp.float64_t[:, :, ::1] out_v = out.view(np.float64).reshape(side, side, 2)
    cdef cnp.float64_t[:, :, :, ::1] frames_v = frames.view(np.float64).reshape(count, m, m, 2)
    cdef cnp.float64_t[:, :, :, ::1] probes_v = probes.view(np.float64).reshape(count, m, m, 2)
    cdef cnp.int64_t[:, ::1] anchors_v = anchors
    cdef Py_ssize_t k, i, j, ay, ax
    cdef double pr, pi, fr, fi
    for k in range(count):
        ay = anchors_v[k, 0]
        ax = anchors_v[k, 1]
        for i in range(m):
            for j in range(m):
                pr = probes_v[k, i, j, 0]
                pi = probes_v[k, i, j, 1]
                fr = frames_v[k, i, j, 0]
                fi = frames_v[k, i, j, 1]
                out_v[ay + i, ax + j, 0] = out_v[ay + i, ax + j, 0] + (pr * fr + pi * fi)
                out_v[ay + i, ax + j, 1] = out_v[ay + i, ax + j, 1] + (pr * fi - pi * fr)
    return out


def substitute_amplitude(amps, stack):
    """Replace entry magnitudes with amps, keeping phases; zeros take phase 0.

    Entries of stack with magnitude below 1e-300 count as zero and map to the
    real value amps there.
    """
    amps_flat = np.ascontiguousarray(amps, dtype=np.float64).reshape(-1)
    stack_flat = np.ascontiguousarray(stack, dtype=np.complex128).reshape(-1)
    cdef cnp.float64_t[::1] amps_v = amps_flat
    cdef Py_ssize_t size = stack_flat.shape[0]
    out = np.empty(size, dtype=np.complex128)
    cdef cnp.float64_t[:, ::1] out_v = out.view(np.float64).reshape(size, 2)
    cdef cnp.float64_t[:, ::1] stack_v = stack_flat.view(np.float64).reshape(size, 2)
    cdef Py_ssize_t idx
    cdef double re, im, mag, scale
    for idx in range(size):
        re = stack_v[idx, 0]
        im = stack_v[idx, 1]
        mag = hypot(re, im)
        if mag >= 1e-300:
            scale = amps_v[idx] / mag
            out_v[idx, 0] = re * scale
            out_v[idx, 1] = im * scale
        else:
            out_v[idx, 0] = amps_v[idx]
            out_v[idx, 1] = 0.0
    return out.reshape(np.asarray(stack).shape)
