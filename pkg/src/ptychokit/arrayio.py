"""On-disk formats: PTYC binary arrays, metric CSV traces, PGM/PPM previews.

All writers go through a temp-file-then-rename step so readers never observe
partial files, and all payloads are little endian with fixed dtypes so a
given array maps to one exact byte sequence.
"""

from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

from .metrics import ConvergenceTrace

__all__ = [
    "export_images",
    "read_array",
    "write_array",
    "write_trace_csv",
]

MAGIC = b"PTYC"
VERSION = 1
DTYPE_COMPLEX = 1
DTYPE_REAL = 2
CSV_HEADER = "iter,eps_a,eps_fq,eps_afq,eps_0,eps_delta"


def _atomic_write(path: str, payload: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def write_array(path: str, array: np.ndarray) -> None:
    """Serialize an array: magic, version, dtype and ndim bytes, u64 dims, payload.

    Complex input is stored as little-endian complex128 (interleaved
    real/imag), everything else as little-endian float64, row major. Round
    trips are bit exact.
    """
    array = np.asarray(array)
    if np.iscomplexobj(array):
        code = DTYPE_COMPLEX
        data = np.ascontiguousarray(array, dtype="<c16")
    elif array.dtype.kind in "fiu" or array.dtype.kind == "b":
        code = DTYPE_REAL
        data = np.ascontiguousarray(array, dtype="<f8")
    else:
        raise ValueError(f"unsupported dtype {array.dtype}")
    header = MAGIC + struct.pack("<BBB", VERSION, code, data.ndim)
    header += struct.pack(f"<{data.ndim}Q", *data.shape)
    _atomic_write(path, header + data.tobytes(order="C"))


def read_array(path: str) -> np.ndarray:
    """Read an array written by write_array; raises ValueError on malformed files."""
    with open(path, "rb") as handle:
        blob = handle.read()
    if len(blob) < 7 or blob[:4] != MAGIC:
        raise ValueError(f"{path}: not a PTYC array file")
    version, code, ndim = struct.unpack("<BBB", blob[4:7])
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    if code not in (DTYPE_COMPLEX, DTYPE_REAL):
        raise ValueError(f"{path}: unknown dtype code {code}")
    offset = 7 + 8 * ndim
    if len(blob) < offset:
        raise ValueError(f"{path}: truncated header")
    shape = struct.unpack(f"<{ndim}Q", blob[7:offset])
    dtype = "<c16" if code == DTYPE_COMPLEX else "<f8"
    expected = int(np.prod(shape, dtype=np.int64)) * (16 if code == DTYPE_COMPLEX else 8)
    payload = blob[offset:]
    if len(payload) != expected:
        raise ValueError(f"{path}: payload holds {len(payload)} bytes, expected {expected}")
    return np.frombuffer(payload, dtype=dtype).reshape(shape).copy()


def _format_cell(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def write_trace_csv(path: str, trace: ConvergenceTrace, comments: dict | None = None) -> None:
    """Write a metric trace as CSV with optional leading '# key=value' lines.

    Floats use shortest round-trip formatting; unavailable cells stay empty.
    """
    lines = []
    for key, value in (comments or {}).items():
        lines.append(f"# {key}={value}")
    lines.append(CSV_HEADER)
    for row in trace.rows:
        lines.append(
            ",".join(
                [
                    str(row.iteration),
                    _format_cell(row.eps_a),
                    _format_cell(row.eps_fq),
                    _format_cell(row.eps_afq),
                    _format_cell(row.eps_0),
                    _format_cell(row.eps_delta),
                ]
            )
        )
    _atomic_write(path, ("\n".join(lines) + "\n").encode("ascii"))


def _hsv_to_rgb(h: np.ndarray, s: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Vectorized HSV to RGB, all channels in [0, 1]."""
    sector = np.floor(h * 6.0) % 6
    frac = h * 6.0 - np.floor(h * 6.0)
    p = v * (1.0 - s)
    q = v * (1.0 - s * frac)
    t = v * (1.0 - s * (1.0 - frac))
    rgb = np.zeros(h.shape + (3,))
    for idx, channels in enumerate([(v, t, p), (q, v, p), (p, v, t), (p, q, v), (t, p, v), (v, p, q)]):
        mask = sector == idx
        for c in range(3):
            rgb[..., c][mask] = channels[c][mask]
    return rgb


def export_images(image: np.ndarray, out_prefix: str) -> tuple[str, str]:
    """Write magnitude and phase previews of a complex grid.

    <prefix>_magnitude.pgm is binary P5 with magnitudes scaled onto 0..255;
    <prefix>_phase.ppm is binary P6 mapping phase to hue and magnitude to
    value. Returns the two paths.
    """
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError("export_images expects a 2-D grid")
    mag = np.abs(image)
    peak = mag.max()
    scaled = mag / peak if peak > 0 else np.zeros_like(mag)
    gray = np.round(scaled * 255.0).astype(np.uint8)
    h, w = gray.shape
    pgm_path = f"{out_prefix}_magnitude.pgm"
    _atomic_write(pgm_path, f"P5\n{w} {h}\n255\n".encode("ascii") + gray.tobytes())
    hue = (np.angle(image) + np.pi) / (2.0 * np.pi)
    rgb = _hsv_to_rgb(hue % 1.0, np.ones_like(hue), scaled)
    rgb8 = np.round(rgb * 255.0).astype(np.uint8)
    ppm_path = f"{out_prefix}_phase.ppm"
    _atomic_write(ppm_path, f"P6\n{w} {h}\n255\n".encode("ascii") + rgb8.tobytes())
    return pgm_path, ppm_path
