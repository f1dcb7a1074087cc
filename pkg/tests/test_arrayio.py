"""PTYC array files, CSV traces, and the image previews."""

import struct

import numpy as np
import pytest

from ptychokit.arrayio import (
    CSV_HEADER,
    MAGIC,
    export_images,
    read_array,
    write_array,
    write_trace_csv,
)
from ptychokit.metrics import ConvergenceTrace, MetricsRow


class TestArrayRoundTrip:
    def test_complex_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        array = rng.standard_normal((3, 5, 4)) + 1j * rng.standard_normal((3, 5, 4))
        array[0, 0, 0] = 1e-300 + 1e300j
        path = str(tmp_path / "stack.ptyc")
        write_array(path, array)
        back = read_array(path)
        assert back.dtype == np.complex128
        np.testing.assert_array_equal(back, array)

    def test_real_bit_exact(self, tmp_path):
        rng = np.random.default_rng(1)
        array = rng.standard_normal((7, 2))
        path = str(tmp_path / "amps.ptyc")
        write_array(path, array)
        back = read_array(path)
        assert back.dtype == np.float64
        np.testing.assert_array_equal(back, array)

    def test_integer_input_promotes_to_float(self, tmp_path):
        path = str(tmp_path / "ints.ptyc")
        write_array(path, np.arange(6).reshape(2, 3))
        back = read_array(path)
        assert back.dtype == np.float64
        np.testing.assert_array_equal(back, np.arange(6.0).reshape(2, 3))

    def test_identical_arrays_share_identical_bytes(self, tmp_path):
        array = np.linspace(0.0, 1.0, 12).reshape(3, 4) * (1 + 2j)
        a, b = str(tmp_path / "a.ptyc"), str(tmp_path / "b.ptyc")
        write_array(a, array)
        write_array(b, array)
        assert open(a, "rb").read() == open(b, "rb").read()

    def test_overwrite_replaces_whole_file(self, tmp_path):
        path = str(tmp_path / "swap.ptyc")
        write_array(path, np.ones((20, 20)))
        write_array(path, np.zeros(3))
        np.testing.assert_array_equal(read_array(path), np.zeros(3))
        leftovers = [p for p in tmp_path.iterdir() if p.name != "swap.ptyc"]
        assert leftovers == []

    def test_header_layout(self, tmp_path):
        path = str(tmp_path / "layout.ptyc")
        write_array(path, np.zeros((2, 3), dtype=np.complex128))
        blob = open(path, "rb").read()
        assert blob[:4] == MAGIC
        version, code, ndim = struct.unpack("<BBB", blob[4:7])
        assert (version, code, ndim) == (1, 1, 2)
        assert struct.unpack("<2Q", blob[7:23]) == (2, 3)
        assert len(blob) == 23 + 2 * 3 * 16

    def test_rejects_object_dtype(self, tmp_path):
        with pytest.raises(ValueError, match="unsupported dtype"):
            write_array(str(tmp_path / "bad.ptyc"), np.array(["x", "y"]))


class TestReadErrors:
    def test_wrong_magic(self, tmp_path):
        path = tmp_path / "junk.ptyc"
        path.write_bytes(b"JUNK" + bytes(20))
        with pytest.raises(ValueError, match="not a PTYC"):
            read_array(str(path))

    def test_unsupported_version(self, tmp_path):
        path = tmp_path / "vers.ptyc"
        path.write_bytes(MAGIC + struct.pack("<BBB", 9, 1, 1) + struct.pack("<Q", 0))
        with pytest.raises(ValueError, match="version 9"):
            read_array(str(path))

    def test_unknown_dtype_code(self, tmp_path):
        path = tmp_path / "code.ptyc"
        path.write_bytes(MAGIC + struct.pack("<BBB", 1, 7, 1) + struct.pack("<Q", 0))
        with pytest.raises(ValueError, match="dtype code 7"):
            read_array(str(path))

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "short.ptyc"
        path.write_bytes(MAGIC + struct.pack("<BBB", 1, 1, 3) + bytes(8))
        with pytest.raises(ValueError, match="truncated"):
            read_array(str(path))

    def test_truncated_payload(self, tmp_path):
        good = tmp_path / "good.ptyc"
        write_array(str(good), np.ones((4, 4)))
        blob = good.read_bytes()
        bad = tmp_path / "cut.ptyc"
        bad.write_bytes(blob[:-8])
        with pytest.raises(ValueError, match="expected"):
            read_array(str(bad))


def sample_trace():
    rows = (
        MetricsRow(iteration=0, eps_a=0.5, eps_fq=0.0, eps_afq=0.5, eps_0=None, eps_delta=0.25),
        MetricsRow(iteration=1, eps_a=0.125, eps_fq=0.0, eps_afq=0.125, eps_0=None, eps_delta=None),
    )
    return ConvergenceTrace(rows=rows, amps_norm=2.0)


class TestTraceCsv:
    def test_layout_and_cells(self, tmp_path):
        path = str(tmp_path / "trace.csv")
        write_trace_csv(path, sample_trace(), comments={"algorithm": "ap", "seed": 3})
        text = open(path, encoding="ascii").read()
        lines = text.splitlines()
        assert lines[0] == "# algorithm=ap"
        assert lines[1] == "# seed=3"
        assert lines[2] == CSV_HEADER
        assert lines[3] == "0,0.5,0.0,0.5,,0.25"
        assert lines[4] == "1,0.125,0.0,0.125,,"
        assert text.endswith("\n")

    def test_no_comments_starts_with_header(self, tmp_path):
        path = str(tmp_path / "bare.csv")
        write_trace_csv(path, sample_trace())
        assert open(path).readline().rstrip("\n") == CSV_HEADER

    def test_cells_round_trip_through_repr(self, tmp_path):
        value = 1.0 / 3.0
        rows = (
            MetricsRow(iteration=0, eps_a=value, eps_fq=value, eps_afq=value, eps_0=value, eps_delta=None),
        )
        path = str(tmp_path / "rt.csv")
        write_trace_csv(path, ConvergenceTrace(rows=rows, amps_norm=1.0))
        cells = open(path).readlines()[1].rstrip("\n").split(",")
        assert float(cells[1]) == value


class TestExportImages:
    def test_writes_parseable_previews(self, tmp_path):
        rng = np.random.default_rng(2)
        image = rng.standard_normal((5, 8)) + 1j * rng.standard_normal((5, 8))
        pgm, ppm = export_images(image, str(tmp_path / "out"))
        assert pgm.endswith("out_magnitude.pgm")
        assert ppm.endswith("out_phase.ppm")
        blob = open(pgm, "rb").read()
        assert blob.startswith(b"P5\n8 5\n255\n")
        assert len(blob) == len(b"P5\n8 5\n255\n") + 5 * 8
        blob = open(ppm, "rb").read()
        assert blob.startswith(b"P6\n8 5\n255\n")
        assert len(blob) == len(b"P6\n8 5\n255\n") + 5 * 8 * 3

    def test_magnitude_scaling(self, tmp_path):
        image = np.array([[0.0, 1.0], [2.0, 4.0]], dtype=np.complex128)
        pgm, _ = export_images(image, str(tmp_path / "scale"))
        payload = open(pgm, "rb").read().split(b"\n", 3)[3]
        assert list(payload) == [0, 64, 128, 255]

    def test_zero_image_is_black(self, tmp_path):
        pgm, ppm = export_images(np.zeros((2, 2), dtype=np.complex128), str(tmp_path / "dark"))
        assert open(pgm, "rb").read().split(b"\n", 3)[3] == bytes(4)
        assert open(ppm, "rb").read().split(b"\n", 3)[3] == bytes(12)

    def test_rejects_non_2d(self, tmp_path):
        with pytest.raises(ValueError, match="2-D"):
            export_images(np.zeros((2, 2, 2)), str(tmp_path / "bad"))
