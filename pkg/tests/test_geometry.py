"""Index maps, scan lattices, scheme validation, and sub-pixel probe shifts."""

import numpy as np
import pytest

from ptychokit.geometry import (
    IlluminationScheme,
    build_scheme,
    shifted_probe,
    stack_index,
    stack_index_inverse,
    validate_scheme,
    window_index,
    window_index_inverse,
)


class TestWindowIndex:
    def test_examples(self):
        assert window_index(0, 0, 4) == 0
        assert window_index(1, 2, 4) == 6
        assert window_index(3, 3, 4) == 15

    def test_round_trip_is_a_bijection(self):
        m = 5
        seen = set()
        for alpha in range(m):
            for beta in range(m):
                rank = window_index(alpha, beta, m)
                assert window_index_inverse(rank, m) == (alpha, beta)
                seen.add(rank)
        assert seen == set(range(m * m))

    @pytest.mark.parametrize("alpha,beta", [(-1, 0), (0, -1), (4, 0), (0, 4)])
    def test_out_of_window_raises(self, alpha, beta):
        with pytest.raises(ValueError):
            window_index(alpha, beta, 4)

    def test_inverse_range_check(self):
        with pytest.raises(ValueError):
            window_index_inverse(16, 4)
        with pytest.raises(ValueError):
            window_index_inverse(-1, 4)


class TestStackIndex:
    def test_examples(self):
        assert stack_index(0, 5, 4) == 5
        assert stack_index(2, 0, 4) == 32
        assert stack_index(1, 15, 4) == 31

    def test_round_trip_covers_stack(self):
        m, frames = 3, 4
        flats = [
            stack_index(k, r, m) for k in range(frames) for r in range(m * m)
        ]
        assert flats == list(range(frames * m * m))
        for flat in flats:
            frame, rank = stack_index_inverse(flat, m)
            assert stack_index(frame, rank, m) == flat

    def test_composes_with_window_index(self):
        m = 4
        flat = stack_index(2, window_index(1, 3, m), m)
        frame, rank = stack_index_inverse(flat, m)
        assert frame == 2
        assert window_index_inverse(rank, m) == (1, 3)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            stack_index(-1, 0, 4)
        with pytest.raises(ValueError):
            stack_index(0, 16, 4)
        with pytest.raises(ValueError):
            stack_index_inverse(-1, 4)


class TestIlluminationScheme:
    def test_positions_are_float_and_read_only(self):
        scheme = IlluminationScheme(n=8, m=4, positions=[[0, 0], [2, 2], [4, 4]])
        assert scheme.positions.dtype == np.float64
        with pytest.raises(ValueError):
            scheme.positions[0, 0] = 1.0
        assert scheme.frame_count == 3

    def test_anchors_and_fractions_split_positions(self):
        scheme = IlluminationScheme(n=16, m=4, positions=[[1.25, 3.0], [0.0, 11.75]])
        assert scheme.anchors.tolist() == [[1, 3], [0, 11]]
        np.testing.assert_allclose(scheme.fractions, [[0.25, 0.0], [0.0, 0.75]])
        assert scheme.anchors.dtype == np.int64

    def test_window_must_stay_inside_grid(self):
        with pytest.raises(ValueError):
            IlluminationScheme(n=8, m=4, positions=[[0, 4.5]])
        with pytest.raises(ValueError):
            IlluminationScheme(n=8, m=4, positions=[[-0.5, 0]])

    def test_boundary_position_is_allowed(self):
        scheme = IlluminationScheme(n=8, m=4, positions=[[0, 0], [4.0, 4.0], [2, 2]])
        assert scheme.frame_count == 3

    def test_rejects_bad_shapes_and_sizes(self):
        with pytest.raises(ValueError):
            IlluminationScheme(n=8, m=4, positions=[[0, 0, 0]])
        with pytest.raises(ValueError):
            IlluminationScheme(n=8, m=4, positions=np.empty((0, 2)))
        with pytest.raises(ValueError):
            IlluminationScheme(n=4, m=8, positions=[[0, 0]])


class TestBuildScheme:
    def test_desk_lattice_is_13_by_13_and_exact(self):
        scheme = build_scheme(64, 16, dx=4, dy=4)
        assert scheme.frame_count == 169
        expected = [(float(r), float(c)) for r in range(0, 49, 4) for c in range(0, 49, 4)]
        got = [tuple(p) for p in scheme.positions]
        assert got == expected

    def test_zero_jitter_ignores_seed(self):
        a = build_scheme(64, 16, dx=4, dy=4, seed=0)
        b = build_scheme(64, 16, dx=4, dy=4, seed=99)
        np.testing.assert_array_equal(a.positions, b.positions)

    def test_wide_lattice_is_25_by_25(self):
        scheme = build_scheme(512, 128, dx=16, dy=16, jitter=1.5, shear=True, seed=7)
        assert scheme.frame_count == 625

    def test_dense_lattice_count_follows_clamped_domain(self):
        # Lattice steps live in [0, n - m], so spacing 8 over a 128-wide
        # offset range gives 17 values per axis.
        scheme = build_scheme(256, 128, dx=8, dy=8, jitter=1.5, shear=True, seed=1)
        assert scheme.frame_count == 17 * 17
        assert scheme.positions.min() >= 0.0
        assert scheme.positions.max() <= 128.0

    def test_shear_shifts_odd_rows_by_half_spacing(self):
        plain = build_scheme(64, 16, dx=4, dy=4)
        sheared = build_scheme(64, 16, dx=4, dy=4, shear=True)
        rows = sheared.positions[:, 0]
        odd = (rows / 4.0).astype(int) % 2 == 1
        delta = sheared.positions[:, 1] - plain.positions[:, 1]
        # odd rows move right by dx/2 except where the clamp at n - m bites
        interior = odd & (sheared.positions[:, 1] < 48.0)
        np.testing.assert_allclose(delta[interior], 2.0)
        np.testing.assert_allclose(delta[~odd], 0.0)
        assert sheared.positions[:, 1].max() <= 48.0

    def test_jitter_is_seeded_and_bounded(self):
        base = build_scheme(64, 16, dx=4, dy=4)
        j1 = build_scheme(64, 16, dx=4, dy=4, jitter=1.5, seed=3)
        j2 = build_scheme(64, 16, dx=4, dy=4, jitter=1.5, seed=3)
        j3 = build_scheme(64, 16, dx=4, dy=4, jitter=1.5, seed=4)
        np.testing.assert_array_equal(j1.positions, j2.positions)
        assert not np.array_equal(j1.positions, j3.positions)
        moved = np.abs(j1.positions - base.positions)
        assert moved.max() <= 1.5 + 1e-12
        assert j1.positions.min() >= 0.0
        assert j1.positions.max() <= 48.0

    def test_rejects_bad_spacings(self):
        with pytest.raises(ValueError):
            build_scheme(64, 16, dx=0, dy=4)
        with pytest.raises(ValueError):
            build_scheme(64, 16, dx=4, dy=4, jitter=-1.0)
        with pytest.raises(ValueError):
            build_scheme(16, 32, dx=4, dy=4)

    def test_rejects_non_overlapping_tiling(self):
        # spacing == m tiles the grid with zero overlap, breaking connectivity
        with pytest.raises(ValueError, match="overlap"):
            build_scheme(8, 4, dx=4, dy=4)

    def test_returned_jittered_schemes_always_validate(self):
        # jitter draws are retried internally until the scheme is clean
        for seed in (0, 1, 2):
            scheme = build_scheme(64, 16, dx=4, dy=4, jitter=1.5, seed=seed)
            assert validate_scheme(scheme).ok


class TestValidateScheme:
    def test_valid_overlapping_tiling(self):
        scheme = IlluminationScheme(
            n=6, m=4, positions=[[0, 0], [0, 2], [2, 0], [2, 2]]
        )
        report = validate_scheme(scheme)
        assert report.ok
        assert report.duplicate_pairs == ()
        assert report.uncovered_pixels == 0
        assert report.isolated_frames == ()

    def test_single_full_frame_is_isolated(self):
        scheme = IlluminationScheme(n=4, m=4, positions=[[0, 0]])
        report = validate_scheme(scheme)
        assert not report.ok
        assert report.isolated_frames == (0,)
        assert report.uncovered_pixels == 0

    def test_duplicates_are_reported_as_index_pairs(self):
        scheme = IlluminationScheme(
            n=6, m=4, positions=[[0, 0], [0, 2], [2, 0], [2, 2], [0, 2]]
        )
        report = validate_scheme(scheme)
        assert not report.ok
        assert report.duplicate_pairs == ((1, 4),)

    def test_uncovered_pixels_are_counted(self):
        scheme = IlluminationScheme(n=8, m=4, positions=[[0, 0], [0, 2], [2, 0], [2, 2]])
        report = validate_scheme(scheme)
        assert not report.ok
        # windows end at row/col 6, leaving an L of width 2 uncovered
        assert report.uncovered_pixels == 64 - 36

    def test_isolated_frame_detected_among_many(self):
        scheme = IlluminationScheme(
            n=12, m=4, positions=[[0, 0], [0, 2], [2, 0], [2, 2], [8, 8]]
        )
        report = validate_scheme(scheme)
        assert not report.ok
        assert report.isolated_frames == (4,)

    def test_desk_scheme_is_clean(self):
        report = validate_scheme(build_scheme(64, 16, dx=4, dy=4))
        assert report.ok


class TestShiftedProbe:
    def test_zero_shift_is_exact_copy(self):
        rng = np.random.default_rng(0)
        lens = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        out = shifted_probe(lens, (0.0, 0.0))
        np.testing.assert_array_equal(out, lens)
        assert out is not lens

    def test_half_pixel_column_shift_averages_left_neighbor(self):
        lens = np.arange(16.0).reshape(4, 4)
        out = shifted_probe(lens, (0.0, 0.5))
        np.testing.assert_allclose(out[:, 1:], (lens[:, 1:] + lens[:, :-1]) / 2.0)
        np.testing.assert_allclose(out[:, 0], lens[:, 0] / 2.0)

    def test_half_pixel_row_shift_averages_upper_neighbor(self):
        lens = np.arange(16.0).reshape(4, 4)
        out = shifted_probe(lens, (0.5, 0.0))
        np.testing.assert_allclose(out[1:, :], (lens[1:, :] + lens[:-1, :]) / 2.0)
        np.testing.assert_allclose(out[0, :], lens[0, :] / 2.0)

    def test_matches_bilinear_oracle(self):
        rng = np.random.default_rng(5)
        lens = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        frow, fcol = 0.3, 0.85

        def sample(i, j):
            def at(r, c):
                if 0 <= r < 5 and 0 <= c < 5:
                    return lens[r, c]
                return 0.0

            return (
                (1 - frow) * (1 - fcol) * at(i, j)
                + frow * (1 - fcol) * at(i - 1, j)
                + (1 - frow) * fcol * at(i, j - 1)
                + frow * fcol * at(i - 1, j - 1)
            )

        expected = np.array([[sample(i, j) for j in range(5)] for i in range(5)])
        np.testing.assert_allclose(shifted_probe(lens, (frow, fcol)), expected, atol=1e-14)

    def test_constant_lens_stays_constant_on_interior(self):
        lens = np.full((6, 6), 2.5 + 0.5j)
        out = shifted_probe(lens, (0.25, 0.75))
        np.testing.assert_array_equal(out[1:, 1:], lens[1:, 1:])

    def test_zero_outside_support_convention(self):
        # corner sample at (-0.5, -0.5) only sees the one in-support neighbor
        lens = np.ones((4, 4))
        out = shifted_probe(lens, (0.5, 0.5))
        assert abs(out[0, 0] - 0.25) < 1e-15
        assert abs(out[0, 1] - 0.5) < 1e-15
        assert abs(out[1, 1] - 1.0) < 1e-15

    @pytest.mark.parametrize("frac", [(1.0, 0.0), (0.0, -0.1), (0.0, 1.5)])
    def test_rejects_shift_outside_unit_cell(self, frac):
        with pytest.raises(ValueError):
            shifted_probe(np.ones((4, 4)), frac)
