"""Annulus geometry and the two probe designs."""

import numpy as np
import pytest

from ptychokit.forward import dft2
from ptychokit.lens import (
    BlrDesignReport,
    LensSpec,
    annulus_indicator,
    make_blr_lens,
    make_small_lens,
)


def focus_disk(m, radius):
    center = (m - 1) / 2.0
    coords = np.arange(m) - center
    return np.hypot(coords[:, None], coords[None, :]) <= radius


class TestLensSpec:
    def test_defaults(self):
        spec = LensSpec(kind="small", m=16)
        assert spec.r_inner == 0.2
        assert spec.r_outer == 0.45
        assert spec.focus_radius is None
        assert spec.focus_radius_pixels == pytest.approx(0.16 * 16)

    def test_explicit_focus_radius_wins(self):
        spec = LensSpec(kind="blr", m=16, focus_radius=3.5)
        assert spec.focus_radius_pixels == 3.5

    @pytest.mark.parametrize(
        "kwargs, message",
        [
            (dict(kind="huge", m=8), "unknown lens kind"),
            (dict(kind="small", m=1), "at least 2"),
            (dict(kind="small", m=8, r_inner=0.5, r_outer=0.5), "r_inner < r_outer"),
            (dict(kind="small", m=8, r_inner=-0.1), "r_inner"),
            (dict(kind="small", m=8, r_outer=1.2), "r_outer"),
            (dict(kind="blr", m=8, focus_radius=0.0), "focus_radius"),
            (dict(kind="blr", m=8, design_iters=0), "design_iters"),
        ],
    )
    def test_rejects_bad_settings(self, kwargs, message):
        with pytest.raises(ValueError, match=message):
            LensSpec(**kwargs)


class TestAnnulusIndicator:
    def test_boundary_semantics(self):
        # strict lower edge, inclusive upper edge, radii as Nyquist fractions
        m = 8  # nyquist 4; annulus 1 < r <= 2
        ind = annulus_indicator(m, 0.25, 0.5)
        assert not ind[0, 1]  # radius 1: on the open lower edge
        assert ind[0, 2]  # radius 2: on the closed upper edge
        assert ind[1, 1]  # radius sqrt(2)
        assert not ind[0, 3]  # radius 3: outside
        assert not ind[0, 0]  # DC

    def test_wraps_around_corners(self):
        ind = annulus_indicator(8, 0.25, 0.5)
        # index 6 aliases to signed frequency -2, radius 2
        assert ind[0, 6]
        assert ind[6, 0]
        idx = (-np.arange(8)) % 8
        np.testing.assert_array_equal(ind, ind[np.ix_(idx, idx)])

    def test_full_band_still_excludes_dc(self):
        ind = annulus_indicator(6, 0.0, 1.0)
        assert not ind[0, 0]
        assert ind.sum() == 6 * 6 - 1 - 9  # corners beyond nyquist also drop

    def test_empty_when_band_misses_the_grid(self):
        assert not annulus_indicator(4, 0.0, 0.2).any()


class TestSmallLens:
    def test_unit_norm_and_real(self):
        lens = make_small_lens(LensSpec(kind="small", m=8))
        assert abs(np.linalg.norm(lens) - 1.0) < 1e-12
        assert np.abs(lens.imag).max() < 1e-12

    def test_spectrum_is_a_flat_annulus(self):
        spec = LensSpec(kind="small", m=8)
        spectrum = dft2(make_small_lens(spec))
        ind = annulus_indicator(8, spec.r_inner, spec.r_outer)
        on = np.abs(spectrum[ind])
        assert np.ptp(on) < 1e-12
        assert on.min() > 0.0
        assert np.abs(spectrum[~ind]).max() < 1e-12

    def test_deterministic(self):
        a = make_small_lens(LensSpec(kind="small", m=12))
        b = make_small_lens(LensSpec(kind="small", m=12))
        np.testing.assert_array_equal(a, b)

    def test_empty_annulus_raises(self):
        with pytest.raises(ValueError, match="empty"):
            make_small_lens(LensSpec(kind="small", m=4, r_inner=0.0, r_outer=0.2))

    def test_wrong_kind_raises(self):
        with pytest.raises(ValueError, match="kind='small'"):
            make_small_lens(LensSpec(kind="blr", m=8))


class TestBlrLens:
    def test_deterministic_per_seed(self):
        spec = LensSpec(kind="blr", m=16, seed=7)
        a, _ = make_blr_lens(spec)
        b, _ = make_blr_lens(spec)
        np.testing.assert_array_equal(a, b)
        c, _ = make_blr_lens(LensSpec(kind="blr", m=16, seed=8))
        assert np.abs(a - c).max() > 1e-3

    def test_unit_norm(self):
        lens, _ = make_blr_lens(LensSpec(kind="blr", m=16))
        assert abs(np.linalg.norm(lens) - 1.0) < 1e-12

    def test_spectrum_support_inside_annulus(self):
        # the loop ends on the Fourier restore, so the band limit is exact
        spec = LensSpec(kind="blr", m=16)
        lens, _ = make_blr_lens(spec)
        spectrum = dft2(lens)
        ind = annulus_indicator(16, spec.r_inner, spec.r_outer)
        assert np.abs(spectrum[~ind]).max() < 1e-12

    def test_design_loop_focuses_the_probe(self):
        # measured envelope for the reference design; the first iterate leaks
        # over 90% of its energy, two hundred sweeps bring that below 12%
        spec = LensSpec(
            kind="blr", m=64, r_inner=0.2, r_outer=0.45, focus_radius=10.0, design_iters=200
        )
        lens, report = make_blr_lens(spec)
        leak = float(np.sum(np.abs(lens[~focus_disk(64, 10.0)]) ** 2))
        assert leak < 0.12
        assert leak < report.focus_leak[0] / 5.0
        assert not report.stalled

    def test_report_tracks_every_iteration(self):
        _, report = make_blr_lens(LensSpec(kind="blr", m=16, design_iters=37))
        assert isinstance(report, BlrDesignReport)
        assert report.focus_leak.shape == (37,)
        assert report.annulus_gap.shape == (37,)
        assert np.all((report.focus_leak >= 0.0) & (report.focus_leak <= 1.0))
        assert np.all(report.annulus_gap >= 0.0)

    def test_wrong_kind_raises(self):
        with pytest.raises(ValueError, match="kind='blr'"):
            make_blr_lens(LensSpec(kind="small", m=8))

    def test_empty_annulus_raises(self):
        with pytest.raises(ValueError, match="empty"):
            make_blr_lens(LensSpec(kind="blr", m=4, r_inner=0.0, r_outer=0.2))
