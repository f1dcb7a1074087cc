"""Amplitude and range projections plus the measurement truncation mask."""

import numpy as np
import pytest

from ptychokit.projectors import (
    TruncationMask,
    project_amplitude,
    project_range,
    truncation_mask,
)
from ptychokit.verify import dense_range_matrix


def random_stack(model, seed):
    rng = np.random.default_rng(seed)
    shape = (model.frame_count, model.m, model.m)
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


class TestProjectAmplitude:
    def test_scalar_examples(self):
        amps = np.array([2.0, 5.0])
        spectra = np.array([3.0j, 0.0 + 0.0j])
        out = project_amplitude(amps, spectra)
        np.testing.assert_allclose(out, [2.0j, 5.0], atol=1e-15)

    def test_magnitudes_match_exactly(self, tiny):
        model, _, amps = tiny
        out = project_amplitude(amps, random_stack(model, 0))
        np.testing.assert_allclose(np.abs(out), amps, atol=1e-13)

    def test_idempotent(self, tiny):
        model, _, amps = tiny
        once = project_amplitude(amps, random_stack(model, 1))
        twice = project_amplitude(amps, once)
        np.testing.assert_allclose(twice, once, atol=1e-13)

    def test_preserves_phases(self, tiny):
        model, _, amps = tiny
        z = random_stack(model, 2)
        out = project_amplitude(amps, z)
        # out = amps * z / |z| entrywise
        np.testing.assert_allclose(out, amps * z / np.abs(z), atol=1e-13)

    def test_phase_equivariant(self, tiny):
        model, _, amps = tiny
        z = random_stack(model, 3)
        np.testing.assert_allclose(
            project_amplitude(amps, np.exp(0.3j) * z),
            np.exp(0.3j) * project_amplitude(amps, z),
            atol=1e-13,
        )

    def test_zero_entries_take_phase_zero(self):
        amps = np.array([1.5, 2.5])
        spectra = np.array([0.0j, 1e-310 + 0.0j])
        np.testing.assert_array_equal(project_amplitude(amps, spectra), [1.5, 2.5])

    def test_nearest_point_on_torus(self, tiny):
        model, _, amps = tiny
        rng = np.random.default_rng(4)
        z = random_stack(model, 5)
        proj = project_amplitude(amps, z)
        best = np.linalg.norm(z - proj)
        for _ in range(100):
            phases = np.exp(2j * np.pi * rng.random(amps.shape))
            assert np.linalg.norm(z - amps * phases) >= best - 1e-12

    def test_rejects_negative_amplitudes(self):
        with pytest.raises(ValueError, match="nonnegative"):
            project_amplitude(np.array([-1.0]), np.array([1.0 + 0j]))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape mismatch"):
            project_amplitude(np.ones(3), np.ones(4, dtype=np.complex128))


class TestProjectRange:
    def test_fixes_achievable_spectra(self, tiny):
        model, truth, _ = tiny
        spectra = model.apply_fq(truth)
        out = project_range(model, spectra)
        assert np.linalg.norm(out - spectra) < 1e-12 * np.linalg.norm(spectra)

    def test_idempotent(self, tiny):
        model, _, _ = tiny
        z = random_stack(model, 6)
        once = project_range(model, z)
        twice = project_range(model, once)
        assert np.linalg.norm(twice - once) < 1e-12 * np.linalg.norm(once)

    def test_self_adjoint(self, tiny):
        model, _, _ = tiny
        u, v = random_stack(model, 7), random_stack(model, 8)
        lhs = np.vdot(project_range(model, u), v)
        rhs = np.vdot(u, project_range(model, v))
        assert abs(lhs - rhs) < 1e-12 * abs(lhs)

    def test_linear(self, tiny):
        model, _, _ = tiny
        u, v = random_stack(model, 9), random_stack(model, 10)
        np.testing.assert_allclose(
            project_range(model, u + 0.5j * v),
            project_range(model, u) + 0.5j * project_range(model, v),
            atol=1e-12,
        )

    def test_non_expansive(self, tiny):
        model, _, _ = tiny
        for seed in range(5):
            z = random_stack(model, 20 + seed)
            assert np.linalg.norm(project_range(model, z)) <= np.linalg.norm(z) + 1e-12

    def test_matches_dense_pseudo_inverse(self, tiny):
        model, _, _ = tiny
        S = dense_range_matrix(model)
        dense_proj = S @ np.linalg.pinv(S)
        z = random_stack(model, 11)
        expected = (dense_proj @ z.reshape(-1)).reshape(z.shape)
        assert np.linalg.norm(project_range(model, z) - expected) < 1e-10 * np.linalg.norm(z)


class TestTruncationMask:
    def test_half_keep_example(self):
        mask = truncation_mask(np.array([1.0, 2.0, 3.0, 4.0]), 0.5)
        assert mask.threshold == pytest.approx(2.5)
        np.testing.assert_array_equal(mask.keep, [False, False, True, True])
        assert mask.kept_fraction == 0.5

    def test_keep_everything(self):
        amps = np.array([0.0, 1.0, 2.0])
        mask = truncation_mask(amps, 1.0)
        assert mask.threshold == 0.0
        np.testing.assert_array_equal(mask.keep, [False, True, True])

    def test_continuous_amplitudes_keep_expected_count(self):
        rng = np.random.default_rng(12)
        amps = rng.uniform(0.1, 2.0, size=400)
        mask = truncation_mask(amps, 0.8)
        assert abs(int(mask.keep.sum()) - 320) <= 1

    def test_ties_at_threshold_are_dropped(self):
        # strict comparison: a constant stack keeps nothing below keep=1
        mask = truncation_mask(np.full(8, 3.0), 0.5)
        assert not mask.keep.any()

    def test_apply_zeroes_dropped_entries(self):
        amps = np.array([1.0, 2.0, 3.0, 4.0])
        z = np.array([1j, 2j, 3j, 4j])
        masked = truncation_mask(amps, 0.5).apply(z)
        np.testing.assert_array_equal(masked, [0.0, 0.0, 3j, 4j])

    def test_mask_shape_follows_stack(self, tiny):
        _, _, amps = tiny
        mask = truncation_mask(amps, 0.3)
        assert mask.keep.shape == amps.shape
        assert 0.2 < mask.kept_fraction < 0.4

    @pytest.mark.parametrize("keep", [0.0, -0.1, 1.5])
    def test_rejects_bad_fraction(self, keep):
        with pytest.raises(ValueError):
            truncation_mask(np.ones(4), keep)

    def test_dataclass_round_trip(self):
        mask = TruncationMask(keep=np.array([True, False]), threshold=1.0)
        np.testing.assert_array_equal(mask.apply(np.array([2j, 3j])), [2j, 0.0])
        assert mask.kept_fraction == 0.5
