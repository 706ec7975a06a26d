import numpy as np
import pytest

from unbend import (
    CylinderSpec,
    ScalarVolume,
    StraightVolumeSpec,
    make_bent_cylinder,
    normalized_l2,
    reduce_keyframes,
    straighten,
)
from unbend.errors import DimsMismatch, DoesNotFit


class TestMakeBentCylinder:
    def test_zero_amplitude_equals_straight(self):
        spec = CylinderSpec(radius=5.0, amplitude=0.0, periods=1.0, dims=(48, 48, 48))
        bent, straight, rig = make_bent_cylinder(spec)
        # with A=0 the tube occupies the centered axial slab; the slab is
        # voxel-aligned because the default span is integral
        k0 = int(round(spec._z_start / spec.spacing[2]))
        slab = bent.data[:, :, k0 : k0 + straight.dims[2]]
        assert np.max(np.abs(slab - straight.data)) <= 1e-6
        assert rig.total_arclength == pytest.approx(spec.axial_span, abs=1e-9)

    def test_mirror_symmetry_integer_periods(self):
        spec = CylinderSpec(radius=4.0, amplitude=5.0, periods=1.0, dims=(48, 48, 48))
        bent, straight, rig = make_bent_cylinder(spec)
        # one full period: flipping the box in z mirrors the sinusoid in x
        flipped = bent.data[::-1, :, ::-1]
        assert np.max(np.abs(bent.data - flipped)) <= 1e-6

    def test_slab_centroids_follow_sinusoid(self, small_sine):
        spec, bent, straight, rig = small_sine
        xs = (np.arange(spec.dims[0]) + 0.5) * spec.spacing[0]
        ys = (np.arange(spec.dims[1]) + 0.5) * spec.spacing[1]
        z0 = spec._z_start
        for k in range(int(z0) + 3, int(z0 + spec.axial_span) - 3, 5):
            slab = bent.data[:, :, k].astype(np.float64)
            mass = slab.sum()
            assert mass > 0
            cx = float((xs[:, None] * slab).sum() / mass)
            cy = float((ys[None, :] * slab).sum() / mass)
            z = (k + 0.5) * spec.spacing[2]
            truth = spec.curve_points(np.array([z]))[0]
            assert np.hypot(cx - truth[0], cy - truth[1]) <= 1.0

    def test_true_rig_satisfies_invariants(self, small_sine):
        spec, bent, straight, rig = small_sine
        for kf in rig.keyframes:
            assert np.max(np.abs(kf.frame @ kf.frame.T - np.eye(3))) <= 1e-9
            assert np.linalg.det(kf.frame) == pytest.approx(1.0, abs=1e-9)
            assert kf.extent[0] > 0 and kf.extent[1] > 0
        assert np.all(np.diff(rig.cum_arclength) > 0)
        assert rig.cum_arclength[0] == 0.0

    def test_does_not_fit(self):
        with pytest.raises(DoesNotFit):
            make_bent_cylinder(
                CylinderSpec(radius=20.0, amplitude=10.0, periods=1.0, dims=(32, 32, 32))
            )


class TestNormalizedL2:
    def _vol(self, data):
        return ScalarVolume(data.astype(np.float32), (1, 1, 1), (0.5, 0.5, 0.5))

    def test_identical_is_zero(self):
        rng = np.random.default_rng(60)
        a = self._vol(rng.random((6, 6, 10)))
        assert normalized_l2(a, a) == 0.0

    def test_constant_offset_algebra(self):
        base = np.full((4, 5, 8), 0.3)
        a = self._vol(base + 0.1)
        b = self._vol(base)
        n_vox = 4 * 5 * 8
        length = 8.0
        expected = 0.1 * np.sqrt(n_vox) / length
        assert normalized_l2(a, b) == pytest.approx(expected, rel=1e-5)

    def test_symmetry_of_unnormalized_part(self):
        rng = np.random.default_rng(61)
        a = self._vol(rng.random((5, 5, 5)))
        b = self._vol(rng.random((5, 5, 5)))
        assert normalized_l2(a, b) == pytest.approx(normalized_l2(b, a))

    def test_dims_mismatch(self):
        a = self._vol(np.zeros((4, 4, 4)))
        b = self._vol(np.zeros((4, 4, 5)))
        with pytest.raises(DimsMismatch):
            normalized_l2(a, b)

    def test_more_keyframes_fit_no_worse(self, small_pipeline):
        from unbend import SetExtent, apply_edit

        spec, bent, straight, true_rig, result = small_pipeline
        gt_spec = StraightVolumeSpec(straight.dims, straight.spacing)

        def fit(radius):
            rig = reduce_keyframes(result.skeleton, radius)
            # equalize cages so only curve fidelity differs between fits
            for i in range(len(rig.keyframes)):
                rig = apply_edit(rig, SetExtent(i, spec.radius + 2, spec.radius + 2))
            return rig

        coarse = fit(64.0)  # chord rig
        fine = fit(2.0)
        err_coarse = normalized_l2(straighten(coarse, bent, gt_spec), straight)
        err_fine = normalized_l2(straighten(fine, bent, gt_spec), straight)
        assert len(fine.keyframes) > len(coarse.keyframes)
        assert err_fine <= err_coarse
