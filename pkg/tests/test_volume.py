import json

import numpy as np
import pytest

from unbend import (
    OccupancyMask,
    ScalarVolume,
    dilate_until_connected,
    downsample,
    export_volume,
    load_volume,
    threshold_occupancy,
    trilinear_sample,
)
from unbend.errors import (
    EmptyMask,
    MetadataMissing,
    SizeMismatch,
    UnsupportedScalarType,
)


def write_raw(tmp_path, name, data, meta):
    data_path = tmp_path / f"{name}.raw"
    meta_path = tmp_path / f"{name}.json"
    data_path.write_bytes(data)
    meta_path.write_text(json.dumps(meta))
    return data_path, meta_path


class TestLoadVolume:
    def test_u8_normalization_endpoints(self, tmp_path):
        raw = bytes([0, 255, 10, 20, 30, 40, 50, 60])
        paths = write_raw(
            tmp_path, "v", raw, {"dims": [2, 2, 2], "spacing": [1, 1, 1], "dtype": "u8"}
        )
        vol = load_volume(*paths)
        assert float(vol.data.min()) == 0.0
        assert float(vol.data.max()) == 1.0

    def test_size_mismatch(self, tmp_path):
        paths = write_raw(
            tmp_path, "v", bytes(7), {"dims": [2, 2, 2], "spacing": [1, 1, 1], "dtype": "u8"}
        )
        with pytest.raises(SizeMismatch):
            load_volume(*paths)

    def test_missing_meta(self, tmp_path):
        with pytest.raises(MetadataMissing):
            load_volume(tmp_path / "a.raw", tmp_path / "nope.json")

    def test_missing_key(self, tmp_path):
        paths = write_raw(tmp_path, "v", bytes(8), {"dims": [2, 2, 2], "dtype": "u8"})
        with pytest.raises(MetadataMissing):
            load_volume(*paths)

    def test_unsupported_dtype(self, tmp_path):
        paths = write_raw(
            tmp_path, "v", bytes(8),
            {"dims": [2, 2, 2], "spacing": [1, 1, 1], "dtype": "f64"},
        )
        with pytest.raises(UnsupportedScalarType):
            load_volume(*paths)

    def test_x_fastest_order(self, tmp_path):
        raw = bytes([0, 255, 0, 0, 0, 0, 0, 0])  # second byte is voxel (1,0,0)
        paths = write_raw(
            tmp_path, "v", raw, {"dims": [2, 2, 2], "spacing": [1, 1, 1], "dtype": "u8"}
        )
        vol = load_volume(*paths)
        assert vol.data[1, 0, 0] == 1.0
        assert vol.data[0, 1, 0] == 0.0

    def test_u16_range(self, tmp_path):
        raw = np.array([0, 65535, 100, 200], dtype="<u2").tobytes()
        paths = write_raw(
            tmp_path, "v", raw, {"dims": [4, 1, 1], "spacing": [1, 1, 1], "dtype": "u16"}
        )
        vol = load_volume(*paths)
        assert vol.data[1, 0, 0] == 1.0

    def test_f32_clamped(self, tmp_path):
        raw = np.array([-0.5, 0.25, 1.5, np.nan], dtype="<f4").tobytes()
        paths = write_raw(
            tmp_path, "v", raw, {"dims": [4, 1, 1], "spacing": [1, 1, 1], "dtype": "f32"}
        )
        vol = load_volume(*paths)
        assert np.all(vol.data >= 0.0) and np.all(vol.data <= 1.0)
        assert vol.data[1, 0, 0] == pytest.approx(0.25)

    def test_export_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        vol = ScalarVolume(
            rng.random((5, 4, 3)).astype(np.float32), (0.5, 1.0, 2.0), (1, 2, 3)
        )
        export_volume(vol, tmp_path / "o.raw", tmp_path / "o.json")
        back = load_volume(tmp_path / "o.raw", tmp_path / "o.json")
        assert np.array_equal(back.data, vol.data)
        assert back.spacing == vol.spacing
        assert back.origin == vol.origin
        assert (tmp_path / "o.raw").stat().st_size == 4 * 5 * 4 * 3


class TestTrilinearSample:
    def test_voxel_center_exact(self):
        rng = np.random.default_rng(1)
        vol = ScalarVolume(rng.random((4, 5, 6)).astype(np.float32), (1, 1, 1), (0, 0, 0))
        assert trilinear_sample(vol, (2.0, 3.0, 4.0)) == pytest.approx(
            float(vol.data[2, 3, 4]), abs=1e-7
        )

    def test_midpoint_is_half(self):
        data = np.zeros((2, 1, 1), dtype=np.float32)
        data[1] = 1.0
        vol = ScalarVolume(data, (1, 1, 1), (0, 0, 0))
        assert trilinear_sample(vol, (0.5, 0.0, 0.0)) == pytest.approx(0.5)

    def test_far_outside_is_zero(self):
        vol = ScalarVolume(np.ones((3, 3, 3), dtype=np.float32), (1, 1, 1), (0, 0, 0))
        assert trilinear_sample(vol, (100.0, -50.0, 3.0)) == 0.0

    def test_just_outside_lattice_is_zero(self):
        vol = ScalarVolume(np.ones((3, 3, 3), dtype=np.float32), (1, 1, 1), (0, 0, 0))
        assert trilinear_sample(vol, (-0.01, 1.0, 1.0)) == 0.0
        assert trilinear_sample(vol, (2.01, 1.0, 1.0)) == 0.0

    def test_within_neighbor_bounds(self):
        rng = np.random.default_rng(2)
        vol = ScalarVolume(rng.random((6, 6, 6)).astype(np.float32), (1, 1, 1), (0, 0, 0))
        pts = rng.uniform(0, 5, size=(200, 3))
        vals = trilinear_sample(vol, pts)
        lo = np.floor(pts).astype(int)
        for p, v in zip(lo, vals):
            block = vol.data[p[0] : p[0] + 2, p[1] : p[1] + 2, p[2] : p[2] + 2]
            assert block.min() - 1e-6 <= v <= block.max() + 1e-6

    def test_respects_spacing_and_origin(self):
        rng = np.random.default_rng(3)
        vol = ScalarVolume(
            rng.random((4, 4, 4)).astype(np.float32), (2.0, 0.5, 1.0), (10.0, -5.0, 0.0)
        )
        assert trilinear_sample(vol, (10 + 2 * 2, -5 + 0.5 * 3, 1.0)) == pytest.approx(
            float(vol.data[2, 3, 1]), abs=1e-7
        )


class TestDownsample:
    def test_constant_stays_constant(self):
        vol = ScalarVolume(np.full((8, 8, 8), 0.37, dtype=np.float32), (1, 1, 1), (0, 0, 0))
        out = downsample(vol, 64)
        assert np.allclose(out.data, 0.37, atol=1e-6)

    def test_factor_two_dims(self):
        vol = ScalarVolume(np.zeros((4, 4, 4), dtype=np.float32), (1, 1, 1), (0, 0, 0))
        out = downsample(vol, 8)
        assert out.dims == (2, 2, 2)
        assert out.spacing == (2.0, 2.0, 2.0)

    def test_checkerboard_means_half(self):
        idx = np.indices((4, 4, 4)).sum(axis=0)
        vol = ScalarVolume((idx % 2).astype(np.float32), (1, 1, 1), (0, 0, 0))
        out = downsample(vol, 8)
        assert np.allclose(out.data, 0.5)

    def test_within_budget_unchanged(self):
        vol = ScalarVolume(np.zeros((4, 4, 4), dtype=np.float32), (1, 1, 1), (0, 0, 0))
        assert downsample(vol, 64) is vol

    def test_mean_preserved_under_replication(self):
        rng = np.random.default_rng(4)
        vol = ScalarVolume(rng.random((8, 8, 8)).astype(np.float32), (1, 1, 1), (0, 0, 0))
        out = downsample(vol, 64)  # factor 2, divides evenly
        up = np.repeat(np.repeat(np.repeat(out.data, 2, 0), 2, 1), 2, 2)
        assert abs(float(up.mean()) - float(vol.data.mean())) <= 1e-6


class TestThresholdOccupancy:
    def test_single_voxel_above(self):
        data = np.array([0.0, 0.04, 0.8]).reshape(3, 1, 1).astype(np.float32)
        mask = threshold_occupancy(ScalarVolume(data, (1, 1, 1), (0, 0, 0)), 0.5)
        assert int(mask.bits.sum()) == 1

    def test_tau_zero_strict(self):
        data = np.array([0.0, 0.01, 0.0, 0.5]).reshape(4, 1, 1).astype(np.float32)
        mask = threshold_occupancy(ScalarVolume(data, (1, 1, 1), (0, 0, 0)), 0.0)
        assert int(mask.bits.sum()) == 2

    def test_empty_mask(self):
        vol = ScalarVolume(np.zeros((3, 3, 3), dtype=np.float32), (1, 1, 1), (0, 0, 0))
        with pytest.raises(EmptyMask):
            threshold_occupancy(vol, 0.5)

    def test_cylinder_count_near_analytic(self, small_sine):
        spec, bent, straight, true_rig = small_sine
        mask = threshold_occupancy(straight, 0.5)
        analytic = np.pi * spec.radius**2 * straight.dims[2] * straight.spacing[2]
        assert abs(int(mask.bits.sum()) - analytic) <= 0.05 * analytic

    def test_monotone_in_tau(self):
        rng = np.random.default_rng(5)
        vol = ScalarVolume(rng.random((6, 6, 6)).astype(np.float32), (1, 1, 1), (0, 0, 0))
        lo = threshold_occupancy(vol, 0.3)
        hi = threshold_occupancy(vol, 0.6)
        assert np.all(lo.bits[hi.bits])  # occupied(0.6) subset of occupied(0.3)


def brute_force_dilation_count(bits):
    """Independent oracle: set-based 6-neighborhood growth until connected."""
    dims = bits.shape
    cells = {tuple(c) for c in np.argwhere(bits)}

    def components(cells):
        remaining = set(cells)
        count = 0
        while remaining:
            count += 1
            stack = [remaining.pop()]
            while stack:
                c = stack.pop()
                for d in ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)):
                    n = (c[0] + d[0], c[1] + d[1], c[2] + d[2])
                    if n in remaining:
                        remaining.remove(n)
                        stack.append(n)
        return count

    rounds = 0
    while components(cells) > 1:
        grown = set(cells)
        for c in cells:
            for d in ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)):
                n = (c[0] + d[0], c[1] + d[1], c[2] + d[2])
                if all(0 <= n[i] < dims[i] for i in range(3)):
                    grown.add(n)
        cells = grown
        rounds += 1
    return rounds


class TestDilateUntilConnected:
    def test_connected_blob_unchanged(self):
        bits = np.zeros((5, 5, 5), dtype=bool)
        bits[1:4, 1:4, 1:4] = True
        mask, count = dilate_until_connected(OccupancyMask(bits))
        assert count == 0
        assert np.array_equal(mask.bits, bits)

    def test_one_voxel_gap(self):
        bits = np.zeros((5, 1, 1), dtype=bool)
        bits[0] = bits[2] = True
        _, count = dilate_until_connected(OccupancyMask(bits))
        assert count == 1

    def test_five_voxel_gap_matches_oracle(self):
        bits = np.zeros((9, 3, 3), dtype=bool)
        bits[1, 1, 1] = bits[7, 1, 1] = True
        expected = brute_force_dilation_count(bits)
        assert expected == 3  # fronts close the gap from both sides
        _, count = dilate_until_connected(OccupancyMask(bits))
        assert count == expected

    def test_monotone_superset_and_connected(self):
        rng = np.random.default_rng(6)
        bits = rng.random((7, 7, 7)) > 0.8
        bits[0, 0, 0] = True
        mask, _ = dilate_until_connected(OccupancyMask(bits))
        assert np.all(mask.bits[bits])
        assert mask.component_count == 1

    def test_empty_raises(self):
        with pytest.raises(EmptyMask):
            dilate_until_connected(OccupancyMask(np.zeros((3, 3, 3), dtype=bool)))
