"""Sensor geometry: projection, densification, registration, calibration, file I/O."""

import numpy as np
import pytest

from ffusion.autodiff import Rng
from ffusion.errors import CalibrationError, DataError, RegistrationError
from ffusion.geometry import (
    DepthMap,
    Extrinsics,
    Intrinsics,
    PointCloud,
    back_project_depth,
    back_project_pixel,
    densify_depth,
    project_point_cloud,
    read_depth,
    read_point_cloud,
    register_depth_to_rgb,
    translate_depth,
    validate_calibration,
    write_depth,
    write_point_cloud,
)


@pytest.fixture
def intr():
    return Intrinsics(fx=28.0, fy=28.0, cx=16.0, cy=16.0, width=32, height=32)


class TestProjection:
    def test_hand_projected_point(self, intr):
        # u = 28*(1/2) + 16 = 30, v = 28*(0.5/2) + 16 = 23
        cloud = PointCloud(np.array([[1.0, 0.5, 2.0]]))
        depth = project_point_cloud(cloud, intr)
        assert depth.valid[23, 30]
        assert depth.values[23, 30] == 2.0
        assert depth.valid_count == 1

    def test_z_buffer_keeps_nearest(self, intr):
        # Both points enter the same cell; the smaller depth must win.
        cloud = PointCloud(np.array([[0.0, 0.0, 5.0], [0.0, 0.0, 2.0]]))
        depth = project_point_cloud(cloud, intr)
        assert depth.values[16, 16] == 2.0

    def test_near_plane_and_behind_camera_dropped(self, intr):
        cloud = PointCloud(np.array([[0.0, 0.0, 1e-7], [0.0, 0.0, -3.0], [0.0, 0.0, 0.0]]))
        depth = project_point_cloud(cloud, intr)
        assert depth.valid_count == 0

    def test_out_of_view_points_dropped(self, intr):
        cloud = PointCloud(np.array([[50.0, 0.0, 2.0], [-50.0, 0.0, 2.0]]))
        depth = project_point_cloud(cloud, intr)
        assert depth.valid_count == 0

    def test_round_trip_lands_in_same_cell(self, intr):
        rng = Rng(99)
        for _ in range(200):
            row = int(rng.integers(0, intr.height))
            col = int(rng.integers(0, intr.width))
            z = float(rng.uniform(0.5, 30.0))
            point = back_project_pixel(row, col, z, intr)
            depth = project_point_cloud(PointCloud(point[None, :]), intr)
            assert depth.valid[row, col]
            assert np.isclose(depth.values[row, col], z, rtol=0, atol=1e-12)

    def test_back_project_depth_inverts_projection(self, intr):
        rng = Rng(5)
        rows = rng.integers(0, 32, 40)
        cols = rng.integers(0, 32, 40)
        z = rng.uniform(1.0, 20.0, 40)
        values = np.zeros((32, 32))
        valid = np.zeros((32, 32), dtype=bool)
        values[rows, cols] = z
        valid[rows, cols] = True
        depth = DepthMap(values, valid)
        cloud = back_project_depth(depth, intr)
        again = project_point_cloud(cloud, intr)
        assert np.array_equal(again.valid, depth.valid)
        assert np.allclose(again.values, depth.values, atol=1e-12)

    def test_extrinsics_translation_applied(self, intr):
        # Sensor sits 1 m left of the camera: x_cam = x_sensor + 1.
        extr = Extrinsics(np.eye(3), np.array([1.0, 0.0, 0.0]))
        cloud = PointCloud(np.array([[0.0, 0.0, 2.0]]))
        depth = project_point_cloud(cloud, intr, extr)
        # u = 28*(1/2) + 16 = 30
        assert depth.valid[16, 30]

    def test_invalid_rotation_rejected(self, intr):
        bad = Extrinsics(np.eye(3) * 1.1, np.zeros(3))
        with pytest.raises(CalibrationError):
            project_point_cloud(PointCloud(np.array([[0.0, 0.0, 2.0]])), intr, bad)


class TestCalibration:
    def test_scaled_rotation_residual(self):
        # R = 1.1 I gives R^T R = 1.21 I, so the max residual is 0.21.
        extr = Extrinsics(np.eye(3) * 1.1, np.zeros(3))
        report = validate_calibration(
            Intrinsics(28.0, 28.0, 16.0, 16.0, 32, 32), extr
        )
        assert not report.ok
        assert np.isclose(report.orthonormality_residual, 0.21, atol=1e-12)

    def test_identity_passes(self):
        report = validate_calibration(
            Intrinsics(28.0, 28.0, 16.0, 16.0, 32, 32), Extrinsics.identity()
        )
        assert report.ok
        assert report.orthonormality_residual == 0.0

    def test_intrinsics_bounds_enforced(self):
        with pytest.raises(CalibrationError):
            Intrinsics(fx=-1.0, fy=28.0, cx=16.0, cy=16.0, width=32, height=32)
        with pytest.raises(CalibrationError):
            Intrinsics(fx=28.0, fy=28.0, cx=32.0, cy=16.0, width=32, height=32)
        with pytest.raises(CalibrationError):
            Intrinsics(fx=28.0, fy=28.0, cx=16.0, cy=16.0, width=0, height=32)

    def test_proper_rotation_passes(self):
        theta = 0.3
        rot = np.array(
            [
                [np.cos(theta), 0.0, np.sin(theta)],
                [0.0, 1.0, 0.0],
                [-np.sin(theta), 0.0, np.cos(theta)],
            ]
        )
        report = validate_calibration(
            Intrinsics(28.0, 28.0, 16.0, 16.0, 32, 32), Extrinsics(rot, np.zeros(3))
        )
        assert report.ok


class TestDensify:
    def _map_with(self, entries, shape=(16, 16)):
        values = np.zeros(shape)
        valid = np.zeros(shape, dtype=bool)
        for (r, c), v in entries.items():
            values[r, c] = v
            valid[r, c] = True
        return DepthMap(values, valid)

    def test_two_neighbor_hand_value(self):
        # Neighbors at distance 1 (value 2) and distance 2 (value 5), k=2:
        # (2/1 + 5/2) / (1 + 1/2) = 3.0, up to the 1e-6 distance regularizer.
        sparse = self._map_with({(8, 9): 2.0, (8, 10): 5.0})
        dense = densify_depth(sparse, radius=6, k=2)
        assert dense.valid[8, 8]
        assert np.isclose(dense.values[8, 8], 3.0, atol=1e-5)

    def test_single_neighbor_copies_exactly(self):
        sparse = self._map_with({(8, 8): 5.0})
        dense = densify_depth(sparse, radius=6, k=8)
        filled = dense.valid & ~sparse.valid
        assert filled.any()
        assert np.all(dense.values[filled] == 5.0)

    def test_equidistant_neighbors_average(self):
        # Values 2 and 4 both at distance 1 from the query cell.
        sparse = self._map_with({(8, 7): 2.0, (8, 9): 4.0})
        dense = densify_depth(sparse, radius=6, k=2)
        assert np.isclose(dense.values[8, 8], 3.0, atol=1e-9)

    def test_k_limits_to_nearest(self):
        # k=1 must take the strictly nearest neighbor only.
        sparse = self._map_with({(8, 9): 2.0, (8, 11): 9.0})
        dense = densify_depth(sparse, radius=6, k=1)
        assert dense.values[8, 8] == 2.0

    def test_tie_break_is_row_then_col(self):
        # Four neighbors all at distance 2; k=1 must pick the smallest row
        # offset, then the smallest column offset: the one above (dr=-2).
        sparse = self._map_with({(6, 8): 1.0, (10, 8): 2.0, (8, 6): 3.0, (8, 10): 4.0})
        dense = densify_depth(sparse, radius=6, k=1)
        assert dense.values[8, 8] == 1.0

    def test_out_of_radius_stays_missing(self):
        sparse = self._map_with({(0, 0): 3.0})
        dense = densify_depth(sparse, radius=2, k=4)
        assert not dense.valid[10, 10]

    def test_valid_cells_pass_through(self):
        sparse = self._map_with({(3, 3): 1.5, (3, 5): 9.0})
        dense = densify_depth(sparse)
        assert dense.values[3, 3] == 1.5
        assert dense.values[3, 5] == 9.0

    def test_filled_values_convex_in_sources(self):
        rng = Rng(31)
        values = np.zeros((32, 32))
        valid = rng.uniform(size=(32, 32)) < 0.3
        values[valid] = rng.uniform(1.0, 20.0, int(valid.sum()))
        sparse = DepthMap(values, valid)
        dense = densify_depth(sparse)
        filled = dense.valid & ~sparse.valid
        lo, hi = values[valid].min(), values[valid].max()
        assert np.all(dense.values[filled] >= lo)
        assert np.all(dense.values[filled] <= hi)

    def test_parameter_validation(self):
        sparse = DepthMap.empty(4, 4)
        with pytest.raises(ValueError):
            densify_depth(sparse, radius=0)
        with pytest.raises(ValueError):
            densify_depth(sparse, k=0)


class TestRegistration:
    def test_translate_moves_content(self):
        values = np.zeros((8, 8))
        valid = np.zeros((8, 8), dtype=bool)
        values[2, 3] = 4.0
        valid[2, 3] = True
        moved = translate_depth(DepthMap(values, valid), dx=2, dy=1)
        assert moved.valid[3, 5]
        assert moved.values[3, 5] == 4.0
        assert moved.valid_count == 1

    def test_register_undoes_declared_shift(self):
        rng = Rng(17)
        values = np.zeros((8, 8))
        valid = rng.uniform(size=(8, 8)) < 0.5
        values[valid] = rng.uniform(1.0, 5.0, int(valid.sum()))
        original = DepthMap(values, valid)
        shifted = translate_depth(original, dx=1, dy=0)
        rgb = np.zeros((8, 8, 3))
        frame = register_depth_to_rgb(shifted, rgb, shift=(1, 0))
        assert frame.alignment_ok
        # Interior agrees exactly; the border column was lost to the shift.
        assert np.array_equal(frame.depth.values[:, :7], original.values[:, :7])

    def test_dimension_mismatch_raises(self):
        depth = DepthMap.empty(16, 16)
        rgb = np.zeros((32, 32, 3))
        with pytest.raises(RegistrationError):
            register_depth_to_rgb(depth, rgb)


class TestFileFormats:
    def test_point_cloud_roundtrip_exact(self, tmp_path):
        rng = Rng(7)
        cloud = PointCloud(rng.normal((50, 3)) * 10.0)
        path = tmp_path / "scan.pcd"
        write_point_cloud(cloud, path)
        again = read_point_cloud(path)
        assert np.array_equal(again.points, cloud.points)
        assert path.read_text().startswith("FFUSION-PCD v1 50\n")

    def test_empty_cloud_roundtrip(self, tmp_path):
        path = tmp_path / "empty.pcd"
        write_point_cloud(PointCloud.empty(), path)
        assert len(read_point_cloud(path)) == 0

    def test_depth_roundtrip_exact(self, tmp_path):
        rng = Rng(8)
        values = np.zeros((32, 32))
        valid = rng.uniform(size=(32, 32)) < 0.4
        values[valid] = rng.uniform(0.5, 25.0, int(valid.sum()))
        depth = DepthMap(values, valid)
        path = tmp_path / "depth.txt"
        write_depth(depth, path)
        again = read_depth(path)
        assert np.array_equal(again.values, depth.values)
        assert np.array_equal(again.valid, depth.valid)
        assert path.read_text().startswith("FFUSION-DEPTH v1 32 32\n")

    def test_bad_headers_rejected(self, tmp_path):
        p = tmp_path / "bad.pcd"
        p.write_text("NOT-A-CLOUD 3\n")
        with pytest.raises(DataError):
            read_point_cloud(p)
        d = tmp_path / "bad.txt"
        d.write_text("NOT-A-DEPTH 4 4\n")
        with pytest.raises(DataError):
            read_depth(d)

    def test_count_mismatch_rejected(self, tmp_path):
        p = tmp_path / "short.pcd"
        p.write_text("FFUSION-PCD v1 2\n1.0 2.0 3.0\n")
        with pytest.raises(DataError):
            read_point_cloud(p)

    def test_depth_map_invariants(self):
        with pytest.raises(DataError):
            DepthMap(np.full((2, 2), -1.0), np.ones((2, 2), dtype=bool))
        with pytest.raises(DataError):
            DepthMap(np.ones((2, 2)), np.zeros((2, 2), dtype=bool))
