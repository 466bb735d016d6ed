import math
import os
import sys
import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

# Add project root to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.errors import BehindBaseline, DegenerateGeometry, ParallelRays
from src.geometry import (
    AngleSet2,
    AngleSet3,
    CameraAngles,
    CameraRig,
    Point2,
    Point3,
    angles_from_point_2d,
    angles_from_point_3d,
    camera_alpha_2d,
    camera_angles_3d,
    direction_cosine,
    point_from_angles_2d,
    point_from_angles_3d,
    triangulate_2d,
    triangulate_3d,
)

coords_x = st.floats(min_value=-100.0, max_value=100.0)
coords_y = st.floats(min_value=10.0, max_value=500.0)
coords_z = st.floats(min_value=-100.0, max_value=100.0)
separations = st.floats(min_value=5.0, max_value=50.0)


def assert_close(test, actual, expected, tolerance=1e-6):
    test.assertLessEqual(abs(actual - expected), tolerance * max(1.0, abs(expected)))


def operating_points(count, seed=7):
    """Uniform random points in the default operating volume."""
    rng = np.random.default_rng(seed)
    return (rng.uniform(-70.0, 70.0, count),
            rng.uniform(90.0, 240.0, count),
            rng.uniform(-65.0, 65.0, count))


class TestCameraRig(unittest.TestCase):
    def test_camera_positions(self):
        rig = CameraRig(25.0)
        self.assertEqual(rig.camera_a, (-25.0, 0.0, 0.0))
        self.assertEqual(rig.camera_b, (25.0, 0.0, 0.0))

    def test_rejects_non_positive_separation(self):
        with self.assertRaises(DegenerateGeometry):
            CameraRig(0.0)
        with self.assertRaises(DegenerateGeometry):
            CameraRig(-1.0)

    def test_points_must_be_in_front(self):
        with self.assertRaises(DegenerateGeometry):
            Point2(0.0, 0.0)
        with self.assertRaises(DegenerateGeometry):
            Point3(10.0, -1.0, 5.0)
        with self.assertRaises(DegenerateGeometry):
            Point2(float("nan"), 10.0)


class TestPlanarGeometry(unittest.TestCase):
    def setUp(self):
        self.rig = CameraRig(25.0)

    def test_symmetric_point_gives_right_angles(self):
        """A marker at (0, d) is seen at pi/4 and 3pi/4"""
        angles = angles_from_point_2d(self.rig, Point2(0.0, 25.0))
        self.assertAlmostEqual(angles.alpha1, math.pi / 4, places=12)
        self.assertAlmostEqual(angles.alpha2, 3 * math.pi / 4, places=12)
        self.assertAlmostEqual(angles.beta1, math.pi / 4, places=12)
        self.assertAlmostEqual(angles.beta2, -math.pi / 4, places=12)

    def test_marker_left_of_camera_gives_obtuse_angle(self):
        angles = angles_from_point_2d(self.rig, Point2(-70.0, 90.0))
        self.assertGreater(angles.alpha1, math.pi / 2)
        self.assertGreater(angles.alpha2, math.pi / 2)

    def test_triangulates_back(self):
        p = point_from_angles_2d(self.rig, AngleSet2.from_alphas(math.pi / 4, 3 * math.pi / 4))
        self.assertAlmostEqual(p.x, 0.0, places=9)
        self.assertAlmostEqual(p.y, 25.0, places=9)

    def test_parallel_rays(self):
        with self.assertRaises(ParallelRays):
            point_from_angles_2d(self.rig, AngleSet2.from_alphas(1.0, 1.0))

    def test_diverging_rays_meet_behind_baseline(self):
        with self.assertRaises(BehindBaseline):
            point_from_angles_2d(self.rig, AngleSet2.from_alphas(3 * math.pi / 4, math.pi / 4))

    def test_angle_set_validation(self):
        with self.assertRaises(ValueError):
            AngleSet2.from_alphas(0.0, 1.0)
        with self.assertRaises(ValueError):
            AngleSet2(1.0, 0.2, 2.0, math.pi / 2 - 2.0)

    @settings(max_examples=200, deadline=None)
    @given(separations, coords_x, coords_y)
    def test_round_trip(self, d, x, y):
        rig = CameraRig(d)
        p = point_from_angles_2d(rig, angles_from_point_2d(rig, Point2(x, y)))
        assert_close(self, p.x, x)
        assert_close(self, p.y, y)

    def test_round_trip_over_operating_range(self):
        x, y, _ = operating_points(10_000)
        d = 25.0
        x2, y2 = triangulate_2d(d, camera_alpha_2d(-d, x, y), camera_alpha_2d(d, x, y))
        self.assertLess(float(np.max(np.abs(x2 - x))), 1e-9)
        self.assertLess(float(np.max(np.abs(y2 - y))), 1e-9)

    @settings(max_examples=200, deadline=None)
    @given(coords_x, coords_y)
    def test_mirror_swaps_cameras(self, x, y):
        angles = angles_from_point_2d(self.rig, Point2(x, y))
        mirrored = angles_from_point_2d(self.rig, Point2(-x, y))
        self.assertAlmostEqual(mirrored.alpha1, math.pi - angles.alpha2, places=12)
        self.assertAlmostEqual(mirrored.alpha2, math.pi - angles.alpha1, places=12)


class TestSpatialGeometry(unittest.TestCase):
    def setUp(self):
        self.rig = CameraRig(25.0)

    def test_angles_match_direction_cosines(self):
        angles = angles_from_point_3d(self.rig, Point3(70.0, 240.0, -65.0))
        r1 = math.sqrt(95.0 ** 2 + 240.0 ** 2 + 65.0 ** 2)
        r2 = math.sqrt(45.0 ** 2 + 240.0 ** 2 + 65.0 ** 2)
        self.assertAlmostEqual(angles.alpha1, math.acos(95.0 / r1), places=12)
        self.assertAlmostEqual(angles.beta1, math.acos(240.0 / r1), places=12)
        self.assertAlmostEqual(angles.gamma1, math.acos(-65.0 / r1), places=12)
        self.assertAlmostEqual(angles.alpha2, math.acos(45.0 / r2), places=12)
        self.assertAlmostEqual(angles.beta2, math.acos(240.0 / r2), places=12)
        self.assertAlmostEqual(angles.gamma2, math.acos(-65.0 / r2), places=12)

    def test_on_plane_point_keeps_exact_zero(self):
        p = point_from_angles_3d(self.rig, angles_from_point_3d(self.rig, Point3(10.0, 100.0, 0.0)))
        self.assertEqual(p.z, 0.0)
        self.assertAlmostEqual(p.x, 10.0, places=9)
        self.assertAlmostEqual(p.y, 100.0, places=9)

    def test_cosine_snap(self):
        self.assertEqual(float(direction_cosine(math.pi / 2)), 0.0)
        self.assertAlmostEqual(float(direction_cosine(1.0)), math.cos(1.0), places=15)

    def test_camera_angles_validation(self):
        with self.assertRaises(ValueError):
            CameraAngles(0.5, 0.5, 0.5)
        with self.assertRaises(ValueError):
            AngleSet3(math.pi / 2, 0.0, math.pi / 2, -0.1, 0.0, math.pi / 2)

    def test_direction_is_unit_vector(self):
        angles = angles_from_point_3d(self.rig, Point3(-30.0, 150.0, 40.0))
        for camera in (angles.camera1(), angles.camera2()):
            self.assertAlmostEqual(float(np.linalg.norm(camera.direction())), 1.0, places=12)

    @settings(max_examples=200, deadline=None)
    @given(separations, coords_x, coords_y, coords_z)
    def test_round_trip(self, d, x, y, z):
        rig = CameraRig(d)
        p = point_from_angles_3d(rig, angles_from_point_3d(rig, Point3(x, y, z)))
        assert_close(self, p.x, x)
        assert_close(self, p.y, y)
        assert_close(self, p.z, z)

    def test_round_trip_over_operating_volume(self):
        x, y, z = operating_points(10_000)
        d = 25.0
        x2, y2, z2 = triangulate_3d(d, *camera_angles_3d(-d, x, y, z), *camera_angles_3d(d, x, y, z))
        for actual, expected in ((x2, x), (y2, y), (z2, z)):
            self.assertLess(float(np.max(np.abs(actual - expected))), 1e-9)

    @settings(max_examples=200, deadline=None)
    @given(separations, coords_x, coords_y, coords_z)
    def test_direction_cosines_sum_to_one(self, d, x, y, z):
        angles = angles_from_point_3d(CameraRig(d), Point3(x, y, z))
        for camera in (angles.camera1(), angles.camera2()):
            total = sum(math.cos(a) ** 2 for a in (camera.alpha, camera.beta, camera.gamma))
            self.assertAlmostEqual(total, 1.0, places=9)


if __name__ == '__main__':
    unittest.main()
