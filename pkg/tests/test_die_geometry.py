#!/usr/bin/env python3
"""
Unit tests for the die geometry module of the acex package.

This file implements the test cases defined in TEST_CASES_SUMMARY.md.
"""

import unittest
import sys
import os
import math

import numpy as np
from scipy.spatial import cKDTree

# Add the parent directory to the path to import the package
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from acex.geometry.die import (ArcPrimitive, DieProfile, LinePrimitive, WALL_ORDER, WallId,
                               build_die, polyline, signed_distance)
from acex.utils.config import config_from_mapping
from acex.utils.exceptions import ConfigValidationError, GeometryOverlapError


def default_profile(**overrides):
    values = dict(W1=0.025, ER=0.75, L1n=22.0, L2n=6.0, R1n=0.8, R2n=1.8)
    values.update(overrides)
    return DieProfile(**values)


def segment_distance(points, start, end):
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    d = end - start
    t = np.clip(((points - start) @ d) / float(d @ d), 0.0, 1.0)
    nearest = start + t[:, None] * d
    return np.hypot(*(points - nearest).T)


class TestDieProfile(unittest.TestCase):
    """Test suite for the die parameter set."""

    def test_derived_lengths_GEO_PRF_001(self):
        """Test Case ID: GEO-PRF-001 - Verify W2 and the fillet radii of the reference die."""
        profile = default_profile()
        self.assertAlmostEqual(profile.W2, 0.01875, places=12)
        self.assertAlmostEqual(profile.R1, 0.020, places=12)
        self.assertAlmostEqual(profile.R2, 0.045, places=12)
        self.assertAlmostEqual(profile.L1, 0.55, places=12)
        self.assertAlmostEqual(profile.L2, 0.15, places=12)

    def test_reference_points_GEO_PRF_002(self):
        """Test Case ID: GEO-PRF-002 - Verify the bend centre and the straight-wall limits."""
        profile = default_profile()
        self.assertAlmostEqual(profile.exit_start_x, 0.045, places=12)
        self.assertAlmostEqual(profile.inlet_reference_height, 0.045, places=12)
        np.testing.assert_allclose(profile.bend_center, [0.045, 0.045])
        self.assertAlmostEqual(profile.exit_end_x, 0.045 + 0.15, places=12)

    def test_extrusion_ratio_out_of_range_GEO_PRF_003(self):
        """Test Case ID: GEO-PRF-003 - Verify that ER = 1.5 is rejected."""
        with self.assertRaises(ConfigValidationError) as cm:
            default_profile(ER=1.5)
        self.assertIn("ER must be in (0, 1]", str(cm.exception))

    def test_extrusion_ratio_rejected_by_config_GEO_PRF_004(self):
        """Test Case ID: GEO-PRF-004 - Verify that the configuration layer rejects ER = 1.5."""
        with self.assertRaises(ConfigValidationError) as cm:
            config_from_mapping({'die': {'ER': 1.5}})
        self.assertEqual(cm.exception.field, 'die.ER')
        self.assertIn("ER must be in (0, 1]", str(cm.exception))

    def test_swapped_fillets_GEO_PRF_005(self):
        """Test Case ID: GEO-PRF-005 - Verify that the fillet assignment can be swapped."""
        profile = default_profile(R1n=1.8, R2n=0.8, r1_on_inner_corner=False)
        self.assertAlmostEqual(profile.inner_radius, 0.020, places=12)
        self.assertAlmostEqual(profile.outer_radius, 0.045, places=12)
        self.assertEqual(profile.inner_wall_id, WallId.R2_FILLET)


class TestBuildDie(unittest.TestCase):
    """Test suite for wall construction."""

    def test_wall_order_GEO_BLD_001(self):
        """Test Case ID: GEO-BLD-001 - Verify the six walls come in the fixed order."""
        walls = build_die(default_profile())
        self.assertEqual(tuple(w.wall_id for w in walls), WALL_ORDER)
        for wall in walls:
            self.assertEqual(len(wall.segments), 1)

    def test_fillet_primitives_GEO_BLD_002(self):
        """Test Case ID: GEO-BLD-002 - Verify the arc centres and radii of the fillets."""
        walls = {w.wall_id: w for w in build_die(default_profile())}
        inner = walls[WallId.R1_FILLET].segments[0]
        outer = walls[WallId.R2_FILLET].segments[0]
        self.assertIsInstance(inner, ArcPrimitive)
        self.assertIsInstance(outer, ArcPrimitive)
        np.testing.assert_allclose(inner.center, [0.045, 0.03875])
        np.testing.assert_allclose(outer.center, [0.045, 0.045])
        self.assertAlmostEqual(inner.radius, 0.020)
        self.assertAlmostEqual(outer.radius, 0.045)
        self.assertIsInstance(walls[WallId.EXIT_BOTTOM].segments[0], LinePrimitive)

    def test_sharp_corners_GEO_BLD_003(self):
        """Test Case ID: GEO-BLD-003 - Verify that zero radii give empty fillet walls."""
        walls = build_die(DieProfile(W1=1.0, ER=1.0, L1n=2.0, L2n=2.0, R1n=0.0, R2n=0.0))
        by_id = {w.wall_id: w for w in walls}
        self.assertEqual(by_id[WallId.R1_FILLET].segments, ())
        self.assertEqual(by_id[WallId.R2_FILLET].segments, ())
        query = signed_distance(walls, (0.5, 0.5))
        self.assertAlmostEqual(query.distance, 0.5, places=12)

    def test_fillet_overlap_GEO_BLD_004(self):
        """Test Case ID: GEO-BLD-004 - Verify that an oversized outer fillet is rejected."""
        with self.assertRaises(GeometryOverlapError):
            build_die(default_profile(R2n=5.0))

    def test_polyline_GEO_BLD_005(self):
        """Test Case ID: GEO-BLD-005 - Verify the boundary polyline sampling."""
        rows = polyline(build_die(default_profile()), resolution=16)
        self.assertEqual(len(rows), 4 * 2 + 2 * 16)
        self.assertEqual(rows[0][0], 'InletLeft')
        self.assertEqual(rows[-1][0], 'ExitBottom')


class TestSignedDistance(unittest.TestCase):
    """Test suite for the signed-distance query."""

    def setUp(self):
        self.profile = default_profile()
        self.walls = build_die(self.profile)

    def test_boundary_point_GEO_SDF_001(self):
        """Test Case ID: GEO-SDF-001 - Verify zero distance on the exit bottom wall."""
        query = signed_distance(self.walls, (self.profile.exit_start_x + 0.01, 0.0))
        self.assertAlmostEqual(query.distance, 0.0, places=12)

    def test_flat_wall_GEO_SDF_002(self):
        """Test Case ID: GEO-SDF-002 - Verify distance and normal above the exit bottom wall."""
        x = self.profile.exit_start_x + 0.5 * self.profile.L2
        query = signed_distance(self.walls, (x, 0.004))
        self.assertAlmostEqual(query.distance, 0.004, places=12)
        self.assertEqual(query.nearest_wall, WallId.EXIT_BOTTOM)
        np.testing.assert_allclose(query.normal, [0.0, 1.0], atol=1e-12)
        self.assertEqual(query.curvature, 0.0)

    def test_outer_fillet_GEO_SDF_003(self):
        """Test Case ID: GEO-SDF-003 - Verify distance and radial normal inside the outer fillet."""
        center = np.array([0.045, 0.045])
        angle = 1.25 * math.pi
        point = center + 0.040 * np.array([math.cos(angle), math.sin(angle)])
        query = signed_distance(self.walls, point)
        self.assertAlmostEqual(query.distance, 0.005, places=10)
        self.assertEqual(query.nearest_wall, WallId.R2_FILLET)
        np.testing.assert_allclose(query.normal, [math.sqrt(0.5), math.sqrt(0.5)], atol=1e-10)

    def test_penetration_sign_GEO_SDF_004(self):
        """Test Case ID: GEO-SDF-004 - Verify negative distance inside die material."""
        x = self.profile.exit_start_x + 0.05
        query = signed_distance(self.walls, (x, -0.001))
        self.assertAlmostEqual(query.distance, -0.001, places=12)
        inside_inner_die = signed_distance(self.walls, (0.035, 0.030))
        self.assertLess(inside_inner_die.distance, 0.0)

    def test_open_mouth_GEO_SDF_005(self):
        """Test Case ID: GEO-SDF-005 - Verify that points past the exit mouth never penetrate."""
        query = signed_distance(self.walls, (self.profile.exit_end_x + 0.01, -0.001))
        self.assertGreater(query.distance, 0.0)

    def test_batch_matches_single_GEO_SDF_006(self):
        """Test Case ID: GEO-SDF-006 - Verify batched queries agree with point queries."""
        points = np.array([[0.0125, 0.3], [0.03, 0.01], [0.1, 0.015]])
        batch = signed_distance(self.walls, points)
        for k, point in enumerate(points):
            single = signed_distance(self.walls, point)
            self.assertAlmostEqual(batch.distance[k], single.distance, places=14)
            self.assertEqual(batch.nearest_wall[k], single.nearest_wall)

    def test_gradient_is_normal_GEO_SDF_007(self):
        """Test Case ID: GEO-SDF-007 - Verify the distance gradient equals the normal."""
        step = 1e-7
        for point in ([0.02, 0.02], [0.01, 0.2], [0.03, 0.012]):
            p = np.asarray(point)
            query = signed_distance(self.walls, p)
            grad = np.array([
                (signed_distance(self.walls, p + [step, 0.0]).distance
                 - signed_distance(self.walls, p - [step, 0.0]).distance) / (2 * step),
                (signed_distance(self.walls, p + [0.0, step]).distance
                 - signed_distance(self.walls, p - [0.0, step]).distance) / (2 * step),
            ])
            np.testing.assert_allclose(grad, query.normal, atol=1e-6)

    def test_dense_sampling_oracle_GEO_SDF_008(self):
        """Test Case ID: GEO-SDF-008 - Verify distances near the bend against a dense boundary sampling."""
        rng = np.random.default_rng(7)
        points = rng.uniform([0.0005, 0.0005], [0.07, 0.07], size=(300, 2))
        query = signed_distance(self.walls, points)
        void = query.distance > 0.0
        points, distance = points[void], query.distance[void]
        self.assertGreater(len(points), 50)

        arc_samples = np.vstack([primitive.sample(400001) for wall in self.walls
                                 for primitive in wall.segments if isinstance(primitive, ArcPrimitive)])
        oracle, _ = cKDTree(arc_samples).query(points)
        for wall in self.walls:
            for primitive in wall.segments:
                if isinstance(primitive, LinePrimitive):
                    oracle = np.minimum(oracle, segment_distance(points, primitive.start, primitive.end))
        np.testing.assert_allclose(distance, oracle, atol=1e-6)

    def test_scaled_die_GEO_SDF_009(self):
        """Test Case ID: GEO-SDF-009 - Verify a die scaled by f scales every signed distance by f."""
        factor = 2.5
        scaled_walls = build_die(self.profile.scaled(factor))
        rng = np.random.default_rng(11)
        points = rng.uniform([-0.01, -0.01], [0.08, 0.4], size=(400, 2))
        base = signed_distance(self.walls, points)
        scaled = signed_distance(scaled_walls, factor * points)
        np.testing.assert_allclose(scaled.distance, factor * base.distance, rtol=1e-10, atol=1e-13)

    def test_sampled_channel_widths_GEO_SDF_010(self):
        """Test Case ID: GEO-SDF-010 - Verify the sampled inlet and exit widths equal W1 and ER*W1."""
        step = 1.0e-5
        x = np.arange(-0.005, 0.030 + 0.5 * step, step)
        inlet = np.column_stack([x, np.full_like(x, self.profile.inlet_reference_height + 0.5 * self.profile.L1)])
        inside = x[signed_distance(self.walls, inlet).distance > 0.0]
        self.assertAlmostEqual(inside.max() - inside.min(), self.profile.W1, delta=2 * step)

        y = np.arange(-0.005, 0.025 + 0.5 * step, step)
        exit_line = np.column_stack([np.full_like(y, self.profile.exit_start_x + 0.5 * self.profile.L2), y])
        inside = y[signed_distance(self.walls, exit_line).distance > 0.0]
        self.assertAlmostEqual(inside.max() - inside.min(), self.profile.ER * self.profile.W1, delta=2 * step)


if __name__ == '__main__':
    unittest.main()
