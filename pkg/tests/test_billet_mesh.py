#!/usr/bin/env python3
"""
Unit tests for the billet mesh module of the acex package.

This file implements the test cases defined in TEST_CASES_SUMMARY.md.
"""

import unittest
import sys
import os
from collections import Counter

import numpy as np

# Add the parent directory to the path to import the package
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from acex.geometry.mesh import FACE_SETS, BilletSpec, face_sets, generate_mesh, material_line
from acex.utils.exceptions import EmptyMaterialLineError, MeshSizeError


class TestGenerateMesh(unittest.TestCase):
    """Test suite for structured mesh generation."""

    def test_reference_billet_counts_MESH_GEN_001(self):
        """Test Case ID: MESH-GEN-001 - Verify counts of the 25 mm x 550 mm billet at 0.5 mm."""
        mesh = generate_mesh(BilletSpec(width=0.025, length=0.55, target_element_size=0.5e-3))
        self.assertEqual(mesh.grid_shape, (50, 1100))
        self.assertEqual(mesh.n_elements, 55000)
        self.assertEqual(mesh.n_nodes, 51 * 1101)

    def test_single_element_MESH_GEN_002(self):
        """Test Case ID: MESH-GEN-002 - Verify a one-element billet needs allow_coarse."""
        spec = BilletSpec(width=0.025, length=0.025, target_element_size=0.025)
        with self.assertRaises(MeshSizeError):
            generate_mesh(spec)
        mesh = generate_mesh(spec, allow_coarse=True)
        self.assertEqual(mesh.n_elements, 1)
        self.assertEqual(mesh.n_nodes, 4)

    def test_aspect_ratio_MESH_GEN_003(self):
        """Test Case ID: MESH-GEN-003 - Verify the 0.758 mm mesh keeps near-square elements."""
        mesh = generate_mesh(BilletSpec(width=0.025, length=0.55, target_element_size=0.758e-3))
        self.assertEqual(mesh.grid_shape, (33, 726))
        dx, dy = mesh.spacing
        self.assertTrue(0.9 <= dx / dy <= 1.1)

    def test_counter_clockwise_MESH_GEN_004(self):
        """Test Case ID: MESH-GEN-004 - Verify positive element areas summing to the billet area."""
        mesh = generate_mesh(BilletSpec(width=0.01, length=0.02, target_element_size=0.002))
        areas = mesh.element_areas()
        self.assertTrue(np.all(areas > 0.0))
        self.assertAlmostEqual(float(areas.sum()), 0.01 * 0.02, places=15)

    def test_conforming_MESH_GEN_005(self):
        """Test Case ID: MESH-GEN-005 - Verify every interior edge is shared by two elements."""
        mesh = generate_mesh(BilletSpec(width=0.01, length=0.02, target_element_size=0.002))
        edges = Counter()
        for element in mesh.connectivity:
            for a, b in zip(element, np.roll(element, -1)):
                edges[(min(a, b), max(a, b))] += 1
        nx, ny = mesh.grid_shape
        boundary = [edge for edge, count in edges.items() if count == 1]
        self.assertEqual(len(boundary), 2 * (nx + ny))
        self.assertTrue(all(count in (1, 2) for count in edges.values()))

    def test_bad_aspect_ratio_MESH_GEN_006(self):
        """Test Case ID: MESH-GEN-006 - Verify elements outside the [0.9, 1.1] aspect band are rejected."""
        with self.assertRaises(MeshSizeError) as cm:
            generate_mesh(BilletSpec(width=0.025, length=0.013, target_element_size=0.005))
        self.assertIn("aspect ratio", str(cm.exception))

    def test_too_coarse_MESH_GEN_007(self):
        """Test Case ID: MESH-GEN-007 - Verify fewer than four elements across the width are rejected."""
        with self.assertRaises(MeshSizeError):
            generate_mesh(BilletSpec(width=0.025, length=0.5, target_element_size=0.01))

    def test_origin_offset_MESH_GEN_008(self):
        """Test Case ID: MESH-GEN-008 - Verify node (0, 0) sits at the requested origin."""
        mesh = generate_mesh(BilletSpec(width=0.01, length=0.02, target_element_size=0.002), origin=(0.5, 1.5))
        np.testing.assert_allclose(mesh.node_coords[0], [0.5, 1.5])
        self.assertAlmostEqual(mesh.width, 0.01, places=12)
        self.assertAlmostEqual(mesh.length, 0.02, places=12)

    def test_invalid_spec_MESH_GEN_009(self):
        """Test Case ID: MESH-GEN-009 - Verify non-positive dimensions are rejected."""
        with self.assertRaises(ValueError):
            BilletSpec(width=0.0, length=0.02, target_element_size=0.002)


class TestFaceSets(unittest.TestCase):
    """Test suite for the named face node sets."""

    def test_disjoint_cover_MESH_SET_001(self):
        """Test Case ID: MESH-SET-001 - Verify face sets are disjoint and cover the boundary."""
        nx, ny = 5, 9
        sets = face_sets(nx, ny)
        ids = np.concatenate([sets[name] for name in FACE_SETS])
        self.assertEqual(len(ids), len(np.unique(ids)))
        self.assertEqual(len(ids), 2 * (nx + 1) + 2 * (ny - 1))

    def test_face_positions_MESH_SET_002(self):
        """Test Case ID: MESH-SET-002 - Verify head, tail and side faces sit on the grid edges."""
        mesh = generate_mesh(BilletSpec(width=0.01, length=0.02, target_element_size=0.002))
        coords = mesh.node_coords
        np.testing.assert_allclose(coords[mesh.node_sets['RightFace'], 1], 0.0)
        np.testing.assert_allclose(coords[mesh.node_sets['LeftFace'], 1], 0.02)
        np.testing.assert_allclose(coords[mesh.node_sets['BottomFace'], 0], 0.0)
        np.testing.assert_allclose(coords[mesh.node_sets['TopFace'], 0], 0.01)


class TestMaterialLine(unittest.TestCase):
    """Test suite for material-line node selection."""

    def setUp(self):
        self.mesh = generate_mesh(BilletSpec(width=0.01, length=0.02, target_element_size=0.001))

    def test_coincident_points_MESH_LINE_001(self):
        """Test Case ID: MESH-LINE-001 - Verify coincident end points raise EmptyMaterialLineError."""
        with self.assertRaises(EmptyMaterialLineError):
            material_line(self.mesh, (0.005, 0.01), (0.005, 0.01))

    def test_line_across_width_MESH_LINE_002(self):
        """Test Case ID: MESH-LINE-002 - Verify a line across the width returns one grid row."""
        y = self.mesh.node_coords[self.mesh.node_id(0, 5), 1]
        nodes = material_line(self.mesh, (0.0, y), (0.01, y))
        self.assertEqual(len(nodes), self.mesh.nx + 1)
        np.testing.assert_array_equal(nodes, self.mesh.row(5))

    def test_off_grid_line_MESH_LINE_003(self):
        """Test Case ID: MESH-LINE-003 - Verify a slightly offset line snaps to the nearest row."""
        y = self.mesh.node_coords[self.mesh.node_id(0, 7), 1] + 0.2e-3
        nodes = material_line(self.mesh, (0.0, y), (0.01, y))
        np.testing.assert_array_equal(nodes, self.mesh.row(7))

    def test_line_order_MESH_LINE_004(self):
        """Test Case ID: MESH-LINE-004 - Verify the nodes follow the A to B direction."""
        y = self.mesh.node_coords[self.mesh.node_id(0, 5), 1]
        nodes = material_line(self.mesh, (0.01, y), (0.0, y))
        np.testing.assert_array_equal(nodes, self.mesh.row(5)[::-1])


if __name__ == '__main__':
    unittest.main()
