#!/usr/bin/env python3
"""
Unit tests for the element kernels and global assembly of the acex package.

This file implements the test cases defined in TEST_CASES_SUMMARY.md.
"""

import unittest
import sys
import os
import math

import numpy as np

# Add the parent directory to the path to import the package
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from acex.geometry.die import DieProfile, build_die
from acex.geometry.mesh import BilletSpec, Mesh, face_sets, generate_mesh
from acex.models.assembly import IncrementState, assemble
from acex.models.contact import ContactParams, contact_forces
from acex.models.element import (ElementFormulation, HOURGLASS_BASE, element_internal_force,
                                 gauss_point_coordinates)
from acex.models.material import MaterialParams, MaterialPointState
from acex.utils.exceptions import InvertedElementError
from acex.utils.helpers import rotate_voigt_stress, rotation_matrix

UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
DISTORTED = np.array([[0.0, 0.0], [1.1, 0.1], [1.0, 1.2], [-0.1, 0.9]])


def steel(H=5.0e6):
    return MaterialParams(E=200.0e9, nu=0.3, sigma_y0=400.0e6, H=H)


def uniform_states(formulation, stress=(0.0, 0.0, 0.0, 0.0)):
    count = formulation.n_gauss
    return MaterialPointState(np.tile(np.asarray(stress, dtype=float), (count, 1)), np.zeros(count))


def finite_difference_stiffness(coords_ref, coords_cur, states, params, formulation, step=1e-8):
    columns = []
    for dof in range(8):
        e = np.zeros(8)
        e[dof] = step
        plus, _, _ = element_internal_force(coords_ref, coords_cur + e.reshape(4, 2), states, params, formulation)
        minus, _, _ = element_internal_force(coords_ref, coords_cur - e.reshape(4, 2), states, params, formulation)
        columns.append((plus - minus) / (2 * step))
    return np.column_stack(columns)


class TestElementKernel(unittest.TestCase):
    """Test suite for the single-element internal force and tangent."""

    def setUp(self):
        self.params = steel()
        self.formulation = ElementFormulation('SelectiveReducedBbar')

    def test_rigid_translation_FEM_ELM_001(self):
        """Test Case ID: FEM-ELM-001 - Verify a rigid translation produces no force or stress."""
        states = uniform_states(self.formulation)
        force, _, new_states = element_internal_force(UNIT_SQUARE, UNIT_SQUARE + [0.3, -0.2], states,
                                                      self.params, self.formulation)
        np.testing.assert_allclose(force, 0.0, atol=1e-3)
        np.testing.assert_allclose(new_states.stress, 0.0, atol=1e-3)

    def test_rigid_rotation_FEM_ELM_002(self):
        """Test Case ID: FEM-ELM-002 - Verify 100 rotation increments rotate the stored stress by 30 degrees."""
        stress = np.array([1.0e8, -5.0e7, 2.0e7, 3.0e7])
        states = uniform_states(self.formulation, stress)
        center = UNIT_SQUARE.mean(axis=0)
        coords = UNIT_SQUARE.copy()
        step = rotation_matrix(math.radians(30.0) / 100)
        for _ in range(100):
            rotated = center + (coords - center) @ step.T
            _, _, states = element_internal_force(coords, rotated, states, self.params, self.formulation)
            coords = rotated
        expected = rotate_voigt_stress(stress, rotation_matrix(math.radians(30.0)))
        for gp_stress in states.stress:
            np.testing.assert_allclose(gp_stress, expected, rtol=1e-6, atol=1e-6 * 1.0e8)
        np.testing.assert_array_equal(states.eqps, 0.0)

    def test_uniaxial_strain_FEM_ELM_003(self):
        """Test Case ID: FEM-ELM-003 - Verify nodal forces of a uniform plane-strain stretch."""
        strain = 1e-5
        current = UNIT_SQUARE * [1.0 + strain, 1.0]
        force, _, new_states = element_internal_force(UNIT_SQUARE, current, uniform_states(self.formulation),
                                                      self.params, self.formulation)
        increment = strain / (1.0 + 0.5 * strain)
        sxx = (self.params.lam + 2.0 * self.params.mu) * increment
        syy = self.params.lam * increment
        np.testing.assert_allclose(new_states.stress[:, 0], sxx, rtol=1e-9)
        np.testing.assert_allclose(new_states.stress[:, 1], syy, rtol=1e-9)
        self.assertAlmostEqual(force[2] / (0.5 * sxx), 1.0, places=8)
        self.assertAlmostEqual(force[4] / (0.5 * sxx), 1.0, places=8)
        self.assertAlmostEqual(force[1] / (-0.5 * syy * (1.0 + strain)), 1.0, places=8)
        self.assertAlmostEqual(float(np.sum(force[0::2])), 0.0, delta=1e-6 * sxx)

    def test_consistent_tangent_FEM_TAN_001(self):
        """Test Case ID: FEM-TAN-001 - Verify the plastic element tangent against finite differences."""
        affine = np.array([[0.01, 0.004], [-0.003, -0.006]])
        current = DISTORTED + DISTORTED @ affine.T + 1e-3 * np.array([[0.2, -0.1], [0.0, 0.3], [-0.2, 0.1], [0.1, 0.0]])
        states = uniform_states(self.formulation, (1.0e8, -5.0e7, 2.0e7, 3.0e7))
        _, stiffness, new_states = element_internal_force(DISTORTED, current, states, self.params, self.formulation)
        self.assertTrue(np.all(new_states.eqps > 0.0))
        fd = finite_difference_stiffness(DISTORTED, current, states, self.params, self.formulation)
        np.testing.assert_allclose(stiffness, fd, atol=1e-5 * np.abs(stiffness).max())

    def test_single_point_tangent_FEM_TAN_002(self):
        """Test Case ID: FEM-TAN-002 - Verify the one-point element tangent with hourglass control."""
        formulation = ElementFormulation('SinglePointHourglass', 0.03)
        current = DISTORTED + 2e-2 * np.array([[0.0, 0.0], [1.0, -0.5], [0.4, 0.8], [-0.3, 0.2]])
        states = uniform_states(formulation)
        _, stiffness, _ = element_internal_force(DISTORTED, current, states, self.params, formulation)
        fd = finite_difference_stiffness(DISTORTED, current, states, self.params, formulation)
        np.testing.assert_allclose(stiffness, fd, atol=1e-5 * np.abs(stiffness).max())

    def test_hourglass_mode_FEM_HG_001(self):
        """Test Case ID: FEM-HG-001 - Verify the hourglass mode is resisted only with control enabled."""
        current = UNIT_SQUARE.copy()
        current[:, 0] += 1e-4 * HOURGLASS_BASE
        free = ElementFormulation('SinglePointHourglass', hourglass_control=False)
        controlled = ElementFormulation('SinglePointHourglass', 0.03)
        force_free, _, _ = element_internal_force(UNIT_SQUARE, current, uniform_states(free), self.params, free)
        force_hg, _, _ = element_internal_force(UNIT_SQUARE, current, uniform_states(controlled),
                                                self.params, controlled)
        np.testing.assert_allclose(force_free, 0.0, atol=1e-3)
        self.assertGreater(float(np.linalg.norm(force_hg)), 1.0e3)
        self.assertAlmostEqual(float(np.sum(force_hg[0::2])), 0.0, delta=1e-6 * np.abs(force_hg).max())

    def test_state_count_FEM_ELM_004(self):
        """Test Case ID: FEM-ELM-004 - Verify the number of integration point states is checked."""
        with self.assertRaises(ValueError):
            element_internal_force(UNIT_SQUARE, UNIT_SQUARE, MaterialPointState.zeros(1),
                                   self.params, self.formulation)


class TestAssembly(unittest.TestCase):
    """Test suite for global assembly."""

    def setUp(self):
        self.params = steel()
        self.formulation = ElementFormulation('SelectiveReducedBbar')

    def patch_mesh(self):
        coords = np.array([[x, y] for y in (0.0, 1.0, 2.0) for x in (0.0, 1.0, 2.0)])
        coords[4] = [1.1, 0.9]
        connectivity = [[j * 3 + i, j * 3 + i + 1, j * 3 + i + 4, j * 3 + i + 3] for j in range(2) for i in range(2)]
        return Mesh(coords, connectivity, face_sets(2, 2), 1.0, 2, 2)

    def test_single_element_zero_residual_FEM_ASM_001(self):
        """Test Case ID: FEM-ASM-001 - Verify a zero increment of an unstressed element has zero residual."""
        mesh = generate_mesh(BilletSpec(0.01, 0.01, 0.01), allow_coarse=True)
        system = assemble(mesh, IncrementState.initial(mesh, self.formulation), np.zeros((mesh.n_nodes, 2)),
                          self.params, self.formulation)
        self.assertEqual(system.residual.shape, (8,))
        np.testing.assert_array_equal(system.residual, 0.0)
        self.assertEqual(system.tangent.shape, (8, 8))

    def test_patch_test_FEM_ASM_002(self):
        """Test Case ID: FEM-ASM-002 - Verify a linear field on distorted elements gives uniform stress."""
        mesh = self.patch_mesh()
        gradient = np.array([[2.0e-5, 1.0e-5], [-0.5e-5, -1.0e-5]])
        trial = mesh.node_coords @ gradient.T
        system = assemble(mesh, IncrementState.initial(mesh, self.formulation), trial,
                          self.params, self.formulation)
        reference = system.stress[0, 0]
        scale = np.abs(reference).max()
        np.testing.assert_allclose(system.stress, np.broadcast_to(reference, system.stress.shape),
                                   rtol=1e-9, atol=1e-9 * scale)
        interior = system.residual[8:10]
        self.assertLess(float(np.linalg.norm(interior)), 1e-9 * system.force_scale)

    def test_gauss_point_positions_FEM_ASM_003(self):
        """Test Case ID: FEM-ASM-003 - Verify Gauss point positions lie inside their elements."""
        mesh = generate_mesh(BilletSpec(0.01, 0.01, 0.0025))
        points = gauss_point_coordinates(mesh, mesh.node_coords, self.formulation)
        self.assertEqual(points.shape, (mesh.n_elements, 4, 2))
        centers = mesh.node_coords[mesh.connectivity].mean(axis=1)
        np.testing.assert_allclose(points.mean(axis=1), centers, atol=1e-15)

    def test_inverted_element_FEM_ASM_004(self):
        """Test Case ID: FEM-ASM-004 - Verify a folded element is reported by id."""
        mesh = generate_mesh(BilletSpec(0.01, 0.01, 0.01), allow_coarse=True)
        trial = np.zeros((4, 2))
        trial[2] = [-0.015, -0.015]
        with self.assertRaises(InvertedElementError) as cm:
            assemble(mesh, IncrementState.initial(mesh, self.formulation), trial, self.params, self.formulation)
        self.assertEqual(cm.exception.element_ids, [0])

    def pressed_patch(self):
        die = DieProfile(W1=0.025, ER=0.75, L1n=22.0, L2n=6.0, R1n=0.8, R2n=1.8)
        mesh = generate_mesh(BilletSpec(0.005, 0.005, 0.0025), origin=(die.exit_start_x + 0.01, 0.0),
                             allow_coarse=True)
        rng = np.random.default_rng(3)
        trial = 5.0e-7 * rng.standard_normal((mesh.n_nodes, 2))
        trial[:, 1] -= 2.0e-5
        contact = ContactParams(penalty_stiffness=1.0e11, activation_tolerance=1.25e-3, element_size=0.0025)
        return mesh, build_die(die), contact, trial

    def contact_residual(self, mesh, walls, contact, trial):
        system = assemble(mesh, IncrementState.initial(mesh, self.formulation), trial, self.params, self.formulation)
        f_c, k_c, state = contact_forces(mesh, mesh.node_coords + trial, walls, contact)
        return system.residual - f_c, (system.tangent + k_c).toarray(), state

    def test_tangent_with_contact_FEM_ASM_005(self):
        """Test Case ID: FEM-ASM-005 - Verify the assembled tangent with active contact against finite differences."""
        mesh, walls, contact, trial = self.pressed_patch()
        self.assertLessEqual(mesh.n_dofs, 30)
        _, tangent, state = self.contact_residual(mesh, walls, contact, trial)
        self.assertEqual(state.n_active, mesh.nx + 1)
        step = 1e-9
        fd = np.empty_like(tangent)
        for dof in range(mesh.n_dofs):
            e = np.zeros(mesh.n_dofs)
            e[dof] = step
            plus, _, _ = self.contact_residual(mesh, walls, contact, trial + e.reshape(-1, 2))
            minus, _, _ = self.contact_residual(mesh, walls, contact, trial - e.reshape(-1, 2))
            fd[:, dof] = (plus - minus) / (2 * step)
        np.testing.assert_allclose(tangent, fd, atol=1e-5 * np.abs(tangent).max())

    def test_repeatable_assembly_FEM_ASM_006(self):
        """Test Case ID: FEM-ASM-006 - Verify repeated assemblies of the same iterate are bitwise identical."""
        mesh, walls, contact, trial = self.pressed_patch()
        first_r, first_k, _ = self.contact_residual(mesh, walls, contact, trial)
        second_r, second_k, _ = self.contact_residual(mesh, walls, contact, trial.copy())
        np.testing.assert_array_equal(first_r, second_r)
        np.testing.assert_array_equal(first_k, second_k)


if __name__ == '__main__':
    unittest.main()
