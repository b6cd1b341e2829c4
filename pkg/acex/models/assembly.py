'''
Global assembly of element contributions into sparse operators.

Scatter is deterministic: element contributions are laid out in element order and
summed by scipy's COO to CSR conversion, so repeated evaluations are bitwise identical.
'''

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .element import evaluate_elements

logger = logging.getLogger(__name__)


@dataclass
class IncrementState:
    '''Converged state at the start of an increment.'''
    coords: np.ndarray
    stress: np.ndarray
    eqps: np.ndarray

    @classmethod
    def initial(cls, mesh, formulation):
        n_gp = formulation.n_gauss
        return cls(mesh.node_coords.copy(), np.zeros((mesh.n_elements, n_gp, 4)),
                   np.zeros((mesh.n_elements, n_gp)))

    def copy(self):
        return IncrementState(self.coords.copy(), self.stress.copy(), self.eqps.copy())


@dataclass
class GlobalSystem:
    '''
    Linearized global problem of one Newton iterate.

    Attributes:
        tangent: Sparse CSR operator over all degrees of freedom.
        residual (np.ndarray): Out-of-balance force ``f_int - f_ext`` (N per unit thickness).
        dof_map (np.ndarray): ``(n_nodes, 2)`` node to DOF indices.
        constrained_dofs (dict): Prescribed DOF to prescribed increment value.
        internal_force (np.ndarray): Assembled internal force.
        force_scale (float): Root-sum-square of element internal forces.
    '''
    tangent: object
    residual: np.ndarray
    dof_map: np.ndarray
    constrained_dofs: dict = field(default_factory=dict)
    internal_force: np.ndarray = None
    force_scale: float = 0.0
    stress: np.ndarray = None
    eqps: np.ndarray = None
    factor: object = None

    @property
    def n_dofs(self):
        return len(self.residual)

    def free_mask(self):
        mask = np.ones(self.n_dofs, dtype=bool)
        if self.constrained_dofs:
            mask[np.fromiter(self.constrained_dofs.keys(), dtype=np.int64)] = False
        return mask


def dof_map(mesh):
    return np.arange(2 * mesh.n_nodes, dtype=np.int64).reshape(mesh.n_nodes, 2)


class Assembler:
    '''Holds the element-to-DOF scatter pattern of a mesh and evaluates the global system.'''

    def __init__(self, mesh, params, formulation):
        self.mesh = mesh
        self.params = params
        self.formulation = formulation
        self.dof_map = dof_map(mesh)
        self.element_dofs = self.dof_map[mesh.connectivity].reshape(mesh.n_elements, 8)
        self.rows = np.repeat(self.element_dofs, 8, axis=1).ravel()
        self.cols = np.tile(self.element_dofs, (1, 8)).ravel()
        self.element_ids = np.arange(mesh.n_elements)

    def evaluate(self, state, increment, need_tangent=True):
        '''
        Element loop over the whole mesh.

        Returns:
            tuple: ``(internal_force (n_dofs,), tangent CSR or None, ElementResult)``.
        '''
        conn = self.mesh.connectivity
        increment = np.asarray(increment, dtype=float).reshape(-1, 2)
        result = evaluate_elements(state.coords[conn], increment[conn], self.mesh.node_coords[conn],
                                   state.stress, state.eqps, self.params, self.formulation,
                                   need_tangent=need_tangent, element_ids=self.element_ids)
        n_dofs = self.mesh.n_dofs
        f_int = np.bincount(self.element_dofs.ravel(), weights=result.internal_force.ravel(), minlength=n_dofs)
        tangent = None
        if need_tangent:
            tangent = sp.coo_matrix((result.stiffness.ravel(), (self.rows, self.cols)),
                                    shape=(n_dofs, n_dofs)).tocsr()
        return f_int, tangent, result


def assemble(mesh, snapshot_prev, trial_displacements, params, formulation,
             constraints=None, external_force=None, assembler=None):
    '''
    Assembles the global tangent and residual for a trial displacement increment.

    Args:
        mesh (Mesh): The billet mesh.
        snapshot_prev (IncrementState): Converged state at the start of the increment.
        trial_displacements (np.ndarray): ``(n_nodes, 2)`` or flat incremental displacements.
        params (MaterialParams): Material constants.
        formulation (ElementFormulation): Element technology.
        constraints (dict, optional): Prescribed DOF increments of the active load phase.
        external_force (np.ndarray, optional): External nodal forces.
        assembler (Assembler, optional): Reused scatter pattern.

    Returns:
        GlobalSystem: The assembled system.

    Raises:
        InvertedElementError: With the ids of the folded elements.
    '''
    trial = np.asarray(trial_displacements, dtype=float)
    if not np.all(np.isfinite(trial)):
        raise ValueError("trial displacements must be finite")
    assembler = assembler or Assembler(mesh, params, formulation)
    f_int, tangent, result = assembler.evaluate(snapshot_prev, trial)
    residual = f_int.copy()
    if external_force is not None:
        residual -= external_force
    return GlobalSystem(tangent=tangent, residual=residual, dof_map=assembler.dof_map,
                        constrained_dofs=dict(constraints or {}), internal_force=f_int,
                        force_scale=float(np.linalg.norm(result.internal_force)),
                        stress=result.stress, eqps=result.eqps)
