'''
Pure-bending springback benchmark.

A straight strip is bent by rotating its two end faces rigidly about their centres, then
released onto a statically determinate support. The residual longitudinal stress on the
middle cross-section is compared with the closed-form elastic-perfectly-plastic
plane-strain profile after elastic unloading.
'''

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from ..geometry.mesh import BilletSpec, generate_mesh
from ..models.contact import PhaseLoad
from ..models.element import ElementFormulation
from ..models.material import MaterialParams
from ..models.solver import IncrementFailure, QuasiStaticSolver, SolveConfig
from ..utils.exceptions import SolverFailure
from ..utils.helpers import relative_l2, rotation_matrix
from .recovery import extrapolate_to_nodes

logger = logging.getLogger(__name__)


def plane_strain_constants(E, nu, sigma_y0):
    '''Plane-strain modulus and fully plastic plane-strain flow stress.'''
    return E / (1.0 - nu ** 2), 2.0 * sigma_y0 / math.sqrt(3.0)


def analytic_bending_residual(eta, half_thickness, curvature, E, nu, sigma_y0):
    '''
    Residual longitudinal stress after elastic-plastic bending and elastic unloading.

    Args:
        eta (array-like): Distance from the mid-plane (m).
        half_thickness (float): Half of the strip thickness (m).
        curvature (float): Signed bending curvature (1/m); fibre strain is ``curvature * eta``.
        E, nu, sigma_y0 (float): Elastic constants and yield stress (Pa).

    Returns:
        np.ndarray: Residual stress at ``eta`` (Pa).
    '''
    eta = np.asarray(eta, dtype=float)
    c = float(half_thickness)
    E_ps, flow = plane_strain_constants(E, nu, sigma_y0)
    loading = np.clip(E_ps * curvature * eta, -flow, flow)
    inertia = 2.0 * c ** 3 / 3.0
    if curvature == 0.0:
        return np.zeros_like(eta)
    eta_e = flow / (E_ps * abs(curvature))
    if eta_e >= c:
        moment = E_ps * curvature * inertia
    else:
        moment = math.copysign(flow * (c ** 2 - eta_e ** 2 / 3.0), curvature)
    return loading - moment * eta / inertia


@dataclass
class BendingResult:
    eta: np.ndarray
    simulated: np.ndarray
    analytic: np.ndarray
    curvature: float
    rel_l2: float

    def to_frame(self):
        return pd.DataFrame({'eta': self.eta, 'simulated': self.simulated, 'analytic': self.analytic})


def _face_targets(mesh, reference, angle):
    '''Rigidly rotated positions of the two end faces.'''
    targets = {}
    for face, sign in (('RightFace', 1.0), ('LeftFace', -1.0)):
        nodes = mesh.node_sets[face]
        center = reference[nodes].mean(axis=0)
        rotated = center + (reference[nodes] - center) @ rotation_matrix(sign * angle).T
        targets.update({int(n): p for n, p in zip(nodes, rotated)})
    return targets


def _solve(solver, load):
    try:
        result = solver.solve_increment(load, 1.0)
    except IncrementFailure as exc:
        return exc
    solver.commit(result, 1.0)
    return None


def run_bending_benchmark(config=None, thickness=0.01, length=0.02, element_size=0.5e-3,
                          strain_ratio=5.0, steps=20, max_cuts=6):
    '''
    Bends a strip, releases it and compares the residual stress with the closed form.

    Args:
        config (dict, optional): Configuration supplying ``material``, ``formulation`` and
            ``solve``; the hardening rate is ignored (perfect plasticity).
        thickness, length (float): Strip dimensions (m).
        element_size (float): Target element size (m).
        strain_ratio (float): Surface strain at full load in multiples of the yield strain.
        steps (int): Nominal loading increments.
        max_cuts (int): Allowed halvings of a loading increment.

    Returns:
        BendingResult: Simulated and analytic profiles on the middle section.

    Raises:
        SolverFailure: If a loading increment cannot be converged.
    '''
    from ..utils.config import get_default_config

    config = config or get_default_config()
    material_cfg = dict(config['material'], H=0.0)
    params = MaterialParams.from_config(material_cfg)
    formulation = ElementFormulation.from_config(config['formulation'])
    solve_config = SolveConfig.from_config(config['solve'])

    mesh = generate_mesh(BilletSpec(width=thickness, length=length, target_element_size=element_size))
    reference = mesh.node_coords
    E_ps, flow = plane_strain_constants(params.E, params.nu, params.sigma_y0)
    half = 0.5 * thickness
    target_curvature = strain_ratio * flow / (E_ps * half)
    final_angle = math.asin(min(0.5 * target_curvature * length, 0.5))
    solver = QuasiStaticSolver(mesh, [], params, formulation, None, solve_config)
    logger.info("Bending benchmark: %d elements, end rotation %.4g rad", mesh.n_elements, final_angle)

    angle, step = 0.0, final_angle / steps
    cuts = 0
    while angle < final_angle - 1e-12 * final_angle:
        trial = min(angle + step, final_angle)
        targets = _face_targets(mesh, reference, trial)
        prescribed = {}
        for node, position in targets.items():
            delta = position - solver.state.coords[node]
            prescribed[2 * node], prescribed[2 * node + 1] = float(delta[0]), float(delta[1])
        failure = _solve(solver, PhaseLoad(prescribed, phase='Bending'))
        if failure is None:
            angle = trial
            continue
        cuts += 1
        if cuts > max_cuts:
            raise SolverFailure(f"bending increment failed: {failure.reason}", dict(failure.diagnostics))
        step *= 0.5
        logger.warning("Bending step cut to %.4g rad (%s)", step, failure.reason)

    bottom, top = mesh.node_sets['RightFace'], mesh.node_sets['LeftFace']
    pin = int(bottom[len(bottom) // 2])
    roller = int(top[len(top) // 2])
    failure = _solve(solver, PhaseLoad({2 * pin: 0.0, 2 * pin + 1: 0.0, 2 * roller: 0.0}, phase='Released'))
    if failure is not None:
        raise SolverFailure(f"bending release failed: {failure.reason}", dict(failure.diagnostics))

    nodal = extrapolate_to_nodes(mesh, solver.state.coords, solver.state.stress, formulation)
    middle = mesh.row(mesh.ny // 2)
    eta = reference[middle, 0] - reference[middle, 0].mean()
    simulated = nodal[middle, 1]
    curvature = -2.0 * math.sin(final_angle) / length
    analytic = analytic_bending_residual(eta, half, curvature, params.E, params.nu, params.sigma_y0)
    error = float(relative_l2(simulated, analytic))
    logger.info("Bending benchmark: residual-stress relative L2 error %.3g", error)
    return BendingResult(eta=eta, simulated=simulated, analytic=analytic, curvature=curvature, rel_l2=error)
