'''
Mesh-convergence comparison along a material line.

Every run is sampled on the nodes nearest to the reference segment A-B of its own mesh.
The recovered ``sigma_xx`` values are interpolated onto a common normalized A-to-B grid,
and successive runs (coarse to fine) are differenced in the max norm and in L2.
'''

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from ..geometry.mesh import material_line
from ..utils.exceptions import MismatchedGeometryError
from ..utils.helpers import relative_l2
from .recovery import recover_nodal_stress

logger = logging.getLogger(__name__)

GRID_POINTS = 101
CONVERGED_REL_L2 = 0.05


@dataclass
class MaterialLineRun:
    '''Final state of one run of a refinement study.'''
    element_size: float
    mesh: object
    snapshot: object
    label: str = None

    @property
    def name(self):
        return self.label or f"{self.element_size * 1e3:.4g} mm"


@dataclass
class ConvergenceTable:
    table: pd.DataFrame
    profiles: pd.DataFrame
    converged: bool
    selected_element_size: float
    given_order: tuple = ()

    @property
    def reordered(self):
        return bool(self.given_order) and list(self.given_order) != sorted(self.given_order, reverse=True)

    @property
    def decreasing(self):
        diffs = self.table['l2_diff'].to_numpy()
        return bool(np.all(np.diff(diffs) <= 0.0)) if len(diffs) > 1 else True

    def summary(self):
        summary = {'converged': bool(self.converged), 'selected_element_size': float(self.selected_element_size),
                   'successive_differences_decrease': self.decreasing}
        if self.reordered:
            summary['order'] = (f"element sizes sorted descending (coarse to fine) from the given order "
                                f"{[float(size) for size in self.given_order]}")
        return summary


def sample_material_line(run, a, b, recovery='extrapolate', grid=None):
    '''``sigma_xx`` of one run on the normalized A-B grid.'''
    grid = np.linspace(0.0, 1.0, GRID_POINTS) if grid is None else grid
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    nodes = material_line(run.mesh, a, b)
    direction = b - a
    tau = (run.mesh.node_coords[nodes] - a) @ direction / float(direction @ direction)
    nodal = run.snapshot.nodal_stress
    if nodal is None:
        nodal = recover_nodal_stress(run.snapshot, run.mesh, method=recovery)
    values = np.asarray(nodal)[nodes, 0]
    order = np.argsort(tau, kind='stable')
    return np.interp(grid, np.clip(tau[order], 0.0, 1.0), values[order])


def _check_geometry(runs):
    reference = runs[0].mesh
    for run in runs[1:]:
        for name in ('width', 'length'):
            ref, other = getattr(reference, name), getattr(run.mesh, name)
            if abs(ref - other) > 1e-9 * max(abs(ref), 1.0):
                raise MismatchedGeometryError(f"billet {name} differs between runs: {ref:.9g} m vs {other:.9g} m")
        if not np.allclose(run.mesh.node_coords[0], reference.node_coords[0], rtol=0.0, atol=1e-9):
            raise MismatchedGeometryError("billet reference positions differ between runs")


def compare_material_line(runs, line, recovery='extrapolate'):
    '''
    Compares the final ``sigma_xx`` of runs that differ only in element size.

    Args:
        runs (list[MaterialLineRun]): Runs of the refinement study.
        line (tuple): Reference end points ``(A, B)`` of the material line.
        recovery (str): Nodal recovery method for snapshots without nodal stresses.

    Returns:
        ConvergenceTable: Successive differences, sampled profiles and the verdict.

    Raises:
        MismatchedGeometryError: If the runs do not share the billet geometry.
        ValueError: If fewer than two runs are given.
    '''
    if len(runs) < 2:
        raise ValueError("at least two runs are required for a convergence comparison")
    _check_geometry(runs)
    given_order = tuple(run.element_size for run in runs)
    runs = sorted(runs, key=lambda run: -run.element_size)
    if [run.element_size for run in runs] != list(given_order):
        logger.info("Element sizes %s reordered from coarse to fine", list(given_order))
    a, b = line
    grid = np.linspace(0.0, 1.0, GRID_POINTS)
    sampled = [sample_material_line(run, a, b, recovery, grid) for run in runs]
    finest = sampled[-1]

    rows = []
    for (coarse, fine), (va, vb) in zip(zip(runs[:-1], runs[1:]), zip(sampled[:-1], sampled[1:])):
        diff = va - vb
        rows.append({'coarse_size': coarse.element_size, 'fine_size': fine.element_size,
                     'max_abs_diff': float(np.max(np.abs(diff))),
                     'l2_diff': float(np.sqrt(np.mean(diff ** 2))),
                     'rel_l2': relative_l2(va, vb),
                     'rel_l2_to_finest': relative_l2(va, finest)})
    table = pd.DataFrame(rows)
    profiles = pd.DataFrame({'tau': grid})
    for run, values in zip(runs, sampled):
        profiles[run.name] = values

    last = rows[-1]['rel_l2']
    converged = last < CONVERGED_REL_L2
    selected = runs[-2].element_size
    logger.info("Material-line comparison over %d runs: finest pair rel. L2 = %.3g (%s); selected size %.4g m",
                len(runs), last, 'converged' if converged else 'not converged', selected)
    return ConvergenceTable(table=table, profiles=profiles, converged=converged, selected_element_size=selected,
                            given_order=given_order)
