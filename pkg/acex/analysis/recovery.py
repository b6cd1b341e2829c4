'''
Nodal stress recovery for the acex package.

Two methods map integration-point stresses onto the nodes:

- ``extrapolate``: each element's Gauss-point values are extrapolated to its corners with
  the inverse of the shape-function matrix evaluated at the Gauss points (constant for
  one-point elements), then averaged at the nodes with the current element areas as weights.
- ``spr``: superconvergent patch recovery. A linear polynomial is fitted by least squares
  to the Gauss-point values of the elements around every interior node; boundary nodes
  take the average of the fits of the adjacent interior patches.
'''

import logging

import numpy as np

from ..models.element import ElementFormulation, element_gauss_points, gauss_point_coordinates, shape_functions
from ..utils.config import RECOVERY_METHODS

logger = logging.getLogger(__name__)


def _formulation_for(gp_stress, formulation=None):
    if formulation is not None:
        return formulation
    if gp_stress.shape[1] == 1:
        return ElementFormulation('SinglePointHourglass')
    return ElementFormulation('SelectiveReducedBbar')


def _corner_values(gp_stress, formulation):
    '''Per-element corner values ``(E, 4, c)`` extrapolated from the Gauss points.'''
    if gp_stress.shape[1] == 1:
        return np.repeat(gp_stress, 4, axis=1)
    points, _ = element_gauss_points(formulation)
    N = shape_functions(points[:, 0], points[:, 1])
    return np.einsum('ag,egc->eac', np.linalg.inv(N), gp_stress)


def _nodal_average(mesh, coords, corner_values):
    weights = np.abs(mesh.element_areas(coords))
    conn = mesh.connectivity.ravel()
    w = np.repeat(weights, 4)
    denom = np.bincount(conn, weights=w, minlength=mesh.n_nodes)
    denom = np.where(denom > 0.0, denom, 1.0)
    values = corner_values.reshape(-1, corner_values.shape[-1])
    out = np.empty((mesh.n_nodes, values.shape[1]))
    for c in range(values.shape[1]):
        out[:, c] = np.bincount(conn, weights=w * values[:, c], minlength=mesh.n_nodes) / denom
    return out


def extrapolate_to_nodes(mesh, coords, gp_stress, formulation=None):
    '''
    Area-weighted nodal average of Gauss-point stresses extrapolated to element corners.

    Args:
        mesh (Mesh): The billet mesh.
        coords (np.ndarray): ``(n_nodes, 2)`` configuration used for the area weights.
        gp_stress (np.ndarray): ``(E, g, 4)`` integration-point stresses.
        formulation (ElementFormulation, optional): Inferred from ``g`` when omitted.

    Returns:
        np.ndarray: ``(n_nodes, 4)`` nodal stresses.
    '''
    gp_stress = np.asarray(gp_stress, dtype=float)
    formulation = _formulation_for(gp_stress, formulation)
    return _nodal_average(mesh, coords, _corner_values(gp_stress, formulation))


def _interior_patches(mesh):
    '''Interior node ids and the four elements around each, ``(n, 4)``.'''
    nx, ny = mesh.grid_shape
    i, j = np.meshgrid(np.arange(1, nx), np.arange(1, ny))
    i = i.ravel()
    j = j.ravel()
    nodes = j * (nx + 1) + i
    patches = np.column_stack([(j - 1) * nx + (i - 1), (j - 1) * nx + i, j * nx + (i - 1), j * nx + i])
    return nodes, patches


def superconvergent_patch_recovery(mesh, coords, gp_stress, formulation=None):
    '''
    Superconvergent patch recovery with a linear patch polynomial.

    Nodes without an adjacent interior patch (meshes one element wide) fall back to
    the extrapolated average.
    '''
    gp_stress = np.asarray(gp_stress, dtype=float)
    formulation = _formulation_for(gp_stress, formulation)
    coords = np.asarray(coords, dtype=float)
    fallback = extrapolate_to_nodes(mesh, coords, gp_stress, formulation)
    nodes, patches = _interior_patches(mesh)
    if len(nodes) == 0:
        return fallback

    gp_xy = gauss_point_coordinates(mesh, coords, formulation)
    n_comp = gp_stress.shape[-1]
    local = gp_xy[patches].reshape(len(nodes), -1, 2) - coords[nodes][:, None, :]
    scale = np.max(np.abs(local), axis=(1, 2))[:, None, None]
    local = local / np.where(scale > 0.0, scale, 1.0)
    P = np.concatenate([np.ones(local.shape[:2] + (1,)), local], axis=2)
    values = gp_stress[patches].reshape(len(nodes), -1, n_comp)
    coeffs = np.linalg.pinv(P) @ values

    recovered = fallback.copy()
    recovered[nodes] = coeffs[:, 0, :]

    patch_of = {int(node): k for k, node in enumerate(nodes)}
    interior = np.zeros(mesh.n_nodes, dtype=bool)
    interior[nodes] = True
    for node in mesh.boundary_nodes():
        elements = np.nonzero(np.any(mesh.connectivity == node, axis=1))[0]
        neighbours = np.unique(mesh.connectivity[elements])
        neighbours = neighbours[interior[neighbours]]
        if len(neighbours) == 0:
            continue
        fits = []
        for other in neighbours:
            k = patch_of[int(other)]
            offset = (coords[node] - coords[other]) / (scale[k, 0, 0] if scale[k, 0, 0] > 0.0 else 1.0)
            fits.append(coeffs[k, 0, :] + offset @ coeffs[k, 1:, :])
        recovered[node] = np.mean(fits, axis=0)
    return recovered


def recover_nodal_stress(snapshot, mesh, method='extrapolate', formulation=None):
    '''
    Recovers the nodal stress field of a snapshot.

    Args:
        snapshot (FieldSnapshot): Snapshot with integration-point stresses.
        mesh (Mesh): The billet mesh.
        method (str): ``extrapolate`` or ``spr``.
        formulation (ElementFormulation, optional): Inferred from the stress array shape.

    Returns:
        np.ndarray: ``(n_nodes, 4)`` nodal stresses ``[xx, yy, zz, xy]``.
    '''
    if method not in RECOVERY_METHODS:
        raise ValueError(f"unknown recovery method '{method}'")
    if method == 'spr':
        return superconvergent_patch_recovery(mesh, snapshot.nodal_coords, snapshot.gp_stress, formulation)
    return extrapolate_to_nodes(mesh, snapshot.nodal_coords, snapshot.gp_stress, formulation)
