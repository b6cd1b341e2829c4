'''
Billet Mesh Module for the acex package.

Generates the structured 4-node quadrilateral mesh of the rectangular billet and keeps
the boundary node sets that identify the billet faces as material sets.

Numbering: node ``(i, j)`` has id ``j * (nx + 1) + i`` where ``i`` runs across the width
(0 on the outer side) and ``j`` along the length (0 at the head). Face sets are named in
the frame of the extrudate:

- ``LeftFace``: trailing end (punch face, later the arc-pushed face), row ``j = ny``.
- ``RightFace``: leading end (pull-out face), row ``j = 0``.
- ``TopFace``: inner side, column ``i = nx``; becomes the extrudate top surface.
- ``BottomFace``: outer side, column ``i = 0``; becomes the extrudate bottom surface.

Corner nodes are assigned with the precedence Left > Right > Top > Bottom.
'''

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.spatial import cKDTree

from ..utils.exceptions import EmptyMaterialLineError, MeshSizeError

logger = logging.getLogger(__name__)

FACE_SETS = ('LeftFace', 'RightFace', 'TopFace', 'BottomFace')


@dataclass(frozen=True)
class BilletSpec:
    '''Size of the rectangular billet and its target element size (metres).'''
    width: float
    length: float
    target_element_size: float
    clearance: float = 0.0

    def __post_init__(self):
        if not (self.width > 0.0 and self.length > 0.0 and self.target_element_size > 0.0):
            raise MeshSizeError("billet width, length and element size must be positive")
        if self.clearance < 0.0:
            raise MeshSizeError("clearance must be non-negative")

    @classmethod
    def from_config(cls, billet_config):
        return cls(width=billet_config['width'], length=billet_config['length'],
                   target_element_size=billet_config['element_size'],
                   clearance=billet_config['clearance'])


class Mesh:
    '''
    Structured quadrilateral mesh in the reference configuration.

    Attributes:
        node_coords (np.ndarray): ``(n_nodes, 2)`` reference coordinates.
        connectivity (np.ndarray): ``(n_elements, 4)`` counter-clockwise node ids.
        node_sets (dict): Face name to sorted node id array.
        element_size (float): Target element size the mesh was generated for.
        nx, ny (int): Elements across the width and along the length.
    '''

    def __init__(self, node_coords, connectivity, node_sets, element_size, nx, ny):
        self.node_coords = np.asarray(node_coords, dtype=float)
        self.connectivity = np.asarray(connectivity, dtype=np.int64)
        self.node_sets = {name: np.asarray(ids, dtype=np.int64) for name, ids in node_sets.items()}
        self.element_size = float(element_size)
        self.nx = int(nx)
        self.ny = int(ny)
        self.node_coords.setflags(write=False)
        self.connectivity.setflags(write=False)

    @property
    def n_nodes(self):
        return len(self.node_coords)

    @property
    def n_elements(self):
        return len(self.connectivity)

    @property
    def n_dofs(self):
        return 2 * self.n_nodes

    @property
    def grid_shape(self):
        return self.nx, self.ny

    @property
    def width(self):
        return float(self.node_coords[self.nx, 0] - self.node_coords[0, 0])

    @property
    def length(self):
        return float(self.node_coords[-1, 1] - self.node_coords[0, 1])

    @property
    def spacing(self):
        '''Actual element edge lengths ``(dx, dy)``.'''
        return self.width / self.nx, self.length / self.ny

    def node_id(self, i, j):
        return j * (self.nx + 1) + i

    def column(self, i):
        '''Node ids of grid column ``i``, ordered from head to tail.'''
        return np.arange(self.ny + 1, dtype=np.int64) * (self.nx + 1) + i

    def row(self, j):
        '''Node ids of grid row ``j``, ordered from the outer to the inner side.'''
        return j * (self.nx + 1) + np.arange(self.nx + 1, dtype=np.int64)

    def boundary_nodes(self):
        return np.unique(np.concatenate([self.node_sets[name] for name in FACE_SETS]))

    def element_areas(self, coords=None):
        '''Element areas (shoelace formula) in the given or reference configuration.'''
        coords = self.node_coords if coords is None else np.asarray(coords, dtype=float)
        x = coords[self.connectivity, 0]
        y = coords[self.connectivity, 1]
        return 0.5 * np.sum(x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y, axis=1)

    def to_frames(self):
        '''Node and element tables in the documented dump column order.'''
        nodes = pd.DataFrame({'id': np.arange(self.n_nodes), 'x': self.node_coords[:, 0],
                              'y': self.node_coords[:, 1]})
        elements = pd.DataFrame(self.connectivity, columns=['n1', 'n2', 'n3', 'n4'])
        elements.insert(0, 'id', np.arange(self.n_elements))
        return nodes, elements


def generate_mesh(spec, origin=(0.0, 0.0), allow_coarse=False):
    '''
    Generates the structured billet mesh.

    Args:
        spec (BilletSpec): Billet dimensions and target element size.
        origin (tuple): Reference position of node (0, 0), the outer head corner.
        allow_coarse (bool): Permit fewer than 4 elements across the width.

    Returns:
        Mesh: The generated mesh.

    Raises:
        MeshSizeError: If the width is resolved by fewer than 4 elements, or the
            element aspect ratio falls outside [0.9, 1.1].
    '''
    nx = max(1, int(round(spec.width / spec.target_element_size)))
    ny = max(1, int(round(spec.length / spec.target_element_size)))
    if nx < 4 and not allow_coarse:
        raise MeshSizeError(f"only {nx} element(s) across the billet width; at least 4 are required")

    dx, dy = spec.width / nx, spec.length / ny
    aspect = dx / dy
    if not 0.9 <= aspect <= 1.1:
        raise MeshSizeError(f"element aspect ratio {aspect:.3f} outside [0.9, 1.1]")

    x = origin[0] + dx * np.arange(nx + 1)
    y = origin[1] + dy * np.arange(ny + 1)
    xx, yy = np.meshgrid(x, y)
    coords = np.column_stack([xx.ravel(), yy.ravel()])

    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    base = (j * (nx + 1) + i).ravel()
    connectivity = np.column_stack([base, base + 1, base + nx + 2, base + nx + 1])

    node_sets = face_sets(nx, ny)
    logger.info("Generated billet mesh: %d x %d elements (%d nodes), dx=%.4g m, dy=%.4g m",
                nx, ny, len(coords), dx, dy)
    return Mesh(coords, connectivity, node_sets, spec.target_element_size, nx, ny)


def material_line(mesh, a, b):
    '''
    Nodes nearest to the straight segment A-B in the reference configuration.

    The segment is sampled at a quarter of the grid spacing and each sample is snapped to
    its nearest node (lowest id on exact ties); repeats are dropped while keeping the A to
    B order. The ids address the same material line in every deformed snapshot.

    Raises:
        EmptyMaterialLineError: If A and B coincide.
    '''
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    length = float(np.linalg.norm(b - a))
    if length <= 1e-12 * max(mesh.width, mesh.length):
        raise EmptyMaterialLineError("material line end points A and B coincide")

    step = 0.25 * min(mesh.spacing)
    count = int(math.ceil(length / step)) + 1
    samples = a[None, :] + np.linspace(0.0, 1.0, count)[:, None] * (b - a)[None, :]

    tree = cKDTree(mesh.node_coords)
    k = min(2, mesh.n_nodes)
    dist, idx = tree.query(samples, k=k)
    if k == 1:
        nearest = np.atleast_1d(idx)
    else:
        tie = np.abs(dist[:, 1] - dist[:, 0]) <= 1e-9 * min(mesh.spacing)
        nearest = np.where(tie, np.minimum(idx[:, 0], idx[:, 1]), idx[:, 0])

    ordered = [int(nearest[0])]
    for node in nearest[1:]:
        if int(node) != ordered[-1] and int(node) not in ordered:
            ordered.append(int(node))
    return np.asarray(ordered, dtype=np.int64)


def face_sets(nx, ny):
    '''Face node sets of an ``nx`` by ``ny`` structured grid with corner precedence Left > Right > Top > Bottom.'''
    inner_rows = np.arange(1, ny, dtype=np.int64) * (nx + 1)
    return {
        'LeftFace': ny * (nx + 1) + np.arange(nx + 1, dtype=np.int64),
        'RightFace': np.arange(nx + 1, dtype=np.int64),
        'TopFace': inner_rows + nx,
        'BottomFace': inner_rows,
    }
