'''
Contact Module for the acex package.

Frictionless node-to-rigid-wall penalty contact between the billet boundary and the die,
and the load phases that drive the billet through the die:

- ``PunchPush``: the trailing face is moved down at the punch speed (rigid frictionless
  punch as a prescribed vertical displacement; horizontal motion stays free).
- ``ArcPush``: trailing-face nodes are pushed along concentric arcs about the bend center
  through rotated (tangential, radial) degrees of freedom; both components are prescribed
  so each node stays on its circle.
- ``PullOut``: a small dead-load traction ramp on the leading face.
- ``Release``: all loads removed, statically determinate support, one equilibrium solve.

A light nodal viscous stabilization ``c * du / dt`` accompanies the first three phases.
'''

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from ..geometry.die import signed_distance
from ..utils.exceptions import PhaseTransitionError

logger = logging.getLogger(__name__)

PHASES = ('PunchPush', 'ArcPush', 'PullOut', 'Released')


@dataclass(frozen=True)
class ContactParams:
    '''Penalty stiffness (N/m^2 per unit thickness) and candidate activation gap (m).'''
    penalty_stiffness: float
    activation_tolerance: float
    element_size: float = None
    max_penalty_stiffness: float = None

    def __post_init__(self):
        if not self.penalty_stiffness > 0.0:
            raise ValueError("penalty_stiffness must be positive")
        if not self.activation_tolerance > 0.0:
            raise ValueError("activation_tolerance must be positive")

    @classmethod
    def from_config(cls, contact_config, material_config, element_size):
        return cls(penalty_stiffness=float(contact_config['penalty_stiffness']),
                   activation_tolerance=float(contact_config['activation_tolerance']),
                   element_size=float(element_size),
                   max_penalty_stiffness=float(contact_config['max_penalty_factor'] * material_config['E'] / element_size))

    @property
    def deep_penetration(self):
        return 0.1 * self.element_size if self.element_size else np.inf

    def escalated(self):
        '''Penalty raised ten-fold, capped at the maximum; returns self when already capped.'''
        cap = self.max_penalty_stiffness or np.inf
        if self.penalty_stiffness >= cap:
            return self
        return replace(self, penalty_stiffness=min(10.0 * self.penalty_stiffness, cap))


@dataclass
class ContactState:
    '''Per-candidate contact data; ``normal_force`` is the force magnitude along ``normal``.'''
    node_ids: np.ndarray
    gap: np.ndarray
    active: np.ndarray
    normal_force: np.ndarray
    normal: np.ndarray
    wall_id: np.ndarray

    @classmethod
    def empty(cls):
        return cls(np.zeros(0, dtype=np.int64), np.zeros(0), np.zeros(0, dtype=bool), np.zeros(0),
                   np.zeros((0, 2)), np.zeros(0, dtype=object))

    @property
    def n_active(self):
        return int(np.count_nonzero(self.active))

    @property
    def deepest_penetration(self):
        return float(-min(0.0, self.gap.min())) if len(self.gap) else 0.0

    def forces(self):
        '''Nodal contact force vectors of the candidates, ``(k, 2)``.'''
        return self.normal_force[:, None] * self.normal


def contact_forces(mesh, current_coords, walls, params, candidates=None):
    '''
    Penalty forces and their linearization for the billet boundary against the die.

    For a node with gap ``g < 0`` the force is ``-k g n``; its contribution to the tangent
    of the residual is ``k (n n^T + g kappa (I - n n^T))`` where kappa is the wall
    curvature factor.

    Args:
        mesh (Mesh): The billet mesh.
        current_coords (np.ndarray): ``(n_nodes, 2)`` current coordinates.
        walls (list): Die walls.
        params (ContactParams): Penalty parameters.
        candidates (np.ndarray, optional): Node ids to test; defaults to all boundary nodes.

    Returns:
        tuple: ``(forces (n_dofs,), stiffness CSR, ContactState)``.
    '''
    coords = np.asarray(current_coords, dtype=float)
    if not np.all(np.isfinite(coords)):
        raise ValueError("contact evaluation needs finite coordinates")
    nodes = mesh.boundary_nodes() if candidates is None else np.asarray(candidates, dtype=np.int64)
    n_dofs = mesh.n_dofs
    forces = np.zeros(n_dofs)

    query = signed_distance(walls, coords[nodes])
    near = query.distance < params.activation_tolerance
    nodes = nodes[near]
    gap = query.distance[near]
    normal = query.normal[near]
    kappa = query.curvature[near]
    wall_id = np.array([w.value for w in query.nearest_wall[near]], dtype=object)

    active = gap < 0.0
    k = params.penalty_stiffness
    magnitude = np.where(active, -k * gap, 0.0)
    state = ContactState(nodes, gap, active, magnitude, normal, wall_id)

    if not np.any(active):
        return forces, sp.csr_matrix((n_dofs, n_dofs)), state

    act_nodes = nodes[active]
    n = normal[active]
    g = gap[active]
    forces[2 * act_nodes] = magnitude[active] * n[:, 0]
    forces[2 * act_nodes + 1] = magnitude[active] * n[:, 1]

    nn = n[:, :, None] * n[:, None, :]
    blocks = k * (nn + (g * kappa[active])[:, None, None] * (np.eye(2)[None] - nn))
    dofs = np.stack([2 * act_nodes, 2 * act_nodes + 1], axis=1)
    rows = np.repeat(dofs, 2, axis=1).ravel()
    cols = np.tile(dofs, (1, 2)).ravel()
    stiffness = sp.coo_matrix((blocks.ravel(), (rows, cols)), shape=(n_dofs, n_dofs)).tocsr()

    if params.element_size and state.deepest_penetration > params.deep_penetration:
        logger.warning("Deep penetration %.3e m (> 0.1 element size) at node %d",
                       state.deepest_penetration, int(nodes[np.argmin(gap)]))
    return forces, stiffness, state


@dataclass
class PhaseLoad:
    '''
    Loads of one increment in the solve basis.

    Attributes:
        prescribed (dict): Solve-basis DOF to prescribed increment value.
        external_force (np.ndarray): Dead external nodal forces at the end of the increment.
        transform: CSR map from solve-basis to Cartesian increments, or None for identity.
        damping (float): Nodal viscous stabilization coefficient (N s/m per unit thickness).
        phase (str): Phase name.
    '''
    prescribed: dict
    external_force: np.ndarray = None
    transform: object = None
    damping: float = 0.0
    phase: str = ''
    info: dict = field(default_factory=dict)


class LoadPhase:
    '''Base class: tracks the phase-local time and completion.'''
    name = ''

    def __init__(self, die, damping=0.0):
        self.die = die
        self.damping = float(damping)
        self.elapsed = 0.0
        self.finished = False

    def start(self, mesh, coords):
        self.elapsed = 0.0
        self.finished = False

    def remaining_time(self):
        return np.inf

    def advance(self, mesh, coords, dt):
        self.elapsed += dt

    def check(self, mesh, coords):
        pass

    def _fail(self, message):
        raise PhaseTransitionError(f"{self.name}: {message}")


class PunchPush(LoadPhase):
    name = 'PunchPush'

    def __init__(self, die, speed, travel, damping=0.0):
        super().__init__(die, damping)
        self.speed = float(speed)
        self.travel = float(travel)

    @property
    def punch_travel(self):
        return self.speed * self.elapsed

    def remaining_time(self):
        return max(self.travel - self.punch_travel, 0.0) / self.speed

    def advance(self, mesh, coords, dt):
        super().advance(mesh, coords, dt)
        self.finished = self.punch_travel >= self.travel * (1.0 - 1e-12)

    def check(self, mesh, coords):
        tol = mesh.element_size
        tail = coords[mesh.node_sets['LeftFace']]
        inside = ((tail[:, 0] >= -tol) & (tail[:, 0] <= self.die.W1 + tol)
                  & (tail[:, 1] >= self.die.inlet_reference_height - tol))
        if not np.all(inside):
            self._fail("trailing face left the inlet channel")

    def load(self, mesh, coords, dt):
        tail = mesh.node_sets['LeftFace']
        prescribed = {int(2 * node + 1): -self.speed * dt for node in tail}
        return PhaseLoad(prescribed, damping=self.damping, phase=self.name,
                         info={'punch_travel': self.speed * (self.elapsed + dt)})


class ArcPush(LoadPhase):
    name = 'ArcPush'

    def __init__(self, die, feed_speed, damping=0.0, sweep=0.5 * math.pi):
        super().__init__(die, damping)
        self.feed_speed = float(feed_speed)
        self.sweep = float(sweep)
        self.center = np.asarray(die.bend_center, dtype=float)
        self.mean_radius = None

    def start(self, mesh, coords):
        super().start(mesh, coords)
        tail = coords[mesh.node_sets['LeftFace']]
        self.mean_radius = float(np.mean(np.hypot(*(tail - self.center).T)))
        if self.mean_radius <= 0.0:
            self._fail("trailing face sits on the bend center")

    @property
    def angle(self):
        return self.feed_speed * self.elapsed / self.mean_radius

    @property
    def feed_length(self):
        '''Material length fed through the bend by the arc push.'''
        return self.sweep * (self.mean_radius or 0.0)

    def remaining_time(self):
        return max(self.sweep - self.angle, 0.0) * self.mean_radius / self.feed_speed

    def advance(self, mesh, coords, dt):
        super().advance(mesh, coords, dt)
        self.finished = self.angle >= self.sweep * (1.0 - 1e-12)

    def check(self, mesh, coords):
        tol = mesh.element_size
        tail = coords[mesh.node_sets['LeftFace']]
        if np.any(tail[:, 0] > self.center[0] + tol) or np.any(tail[:, 1] > self.center[1] + tol):
            self._fail("trailing face is outside the bend quadrant")

    def load(self, mesh, coords, dt):
        tail = mesh.node_sets['LeftFace']
        d = coords[tail] - self.center
        r = np.hypot(d[:, 0], d[:, 1])
        e_r = d / r[:, None]
        e_t = np.column_stack([-e_r[:, 1], e_r[:, 0]])
        d_theta = self.feed_speed * dt / self.mean_radius

        n_dofs = mesh.n_dofs
        keep = np.ones(n_dofs, dtype=bool)
        keep[2 * tail] = False
        keep[2 * tail + 1] = False
        plain = np.flatnonzero(keep)
        rows = np.concatenate([plain, 2 * tail, 2 * tail + 1, 2 * tail, 2 * tail + 1])
        cols = np.concatenate([plain, 2 * tail, 2 * tail, 2 * tail + 1, 2 * tail + 1])
        vals = np.concatenate([np.ones(len(plain)), e_t[:, 0], e_t[:, 1], e_r[:, 0], e_r[:, 1]])
        transform = sp.coo_matrix((vals, (rows, cols)), shape=(n_dofs, n_dofs)).tocsr()

        prescribed = {}
        for node, radius in zip(tail, r):
            prescribed[int(2 * node)] = float(radius * math.sin(d_theta))
            prescribed[int(2 * node + 1)] = float(radius * (math.cos(d_theta) - 1.0))
        return PhaseLoad(prescribed, transform=transform, damping=self.damping, phase=self.name,
                         info={'arc_angle': self.angle + d_theta})


class PullOut(LoadPhase):
    name = 'PullOut'

    def __init__(self, die, peak_traction, ramp, feed_speed, damping=0.0):
        super().__init__(die, damping)
        self.peak_traction = float(peak_traction)
        self.ramp = float(ramp)
        self.feed_speed = float(feed_speed)
        self.time_limit = np.inf
        self._tributary = None

    def start(self, mesh, coords):
        super().start(mesh, coords)
        head = mesh.node_sets['RightFace']
        ref = mesh.node_coords[head]
        seg = np.hypot(*np.diff(ref, axis=0).T)
        trib = np.zeros(len(head))
        trib[:-1] += 0.5 * seg
        trib[1:] += 0.5 * seg
        self._tributary = trib
        travel = max(self.die.exit_end_x + mesh.element_size - float(coords[:, 0].min()), 0.0)
        self.time_limit = 10.0 * travel / self.feed_speed + 10.0 * self.ramp

    def traction(self, t):
        return self.peak_traction * min(t / self.ramp, 1.0)

    def advance(self, mesh, coords, dt):
        super().advance(mesh, coords, dt)
        self.finished = bool(np.all(coords[:, 0] >= self.die.exit_end_x + mesh.element_size))
        if not self.finished and self.elapsed > self.time_limit:
            self._fail(f"billet did not leave the exit channel within {self.time_limit:.1f} s")

    def check(self, mesh, coords):
        head = coords[mesh.node_sets['RightFace']]
        if np.any(head[:, 0] < self.die.exit_start_x - mesh.element_size):
            self._fail("leading face has not reached the exit channel")

    def load(self, mesh, coords, dt):
        head = mesh.node_sets['RightFace']
        force = np.zeros(mesh.n_dofs)
        traction = self.traction(self.elapsed + dt)
        force[2 * head] = traction * self._tributary
        return PhaseLoad({}, external_force=force, damping=self.damping, phase=self.name,
                         info={'traction': traction})


class Release(LoadPhase):
    '''Removes every load; pin at the leading-face bottom corner, roller at its top corner.'''
    name = 'Released'

    def __init__(self, die):
        super().__init__(die, 0.0)

    def load(self, mesh, coords, dt):
        head = mesh.node_sets['RightFace']
        pin, roller = int(head[0]), int(head[-1])
        prescribed = {2 * pin: 0.0, 2 * pin + 1: 0.0, 2 * roller: 0.0}
        return PhaseLoad(prescribed, phase=self.name)

    def advance(self, mesh, coords, dt):
        super().advance(mesh, coords, dt)
        self.finished = True


def punch_interface(mesh, current_coords, phase, dt):
    '''
    Constraints or forces the active load phase imposes over the next increment.

    Args:
        mesh (Mesh): The billet mesh.
        current_coords (np.ndarray): Converged coordinates at the start of the increment.
        phase (LoadPhase): One of PunchPush, ArcPush, PullOut or Release.
        dt (float): Pseudo-time increment.

    Returns:
        PhaseLoad: Prescribed values, dead loads, DOF transform and stabilization.

    Raises:
        PhaseTransitionError: If the loaded face is outside the region the phase expects.
    '''
    coords = np.asarray(current_coords, dtype=float)
    phase.check(mesh, coords)
    return phase.load(mesh, coords, dt)
