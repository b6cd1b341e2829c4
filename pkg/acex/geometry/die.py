'''
Die Geometry Module for the acex package.

This module parameterizes the rigid two-channel die and answers the geometric queries
the contact and post-processing code relies on. It provides:

- The die parameter set (:class:`DieProfile`) with its derived lengths and reference points.
- Exact wall primitives (line segments and circular arcs) grouped into six named walls.
- A vectorized signed-distance query returning the distance, nearest wall, unit normal
  and the curvature factor of the nearest primitive.
- Polyline sampling of the boundary for plots and the ``geometry dump`` subcommand.

Frame: the outer corner of the bend sits at the origin, the inlet channel runs along
``0 <= x <= W1`` (punch moves in ``-y``) and the exit channel along ``0 <= y <= W2``
(extrusion in ``+x``). Every primitive is oriented with the channel void on its left, so
its left normal points from the wall into the void.
'''

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Tuple

import numpy as np

from ..utils.exceptions import ConfigValidationError, GeometryOverlapError

logger = logging.getLogger(__name__)


class WallId(str, Enum):
    INLET_LEFT = 'InletLeft'
    INLET_RIGHT = 'InletRight'
    R1_FILLET = 'R1Fillet'
    R2_FILLET = 'R2Fillet'
    EXIT_TOP = 'ExitTop'
    EXIT_BOTTOM = 'ExitBottom'


WALL_ORDER = (WallId.INLET_LEFT, WallId.INLET_RIGHT, WallId.R1_FILLET,
              WallId.R2_FILLET, WallId.EXIT_TOP, WallId.EXIT_BOTTOM)


@dataclass(frozen=True)
class LinePrimitive:
    '''Straight wall piece from ``start`` to ``end``; an open end belongs to a channel mouth.'''
    start: Tuple[float, float]
    end: Tuple[float, float]
    open_start: bool = False
    open_end: bool = False

    @property
    def length(self):
        return float(np.hypot(self.end[0] - self.start[0], self.end[1] - self.start[1]))

    def sample(self, count):
        t = np.linspace(0.0, 1.0, count)
        a, b = np.asarray(self.start), np.asarray(self.end)
        return a[None, :] + t[:, None] * (b - a)[None, :]


@dataclass(frozen=True)
class ArcPrimitive:
    '''
    Circular arc traversed from ``start_angle`` through the signed ``sweep`` (radians,
    counter-clockwise positive). ``void_side`` is -1 when the channel void lies inside
    the circle and +1 when it lies outside.
    '''
    center: Tuple[float, float]
    radius: float
    start_angle: float
    sweep: float
    void_side: int

    @property
    def length(self):
        return abs(self.sweep) * self.radius

    def point_at(self, angle):
        return np.array([self.center[0] + self.radius * math.cos(angle),
                         self.center[1] + self.radius * math.sin(angle)])

    def sample(self, count):
        angles = self.start_angle + np.linspace(0.0, 1.0, count) * self.sweep
        return np.column_stack([self.center[0] + self.radius * np.cos(angles),
                                self.center[1] + self.radius * np.sin(angles)])

    def endpoints(self):
        return np.array([self.point_at(self.start_angle),
                         self.point_at(self.start_angle + self.sweep)])


@dataclass(frozen=True)
class DieWall:
    wall_id: WallId
    segments: tuple = field(default_factory=tuple)


class WallDistance(NamedTuple):
    '''Result of :func:`signed_distance`. Arrays for point batches, scalars for one point.'''
    distance: object
    nearest_wall: object
    normal: object
    curvature: object


@dataclass(frozen=True)
class DieProfile:
    '''
    Parameterized rigid die.

    Attributes:
        W1 (float): Inlet channel width in metres.
        ER (float): Exit to inlet width ratio, W2 = ER * W1.
        L1n, L2n (float): Straight channel lengths normalized by W1.
        R1n, R2n (float): Fillet radii normalized by W1.
        psi, phi (float): Corner and die angles in degrees (90 only).
        r1_on_inner_corner (bool): Place R1 on the inner corner and R2 on the outer one.
    '''
    W1: float
    ER: float
    L1n: float
    L2n: float
    R1n: float
    R2n: float
    psi: float = 90.0
    phi: float = 90.0
    r1_on_inner_corner: bool = True

    def __post_init__(self):
        if not self.W1 > 0.0:
            raise ConfigValidationError('die.W1', 'W1 must be positive')
        if not 0.0 < self.ER <= 1.0:
            raise ConfigValidationError('die.ER', 'ER must be in (0, 1]')
        if not (self.L1n > 0.0 and self.L2n > 0.0):
            raise ConfigValidationError('die.L1n', 'channel lengths must be positive')
        if self.R1n < 0.0 or self.R2n < 0.0:
            raise ConfigValidationError('die.R1n', 'fillet radii must be non-negative')
        if self.psi != 90.0 or self.phi != 90.0:
            raise ConfigValidationError('die.phi', 'only 90 degree dies are supported')

    @classmethod
    def from_config(cls, die_config):
        keys = ('W1', 'ER', 'L1n', 'L2n', 'R1n', 'R2n', 'psi', 'phi', 'r1_on_inner_corner')
        return cls(**{key: die_config[key] for key in keys if key in die_config})

    @property
    def W2(self):
        return self.ER * self.W1

    @property
    def R1(self):
        return self.R1n * self.W1

    @property
    def R2(self):
        return self.R2n * self.W1

    @property
    def inner_radius(self):
        return self.R1 if self.r1_on_inner_corner else self.R2

    @property
    def outer_radius(self):
        return self.R2 if self.r1_on_inner_corner else self.R1

    @property
    def inner_wall_id(self):
        return WallId.R1_FILLET if self.r1_on_inner_corner else WallId.R2_FILLET

    @property
    def outer_wall_id(self):
        return WallId.R2_FILLET if self.r1_on_inner_corner else WallId.R1_FILLET

    @property
    def L1(self):
        return self.L1n * self.W1

    @property
    def L2(self):
        return self.L2n * self.W1

    @property
    def inlet_reference_height(self):
        '''Height above which both inlet walls are straight.'''
        return max(self.outer_radius, self.W2 + self.inner_radius)

    @property
    def exit_start_x(self):
        '''Abscissa beyond which both exit walls are straight.'''
        return max(self.outer_radius, self.W1 + self.inner_radius)

    @property
    def inlet_top_y(self):
        return self.inlet_reference_height + self.L1

    @property
    def exit_end_x(self):
        return self.exit_start_x + self.L2

    @property
    def bend_center(self):
        '''Pivot of the arc push: where both outer straight walls become tangent to the bend.'''
        return np.array([self.exit_start_x, self.inlet_reference_height])

    def exit_window(self):
        return (self.exit_start_x, self.exit_end_x)

    def scaled(self, factor):
        return DieProfile(self.W1 * factor, self.ER, self.L1n, self.L2n, self.R1n, self.R2n,
                          self.psi, self.phi, self.r1_on_inner_corner)


def build_die(profile):
    '''
    Builds the six die walls in the fixed order of :data:`WALL_ORDER`.

    A zero fillet radius yields a wall with no segments (sharp corner).

    Args:
        profile (DieProfile): The die parameters.

    Returns:
        list: Six :class:`DieWall` objects.

    Raises:
        GeometryOverlapError: If a fillet crosses the opposing channel wall.
    '''
    W1, W2 = profile.W1, profile.W2
    r_in, r_out = profile.inner_radius, profile.outer_radius
    y_top = profile.inlet_top_y
    x_end = profile.exit_end_x

    segments = {
        WallId.INLET_LEFT: (LinePrimitive((0.0, y_top), (0.0, r_out), open_start=True),),
        WallId.INLET_RIGHT: (LinePrimitive((W1, W2 + r_in), (W1, y_top), open_end=True),),
        WallId.EXIT_BOTTOM: (LinePrimitive((r_out, 0.0), (x_end, 0.0), open_end=True),),
        WallId.EXIT_TOP: (LinePrimitive((x_end, W2), (W1 + r_in, W2), open_start=True),),
    }
    segments[profile.outer_wall_id] = (
        (ArcPrimitive((r_out, r_out), r_out, math.pi, 0.5 * math.pi, -1),) if r_out > 0.0 else ())
    segments[profile.inner_wall_id] = (
        (ArcPrimitive((W1 + r_in, W2 + r_in), r_in, 1.5 * math.pi, -0.5 * math.pi, 1),) if r_in > 0.0 else ())

    walls = [DieWall(wall_id, segments[wall_id]) for wall_id in WALL_ORDER]
    _check_overlap(profile, walls)
    logger.debug("Built die W1=%.4g ER=%.3f R_in=%.4g R_out=%.4g", W1, profile.ER, r_in, r_out)
    return walls


def _outer_ids(profile):
    return {WallId.INLET_LEFT, WallId.EXIT_BOTTOM, profile.outer_wall_id}


def _check_overlap(profile, walls):
    outer_ids = _outer_ids(profile)
    outer = [w for w in walls if w.wall_id in outer_ids]
    inner = [w for w in walls if w.wall_id not in outer_ids]
    for source, target in ((outer, inner), (inner, outer)):
        for wall in source:
            for primitive in wall.segments:
                if not isinstance(primitive, ArcPrimitive):
                    continue
                samples = primitive.sample(257)
                gap = signed_distance(target, samples).distance
                if np.min(gap) <= 0.0:
                    raise GeometryOverlapError(
                        f"{wall.wall_id.value} (radius {primitive.radius:.4g} m) crosses the opposing "
                        f"channel wall (W1={profile.W1:.4g}, ER={profile.ER:.3f})")


def _line_query(line, points):
    a = np.asarray(line.start, dtype=float)
    b = np.asarray(line.end, dtype=float)
    d = b - a
    length_sq = float(d @ d)
    n_left = np.array([-d[1], d[0]]) / math.sqrt(length_sq)
    t = ((points - a) @ d) / length_sq

    g = (points - a) @ n_left
    normal = np.broadcast_to(n_left, points.shape).copy()
    curvature = np.zeros(len(points))

    for mask, vertex, is_open in ((t <= 0.0, a, line.open_start), (t >= 1.0, b, line.open_end)):
        if not np.any(mask):
            continue
        v = points[mask] - vertex
        g_v, n_v, k_v = _vertex_query(v, n_left, is_open)
        g[mask], normal[mask], curvature[mask] = g_v, n_v, k_v
    return g, normal, curvature


def _vertex_query(v, reference_normal, is_open):
    rho = np.hypot(v[:, 0], v[:, 1])
    if is_open:
        side = np.ones(len(v))
    else:
        side = np.where(v @ reference_normal < 0.0, -1.0, 1.0)
    safe = np.where(rho > 0.0, rho, 1.0)
    normal = side[:, None] * v / safe[:, None]
    normal[rho == 0.0] = reference_normal
    curvature = np.where(rho > 0.0, side / safe, 0.0)
    return side * rho, normal, curvature


def _arc_query(arc, points):
    c = np.asarray(arc.center, dtype=float)
    d = points - c
    r = np.hypot(d[:, 0], d[:, 1])
    phi = np.arctan2(d[:, 1], d[:, 0])
    direction = 1.0 if arc.sweep > 0.0 else -1.0
    rel = np.mod((phi - arc.start_angle) * direction, 2.0 * math.pi)
    inside = rel <= abs(arc.sweep)

    sigma = float(arc.void_side)
    safe = np.where(r > 0.0, r, 1.0)
    g = sigma * (r - arc.radius)
    normal = sigma * d / safe[:, None]
    mid = arc.start_angle + 0.5 * arc.sweep
    normal[r == 0.0] = sigma * np.array([math.cos(mid), math.sin(mid)])
    curvature = sigma / safe

    outside = ~inside
    if np.any(outside):
        ends = arc.endpoints()
        pts = points[outside]
        d0 = np.hypot(*(pts - ends[0]).T)
        d1 = np.hypot(*(pts - ends[1]).T)
        use_end = d1 < d0
        g_o = np.empty(len(pts))
        n_o = np.empty((len(pts), 2))
        k_o = np.empty(len(pts))
        for flag, vertex, angle in ((~use_end, ends[0], arc.start_angle),
                                    (use_end, ends[1], arc.start_angle + arc.sweep)):
            if not np.any(flag):
                continue
            radial = np.array([math.cos(angle), math.sin(angle)])
            g_o[flag], n_o[flag], k_o[flag] = _vertex_query(pts[flag] - vertex, sigma * radial, False)
        g[outside], normal[outside], curvature[outside] = g_o, n_o, k_o
    return g, normal, curvature


def signed_distance(walls, p):
    '''
    Signed distance from point(s) to the die boundary.

    Positive inside the channel void, negative inside die material. The normal points from
    the wall into the void and ``curvature`` is the factor k with dn/dp = k (I - n n^T).
    Mouth ends of the channels are open and never report penetration.

    Args:
        walls (list): Walls from :func:`build_die` (any subset).
        p (array-like): A point ``(2,)`` or a batch ``(N, 2)``.

    Returns:
        WallDistance: distance, nearest wall id, unit normal and curvature factor.
    '''
    points = np.asarray(p, dtype=float)
    single = points.ndim == 1
    points = np.atleast_2d(points)
    n_points = len(points)

    best_abs = np.full(n_points, np.inf)
    best_g = np.full(n_points, np.inf)
    best_n = np.zeros((n_points, 2))
    best_k = np.zeros(n_points)
    best_wall = np.empty(n_points, dtype=object)

    for wall in walls:
        for primitive in wall.segments:
            if isinstance(primitive, LinePrimitive):
                g, normal, curvature = _line_query(primitive, points)
            else:
                g, normal, curvature = _arc_query(primitive, points)
            better = np.abs(g) < best_abs
            best_abs[better] = np.abs(g[better])
            best_g[better] = g[better]
            best_n[better] = normal[better]
            best_k[better] = curvature[better]
            best_wall[better] = wall.wall_id

    if single:
        return WallDistance(float(best_g[0]), best_wall[0], best_n[0], float(best_k[0]))
    return WallDistance(best_g, best_wall, best_n, best_k)


def polyline(walls, resolution=64):
    '''
    Samples the boundary for plotting.

    Returns:
        list: ``(wall_id, x, y)`` tuples in wall order; arcs get ``resolution`` points.
    '''
    rows = []
    for wall in walls:
        for primitive in wall.segments:
            count = resolution if isinstance(primitive, ArcPrimitive) else 2
            for x, y in primitive.sample(count):
                rows.append((wall.wall_id.value, float(x), float(y)))
    return rows
