'''
Sectional residual-stress extraction for the acex package.

Sections are straight segments through points of the extrudate's medial axis,
perpendicular to the axis tangent:

- The medial axis is the midcurve of the matched top (column ``nx``) and bottom
  (column ``0``) surface nodes, smoothed with a centred moving average.
- Stations are placed every ``spacing`` metres of medial-axis arclength, measured from
  the head, inside the steady window left after the head and tail trims.
- Each grid column is crossed once by a section; the recovered nodal ``sigma_xx`` is
  interpolated linearly on the crossed element edge, giving one sample per column
  ordered from the bottom surface to the top surface.
'''

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from ..utils.exceptions import DegenerateSectionError
from .recovery import recover_nodal_stress

logger = logging.getLogger(__name__)


@dataclass
class SectionProfile:
    '''
    Through-thickness stress profile of one section.

    Attributes:
        section_id (int): Station index inside the steady window.
        arclength_s (float): Medial-axis arclength from the head (m).
        nd_coordinate (np.ndarray): Distance from the bottom surface of each sample (m).
        sigma_xx_nd (np.ndarray): ``sigma_xx`` samples (Pa), bottom to top.
        max_sigma_xx (float): Largest sample (Pa).
        h (float): Local thickness (m).
        h_b (float): Distance of the bottom-most maximizer from the bottom surface (m).
    '''
    section_id: int
    arclength_s: float
    nd_coordinate: np.ndarray
    sigma_xx_nd: np.ndarray
    max_sigma_xx: float
    h: float
    h_b: float
    center: np.ndarray = field(default=None, repr=False)
    direction: np.ndarray = field(default=None, repr=False)
    points: np.ndarray = field(default=None, repr=False)

    @property
    def hb_over_h(self):
        return self.h_b / self.h if self.h > 0.0 else float('nan')


def steady_window_trims(channel_width, trim_factor=1.5, arc_feed_length=0.0):
    '''Head and tail trims ``(head, tail)`` that leave the steady part of the extrudate.'''
    head = trim_factor * channel_width
    return head, head + max(arc_feed_length, 0.0)


def medial_axis(mesh, coords, smoothing_points=5):
    '''Smoothed midcurve ``(ny + 1, 2)`` and its cumulative arclength from the head.'''
    coords = np.asarray(coords, dtype=float)
    top = coords[mesh.column(mesh.nx)]
    bottom = coords[mesh.column(0)]
    mid = pd.DataFrame(0.5 * (top + bottom), columns=['x', 'y'])
    if smoothing_points > 1:
        mid = mid.rolling(window=smoothing_points, center=True, min_periods=1).mean()
    axis = mid.to_numpy()
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(axis, axis=0), axis=1))])
    return axis, s


def _axis_point(axis, s, station):
    return np.column_stack([np.interp(station, s, axis[:, 0]), np.interp(station, s, axis[:, 1])])


def _cut_column(column_xy, column_sigma, center, tangent, normal):
    '''Crossing of the section line with one column polyline, nearest to the centre.'''
    f = (column_xy - center) @ tangent
    lo, hi = f[:-1], f[1:]
    hits = np.nonzero((lo * hi <= 0.0) & (lo != hi))[0]
    if len(hits) == 0:
        return None
    lam = lo[hits] / (lo[hits] - hi[hits])
    points = column_xy[hits] + lam[:, None] * (column_xy[hits + 1] - column_xy[hits])
    eta = (points - center) @ normal
    k = int(np.argmin(np.abs(eta)))
    j = hits[k]
    sigma = column_sigma[j] + lam[k] * (column_sigma[j + 1] - column_sigma[j])
    return eta[k], sigma, points[k]


def _section_at(mesh, coords, sigma_xx, axis, s, station, spacing):
    center = _axis_point(axis, s, station)[0]
    ahead = _axis_point(axis, s, min(station + 0.5 * spacing, s[-1]))[0]
    behind = _axis_point(axis, s, max(station - 0.5 * spacing, 0.0))[0]
    tangent = ahead - behind
    norm = np.linalg.norm(tangent)
    if norm <= 0.0:
        raise DegenerateSectionError(f"zero-length medial axis at s={station:.6g} m")
    tangent /= norm
    normal = np.array([tangent[1], -tangent[0]])
    j_near = int(np.clip(np.searchsorted(s, station), 0, mesh.ny))
    across = coords[mesh.node_id(mesh.nx, j_near)] - coords[mesh.node_id(0, j_near)]
    if across @ normal < 0.0:
        normal = -normal

    eta, sigma, points = [], [], []
    for i in range(mesh.nx + 1):
        ids = mesh.column(i)
        cut = _cut_column(coords[ids], sigma_xx[ids], center, tangent, normal)
        if cut is None:
            raise DegenerateSectionError(f"section at s={station:.6g} m misses grid column {i}")
        eta.append(cut[0])
        sigma.append(cut[1])
        points.append(cut[2])
    order = np.argsort(eta, kind='stable')
    return (np.asarray(eta)[order], np.asarray(sigma)[order], np.asarray(points)[order], center, normal)


def build_sections(final_snapshot, mesh, spacing=1e-3, head_trim=0.0, tail_trim=0.0,
                   smoothing_points=5, nodal_stress=None, recovery='extrapolate', strict=True):
    '''
    Builds the sections of the released extrudate.

    Args:
        final_snapshot (FieldSnapshot): The unloaded snapshot.
        mesh (Mesh): The billet mesh.
        spacing (float): Arclength between stations (m).
        head_trim, tail_trim (float): Arclength excluded at the head and the tail (m).
        smoothing_points (int): Moving-average width of the medial axis.
        nodal_stress (np.ndarray, optional): Recovered stresses; recovered when omitted.
        recovery (str): Recovery method used when ``nodal_stress`` is omitted.
        strict (bool): Raise on a degenerate section instead of skipping it.

    Returns:
        list[SectionProfile]: Sections ordered from head to tail.

    Raises:
        DegenerateSectionError: If a section cannot cross every grid column.
    '''
    if spacing <= 0.0:
        raise ValueError("section spacing must be positive")
    coords = np.asarray(final_snapshot.nodal_coords, dtype=float)
    if nodal_stress is None:
        nodal_stress = recover_nodal_stress(final_snapshot, mesh, method=recovery)
    sigma_xx = np.asarray(nodal_stress)[:, 0]
    axis, s = medial_axis(mesh, coords, smoothing_points)

    start, stop = head_trim, s[-1] - tail_trim
    if stop < start:
        logger.warning("Steady window is empty: trims %.4g + %.4g m exceed axis length %.4g m",
                       head_trim, tail_trim, s[-1])
        return []
    stations = start + spacing * np.arange(int(np.floor((stop - start) / spacing + 1e-9)) + 1)

    sections = []
    for station in stations:
        try:
            eta, sigma, points, center, normal = _section_at(mesh, coords, sigma_xx, axis, s, station, spacing)
        except DegenerateSectionError as exc:
            if strict:
                raise
            logger.warning("Skipping degenerate section: %s", exc)
            continue
        nd = eta - eta[0]
        k = int(np.argmax(sigma))
        sections.append(SectionProfile(section_id=len(sections), arclength_s=float(station),
                                       nd_coordinate=nd, sigma_xx_nd=sigma, max_sigma_xx=float(sigma[k]),
                                       h=float(nd[-1]), h_b=float(nd[k]), center=center,
                                       direction=normal, points=points))
    logger.info("Built %d sections between s=%.4g m and s=%.4g m", len(sections), start, stop)
    return sections


def sections_frame(sections):
    '''One row per section: the longitudinal curve and thickness data.'''
    return pd.DataFrame({
        'section_id': [p.section_id for p in sections],
        'arclength_s': [p.arclength_s for p in sections],
        'max_sigma_xx': [p.max_sigma_xx for p in sections],
        'h': [p.h for p in sections],
        'h_b': [p.h_b for p in sections],
        'hb_over_h': [p.hb_over_h for p in sections],
    }, columns=['section_id', 'arclength_s', 'max_sigma_xx', 'h', 'h_b', 'hb_over_h'])


def profiles_frame(sections):
    '''Long-format through-thickness profiles of every section.'''
    rows = [pd.DataFrame({'section_id': p.section_id, 'arclength_s': p.arclength_s,
                          'nd_coordinate': p.nd_coordinate, 'sigma_xx': p.sigma_xx_nd})
            for p in sections]
    if not rows:
        return pd.DataFrame(columns=['section_id', 'arclength_s', 'nd_coordinate', 'sigma_xx'])
    return pd.concat(rows, ignore_index=True)


def thickness_table(sections):
    '''Median thickness and ``h_b / h`` over the given sections.'''
    if not sections:
        return {'n_sections': 0, 'h': float('nan'), 'hb_over_h': float('nan')}
    frame = sections_frame(sections)
    return {'n_sections': len(frame), 'h': float(frame['h'].median()),
            'hb_over_h': float(frame['hb_over_h'].median())}
