'''
Contact-state tracking on the extrudate surfaces inside the exit channel.

For every snapshot the surface nodes currently inside the observation window report their
position and ``sigma_yy``. The contact locus is the contact-force-weighted centroid of the
active contact nodes in the window; its recurrence period comes from the autocorrelation
of the detrended locus signal on a uniform time grid.
'''

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import signal as sps

from ..utils.exceptions import EmptyWindowError

logger = logging.getLogger(__name__)

SURFACES = ('Top', 'Bottom')
MIN_RECURRENCE_CORRELATION = 0.3


@dataclass
class ContactTrace:
    '''
    Time history of one surface inside the observation window.

    Attributes:
        surface (str): ``Top`` or ``Bottom``.
        times (np.ndarray): Snapshot times (s).
        positions (list[np.ndarray]): Node x-positions inside the window, per time.
        sigma_yy (list[np.ndarray]): Nodal ``sigma_yy`` (Pa), per time.
        locus (np.ndarray): Force-weighted contact centroid x (m), NaN without contact.
        recurrence_period (float or None): Recurrence period of the locus (s).
        locus_variation (float): Locus range divided by the window length.
    '''
    surface: str
    window: tuple
    times: np.ndarray
    positions: list = field(repr=False)
    sigma_yy: list = field(repr=False)
    node_ids: list = field(repr=False)
    locus: np.ndarray = None
    recurrence_period: object = None
    locus_variation: float = 0.0

    def to_frame(self):
        rows = [pd.DataFrame({'time': t, 'node': ids, 'x': x, 'sigma_yy': s})
                for t, ids, x, s in zip(self.times, self.node_ids, self.positions, self.sigma_yy)]
        return pd.concat(rows, ignore_index=True)

    def locus_frame(self):
        return pd.DataFrame({'time': self.times, 'locus_x': self.locus})

    def summary(self):
        return {'surface': self.surface, 'recurrence_period': self.recurrence_period,
                'locus_variation': float(self.locus_variation), 'n_snapshots': int(len(self.times))}


def surface_nodes(mesh, surface):
    '''Surface node column, ``Top`` = inner side (``i = nx``), ``Bottom`` = outer side (``i = 0``).'''
    if surface not in SURFACES:
        raise ValueError(f"unknown surface '{surface}'; expected one of {SURFACES}")
    return mesh.column(mesh.nx if surface == 'Top' else 0)


def _locus(snapshot, nodes, inside):
    state = snapshot.contact_state
    if state is None or len(state.node_ids) == 0:
        return np.nan
    chosen = np.isin(state.node_ids, nodes[inside]) & np.asarray(state.active, dtype=bool)
    force = np.asarray(state.normal_force)[chosen]
    if not np.any(force > 0.0):
        return np.nan
    x = snapshot.nodal_coords[np.asarray(state.node_ids)[chosen], 0]
    return float(np.sum(force * x) / np.sum(force))


def recurrence_period(times, locus, min_correlation=MIN_RECURRENCE_CORRELATION):
    '''First autocorrelation peak of the detrended locus, or None when it is too weak.'''
    valid = np.isfinite(locus)
    if np.count_nonzero(valid) < 4:
        return None
    t, x = times[valid], locus[valid]
    dt = float(np.median(np.diff(t))) if len(t) > 1 else 0.0
    if dt <= 0.0:
        return None
    grid = np.arange(t[0], t[-1] + 0.5 * dt, dt)
    series = np.interp(grid, t, x)
    series = series - np.mean(series)
    if not np.any(np.abs(series) > 0.0):
        return None
    acf = sps.correlate(series, series, mode='full')[len(series) - 1:]
    acf = acf / acf[0]
    peaks, _ = sps.find_peaks(acf)
    peaks = peaks[acf[peaks] >= min_correlation]
    if len(peaks) == 0:
        return None
    return float(peaks[0] * dt)


def trace_contact(snapshots, window, surface, mesh):
    '''
    Traces ``sigma_yy`` on a surface inside an exit-channel window.

    Args:
        snapshots (list[FieldSnapshot]): Snapshots in time order; released ones are skipped.
        window (tuple): ``(x_min, x_max)`` observation interval (m).
        surface (str): ``Top`` or ``Bottom``.
        mesh (Mesh): The billet mesh.

    Returns:
        ContactTrace: The trace and its locus summary.

    Raises:
        EmptyWindowError: If no surface node ever lies inside the window.
    '''
    x_min, x_max = float(window[0]), float(window[1])
    if not x_max > x_min:
        raise ValueError("observation window must satisfy x_min < x_max")
    nodes = surface_nodes(mesh, surface)
    times, positions, stresses, ids, locus = [], [], [], [], []
    for snapshot in snapshots:
        if snapshot.phase == 'Released':
            continue
        x = snapshot.nodal_coords[nodes, 0]
        inside = (x >= x_min) & (x <= x_max)
        times.append(snapshot.time)
        positions.append(x[inside])
        stresses.append(np.asarray(snapshot.nodal_stress)[nodes[inside], 1])
        ids.append(nodes[inside])
        locus.append(_locus(snapshot, nodes, inside))

    if not any(len(p) for p in positions):
        raise EmptyWindowError(f"no {surface} surface node inside [{x_min:.6g}, {x_max:.6g}] m")

    times = np.asarray(times, dtype=float)
    locus = np.asarray(locus, dtype=float)
    period = recurrence_period(times, locus)
    finite = locus[np.isfinite(locus)]
    variation = float(np.ptp(finite)) / (x_max - x_min) if len(finite) else 0.0
    logger.info("Contact trace (%s): %d snapshots, locus variation %.3f, recurrence period %s",
                surface, len(times), variation, 'none' if period is None else f"{period:.4g} s")
    return ContactTrace(surface=surface, window=(x_min, x_max), times=times, positions=positions,
                        sigma_yy=stresses, node_ids=ids, locus=locus, recurrence_period=period,
                        locus_variation=variation)
