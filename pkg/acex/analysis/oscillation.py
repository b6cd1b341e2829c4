'''
Longitudinal oscillation analysis of the sectional maximum stress.

The curve of per-section maximum ``sigma_xx`` against medial-axis arclength is resampled
on a uniform grid, detrended by its mean and transformed with a Hann-windowed real FFT.
The curve is classified as:

- ``Steady``: whole-window peak-to-peak below ``steady_threshold * sigma_y0``.
- ``Periodic``: a dominant spectral peak (at least ``peak_ratio`` times the median
  amplitude) holding at least ``energy_fraction`` of the detrended spectral energy.
- ``Aperiodic``: anything else.

The amplitude metric ``D`` is the median peak-to-peak value over the cycles delimited by
successive upward zero crossings (Periodic) or the whole-window peak-to-peak otherwise.
'''

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import signal as sps
from scipy.fft import rfft, rfftfreq

from ..utils.exceptions import InsufficientSectionsError

logger = logging.getLogger(__name__)

CLASSIFICATIONS = ('Periodic', 'Aperiodic', 'Steady')


@dataclass
class OscillationReport:
    '''Spectral summary of the longitudinal stress curve.'''
    s_grid: np.ndarray
    signal: np.ndarray
    frequencies: np.ndarray
    spectrum: np.ndarray
    dominant_frequency: object
    classification: str
    D: float
    energy_fraction: float = 0.0
    n_cycles: int = 0

    @property
    def dominant_wavelength(self):
        if not self.dominant_frequency:
            return None
        return 1.0 / self.dominant_frequency

    def curve_frame(self):
        return pd.DataFrame({'arclength_s': self.s_grid, 'max_sigma_xx': self.signal})

    def spectrum_frame(self):
        return pd.DataFrame({'frequency': self.frequencies, 'amplitude': self.spectrum})

    def summary(self):
        return {'classification': self.classification, 'D': float(self.D),
                'dominant_frequency': None if self.dominant_frequency is None else float(self.dominant_frequency),
                'energy_fraction': float(self.energy_fraction), 'n_cycles': int(self.n_cycles)}


def amplitude_spectrum(values, spacing):
    '''Single-sided Hann-windowed amplitude spectrum of a mean-removed signal.'''
    detrended = values - np.mean(values)
    window = sps.windows.hann(len(values), sym=False)
    amplitude = 2.0 * np.abs(rfft(detrended * window)) / np.sum(window)
    return rfftfreq(len(values), d=spacing), amplitude


def _dominant_bin(amplitude, peak_ratio):
    body = amplitude[1:]
    if len(body) == 0 or not np.any(body > 0.0):
        return None
    peaks, _ = sps.find_peaks(np.concatenate([[0.0], body, [0.0]]))
    peaks = peaks - 1
    k = int(peaks[np.argmax(body[peaks])]) if len(peaks) else int(np.argmax(body))
    if body[k] < peak_ratio * np.median(body):
        return None
    return k + 1


def _upward_crossings(grid, detrended):
    below = detrended[:-1] < 0.0
    above = detrended[1:] >= 0.0
    idx = np.nonzero(below & above)[0]
    lam = -detrended[idx] / (detrended[idx + 1] - detrended[idx])
    return idx, grid[idx] + lam * (grid[idx + 1] - grid[idx])


def cycle_amplitudes(grid, values, period):
    '''Peak-to-peak values of the cycles whose length is within 50% of ``period``.'''
    detrended = values - np.mean(values)
    idx, positions = _upward_crossings(grid, detrended)
    amplitudes = []
    for a, b, pa, pb in zip(idx[:-1], idx[1:], positions[:-1], positions[1:]):
        if abs((pb - pa) - period) <= 0.5 * period:
            chunk = values[a:b + 2]
            amplitudes.append(float(np.ptp(chunk)))
    return np.asarray(amplitudes)


def longitudinal_curve(sections, sigma_y0, steady_threshold=0.02, peak_ratio=3.0,
                       energy_fraction=0.5, min_sections=32):
    '''
    Classifies the longitudinal maximum-stress curve of a set of sections.

    Args:
        sections (list[SectionProfile] or pandas.DataFrame): Sections, or a table with
            ``arclength_s`` and ``max_sigma_xx`` columns.
        sigma_y0 (float): Initial yield stress setting the Steady threshold (Pa).
        steady_threshold (float): Steady threshold as a fraction of ``sigma_y0``.
        peak_ratio (float): Minimum dominant-peak to median-amplitude ratio.
        energy_fraction (float): Minimum spectral energy share of the dominant peak.
        min_sections (int): Minimum number of sections.

    Returns:
        OscillationReport: The classification and amplitude.

    Raises:
        InsufficientSectionsError: If fewer than ``min_sections`` sections are given.
    '''
    if isinstance(sections, pd.DataFrame):
        s = sections['arclength_s'].to_numpy(dtype=float)
        values = sections['max_sigma_xx'].to_numpy(dtype=float)
    else:
        s = np.array([p.arclength_s for p in sections], dtype=float)
        values = np.array([p.max_sigma_xx for p in sections], dtype=float)
    if len(s) < min_sections:
        raise InsufficientSectionsError(f"{len(s)} sections available; at least {min_sections} are required")

    order = np.argsort(s, kind='stable')
    s, values = s[order], values[order]
    grid = np.linspace(s[0], s[-1], len(s))
    curve = np.interp(grid, s, values)
    spacing = grid[1] - grid[0]

    frequencies, amplitude = amplitude_spectrum(curve, spacing)
    energy = amplitude[1:] ** 2
    total = float(np.sum(energy))
    k = _dominant_bin(amplitude, peak_ratio)
    share = 0.0
    if k is not None and total > 0.0:
        share = float(np.sum(amplitude[max(k - 1, 1):k + 2] ** 2)) / total
    dominant = None if k is None else float(frequencies[k])

    window_p2p = float(np.ptp(curve))
    n_cycles = 0
    if window_p2p < steady_threshold * sigma_y0:
        classification, D = 'Steady', window_p2p
    elif k is not None and share >= energy_fraction:
        classification = 'Periodic'
        cycles = cycle_amplitudes(grid, curve, 1.0 / dominant)
        n_cycles = len(cycles)
        D = float(np.median(cycles)) if n_cycles else window_p2p
    else:
        classification, D = 'Aperiodic', window_p2p

    logger.info("Longitudinal curve: %s, D=%.4g Pa, dominant frequency=%s, energy share=%.2f",
                classification, D, 'none' if dominant is None else f"{dominant:.4g} 1/m", share)
    return OscillationReport(s_grid=grid, signal=curve, frequencies=frequencies, spectrum=amplitude,
                             dominant_frequency=dominant, classification=classification, D=D,
                             energy_fraction=share, n_cycles=n_cycles)
