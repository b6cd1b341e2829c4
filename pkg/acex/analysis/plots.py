'''
Static SVG plots of the analysis results.

All figures use the non-interactive Agg backend with the seaborn ``whitegrid`` theme and
are written with a fixed SVG hash salt so repeated runs produce identical files.
'''

import logging

import matplotlib

matplotlib.use('Agg')

import matplotlib.pyplot as plt
import numpy as np
import seaborn as sns

logger = logging.getLogger(__name__)

sns.set_theme(style='whitegrid')
plt.rcParams['svg.hashsalt'] = 'acex'

MPA = 1e-6


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format='svg', metadata={'Date': None})
    plt.close(fig)
    logger.info("Saved plot %s", path)
    return path


def plot_longitudinal_curve(report, path, title=None):
    '''Maximum sectional ``sigma_xx`` along the extrudate.'''
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(report.s_grid * 1e3, report.signal * MPA, color=sns.color_palette()[0])
    ax.set_xlabel('Arclength along the extrudate (mm)')
    ax.set_ylabel('Max. sectional $\\sigma_{xx}$ (MPa)')
    ax.set_title(title or f"{report.classification}, D = {report.D * MPA:.3g} MPa")
    return _save(fig, path)


def plot_spectrum(report, path):
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(report.frequencies, report.spectrum * MPA, color=sns.color_palette()[1])
    if report.dominant_frequency is not None:
        ax.axvline(report.dominant_frequency, linestyle='--', color='0.4',
                   label=f"dominant: {report.dominant_frequency:.4g} 1/m")
        ax.legend()
    ax.set_xlabel('Spatial frequency (1/m)')
    ax.set_ylabel('Amplitude (MPa)')
    return _save(fig, path)


def plot_nd_profiles(sections, path, count=5):
    '''Through-thickness profiles of ``count`` sections spread over the steady window.'''
    fig, ax = plt.subplots(figsize=(6, 5))
    if sections:
        picks = np.unique(np.linspace(0, len(sections) - 1, min(count, len(sections))).astype(int))
        palette = sns.color_palette('viridis', len(picks))
        for colour, k in zip(palette, picks):
            section = sections[k]
            ax.plot(section.sigma_xx_nd * MPA, section.nd_coordinate / section.h, color=colour,
                    label=f"s = {section.arclength_s * 1e3:.1f} mm")
        ax.legend(fontsize='small')
    ax.set_xlabel('$\\sigma_{xx}$ (MPa)')
    ax.set_ylabel('Normalized ND position (bottom = 0)')
    return _save(fig, path)


def plot_contact_trace(trace, path, max_curves=8):
    '''Surface ``sigma_yy`` inside the observation window at evenly spread times.'''
    fig, (ax, ax_locus) = plt.subplots(2, 1, figsize=(8, 7))
    picks = np.unique(np.linspace(0, len(trace.times) - 1, min(max_curves, len(trace.times))).astype(int))
    palette = sns.color_palette('mako', len(picks))
    for colour, k in zip(palette, picks):
        order = np.argsort(trace.positions[k])
        ax.plot(trace.positions[k][order] * 1e3, trace.sigma_yy[k][order] * MPA, color=colour,
                label=f"t = {trace.times[k]:.2f} s")
    ax.set_xlabel('x in exit channel (mm)')
    ax.set_ylabel('$\\sigma_{yy}$ (MPa)')
    ax.set_title(f"{trace.surface} surface")
    ax.legend(fontsize='small', ncol=2)
    ax_locus.plot(trace.times, trace.locus * 1e3, marker='.', linestyle='-')
    ax_locus.set_xlabel('Time (s)')
    ax_locus.set_ylabel('Contact locus x (mm)')
    return _save(fig, path)


def plot_convergence(table, path):
    '''Material-line ``sigma_xx`` of every run of a refinement study.'''
    fig, ax = plt.subplots(figsize=(7, 4))
    for column in table.profiles.columns[1:]:
        ax.plot(table.profiles['tau'], table.profiles[column] * MPA, label=column)
    ax.set_xlabel('Normalized position from A to B')
    ax.set_ylabel('$\\sigma_{xx}$ (MPa)')
    ax.legend()
    return _save(fig, path)


def plot_hardening_fits(table, path, lo=0.05, hi=1.0):
    '''Power-law flow curves and their fitted linear hardening lines.'''
    fig, ax = plt.subplots(figsize=(7, 5))
    strain = np.linspace(lo, hi, 100)
    palette = sns.color_palette('deep', len(table))
    for colour, (_, row) in zip(palette, table.iterrows()):
        ax.plot(strain, row['K_MPa'] * strain ** row['n'], color=colour, label=f"{row['alloy']} (power law)")
        ax.plot(strain, row['intercept_MPa'] + row['H_fit_MPa'] * strain, color=colour, linestyle='--',
                label=f"linear fit, H = {row['H_fit_MPa']:.0f} MPa")
    ax.set_xlabel('Plastic strain')
    ax.set_ylabel('Flow stress (MPa)')
    ax.legend(fontsize='small')
    return _save(fig, path)


def plot_bending(result, path):
    fig, ax = plt.subplots(figsize=(6, 5))
    ax.plot(result.analytic * MPA, result.eta * 1e3, label='closed form', color='0.3')
    ax.plot(result.simulated * MPA, result.eta * 1e3, 'o', markersize=3, label='simulation')
    ax.set_xlabel('Residual longitudinal stress (MPa)')
    ax.set_ylabel('Distance from mid-plane (mm)')
    ax.set_title(f"Relative L2 error {result.rel_l2:.3f}")
    ax.legend()
    return _save(fig, path)


def plot_die(walls_polyline, path, billet_coords=None):
    '''Die wall polyline (rows of ``wall_id, x, y``) with an optional billet outline.'''
    fig, ax = plt.subplots(figsize=(6, 6))
    for wall_id, group in walls_polyline.groupby('wall_id', sort=False):
        ax.plot(group['x'] * 1e3, group['y'] * 1e3, label=wall_id)
    if billet_coords is not None:
        ax.plot(billet_coords[:, 0] * 1e3, billet_coords[:, 1] * 1e3, '.', markersize=1, color='0.5')
    ax.set_aspect('equal')
    ax.set_xlabel('x (mm)')
    ax.set_ylabel('y (mm)')
    ax.legend(fontsize='small')
    return _save(fig, path)
