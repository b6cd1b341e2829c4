'''
Main ACEX Framework Class.

This file contains the primary orchestrator of the acex package. It ties the die, billet,
material, solver and analysis components into single runs, parametric sweeps and mesh
convergence studies.
'''

import copy
import logging
import os

import joblib
import numpy as np
import pandas as pd

from .analysis import plots
from .analysis.contact_trace import SURFACES, trace_contact
from .analysis.convergence import MaterialLineRun, compare_material_line
from .analysis.oscillation import longitudinal_curve
from .analysis.recovery import recover_nodal_stress
from .analysis.sections import build_sections, profiles_frame, sections_frame, steady_window_trims, thickness_table
from .geometry.die import DieProfile, build_die, polyline
from .geometry.mesh import BilletSpec, generate_mesh
from .models.contact import ContactParams
from .models.element import ElementFormulation
from .models.material import MaterialParams
from .models.solver import LoadSchedule, SolveConfig, run_extrusion
from .utils.config import config_from_mapping, dump_config, resolve_config, validate_sweep
from .utils.exceptions import ConfigValidationError, SolverFailure
from .utils.helpers import format_case_id
from .utils.storage import RunDirectory, write_json, write_table

# Set up logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')

SUMMARY_COLUMNS = ['case_id', 'axis', 'value', 'status', 'classification', 'D', 'h', 'hb_over_h',
                   'dominant_frequency', 'error']
DEFAULT_CONVERGENCE_SIZES = (1.0e-3, 0.758e-3, 0.5e-3)


class ExtrusionFramework:
    '''
    Simulates one angular channel extrusion and analyses the residual stresses of the
    released billet.
    '''

    def __init__(self, config=None, preset=None):
        '''
        Initializes the ExtrusionFramework.

        Args:
            config (dict, optional): Configuration overrides merged over the defaults.
            preset (str, optional): Name of a shipped preset applied before ``config``.
        '''
        self.config = resolve_config(config_from_mapping(config, preset))
        self.die = DieProfile.from_config(self.config['die'])
        self.walls = None
        self.mesh = None
        self.snapshots = []
        self.completed = False

    def initialize_components(self):
        '''
        Builds the die walls, the billet mesh placed in the inlet channel and the solver inputs.
        '''
        logging.info("Initializing framework components...")
        cfg = self.config
        self.walls = build_die(self.die)
        spec = BilletSpec.from_config(cfg['billet'])
        origin = (0.5 * (self.die.W1 - spec.width), self.die.inlet_reference_height)
        self.mesh = generate_mesh(spec, origin=origin)
        self.material = MaterialParams.from_config(cfg['material'])
        self.formulation = ElementFormulation.from_config(cfg['formulation'])
        self.schedule = LoadSchedule.from_config(cfg['schedule'])
        self.solve_config = SolveConfig.from_config(cfg['solve'])
        self.contact_params = ContactParams.from_config(cfg['contact'], cfg['material'], spec.target_element_size)
        logging.info("Framework components initialized successfully.")

    def run(self, out_dir=None):
        '''
        Runs the extrusion cycle, optionally streaming snapshots to a run directory.

        Args:
            out_dir (str, optional): Run directory; snapshots are written as they are produced.

        Returns:
            list: The FieldSnapshot sequence kept in memory.

        Raises:
            SolverFailure: After writing ``failure.json`` into ``out_dir``.
        '''
        if self.mesh is None:
            self.initialize_components()
        run_dir = RunDirectory(out_dir).create(self.config, self.mesh) if out_dir else None
        stream = run_dir.write_snapshot if run_dir is not None else None
        logging.info("Starting run '%s'", self.config['run']['name'])
        logging.debug("Resolved configuration:\n%s", dump_config(self.config))
        try:
            self.snapshots = run_extrusion(self.mesh, self.die, self.material, self.schedule, self.solve_config,
                                           self.contact_params, self.formulation, on_snapshot=stream,
                                           walls=self.walls, keep_history=self.config['run']['keep_snapshots'])
        except SolverFailure as exc:
            if run_dir is not None:
                run_dir.write_failure({'message': str(exc), **exc.diagnostics})
            raise
        self.completed = True
        logging.info("Run '%s' completed with %d snapshots in memory", self.config['run']['name'],
                     len(self.snapshots))
        return self.snapshots

    def _window_snapshots(self, run_dir=None):
        start, end = self.config['schedule']['dense_window']
        if run_dir is not None and run_dir.exists():
            return run_dir.window_snapshots(start, end)
        return [s for s in self.snapshots if start <= s.time <= end and s.phase != 'Released']

    def analyze(self, snapshots=None, run_dir=None, make_plots=True):
        '''
        Post-processes the released billet and the exit-channel contact history.

        Args:
            snapshots (list, optional): Snapshots to analyse; defaults to the last run.
            run_dir (RunDirectory, optional): Destination of tables, plots and summary.
            make_plots (bool): Write SVG plots next to the tables.

        Returns:
            dict: The machine-readable summary.

        Raises:
            RuntimeError: If there is nothing to analyse.
            InsufficientSectionsError: If the steady window holds too few sections.
        '''
        snapshots = snapshots if snapshots is not None else self.snapshots
        if not snapshots:
            raise RuntimeError("Framework must be run before the analysis.")
        analysis = self.config['analysis']
        final = snapshots[-1]
        nodal = recover_nodal_stress(final, self.mesh, method=analysis['recovery'], formulation=self.formulation)
        head, tail = steady_window_trims(self.die.W1, analysis['trim_factor'], final.info.get('arc_feed_length', 0.0))
        sections = build_sections(final, self.mesh, analysis['section_spacing'], head, tail,
                                  analysis['smoothing_points'], nodal_stress=nodal, strict=False)
        thickness = thickness_table(sections)
        report = longitudinal_curve(sections, self.material.sigma_y0, analysis['steady_threshold'],
                                    analysis['peak_ratio'], analysis['energy_fraction'], analysis['min_sections'])

        traces = {}
        window_snapshots = self._window_snapshots(run_dir)
        for surface in SURFACES:
            try:
                traces[surface] = trace_contact(window_snapshots, analysis['window'], surface, self.mesh)
            except ValueError as exc:
                logging.warning("Contact trace on the %s surface skipped: %s", surface, exc)

        summary = {
            'run_id': self.config['run']['name'],
            **report.summary(),
            'h': thickness['h'],
            'hb_over_h': thickness['hb_over_h'],
            'n_sections': thickness['n_sections'],
            'contact': {surface: trace.summary() for surface, trace in traces.items()},
        }

        if run_dir is not None:
            self._write_analysis(run_dir, final, sections, report, traces, summary, make_plots)
        return summary

    def _write_analysis(self, run_dir, final, sections, report, traces, summary, make_plots):
        run_dir.write_analysis_table('sections.csv', sections_frame(sections))
        run_dir.write_analysis_table('profiles.csv', profiles_frame(sections))
        run_dir.write_analysis_table('curve.csv', report.curve_frame())
        run_dir.write_analysis_table('spectrum.csv', report.spectrum_frame())
        for surface, trace in traces.items():
            run_dir.write_analysis_table(f"contact_{surface.lower()}.csv", trace.to_frame())
            run_dir.write_analysis_table(f"contact_locus_{surface.lower()}.csv", trace.locus_frame())
        run_dir.write_summary(summary)
        if make_plots:
            target = run_dir.analysis_dir
            plots.plot_longitudinal_curve(report, os.path.join(target, 'curve.svg'))
            plots.plot_spectrum(report, os.path.join(target, 'spectrum.svg'))
            plots.plot_nd_profiles(sections, os.path.join(target, 'profiles.svg'))
            plots.plot_die(self.geometry_table(), os.path.join(target, 'die.svg'), billet_coords=final.nodal_coords)
            for surface, trace in traces.items():
                plots.plot_contact_trace(trace, os.path.join(target, f"contact_{surface.lower()}.svg"))

    @classmethod
    def from_run_directory(cls, path):
        '''Rebuilds a framework around an existing run directory for re-analysis.'''
        run_dir = RunDirectory(path)
        framework = cls(run_dir.header()['config'])
        framework.initialize_components()
        framework.mesh = run_dir.mesh()
        framework.snapshots = [run_dir.final_snapshot()]
        framework.completed = True
        return framework, run_dir

    def geometry_table(self, resolution=64):
        if self.walls is None:
            self.walls = build_die(self.die)
        return pd.DataFrame(polyline(self.walls, resolution), columns=['wall_id', 'x', 'y'])


def run_case(config, out_dir=None, make_plots=True):
    '''Runs and analyses one configuration; returns the framework and the summary.'''
    framework = ExtrusionFramework(config)
    framework.run(out_dir)
    run_dir = RunDirectory(out_dir) if out_dir else None
    summary = framework.analyze(run_dir=run_dir, make_plots=make_plots)
    return framework, summary


def _sweep_case(index, axis, value, config, out_root):
    case_id = format_case_id(index)
    row = {'case_id': case_id, 'axis': axis, 'value': value, 'status': 'ok', 'classification': None,
           'D': None, 'h': None, 'hb_over_h': None, 'dominant_frequency': None, 'error': None}
    config = copy.deepcopy(config)
    config['run']['name'] = case_id
    case_dir = os.path.join(out_root, case_id) if out_root else None
    logging.info("Sweep case %s started (%s = %s)", case_id, axis, value)
    try:
        _, summary = run_case(config, case_dir)
    except (ValueError, RuntimeError) as exc:
        logging.error("Sweep case %s failed: %s", case_id, exc)
        row.update({'status': 'failed', 'error': f"{type(exc).__name__}: {exc}"})
        return row
    for key in ('classification', 'D', 'h', 'hb_over_h', 'dominant_frequency'):
        row[key] = summary.get(key)
    logging.info("Sweep case %s finished: %s", case_id, row['classification'])
    return row


def run_sweep(sweep, out_root=None, parallel=1):
    '''
    Runs every case of a sweep and writes ``summary.csv`` and ``summary.json``.

    Args:
        sweep (dict): ``{base, axis, values}`` sweep specification.
        out_root (str, optional): Directory receiving one run directory per case.
        parallel (int): Number of worker processes.

    Returns:
        pandas.DataFrame: One row per case, sorted by case id.
    '''
    configs = validate_sweep(sweep)
    axis = sweep['axis']
    if out_root:
        os.makedirs(out_root, exist_ok=True)
    rows = joblib.Parallel(n_jobs=max(1, int(parallel)))(
        joblib.delayed(_sweep_case)(index, axis, float(value), config, out_root)
        for index, (value, config) in enumerate(zip(sweep['values'], configs))
    )
    table = pd.DataFrame(rows, columns=SUMMARY_COLUMNS).sort_values('case_id', kind='stable').reset_index(drop=True)
    if out_root:
        write_table(os.path.join(out_root, 'summary.csv'), table)
        records = table.astype(object).where(pd.notna(table), None).to_dict(orient='records')
        write_json(os.path.join(out_root, 'summary.json'), {'axis': axis, 'cases': records})
    return table


def run_convergence(config=None, element_sizes=DEFAULT_CONVERGENCE_SIZES, out_root=None, parallel=1):
    '''
    Runs one configuration at several element sizes and compares the final ``sigma_xx``
    along the A-B material line.

    Repeated sizes run once; runs are compared from coarse to fine whatever the given order.

    Returns:
        ConvergenceTable: The comparison, with the selected element size.
    '''
    sizes = list(dict.fromkeys(float(size) for size in element_sizes))
    if len(sizes) < 2:
        raise ConfigValidationError('converge.sizes', 'at least two distinct element sizes are required')
    base = config_from_mapping(config)
    cases = []
    for size in sizes:
        case = copy.deepcopy(base)
        case['billet']['element_size'] = float(size)
        case['run']['name'] = f"h_{size * 1e6:.0f}um"
        cases.append(case)

    def case_dir(case):
        return os.path.join(out_root, case['run']['name']) if out_root else None

    frameworks = joblib.Parallel(n_jobs=max(1, int(parallel)))(
        joblib.delayed(_converge_case)(case, case_dir(case)) for case in cases
    )
    runs = [MaterialLineRun(fw.mesh.element_size, fw.mesh, fw.snapshots[-1], fw.config['run']['name'])
            for fw in frameworks]
    analysis = frameworks[0].config['analysis']
    table = compare_material_line(runs, (np.asarray(analysis['line_a']), np.asarray(analysis['line_b'])),
                                  analysis['recovery'])
    if out_root:
        write_table(os.path.join(out_root, 'convergence.csv'), table.table)
        write_table(os.path.join(out_root, 'convergence_profiles.csv'), table.profiles)
        write_json(os.path.join(out_root, 'convergence.json'), table.summary())
        plots.plot_convergence(table, os.path.join(out_root, 'convergence.svg'))
    return table


def _converge_case(config, out_dir):
    framework = ExtrusionFramework(config)
    framework.run(out_dir)
    framework.snapshots = framework.snapshots[-1:]
    return framework
