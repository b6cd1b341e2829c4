'''
Command-line entry point of the acex package.

Subcommands:

- ``run``: one simulation plus analysis into a run directory.
- ``sweep``: a parametric run matrix (YAML file or the built-in ``table2`` / ``table3``).
- ``converge``: the element-size refinement study along the A-B material line.
- ``analyze``: re-runs the post-processing of an existing run directory.
- ``geometry dump`` / ``mesh dump``: tables of the die boundary and of the billet mesh.
- ``presets``: lists the shipped presets.

Exit codes: 0 on success, 2 for invalid input (``ValueError``), 1 for process failures
(``RuntimeError``).
'''

import argparse
import logging
import os
import sys

import pandas as pd
import yaml

from . import __version__
from .geometry.die import DieProfile, build_die, polyline
from .geometry.mesh import BilletSpec, generate_mesh
from .main import DEFAULT_CONVERGENCE_SIZES, ExtrusionFramework, run_convergence, run_sweep
from .utils.config import PRESET_NOTES, builtin_sweep, config_from_mapping, load_config, resolve_config
from .utils.storage import RunDirectory, write_table

logger = logging.getLogger(__name__)


def _load(args):
    if getattr(args, 'config', None):
        return load_config(args.config, preset=args.preset)
    return config_from_mapping({}, preset=getattr(args, 'preset', None))


def cmd_run(args):
    config = _load(args)
    out = args.out or config['run']['name']
    config['run']['name'] = os.path.basename(os.path.normpath(out))
    framework = ExtrusionFramework(config)
    framework.run(out)
    summary = framework.analyze(run_dir=RunDirectory(out), make_plots=not args.no_plots)
    print(f"{summary['run_id']}: {summary['classification']}, D = {summary['D'] / 1e6:.3f} MPa, "
          f"h = {summary['h'] * 1e3:.3f} mm, h_b/h = {summary['hb_over_h']:.3f}")
    return 0


def cmd_sweep(args):
    if args.sweep in ('table2', 'table3'):
        sweep = builtin_sweep(args.sweep, _load(args))
    else:
        with open(args.sweep, 'r', encoding='utf-8') as handle:
            sweep = yaml.safe_load(handle) or {}
        if args.preset and not sweep.get('base'):
            sweep['base'] = args.preset
    table = run_sweep(sweep, args.out or 'sweep', parallel=args.parallel)
    print(table.to_string(index=False))
    return 0 if (table['status'] == 'ok').all() else 1


def cmd_converge(args):
    sizes = args.sizes or list(DEFAULT_CONVERGENCE_SIZES)
    table = run_convergence(_load(args), sizes, args.out or 'convergence', parallel=args.parallel)
    print(table.table.to_string(index=False))
    print(f"converged: {table.converged}; selected element size: {table.selected_element_size * 1e3:.3f} mm")
    return 0


def cmd_analyze(args):
    framework, run_dir = ExtrusionFramework.from_run_directory(args.run_dir)
    summary = framework.analyze(run_dir=run_dir, make_plots=not args.no_plots)
    print(f"{summary['run_id']}: {summary['classification']}, D = {summary['D'] / 1e6:.3f} MPa")
    return 0


def cmd_geometry_dump(args):
    config = _load(args)
    walls = build_die(DieProfile.from_config(config['die']))
    table = pd.DataFrame(polyline(walls, args.resolution), columns=['wall_id', 'x', 'y'])
    _emit(table, args.out)
    return 0


def cmd_mesh_dump(args):
    config = resolve_config(_load(args))
    die = DieProfile.from_config(config['die'])
    spec = BilletSpec.from_config(config['billet'])
    mesh = generate_mesh(spec, origin=(0.5 * (die.W1 - spec.width), die.inlet_reference_height))
    out = args.out or 'mesh'
    RunDirectory.write_mesh(mesh, out)
    print(f"wrote {mesh.n_nodes} nodes and {mesh.n_elements} elements to {out}")
    return 0


def cmd_presets(args):
    for name, note in sorted(PRESET_NOTES.items()):
        print(f"{name:8s} {note}")
    return 0


def _emit(table, out):
    if out:
        write_table(out, table)
    else:
        table.to_csv(sys.stdout, index=False, float_format='%.10e')


def _common(parser, config=True):
    if config:
        parser.add_argument('--config', help='YAML configuration file')
        parser.add_argument('--preset', help='shipped preset applied under the configuration')
    parser.add_argument('--out', help='output path')


def build_parser():
    parser = argparse.ArgumentParser(prog='acex', description='Angular channel extrusion simulator')
    parser.add_argument('--version', action='version', version=f"acex {__version__}")
    parser.add_argument('-v', '--verbose', action='store_true', help='debug logging')
    parser.add_argument('--quiet', action='store_true', help='warnings and errors only')
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help='simulate and analyse one configuration')
    _common(run)
    run.add_argument('--no-plots', action='store_true')
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser('sweep', help='run a parametric matrix')
    sweep.add_argument('sweep', help="sweep YAML file, or 'table2' / 'table3'")
    _common(sweep)
    sweep.add_argument('--parallel', type=int, default=1)
    sweep.set_defaults(func=cmd_sweep)

    converge = sub.add_parser('converge', help='element-size refinement study')
    _common(converge)
    converge.add_argument('--sizes', type=float, nargs='+', help='element sizes in metres')
    converge.add_argument('--parallel', type=int, default=1)
    converge.set_defaults(func=cmd_converge)

    analyze = sub.add_parser('analyze', help='re-run the analysis of a run directory')
    analyze.add_argument('run_dir')
    analyze.add_argument('--no-plots', action='store_true')
    analyze.set_defaults(func=cmd_analyze)

    geometry = sub.add_parser('geometry', help='die geometry tools')
    geometry_sub = geometry.add_subparsers(dest='action', required=True)
    geometry_dump = geometry_sub.add_parser('dump', help='write the die boundary polyline')
    _common(geometry_dump)
    geometry_dump.add_argument('--resolution', type=int, default=64)
    geometry_dump.set_defaults(func=cmd_geometry_dump)

    mesh = sub.add_parser('mesh', help='billet mesh tools')
    mesh_sub = mesh.add_subparsers(dest='action', required=True)
    mesh_dump = mesh_sub.add_parser('dump', help='write nodes.csv and elements.csv')
    _common(mesh_dump)
    mesh_dump.set_defaults(func=cmd_mesh_dump)

    presets = sub.add_parser('presets', help='list shipped presets')
    presets.set_defaults(func=cmd_presets)
    return parser


def main(argv=None):
    '''Parses ``argv`` and runs the selected subcommand; returns the exit code.'''
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format='%(asctime)s - %(levelname)s - %(message)s', force=True)
    try:
        return args.func(args)
    except ValueError as exc:
        logger.error("%s", exc)
        return 2
    except RuntimeError as exc:
        logger.error("%s", exc)
        return 1


if __name__ == '__main__':
    sys.exit(main())
