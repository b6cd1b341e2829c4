'''
Configuration management for the acex package.

This module provides the default run configuration, the shipped presets and the
functions that load, resolve, validate and save configuration files. A configuration
is a nested dictionary whose top-level sections map onto the simulator components:

- ``die``: rigid die parameters (widths, normalized lengths and fillet radii).
- ``billet``: billet size, element size and initial clearance.
- ``material``: elastic constants, initial yield stress and linear hardening rate.
- ``formulation``: element technology.
- ``schedule``: load phases, pseudo-time stepping and snapshot cadence.
- ``solve``: Newton tolerances and step cutting.
- ``contact``: penalty parameters.
- ``analysis``: residual-stress post-processing parameters.
- ``run``: bookkeeping for run directories.

Values set to ``None`` are derived from the others by :func:`resolve_config`.
'''

import copy
import math

import yaml

from .exceptions import ConfigValidationError
from .helpers import deep_merge

SCHEMA_VERSION = 1

INTEGRATION_SCHEMES = ('SelectiveReducedBbar', 'SinglePointHourglass')
RECOVERY_METHODS = ('extrapolate', 'spr')
SWEEP_AXES = ('ER', 'HardeningRate')

REQUIRED_SECTIONS = ('die', 'billet', 'material', 'formulation', 'schedule',
                     'solve', 'contact', 'analysis', 'run')


def get_default_config():
    '''Returns the default configuration (the full-size set-up at ER = 0.75, H = 5 MPa).'''
    return {
        'die': {
            'W1': 0.025,
            'ER': 0.75,
            'L1n': 22.0,
            'L2n': 6.0,
            'R1n': 0.8,
            'R2n': 1.8,
            'psi': 90.0,
            'phi': 90.0,
            'r1_on_inner_corner': True,
        },
        'billet': {
            'width': None,
            'length': None,
            'length_n': None,
            'element_size': 0.758e-3,
            'clearance': 1.0e-6,
        },
        'material': {
            'E': 200.0e9,
            'nu': 0.3,
            'sigma_y0': 400.0e6,
            'H': 5.0e6,
        },
        'formulation': {
            'integration': 'SelectiveReducedBbar',
            'hourglass_coefficient': 0.03,
        },
        'schedule': {
            'punch_speed': 0.005,
            'punch_travel': None,
            'feed_speed': 0.005,
            'peak_traction': None,
            'ramp': 2.0,
            'feed_per_increment': 0.25,
            'pseudo_time_step': None,
            'snapshot_every': 10,
            'dense_window': None,
            'stabilization': None,
        },
        'solve': {
            'newton_tol_force': 1.0e-6,
            'newton_tol_disp': 1.0e-8,
            'max_newton_iters': 25,
            'max_step_cuts': 6,
            'line_search': True,
        },
        'contact': {
            'penalty_stiffness': None,
            'activation_tolerance': None,
            'penalty_factor': 100.0,
            'max_penalty_factor': 1.0e4,
        },
        'analysis': {
            'section_spacing': 1.0e-3,
            'trim_factor': 1.5,
            'steady_threshold': 0.02,
            'peak_ratio': 3.0,
            'energy_fraction': 0.5,
            'min_sections': 32,
            'smoothing_points': 5,
            'recovery': 'extrapolate',
            'window': None,
            'line_a': None,
            'line_b': None,
        },
        'run': {
            'name': 'acex_run',
            'keep_snapshots': True,
        },
    }


PRESETS = {
    'smoke': {
        'billet': {'element_size': 2.0e-3, 'length_n': 10.0},
        'run': {'name': 'smoke'},
    },
    'paper': {
        'billet': {'element_size': 0.758e-3, 'length_n': 22.0},
        'run': {'name': 'paper'},
    },
}

PRESET_NOTES = {
    'smoke': '2 mm elements, billet length 10*W1; completes in minutes',
    'paper': '0.758 mm elements, billet length 22*W1; long-running',
}


def get_preset(name):
    '''Returns the overrides of a shipped preset.'''
    if name not in PRESETS:
        raise ConfigValidationError('preset', f"unknown preset '{name}' (choose from {sorted(PRESETS)})")
    return copy.deepcopy(PRESETS[name])


def apply_preset(config, name):
    '''Returns a copy of ``config`` with the preset ``name`` merged on top.'''
    return deep_merge(config, get_preset(name))


def load_config(path, preset=None):
    '''
    Loads a YAML configuration file and merges it over the defaults.

    A ``preset`` key inside the file (or the ``preset`` argument, which wins) is applied
    before the file's own values.

    Args:
        path (str or Path): The configuration file.
        preset (str, optional): Name of a shipped preset.

    Returns:
        dict: The validated (unresolved) configuration.
    '''
    with open(path, 'r', encoding='utf-8') as handle:
        user = yaml.safe_load(handle) or {}
    if not isinstance(user, dict):
        raise ConfigValidationError('config', 'top level must be a mapping')
    user = _coerce_numbers(user)
    config = get_default_config()
    preset_name = preset or user.pop('preset', None)
    if preset_name:
        config = apply_preset(config, preset_name)
    config = deep_merge(config, user)
    validate_config(config)
    return config


def config_from_mapping(mapping, preset=None):
    '''Builds a validated configuration from an in-memory mapping (same rules as files).'''
    user = _coerce_numbers(copy.deepcopy(mapping or {}))
    config = get_default_config()
    preset_name = preset or user.pop('preset', None)
    if preset_name:
        config = apply_preset(config, preset_name)
    config = deep_merge(config, user)
    validate_config(config)
    return config


def save_config(config, path):
    '''Writes ``config`` as YAML; :func:`load_config` reads it back unchanged.'''
    with open(path, 'w', encoding='utf-8') as handle:
        yaml.safe_dump(config, handle, sort_keys=False, default_flow_style=False)
    return path


def dump_config(config):
    '''Returns the YAML text of ``config``.'''
    return yaml.safe_dump(config, sort_keys=False, default_flow_style=False)


def resolve_config(config):
    '''
    Fills every derived ``None`` default of a validated configuration.

    Returns:
        dict: A new, fully explicit configuration.
    '''
    from ..geometry.die import DieProfile

    cfg = copy.deepcopy(config)
    validate_config(cfg)
    die = DieProfile.from_config(cfg['die'])
    billet = cfg['billet']
    material = cfg['material']
    schedule = cfg['schedule']
    contact = cfg['contact']
    analysis = cfg['analysis']
    h = float(billet['element_size'])

    if billet['width'] is None:
        billet['width'] = die.W1 - 2.0 * billet['clearance']
    if billet['length'] is None:
        factor = billet['length_n'] if billet['length_n'] is not None else die.L1n
        billet['length'] = float(factor) * die.W1

    if contact['penalty_stiffness'] is None:
        contact['penalty_stiffness'] = contact['penalty_factor'] * material['E'] / h
    if contact['activation_tolerance'] is None:
        contact['activation_tolerance'] = 0.5 * h

    if schedule['pseudo_time_step'] is None:
        schedule['pseudo_time_step'] = schedule['feed_per_increment'] * h / schedule['feed_speed']
    if schedule['peak_traction'] is None:
        # Elastic-only runs carry an infinite yield stress; bound the traction by a
        # steel-like yield level instead.
        reference = min(float(material['sigma_y0']), 2.0e-3 * float(material['E']))
        schedule['peak_traction'] = 1.0e-3 * reference
    if schedule['punch_travel'] is None:
        schedule['punch_travel'] = float(billet['length'])
    if schedule['dense_window'] is None:
        punch_time = schedule['punch_travel'] / schedule['punch_speed']
        schedule['dense_window'] = [0.5 * punch_time, punch_time]

    if analysis['window'] is None:
        analysis['window'] = [die.exit_start_x, die.exit_end_x]
    if analysis['line_a'] is None or analysis['line_b'] is None:
        x0 = float(0.5 * (die.W1 - billet['width']))
        y_mid = float(die.bend_center[1] + 0.5 * billet['length'])
        analysis['line_a'] = [x0, y_mid]
        analysis['line_b'] = [x0 + billet['width'], y_mid]

    validate_config(cfg)
    return cfg


def validate_config(config):
    '''
    Validates the provided configuration dictionary.

    Raises:
        ConfigValidationError: On the first invalid field.
    '''
    for section in REQUIRED_SECTIONS:
        if section not in config or not isinstance(config[section], dict):
            raise ConfigValidationError(section, 'missing required section')

    die = config['die']
    _require(_positive(die.get('W1')), 'die.W1', 'W1 must be positive')
    er = die.get('ER')
    _require(_number(er) and 0.0 < er <= 1.0, 'die.ER', 'ER must be in (0, 1]')
    _require(_positive(die.get('L1n')), 'die.L1n', 'L1n must be positive')
    _require(_positive(die.get('L2n')), 'die.L2n', 'L2n must be positive')
    _require(_number(die.get('R1n')) and die['R1n'] >= 0.0, 'die.R1n', 'R1n must be non-negative')
    _require(_number(die.get('R2n')) and die['R2n'] >= 0.0, 'die.R2n', 'R2n must be non-negative')
    _require(die.get('psi') == 90.0, 'die.psi', 'only a 90 degree corner angle is supported')
    _require(die.get('phi') == 90.0, 'die.phi', 'only a 90 degree die angle is supported')
    _require(isinstance(die.get('r1_on_inner_corner'), bool), 'die.r1_on_inner_corner', 'must be a boolean')

    billet = config['billet']
    h = billet.get('element_size')
    _require(_positive(h), 'billet.element_size', 'element size must be positive')
    clearance = billet.get('clearance')
    _require(_number(clearance) and clearance >= 0.0, 'billet.clearance', 'clearance must be non-negative')
    _require(clearance < 0.1 * h, 'billet.clearance', 'clearance must be much smaller than the element size')
    if billet.get('width') is not None:
        _require(_positive(billet['width']) and billet['width'] <= die['W1'],
                 'billet.width', 'width must be in (0, W1]')
    if billet.get('length') is not None:
        _require(_positive(billet['length']), 'billet.length', 'length must be positive')
        _require(billet['length'] <= die['L1n'] * die['W1'] * (1.0 + 1e-12),
                 'billet.length', 'billet must fit in the inlet channel')
    if billet.get('length_n') is not None:
        _require(_positive(billet['length_n']) and billet['length_n'] <= die['L1n'],
                 'billet.length_n', 'length_n must be in (0, L1n]')

    material = config['material']
    _require(_positive(material.get('E')), 'material.E', 'E must be positive')
    nu = material.get('nu')
    _require(_number(nu) and 0.0 < nu < 0.5, 'material.nu', 'nu must be in (0, 0.5)')
    _require(_number(material.get('sigma_y0')) and material['sigma_y0'] > 0.0,
             'material.sigma_y0', 'sigma_y0 must be positive')
    _require(_number(material.get('H')) and material['H'] >= 0.0 and math.isfinite(material['H']),
             'material.H', 'H must be non-negative')

    formulation = config['formulation']
    _require(formulation.get('integration') in INTEGRATION_SCHEMES, 'formulation.integration',
             f"integration must be one of {INTEGRATION_SCHEMES}")
    c_hg = formulation.get('hourglass_coefficient')
    _require(_number(c_hg) and 0.0 < c_hg <= 0.1, 'formulation.hourglass_coefficient',
             'hourglass coefficient must be in (0, 0.1]')

    schedule = config['schedule']
    for key in ('punch_speed', 'feed_speed', 'ramp', 'feed_per_increment'):
        _require(_positive(schedule.get(key)), f'schedule.{key}', f'{key} must be positive')
    for key in ('punch_travel', 'peak_traction', 'pseudo_time_step', 'stabilization'):
        if schedule.get(key) is not None:
            _require(_positive(schedule[key]), f'schedule.{key}', f'{key} must be positive')
    _require(_integer(schedule.get('snapshot_every')) and schedule['snapshot_every'] >= 1,
             'schedule.snapshot_every', 'snapshot_every must be a positive integer')
    if schedule.get('dense_window') is not None:
        _require(_interval(schedule['dense_window']), 'schedule.dense_window',
                 'dense_window must be an increasing pair of times')

    solve = config['solve']
    for key in ('newton_tol_force', 'newton_tol_disp'):
        value = solve.get(key)
        _require(_number(value) and 0.0 < value <= 1e-2, f'solve.{key}', f'{key} must be in (0, 1e-2]')
    _require(_integer(solve.get('max_newton_iters')) and solve['max_newton_iters'] >= 5,
             'solve.max_newton_iters', 'max_newton_iters must be an integer >= 5')
    _require(_integer(solve.get('max_step_cuts')) and solve['max_step_cuts'] >= 0,
             'solve.max_step_cuts', 'max_step_cuts must be a non-negative integer')
    _require(isinstance(solve.get('line_search'), bool), 'solve.line_search', 'line_search must be a boolean')

    contact = config['contact']
    for key in ('penalty_stiffness', 'activation_tolerance'):
        if contact.get(key) is not None:
            _require(_positive(contact[key]), f'contact.{key}', f'{key} must be positive')
    _require(_positive(contact.get('penalty_factor')), 'contact.penalty_factor', 'penalty_factor must be positive')
    _require(_positive(contact.get('max_penalty_factor')) and contact['max_penalty_factor'] >= contact['penalty_factor'],
             'contact.max_penalty_factor', 'max_penalty_factor must be >= penalty_factor')

    analysis = config['analysis']
    _require(_positive(analysis.get('section_spacing')), 'analysis.section_spacing', 'section spacing must be positive')
    _require(_number(analysis.get('trim_factor')) and analysis['trim_factor'] >= 0.0,
             'analysis.trim_factor', 'trim_factor must be non-negative')
    _require(_positive(analysis.get('steady_threshold')), 'analysis.steady_threshold', 'steady_threshold must be positive')
    _require(_positive(analysis.get('peak_ratio')), 'analysis.peak_ratio', 'peak_ratio must be positive')
    fraction = analysis.get('energy_fraction')
    _require(_number(fraction) and 0.0 < fraction <= 1.0, 'analysis.energy_fraction', 'energy_fraction must be in (0, 1]')
    _require(_integer(analysis.get('min_sections')) and analysis['min_sections'] >= 4,
             'analysis.min_sections', 'min_sections must be an integer >= 4')
    _require(_integer(analysis.get('smoothing_points')) and analysis['smoothing_points'] >= 1,
             'analysis.smoothing_points', 'smoothing_points must be a positive integer')
    _require(analysis.get('recovery') in RECOVERY_METHODS, 'analysis.recovery',
             f"recovery must be one of {RECOVERY_METHODS}")
    if analysis.get('window') is not None:
        _require(_interval(analysis['window']), 'analysis.window', 'window must be an increasing pair of x positions')
    for key in ('line_a', 'line_b'):
        if analysis.get(key) is not None:
            point = analysis[key]
            _require(isinstance(point, (list, tuple)) and len(point) == 2 and all(_number(v) for v in point),
                     f'analysis.{key}', f'{key} must be an (x, y) pair')

    _require(isinstance(config['run'].get('name'), str) and config['run']['name'],
             'run.name', 'run name must be a non-empty string')
    _require(isinstance(config['run'].get('keep_snapshots'), bool), 'run.keep_snapshots',
             'keep_snapshots must be a boolean')


def validate_sweep(sweep):
    '''
    Validates a sweep specification ``{base, axis, values}``.

    Returns:
        list: One validated configuration per value, in the given order.
    '''
    if not isinstance(sweep, dict):
        raise ConfigValidationError('sweep', 'sweep specification must be a mapping')
    axis = sweep.get('axis')
    if axis not in SWEEP_AXES:
        raise ConfigValidationError('sweep.axis', f"axis must be one of {SWEEP_AXES}")
    values = sweep.get('values')
    if not isinstance(values, (list, tuple)) or len(values) == 0:
        raise ConfigValidationError('sweep.values', 'values must be a non-empty list')
    base = sweep.get('base')
    if isinstance(base, str):
        base = apply_preset(get_default_config(), base)
    else:
        base = config_from_mapping(base)
    configs = []
    for value in values:
        case = copy.deepcopy(base)
        if axis == 'ER':
            case['die']['ER'] = float(value)
        else:
            case['material']['H'] = float(value)
        validate_config(case)
        configs.append(case)
    return configs


def builtin_sweep(name, base=None):
    '''The run matrices of the parametric study: ``table2`` (ER at H = 5 MPa) and ``table3`` (H at ER = 0.75).'''
    base = copy.deepcopy(base) if base is not None else get_default_config()
    if name == 'table2':
        base['material']['H'] = 5.0e6
        return {'base': base, 'axis': 'ER', 'values': [1.0, 0.9, 0.8, 0.7, 0.75, 0.6, 0.5]}
    if name == 'table3':
        base['die']['ER'] = 0.75
        return {'base': base, 'axis': 'HardeningRate',
                'values': [20e6, 60e6, 160e6, 260e6, 360e6, 460e6, 560e6]}
    raise ConfigValidationError('sweep', f"unknown built-in sweep '{name}'")


def _require(condition, field, reason):
    if not condition:
        raise ConfigValidationError(field, reason)


def _number(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool) and not math.isnan(value)


def _positive(value):
    return _number(value) and value > 0.0


def _integer(value):
    return isinstance(value, int) and not isinstance(value, bool)


def _interval(value):
    return (isinstance(value, (list, tuple)) and len(value) == 2
            and all(_number(v) for v in value) and value[0] < value[1])


def _coerce_numbers(node):
    # YAML 1.1 reads exponent literals without a dot ("1e-6") as strings.
    if isinstance(node, dict):
        return {key: _coerce_numbers(value) for key, value in node.items()}
    if isinstance(node, list):
        return [_coerce_numbers(value) for value in node]
    if isinstance(node, str):
        try:
            value = float(node)
        except ValueError:
            return node
        return node if math.isnan(value) else value
    return node
