'''
Solver Module for the acex package.

Quasi-static implicit incremental driver for the extrusion cycle:

- Load-phase scheduling (PunchPush, ArcPush, PullOut, then the final release).
- Newton iterations on a sparse LU factorization with backtracking line search.
- Adaptive step cutting with gradual step regrowth, and penalty escalation on deep
  contact penetration.
- Snapshot emission on a fixed pseudo-time cadence, every increment inside the dense
  observation window, and at every phase end.
'''

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..geometry.die import build_die
from ..utils.exceptions import InvertedElementError, SingularTangentError, SolverFailure
from .assembly import Assembler, GlobalSystem, IncrementState
from .contact import ArcPush, ContactState, PullOut, PunchPush, Release, contact_forces, punch_interface
from .element import ElementFormulation

logger = logging.getLogger(__name__)

PHASE_CODES = {'PunchPush': 0, 'ArcPush': 1, 'PullOut': 2, 'Released': 3}


@dataclass(frozen=True)
class SolveConfig:
    '''
    Newton settings. An iterate converges when ``||r_free|| / force_scale < newton_tol_force``
    (see :meth:`QuasiStaticSolver.force_scale`) and the next correction is below
    ``newton_tol_disp`` times the increment norm.
    '''
    newton_tol_force: float = 1e-6
    newton_tol_disp: float = 1e-8
    max_newton_iters: int = 25
    max_step_cuts: int = 6
    line_search: bool = True

    def __post_init__(self):
        for name in ('newton_tol_force', 'newton_tol_disp'):
            value = getattr(self, name)
            if not 0.0 < value <= 1e-2:
                raise ValueError(f"{name} must be in (0, 1e-2]")
        if self.max_newton_iters < 5:
            raise ValueError("max_newton_iters must be >= 5")
        if self.max_step_cuts < 0:
            raise ValueError("max_step_cuts must be non-negative")

    @classmethod
    def from_config(cls, solve_config):
        return cls(**solve_config)


@dataclass(frozen=True)
class LoadSchedule:
    '''Resolved phase parameters and pseudo-time stepping (SI units).'''
    punch_speed: float
    punch_travel: float
    feed_speed: float
    peak_traction: float
    ramp: float
    pseudo_time_step: float
    snapshot_every: int = 10
    dense_window: tuple = (0.0, 0.0)
    stabilization: float = None

    def __post_init__(self):
        for name in ('punch_speed', 'punch_travel', 'feed_speed', 'peak_traction', 'ramp',
                     'pseudo_time_step'):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        if int(self.snapshot_every) != self.snapshot_every or self.snapshot_every < 1:
            raise ValueError("snapshot_every must be a positive integer")

    @classmethod
    def from_config(cls, schedule_config):
        keys = ('punch_speed', 'punch_travel', 'feed_speed', 'peak_traction', 'ramp',
                'pseudo_time_step', 'snapshot_every', 'stabilization')
        values = {key: schedule_config[key] for key in keys}
        values['dense_window'] = tuple(schedule_config['dense_window'])
        return cls(**values)

    @property
    def phases(self):
        return ('PunchPush', 'ArcPush', 'PullOut')

    def damping(self, mesh):
        '''Nodal stabilization coefficient giving a terminal pull speed equal to the feed speed.'''
        if self.stabilization is not None:
            return float(self.stabilization)
        return self.peak_traction * mesh.width / (mesh.n_nodes * self.feed_speed)

    @property
    def snapshot_interval(self):
        '''Nominal pseudo-time between snapshots outside the dense window.'''
        return self.snapshot_every * self.pseudo_time_step

    def in_dense_window(self, time):
        return self.dense_window[0] <= time <= self.dense_window[1]

    def snapshot_due(self, time, increments_since_output):
        '''True inside the dense window and on every ``snapshot_every``-th increment elsewhere.'''
        return self.in_dense_window(time) or increments_since_output >= self.snapshot_every


@dataclass
class FieldSnapshot:
    '''One pseudo-time instant of the simulation.'''
    time: float
    phase: str
    increment: int
    nodal_coords: np.ndarray
    gp_stress: np.ndarray
    gp_eqps: np.ndarray
    nodal_stress: np.ndarray
    contact_state: ContactState
    info: dict = field(default_factory=dict)

    @property
    def phase_code(self):
        return PHASE_CODES[self.phase]


@dataclass
class IncrementResult:
    increment: np.ndarray
    stress: np.ndarray
    eqps: np.ndarray
    contact_state: ContactState
    iterations: int
    residual_history: list
    load: object


class IncrementFailure(RuntimeError):
    '''An increment that did not converge; carries diagnostics for the failure report.'''

    def __init__(self, reason, diagnostics=None):
        super().__init__(reason)
        self.reason = reason
        self.diagnostics = diagnostics or {}


def _factorize(matrix, free):
    try:
        factor = splu(matrix.tocsc())
    except RuntimeError as exc:
        col_norms = np.asarray(abs(matrix).sum(axis=0)).ravel()
        zero = np.flatnonzero(col_norms == 0.0)
        local = int(zero[0]) if len(zero) else int(np.argmin(np.abs(matrix.diagonal())))
        raise SingularTangentError(int(free[local]), str(exc)) from exc
    pivots = np.abs(factor.U.diagonal())
    if len(pivots) and pivots.min() <= 1e-14 * pivots.max():
        local = int(factor.perm_c[np.argmin(pivots)])
        raise SingularTangentError(int(free[local]), "near-zero pivot")
    return factor


def newton_step(system, config, residual_fn=None):
    '''
    Solves the linearized system for a displacement correction.

    Constrained DOFs receive a zero correction. With ``config.line_search`` and a
    ``residual_fn`` (correction -> residual norm on the free DOFs), the step is halved up
    to 5 times while the residual norm does not decrease. The LU factor is left on
    ``system.factor`` for reuse.

    Args:
        system (GlobalSystem): Tangent and residual in the solve basis.
        config (SolveConfig): Solver settings.
        residual_fn (callable, optional): Residual-norm evaluation for the line search.

    Returns:
        np.ndarray: The (possibly shortened) correction over all DOFs.

    Raises:
        SingularTangentError: If the factorization hits a zero pivot.
    '''
    free_mask = system.free_mask()
    free = np.flatnonzero(free_mask)
    correction = np.zeros(system.n_dofs)
    if len(free) == 0:
        system.factor = None
        return correction
    k_ff = system.tangent[free][:, free]
    factor = _factorize(k_ff, free)
    system.factor = factor
    correction[free] = factor.solve(-system.residual[free])
    if not np.all(np.isfinite(correction)):
        raise SingularTangentError(int(free[0]), "non-finite correction")

    if config.line_search and residual_fn is not None:
        start = float(np.linalg.norm(system.residual[free]))
        alpha = 1.0
        current = residual_fn(correction)
        halvings = 0
        while current > start and halvings < 5:
            alpha *= 0.5
            halvings += 1
            current = residual_fn(alpha * correction)
        if halvings:
            logger.debug("Line search shortened the step to %.4f", alpha)
        correction = alpha * correction
    return correction


class QuasiStaticSolver:
    '''
    Newton machinery for one quasi-static increment, shared by the extrusion driver and
    the standalone benchmarks.
    '''

    def __init__(self, mesh, walls, params, formulation, contact_params, solve_config, state=None):
        self.mesh = mesh
        self.walls = list(walls or [])
        self.params = params
        self.formulation = formulation
        self.contact_params = contact_params
        self.config = solve_config
        self.assembler = Assembler(mesh, params, formulation)
        self.state = state if state is not None else IncrementState.initial(mesh, formulation)
        self.last_increment = np.zeros((mesh.n_nodes, 2))
        self.last_dt = None
        self.contact_state = ContactState.empty()
        self.force_floor = 1e-9 * params.E * mesh.element_size
        self.disp_floor = 1e-6 * mesh.element_size

    def force_scale(self, applied, element_forces):
        '''
        Denominator of the relative force residual.

        The norm of the applied load ``f_ext + f_contact``, raised to the norm of the element
        internal forces when that is larger and never below ``1e-9 E h``.
        '''
        return max(float(np.linalg.norm(applied)), float(np.linalg.norm(element_forces)), self.force_floor)

    def _evaluate(self, v, load, dt, need_tangent=True):
        transform = load.transform
        du = (transform @ v if transform is not None else v).reshape(-1, 2)
        f_int, tangent, result = self.assembler.evaluate(self.state, du, need_tangent)
        residual = f_int.copy()
        applied = np.zeros(self.mesh.n_dofs)
        if self.walls and self.contact_params is not None:
            f_c, k_c, c_state = contact_forces(self.mesh, self.state.coords + du, self.walls, self.contact_params)
            residual -= f_c
            applied += f_c
            if need_tangent:
                tangent = tangent + k_c
        else:
            c_state = ContactState.empty()
        if load.external_force is not None:
            residual -= load.external_force
            applied += load.external_force
        if load.damping > 0.0:
            residual += load.damping * du.ravel() / dt
            if need_tangent:
                tangent = tangent + sp.identity(self.mesh.n_dofs, format='csr') * (load.damping / dt)
        if transform is not None:
            residual = transform.T @ residual
            if need_tangent:
                tangent = (transform.T @ tangent @ transform).tocsr()
        system = GlobalSystem(tangent=tangent, residual=residual, dof_map=self.assembler.dof_map,
                              constrained_dofs=load.prescribed, internal_force=f_int,
                              force_scale=self.force_scale(applied, result.internal_force), stress=result.stress,
                              eqps=result.eqps)
        return system, du, c_state

    def _predictor(self, load, dt):
        if self.last_dt:
            guess = self.last_increment.ravel() * (dt / self.last_dt)
        else:
            guess = np.zeros(self.mesh.n_dofs)
        if load.transform is not None:
            guess = load.transform.T @ guess
        if load.phase == 'Released':
            guess = np.zeros(self.mesh.n_dofs)
        for dof, value in load.prescribed.items():
            guess[dof] = value
        return guess

    def solve_increment(self, load, dt):
        '''
        Newton iterations for one increment without committing the result.

        Args:
            load (PhaseLoad): Loads and constraints of the increment.
            dt (float): Pseudo-time increment.

        Returns:
            IncrementResult: The converged increment.

        Raises:
            IncrementFailure: On divergence, inversion or a singular tangent.
        '''
        cfg = self.config
        v = self._predictor(load, dt)
        history = []
        try:
            system, du, c_state = self._evaluate(v, load, dt)
        except InvertedElementError as exc:
            raise IncrementFailure('inverted element in predictor', {'worst_element': int(exc.element_ids[0])}) from exc

        free = system.free_mask()
        previous_factor = None
        for iteration in range(1, cfg.max_newton_iters + 1):
            cache = {}

            def residual_norm(step):
                try:
                    trial = self._evaluate(v + step, load, dt)
                except InvertedElementError:
                    cache.pop('iterate', None)
                    return np.inf
                cache['iterate'] = trial
                return float(np.linalg.norm(trial[0].residual[free]))

            try:
                step = newton_step(system, cfg, residual_norm if cfg.line_search else None)
            except SingularTangentError as exc:
                raise IncrementFailure('singular tangent', {'worst_dof': exc.dof,
                                                            'worst_node': exc.dof // 2}) from exc
            previous_factor = system.factor
            v = v + step
            if 'iterate' in cache and cfg.line_search:
                system, du, c_state = cache['iterate']
            else:
                try:
                    system, du, c_state = self._evaluate(v, load, dt)
                except InvertedElementError as exc:
                    raise IncrementFailure('inverted element', {'worst_element': int(exc.element_ids[0])}) from exc

            r_free = system.residual[free]
            rel_force = float(np.linalg.norm(r_free)) / system.force_scale
            if not np.isfinite(rel_force):
                raise IncrementFailure('non-finite residual')
            check = previous_factor.solve(-r_free) if previous_factor is not None else np.zeros(0)
            v_norm = max(float(np.linalg.norm(v)), self.disp_floor)
            rel_disp = float(np.linalg.norm(check)) / v_norm
            history.append((rel_force, rel_disp))
            logger.debug("  iter %d: force %.3e  disp %.3e", iteration, rel_force, rel_disp)
            if rel_force < cfg.newton_tol_force and rel_disp < cfg.newton_tol_disp:
                return IncrementResult(du.copy(), system.stress, system.eqps, c_state, iteration, history, load)

        worst = int(np.argmax(np.abs(system.residual) * free))
        residual_nodes = np.hypot(*system.residual.reshape(-1, 2).T)
        top = np.argsort(residual_nodes)[::-1][:10]
        raise IncrementFailure('no convergence', {
            'last_relative_residual': history[-1][0] if history else None,
            'worst_dof': worst,
            'worst_node': worst // 2,
            'residual_map': {int(n): float(residual_nodes[n]) for n in top},
        })

    def commit(self, result, dt):
        self.state = IncrementState(self.state.coords + result.increment, result.stress, result.eqps)
        self.last_increment = result.increment
        self.last_dt = dt
        self.contact_state = result.contact_state


def build_phases(die, schedule, mesh):
    damping = schedule.damping(mesh)
    return [
        PunchPush(die, schedule.punch_speed, schedule.punch_travel, damping),
        ArcPush(die, schedule.feed_speed, damping),
        PullOut(die, schedule.peak_traction, schedule.ramp, schedule.feed_speed, damping),
        Release(die),
    ]


def _snapshot(solver, time, phase, increment, info):
    from ..analysis.recovery import extrapolate_to_nodes

    state = solver.state
    nodal = extrapolate_to_nodes(solver.mesh, state.coords, state.stress)
    return FieldSnapshot(time=time, phase=phase, increment=increment, nodal_coords=state.coords.copy(),
                         gp_stress=state.stress.copy(), gp_eqps=state.eqps.copy(), nodal_stress=nodal,
                         contact_state=solver.contact_state, info=dict(info))


def run_extrusion(mesh, die, material, schedule, solve_config, contact_params, formulation=None,
                  on_snapshot=None, walls=None, keep_history=True):
    '''
    Runs the full extrusion cycle and returns its snapshots.

    A snapshot is taken after every increment inside the dense window, after every
    ``schedule.snapshot_every``-th increment elsewhere, at each phase end and for the
    released state.

    Args:
        mesh (Mesh): Billet mesh placed in the inlet channel.
        die (DieProfile): Die parameters.
        material (MaterialParams): Material constants.
        schedule (LoadSchedule): Phase parameters and time stepping.
        solve_config (SolveConfig): Newton settings.
        contact_params (ContactParams): Penalty parameters.
        formulation (ElementFormulation, optional): Defaults to SelectiveReducedBbar.
        on_snapshot (callable, optional): Receives every snapshot as it is produced; when
            given, only dense-window, phase-end and final snapshots stay in memory.
        walls (list, optional): Prebuilt die walls.
        keep_history (bool): With ``on_snapshot``, False keeps only the released snapshot in
            memory. Without a consumer every snapshot is returned.

    Returns:
        list: FieldSnapshot sequence ending with the released (residual-stress) state.

    Raises:
        SolverFailure: When an increment fails after ``max_step_cuts`` halvings.
        PhaseTransitionError: When a load phase finds its face outside the expected region.
    '''
    formulation = formulation or ElementFormulation()
    walls = walls if walls is not None else build_die(die)
    solver = QuasiStaticSolver(mesh, walls, material, formulation, contact_params, solve_config)
    phases = build_phases(die, schedule, mesh)

    snapshots = []
    time = 0.0
    counter = {'increment': 0, 'cuts_total': 0, 'since_output': 0}
    info = {'penalty_stiffness': contact_params.penalty_stiffness}
    latest = {}

    def emit(phase_name, keep):
        snap = _snapshot(solver, time, phase_name, counter['increment'], info)
        counter['since_output'] = 0
        latest['snapshot'] = snap
        if on_snapshot is not None:
            on_snapshot(snap)
        if on_snapshot is None or (keep and keep_history):
            snapshots.append(snap)
        return snap

    logger.info("Starting extrusion: %d elements, dt=%.4g s, ER=%.3f, sparse snapshots every %.4g s",
                mesh.n_elements, schedule.pseudo_time_step, die.ER, schedule.snapshot_interval)
    emit('PunchPush', keep=True)

    for phase in phases:
        phase.start(mesh, solver.state.coords)
        logger.info("Phase %s started at t=%.4f s", phase.name, time)
        dt = schedule.pseudo_time_step
        clean = 0
        while not phase.finished:
            step = min(dt, phase.remaining_time()) if phase.name != 'Released' else dt
            cuts = 0
            while True:
                load = punch_interface(mesh, solver.state.coords, phase, step)
                try:
                    result = solver.solve_increment(load, step)
                except IncrementFailure as failure:
                    cuts += 1
                    counter['cuts_total'] += 1
                    if cuts > solve_config.max_step_cuts or phase.name == 'Released':
                        diagnostics = dict(failure.diagnostics)
                        diagnostics.update({'time': time, 'phase': phase.name, 'dt': step,
                                            'reason': failure.reason, 'step_cuts': cuts - 1,
                                            'deepest_penetration': solver.contact_state.deepest_penetration})
                        raise SolverFailure(f"increment at t={time:.4f} s in {phase.name} failed: "
                                            f"{failure.reason}", diagnostics) from failure
                    step *= 0.5
                    logger.warning("Step cut to dt=%.4g s at t=%.4f s (%s)", step, time, failure.reason)
                    continue
                depth = result.contact_state.deepest_penetration
                if depth > solver.contact_params.deep_penetration:
                    stiffer = solver.contact_params.escalated()
                    if stiffer is not solver.contact_params:
                        logger.warning("Penalty escalated to %.3e after %.3e m penetration",
                                       stiffer.penalty_stiffness, depth)
                        solver.contact_params = stiffer
                        info['penalty_stiffness'] = stiffer.penalty_stiffness
                        continue
                break

            solver.commit(result, step)
            if phase.name != 'Released':
                time += step
            phase.advance(mesh, solver.state.coords, step)
            counter['increment'] += 1
            counter['since_output'] += 1
            info.update(load.info)
            logger.debug("t=%.4f s %s: %d iterations, %d active contacts", time, phase.name,
                         result.iterations, result.contact_state.n_active)

            if cuts == 0:
                clean += 1
                if clean >= 3 and dt < schedule.pseudo_time_step:
                    dt = min(1.5 * dt, schedule.pseudo_time_step)
                    clean = 0
            else:
                dt = step
                clean = 0

            if phase.finished:
                if isinstance(phase, ArcPush):
                    info['arc_feed_length'] = phase.feed_length
                emit(phase.name, keep=True)
            elif schedule.snapshot_due(time, counter['since_output']):
                emit(phase.name, keep=schedule.in_dense_window(time))
            if counter['increment'] % 100 == 0:
                logger.info("t=%.3f s %s: increment %d, %d active contacts", time, phase.name,
                            counter['increment'], result.contact_state.n_active)

    logger.info("Extrusion finished at t=%.3f s after %d increments (%d step cuts)", time,
                counter['increment'], counter['cuts_total'])
    if on_snapshot is not None and not keep_history:
        snapshots.append(latest['snapshot'])
    return snapshots

