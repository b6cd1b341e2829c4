'''
Element Module for the acex package.

Four-node plane-strain quadrilateral with updated-Lagrangian finite-deformation
kinematics:

- Mid-increment (Hughes-Winget) kinematics: the incremental displacement gradient is
  taken on the mid-increment configuration, its symmetric part gives the strain
  increment and its skew part the incremental rotation (Cayley form) that corotates the
  stored stress (Jaumann rate).
- ``SelectiveReducedBbar``: 2x2 Gauss integration with the volumetric strain and the
  pressure replaced by their element averages (mean dilatation).
- ``SinglePointHourglass``: one Gauss point with stiffness-type hourglass control on the
  total displacement.

The element residual is linearized exactly (material, spin, geometric and volume-average
terms), so the element tangent is generally not symmetric in value.

Every routine operates on batches of elements: coordinates are ``(E, 4, 2)`` arrays,
integration-point stresses ``(E, g, 4)`` and the degree-of-freedom order inside an
element is ``[u1x, u1y, u2x, u2y, ...]``.
'''

import logging
from dataclasses import dataclass

import numpy as np

from ..utils.exceptions import ConfigValidationError, InvertedElementError
from ..utils.helpers import rotate_voigt_stress
from .material import M_VOIGT, MaterialPointState, elastic_matrix, radial_return

logger = logging.getLogger(__name__)

XI_NODES = np.array([-1.0, 1.0, 1.0, -1.0])
ETA_NODES = np.array([-1.0, -1.0, 1.0, 1.0])
HOURGLASS_BASE = np.array([1.0, -1.0, 1.0, -1.0])

_G = 1.0 / np.sqrt(3.0)
GAUSS_2X2 = (np.column_stack([_G * XI_NODES, _G * ETA_NODES]), np.ones(4))
GAUSS_1 = (np.zeros((1, 2)), np.array([4.0]))

INTEGRATION_SCHEMES = ('SelectiveReducedBbar', 'SinglePointHourglass')


class ElementFormulation:
    '''
    Element technology selection.

    Args:
        integration (str): ``SelectiveReducedBbar`` or ``SinglePointHourglass``.
        hourglass_coefficient (float): Stiffness-type hourglass coefficient in (0, 0.1].
        hourglass_control (bool): Disable to expose the spurious hourglass modes.
    '''

    def __init__(self, integration='SelectiveReducedBbar', hourglass_coefficient=0.03, hourglass_control=True):
        if integration not in INTEGRATION_SCHEMES:
            raise ConfigValidationError('formulation.integration', f"unknown integration '{integration}'")
        if integration == 'SinglePointHourglass' and hourglass_control and not 0.0 < hourglass_coefficient <= 0.1:
            raise ConfigValidationError('formulation.hourglass_coefficient', 'hourglass coefficient must be in (0, 0.1]')
        self.integration = integration
        self.hourglass_coefficient = float(hourglass_coefficient)
        self.hourglass_control = bool(hourglass_control)

    @classmethod
    def from_config(cls, formulation_config):
        return cls(formulation_config['integration'], formulation_config['hourglass_coefficient'])

    @property
    def single_point(self):
        return self.integration == 'SinglePointHourglass'

    @property
    def gauss_points(self):
        return GAUSS_1 if self.single_point else GAUSS_2X2

    @property
    def n_gauss(self):
        return len(self.gauss_points[1])

    def __repr__(self):
        return f"ElementFormulation({self.integration!r}, {self.hourglass_coefficient})"


@dataclass
class ElementResult:
    internal_force: np.ndarray
    stiffness: object
    stress: np.ndarray
    eqps: np.ndarray
    tangent: object = None


def shape_functions(xi, eta):
    '''Bilinear shape functions, shape ``(..., 4)``.'''
    xi = np.asarray(xi, dtype=float)[..., None]
    eta = np.asarray(eta, dtype=float)[..., None]
    return 0.25 * (1.0 + xi * XI_NODES) * (1.0 + eta * ETA_NODES)


def shape_derivatives(xi, eta):
    '''Derivatives with respect to (xi, eta), shape ``(..., 4, 2)``.'''
    xi = np.asarray(xi, dtype=float)[..., None]
    eta = np.asarray(eta, dtype=float)[..., None]
    d_xi = 0.25 * XI_NODES * (1.0 + eta * ETA_NODES)
    d_eta = 0.25 * ETA_NODES * (1.0 + xi * XI_NODES)
    return np.stack([d_xi, d_eta], axis=-1)


def element_gauss_points(formulation):
    '''Parent-domain integration points ``(g, 2)`` and weights ``(g,)`` of a formulation.'''
    points, weights = formulation.gauss_points
    return points.copy(), weights.copy()


def gauss_point_coordinates(mesh, coords, formulation):
    '''Physical integration point positions, shape ``(E, g, 2)``.'''
    points, _ = element_gauss_points(formulation)
    N = shape_functions(points[:, 0], points[:, 1])
    return np.einsum('ga,eai->egi', N, np.asarray(coords)[mesh.connectivity])


def spatial_gradients(coords, dN):
    '''Shape-function gradients ``(E, g, 4, 2)`` and Jacobian determinants ``(E, g)``.'''
    J = np.einsum('eai,gaj->egij', coords, dN)
    det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
    safe = np.where(det != 0.0, det, 1.0)
    inv = np.empty_like(J)
    inv[..., 0, 0] = J[..., 1, 1] / safe
    inv[..., 0, 1] = -J[..., 0, 1] / safe
    inv[..., 1, 0] = -J[..., 1, 0] / safe
    inv[..., 1, 1] = J[..., 0, 0] / safe
    return np.einsum('gaj,egjk->egak', dN, inv), det


def corner_orientation(coords):
    '''Cross products of the two edges meeting at every corner; all positive for valid quads.'''
    e1 = np.roll(coords, -1, axis=1) - coords
    e2 = np.roll(coords, 1, axis=1) - coords
    return e1[..., 0] * e2[..., 1] - e1[..., 1] * e2[..., 0]


def _raise_if_inverted(bad, element_ids, where):
    if np.any(bad):
        ids = np.flatnonzero(bad) if element_ids is None else np.asarray(element_ids)[bad]
        raise InvertedElementError(ids, where=where)


def _in_plane(stress):
    out = np.empty(stress.shape[:-1] + (2, 2))
    out[..., 0, 0] = stress[..., 0]
    out[..., 1, 1] = stress[..., 1]
    out[..., 0, 1] = stress[..., 3]
    out[..., 1, 0] = stress[..., 3]
    return out


def hourglass_vectors(coords_initial):
    '''
    Hourglass base vectors orthogonal to every linear field, with their stiffness scale.

    Returns:
        tuple: ``(gamma (E, 4), scale (E,))`` where ``scale = mu_free * A * sum |grad N|^2``
        without the shear modulus and coefficient.
    '''
    dN = shape_derivatives(np.zeros(1), np.zeros(1))
    G, det = spatial_gradients(coords_initial, dN)
    b = G[:, 0]
    h_dot_x = np.einsum('a,eai->ei', HOURGLASS_BASE, coords_initial)
    gamma = 0.25 * (HOURGLASS_BASE[None, :] - np.einsum('ei,eai->ea', h_dot_x, b))
    area = 4.0 * det[:, 0]
    scale = area * np.sum(b ** 2, axis=(1, 2))
    return gamma, scale


def evaluate_elements(coords_prev, increment, coords_initial, stress, eqps, params, formulation,
                      need_tangent=True, element_ids=None):
    '''
    Updates a batch of elements over one increment.

    Args:
        coords_prev (np.ndarray): ``(E, 4, 2)`` coordinates at the start of the increment.
        increment (np.ndarray): ``(E, 4, 2)`` incremental displacements.
        coords_initial (np.ndarray): ``(E, 4, 2)`` reference coordinates (hourglass control).
        stress (np.ndarray): ``(E, g, 4)`` stresses at the start of the increment.
        eqps (np.ndarray): ``(E, g)`` equivalent plastic strains at the start of the increment.
        params (MaterialParams): Material constants.
        formulation (ElementFormulation): Element technology.
        need_tangent (bool): Also build the element tangents.
        element_ids (np.ndarray, optional): Global ids used in error reports.

    Returns:
        ElementResult: Internal forces ``(E, 8)``, tangents ``(E, 8, 8)`` or None and the
        updated integration-point stresses and plastic strains.

    Raises:
        InvertedElementError: If an element folds in the mid or end configuration.
    '''
    coords_prev = np.asarray(coords_prev, dtype=float)
    increment = np.asarray(increment, dtype=float)
    n_el = len(coords_prev)
    points, weights = formulation.gauss_points
    n_gp = len(weights)
    dN = shape_derivatives(points[:, 0], points[:, 1])

    x_mid = coords_prev + 0.5 * increment
    x_cur = coords_prev + increment
    _raise_if_inverted(np.any(corner_orientation(x_cur) <= 0.0, axis=1), element_ids, 'current')
    Gm, Jm = spatial_gradients(x_mid, dN)
    Gc, Jc = spatial_gradients(x_cur, dN)
    _raise_if_inverted(np.any(Jm <= 0.0, axis=1), element_ids, 'mid-increment')
    _raise_if_inverted(np.any(Jc <= 0.0, axis=1), element_ids, 'current')

    L = np.einsum('eai,egak->egik', increment, Gm)
    theta = L[..., 0, 0] + L[..., 1, 1]
    wJm = Jm * weights
    Vm = wJm.sum(axis=1)
    theta_bar = (theta * wJm).sum(axis=1) / Vm

    d_eps = np.zeros((n_el, n_gp, 4))
    d_eps[..., 0] = L[..., 0, 0]
    d_eps[..., 1] = L[..., 1, 1]
    d_eps[..., 3] = L[..., 0, 1] + L[..., 1, 0]
    d_eps += ((theta_bar[:, None] - theta) / 3.0)[..., None] * M_VOIGT

    # Cayley rotation of the incremental spin
    w = 0.5 * (L[..., 0, 1] - L[..., 1, 0])
    a = 0.5 * w
    den = 1.0 + a * a
    cos_r = (1.0 - a * a) / den
    sin_r = 2.0 * a / den
    R = np.empty((n_el, n_gp, 2, 2))
    R[..., 0, 0] = cos_r
    R[..., 0, 1] = sin_r
    R[..., 1, 0] = -sin_r
    R[..., 1, 1] = cos_r
    rotated = rotate_voigt_stress(stress, R)

    state = MaterialPointState(rotated.reshape(-1, 4), np.asarray(eqps, dtype=float).reshape(-1))
    new_state, c_ep = radial_return(state, d_eps.reshape(-1, 4), params)
    sig = new_state.stress.reshape(n_el, n_gp, 4)
    new_eqps = new_state.eqps.reshape(n_el, n_gp)

    p = sig[..., :3].sum(axis=-1) / 3.0
    s2 = _in_plane(sig)
    s2[..., 0, 0] -= p
    s2[..., 1, 1] -= p
    wJc = Jc * weights
    Vc = wJc.sum(axis=1)
    p_bar = (p * wJc).sum(axis=1) / Vc
    g_vec = np.einsum('eg,egak->eak', wJc, Gc)

    force = np.einsum('eg,egil,egal->eai', wJc, s2, Gc) + p_bar[:, None, None] * g_vec
    force = force.reshape(n_el, 8)

    hourglass = formulation.single_point and formulation.hourglass_control
    if hourglass:
        coords_initial = np.asarray(coords_initial, dtype=float)
        gamma, scale = hourglass_vectors(coords_initial)
        k_hg = formulation.hourglass_coefficient * params.mu * scale
        u_total = x_cur - coords_initial
        modes = np.einsum('eb,ebi->ei', gamma, u_total)
        force += (k_hg[:, None, None] * gamma[:, :, None] * modes[:, None, :]).reshape(n_el, 8)

    if not need_tangent:
        return ElementResult(force, None, sig, new_eqps)

    c_ep = c_ep.reshape(n_el, n_gp, 4, 4)
    identity = np.eye(2)
    M = identity - 0.5 * L
    dL = np.einsum('egij,egbk->egikbj', M, Gm).reshape(n_el, n_gp, 2, 2, 8)
    d_theta = dL[..., 0, 0, :] + dL[..., 1, 1, :]
    dJm = 0.5 * Jm[..., None] * Gm.reshape(n_el, n_gp, 8)
    d_theta_bar = (np.einsum('eg,egd->ed', wJm, d_theta)
                   + np.einsum('eg,egd->ed', weights * (theta - theta_bar[:, None]), dJm)) / Vm[:, None]

    dd_eps = np.zeros((n_el, n_gp, 4, 8))
    dd_eps[..., 0, :] = dL[..., 0, 0, :]
    dd_eps[..., 1, :] = dL[..., 1, 1, :]
    dd_eps[..., 3, :] = dL[..., 0, 1, :] + dL[..., 1, 0, :]
    dd_eps += ((d_theta_bar[:, None, :] - d_theta) / 3.0)[:, :, None, :] * M_VOIGT[None, None, :, None]
    d_w = 0.5 * (dL[..., 0, 1, :] - dL[..., 1, 0, :])

    # Derivative of the corotated stored stress with respect to the spin
    dcos = -2.0 * a / den ** 2
    dsin = (1.0 - a * a) / den ** 2
    dR = np.empty_like(R)
    dR[..., 0, 0] = dcos
    dR[..., 0, 1] = dsin
    dR[..., 1, 0] = -dsin
    dR[..., 1, 1] = dcos
    stored = _in_plane(np.asarray(stress, dtype=float))
    d_rot = dR @ stored @ np.swapaxes(R, -1, -2) + R @ stored @ np.swapaxes(dR, -1, -2)
    s_w = np.zeros((n_el, n_gp, 4))
    s_w[..., 0] = d_rot[..., 0, 0]
    s_w[..., 1] = d_rot[..., 1, 1]
    s_w[..., 3] = d_rot[..., 0, 1]
    trial_map = c_ep @ np.linalg.inv(elastic_matrix(params))

    d_sig = (np.einsum('egij,egjd->egid', c_ep, dd_eps)
             + np.einsum('egij,egj->egi', trial_map, s_w)[..., None] * d_w[:, :, None, :])
    d_p = d_sig[..., :3, :].sum(axis=-2) / 3.0
    ds2 = np.empty((n_el, n_gp, 2, 2, 8))
    ds2[..., 0, 0, :] = d_sig[..., 0, :] - d_p
    ds2[..., 1, 1, :] = d_sig[..., 1, :] - d_p
    ds2[..., 0, 1, :] = d_sig[..., 3, :]
    ds2[..., 1, 0, :] = d_sig[..., 3, :]
    dJc = Jc[..., None] * Gc.reshape(n_el, n_gp, 8)
    d_p_bar = (np.einsum('eg,egd->ed', wJc, d_p)
               + np.einsum('eg,egd->ed', weights * (p - p_bar[:, None]), dJc)) / Vc[:, None]

    k_mat = (np.einsum('eg,egild,egal->eaid', wJc, ds2, Gc).reshape(n_el, 8, 8)
             + np.einsum('eai,ed->eaid', g_vec, d_p_bar).reshape(n_el, 8, 8))

    sG = np.einsum('egil,egbl->egbi', s2, Gc)
    k_geo = (np.einsum('eg,egai,egbk->eaibk', wJc, sG, Gc)
             - np.einsum('eg,egbi,egak->eaibk', wJc, sG, Gc))
    k_pre = (np.einsum('eg,egai,egbk->eaibk', wJc, Gc, Gc)
             - np.einsum('eg,egak,egbi->eaibk', wJc, Gc, Gc))
    k_geo = k_geo + p_bar[:, None, None, None, None] * k_pre
    stiffness = k_mat + k_geo.reshape(n_el, 8, 8)

    if hourglass:
        k_block = k_hg[:, None, None] * gamma[:, :, None] * gamma[:, None, :]
        stiffness += np.einsum('eab,ik->eaibk', k_block, identity).reshape(n_el, 8, 8)

    return ElementResult(force, stiffness, sig, new_eqps, tangent=c_ep)


def element_internal_force(coords_ref, coords_cur, states, params, formulation, coords_initial=None):
    '''
    Internal force and tangent of a single element over one increment.

    Args:
        coords_ref (array-like): ``(4, 2)`` coordinates at the start of the increment.
        coords_cur (array-like): ``(4, 2)`` trial coordinates at the end of the increment.
        states (MaterialPointState): One entry per integration point.
        params (MaterialParams): Material constants.
        formulation (ElementFormulation): Element technology.
        coords_initial (array-like, optional): Undeformed coordinates for hourglass control;
            defaults to ``coords_ref``.

    Returns:
        tuple: ``(f_int (8,), k_elem (8, 8), new_states)``.
    '''
    coords_ref = np.asarray(coords_ref, dtype=float)[None]
    coords_cur = np.asarray(coords_cur, dtype=float)[None]
    initial = coords_ref if coords_initial is None else np.asarray(coords_initial, dtype=float)[None]
    if len(states) != formulation.n_gauss:
        raise ValueError(f"expected {formulation.n_gauss} integration point states, got {len(states)}")
    result = evaluate_elements(coords_ref, coords_cur - coords_ref, initial,
                               states.stress[None], states.eqps[None], params, formulation)
    new_states = MaterialPointState(result.stress[0], result.eqps[0])
    return result.internal_force[0], result.stiffness[0], new_states
