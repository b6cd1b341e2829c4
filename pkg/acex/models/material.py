'''
Material Module for the acex package.

Rate-independent J2 plasticity with linear isotropic hardening in plane strain. Stresses
are stored in Voigt order ``[xx, yy, zz, xy]`` and strain increments in engineering order
``[xx, yy, zz, gamma_xy]`` (the zz entry is zero for plane strain but kept so the
out-of-plane stress is carried explicitly). All routines are vectorized over a batch of
integration points.

It also provides the least-squares linear fit of power-law hardening curves used to pick
the hardening rates of the parametric study.
'''

import logging
import os
from dataclasses import dataclass

import numpy as np
import pandas as pd
from sklearn.linear_model import LinearRegression

logger = logging.getLogger(__name__)

M_VOIGT = np.array([1.0, 1.0, 1.0, 0.0])
# Deviatoric projector acting on engineering strain, producing tensor components.
P_DEV = np.diag([1.0, 1.0, 1.0, 0.5]) - np.outer(M_VOIGT, M_VOIGT) / 3.0

ALLOY_TABLE_PATH = os.path.join(os.path.dirname(os.path.dirname(__file__)), 'data', 'power_law_alloys.csv')


@dataclass(frozen=True)
class MaterialParams:
    '''Elastic constants, initial yield stress and linear hardening rate (SI units).'''
    E: float
    nu: float
    sigma_y0: float
    H: float

    def __post_init__(self):
        if not self.E > 0.0:
            raise ValueError("E must be positive")
        if not 0.0 < self.nu < 0.5:
            raise ValueError("nu must be in (0, 0.5)")
        if not self.sigma_y0 > 0.0:
            raise ValueError("sigma_y0 must be positive")
        if not (self.H >= 0.0 and np.isfinite(self.H)):
            raise ValueError("H must be a non-negative finite number")

    @classmethod
    def from_config(cls, material_config):
        return cls(E=float(material_config['E']), nu=float(material_config['nu']),
                   sigma_y0=float(material_config['sigma_y0']), H=float(material_config['H']))

    @property
    def mu(self):
        return self.E / (2.0 * (1.0 + self.nu))

    @property
    def bulk(self):
        return self.E / (3.0 * (1.0 - 2.0 * self.nu))

    @property
    def lam(self):
        return self.E * self.nu / ((1.0 + self.nu) * (1.0 - 2.0 * self.nu))

    @property
    def yield_tolerance(self):
        return 1e-6 * self.sigma_y0 if np.isfinite(self.sigma_y0) else np.inf


class MaterialPointState:
    '''
    Stress and equivalent plastic strain of a batch of integration points.

    Attributes:
        stress (np.ndarray): ``(n, 4)`` Cauchy stress in Voigt order.
        eqps (np.ndarray): ``(n,)`` equivalent plastic strain.
    '''

    def __init__(self, stress, eqps):
        self.stress = np.array(stress, dtype=float, ndmin=2)
        self.eqps = np.array(eqps, dtype=float, ndmin=1)
        if self.stress.shape != (len(self.eqps), 4):
            raise ValueError("stress must be (n, 4) and eqps (n,)")

    @classmethod
    def zeros(cls, count):
        return cls(np.zeros((count, 4)), np.zeros(count))

    def __len__(self):
        return len(self.eqps)

    def copy(self):
        return MaterialPointState(self.stress.copy(), self.eqps.copy())

    def take(self, index):
        return MaterialPointState(self.stress[index], self.eqps[index])


def elastic_matrix(params):
    '''Plane-strain isotropic elasticity matrix mapping engineering strain to Voigt stress.'''
    return params.bulk * np.outer(M_VOIGT, M_VOIGT) + 2.0 * params.mu * P_DEV


def deviator(stress):
    stress = np.asarray(stress, dtype=float)
    pressure = stress[..., :3].sum(axis=-1) / 3.0
    return stress - pressure[..., None] * M_VOIGT


def _tensor_norm(dev):
    return np.sqrt(dev[..., 0] ** 2 + dev[..., 1] ** 2 + dev[..., 2] ** 2 + 2.0 * dev[..., 3] ** 2)


def von_mises(stress):
    '''Von Mises equivalent stress of Voigt stresses (full 3D deviator).'''
    return np.sqrt(1.5) * _tensor_norm(deviator(stress))


def yield_stress(eqps, params):
    return params.sigma_y0 + params.H * np.asarray(eqps, dtype=float)


def radial_return(state, strain_increment, params):
    '''
    Closed-form radial return for linear isotropic hardening.

    Args:
        state (MaterialPointState): State at the start of the increment.
        strain_increment (np.ndarray): ``(n, 4)`` objective engineering strain increments.
        params (MaterialParams): Material constants.

    Returns:
        tuple: ``(new_state, tangent)`` with ``tangent`` of shape ``(n, 4, 4)``; the elastic
        matrix on elastic points and the consistent elasto-plastic tangent on plastic ones.

    Raises:
        ValueError: If the state or the increment contains non-finite values.
    '''
    d_eps = np.array(strain_increment, dtype=float, ndmin=2)
    if not (np.all(np.isfinite(d_eps)) and np.all(np.isfinite(state.stress))):
        raise ValueError("non-finite strain increment or stress passed to radial_return")

    c_el = elastic_matrix(params)
    trial = state.stress + d_eps @ c_el.T
    mu = params.mu

    s_trial = deviator(trial)
    norm_trial = _tensor_norm(s_trial)
    q_trial = np.sqrt(1.5) * norm_trial
    sigma_y = yield_stress(state.eqps, params)
    plastic = q_trial > sigma_y

    count = len(state)
    tangent = np.broadcast_to(c_el, (count, 4, 4)).copy()
    new_stress = trial.copy()
    new_eqps = state.eqps.copy()

    if np.any(plastic):
        q_p = q_trial[plastic]
        d_gamma = (q_p - sigma_y[plastic]) / (3.0 * mu + params.H)
        theta = 1.0 - 3.0 * mu * d_gamma / q_p
        theta_bar = 3.0 * mu / (3.0 * mu + params.H) - (1.0 - theta)

        s_p = s_trial[plastic]
        new_stress[plastic] = trial[plastic] - (1.0 - theta)[:, None] * s_p
        new_eqps[plastic] += d_gamma

        n_hat = s_p / norm_trial[plastic][:, None]
        tangent[plastic] = (params.bulk * np.outer(M_VOIGT, M_VOIGT)[None, :, :]
                            + 2.0 * mu * theta[:, None, None] * P_DEV[None, :, :]
                            - 2.0 * mu * theta_bar[:, None, None] * n_hat[:, :, None] * n_hat[:, None, :])

    return MaterialPointState(new_stress, new_eqps), tangent


def linear_fit_hardening(power_law_K, power_law_n, strain_lo=0.05, strain_hi=1.0, samples=100):
    '''
    Least-squares slope of the power law sigma = K * eps**n sampled uniformly on a strain range.

    Args:
        power_law_K (float): Strength coefficient in Pa.
        power_law_n (float): Hardening exponent, 0 < n <= 1.
        strain_lo, strain_hi (float): Fit range, 0 <= strain_lo < strain_hi.
        samples (int): Number of uniform samples.

    Returns:
        float: The fitted linear hardening rate H in Pa.
    '''
    if not power_law_K > 0.0:
        raise ValueError("power-law K must be positive")
    if not 0.0 < power_law_n <= 1.0:
        raise ValueError("power-law n must be in (0, 1]")
    if strain_lo < 0.0 or not strain_lo < strain_hi:
        raise ValueError("strain range must satisfy 0 <= strain_lo < strain_hi")
    if samples < 2:
        raise ValueError("at least two samples are required")

    return float(_fit_line(power_law_K, power_law_n, strain_lo, strain_hi, samples).coef_[0])


def _fit_line(power_law_K, power_law_n, strain_lo, strain_hi, samples=100):
    strain = np.linspace(strain_lo, strain_hi, samples)
    stress = power_law_K * strain ** power_law_n
    return LinearRegression().fit(strain.reshape(-1, 1), stress)


def load_power_law_alloys(path=None):
    '''Reads the shipped power-law constants (columns alloy, K_MPa, n, source).'''
    return pd.read_csv(path or ALLOY_TABLE_PATH)


def fit_alloy_table(path=None, strain_lo=0.05, strain_hi=1.0):
    '''Linear hardening fits of every alloy in the power-law table, in MPa.'''
    table = load_power_law_alloys(path)
    table['H_fit_MPa'] = [
        linear_fit_hardening(k * 1e6, n, strain_lo, strain_hi) / 1e6
        for k, n in zip(table['K_MPa'], table['n'])
    ]
    table['intercept_MPa'] = [
        float(_fit_line(k, n, strain_lo, strain_hi).intercept_)
        for k, n in zip(table['K_MPa'], table['n'])
    ]
    logger.info("Fitted linear hardening for %d alloys", len(table))
    return table
