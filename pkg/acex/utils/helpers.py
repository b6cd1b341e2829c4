import copy

import numpy as np


def deep_merge(base, overrides):
    """Recursively merge ``overrides`` into a copy of ``base``."""
    merged = copy.deepcopy(base)
    for key, value in (overrides or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def rotation_matrix(angle):
    """2x2 counter-clockwise rotation matrix."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def rotate_voigt_stress(stress, rotation):
    """Rotate in-plane Voigt stresses [xx, yy, zz, xy] by R (sigma' = R sigma R^T), batched over rows."""
    stress = np.asarray(stress, dtype=float)
    rotation = np.asarray(rotation, dtype=float)
    if rotation.ndim == 2:
        rotation = np.broadcast_to(rotation, stress.shape[:-1] + (2, 2))
    sig = np.empty(stress.shape[:-1] + (2, 2))
    sig[..., 0, 0] = stress[..., 0]
    sig[..., 1, 1] = stress[..., 1]
    sig[..., 0, 1] = stress[..., 3]
    sig[..., 1, 0] = stress[..., 3]
    rotated = rotation @ sig @ np.swapaxes(rotation, -1, -2)
    out = np.empty_like(stress)
    out[..., 0] = rotated[..., 0, 0]
    out[..., 1] = rotated[..., 1, 1]
    out[..., 2] = stress[..., 2]
    out[..., 3] = 0.5 * (rotated[..., 0, 1] + rotated[..., 1, 0])
    return out


def relative_l2(values, reference):
    """||values - reference|| / ||reference||, falling back to the absolute norm for a zero reference."""
    values = np.asarray(values, dtype=float)
    reference = np.asarray(reference, dtype=float)
    scale = np.linalg.norm(reference)
    diff = np.linalg.norm(values - reference)
    return diff / scale if scale > 0.0 else diff


def format_case_id(index):
    """Sweep case identifier, 1-based like the run matrices."""
    return f"case_{index + 1:02d}"
