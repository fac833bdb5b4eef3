"""
ITU-R P.838-3 rain coefficient regression.

Evaluates the (k, a) pair of the specific-attenuation power law
gamma_R = k * R^a (dB/km, R in mm/h) for a carrier frequency in 1-1000 GHz.
Used to (re)generate the coefficient table of the scenario file.
"""

from enum import Enum
from typing import Dict, Iterable, List, Tuple

import numpy as np

from core.exceptions import DomainError

class Polarization(str, Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"
    CIRCULAR = "circular"

# (a_j, b_j, c_j) Gaussian terms followed by (m, c) of the linear term
_K_TERMS = {
    Polarization.HORIZONTAL: (
        np.array([-5.33980, -0.35351, -0.23789, -0.94158]),
        np.array([-0.10008, 1.26970, 0.86036, 0.64552]),
        np.array([1.13098, 0.45400, 0.15354, 0.16817]),
        -0.18961, 0.71147
    ),
    Polarization.VERTICAL: (
        np.array([-3.80595, -3.44965, -0.39902, 0.50167]),
        np.array([0.56934, -0.22911, 0.73042, 1.07319]),
        np.array([0.81061, 0.51059, 0.11899, 0.27195]),
        -0.16398, 0.63297
    ),
}

_A_TERMS = {
    Polarization.HORIZONTAL: (
        np.array([-0.14318, 0.29591, 0.32177, -5.37610, 16.1721]),
        np.array([1.82442, 0.77564, 0.63773, -0.96230, -3.29980]),
        np.array([-0.55187, 0.19822, 0.13164, 1.47828, 3.43990]),
        0.67849, -1.95537
    ),
    Polarization.VERTICAL: (
        np.array([-0.07771, 0.56727, -0.20238, -48.2991, 48.5833]),
        np.array([2.33840, 0.95545, 1.14520, 0.791669, 0.791459]),
        np.array([-0.76284, 0.54039, 0.26809, 0.116226, 0.116479]),
        -0.053739, 0.83433
    ),
}

VALID_RANGE_GHZ: Tuple[float, float] = (1.0, 1000.0)

def _regression(terms, log_f: float) -> float:
    a, b, c, m, offset = terms
    return float(np.sum(a * np.exp(-((log_f - b) / c) ** 2)) + m * log_f + offset)

def p838_coefficients(
    freq_ghz: float,
    polarization: Polarization = Polarization.HORIZONTAL,
    elevation_deg: float = 0.0
) -> Tuple[float, float]:
    """
    Rain power-law coefficients at one frequency.

    Args:
        freq_ghz: Carrier frequency (GHz), 1-1000
        polarization: Horizontal, vertical or circular
        elevation_deg: Path elevation; only matters for circular polarization

    Returns:
        (k, a)
    """
    low, high = VALID_RANGE_GHZ
    if not low <= freq_ghz <= high:
        raise DomainError("frequency", freq_ghz, f"{low} <= f <= {high} GHz")

    log_f = np.log10(freq_ghz)
    k_h = 10.0 ** _regression(_K_TERMS[Polarization.HORIZONTAL], log_f)
    k_v = 10.0 ** _regression(_K_TERMS[Polarization.VERTICAL], log_f)
    a_h = _regression(_A_TERMS[Polarization.HORIZONTAL], log_f)
    a_v = _regression(_A_TERMS[Polarization.VERTICAL], log_f)

    if polarization == Polarization.HORIZONTAL:
        return k_h, a_h
    if polarization == Polarization.VERTICAL:
        return k_v, a_v

    # tilt 45 degrees: cos(2 * tau) = 0
    tilt = np.cos(np.radians(elevation_deg)) ** 2 * np.cos(np.radians(90.0))
    k = (k_h + k_v + (k_h - k_v) * tilt) / 2.0
    a = (k_h * a_h + k_v * a_v + (k_h * a_h - k_v * a_v) * tilt) / (2.0 * k)
    return float(k), float(a)

def coefficient_table(
    freqs_ghz: Iterable[float],
    polarization: Polarization = Polarization.HORIZONTAL
) -> List[Dict[str, float]]:
    """Rows of {freq_ghz, rain_k, rain_a} rounded the way the scenario file stores them."""
    rows = []
    for freq in freqs_ghz:
        k, a = p838_coefficients(freq, polarization)
        rows.append({"freq_ghz": float(freq), "rain_k": float(f"{k:.4g}"), "rain_a": round(a, 4)})
    return rows
