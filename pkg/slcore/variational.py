from typing import Optional
import logging

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline

from common.exceptions import NonAdmissibleTrial
from .problems import SchrodingerForm

logger = logging.getLogger(__name__)


def rayleigh_quotient(form: SchrodingerForm, zeta: np.ndarray, v: np.ndarray,
                      boundary_tol: float = 1e-8) -> float:
    """
    Rayleigh quotient (int v'**2 + q v**2) / int v**2 of a trial function.

    Args:
        form: Schrodinger form
        zeta: Increasing samples covering [0, zeta_plus]
        v: Trial values on zeta
        boundary_tol: Tolerance of the boundary checks, relative to max|v|

    Returns:
        Quotient value

    Raises:
        NonAdmissibleTrial: If v does not vanish at 0 (Dirichlet forms) or does
            not decay at zeta_plus at least like (zeta_plus - zeta)**(1/2)
    """
    zeta = np.asarray(zeta, dtype=float)
    v = np.asarray(v, dtype=float)
    peak = float(np.max(np.abs(v)))
    if peak == 0.0:
        raise NonAdmissibleTrial("Trial function vanishes identically")
    if form.left_slope is None and abs(v[0]) > boundary_tol * peak:
        raise NonAdmissibleTrial(details={'v0': float(v[0])})
    if abs(v[-1]) > boundary_tol * peak:
        raise NonAdmissibleTrial(details={'v_end': float(v[-1])})
    if form.singular:
        _check_decay(form, zeta, v, peak)

    slope = CubicSpline(zeta, v)(zeta, 1)
    depth = form.zeta_plus - zeta
    potential = np.zeros_like(v)
    inside = depth > 0.0
    potential[inside] = np.asarray(form.q(zeta[inside]), dtype=float) * v[inside] ** 2

    numerator = simpson(slope ** 2 + potential, x=zeta)
    if form.left_slope is not None:
        numerator += form.left_slope * v[0] ** 2
    return float(numerator / simpson(v ** 2, x=zeta))


def _check_decay(form: SchrodingerForm, zeta: np.ndarray, v: np.ndarray, peak: float,
                 window: Optional[float] = None) -> None:
    depth = form.zeta_plus - zeta
    window = window or 0.02 * form.zeta_plus
    near = (depth > 0.0) & (depth <= window) & (np.abs(v) > 0.0)
    if np.count_nonzero(near) < 3:
        return
    slope = np.polyfit(np.log(depth[near]), np.log(np.abs(v[near])), 1)[0]
    if slope <= 0.5:
        raise NonAdmissibleTrial("Trial function decays too slowly at the singular end",
                                 details={'decay_exponent': float(slope)})
