"""
Liouville transformation of an SLProblem to its Schrodinger normal form.

With r = sqrt(kappa/a), zeta = int_0^z r dz, m = (a kappa)**(1/4) and v = m w,

    q = b/kappa + (a/kappa) (M'' - M' (log r)' + M'**2),   M = log m,

where primes are z-derivatives. Near a singular end the depth
D = zeta_plus - zeta is integrated in sigma = s**e (s = L - z) so the
integrand stays bounded, and q D**2 is tabulated against D so its limit cq is
built into the interpolant.
"""
from typing import Tuple
import logging

import numpy as np
from scipy.interpolate import CubicSpline

from common.exceptions import DivergentTransform, DomainError
from common.utils import gauss_panels
from .problems import SchrodingerForm, SLProblem

logger = logging.getLogger(__name__)


def log_derivatives(func, z: np.ndarray, step: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    First and second derivatives of log(func) by five-point central differences.

    Args:
        func: Vectorized positive function
        z: Evaluation points
        step: Stencil step per point

    Returns:
        (d log f/dz, d2 log f/dz2)
    """
    offsets = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])[:, None]
    values = np.log(func(z[None, :] + offsets * step[None, :]))
    first = (values[0] - 8.0 * values[1] + 8.0 * values[3] - values[4]) / (12.0 * step)
    second = (-values[0] + 16.0 * values[1] - 30.0 * values[2] + 16.0 * values[3] - values[4]) / (12.0 * step ** 2)
    return first, second


def potential_on(problem: SLProblem, z: np.ndarray, derivative_step: float) -> np.ndarray:
    """Evaluate the Liouville potential q at heights z."""
    length = problem.length
    if problem.singular:
        step = derivative_step * np.minimum(length - z, length)
    else:
        step = np.full_like(z, derivative_step * length)
    a, b, kappa = problem.coefficients(z)
    la1, la2 = log_derivatives(problem.a, z, step)
    lk1, lk2 = log_derivatives(problem.kappa, z, step)
    m1 = 0.25 * (la1 + lk1)
    m2 = 0.25 * (la2 + lk2)
    log_r1 = 0.5 * (lk1 - la1)
    return b / kappa + (a / kappa) * (m2 - m1 * log_r1 + m1 ** 2)


def liouville_transform(problem: SLProblem, table_points: int = 1200,
                        derivative_step: float = 1e-2) -> SchrodingerForm:
    """
    Transform a Sturm-Liouville problem to its Liouville normal form.

    Args:
        problem: Source problem
        table_points: Number of panels of the coordinate and potential tables
        derivative_step: Relative stencil step for the logarithmic derivatives

    Returns:
        SchrodingerForm with the same eigenvalues as the problem

    Raises:
        DivergentTransform: If int_0^L sqrt(kappa/a) dz does not converge
        DomainError: If a or kappa is not positive on the table
    """
    length = problem.length
    exponent = problem.right_end.exponent if problem.singular else 1.0
    if not exponent > 0.0:
        raise DivergentTransform(details={'problem': problem.name, 'exponent': exponent})
    power = 1.0 / exponent

    sigma = np.linspace(0.0, length ** exponent, table_points + 1)
    z_nodes = length - sigma ** power
    z_nodes[-1] = 0.0

    def integrand(t):
        z = length - t ** power
        a, _, kappa = problem.coefficients(z)
        return np.sqrt(kappa / a) * power * t ** (power - 1.0)

    nodes, weights = gauss_panels(sigma, 8)
    panels = np.sum(integrand(nodes) * weights, axis=1)
    if not np.all(np.isfinite(panels)):
        raise DivergentTransform(details={'problem': problem.name})
    depth = np.concatenate([[0.0], np.cumsum(panels)])
    zeta_plus = float(depth[-1])

    a, _, kappa = problem.coefficients(z_nodes[1:])
    if np.any(a <= 0.0) or np.any(kappa <= 0.0):
        raise DomainError("Coefficients a and kappa must be positive", details={'problem': problem.name})

    depth_of_sigma = CubicSpline(sigma, depth)
    sigma_of_depth = CubicSpline(depth, sigma)

    if problem.singular:
        cq = problem.right_end.cq
        scaled = np.concatenate([[cq], potential_on(problem, z_nodes[1:], derivative_step) * depth[1:] ** 2])
        table = CubicSpline(depth, scaled)
        q_first = float(table(0.0, 1))

        def q(zeta):
            d = zeta_plus - np.asarray(zeta, dtype=float)
            return table(d) / d ** 2
        k1 = 0.5 * (0.75 + cq)
        excess = k1 / depth[1:] ** 2 - scaled[1:] / depth[1:] ** 2
    else:
        cq, q_first, k1 = None, 0.0, 0.0
        values = potential_on(problem, z_nodes, derivative_step)
        table = CubicSpline(depth, values)

        def q(zeta):
            return table(zeta_plus - np.asarray(zeta, dtype=float))
        excess = -values
    k0 = 1.0 + max(0.0, float(np.max(excess)))

    def zeta_of_z(z):
        t = np.clip(length - np.asarray(z, dtype=float), 0.0, None) ** exponent
        return zeta_plus - depth_of_sigma(t)

    def z_of_zeta(zeta):
        d = np.clip(zeta_plus - np.asarray(zeta, dtype=float), 0.0, zeta_plus)
        return length - np.clip(sigma_of_depth(d), 0.0, None) ** power

    def weight_quarter(z):
        a, _, kappa = problem.coefficients(z)
        return (a * kappa) ** 0.25

    left_slope = None
    if problem.robin is not None:
        origin = np.array([0.0])
        step = derivative_step * length * np.ones(1)
        la1, _ = log_derivatives(problem.a, origin, step)
        lk1, _ = log_derivatives(problem.kappa, origin, step)
        a0, _, kappa0 = problem.coefficients(origin)
        r0 = float(np.sqrt(kappa0[0] / a0[0]))
        left_slope = (0.25 * float(la1[0] + lk1[0]) + problem.robin) / r0

    logger.debug(f"liouville_transform {problem.name}: zeta_plus={zeta_plus:.10g}, cq={cq}, k0={k0:.4g}")
    return SchrodingerForm(
        zeta_plus=zeta_plus, q=q, cq=cq, q_first=q_first,
        zeta_of_z=zeta_of_z, z_of_zeta=z_of_zeta, weight_quarter=weight_quarter,
        k0=k0, k1=k1, left_slope=left_slope, problem=problem,
    )
