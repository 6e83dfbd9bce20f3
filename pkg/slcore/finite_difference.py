"""
Finite-difference oracle for SLProblem.

Three-point conservative discretization on a graded mesh with a evaluated at
cell midpoints and b, kappa lumped onto the nodes by quarter-point quadrature.
The generalized problem K w = Lambda M w is symmetrized by the diagonal mass
and handed to a symmetric tridiagonal eigensolver.
"""
from dataclasses import dataclass
from typing import List, Optional, Tuple
import logging

import numpy as np
from scipy.linalg import eigh_tridiagonal

from common.exceptions import MeshTooCoarse
from common.utils import graded_mesh
from .problems import Eigenpair, MeshSpec, SLProblem

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Discretization:
    """Symmetric tridiagonal form of one mesh level."""
    nodes: np.ndarray
    unknowns: slice
    diagonal: np.ndarray
    off_diagonal: np.ndarray
    mass: np.ndarray
    conductance: np.ndarray
    potential: np.ndarray


def discretize(problem: SLProblem, cells: int, power: float) -> Discretization:
    """
    Assemble the mass-symmetrized tridiagonal matrix on a graded mesh.

    Args:
        problem: Sturm-Liouville problem
        cells: Number of mesh cells
        power: Grading exponent toward z = L

    Returns:
        Discretization holding the diagonal, off-diagonal and lumped mass
    """
    nodes = graded_mesh(problem.length, cells, power)
    h = np.diff(nodes)
    a_half = problem.coefficients(nodes[:-1] + 0.5 * h)[0]

    right_quarter = nodes[:-1] + 0.25 * h
    left_quarter = nodes[1:] - 0.25 * h
    _, b_right, kappa_right = problem.coefficients(right_quarter)
    _, b_left, kappa_left = problem.coefficients(left_quarter)

    stiffness = np.zeros(cells + 1)
    stiffness[:-1] += a_half / h
    stiffness[1:] += a_half / h
    coupling = -a_half / h

    mass = np.zeros(cells + 1)
    mass[:-1] += 0.5 * h * kappa_right
    mass[1:] += 0.5 * h * kappa_left
    potential = np.zeros(cells + 1)
    potential[:-1] += 0.5 * h * b_right
    potential[1:] += 0.5 * h * b_left

    if problem.robin is not None:
        potential[0] += float(problem.coefficients(np.array([0.0]))[0][0]) * problem.robin

    first = 0 if problem.robin is not None else 1
    last = cells + 1 if problem.singular and problem.right_end.natural else cells
    unknowns = slice(first, last)

    matrix_diagonal = (stiffness + potential)[unknowns]
    matrix_coupling = coupling[first:last - 1]
    lumped = mass[unknowns]
    scale = np.sqrt(lumped)
    return Discretization(
        nodes=nodes,
        unknowns=unknowns,
        diagonal=matrix_diagonal / lumped,
        off_diagonal=matrix_coupling / (scale[:-1] * scale[1:]),
        mass=lumped,
        conductance=a_half / h,
        potential=potential,
    )


def energy_quotients(disc: Discretization, vectors: np.ndarray) -> np.ndarray:
    """
    Rayleigh quotients of symmetrized eigenvectors evaluated in the energy form
    sum a (dw)**2/h + sum b w**2 over sum kappa w**2.

    The quotients are smooth in the coefficients to rounding level; the
    eigenvalues of the scaled matrix carry an error of order eps times its norm.
    """
    w = np.zeros((disc.nodes.size, vectors.shape[1]))
    w[disc.unknowns] = vectors / np.sqrt(disc.mass)[:, None]
    energy = disc.conductance @ np.diff(w, axis=0) ** 2 + disc.potential @ w ** 2
    return energy / (disc.mass @ w[disc.unknowns] ** 2)


def weighted_residual(disc: Discretization, w: np.ndarray, value: Optional[float] = None) -> float:
    """
    Relative residual |M^(-1/2) (K w - value M w)| / (|value| |M^(1/2) w|) of a
    nodal function on the mesh of ``disc``; value defaults to the energy
    quotient of w.
    """
    w = np.asarray(w, dtype=float)
    if value is None:
        value = float(energy_quotients(disc, (w[disc.unknowns] * np.sqrt(disc.mass))[:, None])[0])
    flux = disc.conductance * np.diff(w)
    image = disc.potential * w
    image[:-1] -= flux
    image[1:] += flux
    unknown = w[disc.unknowns]
    defect = image[disc.unknowns] - value * disc.mass * unknown
    norm = np.sqrt(np.sum(disc.mass * unknown ** 2))
    return float(np.sqrt(np.sum(defect ** 2 / disc.mass)) / max(abs(value) * norm, 1e-300))


def solve_level(problem: SLProblem, n_max: int, cells: int, power: float) -> Tuple[np.ndarray, np.ndarray, Discretization]:
    """
    Smallest n_max eigenvalues and mass-normalized eigenvectors on one mesh.
    """
    disc = discretize(problem, cells, power)
    size = disc.diagonal.size
    if n_max > size // 2:
        raise MeshTooCoarse(f"{cells} cells cannot resolve {n_max} modes", details={'cells': cells, 'n_max': n_max})
    vectors = eigh_tridiagonal(disc.diagonal, disc.off_diagonal, select='i', select_range=(0, n_max - 1))[1]
    return energy_quotients(disc, vectors), vectors, disc


def fd_levels(problem: SLProblem, n_max: int, mesh: MeshSpec) -> List[np.ndarray]:
    """
    Eigenvalues on each dyadic refinement level, coarsest first.
    """
    power = mesh.grading(problem)
    return [solve_level(problem, n_max, mesh.cells * 2 ** level, power)[0] for level in range(mesh.refinements)]


def fd_eigensolve(problem: SLProblem, n_max: int, mesh: MeshSpec) -> List[Eigenpair]:
    """
    Oracle eigenpairs of the finite-difference discretization.

    Eigenvalues from the two finest levels are Richardson-extrapolated; the
    eigenfunctions are those of the finest level.

    Args:
        problem: Sturm-Liouville problem
        n_max: Number of eigenpairs
        mesh: Mesh and refinement settings

    Returns:
        List of n_max Eigenpair, method 'fd'

    Raises:
        MeshTooCoarse: If successive refinements disagree by more than mesh.tolerance
    """
    if n_max < 1:
        return []
    power = mesh.grading(problem)
    levels = []
    for level in range(max(mesh.refinements, 1)):
        values, vectors, disc = solve_level(problem, n_max, mesh.cells * 2 ** level, power)
        levels.append(values)

    extrapolated, estimate = richardson(levels, mesh.tolerance, problem.name)
    logger.debug(f"fd_eigensolve {problem.name}: {len(levels)} levels, finest {disc.nodes.size - 1} cells")

    pairs = []
    scale = np.sqrt(disc.mass)
    for k in range(n_max):
        y = vectors[:, k]
        image = disc.diagonal * y
        image[:-1] += disc.off_diagonal * y[1:]
        image[1:] += disc.off_diagonal * y[:-1]
        residual = float(np.linalg.norm(image - levels[-1][k] * y) / max(abs(levels[-1][k]), 1e-300))

        w = np.zeros(disc.nodes.size)
        w[disc.unknowns] = y / scale
        last = w[disc.unknowns][-1]
        if last < 0.0:
            w = -w
        pairs.append(Eigenpair(
            index=k + 1,
            value=float(extrapolated[k]),
            grid=disc.nodes,
            values=w,
            residual=residual,
            method='fd',
            error_estimate=float(estimate[k]),
        ))
    return pairs


def richardson(levels: List[np.ndarray], tolerance: float, name: str = 'problem') -> Tuple[np.ndarray, np.ndarray]:
    """
    Extrapolate second-order eigenvalues from the two finest dyadic levels.

    Args:
        levels: Eigenvalue arrays, coarsest first
        tolerance: Largest accepted relative change between the two finest levels
        name: Problem label for the error details

    Returns:
        (extrapolated values, error estimates); a single level is returned
        unchanged with NaN estimates

    Raises:
        MeshTooCoarse: If the finest levels disagree by more than tolerance
    """
    if len(levels) < 2:
        return np.asarray(levels[-1], dtype=float), np.full(len(levels[-1]), np.nan)
    coarse, fine = np.asarray(levels[-2], dtype=float), np.asarray(levels[-1], dtype=float)
    change = np.abs(fine - coarse) / np.maximum(np.abs(fine), 1e-300)
    if np.any(change > tolerance):
        raise MeshTooCoarse(details={'problem': name, 'max_change': float(np.max(change))})
    return (4.0 * fine - coarse) / 3.0, np.abs(fine - coarse) / 3.0
