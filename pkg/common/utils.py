import hashlib
import io
from typing import Any, Dict, Tuple
import logging

import numpy as np
from rest_framework.parsers import JSONParser
from rest_framework.renderers import JSONRenderer
from scipy.integrate import trapezoid

logger = logging.getLogger(__name__)


def sort_keys(data: Any) -> Any:
    """
    Recursively order mapping keys so rendered documents are deterministic.
    """
    if isinstance(data, dict):
        return {key: sort_keys(data[key]) for key in sorted(data)}
    if isinstance(data, (list, tuple)):
        return [sort_keys(item) for item in data]
    if isinstance(data, np.generic):
        return data.item()
    return data


def render_json(data: Dict[str, Any]) -> bytes:
    """
    Render a document with sorted keys and two-space indentation.

    Args:
        data: JSON-compatible mapping

    Returns:
        Encoded document
    """
    return JSONRenderer().render(sort_keys(data), renderer_context={'indent': 2})


def parse_json(raw: bytes) -> Dict[str, Any]:
    """
    Parse a JSON document with the DRF parser.

    Raises:
        rest_framework.exceptions.ParseError: If the document is malformed
    """
    return JSONParser().parse(io.BytesIO(raw))


def config_hash(data: Dict[str, Any]) -> str:
    """
    Compute a stable sha256 hash of a configuration mapping.
    """
    return hashlib.sha256(render_json(data)).hexdigest()


def graded_mesh(length: float, cells: int, power: float = 2.0) -> np.ndarray:
    """
    Build a mesh on [0, length] clustered at the right end.

    Nodes are ``length * (1 - (1 - j/cells)**power)`` so the spacing near
    the right end shrinks like ``cells**-power``.

    Args:
        length: Interval length
        cells: Number of cells
        power: Grading exponent, 1 for a uniform mesh

    Returns:
        Array of ``cells + 1`` increasing nodes
    """
    t = np.linspace(0.0, 1.0, cells + 1)
    return length * (1.0 - (1.0 - t) ** power)


def sign_changes(values: np.ndarray, rtol: float = 0.0) -> int:
    """
    Count strict sign changes in a sample sequence.

    Samples with magnitude below ``rtol * max|values|`` are ignored.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0
    floor = rtol * np.max(np.abs(values))
    signs = np.sign(values[np.abs(values) > floor])
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def fit_power_law(x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    """
    Least-squares fit of ``y = amplitude * x**slope`` in log-log coordinates.

    Returns:
        (slope, amplitude)
    """
    slope, intercept = np.polyfit(np.log(np.asarray(x)), np.log(np.abs(np.asarray(y))), 1)
    return float(slope), float(np.exp(intercept))


def weighted_norm(grid: np.ndarray, weight: np.ndarray, *components: np.ndarray) -> float:
    """
    Return sqrt(integral of (sum of squared components) * weight) by trapezoid rule.
    """
    density = sum(np.asarray(component) ** 2 for component in components) * np.asarray(weight)
    return float(np.sqrt(trapezoid(density, grid)))


def gauss_panels(edges: np.ndarray, points: int = 8) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Legendre nodes and weights on each panel of a partition.

    Args:
        edges: Increasing panel edges
        points: Nodes per panel

    Returns:
        (nodes, weights) arrays of shape (panels, points)
    """
    x, w = np.polynomial.legendre.leggauss(points)
    left, right = edges[:-1, None], edges[1:, None]
    half = 0.5 * (right - left)
    return left + half * (x[None, :] + 1.0), half * w[None, :]
