"""
Displacement fields built from vertical mode structures.

A term with wavenumber l along h in {x, y} contributes

    standing:     eps a (u(z) sin(lh) e_h + w(z) cos(lh) e_3) sin(sqrt(lambda) t)
    progressive:  eps a (u(z) sin(lh - sqrt(lambda) t) e_h + w(z) cos(lh - sqrt(lambda) t) e_3)
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Callable, Dict, List, Sequence, Tuple
import math

import numpy as np
from scipy.interpolate import CubicSpline

from common.exceptions import ParameterOutOfRange


class FieldKind(str, Enum):
    STANDING = 'standing'
    PROGRESSIVE = 'progressive'


@dataclass(frozen=True, eq=False)
class ModeTerm:
    """
    One mode of a superposition.

    Attributes:
        l: Horizontal wavenumber, 0 for a purely vertical mode
        lam: Eigenvalue, the squared angular frequency
        grid: Heights of the samples, ending at z_plus
        u, w: Horizontal and vertical displacement samples
        amplitude: Relative weight of the term
        direction: 'x' or 'y'
    """
    l: float
    lam: float
    grid: np.ndarray
    u: np.ndarray
    w: np.ndarray
    amplitude: float = 1.0
    direction: str = 'x'

    def __post_init__(self):
        if self.direction not in ('x', 'y'):
            raise ParameterOutOfRange("Mode direction must be 'x' or 'y'", details={'direction': self.direction})
        if self.l < 0.0 or not self.lam > 0.0:
            raise ParameterOutOfRange(details={'l': self.l, 'lambda': self.lam})

    @classmethod
    def from_mode(cls, mode, amplitude: float = 1.0, direction: str = 'x') -> 'ModeTerm':
        """Term of a reconstructed ModeFunction."""
        return cls(l=mode.l, lam=mode.lam, grid=mode.grid, u=mode.u, w=mode.w,
                   amplitude=amplitude, direction=direction)

    @classmethod
    def vertical(cls, mode, amplitude: float = 1.0) -> 'ModeTerm':
        """l = 0 term of a vertical mode function, w scaled to max |w| = 1."""
        w = np.asarray(mode.w, dtype=float)
        return cls(l=0.0, lam=mode.value, grid=mode.grid, u=np.zeros_like(w), w=w / np.max(np.abs(w)),
                   amplitude=amplitude)

    @property
    def frequency(self) -> float:
        return math.sqrt(self.lam)

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.frequency

    @property
    def z_plus(self) -> float:
        return float(self.grid[-1])

    @cached_property
    def u_at(self) -> CubicSpline:
        return CubicSpline(self.grid, self.u)

    @cached_property
    def w_at(self) -> CubicSpline:
        return CubicSpline(self.grid, self.w)

    @property
    def boundary_u(self) -> float:
        return float(self.u[-1])

    def with_lambda(self, lam: float) -> 'ModeTerm':
        """The same vertical structure oscillating at another frequency."""
        return replace(self, lam=lam)


Profiles = Sequence[Tuple[Callable, Callable]]


@dataclass(frozen=True, eq=False)
class PerturbationField:
    """
    Superposition of mode terms with overall amplitude epsilon.

    Attributes:
        terms: Mode terms
        kind: Standing or progressive
        epsilon: Overall amplitude
        x_plus, y_plus: Horizontal periods
    """
    terms: Tuple[ModeTerm, ...]
    kind: FieldKind = FieldKind.STANDING
    epsilon: float = 1e-2
    x_plus: float = 1.0
    y_plus: float = 1.0
    operator_images: Tuple[Tuple[np.ndarray, np.ndarray], ...] = field(default=(), repr=False)

    @property
    def z_plus(self) -> float:
        return self.terms[0].z_plus

    def scaled(self, epsilon: float) -> 'PerturbationField':
        return replace(self, epsilon=epsilon)

    def phases(self, term: ModeTerm, t, h) -> Tuple[np.ndarray, np.ndarray]:
        """Factors multiplying u and w."""
        omega = term.frequency
        if self.kind == FieldKind.PROGRESSIVE:
            phase = term.l * h - omega * t
            return np.sin(phase), np.cos(phase)
        clock = np.sin(omega * t)
        return clock * np.sin(term.l * h), clock * np.cos(term.l * h)

    def evaluate(self, t, x, y, z, profiles: Profiles) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        t, x, y, z = (np.asarray(value, dtype=float) for value in (t, x, y, z))
        shape = np.broadcast(t, x, y, z).shape
        components = [np.zeros(shape) for _ in range(3)]
        for term, (horizontal, vertical) in zip(self.terms, profiles):
            h = x if term.direction == 'x' else y
            sine, cosine = self.phases(term, t, h)
            scale = self.epsilon * term.amplitude
            components[0 if term.direction == 'x' else 1] += scale * horizontal(z) * sine
            components[2] += scale * vertical(z) * cosine
        return tuple(components)

    def displacement(self, t, x, y, z) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(xi1, xi2, xi3) at broadcast (t, x, y, z)."""
        return self.evaluate(t, x, y, z, [(term.u_at, term.w_at) for term in self.terms])

    def operator_image(self, t, x, y, z) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """L xi from the per-term operator samples in operator_images."""
        profiles = [(CubicSpline(term.grid, lu), CubicSpline(term.grid, lw))
                    for term, (lu, lw) in zip(self.terms, self.operator_images)]
        return self.evaluate(t, x, y, z, profiles)

    def strain(self, t, x, z) -> np.ndarray:
        """d xi1/dx on the line y = 0."""
        t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
        total = np.zeros(t.shape)
        for term in self.terms:
            if term.direction != 'x':
                continue
            omega, scale = term.frequency, self.epsilon * term.amplitude * term.l * term.u_at(z)
            if self.kind == FieldKind.PROGRESSIVE:
                total += scale * np.cos(term.l * x - omega * t)
            else:
                total += scale * np.sin(omega * t) * np.cos(term.l * x)
        return total

    def invertibility_margin(self) -> float:
        """Sum of eps a l |u(z_plus)| over x-direction terms."""
        return float(sum(abs(self.epsilon * term.amplitude) * term.l * abs(term.boundary_u)
                         for term in self.terms if term.direction == 'x'))


@dataclass(frozen=True, eq=False)
class BoundarySurface:
    """
    Vibrating vacuum boundary on the line y = 0, sampled on (t, xbar).

    Attributes:
        times: Time grid
        xbar: Eulerian horizontal positions
        x: Lagrangian labels solving xbar = x + xi1(t, x, 0, z_plus), shape (times, xbar)
        zbar: Boundary height z_plus + xi3(t, x, 0, z_plus)
        jacobian: dx/dxbar
        epsilon: Amplitude
        z_plus: Unperturbed height
        iterations: Fixed-point iterations used
    """
    times: np.ndarray
    xbar: np.ndarray
    x: np.ndarray
    zbar: np.ndarray
    jacobian: np.ndarray
    epsilon: float
    z_plus: float
    iterations: int = 0

    @property
    def elevation(self) -> np.ndarray:
        return self.zbar - self.z_plus

    def mean_elevation(self) -> np.ndarray:
        """Per time, the period mean of zbar - z_plus over the Lagrangian label."""
        return np.mean(self.elevation * self.jacobian, axis=1)

    def as_columns(self) -> Dict[str, np.ndarray]:
        times = np.repeat(self.times, self.xbar.size)
        return {'t': times, 'x': self.x.reshape(-1), 'xbar': np.tile(self.xbar, self.times.size),
                'zbar': self.zbar.reshape(-1)}


def snapshot_columns(perturbation: PerturbationField, times: np.ndarray, xs: np.ndarray, zs: np.ndarray) -> Dict[str, np.ndarray]:
    """Long-form (t, x, z, xi1, xi3) samples on the line y = 0."""
    t, x, z = np.meshgrid(times, xs, zs, indexing='ij')
    xi1, _, xi3 = perturbation.displacement(t, x, 0.0, z)
    columns: List[np.ndarray] = [t, x, z, xi1, xi3]
    return dict(zip(('t', 'x', 'z', 'xi1', 'xi3'), (column.reshape(-1) for column in columns)))
