"""
Truncated power series and the Frobenius fundamental matrix at the vacuum boundary.

With s = z_plus - z and eta = s**nu p, the oscillation system becomes
s dY/ds = K(s) Y for Y = (w, p), where K is a power series in s whose
coefficients follow from the background through eta_b(s) = s h(s),
rho = s**nu R(s) and c2 = s G(s).
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from common.exceptions import ResonanceUnhandled
from equilibrium.profile import EquilibriumProfile


def series_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.convolve(a, b)[:len(a)]


def series_shift(a: np.ndarray) -> np.ndarray:
    """Multiply by s."""
    return np.concatenate(([0.0], a[:-1]))


def series_reciprocal(a: np.ndarray) -> np.ndarray:
    out = np.zeros_like(a)
    out[0] = 1.0 / a[0]
    for n in range(1, len(a)):
        out[n] = -np.dot(a[1:n + 1], out[n - 1::-1]) / a[0]
    return out


def series_exp(a: np.ndarray) -> np.ndarray:
    out = np.zeros_like(a)
    out[0] = np.exp(a[0])
    k = np.arange(len(a))
    for n in range(1, len(a)):
        out[n] = np.dot(k[1:n + 1] * a[1:n + 1], out[n - 1::-1]) / n
    return out


def series_power(a: np.ndarray, alpha: float) -> np.ndarray:
    """a**alpha for a[0] > 0 by the J.C.P. Miller recurrence."""
    out = np.zeros_like(a)
    out[0] = a[0] ** alpha
    k = np.arange(len(a))
    for n in range(1, len(a)):
        weights = (alpha + 1.0) * k[1:n + 1] - n
        out[n] = np.dot(weights * a[1:n + 1], out[n - 1::-1]) / (n * a[0])
    return out


def series_compose(outer: np.ndarray, inner: np.ndarray) -> np.ndarray:
    """outer(inner(s)) for inner with zero constant term."""
    result = np.zeros_like(inner)
    result[0] = outer[-1] if len(outer) else 0.0
    for coefficient in outer[-2::-1]:
        result = series_mul(result, inner)
        result[0] += coefficient
    return result


@dataclass(frozen=True, eq=False)
class BackgroundSeries:
    """
    Series of the background in s at the vacuum boundary.

    Attributes:
        h: eta_b = s h(s)
        R: rho = s**nu R(s)
        G: c2 = s G(s)
    """
    h: np.ndarray
    R: np.ndarray
    G: np.ndarray

    @property
    def order(self) -> int:
        return len(self.h) - 1


def background_series(profile: EquilibriumProfile, order: int) -> BackgroundSeries:
    """
    Revert g s = F(eta_b) = eta_b phi(eta_b) as a power series.

    phi(eta) = sum E_k (1 + nu/(k + 1)) eta**k with exp(Sigma/c_v) = sum E_k eta**k,
    and h = g / phi(s h) is iterated, each pass fixing one more coefficient.
    """
    size = order + 1
    nu, g, gamma, c_v = profile.nu, profile.g, profile.params.gamma, profile.params.c_v
    exp_sigma = series_exp(np.asarray(profile.law.taylor(order), dtype=float)[:size] / c_v)
    phi = exp_sigma * (1.0 + nu / np.arange(1, size + 1))

    h = np.zeros(size)
    h[0] = g / phi[0]
    for _ in range(size):
        h = g * series_reciprocal(series_compose(phi, series_shift(h)))
    R = series_power(h, nu)
    G = gamma * series_mul(h, series_compose(exp_sigma, series_shift(h)))
    return BackgroundSeries(h=h, R=R, G=G)


def coefficient_series(background: BackgroundSeries, nu: float, g: float, l: float, lam: float) -> np.ndarray:
    """K_m matrices, shape (order + 1, 2, 2), of s dY/ds = K(s) Y."""
    size = background.order + 1
    a = l ** 2 * g / lam
    K = np.zeros((size, 2, 2))
    K[1, 0, 0] = -a
    K[0, 1, 1] = -nu
    K[1, 1, 1] = a
    inverse_r = series_reciprocal(background.R)
    K[:, 0, 1] = series_reciprocal(series_mul(background.R, background.G)) - (l ** 2 / lam) * series_shift(inverse_r)
    K[:, 1, 0] = (l ** 2 * g ** 2 / lam - lam) * series_shift(background.R)
    return K


@dataclass(frozen=True, eq=False)
class FrobeniusSeries:
    """
    Fundamental matrix T (I + sum_m s**m P_m) diag(1, s**-nu) in (w, p) variables.

    Attributes:
        order: Truncation order K
        p_matrices: P_0 = I, P_1, ..., P_K, shape (K + 1, 2, 2)
        k_matrices: Transformed coefficients T^-1 K_m T up to order 2K
        transform: Constant matrix diagonalizing K_0
        exponents: (0, -nu)
        s0: Default evaluation offset from z_plus
        resonance: Integer nu at which the second column is obstructed, or None
    """
    order: int
    p_matrices: np.ndarray
    k_matrices: np.ndarray
    transform: np.ndarray
    exponents: Tuple[float, float]
    s0: float
    resonance: Optional[int] = None

    @property
    def nu(self) -> float:
        return -self.exponents[1]

    def _series(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        powers = s[:, None] ** np.arange(self.order + 1)[None, :]
        return np.einsum('sm,mij->sij', powers, self.p_matrices)

    def first(self, s) -> np.ndarray:
        """(w, p) of the regular solution phi_S1, shape (len(s), 2)."""
        return np.einsum('ij,sj->si', self.transform, self._series(s)[:, :, 0])

    def second(self, s) -> np.ndarray:
        """
        (w, p) of the singular solution phi_S2, shape (len(s), 2).

        Raises:
            ResonanceUnhandled: If the second column is obstructed by an integer nu
        """
        if self.resonance is not None:
            raise ResonanceUnhandled(details={'nu': self.nu, 'order': self.resonance})
        s = np.atleast_1d(np.asarray(s, dtype=float))
        column = np.einsum('ij,sj->si', self.transform, self._series(s)[:, :, 1])
        return column * s[:, None] ** (-self.nu)

    def state(self, s, column: int = 1) -> np.ndarray:
        """(w, eta) of phi_S1 or phi_S2."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        values = self.first(s) if column == 1 else self.second(s)
        return np.column_stack([values[:, 0], s ** self.nu * values[:, 1]])

    def tail_coefficients(self) -> np.ndarray:
        """Coefficients of s**m, m = K+1..2K, left by the truncated series in the recursion."""
        K = self.order
        tail = np.zeros((K, 2, 2))
        for m in range(K + 1, 2 * K + 1):
            for k in range(m - K, min(m, len(self.k_matrices) - 1) + 1):
                tail[m - K - 1] -= self.k_matrices[k] @ self.p_matrices[m - k]
        if self.resonance is not None:
            tail[:, :, 1] = 0.0
        return tail

    def residual(self, s) -> np.ndarray:
        """Max-norm of the truncation residual of the series equation at each s."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        powers = s[:, None] ** np.arange(self.order + 1, 2 * self.order + 1)[None, :]
        values = np.einsum('sm,mij->sij', powers, self.tail_coefficients())
        return np.max(np.abs(values), axis=(1, 2))


def frobenius_series(profile: EquilibriumProfile, l: float, lam: float, order: int, s0: float,
                     background: Optional[BackgroundSeries] = None,
                     require_second: bool = True) -> FrobeniusSeries:
    """
    Solve (m + e_j - e_i) (P_m)_ij = (sum_{k=1..m} K~_k P_{m-k})_ij for m = 1..K.

    The first column never resonates. For integer nu the second column meets
    m = nu; a vanishing right-hand side is accepted with (P_nu)_12 = 0,
    otherwise the column is marked obstructed.

    Raises:
        ResonanceUnhandled: If the second column is obstructed and require_second is set
    """
    nu = profile.nu
    background = background or background_series(profile, 2 * order)
    K = coefficient_series(background, nu, profile.g, l, lam)

    t12 = -K[0, 0, 1] / nu
    transform = np.array([[1.0, t12], [0.0, 1.0]])
    inverse = np.array([[1.0, -t12], [0.0, 1.0]])
    transformed = np.einsum('ij,mjk,kl->mil', inverse, K, transform)

    exponents = np.array([0.0, -nu])
    P = np.zeros((order + 1, 2, 2))
    P[0] = np.eye(2)
    resonance = None
    for m in range(1, order + 1):
        rhs = sum(transformed[k] @ P[m - k] for k in range(1, m + 1))
        for i in range(2):
            for j in range(2):
                denominator = m + exponents[j] - exponents[i]
                if abs(denominator) > 1e-12:
                    P[m, i, j] = rhs[i, j] / denominator
                elif abs(rhs[i, j]) <= 1e-12 * max(1.0, np.max(np.abs(rhs))):
                    P[m, i, j] = 0.0
                else:
                    resonance = m
    if resonance is not None:
        P[:, :, 1] = np.where(np.arange(order + 1)[:, None] == 0, P[:, :, 1], 0.0)
        if require_second:
            raise ResonanceUnhandled(details={'nu': nu, 'order': resonance})

    return FrobeniusSeries(
        order=order, p_matrices=P, k_matrices=transformed, transform=transform,
        exponents=(0.0, -nu), s0=s0, resonance=resonance,
    )
