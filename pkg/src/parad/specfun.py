"""Special functions and quadrature rules.

Cylindrical and spherical Bessel/Hankel functions are evaluated through
``scipy.special``; the normalized associated Legendre recurrence, the
spherical harmonics and the Gauss-Legendre rule are implemented here because
the harmonic transforms need them as whole matrices per azimuthal order.
"""

from dataclasses import dataclass

import numpy as np
from scipy import special


@dataclass(frozen=True)
class GaussLegendreRule:
    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.nodes)

    def integrate(self, values, a=-1.0, b=1.0):
        """Integrate samples taken at the nodes mapped to ``[a, b]``."""
        return 0.5 * (b - a) * np.tensordot(self.weights, values, axes=(0, 0))

    def mapped(self, a, b):
        """Nodes and weights for the interval ``[a, b]`` (broadcasts over a, b)."""
        a = np.asarray(a, dtype=float)[..., None]
        b = np.asarray(b, dtype=float)[..., None]
        half = 0.5 * (b - a)
        return 0.5 * (a + b) + half * self.nodes, half * self.weights


def _check_nonneg_order(k):
    k = np.asarray(k)
    if np.any(k < 0) or np.any(k != np.floor(k)):
        raise ValueError("order must be a non-negative integer")
    return k


def bessel_j(k, x):
    """Bessel function of the first kind J_k(x) for integer k >= 0, x >= 0."""
    k = _check_nonneg_order(k)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("bessel_j: x must be >= 0")
    return special.jv(k, x)


def bessel_y(k, x):
    k = _check_nonneg_order(k)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("bessel_y: x must be > 0")
    return special.yv(k, x)


def hankel1(k, x):
    """Hankel function of the first kind H_k^(1)(x) = J_k(x) + i Y_k(x).

    Raises ValueError for x <= 0. Values overflow to complex infinity for
    large k at small x; use :func:`inv_hankel1` when only the reciprocal is
    needed.
    """
    k = _check_nonneg_order(k)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("hankel1: x must be > 0")
    return special.hankel1(k, x)


def inv_hankel1(k, x):
    """1 / H_k^(1)(x), with 0 wherever |H_k^(1)(x)| overflows."""
    h = hankel1(k, x)
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        out = 1.0 / h
    return np.where(np.isfinite(h.real) & np.isfinite(h.imag), out, 0.0)


def spherical_bessel_j(k, x):
    k = _check_nonneg_order(k)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("spherical_bessel_j: x must be >= 0")
    return special.spherical_jn(k, x)


def spherical_hankel1(k, x):
    """Spherical Hankel function h_k^(1)(x) = j_k(x) + i y_k(x), x > 0."""
    k = _check_nonneg_order(k)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("spherical_hankel1: x must be > 0")
    with np.errstate(over="ignore", invalid="ignore"):
        return special.spherical_jn(k, x) + 1j * special.spherical_yn(k, x)


def inv_spherical_hankel1(k, x):
    """1 / h_k^(1)(x), with 0 wherever the Hankel function overflows."""
    h = spherical_hankel1(k, x)
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        out = 1.0 / h
    return np.where(np.isfinite(h.real) & np.isfinite(h.imag), out, 0.0)


def gauss_legendre(n):
    """Gauss-Legendre rule on [-1, 1] with Newton-refined roots of P_n."""
    if n < 1:
        raise ValueError("gauss_legendre needs n >= 1")
    i = np.arange(1, n + 1)
    # Tricomi initial guess, ascending order
    x = -np.cos(np.pi * (i - 0.25) / (n + 0.5)) * (1 - (n - 1) / (8.0 * n**3))
    for _ in range(100):
        p, dp = _legendre_with_derivative(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-16:
            break
    p, dp = _legendre_with_derivative(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    # symmetrize to remove rounding asymmetry
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    return GaussLegendreRule(nodes=x, weights=w)


def _legendre_with_derivative(n, x):
    p0 = np.ones_like(x)
    if n == 0:
        return p0, np.zeros_like(x)
    p1 = x.copy()
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    return p1, dp


def legendre_p(k, x):
    """Ordinary Legendre polynomials P_0..P_k at x; returns shape (k+1, *x.shape)."""
    x = np.asarray(x, dtype=float)
    out = np.empty((k + 1,) + x.shape)
    out[0] = 1.0
    if k >= 1:
        out[1] = x
    for n in range(2, k + 1):
        out[n] = ((2 * n - 1) * x * out[n - 1] - (n - 1) * out[n - 2]) / n
    return out


def normalized_legendre(m, kmax, x):
    """Orthonormal associated Legendre functions for fixed order m >= 0.

    Returns an array of shape ``(kmax - m + 1, len(x))`` whose row ``k - m``
    holds ``Lambda_k^m(x)`` with ``Y_k^m(theta, phi) = Lambda_k^m(cos phi)
    e^{i m theta}`` orthonormal on the unit sphere (Condon-Shortley phase
    included).
    """
    if m < 0 or m > kmax:
        raise ValueError("need 0 <= m <= kmax")
    x = np.asarray(x, dtype=float)
    sin_phi = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    out = np.zeros((kmax - m + 1,) + x.shape)
    pmm = np.full(x.shape, 1.0 / np.sqrt(4.0 * np.pi))
    with np.errstate(under="ignore"):
        for j in range(1, m + 1):
            pmm = -np.sqrt((2.0 * j + 1.0) / (2.0 * j)) * sin_phi * pmm
    out[0] = pmm
    if kmax == m:
        return out
    out[1] = np.sqrt(2.0 * m + 3.0) * x * pmm
    for k in range(m + 2, kmax + 1):
        a = np.sqrt((4.0 * k * k - 1.0) / (k * k - m * m))
        b = np.sqrt(((k - 1.0) ** 2 - m * m) / (4.0 * (k - 1.0) ** 2 - 1.0))
        out[k - m] = a * (x * out[k - m - 1] - b * out[k - m - 2])
    return out


def spherical_harmonic(k, m, theta, phi):
    """Orthonormal spherical harmonic Y_k^m at azimuth theta, polar angle phi.

    Negative orders follow Y_k^{-m} = (-1)^m conj(Y_k^m).
    """
    if k < 0 or abs(m) > k:
        raise IndexError(f"invalid harmonic indices k={k}, m={m}")
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    am = abs(m)
    lam = normalized_legendre(am, k, np.cos(phi))[k - am]
    y = lam * np.exp(1j * am * theta)
    if m < 0:
        y = (-1) ** am * np.conj(y)
    return y
