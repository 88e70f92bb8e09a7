"""Acquisition geometry on the unit circle/sphere.

Covers the detector and time grids, the masked polar cap of an open
aperture, the valid-tau intervals of reduced-data reconstruction and the
C^6 temporal cutoff window.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .specfun import gauss_legendre

FULL = "full"


def smoothstep6(x):
    """Degree-13 smoothstep: 0 for x <= 0, 1 for x >= 1, six vanishing
    derivatives at both ends."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    # S(x) = 1 - S(1 - x); evaluating the lower half only avoids cancellation near 1
    upper = x > 0.5
    z = np.where(upper, 1.0 - x, x)
    # z^7 * sum_n C(6+n, n) C(13, 6-n) (-z)^n
    coeffs = [math.comb(6 + n, n) * math.comb(13, 6 - n) * (-1) ** n for n in range(7)]
    poly = np.zeros_like(z)
    for c in reversed(coeffs):
        poly = poly * z + c
    low = z**7 * poly
    return np.where(upper, 1.0 - low, low)


def smoothstep6_derivative(x):
    x = np.asarray(x, dtype=float)
    inside = (x > 0.0) & (x < 1.0)
    xc = np.clip(x, 0.0, 1.0)
    # d/dx S(x) = C * x^6 (1-x)^6 with C = 13!/(6!6!)
    c = math.factorial(13) / (math.factorial(6) ** 2)
    return np.where(inside, c * xc**6 * (1.0 - xc) ** 6, 0.0)


def cutoff_window(t, t_flat=1.3, t_zero=1.4):
    """1 on [0, t_flat], 0 from t_zero on, C^6 smoothstep blend in between."""
    return 1.0 - smoothstep6((np.asarray(t, dtype=float) - t_flat) / (t_zero - t_flat))


@dataclass(frozen=True)
class AcquisitionGeometry:
    """Unit-radius aperture with detectors on the circle (dim=2) or sphere (dim=3).

    ``mu`` is the half-angle of the unmeasured polar cap or ``"full"`` for a
    closed aperture. In 2D the detectors sit at ``n_psi`` uniform angles; in
    3D on ``n_theta`` uniform azimuths times ``n_phi`` Gauss-Legendre nodes in
    cos(phi).
    """

    dim: int
    mu: object = FULL
    n_t: int = 257
    t_max: float = 2.0
    n_psi: int = 512
    n_theta: int = 512
    n_phi: int = 401

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        if self.mu != FULL:
            mu = float(self.mu)
            if not 0.0 < mu < math.pi / 2:
                raise ValueError("mu must lie in (0, pi/2) or be 'full'")
            object.__setattr__(self, "mu", mu)
        if self.n_t < 2 or self.t_max <= 0:
            raise ValueError("time grid needs n_t >= 2 and t_max > 0")

    @property
    def is_full(self):
        return self.mu == FULL

    @property
    def dt(self):
        return self.t_max / (self.n_t - 1)

    @property
    def times(self):
        return self.dt * np.arange(self.n_t)

    @property
    def support_bound(self):
        """Height of the line/plane bounding the source region from above."""
        if self.is_full:
            return 1.0
        return math.cos(self.mu) - math.sin(self.mu)

    # detector grid

    @property
    def psi(self):
        return 2.0 * np.pi * np.arange(self.n_psi) / self.n_psi

    @property
    def theta(self):
        return 2.0 * np.pi * np.arange(self.n_theta) / self.n_theta

    @property
    def polar_rule(self):
        return gauss_legendre(self.n_phi)

    @property
    def cos_phi(self):
        return self.polar_rule.nodes

    def detector_shape(self):
        return (self.n_psi,) if self.dim == 2 else (self.n_theta, self.n_phi)

    def detector_positions(self):
        """Cartesian detector coordinates, shape detector_shape() + (dim,)."""
        if self.dim == 2:
            return np.stack([np.cos(self.psi), np.sin(self.psi)], axis=-1)
        th = self.theta[:, None]
        x = self.cos_phi[None, :]
        s = np.sqrt(1.0 - x * x)
        return np.stack(np.broadcast_arrays(s * np.cos(th), s * np.sin(th), x), axis=-1)

    def to_json(self):
        d = {"dim": self.dim, "mu": self.mu, "n_t": self.n_t, "t_max": self.t_max}
        if self.dim == 2:
            d["n_psi"] = self.n_psi
        else:
            d.update(n_theta=self.n_theta, n_phi=self.n_phi)
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(**d)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(fh.read())

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json() + "\n")


def standard_geometry_2d(mu=math.pi / 4):
    return AcquisitionGeometry(dim=2, mu=mu, n_t=257, t_max=2.0, n_psi=512)


def standard_geometry_3d(mu=math.pi / 4, n_theta=512, n_phi=401, n_t=257):
    return AcquisitionGeometry(dim=3, mu=mu, n_t=n_t, t_max=2.0, n_theta=n_theta, n_phi=n_phi)


def nu_angle_2d(varpi):
    """Angle between e2 and -omega for omega = (cos varpi, sin varpi)."""
    return np.arccos(np.clip(-np.sin(np.asarray(varpi, dtype=float)), -1.0, 1.0))


def nu_angle_3d(cos_phi_omega):
    """Angle between e3 and -omega, given the polar cosine of omega."""
    return np.arccos(np.clip(-np.asarray(cos_phi_omega, dtype=float), -1.0, 1.0))


def support_interval(geom, omega=None):
    """(T0, T1) for the unit disk/ball; the same for every direction."""
    return -1.0, 1.0


def valid_tau_upper(geom, nu):
    """Upper end U of the interval (-1, U] where direct reconstruction is exact.

    ``nu`` is the angle between the polar axis and -omega. Returns ``None`` for
    the excluded direction nu = 0 of an open aperture (scalar input) and NaN
    there for array input. A closed aperture gives 0 everywhere.
    """
    scalar = np.ndim(nu) == 0
    nu = np.asarray(nu, dtype=float)
    if geom.is_full:
        out = np.zeros_like(nu)
    else:
        mu = geom.mu
        out = np.where(nu <= np.pi / 2,
                       -np.cos(mu - nu) + np.sin(mu),
                       -np.cos(mu + nu) - np.sin(mu))
        out = np.where(nu <= 0.0, np.nan, out)
    if scalar:
        value = float(out)
        return None if math.isnan(value) else value
    return out


def spatial_mask(geom):
    """1 for measured detectors, 0 on the closed polar cap."""
    shape = geom.detector_shape()
    if geom.is_full:
        return np.ones(shape)
    mu = geom.mu
    tol = 1e-12
    if geom.dim == 2:
        psi = geom.psi
        masked = (psi >= np.pi / 2 - mu - tol) & (psi <= np.pi / 2 + mu + tol)
        return np.where(masked, 0.0, 1.0)
    phi = np.arccos(geom.cos_phi)
    masked = phi <= mu + tol
    return np.broadcast_to(np.where(masked, 0.0, 1.0)[None, :], shape).copy()
