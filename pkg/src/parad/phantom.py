"""Phantoms built from smoothed radial bumps, with exact oracle evaluations.

Each ball has a flat plateau of height ``amplitude`` for radii up to
``radius * (1 - smoothing)`` and falls to zero at ``radius`` through the
degree-13 smoothstep, so the profile is C^6 in the radial variable.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

from .geometry import smoothstep6, smoothstep6_derivative
from .specfun import gauss_legendre

_BLEND_RULE = gauss_legendre(32)
_SMOOTHSTEP_POLY = Polynomial(
    [0.0] * 7 + [math.comb(6 + n, n) * math.comb(13, 6 - n) * (-1) ** n for n in range(7)])


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float
    amplitude: float
    smoothing: float = 0.3

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")
        if not 0.0 < self.smoothing < 1.0:
            raise ValueError("smoothing must lie in (0, 1)")

    @property
    def inner(self):
        return self.radius * (1.0 - self.smoothing)

    @property
    def width(self):
        return self.radius * self.smoothing

    def profile(self, q):
        q = np.asarray(q, dtype=float)
        return self.amplitude * (1.0 - smoothstep6((q - self.inner) / self.width))

    def profile_derivative(self, q):
        q = np.asarray(q, dtype=float)
        return -self.amplitude * smoothstep6_derivative((q - self.inner) / self.width) / self.width

    def radial_moment(self, q):
        """Q(q) = int_0^q s * profile(s) ds (constant beyond the radius)."""
        q = np.clip(np.asarray(q, dtype=float), 0.0, self.radius)
        a_in = self.inner
        plateau = 0.5 * self.amplitude * np.minimum(q, a_in) ** 2
        u = (np.maximum(q, a_in) - a_in) / self.width
        return plateau + self._blend_moment()(u)

    def _blend_moment(self):
        # int over the blend of s * profile(s) ds as a polynomial in u = (s - a_in) / width
        s_of_u = Polynomial([self.inner, self.width])
        profile = self.amplitude * (1.0 - _SMOOTHSTEP_POLY)
        return (s_of_u * profile).integ(lbnd=0.0) * self.width


@dataclass(frozen=True)
class Phantom:
    """Sum of smoothed balls (disks in 2D)."""

    dim: int
    balls: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        balls = tuple(b if isinstance(b, Ball) else Ball(**b) for b in self.balls)
        for b in balls:
            if len(b.center) != self.dim:
                raise ValueError(f"ball center {b.center} does not have dimension {self.dim}")
        object.__setattr__(self, "balls", balls)

    @property
    def extent(self):
        """max |c| + a over balls (Radon projections vanish beyond it)."""
        return max((np.linalg.norm(b.center) + b.radius for b in self.balls), default=0.0)

    def check_support(self, bound):
        """Raise if a ball leaves the unit disk/ball or crosses the height ``bound``."""
        for b in self.balls:
            if np.linalg.norm(b.center) + b.radius >= 1.0:
                raise ValueError(f"ball at {b.center} leaves the unit ball")
            if b.center[-1] + b.radius >= bound:
                raise ValueError(f"ball at {b.center} crosses the support bound {bound:.6g}")

    def to_dict(self):
        return {"dim": self.dim, "balls": [
            {"center": list(b.center), "radius": b.radius,
             "amplitude": b.amplitude, "smoothing": b.smoothing} for b in self.balls]}

    @classmethod
    def from_dict(cls, d):
        return cls(dim=int(d["dim"]), balls=tuple(Ball(**b) for b in d["balls"]))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path, geometry=None):
        with open(path) as fh:
            ph = cls.from_dict(json.load(fh))
        if geometry is not None:
            if geometry.dim != ph.dim:
                raise ValueError("phantom and geometry dimensions differ")
            ph.check_support(geometry.support_bound)
        return ph

    def shifted(self, offset):
        offset = np.asarray(offset, dtype=float)
        return Phantom(self.dim, tuple(
            Ball(tuple(np.asarray(b.center) + offset), b.radius, b.amplitude, b.smoothing)
            for b in self.balls))

    def eval(self, x):
        """Point values; ``x`` has shape (..., dim)."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for b in self.balls:
            q = np.linalg.norm(x - np.asarray(b.center), axis=-1)
            out += b.profile(q)
        return out

    def radon(self, omega, tau):
        """Exact Radon projection Rf(tau, omega); omega (..., dim) unit vectors."""
        omega = np.asarray(omega, dtype=float)
        tau = np.asarray(tau, dtype=float)
        out = np.zeros(np.broadcast_shapes(omega.shape[:-1], tau.shape))
        for b in self.balls:
            p = tau - omega @ np.asarray(b.center)
            out += (_ball_radon_2d if self.dim == 2 else _ball_radon_3d)(b, p)
        return out

    def mean(self, y, r):
        """Unweighted circular (2D) or spherical (3D) mean of f over |x - y| = r."""
        y = np.asarray(y, dtype=float)
        r = np.asarray(r, dtype=float)
        out = np.zeros(np.broadcast_shapes(y.shape[:-1], r.shape))
        for b in self.balls:
            d = np.linalg.norm(y - np.asarray(b.center), axis=-1)
            out += (_ball_circular_mean if self.dim == 2 else _ball_spherical_mean)(b, d, r)
        return out


def radon_projection_oracle(phantom, omega, tau):
    return phantom.radon(omega, tau)


def circular_mean(phantom, y, r):
    if phantom.dim != 2:
        raise ValueError("circular_mean needs a 2D phantom")
    return phantom.mean(y, r)


def spherical_mean(phantom, y, r):
    if phantom.dim != 3:
        raise ValueError("spherical_mean needs a 3D phantom")
    return phantom.mean(y, r)


def _ball_radon_2d(b, p):
    """2 int_0^sqrt(a^2 - p^2) profile(sqrt(p^2 + u^2)) du."""
    p = np.abs(np.asarray(p, dtype=float))
    a, a_in = b.radius, b.inner
    hit = p < a
    pp = np.where(hit, p, 0.0)
    u_in = np.sqrt(np.clip(a_in**2 - pp**2, 0.0, None))
    u_out = np.sqrt(np.clip(a**2 - pp**2, 0.0, None))
    u, w = _BLEND_RULE.mapped(u_in, u_out)
    blend = np.sum(w * b.profile(np.sqrt(pp[..., None] ** 2 + u * u)), axis=-1)
    return np.where(hit, 2.0 * (b.amplitude * u_in + blend), 0.0)


def _ball_radon_3d(b, p):
    """2 pi int_|p|^a q profile(q) dq."""
    p = np.abs(np.asarray(p, dtype=float))
    return 2.0 * np.pi * (b.radial_moment(b.radius) - b.radial_moment(p))


def _ball_spherical_mean(b, d, r):
    d, r = np.broadcast_arrays(np.asarray(d, dtype=float), np.asarray(r, dtype=float))
    safe = (d > 0) & (r > 0)
    dd = np.where(safe, d, 1.0)
    rr = np.where(safe, r, 1.0)
    val = (b.radial_moment(dd + rr) - b.radial_moment(np.abs(dd - rr))) / (2.0 * rr * dd)
    return np.where(safe, val, b.profile(d + r))


def _arc_limits(b, d, r):
    """Polar-angle limits (about the direction to the centre) of the circle's
    arcs inside the plateau and inside the ball."""
    denom = 2.0 * d * r
    c_out = (d * d + r * r - b.radius**2) / denom
    c_in = (d * d + r * r - b.inner**2) / denom
    return np.arccos(np.clip(c_in, -1.0, 1.0)), np.arccos(np.clip(c_out, -1.0, 1.0))


def _ball_circular_mean(b, d, r, rule=_BLEND_RULE):
    d, r = np.broadcast_arrays(np.asarray(d, dtype=float), np.asarray(r, dtype=float))
    safe = (d > 0) & (r > 0)
    dd = np.where(safe, d, 1.0)
    rr = np.where(safe, r, 1.0)
    th_in, th_out = _arc_limits(b, dd, rr)
    th, w = rule.mapped(th_in, th_out)
    q = np.sqrt(np.clip(dd[..., None] ** 2 + rr[..., None] ** 2
                        - 2.0 * dd[..., None] * rr[..., None] * np.cos(th), 0.0, None))
    val = (b.amplitude * th_in + np.sum(w * b.profile(q), axis=-1)) / np.pi
    return np.where(safe, val, b.profile(d + r))


def _ball_circular_moment_rate(b, d, r, rule=_BLEND_RULE):
    """d/dr [r * circular mean] = I'(r) / (2 pi) for one ball (r, d > 0)."""
    d, r = np.broadcast_arrays(np.asarray(d, dtype=float), np.asarray(r, dtype=float))
    th_in, th_out = _arc_limits(b, d, r)
    th, w = rule.mapped(th_in, th_out)
    dd, rr = d[..., None], r[..., None]
    q = np.sqrt(np.clip(dd * dd + rr * rr - 2.0 * dd * rr * np.cos(th), 1e-300, None))
    integrand = b.profile(q) + rr * b.profile_derivative(q) * (rr - dd * np.cos(th)) / q
    return (b.amplitude * th_in + np.sum(w * integrand, axis=-1)) / np.pi


def default_phantom_2d():
    return Phantom.load(_data_path("phantom2d.json"))


def default_phantom_3d():
    return Phantom.load(_data_path("phantom3d.json"))


def _data_path(name):
    from importlib import resources
    return str(resources.files("parad") / "data" / name)
