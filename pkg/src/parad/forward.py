"""Boundary pressure data g(t, y) for a phantom, plus the 2D inverse Abel step.

In 3D the data follow in closed form from the spherical means of each ball.
In 2D they are the time derivative of the Abel-type integral of circular
means; the derivative is taken under the integral sign, so no numerical
differentiation in t is needed.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy import fft as sfft
from scipy.interpolate import make_interp_spline

from .geometry import cutoff_window, spatial_mask
from .grids_io import Axis, GridArray
from .phantom import _ball_circular_moment_rate
from .specfun import gauss_legendre


def worker_count():
    """Worker cap from PARAD_THREADS (default: number of CPUs)."""
    try:
        n = int(os.environ.get("PARAD_THREADS", "0"))
    except ValueError:
        n = 0
    return max(1, n or (os.cpu_count() or 1))


def _map(fn, items):
    items = list(items)
    n = min(worker_count(), len(items))
    if n <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def wave_axes(geom):
    axes = [Axis.uniform("t", 0.0, geom.dt)]
    if geom.dim == 2:
        axes.append(Axis.uniform("psi", 0.0, 2.0 * np.pi / geom.n_psi))
    else:
        axes.append(Axis.uniform("theta", 0.0, 2.0 * np.pi / geom.n_theta))
        axes.append(Axis.explicit("cosphi", geom.cos_phi))
    return axes


def wave_data(values, geom, **meta):
    m = {"kind": "wave", "geometry": geom.to_json(), "cutoff": "0", "mask": "0", "noise": "0"}
    m.update({k: str(v) for k, v in meta.items()})
    return GridArray(data=values, axes=wave_axes(geom), meta=m)


def _check_detectors_outside(phantom, positions):
    for b in phantom.balls:
        d = np.linalg.norm(positions - np.asarray(b.center), axis=-1)
        if np.min(d) <= b.radius:
            raise ValueError("phantom support touches the detector surface")


def synthesize_3d(phantom, geom, chunk=32):
    """g(t, y) on the (t, theta, cosphi) grid from the closed-form spherical means."""
    if geom.dim != 3 or phantom.dim != 3:
        raise ValueError("synthesize_3d needs 3D phantom and geometry")
    t = geom.times
    pos = geom.detector_positions()  # (n_theta, n_phi, 3)
    _check_detectors_outside(phantom, pos)
    out = np.zeros((geom.n_t, geom.n_theta, geom.n_phi))

    def work(start):
        sl = slice(start, min(start + chunk, geom.n_theta))
        block = np.zeros((geom.n_t,) + pos[sl].shape[:2])
        for b in phantom.balls:
            d = np.linalg.norm(pos[sl] - np.asarray(b.center), axis=-1)[None]
            tt = t[:, None, None]
            block += ((d + tt) * b.profile(d + tt) - (tt - d) * b.profile(np.abs(tt - d))) / (2.0 * d)
        out[:, sl] = block

    _map(work, range(0, geom.n_theta, chunk))
    return wave_data(out, geom)


def _clenshaw(coeffs, x):
    """Chebyshev series sum_k coeffs[k] T_k(x); coeffs broadcast against x."""
    b1 = np.zeros_like(x)
    b2 = np.zeros_like(x)
    for c in coeffs[:0:-1]:
        b1, b2 = c + 2.0 * x * b1 - b2, b1
    return coeffs[0] + x * b1 - b2


def _cheb_coefficients(samples):
    """Chebyshev coefficients from samples at first-kind nodes (last axis)."""
    n = samples.shape[-1]
    c = sfft.dct(samples[..., ::-1], type=2, axis=-1) / n
    c[..., 0] *= 0.5
    return c


def _ball_wave_2d(ball, d, t, n_cheb, alpha_rule):
    """g(t) at detector distances d from one ball's centre; shape (n_t, n_det).

    g(t) = int_0^{pi/2} sin(a) D(t sin a) da with D(r) = d/dr [r * mean(r)].
    D is tabulated per detector as a Chebyshev series on each of the three
    r-intervals between the tangency radii d -+ a, d -+ a_in, where it is
    analytic.
    """
    a, a_in = ball.radius, ball.inner
    breaks = [d - a, d - a_in, d + a_in, d + a]
    k = np.arange(n_cheb)
    xc = np.cos(np.pi * (k + 0.5) / n_cheb)[::-1]
    t_safe = np.where(t > 0, t, 1.0)[:, None]
    g = np.zeros((len(t), len(d)))
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        r = mid[:, None] + half[:, None] * xc
        coeffs = _cheb_coefficients(_ball_circular_moment_rate(ball, d[:, None], r))
        coeffs = np.moveaxis(coeffs, -1, 0)[:, None, :, None]  # (n_cheb, 1, n_det, 1)
        r_lo = np.clip(lo[None, :], 0.0, t[:, None])
        r_hi = np.clip(hi[None, :], 0.0, t[:, None])
        active = (r_hi > r_lo) & (t[:, None] > 0)
        s_lo = np.arcsin(np.clip(r_lo / t_safe, 0.0, 1.0))
        s_hi = np.arcsin(np.clip(r_hi / t_safe, 0.0, 1.0))
        alpha, w = alpha_rule.mapped(s_lo, s_hi)
        x = (t_safe[..., None] * np.sin(alpha) - mid[None, :, None]) / half[None, :, None]
        vals = _clenshaw(coeffs, np.clip(x, -1.0, 1.0))
        g += np.where(active, np.sum(w * np.sin(alpha) * vals, axis=-1), 0.0)
    return g


def synthesize_2d(phantom, geom, n_cheb=32, n_alpha=16):
    """g(t, psi) for a 2D phantom on the geometry's (t, psi) grid."""
    if geom.dim != 2 or phantom.dim != 2:
        raise ValueError("synthesize_2d needs 2D phantom and geometry")
    t = geom.times
    pos = geom.detector_positions()
    _check_detectors_outside(phantom, pos)
    rule = gauss_legendre(n_alpha)

    def work(ball):
        d = np.linalg.norm(pos - np.asarray(ball.center), axis=-1)
        return _ball_wave_2d(ball, d, t, n_cheb, rule)

    out = np.zeros((geom.n_t, geom.n_psi))
    for part in _map(work, phantom.balls):
        out += part
    return wave_data(out, geom)


def wave_2d_at(phantom, y, t, n_cheb=32, n_alpha=16):
    """g(t, y) for arbitrary detector points y (n, 2) and times t (n_t,)."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    t = np.asarray(t, dtype=float)
    rule = gauss_legendre(n_alpha)
    out = np.zeros((len(t), len(y)))
    for ball in phantom.balls:
        d = np.linalg.norm(y - np.asarray(ball.center), axis=-1)
        out += _ball_wave_2d(ball, d, t, n_cheb, rule)
    return out


def inverse_abel(wave, n_quad=512, spline_order=7):
    """Circular integrals I(r, y) = 4 r int_0^r g(t, y) / sqrt(r^2 - t^2) dt.

    Uses t = r sin(beta) and Gauss-Legendre in beta; g is interpolated in t
    with a spline of the given order. The r-grid equals the data's t-grid.
    """
    t = wave.coords("t")
    g = np.asarray(wave.data)
    spline = make_interp_spline(t, g, k=spline_order, axis=0)
    rule = gauss_legendre(n_quad)
    beta, w = rule.mapped(0.0, np.pi / 2)
    r = t
    samples = spline((r[:, None] * np.sin(beta)[None, :]).ravel())
    samples = samples.reshape((len(r), len(beta)) + g.shape[1:])
    integral = np.tensordot(w, samples, axes=(0, 1))
    out = 4.0 * r.reshape((-1,) + (1,) * (g.ndim - 1)) * integral
    axes = [Axis.uniform("r", wave.axes[0].start, wave.axes[0].step)] + list(wave.axes[1:])
    return GridArray(data=out, axes=axes, meta=dict(wave.meta, kind="circular_integrals"))


def reduce(wave, geom, temporal=True, spatial=True, noise_level=0.0, seed=0,
           t_flat=1.3, t_zero=1.4):
    """Apply the cap mask, the temporal cutoff and scaled Gaussian noise.

    Noise is drawn i.i.d. on the measured samples (unmasked detectors and
    times where the cutoff is nonzero) and scaled so that its L2 norm equals
    ``noise_level`` times the norm of the reduced data.
    """
    data = np.array(wave.data, dtype=float, copy=True)
    n_t = data.shape[0]
    det_shape = data.shape[1:]
    keep_det = np.ones(det_shape)
    keep_t = np.ones(n_t)
    if spatial:
        keep_det = spatial_mask(geom)
        data *= keep_det[None]
    if temporal:
        keep_t = cutoff_window(wave.coords("t"), t_flat, t_zero)
        data *= keep_t.reshape((-1,) + (1,) * len(det_shape))
    if noise_level > 0:
        rng = np.random.default_rng(seed)
        kept = (keep_t > 0).reshape((-1,) + (1,) * len(det_shape)) & (keep_det > 0)[None]
        noise = rng.standard_normal(data.shape) * kept
        data = data + noise * (noise_level * np.linalg.norm(data) / np.linalg.norm(noise))
    meta = {
        "mask": str(int(bool(spatial))) if spatial else wave.meta.get("mask", "0"),
        "cutoff": f"{t_flat},{t_zero}" if temporal else wave.meta.get("cutoff", "0"),
        "noise": f"{noise_level},{seed}" if noise_level > 0 else wave.meta.get("noise", "0"),
    }
    return wave.like(data, meta)
