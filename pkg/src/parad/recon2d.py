"""Fast 2D reconstruction of Radon projections from circular-aperture data.

Pipeline: circular-harmonic and temporal Fourier analysis of g, division by
Hankel functions, summation over harmonics with an inverse transform in rho,
anti-differentiation in tau and completion by the antipodal symmetry
Rf(tau, w) = Rf(-tau, -w).

Fourier convention in time: h^(rho) = int h(t) e^{i rho t} dt, with inverse
h(t) = (1/2pi) int h^(rho) e^{-i rho t} d rho.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import make_interp_spline

from .geometry import AcquisitionGeometry, nu_angle_2d, smoothstep6, valid_tau_upper
from .grids_io import Axis, GridArray
from .specfun import hankel1, inv_hankel1

DIRECT, MIRRORED, ZERO = 0, 1, 2


@dataclass
class HarmonicSpectrum2D:
    """Spectra g^_k(rho) on FFT-ordered grids.

    ``base`` has shape (n_psi, n_rho) with rows in FFT harmonic order;
    ``fine`` maps a low harmonic k to its spectrum on the refined rho-grid.
    """

    base: np.ndarray
    dt: float
    n_t: int
    fine: dict = field(default_factory=dict)
    oversample: int = 1

    @property
    def n_harmonics(self):
        return self.base.shape[0]

    @property
    def harmonics(self):
        n = self.n_harmonics
        return np.fft.fftfreq(n, 1.0 / n).astype(int)

    def rho(self, n_rho=None):
        n = self.base.shape[1] if n_rho is None else n_rho
        return 2.0 * np.pi * np.fft.fftfreq(n, self.dt)


def time_transform(values, dt, n_pad, axis=0):
    """int h(t) e^{i rho_n t} dt by a zero-padded DFT, rho_n = 2 pi n / (n_pad dt)."""
    return dt * n_pad * np.fft.ifft(values, n=n_pad, axis=axis)


def smooth_extension(values, dt, length=0.2, degree=3, n_fit=8, rel_tol=1e-12):
    """Continue data that stop abruptly at the last time sample.

    A least-squares polynomial through the last ``n_fit`` samples is
    continued over ``length`` and faded out with the C^6 smoothstep. Values
    at times tau <= t_end - 1 of the reconstruction do not depend on data
    after t_end, so any continuation is admissible; a smooth one avoids the
    singularity a hard stop would put at the edge of the valid region.
    Data that already vanish at the end are returned unchanged.
    """
    values = np.asarray(values, dtype=float)
    scale = np.max(np.abs(values))
    if scale == 0 or np.max(np.abs(values[-1])) <= rel_tol * scale:
        return values
    n_ext = int(round(length / dt))
    tail = values[-n_fit:].reshape(n_fit, -1)
    fit_t = np.arange(1 - n_fit, 1) * dt / length
    coef, *_ = np.linalg.lstsq(np.vander(fit_t, degree + 1), tail, rcond=None)
    ext_t = np.arange(1, n_ext + 1) * dt / length
    ext = (np.vander(ext_t, degree + 1) @ coef) * (1.0 - smoothstep6(ext_t))[:, None]
    return np.concatenate([values, ext.reshape((n_ext,) + values.shape[1:])], axis=0)


def analyze(wave, pad=4, oversample=32, n_low=4, extend=True):
    """g^_k(rho) = (1/2pi) int int g(t, psi) e^{-ik psi} e^{i rho t} dpsi dt.

    The time axis is zero-padded to ``pad * (n_t - 1)`` samples; harmonics
    with |k| <= n_low get a further ``oversample``-fold refined rho-grid.
    With ``extend`` data cut off abruptly are first continued smoothly
    (see :func:`smooth_extension`).
    """
    g = np.asarray(wave.data, dtype=float)
    if g.ndim != 2:
        raise ValueError("analyze expects (t, psi) data")
    if extend:
        g = smooth_extension(g, wave.axes[0].step)
    n_t, n_psi = g.shape
    dt = wave.axes[0].step
    coeffs_t = np.fft.fft(g, axis=1) / n_psi
    n_rho = pad * (n_t - 1)
    base = time_transform(coeffs_t, dt, n_rho, axis=0).T.copy()
    fine = {}
    if oversample > 1:
        for k in range(-n_low, n_low + 1):
            fine[k] = time_transform(coeffs_t[:, k % n_psi], dt, oversample * n_rho)
    return HarmonicSpectrum2D(base=base, dt=dt, n_t=n_t, fine=fine, oversample=oversample)


def multiplier_2d(k, rho, second_kind=False):
    """(4/i) i^|k| / H_|k|(|rho|) for rho > 0, conjugated for rho < 0, 0 at rho = 0.

    ``second_kind=True`` swaps in the Hankel function of the second kind,
    a deliberately wrong variant used for fault injection.
    """
    rho = np.asarray(rho, dtype=float)
    k = abs(int(k))
    out = np.zeros(rho.shape, dtype=complex)
    pos = rho != 0
    if not np.any(pos):
        return out
    r = np.abs(rho[pos])
    inv_h = inv_hankel1(k, r)
    if second_kind:
        inv_h = np.conj(inv_h)
    m = (4.0 / 1j) * (1j ** k) * inv_h
    out[pos] = np.where(rho[pos] > 0, m, np.conj(m))
    return out


def _apply_multiplier(spec_row, k, rho, second_kind):
    out = multiplier_2d(k, rho, second_kind) * spec_row
    n = len(rho)
    if n % 2 == 0:
        out[n // 2] = 0.0
    return out


def divide(spectrum, kmax=None, second_kind=False):
    """b_k(rho) = (4/i) i^|k| g^_k(rho) / H_|k|(rho), harmonics |k| > kmax zeroed."""
    n = spectrum.n_harmonics
    if kmax is None:
        kmax = n // 2 - 1
    rho = spectrum.rho()
    base = np.zeros_like(spectrum.base)
    for row, k in enumerate(spectrum.harmonics):
        if abs(k) <= kmax:
            base[row] = _apply_multiplier(spectrum.base[row], k, rho, second_kind)
    fine = {}
    for k, row in spectrum.fine.items():
        if abs(k) <= kmax:
            fine[k] = _apply_multiplier(row, k, spectrum.rho(len(row)), second_kind)
    return HarmonicSpectrum2D(base=base, dt=spectrum.dt, n_t=spectrum.n_t, fine=fine,
                              oversample=spectrum.oversample)


def tau_axis(n_tau):
    return Axis.uniform("tau", -1.0, 2.0 / (n_tau - 1))


def inverse_time_transform(values, dt, n_tau, tau_step, tau0=-1.0):
    """(1/2pi) int h^(rho) e^{-i rho tau} d rho at tau_i = tau0 + i tau_step.

    ``values`` holds FFT-ordered spectra along the last axis; tau_step must
    be an integer multiple of dt.
    """
    n = values.shape[-1]
    stride = int(round(tau_step / dt))
    if stride < 1 or abs(stride * dt - tau_step) > 1e-9 * tau_step:
        raise ValueError("tau step must be an integer multiple of the time step")
    if stride * (n_tau - 1) >= n:
        raise ValueError("rho-grid too coarse for the requested tau range")
    rho = 2.0 * np.pi * np.fft.fftfreq(n, dt)
    full = np.fft.fft(values * np.exp(-1j * rho * tau0), axis=-1) / (n * dt)
    return full[..., : stride * (n_tau - 1) + 1 : stride]


def native_tau_count(dt):
    """Number of tau samples on [-1, 1] with spacing dt."""
    n = 2.0 / dt
    if abs(n - round(n)) > 1e-9 * n:
        raise ValueError("time step must divide 2")
    return int(round(n)) + 1


def synthesize_sinogram(spectrum, n_tau=None, imag_tol=None):
    """d/dtau Rf(tau, w) on tau in [-1, 1] x n_psi uniform directions.

    By default tau is sampled with the data's time step.
    """
    n_tau = native_tau_count(spectrum.dt) if n_tau is None else n_tau
    step = 2.0 / (n_tau - 1)
    coeffs = inverse_time_transform(spectrum.base, spectrum.dt, n_tau, step)
    for k, row in spectrum.fine.items():
        coeffs[k % spectrum.n_harmonics] = inverse_time_transform(row, spectrum.dt, n_tau, step)
    n = spectrum.n_harmonics
    values = n * np.fft.ifft(coeffs, axis=0).T
    imag = float(np.linalg.norm(values.imag) / max(np.linalg.norm(values.real), 1e-300))
    if imag_tol is not None and imag > imag_tol:
        raise ArithmeticError(f"imaginary residue {imag:.3g} exceeds {imag_tol}")
    axes = [tau_axis(n_tau), Axis.uniform("varpi", 0.0, 2.0 * np.pi / n)]
    return GridArray(data=values.real.copy(), axes=axes,
                     meta={"kind": "radon_derivative", "imag_residue": repr(imag)})


def antidifferentiate(sino, order=3):
    """Integral along tau from -1, anchored at Rf(-1) = 0.

    Integrates the interpolating spline of the given order exactly; order 1
    is the cumulative trapezoidal rule.
    """
    tau = sino.coords("tau")
    anti = make_interp_spline(tau, sino.data, k=order, axis=0).antiderivative()
    data = anti(tau) - anti(tau[0])
    return sino.like(data, {"kind": "radon"})


def decimate_tau(sino, n_tau):
    """Subsample the tau axis to n_tau points on [-1, 1] (integer stride)."""
    n = sino.data.shape[0]
    stride = (n - 1) // (n_tau - 1)
    if stride * (n_tau - 1) != n - 1:
        raise ValueError(f"cannot decimate {n} tau samples to {n_tau}")
    if stride == 1:
        return sino
    axes = [tau_axis(n_tau)] + list(sino.axes[1:])
    return GridArray(data=sino.data[::stride].copy(), axes=axes, meta=sino.meta)


def completion_plan(nu, n_tau, tau_step, geom, antipode):
    """Number of leading direct tau-samples for every direction.

    Each antipodal pair is split once: the member with nu < pi/2 (lower
    index at nu = pi/2) keeps tau <= U(nu) - dtau, its partner supplies the
    mirrored rest. Returns (direct_count, zero_from) arrays; samples at
    index >= zero_from are set to zero (only for the direction nu = pi,
    whose lines beyond U miss the source region).
    """
    n_dir = len(nu)
    tau = -1.0 + tau_step * np.arange(n_tau)
    direct = np.zeros(n_dir, dtype=int)
    zero_from = np.full(n_dir, n_tau, dtype=int)
    tol = 1e-9 * tau_step
    for p in range(n_dir):
        q = antipode[p]
        primary = nu[p] < np.pi / 2 or (nu[p] == np.pi / 2 and p < q)
        if not primary:
            continue
        u = valid_tau_upper(geom, float(nu[p]))
        if u is None:
            count = 0
            u_q = valid_tau_upper(geom, float(nu[q]))
            zero_from[q] = int(np.sum(tau <= u_q + tol))
        else:
            count = int(np.sum(tau <= u - tau_step + tol))
        direct[p] = count
        direct[q] = n_tau - count
    return direct, zero_from


def provenance_map(direct, zero_from, n_tau, antipode):
    """Per-cell codes DIRECT / MIRRORED / ZERO with shape (n_tau, n_dir)."""
    i = np.arange(n_tau)[:, None]
    out = np.where(i < direct[None, :], DIRECT, MIRRORED)
    out = np.where(i >= zero_from[None, :], ZERO, out).astype(np.int8)
    # mirror copies of zeroed cells are zero too
    for q in np.flatnonzero(zero_from < n_tau):
        out[: n_tau - zero_from[q], antipode[q]] = ZERO
    return out


def _fill(data, direct, zero_from, antipode):
    n_tau = data.shape[0]
    out = np.empty_like(data)
    for p in range(data.shape[1]):
        c = direct[p]
        out[:c, p] = data[:c, p]
        # Rf(tau_i, w) = Rf(tau_{n-1-i}, -w)
        out[c:, p] = data[n_tau - 1 - np.arange(c, n_tau), antipode[p]]
    for p in range(data.shape[1]):
        z = zero_from[p]
        if z < n_tau:
            out[z:, p] = 0.0
            out[: n_tau - z, antipode[p]] = 0.0
    return out


def complete(sino, geom):
    """Keep directly reconstructed values, fill the rest by symmetry."""
    n_tau, n_dir = sino.data.shape
    if n_dir % 2:
        raise ValueError("completion needs an even number of directions")
    varpi = sino.coords("varpi")
    nu = nu_angle_2d(varpi)
    antipode = (np.arange(n_dir) + n_dir // 2) % n_dir
    direct, zero_from = completion_plan(nu, n_tau, sino.axes[0].step, geom, antipode)
    data = _fill(sino.data, direct, zero_from, antipode)
    meta = {"completed": "1", "direct_count": ",".join(map(str, direct)),
            "zero_from": ",".join(map(str, zero_from))}
    return sino.like(data, meta)


def sinogram_provenance(sino):
    """Provenance codes of a completed sinogram, from its meta."""
    direct = np.array([int(v) for v in sino.meta["direct_count"].split(",")])
    zero_from = np.array([int(v) for v in sino.meta["zero_from"].split(",")])
    n_dir = sino.data.shape[1]
    antipode = (np.arange(n_dir) + n_dir // 2) % n_dir
    return provenance_map(direct, zero_from, sino.data.shape[0], antipode)


def direct_region(sino, geom):
    """Boolean (tau, varpi) mask of cells with tau <= U(nu) - dtau."""
    tau = sino.coords("tau")
    u = valid_tau_upper(geom, nu_angle_2d(sino.coords("varpi")))
    u = np.where(np.isnan(u), -np.inf, u)
    return tau[:, None] <= u[None, :] - sino.axes[0].step * (1 - 1e-9)


def reconstruct_2d(wave, geom=None, kmax=None, oversample=32, n_low=4, pad=4,
                   n_tau=None, do_complete=True, extend=True):
    """Full pipeline from (reduced) data g to the sinogram Rf(tau, w).

    The derivative is synthesized and integrated with the data's time step,
    then subsampled to ``n_tau`` points on [-1, 1] (default: the geometry's n_t).
    """
    if geom is None:
        geom = AcquisitionGeometry.from_json(wave.meta["geometry"])
    n_tau = geom.n_t if n_tau is None else n_tau
    spectrum = divide(analyze(wave, pad=pad, oversample=oversample, n_low=n_low, extend=extend), kmax)
    rf = decimate_tau(antidifferentiate(synthesize_sinogram(spectrum)), n_tau)
    rf.meta["geometry"] = geom.to_json()
    if not do_complete:
        rf.meta["completed"] = "0"
        return rf
    return complete(rf, geom)


def plane_wave_density_2d(rho, varpi, psi, kmax, second_kind=False):
    """Time-harmonic single-layer density on the unit circle for exp(i rho w.x).

    Returns sum_{|k|<=kmax} (4/i) i^|k| e^{ik(psi - varpi)} / (2 pi H_|k|(rho)).
    """
    psi = np.asarray(psi, dtype=float)
    out = np.zeros(psi.shape, dtype=complex)
    for k in range(-kmax, kmax + 1):
        m = multiplier_2d(k, np.array([rho]), second_kind)[0]
        out += m * np.exp(1j * k * (psi - varpi)) / (2.0 * np.pi)
    return out


def single_layer_2d(density, psi, rho, x):
    """int density(psi) (i/4) H_0(rho |x - y(psi)|) dpsi by the periodic trapezoid rule."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.stack([np.cos(psi), np.sin(psi)], axis=-1)
    dist = np.linalg.norm(x[:, None, :] - y[None, :, :], axis=-1)
    kernel = 0.25j * hankel1(0, rho * dist)
    return kernel @ density * (2.0 * np.pi / len(psi))
