"""Fast 3D reconstruction of Radon projections from spherical-aperture data.

Detectors sit on n_theta uniform azimuths times Gauss-Legendre nodes in
cos(phi); the reconstructed directions use the same grid. Each azimuthal
order m is processed on its own: FFT in theta, Fourier transform in t,
projection on the normalized Legendre functions, division by rho h_k(rho),
synthesis over degree k and the inverse transform in rho. Only m >= 0 is
computed; negative orders contribute complex conjugates for real data.
"""

from dataclasses import dataclass

import numpy as np

from .geometry import AcquisitionGeometry, nu_angle_3d
from .grids_io import Axis, GridArray
from .recon2d import (_fill, antidifferentiate, completion_plan, decimate_tau,
                      inverse_time_transform, native_tau_count, provenance_map,
                      smooth_extension, tau_axis, time_transform)
from .specfun import gauss_legendre, inv_spherical_hankel1, legendre_p, normalized_legendre, spherical_hankel1


def default_kmax(n_theta, n_phi):
    """Largest degree the grid resolves, capped at 200."""
    return min(n_theta // 2 - 1, n_phi - 1, 200)


def multiplier_3d(k, rho, sign=1):
    """(4 pi / (i rho)) (sign i)^k / h_k(|rho|), conjugated for rho < 0.

    The rho -> 0 limit is used at rho = 0: 4 pi for k = 0 and 0 otherwise.
    ``sign=-1`` gives the (-i)^k variant, kept for fault injection.
    """
    rho = np.asarray(rho, dtype=float)
    out = np.zeros(rho.shape, dtype=complex)
    pos = rho != 0
    if k == 0:
        out[~pos] = 4.0 * np.pi
    if np.any(pos):
        r = np.abs(rho[pos])
        m = (4.0 * np.pi / (1j * r)) * (sign * 1j) ** k * inv_spherical_hankel1(k, r)
        out[pos] = np.where(rho[pos] > 0, m, np.conj(m))
    return out


@dataclass
class HarmonicSpectrum3D:
    """Triangular storage: ``coeffs[m]`` has shape (n_rho, kmax - m + 1), m >= 0."""

    coeffs: list
    dt: float
    kmax: int

    def rho(self):
        return 2.0 * np.pi * np.fft.fftfreq(self.coeffs[0].shape[0], self.dt)


def _theta_spectrum(data):
    """sum_j g(t, theta_j, .) e^{+i m theta_j} for m = 0 .. n_theta/2."""
    return np.conj(np.fft.rfft(data, axis=1))


def analyze_sphere(wave, kmax=None, pad=4, extend=True):
    """g^_{m,k}(rho) = int Y_k^m(y) g^(rho, y) dy for 0 <= m <= k <= kmax.

    Pairs against Y_k^m, not its conjugate. Only m >= 0 is stored; for real
    data g^_{-m,k}(rho) = (-1)^m conj(g^_{m,k}(-rho)).
    """
    g = np.asarray(wave.data, dtype=float)
    n_t, n_theta, n_phi = g.shape
    dt = wave.axes[0].step
    if kmax is None:
        kmax = default_kmax(n_theta, n_phi)
    if kmax > min(n_theta // 2 - 1, n_phi - 1):
        raise ValueError(f"kmax={kmax} too large for a {n_theta}x{n_phi} grid")
    if extend:
        g = smooth_extension(g, dt)
        n_t = g.shape[0]
    x = wave.coords("cosphi")
    w = gauss_legendre(n_phi).weights
    spec_theta = _theta_spectrum(g)
    n_rho = pad * (n_t - 1)
    d_theta = 2.0 * np.pi / n_theta
    coeffs = []
    for m in range(kmax + 1):
        e_hat = time_transform(spec_theta[:, m, :], dt, n_rho)
        lam = normalized_legendre(m, kmax, x)
        coeffs.append(d_theta * (e_hat * w) @ lam.T)
    return HarmonicSpectrum3D(coeffs=coeffs, dt=dt, kmax=kmax)


def divide_sphere(spectrum, kmax=None, sign=1):
    """b_{m,k}(rho) = (4 pi/(i rho)) i^k g^_{m,k}(rho) / h_k(rho); Nyquist node zeroed."""
    kmax = spectrum.kmax if kmax is None else min(kmax, spectrum.kmax)
    rho = spectrum.rho()
    mult = np.stack([multiplier_3d(k, rho, sign) for k in range(spectrum.kmax + 1)], axis=1)
    if len(rho) % 2 == 0:
        mult[len(rho) // 2] = 0.0
    mult[:, kmax + 1:] = 0.0
    coeffs = [c * mult[:, m:] for m, c in enumerate(spectrum.coeffs)]
    return HarmonicSpectrum3D(coeffs=coeffs, dt=spectrum.dt, kmax=spectrum.kmax)


def synthesize_sphere(spectrum, n_theta, cos_phi, n_tau=None):
    """d/dtau Rf(tau, w) = inverse transform of sum_{k,m} b_{m,k}(rho) conj(Y_k^m(w)).

    Directions are (theta_j, cos_phi_l) with n_theta uniform azimuths.
    """
    n_tau = native_tau_count(spectrum.dt) if n_tau is None else n_tau
    step = 2.0 / (n_tau - 1)
    cos_phi = np.asarray(cos_phi, dtype=float)
    half = np.zeros((n_tau, n_theta // 2 + 1, len(cos_phi)), dtype=complex)
    for m, b in enumerate(spectrum.coeffs):
        lam = normalized_legendre(m, spectrum.kmax, cos_phi)
        series = b @ lam
        half[:, m, :] = inverse_time_transform(series.T, spectrum.dt, n_tau, step).T
    # sum over m of A_m e^{-i m theta} with A_{-m} = conj(A_m)
    values = n_theta * np.fft.irfft(np.conj(half), n=n_theta, axis=1)
    axes = [tau_axis(n_tau), Axis.uniform("theta", 0.0, 2.0 * np.pi / n_theta),
            Axis.explicit("cosphi", cos_phi)]
    return GridArray(data=values, axes=axes, meta={"kind": "radon_derivative"})


def antidifferentiate_sphere(sino, order=3):
    return antidifferentiate(sino, order)


def _antipode_index(n_theta, n_phi):
    j, l = np.meshgrid(np.arange(n_theta), np.arange(n_phi), indexing="ij")
    return (((j + n_theta // 2) % n_theta) * n_phi + (n_phi - 1 - l)).ravel()


def complete_sphere(sino, geom):
    """Keep tau <= U(nu) - dtau, fill the rest by Rf(tau, w) = Rf(-tau, -w)."""
    n_tau, n_theta, n_phi = sino.data.shape
    if n_theta % 2:
        raise ValueError("completion needs an even number of azimuths")
    x = sino.coords("cosphi")
    if not np.allclose(x, -x[::-1], atol=1e-14):
        raise ValueError("polar nodes must be symmetric about 0")
    nu = np.broadcast_to(nu_angle_3d(x)[None, :], (n_theta, n_phi)).ravel()
    antipode = _antipode_index(n_theta, n_phi)
    direct, zero_from = completion_plan(nu, n_tau, sino.axes[0].step, geom, antipode)
    flat = sino.data.reshape(n_tau, -1)
    data = _fill(flat, direct, zero_from, antipode).reshape(sino.data.shape)
    meta = {"completed": "1", "direct_count": ",".join(map(str, direct)),
            "zero_from": ",".join(map(str, zero_from))}
    return sino.like(data, meta)


def sphere_provenance(sino):
    direct = np.array([int(v) for v in sino.meta["direct_count"].split(",")])
    zero_from = np.array([int(v) for v in sino.meta["zero_from"].split(",")])
    n_tau, n_theta, n_phi = sino.data.shape
    antipode = _antipode_index(n_theta, n_phi)
    return provenance_map(direct, zero_from, n_tau, antipode).reshape(sino.data.shape)


def reconstruct_3d(wave, geom=None, kmax=None, pad=4, n_tau=None, do_complete=True,
                   extend=True, sign=1):
    """Full pipeline from (reduced) 3D data g to Rf on the detector direction grid."""
    if geom is None:
        geom = AcquisitionGeometry.from_json(wave.meta["geometry"])
    n_tau = geom.n_t if n_tau is None else n_tau
    spectrum = divide_sphere(analyze_sphere(wave, kmax, pad=pad, extend=extend), sign=sign)
    deriv = synthesize_sphere(spectrum, wave.data.shape[1], wave.coords("cosphi"))
    rf = decimate_tau(antidifferentiate_sphere(deriv), n_tau)
    rf.meta["geometry"] = geom.to_json()
    if not do_complete:
        rf.meta["completed"] = "0"
        return rf
    return complete_sphere(rf, geom)


def direct_region_sphere(sino, geom):
    """Boolean mask of cells with tau <= U(nu) - dtau."""
    from .geometry import valid_tau_upper
    tau = sino.coords("tau")
    u = valid_tau_upper(geom, nu_angle_3d(sino.coords("cosphi")))
    u = np.where(np.isnan(u), -np.inf, u)
    mask = tau[:, None] <= u[None, :] - sino.axes[0].step * (1 - 1e-9)
    return np.broadcast_to(mask[:, None, :], sino.data.shape)


def plane_wave_density_3d(rho, omega, y, kmax, sign=1):
    """Time-harmonic single-layer density on the unit sphere for exp(i rho w.x).

    sum_k (4 pi/(i rho)) (sign i)^k / h_k(rho) sum_m conj(Y_k^m(w)) Y_k^m(y),
    with the inner sum (2k+1)/(4 pi) P_k(w.y) by the addition theorem.
    """
    c = np.clip(np.asarray(y, dtype=float) @ np.asarray(omega, dtype=float), -1.0, 1.0)
    p = legendre_p(kmax, c)
    out = np.zeros(c.shape, dtype=complex)
    for k in range(kmax + 1):
        m = multiplier_3d(k, np.array([rho]), sign)[0]
        out += m * (2 * k + 1) / (4.0 * np.pi) * p[k]
    return out


def single_layer_3d(density, y, weights, rho, x):
    """sum_y w(y) density(y) (i rho/4 pi) h_0(rho |x - y|) for points x (n, 3)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    out = np.empty(len(x), dtype=complex)
    for i, xi in enumerate(x):
        dist = np.linalg.norm(y - xi, axis=-1)
        kernel = (1j * rho / (4.0 * np.pi)) * spherical_hankel1(0, rho * dist)
        out[i] = np.sum(weights * density * kernel)
    return out
