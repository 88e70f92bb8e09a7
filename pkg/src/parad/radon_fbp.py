"""Filtered backprojection for 2D sinograms over the full circle of directions."""

import numpy as np

from .grids_io import Axis, GridArray


def ramp_filter(n_tau, step, taper_start=0.5, pad_to=None):
    """Frequency response |sigma| of the discrete ramp filter, Hann-tapered.

    Built from the band-limited spatial kernel (1/(4 h^2) at 0, -1/(pi n h)^2
    at odd n) so that the DC response is right on the padded grid. The Hann
    roll-off runs from ``taper_start`` times Nyquist down to zero at Nyquist;
    ``taper_start=0`` gives the classical full-band Hann filter.
    """
    n = pad_to or max(64, int(2 ** np.ceil(np.log2(2 * n_tau))))
    idx = np.concatenate([np.arange(0, n // 2), np.arange(-n // 2, 0)])
    kernel = np.zeros(n)
    kernel[0] = 0.25 / step**2
    odd = idx % 2 == 1
    kernel[odd] = -1.0 / (np.pi * idx[odd] * step) ** 2
    # kernel transform is the ramp in cycles; 2 pi converts to angular frequency
    response = 2.0 * np.pi * step * np.real(np.fft.fft(kernel))
    f = np.abs(np.fft.fftfreq(n)) / 0.5
    ramp_off = np.clip((f - taper_start) / (1.0 - taper_start), 0.0, 1.0)
    return response * 0.5 * (1.0 + np.cos(np.pi * ramp_off))


def filter_projections(data, step, taper_start=0.5, upsample=4, margin=0.5):
    """Ramp-filter every column of a (tau, angle) array along tau.

    The filtered projections have slowly decaying tails outside the
    sinogram's tau range; they are returned on the range widened by
    ``margin`` on both sides, on a grid refined ``upsample`` times
    (band-limited interpolation). Returns (offset, values) where ``offset``
    is the number of fine samples before the first tau node.
    """
    n_tau = data.shape[0]
    resp = ramp_filter(n_tau, step, taper_start)
    n = len(resp)
    spectrum = np.fft.fft(data, n=n, axis=0) * resp[:, None]
    big = np.zeros((n * upsample,) + data.shape[1:], dtype=complex)
    half = n // 2
    big[:half] = spectrum[:half]
    big[-half:] = spectrum[-half:]
    q = np.real(np.fft.ifft(big, axis=0)) * upsample
    offset = int(np.ceil(margin / step)) * upsample
    if (n_tau - 1) * upsample + 2 * offset >= len(q):
        raise ValueError("padding too short for the requested margin")
    q = np.roll(q, offset, axis=0)
    return offset, q[: (n_tau - 1) * upsample + 1 + 2 * offset]


def image_grid(n_pixels):
    """Cell-centre coordinates (n, n, 2) covering [-1, 1]^2, [..., 0] = x."""
    x = -1.0 + (np.arange(n_pixels) + 0.5) * 2.0 / n_pixels
    xx, yy = np.meshgrid(x, x)
    return np.stack([xx, yy], axis=-1)


def fbp(sino, n_pixels=512, taper_start=0.5, upsample=4):
    """Recover f on an n_pixels^2 grid of cell centres covering [-1, 1]^2.

    f(x) = (1/(4 pi)) int_0^{2 pi} q(x.w, w) dvarpi with q the ramp-filtered
    projection, evaluated by linear interpolation in tau.
    """
    data = np.asarray(sino.data, dtype=float)
    if sino.meta.get("completed") == "0" or not np.all(np.isfinite(data)):
        raise ValueError("fbp needs a completed sinogram")
    tau = sino.coords("tau")
    varpi = sino.coords("varpi")
    step = sino.axes[0].step
    offset, q = filter_projections(data, step, taper_start, upsample)
    tq = tau[0] + (np.arange(q.shape[0]) - offset) * step / upsample
    grid = image_grid(n_pixels)
    xx, yy = grid[..., 0], grid[..., 1]
    image = np.zeros((n_pixels, n_pixels))
    for j, w in enumerate(varpi):
        s = xx * np.cos(w) + yy * np.sin(w)
        image += np.interp(s, tq, q[:, j], left=0.0, right=0.0)
    image *= (2.0 * np.pi / len(varpi)) / (4.0 * np.pi)
    h = 2.0 / n_pixels
    axes = [Axis.uniform("y", -1.0 + 0.5 * h, h), Axis.uniform("x", -1.0 + 0.5 * h, h)]
    return GridArray(data=image, axes=axes, meta={"kind": "image"})
