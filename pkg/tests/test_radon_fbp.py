import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parad import harness
from parad.grids_io import Axis, GridArray
from parad.phantom import Ball, Phantom
from parad.radon_fbp import fbp, image_grid, ramp_filter


def _sino(data, meta=None):
    n_tau, n_dir = data.shape
    axes = [Axis.uniform("tau", -1.0, 2.0 / (n_tau - 1)), Axis.uniform("varpi", 0.0, 2 * math.pi / n_dir)]
    return GridArray(data=data, axes=axes, meta=meta or {"kind": "radon", "completed": "1"})


def _shifted(phantom, offset):
    return Phantom(phantom.dim, tuple(Ball(tuple(np.add(b.center, offset)), b.radius, b.amplitude, b.smoothing)
                                      for b in phantom.balls))


def _rel_l2(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_ramp_filter_matches_abs_frequency_below_taper():
    n_tau, step = 257, 2.0 / 256
    resp = ramp_filter(n_tau, step)
    n = len(resp)
    sigma = 2 * math.pi * np.abs(np.fft.fftfreq(n, d=step))
    band = (np.abs(np.fft.fftfreq(n)) > 0.02) & (np.abs(np.fft.fftfreq(n)) < 0.2)
    np.testing.assert_allclose(resp[band], sigma[band], rtol=1e-2)
    assert abs(resp[0]) < 1e-3 * np.max(resp)
    assert resp[n // 2] == pytest.approx(0.0, abs=1e-12)


def test_image_grid_cell_centres():
    g = image_grid(4)
    np.testing.assert_allclose(g[0, :, 0], [-0.75, -0.25, 0.25, 0.75])
    np.testing.assert_allclose(g[:, 0, 1], [-0.75, -0.25, 0.25, 0.75])


def test_zero_sinogram_gives_zero_image():
    assert np.all(fbp(_sino(np.zeros((65, 64))), n_pixels=32).data == 0.0)


def test_incomplete_sinogram_rejected():
    with pytest.raises(ValueError):
        fbp(_sino(np.zeros((65, 64)), {"completed": "0"}), n_pixels=16)
    bad = np.zeros((65, 64))
    bad[3, 3] = np.nan
    with pytest.raises(ValueError):
        fbp(_sino(bad), n_pixels=16)


def test_oracle_sinogram_floor(phantom2, oracle_sino2):
    image = fbp(oracle_sino2, n_pixels=512)
    assert _rel_l2(image.data, harness.oracle_image(phantom2, 512).data) <= 0.02


def test_recovered_sinogram_within_twice_the_floor(phantom2, oracle_sino2, sino2):
    ref = harness.oracle_image(phantom2, 512).data
    floor = _rel_l2(fbp(oracle_sino2).data, ref)
    assert _rel_l2(fbp(sino2).data, ref) <= 2 * floor


def test_translation_by_whole_pixels(phantom2):
    n = 128
    h = 2.0 / n
    base = _sino(np.zeros((257, 256)))
    a = harness.oracle_sinogram_2d(phantom2, base)
    b = harness.oracle_sinogram_2d(_shifted(phantom2, (2 * h, -3 * h)), base)
    img_a, img_b = fbp(a, n).data, fbp(b, n).data
    # rows are y, columns are x
    moved = np.roll(np.roll(img_a, 2, axis=1), -3, axis=0)
    inner = (slice(8, -8), slice(8, -8))
    assert _rel_l2(img_b[inner], moved[inner]) <= 2e-2


@settings(max_examples=4, deadline=None)
@given(st.integers(0, 3))
def test_quarter_turn_rotates_image_exactly(quarter):
    rng = np.random.default_rng(quarter)
    data = rng.standard_normal((33, 64))
    img = fbp(_sino(data), n_pixels=24).data
    turned = fbp(_sino(np.roll(data, 16 * quarter, axis=1)), n_pixels=24).data
    # counter-clockwise turn; rows run with increasing y, hence the negative k
    np.testing.assert_allclose(turned, np.rot90(img, k=-quarter), atol=1e-12 * np.max(np.abs(img)))


@settings(max_examples=5, deadline=None)
@given(st.floats(-4, 4), st.floats(-4, 4), st.integers(0, 2**31))
def test_linearity(a, b, seed):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, 33, 32))
    fx, fy = fbp(_sino(x), 16).data, fbp(_sino(y), 16).data
    lhs = fbp(_sino(a * x + b * y), 16).data
    scale = (abs(a) + abs(b) + 1) * max(np.max(np.abs(fx)), np.max(np.abs(fy)))
    assert np.max(np.abs(lhs - (a * fx + b * fy))) <= 1e-12 * scale
