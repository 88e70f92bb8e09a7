"""Acceptance criteria, each at its stated tolerance and time budget."""

import math
import os
import time

import numpy as np
import pytest

from parad import forward, harness, recon2d, recon3d
from parad.geometry import AcquisitionGeometry, standard_geometry_3d
from parad.radon_fbp import fbp
from parad.recon2d import DIRECT, MIRRORED, ZERO


def _linf(a, b):
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


def _l2(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def _timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


def _coverage_ok(prov):
    # exactly one provenance code per cell
    return bool(np.all(np.isin(prov, (DIRECT, MIRRORED, ZERO))))


def test_criterion_01_representation_identities(report):
    t0 = time.perf_counter()
    r2, tol = harness.check_identity_2d(n_psi=512)
    r3, _ = harness.check_identity_3d(n_theta=512, n_phi=401)
    elapsed = time.perf_counter() - t0
    ok = max(r2, r3) <= tol and elapsed < 10.0
    report(1, ok, f"2D {r2:.2e}, 3D {r3:.2e} vs {tol:.0e}; {elapsed:.1f} s vs 10 s")
    assert ok


def test_criterion_02_full_aperture_2d(phantom2, oracle2, report):
    geom = AcquisitionGeometry(dim=2, mu="full", n_t=257, t_max=1.0, n_psi=512)
    wave = forward.synthesize_2d(phantom2, geom)
    sino, elapsed = _timed(recon2d.reconstruct_2d, wave, geom)
    err = _linf(sino.data, oracle2)
    ok = err <= 1e-3 and elapsed < 30.0
    report(2, ok, f"rel_linf {err:.2e} vs 1e-03; {elapsed:.1f} s vs 30 s")
    assert ok


def test_criterion_03_open_geometry_2d(reduced2, geom2_open, oracle2, report):
    sino, elapsed = _timed(recon2d.reconstruct_2d, reduced2, geom2_open)
    err = _linf(sino.data, oracle2)
    ok = err <= 5e-3 and elapsed < 60.0
    report(3, ok, f"rel_linf {err:.2e} vs 5e-03 (reported level about 5.0e-04); {elapsed:.1f} s vs 60 s")
    assert ok


def test_criterion_04_noise_2d(wave2, geom2_open, oracle2, report):
    errs = [_l2(recon2d.reconstruct_2d(forward.reduce(wave2, geom2_open, noise_level=0.5, seed=s),
                                       geom2_open).data, oracle2) for s in range(5)]
    mean = float(np.mean(errs))
    ok = mean <= 0.15
    report(4, ok, f"mean rel_l2 {mean:.3f} over 5 seeds vs 0.15 (reported level 0.07)")
    assert ok
    # the reported 7% is a target band, taken as a factor of two either side
    assert 0.035 <= mean <= 0.14


def test_criterion_05_3d_ci_grid(phantom3, report):
    geom = standard_geometry_3d(n_theta=128, n_phi=101, n_t=129)
    t0 = time.perf_counter()
    sino = recon3d.reconstruct_3d(forward.reduce(forward.synthesize_3d(phantom3, geom), geom), geom)
    elapsed = time.perf_counter() - t0
    err = _linf(sino.data, harness.oracle_sinogram_3d(phantom3, sino).data)
    ok = err <= 1e-2 and elapsed < 60.0
    report("5 (CI grid 128x101x129)", ok, f"rel_linf {err:.2e} vs 1e-02; {elapsed:.1f} s vs 60 s")
    assert ok


@pytest.fixture(scope="module")
def full3(phantom3):
    geom = standard_geometry_3d()
    wave, t_synth = _timed(forward.synthesize_3d, phantom3, geom)
    template = recon3d.reconstruct_3d(forward.reduce(wave, geom), geom)
    oracle = harness.oracle_sinogram_3d(phantom3, template).data
    return geom, wave, t_synth, oracle


@pytest.mark.slow
def test_criterion_05_3d_full_grid(full3, report):
    geom, wave, t_synth, oracle = full3
    assert (geom.n_theta, geom.n_phi, geom.n_t) == (512, 401, 257)
    sino, t_recon = _timed(recon3d.reconstruct_3d, forward.reduce(wave, geom), geom)
    err = _linf(sino.data, oracle)
    elapsed = t_synth + t_recon
    ok = err <= 3e-3 and elapsed < 1200.0
    report("5 (full grid 512x401x257)", ok,
           f"rel_linf {err:.2e} vs 3e-03 (reported level about 3e-04); {elapsed:.0f} s vs 1200 s")
    assert ok


@pytest.mark.slow
def test_criterion_06_noise_3d(full3, report):
    geom, wave, _, oracle = full3
    sino = recon3d.reconstruct_3d(forward.reduce(wave, geom, noise_level=0.5, seed=0), geom)
    l2, linf = _l2(sino.data, oracle), _linf(sino.data, oracle)
    ok = l2 <= 0.05 and linf <= 0.05
    report(6, ok, f"rel_l2 {l2:.4f}, rel_linf {linf:.4f} vs 0.05 each "
                  "(reported levels below 0.008 and just under 0.01)")
    assert ok


def test_criterion_07_abel_roundtrip(phantom2, report):
    err, tol = harness.check_abel_roundtrip(phantom2, n_psi=512)
    ok = err <= tol
    report(7, ok, f"rel_linf {err:.2e} on r in [0.05, 1.9] vs {tol:.0e}")
    assert ok


def test_criterion_08_direct_region_purity(reduced2, geom2_open, oracle2, report):
    raw = recon2d.reconstruct_2d(reduced2, geom2_open, do_complete=False)
    mask = recon2d.direct_region(raw, geom2_open)
    scale = np.max(np.abs(oracle2))
    inside = float(np.max(np.abs(raw.data - oracle2)[mask]) / scale)
    outside = float(np.max(np.abs(raw.data - oracle2)[~mask]) / scale)
    ok = 10 * inside <= outside
    report(8, ok, f"direct {inside:.2e}, complement {outside:.2e}, ratio {outside / inside:.0f} vs 10")
    assert ok


def test_criterion_09_symmetry_completion(sino2, geom3_ci, phantom3, report):
    n = sino2.data.shape[1]
    resid2 = float(np.max(np.abs(sino2.data - np.roll(sino2.data[::-1], -n // 2, axis=1))))
    prov2 = recon2d.sinogram_provenance(sino2)
    defects2 = harness.provenance_defects(prov2)

    geom = standard_geometry_3d(n_theta=32, n_phi=21, n_t=65)
    sino3 = recon3d.reconstruct_3d(forward.reduce(forward.synthesize_3d(phantom3, geom), geom), geom)
    mirror3 = np.roll(sino3.data[::-1], -geom.n_theta // 2, axis=1)[:, :, ::-1]
    resid3 = float(np.max(np.abs(sino3.data - mirror3)))
    prov3 = recon3d.sphere_provenance(sino3)
    defects3 = harness.provenance_defects(prov3, recon3d._antipode_index(geom.n_theta, geom.n_phi))

    ok = (resid2 == 0.0 and resid3 == 0.0 and defects2 == 0 and defects3 == 0
          and _coverage_ok(prov2) and _coverage_ok(prov3))
    report(9, ok, f"residual 2D {resid2:g}, 3D {resid3:g}; provenance defects {defects2 + defects3} vs 0")
    assert ok


def test_criterion_10_fbp_image(phantom2, sino2, oracle_sino2, report):
    truth = harness.oracle_image(phantom2, 512).data
    floor = _l2(fbp(oracle_sino2, n_pixels=512).data, truth)
    err = _l2(fbp(sino2, n_pixels=512).data, truth)
    ok = err <= 0.04 and floor <= 0.02
    report(10, ok, f"rel_l2 {err:.4f} vs 0.04 (oracle-sinogram floor {floor:.4f} vs 0.02)")
    assert ok


def test_criterion_11_determinism(tmp_path, phantom2, report):
    geom = AcquisitionGeometry(dim=2, mu=math.pi / 4, n_t=129, t_max=2.0, n_psi=128)
    geom.save(tmp_path / "geom.json")
    phantom2.save(tmp_path / "phantom.json")
    outputs = []
    for run in ("a", "b"):
        cfg = harness.RunConfig(geometry=str(tmp_path / "geom.json"), phantom=str(tmp_path / "phantom.json"),
                                out_dir=str(tmp_path / run), noise_level=0.5, seed=11, n_pixels=128)
        harness.run_pipeline(cfg)
        files = sorted(f for f in os.listdir(cfg.out_dir) if f.endswith(".pg"))
        outputs.append({f: open(os.path.join(cfg.out_dir, f), "rb").read() for f in files})
    same = outputs[0] == outputs[1] and len(outputs[0]) == 4
    report(11, same, f"{len(outputs[0])} PATGRID1 files bit-identical across two runs")
    assert same
