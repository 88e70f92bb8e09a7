"""Error metrics, the self-test report and config-driven pipeline runs."""

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import forward, recon2d, recon3d
from .geometry import AcquisitionGeometry
from .grids_io import Axis, GridArray
from .phantom import Phantom
from .radon_fbp import fbp, image_grid
from .specfun import (bessel_j, gauss_legendre, hankel1, legendre_p, spherical_bessel_j,
                      spherical_hankel1)

FAULTS = ("hankel_sign",)


def _values(x):
    return np.asarray(x.data if isinstance(x, GridArray) else x, dtype=float)


def metrics(a, b, mask=None):
    """Relative errors of ``a`` against the reference ``b``.

    Args:
        a: GridArray or array.
        b: reference GridArray or array of the same shape (and axes).
        mask: optional boolean array selecting the cells to compare.

    Returns:
        dict with rel_linf = max|a-b|/max|b| and rel_l2 = |a-b|_2/|b|_2.
    """
    va, vb = _values(a), _values(b)
    if va.shape != vb.shape:
        raise ValueError(f"shape mismatch: {va.shape} vs {vb.shape}")
    if isinstance(a, GridArray) and isinstance(b, GridArray) and a.axes != b.axes:
        raise ValueError("axis mismatch")
    if mask is not None:
        mask = np.broadcast_to(np.asarray(mask, dtype=bool), va.shape)
        va, vb = va[mask], vb[mask]
    diff = va - vb
    ref_inf = np.max(np.abs(vb)) if vb.size else 0.0
    ref_l2 = np.linalg.norm(vb)
    return {
        "rel_linf": float(np.max(np.abs(diff)) / ref_inf) if ref_inf > 0 else float(np.max(np.abs(diff), initial=0.0)),
        "rel_l2": float(np.linalg.norm(diff) / ref_l2) if ref_l2 > 0 else float(np.linalg.norm(diff)),
    }


# reference values on the (tau, direction) grid of a reconstruction

def oracle_sinogram_2d(phantom, sino):
    tau = sino.coords("tau")
    varpi = sino.coords("varpi")
    omega = np.stack([np.cos(varpi), np.sin(varpi)], axis=-1)
    values = np.stack([phantom.radon(omega, t) for t in tau])
    return sino.like(values, {"kind": "radon"})


def sphere_directions(theta, cos_phi):
    s = np.sqrt(1.0 - cos_phi**2)
    return np.stack(np.broadcast_arrays(s[None] * np.cos(theta)[:, None],
                                        s[None] * np.sin(theta)[:, None], cos_phi[None]), axis=-1)


def oracle_sinogram_3d(phantom, sino):
    omega = sphere_directions(sino.coords("theta"), sino.coords("cosphi"))
    values = np.stack([phantom.radon(omega, t) for t in sino.coords("tau")])
    return sino.like(values, {"kind": "radon"})


def oracle_image(phantom, n_pixels):
    h = 2.0 / n_pixels
    axes = [Axis.uniform("y", -1.0 + 0.5 * h, h), Axis.uniform("x", -1.0 + 0.5 * h, h)]
    return GridArray(data=phantom.eval(image_grid(n_pixels)), axes=axes, meta={"kind": "image"})


def oracle_circular_integrals(phantom, geom, r):
    """2 pi r times the circular means around every detector, shape (len(r), n_psi)."""
    pos = geom.detector_positions()
    r = np.asarray(r, dtype=float)
    return 2.0 * np.pi * r[:, None] * phantom.mean(pos[None, :, :], r[:, None])


# self-test checks; each returns (residual, tolerance)

def _random_interior(rng, n, dim, radius=0.8):
    p = rng.standard_normal((n, dim))
    return p * (radius * rng.random(n) ** (1.0 / dim) / np.linalg.norm(p, axis=1))[:, None]


def check_identity_2d(fault=None, n_points=20, n_psi=512, seed=0):
    rng = np.random.default_rng(seed)
    psi = 2.0 * np.pi * np.arange(n_psi) / n_psi
    worst = 0.0
    for rho in (2.0, 7.5):
        varpi = rng.uniform(0.0, 2.0 * np.pi)
        x = _random_interior(rng, n_points, 2)
        dens = recon2d.plane_wave_density_2d(rho, varpi, psi, math.ceil(rho) + 40,
                                             second_kind=fault == "hankel_sign")
        got = recon2d.single_layer_2d(dens, psi, rho, x)
        want = np.exp(1j * rho * (x @ [np.cos(varpi), np.sin(varpi)]))
        worst = max(worst, float(np.max(np.abs(got - want))))
    return worst, 1e-6


def check_identity_3d(fault=None, n_points=20, n_theta=512, n_phi=401, seed=0):
    rng = np.random.default_rng(seed)
    rule = gauss_legendre(n_phi)
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    y = sphere_directions(theta, rule.nodes).reshape(-1, 3)
    w = np.broadcast_to(rule.weights[None] * (2.0 * np.pi / n_theta), (n_theta, n_phi)).ravel()
    worst = 0.0
    for rho in (2.0, 7.5):
        omega = rng.standard_normal(3)
        omega /= np.linalg.norm(omega)
        x = _random_interior(rng, n_points, 3)
        dens = recon3d.plane_wave_density_3d(rho, omega, y, math.ceil(rho) + 40,
                                             sign=-1 if fault == "hankel_sign" else 1)
        got = recon3d.single_layer_3d(dens, y, w, rho, x)
        worst = max(worst, float(np.max(np.abs(got - np.exp(1j * rho * (x @ omega))))))
    return worst, 1e-6


def check_jacobi_anger(seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for rho in (0.5, 3.0, 20.0):
        x = _random_interior(rng, 10, 2, radius=0.999)
        r, th = np.hypot(x[:, 0], x[:, 1]), np.arctan2(x[:, 1], x[:, 0])
        varpi = rng.uniform(0.0, 2.0 * np.pi)
        kmax = math.ceil(rho) + 40
        total = np.zeros(len(x), dtype=complex)
        for k in range(-kmax, kmax + 1):
            total += 1j ** abs(k) * bessel_j(abs(k), rho * r) * np.exp(1j * k * (varpi - th))
        want = np.exp(1j * rho * r * np.cos(varpi - th))
        worst = max(worst, float(np.max(np.abs(total - want))))
    return worst, 1e-10


def check_addition_2d(seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for rho in (2.0, 7.5):
        x = _random_interior(rng, 10, 2)
        r, th = np.hypot(x[:, 0], x[:, 1]), np.arctan2(x[:, 1], x[:, 0])
        psi = rng.uniform(0.0, 2.0 * np.pi)
        y = np.array([np.cos(psi), np.sin(psi)])
        kmax = math.ceil(rho) + 100
        total = np.zeros(len(x), dtype=complex)
        for k in range(-kmax, kmax + 1):
            total += bessel_j(abs(k), rho * r) * hankel1(abs(k), rho) * np.exp(1j * k * (psi - th))
        want = hankel1(0, rho * np.linalg.norm(y - x, axis=1))
        worst = max(worst, float(np.max(np.abs(total - want) / np.abs(want))))
    return worst, 1e-8


def check_addition_3d(seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for rho in (2.0, 7.5):
        x = _random_interior(rng, 10, 3)
        y = rng.standard_normal(3)
        y /= np.linalg.norm(y)
        r = np.linalg.norm(x, axis=1)
        kmax = math.ceil(rho) + 100
        p = legendre_p(kmax, (x @ y) / r)
        total = np.zeros(len(x), dtype=complex)
        for k in range(kmax + 1):
            total += (2 * k + 1) * spherical_bessel_j(k, rho * r) * spherical_hankel1(k, rho) * p[k]
        want = spherical_hankel1(0, rho * np.linalg.norm(y - x, axis=1))
        worst = max(worst, float(np.max(np.abs(total - want) / np.abs(want))))
    return worst, 1e-8


def check_abel_roundtrip(phantom=None, n_psi=16, n_t=257):
    from .phantom import default_phantom_2d
    phantom = phantom or default_phantom_2d()
    geom = AcquisitionGeometry(2, "full", n_t, 2.0, n_psi=n_psi)
    circ = forward.inverse_abel(forward.synthesize_2d(phantom, geom))
    r = circ.coords("r")
    keep = (r >= 0.05) & (r <= 1.9)
    ref = oracle_circular_integrals(phantom, geom, r[keep])
    return metrics(circ.data[keep], ref)["rel_linf"], 1e-4


def check_symmetry(n_tau=65, n_varpi=32, seed=0):
    rng = np.random.default_rng(seed)
    geom = AcquisitionGeometry(2, math.pi / 4, n_tau, 2.0, n_psi=n_varpi)
    axes = [recon2d.tau_axis(n_tau), Axis.uniform("varpi", 0.0, 2.0 * np.pi / n_varpi)]
    sino = GridArray(data=rng.standard_normal((n_tau, n_varpi)), axes=axes, meta={})
    done = recon2d.complete(sino, geom)
    mirrored = np.roll(done.data[::-1], -n_varpi // 2, axis=1)
    residual = float(np.max(np.abs(done.data - mirrored)))
    return residual + provenance_defects(recon2d.sinogram_provenance(done)), 0.0


def provenance_defects(prov, antipode=None):
    """Number of cells whose provenance is inconsistent with their mirror cell.

    Each antipodal pair of cells must hold exactly one direct value (the
    other is its mirror copy), or be zero on both sides.

    Args:
        prov: (n_tau, n_dir) provenance codes; 3D maps are flattened first.
        antipode: index of -w for every direction (default: shift by n_dir/2).
    """
    prov = prov.reshape(prov.shape[0], -1)
    n_dir = prov.shape[1]
    if antipode is None:
        antipode = (np.arange(n_dir) + n_dir // 2) % n_dir
    mate = prov[::-1][:, antipode]
    ok = ((prov == recon2d.DIRECT) & (mate == recon2d.MIRRORED)) \
        | ((prov == recon2d.MIRRORED) & (mate == recon2d.DIRECT)) \
        | ((prov == recon2d.ZERO) & (mate == recon2d.ZERO))
    return int(np.count_nonzero(~ok))


CHECKS = {
    "identity_2d": check_identity_2d,
    "identity_3d": check_identity_3d,
    "jacobi_anger": check_jacobi_anger,
    "addition_2d": check_addition_2d,
    "addition_3d": check_addition_3d,
    "abel_roundtrip": check_abel_roundtrip,
    "symmetry_completion": check_symmetry,
}


def selftest(fault=None):
    """Run every invariant check and return a JSON-serializable report.

    Args:
        fault: None, or "hankel_sign" to swap the Hankel convention in the
            density formulas (the identity checks must then fail).
    """
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}")
    entries = []
    for name, fn in CHECKS.items():
        kwargs = {"fault": fault} if name.startswith("identity") else {}
        residual, tol = fn(**kwargs)
        entries.append({"name": name, "residual": residual, "tolerance": tol,
                        "passed": bool(residual <= tol)})
    report = {"fault": fault, "checks": entries, "passed": all(e["passed"] for e in entries)}
    text = json.dumps(report, sort_keys=True)
    report["json_roundtrip"] = json.loads(text) == report
    report["passed"] = report["passed"] and report["json_roundtrip"]
    return report


@dataclass
class RunConfig:
    """Everything a pipeline run needs; paths are relative to the working directory."""

    geometry: str
    phantom: str
    out_dir: str
    spatial: bool = True
    temporal: bool = True
    noise_level: float = 0.0
    seed: int = 0
    kmax: int = None
    oversample: int = 32
    n_pixels: int = 512
    tolerances: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls(**json.load(fh))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)

    def validate(self):
        import os
        for p in (self.geometry, self.phantom):
            if not os.path.exists(p):
                raise FileNotFoundError(p)
        if not 0.0 <= self.noise_level <= 10.0:
            raise ValueError("noise_level out of range [0, 10]")
        if self.oversample < 1:
            raise ValueError("oversample must be >= 1")


def reconstruct(wave, geom, kmax=None, oversample=32):
    if geom.dim == 2:
        return recon2d.reconstruct_2d(wave, geom, kmax=kmax, oversample=oversample)
    return recon3d.reconstruct_3d(wave, geom, kmax=kmax)


def reference_for(grid, phantom):
    """Oracle counterpart of a sinogram or image produced by the pipeline."""
    names = [a.name for a in grid.axes]
    if "varpi" in names:
        return oracle_sinogram_2d(phantom, grid)
    if "theta" in names and "tau" in names:
        return oracle_sinogram_3d(phantom, grid)
    if names == ["y", "x"]:
        return oracle_image(phantom, grid.data.shape[0])
    raise ValueError(f"no oracle for a grid with axes {names}")


def region_mask(grid, region):
    """Cells to compare: 'all', or 'direct' (directly reconstructed sinogram cells)."""
    if region == "all":
        return None
    if region != "direct":
        raise ValueError(f"unknown region {region!r}")
    geom = AcquisitionGeometry.from_json(grid.meta["geometry"])
    if geom.dim == 2:
        return recon2d.direct_region(grid, geom)
    return recon3d.direct_region_sphere(grid, geom)


def comparison_rows(result, tolerances=None):
    """(metric, value, tolerance, status) rows; status is 'pass', 'fail' or '-'."""
    rows = []
    for name, value in result.items():
        tol = (tolerances or {}).get(name)
        status = "-" if tol is None else ("pass" if value <= tol else "fail")
        rows.append((name, value, "" if tol is None else tol, status))
    return rows


def write_csv(path_or_file, rows):
    import csv
    own = isinstance(path_or_file, str)
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value", "tolerance", "status"])
        for name, value, tol, status in rows:
            writer.writerow([name, repr(float(value)), tol, status])
    finally:
        if own:
            fh.close()


def _display_slice(grid):
    """2D view of a grid: sinograms as (tau, direction), 3D at the middle polar node."""
    data = np.asarray(grid.data)
    if data.ndim == 3:
        return data[:, :, data.shape[2] // 2]
    return data


def render_figures(result, reference, out_dir, stem="compare", mask=None):
    """Write result / reference / error PNGs and return their paths."""
    import os

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(out_dir, exist_ok=True)
    a, b = _display_slice(result), _display_slice(reference)
    err = np.abs(a - b)
    if mask is not None:
        m = _display_slice(GridArray(data=np.asarray(mask, dtype=float), axes=result.axes))
        err = np.where(m > 0, err, np.nan)
    is_image = [ax.name for ax in result.axes] == ["y", "x"]
    extent = [-1, 1, -1, 1] if is_image else None
    paths = []
    for name, values, cmap in (("result", a, "viridis"), ("reference", b, "viridis"),
                               ("error", err, "magma")):
        fig, ax = plt.subplots(figsize=(5, 4))
        im = ax.imshow(values, origin="lower", aspect="auto", cmap=cmap, extent=extent)
        fig.colorbar(im, ax=ax)
        if is_image:
            ax.set_xlabel("x")
            ax.set_ylabel("y")
        else:
            ax.set_xlabel("direction index")
            ax.set_ylabel("tau index")
        ax.set_title(f"{stem}: {name}")
        fig.tight_layout()
        path = os.path.join(out_dir, f"{stem}_{name}.png")
        fig.savefig(path, dpi=100)
        plt.close(fig)
        paths.append(path)
    return paths


def run_pipeline(config):
    """phantom -> forward -> reduce -> recon -> invert -> compare from a RunConfig.

    Writes wave.pg, reduced.pg, sinogram.pg (and image.pg in 2D) into
    ``config.out_dir`` and returns a dict of metrics plus an overall flag.
    """
    import os

    from .grids_io import write_grid

    config.validate()
    geom = AcquisitionGeometry.load(config.geometry)
    phantom = Phantom.load(config.phantom, geometry=geom)
    os.makedirs(config.out_dir, exist_ok=True)
    synth = forward.synthesize_2d if geom.dim == 2 else forward.synthesize_3d
    wave = synth(phantom, geom)
    write_grid(os.path.join(config.out_dir, "wave.pg"), wave)
    reduced = forward.reduce(wave, geom, temporal=config.temporal, spatial=config.spatial,
                             noise_level=config.noise_level, seed=config.seed)
    write_grid(os.path.join(config.out_dir, "reduced.pg"), reduced)
    sino = reconstruct(reduced, geom, kmax=config.kmax, oversample=config.oversample)
    write_grid(os.path.join(config.out_dir, "sinogram.pg"), sino)
    out = {"sinogram": metrics(sino, reference_for(sino, phantom))}
    if geom.dim == 2:
        image = fbp(sino, n_pixels=config.n_pixels)
        write_grid(os.path.join(config.out_dir, "image.pg"), image)
        out["image"] = metrics(image, reference_for(image, phantom))
    passed = True
    for key, tol in config.tolerances.items():
        stage, metric = key.split(".")
        passed = passed and out[stage][metric] <= tol
    out["passed"] = passed
    return out
