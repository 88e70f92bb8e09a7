"""Command-line entry point: ``parad <subcommand> --flag value ...``."""

import argparse
import json
import math
import os
import sys

from . import forward, harness, recon2d, recon3d
from .geometry import AcquisitionGeometry
from .grids_io import read_grid, write_grid
from .phantom import Phantom, default_phantom_2d, default_phantom_3d
from .radon_fbp import fbp


def _mu(text):
    if text == "full":
        return "full"
    if text == "pi/4":
        return math.pi / 4
    return float(text)


def cmd_phantom(args):
    phantom = default_phantom_2d() if args.dim == 2 else default_phantom_3d()
    phantom.save(args.out)
    if args.geom_out:
        geom = AcquisitionGeometry(dim=args.dim, mu=args.mu, n_t=args.n_t, t_max=args.t_max,
                                   n_psi=args.n_psi, n_theta=args.n_theta, n_phi=args.n_phi)
        phantom.check_support(geom.support_bound)
        geom.save(args.geom_out)
    return 0


def cmd_forward(args):
    geom = AcquisitionGeometry.load(args.geom)
    phantom = Phantom.load(args.phantom, geometry=geom)
    synth = forward.synthesize_2d if geom.dim == 2 else forward.synthesize_3d
    write_grid(args.out, synth(phantom, geom))
    return 0


def cmd_reduce(args):
    geom = AcquisitionGeometry.load(args.geom)
    wave = read_grid(args.inp)
    reduced = forward.reduce(wave, geom, temporal=not args.no_temporal, spatial=not args.no_spatial,
                             noise_level=args.noise_level, seed=args.seed,
                             t_flat=args.t_flat, t_zero=args.t_zero)
    write_grid(args.out, reduced)
    return 0


def cmd_recon2d(args):
    geom = AcquisitionGeometry.load(args.geom)
    sino = recon2d.reconstruct_2d(read_grid(args.inp), geom, kmax=args.kmax,
                                  oversample=args.oversample, do_complete=not args.no_complete)
    write_grid(args.out, sino)
    return 0


def cmd_recon3d(args):
    geom = AcquisitionGeometry.load(args.geom)
    sino = recon3d.reconstruct_3d(read_grid(args.inp), geom, kmax=args.kmax,
                                  do_complete=not args.no_complete)
    write_grid(args.out, sino)
    return 0


def cmd_invert(args):
    write_grid(args.out, fbp(read_grid(args.inp), n_pixels=args.n))
    return 0


def cmd_compare(args):
    result = read_grid(args.inp)
    if args.ref:
        reference = read_grid(args.ref)
    elif args.phantom:
        reference = harness.reference_for(result, Phantom.load(args.phantom))
    else:
        print("compare needs --ref or --phantom", file=sys.stderr)
        return 2
    mask = harness.region_mask(result, args.region)
    tolerances = {}
    if args.tol_linf is not None:
        tolerances["rel_linf"] = args.tol_linf
    if args.tol_l2 is not None:
        tolerances["rel_l2"] = args.tol_l2
    rows = harness.comparison_rows(harness.metrics(result, reference, mask), tolerances)
    harness.write_csv(sys.stdout, rows)
    if args.csv:
        harness.write_csv(args.csv, rows)
    if args.figures:
        stem = os.path.splitext(os.path.basename(args.inp))[0]
        for path in harness.render_figures(result, reference, args.figures, stem=stem, mask=mask):
            print(f"# figure {path}")
    return 1 if any(r[3] == "fail" for r in rows) else 0


def cmd_selftest(args):
    report = harness.selftest(fault=args.fault)
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0 if report["passed"] else 1


def cmd_pipeline(args):
    out = harness.run_pipeline(harness.RunConfig.load(args.config))
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0 if out["passed"] else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="parad", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="write the default phantom (and optionally a geometry)")
    p.add_argument("--dim", type=int, choices=(2, 3), default=2)
    p.add_argument("--out", required=True)
    p.add_argument("--geom-out")
    p.add_argument("--mu", type=_mu, default=math.pi / 4, help="cap half-angle, 'pi/4' or 'full'")
    p.add_argument("--n-t", type=int, default=257)
    p.add_argument("--t-max", type=float, default=2.0)
    p.add_argument("--n-psi", type=int, default=512)
    p.add_argument("--n-theta", type=int, default=512)
    p.add_argument("--n-phi", type=int, default=401)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("forward", help="synthesize boundary data g(t, y)")
    p.add_argument("--phantom", required=True)
    p.add_argument("--geom", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("reduce", help="apply cap mask, time cutoff and noise")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--geom", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-spatial", action="store_true")
    p.add_argument("--no-temporal", action="store_true")
    p.add_argument("--noise-level", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t-flat", type=float, default=1.3)
    p.add_argument("--t-zero", type=float, default=1.4)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("recon2d", help="2D data to completed Radon sinogram")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--geom", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kmax", type=int)
    p.add_argument("--oversample", type=int, default=32)
    p.add_argument("--no-complete", action="store_true")
    p.set_defaults(func=cmd_recon2d)

    p = sub.add_parser("recon3d", help="3D data to completed Radon projections")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--geom", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kmax", type=int)
    p.add_argument("--no-complete", action="store_true")
    p.set_defaults(func=cmd_recon3d)

    p = sub.add_parser("invert", help="filtered backprojection of a completed 2D sinogram")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=512)
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("compare", help="relative errors against a reference or the phantom oracle")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--ref")
    p.add_argument("--phantom")
    p.add_argument("--region", choices=("all", "direct"), default="all")
    p.add_argument("--tol-linf", type=float)
    p.add_argument("--tol-l2", type=float)
    p.add_argument("--csv", help="also write the table to this CSV file")
    p.add_argument("--figures", help="directory for result/reference/error PNGs")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("selftest", help="run the invariant checks, print a JSON report")
    p.add_argument("--fault", choices=harness.FAULTS)
    p.add_argument("--out")
    p.set_defaults(func=cmd_selftest)

    p = sub.add_parser("pipeline", help="run every stage from a JSON run config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
