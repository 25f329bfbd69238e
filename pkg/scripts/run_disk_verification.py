#!/usr/bin/env python3
"""Full desk-scale verification on the unit disk: Hessian positivity scan
(cylinder + reflected + slab), the slab concavity certificate, and the blend
family sweep.  Writes CSV/JSON reports next to this script by default."""

import argparse
import pathlib

import numpy as np

from stabletau import analysis as an
from stabletau.extension import DiskPhi, ExtensionContext
from stabletau.geom import SupportDomain
from stabletau.quad import QuadSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=500)
    ap.add_argument("--m", type=float, default=3.0, help="cylinder radius/height")
    ap.add_argument("--outdir", default=str(pathlib.Path(__file__).parent / "out"))
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    ctx = ExtensionContext(SupportDomain.disk(1.0), DiskPhi(),
                           QuadSpec(rel_tol=1e-6, abs_tol=3e-8, max_cells=30000))

    pts = an.cylinder_points(args.m, args.points)
    both = np.concatenate([pts, pts * np.array([1.0, 1.0, -1.0])])
    rep = an.hessian_scan(ctx, both, descriptor=f"cylinder M={args.m} + reflected",
                          n_threads=args.threads)
    print(rep.summary())
    rep.to_csv(outdir / "disk_hessian_scan.csv")
    rep.to_json(outdir / "disk_hessian_scan.json")

    slab = an.slab_points(ctx.dom, 200, margin=0.005)
    rep = an.hessian_scan(ctx, slab, descriptor="open slab over D",
                          n_threads=args.threads)
    print(rep.summary())
    rep.to_csv(outdir / "disk_slab_scan.csv")

    ring = an.cylinder_points(1.3, 200)
    ring[:, 2] *= 0.15 / args.m  # squeeze toward the slab edge
    rep = an.psi_b_scan(ctx, np.linspace(0, 1, 11), ring,
                        descriptor="blend family near the slab edge",
                        n_threads=args.threads)
    print(rep.summary())
    rep.to_csv(outdir / "disk_psi_b_scan.csv")


if __name__ == "__main__":
    main()
