#!/usr/bin/env python3
"""Fit every boundary blow-up exponent on the unit disk and print a table
of slopes against their targets."""

import argparse

import numpy as np

from stabletau import analysis as an
from stabletau.extension import DiskPhi, ExtensionContext
from stabletau.geom import SupportDomain

PROBES = [
    ("normal-slab", "phi_n", "small"),
    ("normal-slab", "phi_nn", "small"),
    ("normal-slab", "phi_TT", "small"),
    ("S1", "u13", "mid"),
    ("S2", "u11", "mid"),
    ("S3", "u13", "mid"),
    ("S4", "u22", "mid"),
    ("S4", "u23", "mid"),
    ("exterior", "ext_half_lap", "small"),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--angle", type=float, default=0.0,
                    help="boundary normal angle of the probe frame")
    args = ap.parse_args()

    ctx = ExtensionContext(SupportDomain.disk(1.0), DiskPhi())
    ranges = {"small": 0.0005 * 2.0 ** np.arange(6),
              "mid": 0.01 * 2.0 ** np.arange(6)}
    for probe, quantity, kind in PROBES:
        fit = an.boundary_exponent_fit(ctx, probe, quantity, ranges[kind],
                                       boundary_angle=args.angle)
        target = an.target_slope(probe, quantity)
        tail = f"target {target:+.2f}" if target is not None else "no target"
        print(f"{fit.summary()}  [{tail}]")


if __name__ == "__main__":
    main()
