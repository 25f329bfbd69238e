"""Command-line front end: solve, field-build, hessian-scan, exponent-fit,
deform-sweep, cone-hunt.

Every command accepts --seed, --threads, --config, --out and --format; output
files carry 17 significant digits, terminal summaries 6.  Exit codes: 0 ok,
2 domain or point errors, 3 I/O, 4 usage, 5 non-converged numerics.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import sys

import numpy as np

from . import analysis
from .closedform import StableParams
from .errors import (
    DomainFileError,
    NonConvergedError,
    StableTauError,
)
from .extension import DiskPhi, ExtensionContext
from .geom import ConeDomain, SupportDomain, deform, load_domain
from .quad import QuadSpec
from .wos import PhiField, WalkConfig, build_field, estimate_phi, load_field, save_field

EXIT_OK, EXIT_DOMAIN, EXIT_IO, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3, 4, 5


class UsageError(StableTauError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def builtin_domain(spec: str):
    """disk[:r] | ellipse:a,b | cone:theta,d"""
    name, _, args = spec.partition(":")
    try:
        if name == "disk":
            return SupportDomain.disk(float(args) if args else 1.0)
        if name == "ellipse":
            a, b = (float(t) for t in args.split(","))
            return SupportDomain.ellipse(a, b)
        if name == "cone":
            theta, d = args.split(",")
            return ConeDomain(float(theta), int(d))
    except (ValueError, TypeError) as exc:
        raise UsageError(f"malformed builtin spec {spec!r}: {exc}") from exc
    raise UsageError(f"unknown builtin domain {spec!r}")


def _resolve_domain(ns):
    if getattr(ns, "domain", None):
        return load_domain(ns.domain), ns.domain
    spec = getattr(ns, "builtin", None) or "disk"
    return builtin_domain(spec), f"builtin:{spec}"


def _parse_at(text: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.split(",")])
    except ValueError as exc:
        raise UsageError(f"malformed --at value {text!r}") from exc


def _parse_region(text: str):
    try:
        if text.startswith("cylinder"):
            m = 3.0
            if ":" in text:
                key, val = text.split(":", 1)[1].split("=")
                if key != "M":
                    raise ValueError(f"unknown cylinder parameter {key!r}")
                m = float(val)
            return ("cylinder", m)
        if text.startswith("slab"):
            margin = 0.02
            if ":" in text:
                key, val = text.split(":", 1)[1].split("=")
                if key != "margin":
                    raise ValueError(f"unknown slab parameter {key!r}")
                margin = float(val)
            return ("slab", margin)
    except (ValueError, IndexError) as exc:
        raise UsageError(f"malformed region {text!r}: {exc}") from exc
    raise UsageError(f"unknown region {text!r} (use cylinder:M=3 or slab[:margin=m])")


def _parse_points(text: str) -> int:
    kind, _, count = text.partition(":")
    if kind != "halton" or not count.isdigit():
        raise UsageError(f"malformed points spec {text!r} (use halton:N)")
    return int(count)


def _parse_which(text: str):
    if text == "u":
        return "u", 0.0, 0.0
    kind, _, val = text.partition(":")
    try:
        if kind == "veps":
            return "veps", float(val), 0.0
        if kind == "psib":
            return "psib", 0.0, float(val)
    except ValueError as exc:
        raise UsageError(f"malformed --which value {text!r}") from exc
    raise UsageError(f"unknown --which value {text!r}")


def _parse_h(text: str) -> np.ndarray:
    try:
        start, stop, kind, n = text.split(":")
        n = int(n)
        if kind == "geometric":
            return np.geomspace(float(start), float(stop), n)
        if kind == "linear":
            return np.linspace(float(start), float(stop), n)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"malformed --h spec {text!r}") from exc
    raise UsageError(f"unknown --h progression {text!r}")


def _parse_t(text: str) -> np.ndarray:
    try:
        start, stop, n = text.split(":")
        return np.linspace(float(start), float(stop), int(n))
    except ValueError as exc:
        raise UsageError(f"malformed --t spec {text!r}") from exc


def _apply_config(ns, command: str):
    """Fill argparse namespace holes from the [command] section of the config."""
    if not getattr(ns, "config", None):
        return
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    read = cp.read(ns.config)
    if not read:
        raise DomainFileError(f"config file {ns.config!r} not found")
    if not cp.has_section(command):
        return
    known = {k.replace("-", "_") for k in vars(ns)}
    for key, raw in cp.items(command):
        dest = key.replace("-", "_")
        if dest not in known:
            raise UsageError(f"unknown config key {key!r} in [{command}]")
        if getattr(ns, dest) is None:
            setattr(ns, dest, raw)


def _need(ns, name, default=None, cast=str):
    val = getattr(ns, name, None)
    if val is None:
        if default is None:
            raise UsageError(f"missing required option --{name.replace('_', '-')}")
        val = default
    try:
        return cast(val)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad value for --{name.replace('_', '-')}: {val!r}") from exc


def _write_rows(path, fmt, header, rows):
    if fmt == "json":
        payload = [dict(zip(header, row)) for row in rows]
        with open(path, "w") as fh:
            fh.write(analysis._json_dump(payload))
    else:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([analysis.fmt17(v) if isinstance(v, float) else v
                            for v in row])


def _phi_context(ns, dom, domain_ref):
    field_path = getattr(ns, "field", None)
    if field_path:
        phi = load_field(field_path)
        return ExtensionContext(phi.dom, phi)
    if isinstance(dom, SupportDomain) and dom._disk_radius is not None \
            and abs(dom._disk_radius - 1.0) < 1e-15:
        return ExtensionContext(dom, DiskPhi())
    raise UsageError(
        f"{domain_ref}: no closed-form field; build one with field-build and pass --field")


# -- commands ---------------------------------------------------------------------------

def cmd_solve(ns) -> int:
    dom, _ = _resolve_domain(ns)
    alpha = _need(ns, "alpha", cast=float)
    at = _parse_at(_need(ns, "at"))
    dim = at.size
    p = StableParams(alpha, dim)
    cfg = WalkConfig(
        n_walks=int(float(_need(ns, "walks", "100000"))),
        ball_fraction=_need(ns, "ball_fraction", "0.5", float),
        max_steps=int(float(_need(ns, "max_steps", "10000"))),
        seed=_need(ns, "seed", "0", int),
    )
    est = estimate_phi(dom, p, at, cfg, n_threads=_need(ns, "threads", "1", int))
    print(f"mean={est.mean:.6g} stderr={est.std_error:.6g} walks={est.n_walks} "
          f"truncated={est.truncated} mean_steps={est.mean_steps:.6g}")
    if est.truncated:
        print("warning: truncated walks present; estimate is biased low")
    if ns.out:
        _write_rows(ns.out, ns.format or "csv",
                    ["mean", "std_error", "n_walks", "truncated", "mean_steps"],
                    [[est.mean, est.std_error, est.n_walks, est.truncated,
                      est.mean_steps]])
    return EXIT_OK


def cmd_field_build(ns) -> int:
    dom, ref = _resolve_domain(ns)
    if not isinstance(dom, SupportDomain):
        raise UsageError("field-build requires a support-function domain")
    alpha = _need(ns, "alpha", cast=float)
    cfg = WalkConfig(
        n_walks=int(float(_need(ns, "walks_per_node", "10000"))),
        ball_fraction=_need(ns, "ball_fraction", "0.5", float),
        max_steps=int(float(_need(ns, "max_steps", "10000"))),
        seed=_need(ns, "seed", "0", int),
    )
    spacing = _need(ns, "spacing", cast=float)
    field = build_field(dom, StableParams(alpha, 2), spacing, cfg,
                        n_threads=_need(ns, "threads", "1", int), domain_ref=ref)
    out = _need(ns, "out")
    save_field(field, out)
    n_nodes = int(np.count_nonzero(field.reliable))
    print(f"field written to {out}: {n_nodes} estimated nodes, spacing={spacing:.6g}, "
          f"typical stderr={field.typical_stderr():.6g}")
    return EXIT_OK


def cmd_hessian_scan(ns) -> int:
    dom, ref = _resolve_domain(ns)
    ctx = _phi_context(ns, dom, ref)
    region = _parse_region(_need(ns, "region", "cylinder:M=3"))
    n_points = _parse_points(_need(ns, "points", "halton:500"))
    which, eps, b = _parse_which(_need(ns, "which", "u"))
    if region[0] == "cylinder":
        pts = analysis.cylinder_points(region[1], n_points)
        descriptor = f"cylinder M={region[1]:g}, halton {n_points}"
    else:
        pts = analysis.slab_points(ctx.dom, n_points, margin=region[1])
        descriptor = f"slab margin={region[1]:g}, halton {n_points}"
    if getattr(ns, "include_reflected", False) and region[0] == "cylinder":
        pts = np.concatenate([pts, pts * np.array([1.0, 1.0, -1.0])])
        descriptor += " + reflected"
    rep = analysis.hessian_scan(ctx, pts, which, eps=eps, b=b,
                                descriptor=descriptor,
                                n_threads=_need(ns, "threads", "1", int))
    print(rep.summary())
    if ns.out:
        if ns.format == "json":
            rep.to_json(ns.out)
        else:
            _write_hessian_csv(rep, ns.out)
    return EXIT_OK


def _write_hessian_csv(rep, path):
    """Fixed column layout: x1..x3, the six entries, det, trace, signature, verdict."""
    cols = ["u11", "u12", "u13", "u22", "u23", "u33", "det", "trace",
            "sig_pos", "sig_neg"]
    sel = [rep.columns.index(c) for c in cols]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "x2", "x3"] + cols + ["verdict"])
        for i in range(len(rep.points)):
            row = [analysis.fmt17(c) for c in rep.points[i]]
            row += [analysis.fmt17(rep.values[i, j]) for j in sel]
            row.append(rep.verdicts[i])
            w.writerow(row)


def cmd_exponent_fit(ns) -> int:
    dom, ref = _resolve_domain(ns)
    ctx = _phi_context(ns, dom, ref)
    probe = _need(ns, "probe")
    quantity = _need(ns, "quantity")
    h = _parse_h(_need(ns, "h", "0.005:0.05:geometric:6"))
    fit = analysis.boundary_exponent_fit(ctx, probe, quantity, h)
    target = analysis.target_slope(probe, quantity)
    extra = f" (target {target:+.2f})" if target is not None else " (no target)"
    print(fit.summary() + extra)
    if ns.out:
        fit.to_json(ns.out) if (ns.format == "json") else fit.to_csv(ns.out)
    return EXIT_OK


def cmd_deform_sweep(ns) -> int:
    dom, _ = _resolve_domain(ns)
    if not isinstance(dom, SupportDomain):
        raise UsageError("deform-sweep requires a support-function domain")
    t_grid = _parse_t(_need(ns, "t", "0:1:11"))
    rep = analysis.deformation_sweep(dom, t_grid)
    print(rep.summary())
    for i, t in enumerate(t_grid):
        r1, k1, k2 = rep.values[i, 0], rep.values[i, 1], rep.values[i, 2]
        print(f"  t={t:.3g}: R1={r1:.6g} kappa=[{k1:.6g}, {k2:.6g}] {rep.verdicts[i]}")
    if ns.out:
        rep.to_json(ns.out) if (ns.format == "json") else rep.to_csv(ns.out)
    return EXIT_OK if rep.n_fail == 0 else EXIT_NUMERIC


def cmd_cone_hunt(ns) -> int:
    alpha = _need(ns, "alpha", cast=float)
    theta = _need(ns, "theta", cast=float)
    dim = _need(ns, "dim", "2", int)
    cone = ConeDomain(theta, dim)
    cfg = WalkConfig(
        n_walks=int(float(_need(ns, "walks", "100000"))),
        seed=_need(ns, "seed", "0", int),
    )
    rep = analysis.cone_nonconcavity_hunt(cone, StableParams(alpha, dim), cfg,
                                          n_threads=_need(ns, "threads", "1", int))
    print(rep.summary())
    if rep.witnesses:
        best = max(rep.witnesses, key=lambda w: w["value"])
        print(f"witness: axis triple {best['point']} violates concavity at "
              f"{best['value']:.3g} sigma")
    else:
        print("no concavity-violation witness found at 5 sigma")
    if not rep.config["axis_profile_nondecreasing"]:
        print("note: axis profile not nondecreasing within 3 sigma")
    if ns.out:
        rep.to_json(ns.out) if (ns.format == "json") else rep.to_csv(ns.out)
    return EXIT_OK


_COMMANDS = {
    "solve": cmd_solve,
    "field-build": cmd_field_build,
    "hessian-scan": cmd_hessian_scan,
    "exponent-fit": cmd_exponent_fit,
    "deform-sweep": cmd_deform_sweep,
    "cone-hunt": cmd_cone_hunt,
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="stabletau", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    common = dict(default=None)
    for name in _COMMANDS:
        sp = sub.add_parser(name, add_help=True)
        sp.add_argument("--builtin", **common)
        sp.add_argument("--domain", **common)
        sp.add_argument("--config", **common)
        sp.add_argument("--seed", **common)
        sp.add_argument("--threads", **common)
        sp.add_argument("--out", **common)
        sp.add_argument("--format", choices=["csv", "json"], default=None)
        if name in ("solve", "cone-hunt"):
            sp.add_argument("--walks", **common)
        if name == "solve":
            sp.add_argument("--alpha", **common)
            sp.add_argument("--at", **common)
            sp.add_argument("--ball-fraction", dest="ball_fraction", **common)
            sp.add_argument("--max-steps", dest="max_steps", **common)
        if name == "field-build":
            sp.add_argument("--alpha", **common)
            sp.add_argument("--spacing", **common)
            sp.add_argument("--walks-per-node", dest="walks_per_node", **common)
            sp.add_argument("--ball-fraction", dest="ball_fraction", **common)
            sp.add_argument("--max-steps", dest="max_steps", **common)
        if name == "hessian-scan":
            sp.add_argument("--region", **common)
            sp.add_argument("--points", **common)
            sp.add_argument("--which", **common)
            sp.add_argument("--field", **common)
            sp.add_argument("--include-reflected", dest="include_reflected",
                            action="store_true")
        if name == "exponent-fit":
            sp.add_argument("--probe", **common)
            sp.add_argument("--quantity", **common)
            sp.add_argument("--h", **common)
            sp.add_argument("--field", **common)
        if name == "deform-sweep":
            sp.add_argument("--t", **common)
        if name == "cone-hunt":
            sp.add_argument("--alpha", **common)
            sp.add_argument("--theta", **common)
            sp.add_argument("--dim", **common)
    return parser


def main(argv=None) -> int:
    try:
        ns = _build_parser().parse_args(argv)
        _apply_config(ns, ns.command)
        return _COMMANDS[ns.command](ns)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonConvergedError as exc:
        print(f"numerics failed to converge: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DomainFileError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except StableTauError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
