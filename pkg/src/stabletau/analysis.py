"""Batch verification experiments over the extension and the Monte Carlo field.

Each experiment returns a ScanReport (point set, per-point verdicts, failure
witnesses) or an ExponentFit (log-log slope with its OLS standard error).
Reports are reproducible bit for bit for a fixed seed and configuration, and
serialise to JSON and CSV with 17 significant digits; runtimes are kept out
of the files so reruns stay byte-identical.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator, Philox

from .closedform import StableParams, exterior_half_laplacian
from .errors import InsufficientRangeError, StableTauError
from .extension import (
    ExtensionContext,
    aux_w_hess,
    eval_hessian,
    hessian_signature,
    local_frame_hessian,
    _det3,
)
from .geom import ConeDomain, SupportDomain, deform, domain_gap, _unit
from .wos import WalkConfig, estimate_phi

_PASS, _FAIL, _INDET = "pass", "fail", "indeterminate"


def fmt17(x) -> str:
    return f"{float(x):.17g}"


def halton(n: int, dim: int, skip: int = 0) -> np.ndarray:
    """Unscrambled Halton points in [0, 1)^dim (bases 2, 3, 5, 7, ...)."""
    bases = [2, 3, 5, 7, 11, 13][:dim]
    out = np.empty((n, dim))
    for d, b in enumerate(bases):
        for i in range(n):
            k, f, x = i + 1 + skip, 1.0, 0.0
            while k > 0:
                f /= b
                x += f * (k % b)
                k //= b
            out[i, d] = x
    return out


@dataclass
class ScanReport:
    """Point-set experiment outcome with per-point verdicts.

    `runtime` is wall-clock seconds and is excluded from serialisation so
    identical runs produce identical files.
    """

    experiment: str
    descriptor: str
    config: dict
    point_columns: list
    points: np.ndarray
    columns: list
    values: np.ndarray
    verdicts: list
    scan_column: str
    runtime: float = 0.0
    witnesses: list = field(default_factory=list)

    def __post_init__(self):
        fails = [i for i, v in enumerate(self.verdicts) if v == _FAIL]
        if fails and not self.witnesses:
            col = self.columns.index(self.scan_column)
            self.witnesses = [
                {"point": [float(c) for c in self.points[i]],
                 "value": float(self.values[i, col])}
                for i in fails
            ]

    @property
    def n_pass(self):
        return sum(v == _PASS for v in self.verdicts)

    @property
    def n_fail(self):
        return sum(v == _FAIL for v in self.verdicts)

    @property
    def n_indeterminate(self):
        return sum(v == _INDET for v in self.verdicts)

    @property
    def min_value(self):
        return float(np.min(self.values[:, self.columns.index(self.scan_column)]))

    @property
    def max_value(self):
        return float(np.max(self.values[:, self.columns.index(self.scan_column)]))

    def summary(self) -> str:
        return (f"{self.experiment}: {self.n_pass} pass, {self.n_fail} fail, "
                f"{self.n_indeterminate} indeterminate; {self.scan_column} in "
                f"[{self.min_value:.6g}, {self.max_value:.6g}]")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(list(self.point_columns) + list(self.columns) + ["verdict"])
            for i in range(len(self.points)):
                row = [fmt17(c) for c in self.points[i]]
                row += [fmt17(v) for v in self.values[i]]
                row.append(self.verdicts[i])
                w.writerow(row)

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.json_text())

    def json_text(self) -> str:
        return _json_dump({
            "experiment": self.experiment,
            "descriptor": self.descriptor,
            "config": self.config,
            "point_columns": list(self.point_columns),
            "points": self.points,
            "columns": list(self.columns),
            "values": self.values,
            "verdicts": list(self.verdicts),
            "witnesses": self.witnesses,
            "summary": {
                "pass": self.n_pass, "fail": self.n_fail,
                "indeterminate": self.n_indeterminate,
                "min": self.min_value, "max": self.max_value,
            },
        })


def _json_dump(obj, indent=0) -> str:
    """Minimal JSON writer with %.17g floats (stdlib json hardwires repr)."""
    pad = " " * indent
    if isinstance(obj, dict):
        items = ",\n".join(
            f'{pad}  "{k}": {_json_dump(v, indent + 2).lstrip()}' for k, v in obj.items())
        return f"{pad}{{\n{items}\n{pad}}}"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        flat = all(not isinstance(v, (list, tuple, dict, np.ndarray)) for v in obj)
        if flat:
            return pad + "[" + ", ".join(_json_dump(v).strip() for v in obj) + "]"
        items = ",\n".join(_json_dump(v, indent + 2) for v in obj)
        return f"{pad}[\n{items}\n{pad}]"
    if isinstance(obj, bool) or obj is None:
        return pad + {True: "true", False: "false", None: "null"}[obj]
    if isinstance(obj, (int, np.integer)):
        return pad + str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return pad + fmt17(obj)
    return pad + '"' + str(obj).replace("\\", "\\\\").replace('"', '\\"') + '"'


@dataclass
class ExponentFit:
    """Log-log slope of |quantity| against the probe scale h."""

    probe: str
    quantity: str
    h_values: np.ndarray
    values: np.ndarray
    slope: float
    slope_stderr: float
    signs: np.ndarray

    @property
    def low_confidence(self) -> bool:
        return self.slope_stderr > 0.1

    def sign_consistent(self) -> bool:
        return bool(np.all(self.signs == self.signs[0]))

    def summary(self) -> str:
        flag = " (low confidence)" if self.low_confidence else ""
        return (f"{self.quantity} on {self.probe}: slope {self.slope:+.4f} "
                f"+/- {self.slope_stderr:.4f}{flag}, sign {int(self.signs[0]):+d}")

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(_json_dump({
                "probe": self.probe, "quantity": self.quantity,
                "h": self.h_values, "values": self.values,
                "slope": self.slope, "slope_stderr": self.slope_stderr,
                "signs": self.signs.astype(int),
            }))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["h", "value", "sign"])
            for h, v, s in zip(self.h_values, self.values, self.signs):
                w.writerow([fmt17(h), fmt17(v), int(s)])


def _ols_loglog(h, vals):
    x = np.log(np.asarray(h, dtype=float))
    y = np.log(np.abs(np.asarray(vals, dtype=float)))
    n = x.size
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    resid = y - ym - slope * (x - xm)
    stderr = math.sqrt(float(np.sum(resid ** 2)) / max(n - 2, 1) / sxx)
    return slope, stderr


def _interior_points(dom, n, rng, margin=0.0):
    half = dom.max_support()
    out = np.empty((n, 2))
    got = 0
    while got < n:
        cand = rng.uniform(-half, half, size=(4 * (n - got) + 16, 2))
        d = dom.boundary_distance_batch(cand)
        keep = cand[d > margin]
        take = min(len(keep), n - got)
        out[got:got + take] = keep[:take]
        got += take
    return out


def _run_points(worker, n, n_threads):
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            return list(pool.map(worker, range(n)))
    return [worker(i) for i in range(n)]


# -- Hessian scans -------------------------------------------------------------------

_HESS_COLUMNS = ["u11", "u12", "u13", "u22", "u23", "u33",
                 "det", "trace", "sig_pos", "sig_neg", "det_err"]


def cylinder_points(m: float, n: int) -> np.ndarray:
    """Halton points in the open upper cylinder {x1^2 + x2^2 < M^2, 0 < x3 < M}."""
    u = halton(n, 3)
    r = m * np.sqrt(u[:, 0])
    ang = 2 * np.pi * u[:, 1]
    return np.stack([r * np.cos(ang), r * np.sin(ang), m * u[:, 2]], axis=1)


def slab_points(dom, n: int, margin: float = 0.02) -> np.ndarray:
    """Halton points of the open slab over the domain, kept margin-deep."""
    half = dom.max_support()
    pts = np.empty((n, 3))
    got, skip = 0, 0
    while got < n:
        u = halton(4 * (n - got) + 16, 2, skip=skip)
        skip += len(u)
        cand = (2 * u - 1) * half
        d = dom.boundary_distance_batch(cand)
        keep = cand[d > margin]
        take = min(len(keep), n - got)
        pts[got:got + take, :2] = keep[:take]
        got += take
    pts[:, 2] = 0.0
    return pts


def _verdict(det, err, sig, converged):
    if not converged or abs(det) <= 10.0 * err:
        return _INDET
    if det > 0 and sig == (1, 2, 0):
        return _PASS
    return _FAIL


def hessian_scan(ctx: ExtensionContext, points: np.ndarray, which: str = "u", *,
                 eps: float = 0.0, b: float = 0.0, descriptor: str = "custom",
                 n_threads: int = 1) -> ScanReport:
    """Determinant positivity and signature (1,2,0) at each point.

    A point passes when det > 10x its propagated error estimate with the
    right signature; |det| within 10x the estimate is indeterminate, not a
    failure (Monte Carlo fields cannot certify strict inequalities).
    """
    t0 = time.time()
    points = np.asarray(points, dtype=float)

    def worker(i):
        s = eval_hessian(ctx, points[i], which, eps=eps, b=b)
        h = s.hess
        row = [h[0, 0], h[0, 1], h[0, 2], h[1, 1], h[1, 2], h[2, 2],
               s.det, s.trace, s.signature[0], s.signature[1], s.det_err]
        return row, _verdict(s.det, s.det_err, s.signature, s.converged)

    results = _run_points(worker, len(points), n_threads)
    values = np.array([r[0] for r in results])
    verdicts = [r[1] for r in results]
    return ScanReport(
        experiment=f"hessian_scan[{which}]", descriptor=descriptor,
        config={"which": which, "eps": eps, "b": b, "n_points": len(points)},
        point_columns=["x1", "x2", "x3"], points=points,
        columns=_HESS_COLUMNS, values=values, verdicts=verdicts,
        scan_column="det", runtime=time.time() - t0)


def psi_b_scan(ctx: ExtensionContext, b_grid, points: np.ndarray, *,
               descriptor: str = "custom", n_threads: int = 1) -> ScanReport:
    """det(Hess Psi_b) > 0 across the blend grid; the field Hessian is
    evaluated once per point and blended with the closed-form companion."""
    t0 = time.time()
    b_grid = np.asarray(b_grid, dtype=float)
    points = np.asarray(points, dtype=float)

    def worker(i):
        s = eval_hessian(ctx, points[i], "u")
        w_h = aux_w_hess(points[i])
        dets = []
        worst = (math.inf, None)
        for bb in b_grid:
            hb = (1 - bb) * s.hess + bb * w_h
            det = _det3(hb)
            dets.append(det)
            if det < worst[0]:
                worst = (det, bb)
        dets = np.array(dets)
        err = float(np.max((1 - b_grid)) * s.det_err)
        min_det = float(np.min(dets))
        sig_ok = all(hessian_signature((1 - bb) * s.hess + bb * w_h) == (1, 2, 0)
                     for bb in b_grid)
        verdict = _verdict(min_det, err, (1, 2, 0) if sig_ok else (0, 0, 3), s.converged)
        return [min_det, float(worst[1]), err], verdict

    results = _run_points(worker, len(points), n_threads)
    values = np.array([r[0] for r in results])
    verdicts = [r[1] for r in results]
    return ScanReport(
        experiment="psi_b_scan", descriptor=descriptor,
        config={"b_grid": [float(bb) for bb in b_grid], "n_points": len(points)},
        point_columns=["x1", "x2", "x3"], points=points,
        columns=["min_det", "argmin_b", "det_err"], values=values,
        verdicts=verdicts, scan_column="min_det", runtime=time.time() - t0)


# -- concavity and the general-alpha inequalities ---------------------------------------

def concavity_check(phi_eval, dom, n_triples: int, tol: float, *, seed: int = 0,
                    stderr_eval=None, transform=None,
                    descriptor: str = "") -> ScanReport:
    """Midpoint-style concavity on random interior triples.

    Checks phi(lam x + (1-lam) y) >= lam phi(x) + (1-lam) phi(y) - tol, with
    tol widened by three combined standard errors when stderr_eval is given.
    transform (e.g. sqrt for the Brownian case) is applied to the values.
    """
    t0 = time.time()
    rng = Generator(Philox(key=np.array([seed, 0xC0CA], dtype=np.uint64)))
    xs = _interior_points(dom, n_triples, rng)
    ys = _interior_points(dom, n_triples, rng)
    lam = rng.uniform(0.0, 1.0, n_triples)
    mids = lam[:, None] * xs + (1 - lam[:, None]) * ys
    fx, fy, fm = phi_eval(xs), phi_eval(ys), phi_eval(mids)
    if transform is not None:
        fx, fy, fm = transform(fx), transform(fy), transform(fm)
    margin = fm - (lam * fx + (1 - lam) * fy)
    tol_eff = np.full(n_triples, tol)
    if stderr_eval is not None:
        sx, sy, sm = stderr_eval(xs), stderr_eval(ys), stderr_eval(mids)
        tol_eff = tol + 3.0 * np.sqrt(sm ** 2 + (lam * sx) ** 2 + ((1 - lam) * sy) ** 2)
    verdicts = [_PASS if m >= -t else _FAIL for m, t in zip(margin, tol_eff)]
    pts = np.concatenate([xs, ys, lam[:, None]], axis=1)
    values = np.stack([fm, lam * fx + (1 - lam) * fy, margin, tol_eff], axis=1)
    return ScanReport(
        experiment="concavity_check", descriptor=descriptor or f"{n_triples} triples",
        config={"n_triples": n_triples, "tol": tol, "seed": seed,
                "transform": bool(transform)},
        point_columns=["x1", "x2", "y1", "y2", "lambda"], points=pts,
        columns=["phi_mid", "chord", "margin", "tol"], values=values,
        verdicts=verdicts, scan_column="margin", runtime=time.time() - t0)


def scaling_inequality_check(dom, p: StableParams, phi_eval, n_cases: int, tol: float, *,
                          seed: int = 0, stderr_eval=None,
                          descriptor: str = "") -> ScanReport:
    """Both parts of the general-alpha inequality family on sampled cases.

    part a: phi(lam x + (1-lam) x0) >= lam^alpha phi(x) with x0 on the boundary;
    part b: phi(lam x + (1-lam) y) >= (lam^alpha phi(x) + (1-lam)^alpha phi(y)) / 2.
    """
    t0 = time.time()
    rng = Generator(Philox(key=np.array([seed, 0x7743], dtype=np.uint64)))
    half = n_cases // 2
    rows, vals, verdicts = [], [], []

    # part a
    xs = _interior_points(dom, half, rng)
    angles = rng.uniform(0, 2 * np.pi, half)
    x0 = dom.boundary_point(angles)
    lam = rng.uniform(0.0, 1.0, half)
    z = lam[:, None] * xs + (1 - lam[:, None]) * x0
    lhs = phi_eval(z)
    rhs = lam ** p.alpha * phi_eval(xs)
    tol_a = np.full(half, tol)
    if stderr_eval is not None:
        tol_a = tol + 3.0 * np.sqrt(stderr_eval(z) ** 2
                                    + (lam ** p.alpha * stderr_eval(xs)) ** 2)
    for i in range(half):
        rows.append([0.0, xs[i, 0], xs[i, 1], x0[i, 0], x0[i, 1], lam[i]])
        vals.append([lhs[i], rhs[i], lhs[i] - rhs[i], tol_a[i]])
        verdicts.append(_PASS if lhs[i] - rhs[i] >= -tol_a[i] else _FAIL)

    # part b
    nb = n_cases - half
    xs = _interior_points(dom, nb, rng)
    ys = _interior_points(dom, nb, rng)
    lam = rng.uniform(0.0, 1.0, nb)
    z = lam[:, None] * xs + (1 - lam[:, None]) * ys
    lhs = phi_eval(z)
    rhs = 0.5 * (lam ** p.alpha * phi_eval(xs) + (1 - lam) ** p.alpha * phi_eval(ys))
    tol_b = np.full(nb, tol)
    if stderr_eval is not None:
        tol_b = tol + 3.0 * np.sqrt(
            stderr_eval(z) ** 2 + (0.5 * lam ** p.alpha * stderr_eval(xs)) ** 2
            + (0.5 * (1 - lam) ** p.alpha * stderr_eval(ys)) ** 2)
    for i in range(nb):
        rows.append([1.0, xs[i, 0], xs[i, 1], ys[i, 0], ys[i, 1], lam[i]])
        vals.append([lhs[i], rhs[i], lhs[i] - rhs[i], tol_b[i]])
        verdicts.append(_PASS if lhs[i] - rhs[i] >= -tol_b[i] else _FAIL)

    return ScanReport(
        experiment="scaling_inequality_check",
        descriptor=descriptor or f"alpha={p.alpha}, {n_cases} cases",
        config={"alpha": p.alpha, "n_cases": n_cases, "tol": tol, "seed": seed},
        point_columns=["part", "x1", "x2", "y1", "y2", "lambda"],
        points=np.array(rows), columns=["lhs", "rhs", "margin", "tol"],
        values=np.array(vals), verdicts=verdicts, scan_column="margin",
        runtime=time.time() - t0)


def cone_nonconcavity_hunt(cone: ConeDomain, p: StableParams, cfg: WalkConfig, *,
                           scales=None, n_threads: int = 1) -> ScanReport:
    """Search axis triples of a cone for midpoint-concavity violations.

    A witness is a triple whose midpoint deficit exceeds five combined
    standard errors; finding none falsifies nothing (the narrow-cone
    prediction is asymptotic in the aperture).
    """
    if not 1.0 < p.alpha < 2.0:
        raise StableTauError("the non-concavity hunt targets alpha in (1, 2)")
    t0 = time.time()
    scales = np.asarray(scales if scales is not None
                        else [0.6, 0.45, 0.3, 0.2, 0.12, 0.07], dtype=float)
    axis = np.zeros(cone.dim)

    def phi_at(t, stream):
        x = axis.copy()
        x[0] = t
        est = estimate_phi(cone, p, x, cfg, stream=stream, n_threads=n_threads)
        return est.mean, est.std_error

    rows, vals, verdicts = [], [], []
    profile = []
    for i, s in enumerate(scales):
        t1, t2 = s, s / 4.0
        tm = 0.5 * (t1 + t2)
        f1, e1 = phi_at(t1, 3 * i + 1)
        f2, e2 = phi_at(t2, 3 * i + 2)
        fm, em = phi_at(tm, 3 * i + 3)
        deficit = 0.5 * (f1 + f2) - fm
        sigma = math.sqrt(em * em + 0.25 * (e1 * e1 + e2 * e2))
        z = deficit / sigma if sigma > 0 else 0.0
        rows.append([t1, t2, tm])
        vals.append([f1, f2, fm, deficit, sigma, z])
        verdicts.append(_FAIL if z > 5.0 else _PASS)  # fail marks a witness
        profile.append((t1, f1, e1))
        profile.append((tm, fm, em))
        profile.append((t2, f2, e2))
    profile.sort()
    monotone = all(
        profile[i + 1][1] - profile[i][1] >= -3.0 * math.hypot(profile[i + 1][2], profile[i][2])
        for i in range(len(profile) - 1))
    report = ScanReport(
        experiment="cone_nonconcavity_hunt",
        descriptor=f"theta={cone.theta:g}, dim={cone.dim}, alpha={p.alpha:g}",
        config={"theta": cone.theta, "dim": cone.dim, "alpha": p.alpha,
                "n_walks": cfg.n_walks, "seed": cfg.seed,
                "axis_profile_nondecreasing": monotone},
        point_columns=["t1", "t2", "t_mid"], points=np.array(rows),
        columns=["phi1", "phi2", "phi_mid", "deficit", "sigma", "zscore"],
        values=np.array(vals), verdicts=verdicts, scan_column="zscore",
        runtime=time.time() - t0)
    report.witnesses = [
        {"point": [float(c) for c in rows[i]], "value": float(vals[i][5])}
        for i in range(len(rows)) if verdicts[i] == _FAIL]
    return report


# -- boundary exponents ------------------------------------------------------------------

_S_LOCAL = {  # representative local (x1, x3) per probe family, in units of h
    "S1": (-1.0, 0.125), "S2": (-1.0, 0.625), "S3": (1.0, 0.625), "S4": (1.0, 0.125),
}

_TARGET_SLOPES = {
    ("normal-slab", "phi_n"): -0.5,
    ("normal-slab", "phi_nn"): -1.5,
    ("normal-slab", "phi_TT"): -0.5,
    ("S4", "u22"): -0.5,
    ("S2", "u11"): -1.5,
    ("S1", "u13"): -1.5,
    ("S3", "u13"): -1.5,
    ("exterior", "ext_half_lap"): -0.5,
}


def target_slope(probe: str, quantity: str):
    return _TARGET_SLOPES.get((probe, quantity))


def boundary_exponent_fit(ctx: ExtensionContext, probe: str, quantity: str,
                          h_values, *, boundary_angle: float = 0.0) -> ExponentFit:
    """Log-log slope of |quantity| along a boundary probe family.

    Probes: normal-slab (inward points on the slab), S1..S4 (the boundary
    frame boxes straddling the slab edge), exterior (outward slab points).
    """
    h_values = np.sort(np.asarray(h_values, dtype=float))
    if h_values.size < 5 or h_values[-1] / h_values[0] < 5.0:
        raise InsufficientRangeError("need >= 5 h-values spanning a factor >= 5")
    psi = float(boundary_angle)
    y0 = ctx.dom.boundary_point(psi)
    n_in = -_unit(psi)
    t_cw = np.array([math.sin(psi), -math.cos(psi)])
    vals = np.empty(h_values.size)

    for i, h in enumerate(h_values):
        if probe == "normal-slab":
            vals[i] = _slab_quantity(ctx, y0, n_in, t_cw, h, quantity)
        elif probe == "exterior":
            x = y0 - h * n_in
            v, _ = exterior_half_laplacian(ctx.dom, ctx.phi.values_at, x, ctx.quad)
            vals[i] = v
        elif probe in _S_LOCAL:
            a1, a3 = _S_LOCAL[probe]
            xy = y0 + a1 * h * n_in
            x = np.array([xy[0], xy[1], a3 * h])
            sample = eval_hessian(ctx, x, "u")
            loc = local_frame_hessian(sample.hess, psi)
            vals[i] = _pick_entry(loc, quantity)
        else:
            raise ValueError(f"unknown probe {probe!r}")
    slope, stderr = _ols_loglog(h_values, vals)
    return ExponentFit(probe=probe, quantity=quantity, h_values=h_values,
                       values=vals, slope=slope, slope_stderr=stderr,
                       signs=np.sign(vals))


def _pick_entry(local_hess, quantity):
    idx = {"u11": (0, 0), "u22": (1, 1), "u33": (2, 2),
           "u12": (0, 1), "u13": (0, 2), "u23": (1, 2)}
    if quantity not in idx:
        raise ValueError(f"quantity {quantity!r} is not a Hessian entry")
    i, j = idx[quantity]
    return float(local_hess[i, j])


def _slab_quantity(ctx, y0, n_in, t_cw, delta, quantity):
    base = y0 + delta * n_in

    def phi1(pt):
        return float(ctx.phi.values_at(pt[None])[0])

    if quantity == "phi_n":
        e = delta / 20.0
        return (phi1(base + e * n_in) - phi1(base - e * n_in)) / (2 * e)
    if quantity == "phi_nn":
        e = delta / 10.0
        return (phi1(base + e * n_in) - 2 * phi1(base)
                + phi1(base - e * n_in)) / e ** 2
    if quantity == "phi_TT":
        e = delta / 10.0
        return (phi1(base + e * t_cw) - 2 * phi1(base)
                + phi1(base - e * t_cw)) / e ** 2
    raise ValueError(f"quantity {quantity!r} is not a slab quantity")


# -- deformation sweep ----------------------------------------------------------------

def deformation_sweep(dom: SupportDomain, t_grid, *, gap_tol: float = 1e-9,
                      curvature_slack: float = 1e-6) -> ScanReport:
    """Classify each interpolated domain and check the curvature pinching law.

    Curvatures of D(t) must stay within [min(kappa1, 1), max(kappa2, 1)] up to
    curvature_slack; consecutive boundary gaps must obey the support-function
    Lipschitz bound |dt| (1 + max h).
    """
    t0c = time.time()
    t_grid = np.asarray(t_grid, dtype=float)
    base = dom.classify()
    lo = min(base.kappa1, 1.0) - curvature_slack
    hi = max(base.kappa2, 1.0) + curvature_slack
    doms = [deform(dom, float(t)) for t in t_grid]
    rows, vals, verdicts = [], [], []
    max_h = dom.max_support()
    for i, t in enumerate(t_grid):
        cl = doms[i].classify()
        gap = domain_gap(doms[i], doms[i + 1]) if i + 1 < len(t_grid) else 0.0
        gap_bound = (abs(t_grid[i + 1] - t) if i + 1 < len(t_grid) else 0.0) * (1 + max_h)
        ok = lo <= cl.kappa1 and cl.kappa2 <= hi and gap <= gap_bound + gap_tol
        rows.append([t])
        vals.append([cl.R1, cl.kappa1, cl.kappa2, cl.C1, gap, gap_bound])
        verdicts.append(_PASS if ok else _FAIL)
    return ScanReport(
        experiment="deformation_sweep",
        descriptor=f"t in [{t_grid[0]:g}, {t_grid[-1]:g}], {len(t_grid)} steps",
        config={"kappa_low": lo, "kappa_high": hi, "curvature_slack": curvature_slack},
        point_columns=["t"], points=np.array(rows),
        columns=["R1", "kappa1", "kappa2", "C1", "gap_next", "gap_bound"],
        values=np.array(vals), verdicts=verdicts, scan_column="kappa2",
        runtime=time.time() - t0c)
