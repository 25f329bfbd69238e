"""Smooth bounded convex planar domains given by truncated Fourier support functions.

A domain is stored as h(theta) = sum_j a_j cos(j theta) + b_j sin(j theta),
theta in [0, 2pi).  The radius of curvature at the boundary point with outer
normal angle theta is h + h'', so strict convexity is h + h'' > 0.  Minkowski
sums act coefficient-wise on support functions, which makes the deformation
D(t) = (1-t) D + t B(0,1) exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DomainFileError,
    NonConvexError,
    NotInUnitBallError,
    PointOutsideError,
)

_CERT_GRID = 4096       # convexity certification grid
_SEED_GRID = 256        # seeding grid for distance minimisation
_TABLE_GRID = 4096      # Hermite-interpolation table for hot-path evaluation
_CONVEXITY_REFINE = 0.01  # refine intervals where h+h'' drops below this
_BOUNDARY_TOL = 1e-12   # points this close to the boundary count as outside


def _trig_eval(coeffs: np.ndarray, theta, deriv: int = 0):
    """Evaluate the truncated Fourier series (or a derivative) at theta.

    coeffs has shape (n_modes, 2) holding (a_j, b_j); deriv=k applies d^k/dtheta^k.
    """
    theta = np.asarray(theta, dtype=float)
    j = np.arange(coeffs.shape[0], dtype=float)
    jt = np.multiply.outer(theta, j)
    c, s = np.cos(jt), np.sin(jt)
    a, b = coeffs[:, 0], coeffs[:, 1]
    k = deriv % 4
    if k == 0:
        basis_a, basis_b = c, s
    elif k == 1:
        basis_a, basis_b = -s, c
    elif k == 2:
        basis_a, basis_b = -c, -s
    else:
        basis_a, basis_b = s, -c
    scale = j ** deriv
    return basis_a @ (a * scale) + basis_b @ (b * scale)


def _unit(theta):
    theta = np.asarray(theta, dtype=float)
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def _project_coeffs(fn, n_modes: int, n_fft: int | None = None) -> np.ndarray:
    n_fft = n_fft or max(8 * n_modes, 1024)
    t = np.linspace(0.0, 2 * np.pi, n_fft, endpoint=False)
    spec = np.fft.rfft(np.asarray(fn(t), dtype=float)) / n_fft
    coeffs = np.zeros((n_modes, 2))
    coeffs[0, 0] = spec[0].real
    coeffs[1:, 0] = 2 * spec[1:n_modes].real
    coeffs[1:, 1] = -2 * spec[1:n_modes].imag
    return coeffs


class SupportDomain:
    """A strictly convex planar domain with the origin strictly inside.

    Immutable after construction; all operations are pure, so instances are
    safe to share across threads.
    """

    dim = 2

    def __init__(self, coeffs: np.ndarray):
        coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
        if coeffs.shape[1] != 2:
            raise ValueError("coeffs must have shape (n_modes, 2)")
        self.coeffs = coeffs.copy()
        self.coeffs.setflags(write=False)
        self.n_modes = coeffs.shape[0]
        self._certify()
        # cached seeding grid for distance queries
        tg = np.linspace(0.0, 2 * np.pi, _SEED_GRID, endpoint=False)
        self._seed_theta = tg
        self._seed_h = _trig_eval(self.coeffs, tg)
        self._seed_u = _unit(tg)
        # cubic-Hermite tables of h, h', h'' on a fine grid: the walk and
        # quadrature hot paths evaluate these instead of summing the series
        nt = _TABLE_GRID
        tt = np.linspace(0.0, 2 * np.pi, nt + 1)
        self._tab_step = 2 * np.pi / nt
        self._tab = np.stack([_trig_eval(self.coeffs, tt, k) for k in range(4)])
        # disk fast path: only the constant mode present
        self._disk_radius = None
        if self.n_modes == 1 or not np.any(self.coeffs[1:]):
            self._disk_radius = float(self.coeffs[0, 0])

    # -- construction helpers -------------------------------------------------

    @staticmethod
    def disk(radius: float = 1.0) -> "SupportDomain":
        return SupportDomain(np.array([[float(radius), 0.0]]))

    @staticmethod
    def ellipse(a: float, b: float, n_modes: int = 64) -> "SupportDomain":
        """Ellipse with semi-axes a (x) and b (y), h = sqrt(a^2 cos^2 + b^2 sin^2)."""
        return SupportDomain.from_function(
            lambda t: np.sqrt(a * a * np.cos(t) ** 2 + b * b * np.sin(t) ** 2),
            n_modes=n_modes,
        )

    @staticmethod
    def from_function(fn, n_modes: int = 64, n_fft: int | None = None) -> "SupportDomain":
        """Project a periodic support function onto the Fourier basis."""
        return SupportDomain(_project_coeffs(fn, n_modes, n_fft))

    @staticmethod
    def from_polygon(vertices, n_modes: int = 64, rounding: float = 1e-3) -> "SupportDomain":
        """Smooth a convex polygon: Fejer-weighted projection plus a small disk.

        Fejer weights keep h + h'' nonnegative (the polygon's curvature measure
        is convolved with a nonnegative kernel); the Minkowski disk of radius
        `rounding` then makes the curvature strictly positive.  The dense DFT
        keeps aliasing (amplified by j^2 in h'') below the rounding radius.
        """
        verts = np.asarray(vertices, dtype=float)
        coeffs = _project_coeffs(lambda t: np.max(verts @ _unit(t).T, axis=0),
                                 n_modes, 1 << 17)
        j = np.arange(n_modes)
        coeffs *= (1.0 - j / n_modes)[:, None]
        coeffs[0, 0] += rounding
        return SupportDomain(coeffs)

    # -- support function and certification -----------------------------------

    def support(self, theta, deriv: int = 0):
        """h(theta) or its deriv-th derivative."""
        return _trig_eval(self.coeffs, theta, deriv)

    def _support_012(self, theta):
        """(h, h', h'') by cubic Hermite interpolation of the cached tables."""
        theta = np.asarray(theta, dtype=float)
        pos = np.mod(theta, 2 * np.pi) / self._tab_step
        i = np.minimum(pos.astype(np.int64), _TABLE_GRID - 1)
        t = pos - i
        t2 = t * t
        t3 = t2 * t
        b00 = 2 * t3 - 3 * t2 + 1
        b10 = (t3 - 2 * t2 + t) * self._tab_step
        b01 = 3 * t2 - 2 * t3
        b11 = (t3 - t2) * self._tab_step
        tab = self._tab
        out = []
        for k in range(3):
            y0, y1 = tab[k, i], tab[k, i + 1]
            d0, d1 = tab[k + 1, i], tab[k + 1, i + 1]
            out.append(b00 * y0 + b10 * d0 + b01 * y1 + b11 * d1)
        return out[0], out[1], out[2]

    def _certify(self):
        tg = np.linspace(0.0, 2 * np.pi, _CERT_GRID, endpoint=False)
        h = _trig_eval(self.coeffs, tg)
        if np.min(h) <= 0:
            raise NonConvexError("support function must be positive (origin inside)")
        rc = h + _trig_eval(self.coeffs, tg, 2)
        if np.min(rc) <= 0:
            raise NonConvexError("h + h'' <= 0: boundary not strictly convex")
        # interval refinement where the certificate margin is thin
        thin = np.nonzero(rc < _CONVEXITY_REFINE)[0]
        if thin.size:
            step = 2 * np.pi / _CERT_GRID
            fine = (tg[thin][:, None] + np.linspace(0, step, 65)[None, :]).ravel()
            rc_f = _trig_eval(self.coeffs, fine) + _trig_eval(self.coeffs, fine, 2)
            if np.min(rc_f) <= 0:
                raise NonConvexError("h + h'' <= 0 on refined grid")

    def max_support(self) -> float:
        return float(np.max(self._cert_h()))

    def min_support(self) -> float:
        return float(np.min(self._cert_h()))

    def _cert_h(self):
        tg = np.linspace(0.0, 2 * np.pi, _CERT_GRID, endpoint=False)
        return _trig_eval(self.coeffs, tg)

    # -- boundary geometry -----------------------------------------------------

    def boundary_point(self, theta):
        """Boundary point with outer normal angle theta: h u + h' u_perp."""
        h = self.support(theta)
        hp = self.support(theta, 1)
        u = _unit(theta)
        up = _unit(np.asarray(theta, dtype=float) + np.pi / 2)
        return (h[..., None] * u + hp[..., None] * up) if u.ndim > 1 else h * u + hp * up

    def signed_distance(self, x):
        """min_theta (h - x.u): equals delta_D(x) inside and -dist(x, D) outside."""
        d, _ = self._signed_distance_foot(np.atleast_2d(np.asarray(x, dtype=float)))
        return d if np.ndim(x) > 1 else float(d[0])

    def _signed_distance_foot(self, pts: np.ndarray):
        """Vectorised signed distance plus the minimising normal angle."""
        if self._disk_radius is not None:
            r = np.hypot(pts[:, 0], pts[:, 1])
            theta = np.arctan2(pts[:, 1], pts[:, 0])
            theta[r == 0] = 0.0
            return self._disk_radius - r, theta
        g = self._seed_h[None, :] - pts @ self._seed_u.T
        k = np.argmin(g, axis=1)
        theta = self._seed_theta[k]
        step_cap = 2 * np.pi / _SEED_GRID
        x1, x2 = pts[:, 0], pts[:, 1]
        val = None
        for it in range(3):
            h, h1, h2 = self._support_012(theta)
            ct, st = np.cos(theta), np.sin(theta)
            xu = x1 * ct + x2 * st
            if it == 2:
                val = h - xu
            gp = h1 - (-x1 * st + x2 * ct)
            gpp = h2 + xu
            gpp = np.where(np.abs(gpp) < 1e-14, 1e-14, gpp)
            theta = theta - np.clip(gp / gpp, -step_cap, step_cap)
        grid_val = g[np.arange(len(pts)), k]
        better = grid_val < val  # Newton should only improve; guard regressions
        val = np.where(better, grid_val, val)
        theta = np.where(better, self._seed_theta[k], theta)
        return val, np.mod(theta, 2 * np.pi)

    def contains(self, x) -> bool:
        """True iff x is interior; boundary points within 1e-12 report False."""
        return bool(self.signed_distance(x) > _BOUNDARY_TOL)

    def contains_batch(self, pts: np.ndarray) -> np.ndarray:
        d, _ = self._signed_distance_foot(np.asarray(pts, dtype=float))
        return d > _BOUNDARY_TOL

    def boundary_distance(self, x) -> float:
        """delta_D(x) for interior x; raises PointOutsideError otherwise."""
        d = self.signed_distance(x)
        if d <= _BOUNDARY_TOL:
            raise PointOutsideError(f"point {x} is not interior")
        return float(d)

    def boundary_distance_batch(self, pts: np.ndarray) -> np.ndarray:
        d, _ = self._signed_distance_foot(np.asarray(pts, dtype=float))
        return d

    def nearest_boundary(self, x):
        """(foot point, normal angle, signed distance) of the nearest boundary point."""
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        d, theta = self._signed_distance_foot(pts)
        foot = pts + d[:, None] * _unit(theta)
        if np.ndim(x) == 1:
            return foot[0], float(theta[0]), float(d[0])
        return foot, theta, d

    def curvature(self, theta):
        """Curvature at the boundary point with outer normal angle theta."""
        rc = self.support(theta) + self.support(theta, 2)
        if np.any(np.asarray(rc) <= 0):
            raise NonConvexError("h + h'' <= 0 at requested angle")
        return 1.0 / rc

    # -- domain class parameters --------------------------------------------------

    def classify(self) -> "ClassFParams":
        """Tightest (C1, R1, kappa1, kappa2) over a dense grid with local polish."""
        tg = np.linspace(0.0, 2 * np.pi, _CERT_GRID, endpoint=False)
        h = _trig_eval(self.coeffs, tg)
        if np.max(h) > 1.0 + 1e-12:
            raise NotInUnitBallError("classify requires D inside B(0,1): max h <= 1")
        rc = h + _trig_eval(self.coeffs, tg, 2)
        kappa = 1.0 / rc
        r1 = self._polish_extremum(tg[np.argmin(h)], kind="support", minimize=True)
        k_lo = self._polish_extremum(tg[np.argmax(rc)], kind="radius", minimize=False)
        k_hi = self._polish_extremum(tg[np.argmin(rc)], kind="radius", minimize=True)
        kappa1, kappa2 = 1.0 / k_lo, 1.0 / k_hi
        pts = self.boundary_point(tg)
        seg = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
        dk = np.abs(np.roll(kappa, -1) - kappa)
        c1 = float(np.max(dk / np.maximum(seg, 1e-300)))
        return ClassFParams(C1=c1, R1=float(r1), kappa1=float(min(kappa1, kappa2)),
                            kappa2=float(max(kappa1, kappa2)))

    def _polish_extremum(self, theta0: float, kind: str, minimize: bool) -> float:
        """Newton-polish a grid extremum of h (kind='support') or h+h'' ('radius')."""
        if kind == "support":
            val = lambda t: self.support(t)
            d1 = lambda t: self.support(t, 1)
            d2 = lambda t: self.support(t, 2)
        else:
            val = lambda t: self.support(t) + self.support(t, 2)
            d1 = lambda t: self.support(t, 1) + self.support(t, 3)
            d2 = lambda t: self.support(t, 2) + self.support(t, 4)
        t = float(theta0)
        cap = 2 * np.pi / _CERT_GRID
        for _ in range(6):
            g2 = float(d2(t))
            if abs(g2) < 1e-13:
                break
            t -= float(np.clip(float(d1(t)) / g2, -cap, cap))
        cand = [float(val(theta0)), float(val(t))]
        return min(cand) if minimize else max(cand)

    def __repr__(self):
        if self._disk_radius is not None:
            return f"SupportDomain.disk({self._disk_radius:g})"
        return f"SupportDomain(n_modes={self.n_modes})"


@dataclass(frozen=True)
class ClassFParams:
    """Lambda = (C1, R1, kappa1, kappa2): curvature Lipschitz constant, inner
    radius, curvature bounds."""

    C1: float
    R1: float
    kappa1: float
    kappa2: float

    def __post_init__(self):
        if not (self.C1 >= 0 and self.R1 > 0 and 0 < self.kappa1 <= self.kappa2):
            raise ValueError(f"invalid class-F parameters: {self}")


def deform(dom: SupportDomain, t: float) -> SupportDomain:
    """Minkowski interpolation (1-t) D + t B(0,1), exact on support coefficients."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    coeffs = (1.0 - t) * dom.coeffs
    coeffs = coeffs.copy()
    coeffs[0, 0] += t
    return SupportDomain(coeffs)


def domain_gap(a: SupportDomain, b: SupportDomain, n_samples: int = 2048) -> float:
    """Symmetric boundary-gap metric: min of the two one-sided boundary sups."""
    tg = np.linspace(0.0, 2 * np.pi, n_samples, endpoint=False)
    pa = a.boundary_point(tg)
    pb = b.boundary_point(tg)
    da, _ = b._signed_distance_foot(pa)
    db, _ = a._signed_distance_foot(pb)
    return float(min(np.max(np.abs(da)), np.max(np.abs(db))))


class ConeDomain:
    """Truncated cone {x : |x_perp| < x1 tan(theta), |x| < 1} in R^d.

    Kept implicit (no support representation): used only by the Monte Carlo
    solver in the narrow-cone experiments, never by the extension module.
    """

    def __init__(self, theta: float, dim: int = 2):
        if not 0.0 < theta < np.pi / 2:
            raise ValueError("cone half-aperture must lie in (0, pi/2)")
        if dim < 2:
            raise ValueError("cone dimension must be >= 2")
        self.theta = float(theta)
        self.dim = int(dim)
        self._sin = math.sin(self.theta)
        self._cos = math.cos(self.theta)
        self._tan = math.tan(self.theta)

    def contains_batch(self, pts: np.ndarray) -> np.ndarray:
        return self.boundary_distance_batch(pts) > _BOUNDARY_TOL

    def contains(self, x) -> bool:
        return bool(self.contains_batch(np.atleast_2d(np.asarray(x, dtype=float)))[0])

    def boundary_distance_batch(self, pts: np.ndarray) -> np.ndarray:
        """Signed distance: min of lateral-surface and unit-sphere distances."""
        pts = np.asarray(pts, dtype=float)
        x1 = pts[:, 0]
        perp = np.linalg.norm(pts[:, 1:], axis=1)
        lateral = x1 * self._sin - perp * self._cos
        sphere = 1.0 - np.linalg.norm(pts, axis=1)
        return np.minimum(lateral, sphere)

    def boundary_distance(self, x) -> float:
        d = float(self.boundary_distance_batch(np.atleast_2d(np.asarray(x, dtype=float)))[0])
        if d <= _BOUNDARY_TOL:
            raise PointOutsideError(f"point {x} is not interior to the cone")
        return d

    def __repr__(self):
        return f"ConeDomain(theta={self.theta:g}, dim={self.dim})"


# -- file formats ----------------------------------------------------------------

def save_domain(dom, path) -> None:
    """Write `support-fourier v1` or `cone v1` plain-text files."""
    with open(path, "w") as fh:
        if isinstance(dom, SupportDomain):
            fh.write("support-fourier v1\n")
            fh.write(f"n_modes={dom.n_modes}\n")
            for a, b in dom.coeffs:
                fh.write(f"{a:.17g} {b:.17g}\n")
        elif isinstance(dom, ConeDomain):
            fh.write("cone v1\n")
            fh.write(f"theta={dom.theta:.17g} dim={dom.dim}\n")
        else:
            raise TypeError(f"cannot serialise {type(dom).__name__}")


def load_domain(path):
    try:
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise DomainFileError(str(exc)) from exc
    if not lines:
        raise DomainFileError(f"{path}: empty domain file")
    header = lines[0]
    try:
        if header == "support-fourier v1":
            if not lines[1].startswith("n_modes="):
                raise DomainFileError(f"{path}: missing n_modes line")
            n = int(lines[1].split("=", 1)[1])
            rows = [tuple(map(float, ln.split())) for ln in lines[2:2 + n]]
            if len(rows) != n:
                raise DomainFileError(f"{path}: expected {n} coefficient lines")
            return SupportDomain(np.array(rows))
        if header == "cone v1":
            fields = dict(tok.split("=", 1) for tok in lines[1].split())
            return ConeDomain(theta=float(fields["theta"]), dim=int(fields["dim"]))
    except DomainFileError:
        raise
    except Exception as exc:
        raise DomainFileError(f"{path}: malformed domain file ({exc})") from exc
    raise DomainFileError(f"{path}: unknown header {header!r}")
