"""Harmonic extension of the exit-time field to 3-space and its Hessian.

For x3 > 0 the extension is the half-space Poisson integral of the planar
field; its second derivatives are obtained by differentiating the kernel
under the integral (never by differencing the Monte Carlo field).  The lower
half-space is the reflection u(x1, x2, -x3) - 2 x3, whose Hessian follows by
flipping the signs of the 13 and 23 entries, and on the slab over the domain
the vertical column is (0, 0, -u11 - u22) with the planar block read off the
field itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .closedform import (
    EPS_QUADRATIC_HESS,
    aux_w_hess,
    exterior_half_laplacian,
    kernel_K,
    kernel_K_grad,
    kernel_K_hess_components,
)
from .errors import NonConvergedError, OnBoundaryError, UndefinedOnCutError
from .geom import SupportDomain
from .quad import QuadSpec, integrate

_SIGNATURE_CUT = 1e-9  # zero-eigenvalue threshold, relative to the largest one


class DiskPhi:
    """Closed-form exit-time field of the planar Cauchy process on the unit disk."""

    spacing = 0.0

    def __init__(self, radius: float = 1.0):
        self.radius = float(radius)

    def values_at(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        gap = np.maximum(self.radius ** 2 - np.sum(pts * pts, axis=1), 0.0)
        return (2.0 / math.pi) * np.sqrt(gap)

    def stderr_at(self, pts) -> np.ndarray:
        return np.zeros(len(np.atleast_2d(pts)))

    def slab_hessian(self, x):
        """(phi_11, phi_22, phi_12) at an interior point, differentiated exactly."""
        x = np.asarray(x, dtype=float)
        gap = self.radius ** 2 - float(x @ x)
        if gap <= 0:
            raise UndefinedOnCutError("slab Hessian needs an interior point")
        cb = 2.0 / math.pi
        g12, g32 = gap ** -0.5, gap ** -1.5
        h11 = -cb * (g12 + x[0] * x[0] * g32)
        h22 = -cb * (g12 + x[1] * x[1] * g32)
        h12 = -cb * x[0] * x[1] * g32
        return h11, h22, h12

    def typical_stderr(self) -> float:
        return 0.0

    def __call__(self, pts):
        return self.values_at(pts)


@dataclass
class ExtensionContext:
    """Domain, planar field, and quadrature defaults shared by evaluations."""

    dom: SupportDomain
    phi: object
    quad: QuadSpec = field(default_factory=QuadSpec)

    def phi_stderr(self) -> float:
        fn = getattr(self.phi, "typical_stderr", None)
        return float(fn()) if fn is not None else 0.0


@dataclass(frozen=True)
class HessianSample:
    x: np.ndarray
    hess: np.ndarray
    det: float
    trace: float
    signature: tuple
    det_err: float
    entry_err: np.ndarray  # (6,) errors for (11, 22, 33, 12, 13, 23)
    converged: bool = True


def symmetric_eigenvalues(h: np.ndarray) -> np.ndarray:
    """Eigenvalues of a symmetric 3x3 matrix by the trigonometric closed form."""
    p1 = h[0, 1] ** 2 + h[0, 2] ** 2 + h[1, 2] ** 2
    if p1 == 0.0:
        return np.sort(np.diag(h))
    q = np.trace(h) / 3.0
    p2 = sum((h[i, i] - q) ** 2 for i in range(3)) + 2.0 * p1
    p = math.sqrt(p2 / 6.0)
    b = (h - q * np.eye(3)) / p
    r = np.linalg.det(b) / 2.0
    r = min(1.0, max(-1.0, r))
    phi = math.acos(r) / 3.0
    e1 = q + 2.0 * p * math.cos(phi)
    e3 = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
    return np.sort(np.array([e1, 3.0 * q - e1 - e3, e3]))


def hessian_signature(h: np.ndarray, cut: float = _SIGNATURE_CUT) -> tuple:
    eig = symmetric_eigenvalues(h)
    tau = cut * float(np.max(np.abs(eig)))
    n_pos = int(np.count_nonzero(eig > tau))
    n_neg = int(np.count_nonzero(eig < -tau))
    return (n_pos, n_neg, 3 - n_pos - n_neg)


def _det3(h: np.ndarray) -> float:
    return float(np.linalg.det(h))


def _det_error(h: np.ndarray, entry_err: np.ndarray) -> float:
    """First-order determinant error from per-entry errors via the adjugate."""
    adj = np.abs(np.linalg.det(h) * np.linalg.inv(h)) if abs(np.linalg.det(h)) > 1e-300 \
        else np.abs(_cofactors(h))
    e11, e22, e33, e12, e13, e23 = entry_err
    return float(adj[0, 0] * e11 + adj[1, 1] * e22 + adj[2, 2] * e33
                 + 2 * (adj[0, 1] * e12 + adj[0, 2] * e13 + adj[1, 2] * e23))


def _cofactors(h: np.ndarray) -> np.ndarray:
    c = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            minor = np.delete(np.delete(h, i, axis=0), j, axis=1)
            c[i, j] = (-1) ** (i + j) * np.linalg.det(minor)
    return c


def _assemble(entries: np.ndarray) -> np.ndarray:
    h11, h22, h33, h12, h13, h23 = entries
    return np.array([[h11, h12, h13], [h12, h22, h23], [h13, h23, h33]])


def _slab_side(dom: SupportDomain, xy) -> float:
    return dom.signed_distance(np.asarray(xy, dtype=float))


def eval_u(ctx: ExtensionContext, x) -> float:
    """Value of the extension at x in R^3 away from the exterior cut."""
    x = np.asarray(x, dtype=float)
    x1, x2, x3 = x
    if x3 == 0.0:
        sd = _slab_side(ctx.dom, x[:2])
        if sd < -1e-12:
            raise UndefinedOnCutError("u is undefined on int(D^c) x {0}")
        return float(ctx.phi.values_at(x[:2].reshape(1, 2))[0]) if sd > 0 else 0.0
    if x3 < 0.0:
        return eval_u(ctx, np.array([x1, x2, -x3])) - 2.0 * x3
    spec = ctx.quad.with_singular_center(x[:2])

    def integrand(pts):
        rel = np.empty((len(pts), 3))
        rel[:, 0] = x1 - pts[:, 0]
        rel[:, 1] = x2 - pts[:, 1]
        rel[:, 2] = x3
        return kernel_K(rel) * ctx.phi.values_at(pts)

    try:
        val, _ = integrate(ctx.dom, integrand, spec)
    except NonConvergedError as exc:
        val = exc.value
    return float(val)


def eval_u_grad(ctx: ExtensionContext, x) -> np.ndarray:
    """Gradient of the extension off the slab, by kernel differentiation."""
    x = np.asarray(x, dtype=float)
    if x[2] == 0.0:
        raise UndefinedOnCutError("gradient on the slab is one-sided; use eval_u3_slab")
    if x[2] < 0.0:
        g = eval_u_grad(ctx, np.array([x[0], x[1], -x[2]]))
        return np.array([g[0], g[1], -g[2] - 2.0])
    x1, x2, x3 = x

    def integrand(pts):
        rel = np.empty((len(pts), 3))
        rel[:, 0] = x1 - pts[:, 0]
        rel[:, 1] = x2 - pts[:, 1]
        rel[:, 2] = x3
        return kernel_K_grad(rel) * ctx.phi.values_at(pts)[:, None]

    val, _ = integrate(ctx.dom, integrand, ctx.quad.with_singular_center(x[:2]))
    return np.asarray(val)


def eval_hessian(ctx: ExtensionContext, x, which: str = "u", *,
                 eps: float = 0.0, b: float = 0.0) -> HessianSample:
    """Hessian sample of u, of v^eps = u + eps q, or of the blend psi_b.

    Above the slab the entries are integrals of the kernel's second
    derivatives against the field; below it they are reflected with the
    (13, 23) sign flips; on the slab over the domain the vertical mixed
    entries vanish and u33 = -u11 - u22.
    """
    x = np.asarray(x, dtype=float)
    if x[2] == 0.0:
        entries, entry_err, conv = _slab_hessian_entries(ctx, x[:2])
    elif x[2] > 0.0:
        entries, entry_err, conv = _upper_hessian_entries(ctx, x)
    else:
        mirror = np.array([x[0], x[1], -x[2]])
        entries, entry_err, conv = _upper_hessian_entries(ctx, mirror)
        entries = entries * np.array([1, 1, 1, 1, -1, -1.0])
    h = _assemble(entries)
    if which == "veps":
        h = h + eps * EPS_QUADRATIC_HESS
    elif which == "psib":
        h = (1.0 - b) * h + b * aux_w_hess(x)
        entry_err = (1.0 - b) * entry_err
    elif which != "u":
        raise ValueError(f"unknown hessian target {which!r}")
    det = _det3(h)
    return HessianSample(
        x=x, hess=h, det=det, trace=float(np.trace(h)),
        signature=hessian_signature(h), det_err=_det_error(h, entry_err),
        entry_err=entry_err, converged=conv)


def _upper_hessian_entries(ctx: ExtensionContext, x):
    from dataclasses import replace

    x1, x2, x3 = x
    sigma = ctx.phi_stderr()
    with_noise = sigma > 0.0

    def integrand(pts):
        rel = np.empty((len(pts), 3))
        rel[:, 0] = x1 - pts[:, 0]
        rel[:, 1] = x2 - pts[:, 1]
        rel[:, 2] = x3
        comps = kernel_K_hess_components(rel)
        vals = comps * ctx.phi.values_at(pts)[:, None]
        if not with_noise:
            return vals
        noise = np.abs(comps) * ctx.phi.stderr_at(pts)[:, None]
        return np.concatenate([vals, noise], axis=1)

    spec = ctx.quad.with_singular_center(x[:2])
    if with_noise:
        # resolving quadrature below the Monte Carlo noise is wasted work
        spec = replace(spec, abs_tol=max(spec.abs_tol, 0.25 * sigma))
    conv = True
    try:
        val, err = integrate(ctx.dom, integrand, spec)
    except NonConvergedError as exc:
        val, err = exc.value, exc.err_estimate
        conv = False
    if with_noise:
        entries, quad_err = val[:6], err[:6]
        noise = val[6:]
        entry_err = np.sqrt(quad_err ** 2 + noise ** 2)
    else:
        entries, entry_err = val, err
    return entries, entry_err, conv


def _slab_hessian_entries(ctx: ExtensionContext, xy):
    sd = _slab_side(ctx.dom, xy)
    if sd <= 1e-12:
        raise UndefinedOnCutError("slab Hessian defined only over the open domain")
    closed = getattr(ctx.phi, "slab_hessian", None)
    if closed is not None:
        h11, h22, h12 = closed(xy)
        err = np.zeros(6)
    else:
        h11, h22, h12, err = _stencil_slab_hessian(ctx, np.asarray(xy, dtype=float), sd)
    entries = np.array([h11, h22, -h11 - h22, h12, 0.0, 0.0])
    return entries, err, True


def _stencil_slab_hessian(ctx: ExtensionContext, xy, sd):
    """Five-point second differences of the planar field."""
    h = max(1e-3, 2.0 * getattr(ctx.phi, "spacing", 0.0))
    h = min(h, 0.45 * sd)  # keep the stencil inside the domain
    x0, y0 = xy
    pts = np.array([
        [x0, y0], [x0 + h, y0], [x0 - h, y0], [x0, y0 + h], [x0, y0 - h],
        [x0 + h, y0 + h], [x0 + h, y0 - h], [x0 - h, y0 + h], [x0 - h, y0 - h],
    ])
    v = ctx.phi.values_at(pts)
    h11 = (v[1] - 2 * v[0] + v[2]) / h ** 2
    h22 = (v[3] - 2 * v[0] + v[4]) / h ** 2
    h12 = (v[5] - v[6] - v[7] + v[8]) / (4 * h ** 2)
    sig = float(np.max(ctx.phi.stderr_at(pts))) if hasattr(ctx.phi, "stderr_at") else 0.0
    noise = 4.0 * sig / h ** 2
    err = np.full(6, noise)
    err[2] = 2 * noise
    err[4] = err[5] = 0.0
    return float(h11), float(h22), float(h12), err


def eval_u3_slab(ctx: ExtensionContext, xy) -> float:
    """Vertical derivative on the slab: -1 over the domain, positive outside."""
    xy = np.asarray(xy, dtype=float)
    sd = _slab_side(ctx.dom, xy)
    if abs(sd) <= 1e-9:
        raise OnBoundaryError("u3 jumps across the domain boundary")
    if sd > 0:
        return -1.0
    val, _ = exterior_half_laplacian(ctx.dom, ctx.phi.values_at, xy, ctx.quad)
    return -val


def local_frame_hessian(h: np.ndarray, normal_angle: float) -> np.ndarray:
    """Rewrite a Hessian in the boundary frame (inner normal, clockwise tangent, e3)."""
    c, s = math.cos(normal_angle), math.sin(normal_angle)
    r = np.array([[-c, s, 0.0], [-s, -c, 0.0], [0.0, 0.0, 1.0]])
    return r.T @ h @ r
