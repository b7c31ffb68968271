"""Quadrature layouts for radial second-difference integrals.

For a radial ``u`` and ``x = r e_1`` every operator in the package is a sum

    sum_k  w_k * F_k(delta_k),   delta_k = sum_j coef[k, j] * u(pts[k, j]) + shift[k]

over a fixed set of rows.  ``F_k`` is multiplication by the kernel multiplier
(linear operators) or the sign split of the extremal operators, and each row
remembers the kernel argument ``(rho, cos)`` it samples.  Building the rows
once per point lets the same layout drive the fast evaluator and the sparse
collocation matrices of the discrete solvers.

Geometry.  The integral runs over the half space ``y_1 > 0`` (the second
difference is even in ``y``).  The ball ``A = B_{r/2}(x)`` that contains the
reflected point ``x - y = 0`` is integrated in polar coordinates centred at
``x`` with geometric panels towards that point, which absorbs the integrable
singularity of profiles like ``|x|^sigma``.  The rest uses polar coordinates
centred at the origin; a quadratic Taylor model replaces the integrand for
``|y| < rho0`` and a closed form covers ``|y| > R_out``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .kernels import sphere_area

__all__ = ["QuadratureConfig", "Layout", "FieldGeometry", "geometry_of", "build_layout"]

MAIN, FAR, NEAR, CAP = 0, 1, 2, 3


@dataclass(frozen=True)
class QuadratureConfig:
    n_angular: int = 12
    panels_per_decade: int = 6
    delta_in: float = 1e-3
    R_out: float | None = None
    taylor: bool = True
    gauss_order: int = 8
    R_factor: float = 1e3
    max_panel: float | None = None
    t_min_fraction: float = 1e-4
    kink_levels: int = 4

    def check(self) -> "QuadratureConfig":
        if self.n_angular < 8:
            raise ValueError("n_angular must be at least 8")
        if self.panels_per_decade < 4:
            raise ValueError("panels_per_decade must be at least 4")
        if not (0.0 < self.delta_in < 0.1):
            raise ValueError("delta_in must lie in (0, 0.1)")
        if self.gauss_order < 2:
            raise ValueError("gauss_order must be at least 2")
        if self.R_out is not None and not self.R_out > 0:
            raise ValueError("R_out must be positive")
        return self

    def coarsened(self) -> "QuadratureConfig":
        return replace(
            self,
            n_angular=max(8, (3 * self.n_angular) // 4),
            panels_per_decade=max(4, (2 * self.panels_per_decade) // 3),
            gauss_order=max(4, self.gauss_order - 2),
            kink_levels=max(2, self.kink_levels - 1),
            delta_in=min(2.0 * self.delta_in, 0.09),
        )

    def refined(self) -> "QuadratureConfig":
        return replace(
            self,
            n_angular=2 * self.n_angular,
            panels_per_decade=2 * self.panels_per_decade,
            gauss_order=self.gauss_order + 2,
            kink_levels=self.kink_levels + 2,
        )

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class FieldGeometry:
    """What the layout needs to know about a field."""

    breakpoints: tuple[float, ...] = ()
    support: float | None = None
    singular_origin: bool = False
    origin_power: tuple[float, float] | None = None
    far_power: tuple[float, float] | None = None
    spacing: float = math.inf
    max_panel: float | None = None


def geometry_of(field, r: float) -> FieldGeometry:
    bps = tuple(field.breakpoints)
    sup = field.support_radius
    if sup is not None and sup not in bps:
        bps = bps + (sup,)
    return FieldGeometry(
        breakpoints=bps,
        support=sup,
        singular_origin=bool(field.singular_origin),
        origin_power=getattr(field, "origin_power", None),
        far_power=getattr(field, "far_power", None),
        spacing=field.local_spacing(r),
        max_panel=getattr(field, "max_panel", None),
    )


@dataclass
class Layout:
    """Rows of a radial second-difference quadrature at radius ``r``."""

    r: float
    pts: np.ndarray  # (n, 3) radii where u is sampled
    coef: np.ndarray  # (n, 3)
    shift: np.ndarray  # (n,) field-dependent constants (far tail, origin cap)
    w: np.ndarray  # (n,) positive weights, kernel |y|^-(N+2s) included
    rho: np.ndarray  # (n,) |y| at which the multiplier is sampled
    cos: np.ndarray  # (n,) y_1/|y|
    kind: np.ndarray  # (n,) MAIN, FAR, NEAR or CAP

    def __len__(self) -> int:
        return len(self.w)

    def deltas(self, u) -> np.ndarray:
        return self.deltas_with_rounding(u)[0]

    def deltas_with_rounding(self, u):
        """Second differences and a bound on their rounding error per row."""
        vals = np.asarray(u(self.pts.ravel()), dtype=float).reshape(self.pts.shape)
        d = np.einsum("ij,ij->i", self.coef, vals) + self.shift
        mag = np.einsum("ij,ij->i", np.abs(self.coef), np.abs(vals)) + np.abs(self.shift)
        return d, 4.0 * np.finfo(float).eps * mag


@lru_cache(maxsize=64)
def _gauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _gl(a: float, b: float, n: int):
    x, w = _gauss(n)
    h = 0.5 * (b - a)
    return a + h * (x + 1.0), h * w


def _panel_nodes(edges: np.ndarray, n: int):
    """Gauss-Legendre nodes on consecutive panels given by ``edges``."""
    x, w = _gauss(n)
    a, b = edges[:-1, None], edges[1:, None]
    h = 0.5 * (b - a)
    return (a + h * (x + 1.0)).ravel(), (h * w).ravel()


def _subdivide(lo: float, hi: float, cuts, kinks, ppd: int, levels: int, max_panel):
    """Panel edges on ``[lo, hi]``.

    Consecutive cut points are joined by geometric panels (``ppd`` per
    decade); sub-intervals touching a kink are additionally graded towards
    it by factors of 4.
    """
    if not hi > lo:
        return np.empty(0)
    pts = [lo, hi] + [c for c in cuts if lo < c < hi]
    pts = np.unique(np.asarray(pts))
    kinks = [k for k in kinks if lo <= k <= hi]
    edges = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        if b - a <= 1e-14 * b:
            continue
        seg = np.geomspace(a, b, max(1, math.ceil(ppd * math.log10(b / a))) + 1) if a > 0 else np.array([a, b])
        near_a = any(abs(a - k) <= 1e-12 * max(1.0, k) for k in kinks)
        near_b = any(abs(b - k) <= 1e-12 * max(1.0, k) for k in kinks)
        extra = []
        if near_a or near_b:
            L = b - a
            for j in range(1, levels + 1):
                d = L * 0.25**j
                if near_a:
                    extra.append(a + d)
                if near_b:
                    extra.append(b - d)
        seg = np.unique(np.concatenate([seg, extra]))
        if max_panel:
            fine = [seg[0]]
            for p, q in zip(seg[:-1], seg[1:]):
                m = max(1, math.ceil((q - p) / max_panel))
                fine.extend(np.linspace(p, q, m + 1)[1:])
            seg = np.asarray(fine)
        edges.extend(seg[1:])
    return np.asarray(edges)


def _angular_measure(N: int) -> float:
    # |S^{N-2}|: measure of the sphere orthogonal to e_1
    return 2.0 if N == 2 else sphere_area(N - 1)


def _theta_nodes(N: int, n: int, split: bool):
    """Polar-angle nodes on ``[0, pi/2]`` with weights ``|S^{N-2}| sin^{N-2}``.

    With ``split`` the range is cut at ``pi/6``; on the first part the
    substitution ``theta = pi/6 (1 - v^2)`` removes the square-root behaviour
    of the excluded-ball boundary.  Returns (theta, weight, inside_first_part).
    """
    if N == 1:
        return np.array([0.0]), np.array([1.0]), np.array([True])
    om = _angular_measure(N)
    if split:
        v, wv = _gl(0.0, 1.0, n)
        t1 = (math.pi / 6.0) * (1.0 - v * v)
        w1 = wv * (math.pi / 3.0) * v
        t2, w2 = _gl(math.pi / 6.0, math.pi / 2.0, n)
        th = np.concatenate([t1, t2])
        w = np.concatenate([w1, w2])
        first = np.concatenate([np.ones(n, bool), np.zeros(n, bool)])
    else:
        th, w = _gl(0.0, math.pi / 2.0, 2 * n)
        first = np.zeros(2 * n, bool)
    return th, w * om * np.sin(th) ** (N - 2), first


def _phi_nodes(N: int, n: int):
    """Angle between ``z`` and ``e_1`` over ``[0, pi]``."""
    if N == 1:
        return np.array([0.0, math.pi]), np.array([1.0, 1.0])
    p1, w1 = _gl(0.0, math.pi / 2.0, n)
    p2, w2 = _gl(math.pi / 2.0, math.pi, n)
    ph = np.concatenate([p1, p2])
    w = np.concatenate([w1, w2])
    return ph, w * _angular_measure(N) * np.sin(ph) ** (N - 2)


def build_layout(r: float, N: int, s: float, geom: FieldGeometry, cfg: QuadratureConfig) -> Layout:
    if r < 0:
        raise ValueError("evaluation radius must be nonnegative")
    if r == 0 and geom.singular_origin:
        raise ValueError("field is singular at the evaluation point")
    if geom.far_power is not None and geom.far_power[1] <= -2 * s:
        raise ValueError("far field is not integrable against the kernel")
    if 0 < r < 1e-9 and not geom.singular_origin:
        # below this the centred stencil is indistinguishable from the origin one
        # and the local panels would underflow
        r = 0.0
    ppd, order = cfg.panels_per_decade, cfg.gauss_order
    max_panel = cfg.max_panel
    if geom.max_panel is not None:
        max_panel = geom.max_panel if max_panel is None else min(max_panel, geom.max_panel)
    e = -1.0 - 2.0 * s

    # scales
    grid = math.isfinite(geom.spacing)
    scale = geom.spacing if grid else 1.0
    # close to the origin a field that is smooth there needs no reflected
    # ball, and shrinking the inner radius with r would only amplify rounding
    centred = r == 0 or (r < 0.1 * scale and not geom.singular_origin and geom.origin_power is None)
    if centred:
        rho0 = cfg.delta_in * scale
    else:
        rho0 = cfg.delta_in * r
        if grid:
            rho0 = min(rho0, 0.5 * geom.spacing)
    h_fd = 0.25 * geom.spacing if grid else 0.25 * cfg.delta_in * max(r, 1.0)
    if not centred:
        h_fd = min(h_fd, 0.5 * r)
    if geom.support is not None:
        R_out = geom.support + r
    elif cfg.R_out is not None:
        R_out = max(cfg.R_out, 4.0 * r)
    else:
        R_out = cfg.R_factor * max(r, 1.0)

    rows_p, rows_c, rows_w, rows_rho, rows_cos, rows_shift, rows_kind = [], [], [], [], [], [], []

    def add(kind, p, c, w, rho, cos, shift=None):
        n = len(w)
        rows_kind.append(np.full(n, kind, dtype=np.int8))
        rows_p.append(p)
        rows_c.append(np.broadcast_to(c, (n, 3)) if np.ndim(c) == 1 else c)
        rows_w.append(w)
        rows_rho.append(np.broadcast_to(rho, (n,)))
        rows_cos.append(np.broadcast_to(cos, (n,)))
        rows_shift.append(np.zeros(n) if shift is None else np.broadcast_to(shift, (n,)))

    th, wth, first = _theta_nodes(N, cfg.n_angular, split=not centred)
    kinks_r = [R for R in geom.breakpoints if R > 0]
    two = np.array([1.0, 1.0, -2.0])

    # half space minus the reflected ball
    for theta, wt, in_first in zip(th, wth, first):
        c, sn = math.cos(theta), math.sin(theta)
        kinks = []
        for R in kinks_r:
            if r == 0:
                kinks.append(R)
                continue
            disc = R * R - (r * sn) ** 2
            if disc >= 0:
                q = math.sqrt(disc)
                kinks += [x for x in (r * c - q, r * c + q, -r * c + q) if x > 0]
        cuts = kinks + ([0.5 * r, r, 2.0 * r] if r > 0 else [])
        if r > 0 and in_first:
            q = r * math.sqrt(max(c * c - 0.75, 0.0))
            lo, hi = r * c - q, r * c + q
            edges = [_subdivide(rho0, lo, cuts, kinks, ppd, cfg.kink_levels, max_panel),
                     _subdivide(hi, R_out, cuts, kinks, ppd, cfg.kink_levels, max_panel)]
        else:
            edges = [_subdivide(rho0, R_out, cuts, kinks, ppd, cfg.kink_levels, max_panel)]
        for ed in edges:
            if len(ed) < 2:
                continue
            rho, wr = _panel_nodes(ed, order)
            if r > 0:
                a = np.sqrt(np.maximum(r * r + 2 * r * rho * c + rho * rho, 0.0))
                b = np.sqrt(np.maximum(r * r - 2 * r * rho * c + rho * rho, 0.0))
            else:
                a = b = rho
            p = np.column_stack([a, b, np.full_like(rho, r)])
            add(MAIN, p, two, wr * rho**e * wt, rho, c)

        # outer closed form: u(|x +- y|) ~ A rho^-p beyond R_out
        wf = wt * R_out ** (-2 * s) / (2 * s)
        shift = 0.0
        if geom.support is None and geom.far_power is not None:
            A, pw = geom.far_power
            shift = 2.0 * A * R_out ** (-pw) * (2 * s) / (pw + 2 * s)
        add(FAR, np.array([[r, r, r]]), np.array([-2.0, 0.0, 0.0]), np.array([wf]), 2.0 * R_out, c, shift)

        # inner Taylor model: delta ~ rho^2 (u'' c^2 + u'/r (1 - c^2))
        if cfg.taylor:
            wn = wt * rho0 ** (2 - 2 * s) / (2 - 2 * s)
            if r >= h_fd:
                h = h_fd
                c2 = c * c
                coef = np.array([c2 / h**2 + (1 - c2) / (2 * h * r), c2 / h**2 - (1 - c2) / (2 * h * r), -2 * c2 / h**2])
                p = np.array([[r + h, abs(r - h), r]])
            else:
                h = h_fd
                coef = np.array([2 / h**2, -2 / h**2, 0.0])
                p = np.array([[h, 0.0, 0.0]])
            add(NEAR, p, coef[None, :], np.array([wn]), 0.5 * rho0, c)

    # reflected ball A = B_{r/2}(x), polar coordinates around x (z = x - y)
    if not centred:
        t_min = (1e-12 if geom.singular_origin else cfg.t_min_fraction) * r
        if grid:
            t_min = min(t_min, 0.05 * geom.spacing)
        ph, wph = _phi_nodes(N, cfg.n_angular)
        for phi, wp in zip(ph, wph):
            cp, sp = math.cos(phi), math.sin(phi)
            kinks = [R for R in kinks_r if R < 0.5 * r]
            for R in kinks_r:
                disc = R * R - (2 * r * sp) ** 2
                if disc >= 0:
                    q = math.sqrt(disc)
                    kinks += [x for x in (2 * r * cp - q, 2 * r * cp + q) if t_min < x < 0.5 * r]
            ed = _subdivide(t_min, 0.5 * r, kinks + [0.25 * r], kinks, ppd, cfg.kink_levels, max_panel)
            t, wt = _panel_nodes(ed, order)
            far = np.sqrt(4 * r * r - 4 * r * t * cp + t * t)
            ny = np.sqrt(r * r - 2 * r * t * cp + t * t)
            y1 = r - t * cp
            p = np.column_stack([t, far, np.full_like(t, r)])
            add(MAIN, p, two, wt * t ** (N - 1) * wp * ny ** (-N - 2 * s), ny, y1 / ny)
        # cap B_{t_min}(x): kernel frozen at y = x
        S = sphere_area(N)
        V = t_min**N / N
        wc = np.array([S * r ** (-N - 2 * s)])
        if geom.origin_power is not None:
            A0, sg = geom.origin_power
            add(CAP, np.array([[2 * r, r, r]]), np.array([[V, -2 * V, 0.0]]), wc, r, 1.0,
                A0 * t_min ** (sg + N) / (sg + N))
        else:
            add(CAP, np.array([[0.0, 2 * r, r]]), np.array([[V, V, -2 * V]]), wc, r, 1.0)

    return Layout(
        r=float(r),
        pts=np.concatenate(rows_p),
        coef=np.concatenate(rows_c),
        shift=np.concatenate(rows_shift),
        w=np.concatenate(rows_w),
        rho=np.concatenate(rows_rho),
        cos=np.concatenate(rows_cos),
        kind=np.concatenate(rows_kind),
    )
