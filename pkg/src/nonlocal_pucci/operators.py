"""Nonlocal operators of order 2s applied to radial fields.

Every public evaluator returns an :class:`OperatorValue` whose error
estimate is the change between the requested quadrature and a coarser one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy import integrate

from .kernels import EllipticityBounds, Explicit, Extremal, FractionalLaplacian, IsaacsFamily, sphere_area
from .quadrature import CAP, FAR, MAIN, NEAR, Layout, QuadratureConfig, build_layout, geometry_of

__all__ = [
    "OperatorSpec",
    "OperatorValue",
    "linear_op",
    "extremal",
    "isaacs",
    "full_operator",
    "bilinear",
    "extremal_bilinear",
    "weighted_l1_norm",
    "kernel_sum",
    "kernel_value_only",
    "layout_for",
]

DEFAULT_CFG = QuadratureConfig()


@dataclass(frozen=True)
class OperatorValue:
    value: float
    error_estimate: float

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class OperatorSpec:
    """Kernel part plus lower-order terms.

    ``drift`` is ``None``, ``"selfsimilar"`` (``b(x) = x / 2s``) or a callable
    giving the radial component ``b_r(r)``.  ``gradient`` is an optional
    ``m(r)`` realising the Hamiltonian ``m(x) |Du|``.  ``c`` is a constant or
    a callable of the radius.  ``bilinear_terms = (kappa, zeta)`` adds
    ``kappa(x) B^{+-}(u, zeta)`` with the sign of ``sign``.
    """

    kernel: object
    sign: str = "plus"
    drift: object = None
    c: object = 0.0
    gradient: Callable | None = None
    bilinear_terms: tuple | None = None
    M1: float = 0.0
    M2: float = 0.0

    def __post_init__(self):
        if self.sign not in ("plus", "minus"):
            raise ValueError("sign must be 'plus' or 'minus'")
        s = self.kernel.s
        if (self.drift is not None or self.gradient is not None) and not (0.5 < s < 1.0):
            raise ValueError(f"first-order terms need s in (1/2, 1), got s={s}")
        if isinstance(self.drift, str) and self.drift != "selfsimilar":
            raise ValueError(f"unknown drift {self.drift!r}")
        if self.M1 < 0 or self.M2 < 0:
            raise ValueError("M1 and M2 must be nonnegative")

    @property
    def s(self) -> float:
        return self.kernel.s

    @property
    def N(self) -> int:
        return self.kernel.N

    def drift_at(self, r):
        if self.drift is None:
            return np.zeros_like(np.asarray(r, dtype=float))
        if self.drift == "selfsimilar":
            return np.asarray(r, dtype=float) / (2.0 * self.s)
        return np.asarray(self.drift(np.asarray(r, dtype=float)), dtype=float)

    def c_at(self, r):
        if callable(self.c):
            return np.asarray(self.c(np.asarray(r, dtype=float)), dtype=float)
        return np.full_like(np.asarray(r, dtype=float), float(self.c))

    @property
    def has_zero_order(self) -> bool:
        return callable(self.c) or self.c != 0.0


def layout_for(u, x_r: float, N: int, s: float, cfg: QuadratureConfig) -> Layout:
    cfg.check()
    return build_layout(float(x_r), N, s, geometry_of(u, float(x_r)), cfg)


def _multiplier(k, lay: Layout) -> np.ndarray:
    if isinstance(k, FractionalLaplacian):
        return np.full(len(lay), k.constant)
    if isinstance(k, Explicit):
        cv = k.constant_value
        if cv is not None:
            return np.full(len(lay), cv)
        return np.broadcast_to(np.asarray(k.multiplier(lay.rho, lay.cos), dtype=float), lay.w.shape)
    raise TypeError(f"{type(k).__name__} is not a single kernel")


def kernel_sum(kernel, lay: Layout, d: np.ndarray, sign: str = "plus") -> float:
    """Quadrature of the kernel part given the second differences ``d``."""
    if isinstance(kernel, Extremal):
        b = kernel.bounds
        hi, lo = (b.Gamma, b.gamma) if sign == "plus" else (b.gamma, b.Gamma)
        return float(np.sum(lay.w * np.where(d > 0, hi * d, lo * d)))
    if isinstance(kernel, IsaacsFamily):
        return min(max(kernel_sum(k, lay, d) for k in row) for row in kernel.rows)
    return float(np.sum(lay.w * _multiplier(kernel, lay) * d))


def kink_resolving(cfg: QuadratureConfig) -> QuadratureConfig:
    """Layout for integrands with a sign split.

    Switching between the bounds where the second difference changes sign
    leaves a kink that Gauss rules resolve only to second order, mostly
    across the angle.
    """
    return replace(cfg.refined(), n_angular=4 * cfg.n_angular)


def _has_kink(kernel) -> bool:
    return isinstance(kernel, Extremal) and kernel.bounds.gamma < kernel.bounds.Gamma


def _two_level(fn, cfg: QuadratureConfig, kinked: bool = False):
    if kinked:
        fine, coarse = kink_resolving(cfg), cfg.refined()
    else:
        fine, coarse = cfg, cfg.coarsened()
    v = fn(fine)
    vc = fn(coarse)
    err = abs(v[0] - vc[0])
    return OperatorValue(v[0], max(err, v[1], 1e-300))


def _kernel_part(u, kernel, sign, x_r, cfg):
    N, s = kernel.N, kernel.s

    def fn(c):
        lay = layout_for(u, x_r, N, s, c)
        d, rnd = lay.deltas_with_rounding(u)
        return kernel_sum(kernel, lay, d, sign), float(np.sum(lay.w * rnd)) * kernel.bounds.Gamma

    return _two_level(fn, cfg, kinked=_has_kink(kernel))


def kernel_value_only(u, kernel, sign: str, x_r: float, cfg: QuadratureConfig = DEFAULT_CFG) -> float:
    """Single-level evaluation of the kernel part (no error estimate)."""
    lay = layout_for(u, x_r, kernel.N, kernel.s, cfg)
    return kernel_sum(kernel, lay, lay.deltas(u), sign)


def _check_kernel(kernel):
    if isinstance(kernel, (Extremal, Explicit)):
        kernel.bounds.check()
    elif isinstance(kernel, IsaacsFamily):
        if not kernel.rows or any(len(r) == 0 for r in kernel.rows):
            raise ValueError("empty Isaacs family or row")
        kernel.bounds.check()


def linear_op(u, K, x_r: float, cfg: QuadratureConfig = DEFAULT_CFG) -> OperatorValue:
    """``L_K u`` at radius ``x_r`` for a single kernel ``K``."""
    if not isinstance(K, (FractionalLaplacian, Explicit)):
        raise TypeError("linear_op needs a single kernel")
    _check_kernel(K)
    return _kernel_part(u, K, "plus", x_r, cfg)


def extremal(u, bounds: EllipticityBounds, sign: str, x_r: float, cfg: QuadratureConfig = DEFAULT_CFG) -> OperatorValue:
    """Pucci operator over the whole kernel class (sign split of the second difference)."""
    if sign not in ("plus", "minus"):
        raise ValueError("sign must be 'plus' or 'minus'")
    bounds.check()
    return _kernel_part(u, Extremal(bounds), sign, x_r, cfg)


def isaacs(u, family: IsaacsFamily, x_r: float, cfg: QuadratureConfig = DEFAULT_CFG) -> OperatorValue:
    _check_kernel(family)
    return _kernel_part(u, family, "plus", x_r, cfg)


def _far_tail(field, R: float) -> tuple[float, float]:
    """``(A, p)`` with ``field ~ A rho^-p`` beyond ``R``."""
    if field.support_radius is not None and field.support_radius <= R:
        return 0.0, 0.0
    fp = getattr(field, "far_power", None)
    if fp is not None:
        return float(fp[0]), float(fp[1])
    return float(field(np.array([R]))[0]), 0.0


def _increment_products(lay: Layout, u, v, s: float) -> np.ndarray:
    """Symmetrised products of increments per layout row."""
    r = lay.r
    ur, vr = float(u(np.array([r]))[0]), float(v(np.array([r]))[0])
    e = np.zeros(len(lay))
    m = lay.kind == MAIN
    P = lay.pts[m]
    ua, ub = u(P[:, 0]), u(P[:, 1])
    va, vb = v(P[:, 0]), v(P[:, 1])
    e[m] = 0.5 * ((ua - ur) * (va - vr) + (ub - ur) * (vb - vr))
    m = lay.kind == NEAR
    if np.any(m):
        # increments ~ rho u' cos + rho^2 H/2; the row weight integrates rho^2,
        # so the quartic H_u H_v term is rescaled onto it
        du, dv = (float(f.deriv(np.array([r]))[0]) if r > 0 else 0.0 for f in (u, v))
        P, C = lay.pts[m], lay.coef[m]
        hu = np.einsum("ij,ij->i", C, u(P.ravel()).reshape(P.shape))
        hv = np.einsum("ij,ij->i", C, v(P.ravel()).reshape(P.shape))
        rho0 = 2.0 * lay.rho[m]
        e[m] = du * dv * lay.cos[m] ** 2 + 0.25 * hu * hv * rho0**2 * (2 - 2 * s) / (4 - 2 * s)
    m = lay.kind == FAR
    if np.any(m):
        # (A_u rho^-p - u(r)) (A_v rho^-q - v(r)) integrated against rho^(-1-2s)
        # beyond R, relative to the row weight R^-2s / 2s
        R = 0.5 * float(lay.rho[m][0])
        (Au, pu), (Av, pv) = _far_tail(u, R), _far_tail(v, R)
        e[m] = (ur * vr - ur * Av * R**-pv * 2 * s / (pv + 2 * s) - vr * Au * R**-pu * 2 * s / (pu + 2 * s)
                + Au * Av * R ** -(pu + pv) * 2 * s / (pu + pv + 2 * s))
    m = lay.kind == CAP
    if np.any(m):
        P = lay.pts[m]
        V = lay.coef[m][:, 0]
        u0, v0 = u(P[:, 0]), v(P[:, 0])
        u2, v2 = u(P[:, 1]), v(P[:, 1])
        e[m] = 0.5 * V * ((u0 - ur) * (v0 - vr) + (u2 - ur) * (v2 - vr))
    return e


def _bilinear_generic(u, v, kernel, sign, x_r, cfg, N, s):
    if getattr(u, "singular_origin", False) or getattr(v, "singular_origin", False):
        raise ValueError("bilinear form needs fields regular at the origin")

    def fn(c):
        lay = layout_for(_Joint(u, v), x_r, N, s, c)
        e = _increment_products(lay, u, v, s)
        if isinstance(kernel, Extremal):
            b = kernel.bounds
            hi, lo = (b.Gamma, b.gamma) if sign == "plus" else (b.gamma, b.Gamma)
            val = float(np.sum(lay.w * np.where(e > 0, hi * e, lo * e)))
        else:
            val = float(np.sum(lay.w * _multiplier(kernel, lay) * e))
        return val, 16 * np.finfo(float).eps * float(np.sum(lay.w * np.abs(e))) * kernel.bounds.Gamma

    return _two_level(fn, cfg, kinked=_has_kink(kernel))


class _Joint:
    """Union of the geometric features of two fields (for a shared layout)."""

    def __init__(self, u, v):
        self.u, self.v = u, v
        self.breakpoints = tuple(sorted(set(u.breakpoints) | set(v.breakpoints)))
        su, sv = u.support_radius, v.support_radius
        self.support_radius = None if su is None or sv is None else max(su, sv)
        self.singular_origin = False
        self.origin_power = None
        self.far_power = None
        mp = [m for m in (getattr(u, "max_panel", None), getattr(v, "max_panel", None)) if m]
        self.max_panel = min(mp) if mp else None

    def local_spacing(self, r):
        return min(self.u.local_spacing(r), self.v.local_spacing(r))


def bilinear(u, v, K, x_r: float, cfg: QuadratureConfig = DEFAULT_CFG) -> OperatorValue:
    """``B_K(u, v)(x) = 1/2 int (u(x) - u(x+y)) (v(x) - v(x+y)) K(y) dy``."""
    if not isinstance(K, (FractionalLaplacian, Explicit)):
        raise TypeError("bilinear needs a single kernel")
    return _bilinear_generic(u, v, K, "plus", x_r, cfg, K.N, K.s)


def extremal_bilinear(u, v, bounds: EllipticityBounds, sign: str, x_r: float, cfg: QuadratureConfig = DEFAULT_CFG) -> OperatorValue:
    """Supremum (``plus``) or infimum (``minus``) of ``B_K(u, v)`` over the class."""
    if sign not in ("plus", "minus"):
        raise ValueError("sign must be 'plus' or 'minus'")
    bounds.check()
    return _bilinear_generic(u, v, Extremal(bounds), sign, x_r, cfg, bounds.N, bounds.s)


def full_operator(u, spec: OperatorSpec, x_r: float, cfg: QuadratureConfig = DEFAULT_CFG) -> OperatorValue:
    """Kernel part + drift + gradient term + zero-order term (+ bilinear term)."""
    _check_kernel(spec.kernel)
    kv = _kernel_part(u, spec.kernel, spec.sign, x_r, cfg)
    value, err = kv.value, kv.error_estimate
    r = float(x_r)
    if spec.drift is not None or spec.gradient is not None:
        du = float(u.deriv(np.array([r]))[0]) if r > 0 else 0.0
        value += float(spec.drift_at(r)) * du
        if spec.gradient is not None:
            value += float(spec.gradient(r)) * abs(du)
    c = float(spec.c_at(r))
    if c != 0.0:
        value += c * float(u(np.array([r]))[0])
    if spec.bilinear_terms is not None:
        kappa, zeta = spec.bilinear_terms
        kap = float(kappa(r)) if callable(kappa) else float(kappa)
        if kap != 0.0:
            bv = extremal_bilinear(u, zeta, spec.kernel.bounds, spec.sign, r, cfg)
            value += kap * bv.value
            err += abs(kap) * bv.error_estimate
    return OperatorValue(value, err)


def weighted_l1_norm(u, s: float, R: float, N: int | None = None, cfg: QuadratureConfig = DEFAULT_CFG) -> float:
    """``int u(y) (R + |y|)^-(N+2s) dy`` over ``R^N``."""
    if N is None:
        N = getattr(u, "N", None)
        if N is None:
            raise ValueError("dimension N is required for analytic fields")
    if R <= 0:
        raise ValueError("R must be positive")
    fp = getattr(u, "far_power", None)
    if fp is not None and fp[1] <= -2 * s:
        raise ValueError("weighted integral diverges")
    S = sphere_area(N)

    def g(r):
        return float(u(np.array([r]))[0]) * r ** (N - 1) * (R + r) ** (-N - 2 * s)

    cuts = sorted({R, *[b for b in u.breakpoints if b > 0]} | ({u.support_radius} if u.support_radius else set()))
    lo, total = 0.0, 0.0
    for c in cuts:
        total += integrate.quad(g, lo, c, limit=200, epsabs=0, epsrel=1e-11)[0]
        lo = c
    if u.support_radius is None or u.support_radius > lo:
        val, _ = integrate.quad(g, lo, math.inf, limit=400, epsabs=0, epsrel=1e-10)
        if not math.isfinite(val):
            raise ValueError("weighted integral diverges")
        total += val
    return S * total
