"""Slow reference evaluators used to cross-check the fast quadrature.

Everything here is deliberately naive: a dense tensor grid in
``(rho, theta)`` over the half space, fixed Gauss-Legendre panels that are
much finer than the fast layout, and no field-specific geometry.  It is only
intended for fields that are smooth away from kinks of the interpolant and
regular at the origin.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from .kernels import EllipticityBounds, Explicit, FractionalLaplacian, IsaacsFamily, sphere_area

__all__ = ["DenseOracle", "oracle_linear", "oracle_extremal", "threshold_sup_oracle", "oracle_isaacs",
           "oracle_bilinear", "oracle_weighted_l1"]


def _gl_panels(edges, order):
    x, w = np.polynomial.legendre.leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    h = 0.5 * (b - a)
    return (a + h * (x + 1)).ravel(), (h * w).ravel()


class DenseOracle:
    """Tensor grid for ``int_{y_1 > 0} g(y) |y|^-(N+2s) dy`` around ``|x| = r``."""

    def __init__(self, N: int, s: float, r: float, panels_per_decade: int = 48, order: int = 16,
                 n_theta_panels: int = 8, theta_order: int = 12, rho_min: float = 1e-4, rho_max: float = 1e6):
        self.N, self.s, self.r = int(N), float(s), float(r)
        scale = max(r, 1.0)
        lo, hi = rho_min * scale, rho_max * scale
        n_dec = math.log10(hi / lo)
        edges = np.geomspace(lo, hi, int(round(n_dec * panels_per_decade)) + 1)
        if r > 0:
            cuts = [c for c in (0.5 * r, r, 2 * r) if lo < c < hi]
            edges = np.unique(np.concatenate([edges, cuts]))
        rho, wr = _gl_panels(edges, order)
        self.rho_max, self.lo = hi, lo
        if N == 1:
            th, wt = np.array([0.0]), np.array([1.0])
            sphere = 1.0
        else:
            th, wt = _gl_panels(np.linspace(0.0, 0.5 * math.pi, n_theta_panels + 1), theta_order)
            wt = wt * np.sin(th) ** (N - 2)
            sphere = sphere_area(N - 1)
        self.R, self.T = np.meshgrid(rho, th, indexing="ij")
        self.cos = np.cos(self.T)
        self.W = sphere * np.outer(wr * rho ** (-1.0 - 2 * s), wt)
        # tail beyond rho_max of the -2u(x) term, same angular mass
        self.tail_mass = sphere * float(np.sum(wt)) * hi ** (-2 * s) / (2 * s)
        # below rho_min the increments are even in rho, so delta / rho^2 is
        # read off a dedicated row at rho_min with O(rho_min^2) error
        self.near = sphere * wt * lo ** (2 - 2 * s) / (2 - 2 * s) / lo**2
        R = np.vstack([np.full((1, len(th)), lo), self.R])
        c = np.vstack([np.cos(th)[None, :], self.cos])
        self.plus = np.sqrt(np.maximum(r * r + 2 * r * R * c + R**2, 0.0))
        self.minus = np.sqrt(np.maximum(r * r - 2 * r * R * c + R**2, 0.0))

    def deltas(self, u) -> np.ndarray:
        ux = float(u(np.array([self.r]))[0])
        return u(self.plus) + u(self.minus) - 2.0 * ux

    def center(self, u) -> float:
        return float(u(np.array([self.r]))[0])

    def multiplier(self, k) -> np.ndarray:
        """Kernel multiplier on the grid (first row: the near-field row)."""
        shape = self.plus.shape
        if isinstance(k, FractionalLaplacian):
            return np.full(shape, k.constant)
        if isinstance(k, Explicit):
            rho = np.vstack([np.full((1, self.R.shape[1]), self.lo), self.R])
            cos = np.vstack([self.cos[:1], self.cos])
            return np.broadcast_to(np.asarray(k.multiplier(rho, cos), dtype=float), shape)
        raise TypeError(f"{type(k).__name__} is not a single kernel")

    def weighted(self, a, d, center: float, a_far: float) -> float:
        near = float(np.sum(self.near * a[0] * d[0]))
        return float(np.sum(self.W * a[1:] * d[1:])) + near - 2.0 * center * a_far * self.tail_mass


def oracle_linear(u, K, x_r: float, **grid) -> float:
    g = DenseOracle(K.N, K.s, x_r, **grid)
    a = g.multiplier(K)
    return g.weighted(a, g.deltas(u), g.center(u), float(a[-1, 0]))


def oracle_extremal(u, bounds: EllipticityBounds, sign: str, x_r: float, **grid) -> float:
    g = DenseOracle(bounds.N, bounds.s, x_r, **grid)
    d = g.deltas(u)
    hi, lo = (bounds.Gamma, bounds.gamma) if sign == "plus" else (bounds.gamma, bounds.Gamma)
    a = np.where(d > 0, hi, lo)
    # the far -2u(x) term carries the multiplier chosen by the sign of -u(x)
    ux = g.center(u)
    a_far = hi if -ux > 0 else lo
    return g.weighted(a, d, ux, a_far)


def threshold_sup_oracle(u, bounds: EllipticityBounds, sign: str, x_r: float, n_kernels: int = 64,
                         **grid) -> float:
    """Best of ``n_kernels`` admissible kernels switching between the bounds at a threshold of ``delta``.

    Each candidate is a genuine member of the class, so the result can never
    exceed ``M^+`` (or undercut ``M^-``); thresholds include 0 so the extremum
    is attained.
    """
    g = DenseOracle(bounds.N, bounds.s, x_r, **grid)
    d = g.deltas(u)
    ux = g.center(u)
    q = np.quantile(d, np.linspace(0.0, 1.0, n_kernels - 1))
    best = None
    for t in np.concatenate([[0.0], q]):
        if sign == "plus":
            a = np.where(d > t, bounds.Gamma, bounds.gamma)
            v = g.weighted(a, d, ux, bounds.Gamma if -2 * ux > t else bounds.gamma)
            best = v if best is None else max(best, v)
        else:
            a = np.where(d > t, bounds.gamma, bounds.Gamma)
            v = g.weighted(a, d, ux, bounds.gamma if -2 * ux > t else bounds.Gamma)
            best = v if best is None else min(best, v)
    return float(best)


def oracle_isaacs(u, family: IsaacsFamily, x_r: float, **grid) -> float:
    vals = [[oracle_linear(u, k, x_r, **grid) for k in row] for row in family.rows]
    return min(max(row) for row in vals)


def oracle_bilinear(u, v, kernel, x_r: float, sign: str | None = None, **grid) -> float:
    """``1/2 int (u(x)-u(x+y))(v(x)-v(x+y)) K(y) dy``; ``kernel`` may be a single kernel or bounds."""
    N, s = kernel.N, kernel.s
    g = DenseOracle(N, s, x_r, **grid)
    ux, vx = g.center(u), g.center(v)
    p_plus = (u(g.plus) - ux) * (v(g.plus) - vx)
    p_minus = (u(g.minus) - ux) * (v(g.minus) - vx)
    if isinstance(kernel, EllipticityBounds):
        hi, lo = (kernel.Gamma, kernel.gamma) if sign == "plus" else (kernel.gamma, kernel.Gamma)
        tot = np.where(p_plus > 0, hi, lo) * p_plus + np.where(p_minus > 0, hi, lo) * p_minus
        far = (hi if ux * vx > 0 else lo) * ux * vx
    else:
        a = g.multiplier(kernel)
        tot = a * (p_plus + p_minus)
        far = float(a[-1, 0]) * ux * vx
    # beyond rho_max both increments reduce to u(x) v(x); near the centre the
    # product is quadratic like a second difference
    near = 0.5 * float(np.sum(g.near * tot[0]))
    return 0.5 * float(np.sum(g.W * tot[1:])) + near + far * g.tail_mass


def oracle_weighted_l1(u, s: float, R: float, N: int, panels_per_decade: int = 48, order: int = 16) -> float:
    """``int u(y) (R + |y|)^-(N+2s) dy`` by dense radial panels plus an adaptive tail."""
    edges = np.concatenate([[0.0], np.geomspace(1e-6, 1e6, 12 * panels_per_decade + 1)])
    r, w = _gl_panels(edges, order)
    body = sphere_area(N) * float(np.sum(w * u(r) * r ** (N - 1) * (R + r) ** (-(N + 2 * s))))
    tail, _ = integrate.quad(lambda t: float(u(np.array([t]))[0]) * t ** (N - 1) * (R + t) ** (-(N + 2 * s)),
                             1e6, np.inf, limit=200)
    return body + sphere_area(N) * tail

