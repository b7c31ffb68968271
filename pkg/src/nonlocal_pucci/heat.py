"""Self-similar profile of the fractional heat equation.

``P(x, t) = t^(-N/2s) P(x t^(-1/2s), 1)`` where ``P(., 1)`` is the inverse
Fourier transform of ``exp(-|xi|^(2s))``.  For radial functions this is a
Hankel transform,

    P(r) = (2 pi)^(-N/2) r^(-nu) int_0^inf k^(N/2) J_nu(k r) exp(-k^(2s)) dk,

``nu = N/2 - 1``, computed with Gauss-Legendre panels between consecutive
zeros of the oscillating factor and geometric grading at ``k = 0`` where
``k^(2s)`` is not smooth.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .fields import PowerLaw, RadialField, RadialGrid, graded_nodes
from .kernels import FractionalLaplacian, sphere_area
from .operators import DEFAULT_CFG, OperatorSpec, full_operator
from .quadrature import QuadratureConfig

__all__ = [
    "HeatProfile",
    "fourier_profile",
    "heat_profile",
    "verify_kernel_bounds",
    "verify_eigen_relation",
    "self_similar_value",
    "verify_scaling",
    "profile_at_origin",
    "tail_coefficients",
]


def profile_at_origin(N: int, s: float, t: float = 1.0) -> float:
    """``P(0, t)`` in closed form."""
    return (2 * math.pi) ** (-N) * sphere_area(N) * math.gamma(N / (2 * s)) / (2 * s) * t ** (-N / (2 * s))


def tail_coefficients(N: int, s: float, terms: int = 3) -> list[float]:
    """Coefficients ``a_m`` of ``P(r) ~ sum_m a_m r^(-N - 2 s m)`` for large ``r``."""
    a = 2 * s
    out = []
    for m in range(1, terms + 1):
        g = special.rgamma(-a * m / 2)  # 1/Gamma, zero at the poles
        out.append(
            math.pi ** (-N / 2) * (-1) ** m / math.factorial(m) * 2 ** (a * m) * math.gamma((N + a * m) / 2) * g
        )
    return out


def _gl(n: int):
    return np.polynomial.legendre.leggauss(n)


def _bessel_zeros(nu: float, count: int) -> np.ndarray:
    if nu == -0.5:  # cos
        return (np.arange(count) + 0.5) * math.pi
    if nu == 0.5:  # sin
        return (np.arange(1, count + 1)) * math.pi
    if float(nu).is_integer():
        return special.jn_zeros(int(nu), count)
    # McMahon estimate refined by Newton steps
    b = (np.arange(1, count + 1) + nu / 2 - 0.25) * math.pi
    mu = 4 * nu * nu
    z = b - (mu - 1) / (8 * b)
    for _ in range(6):
        z = z - special.jv(nu, z) / special.jvp(nu, z)
    return z


def fourier_profile(N: int, s: float, r, t: float = 1.0, order: int = 12, grading: int = 40) -> np.ndarray:
    """Direct inversion of ``exp(-t |xi|^(2s))`` at radii ``r``."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    nu = N / 2 - 1
    x, w = _gl(order)
    # beyond K the Gaussian-like factor is below e^-60 relative to its peak
    K = (60.0 / t) ** (1 / (2 * s))
    out = np.empty_like(r)
    for i, ri in enumerate(r):
        if ri == 0.0:
            out[i] = profile_at_origin(N, s, t)
            continue
        nz = int(K * ri / math.pi) + 2
        zs = _bessel_zeros(nu, nz) / ri
        zs = zs[zs < K]
        first = zs[0] if len(zs) else K
        grad = first * 0.5 ** np.arange(grading, 0, -1)
        edges = np.concatenate([[0.0], grad, [first], zs[1:], [K] if (len(zs) == 0 or zs[-1] < K) else []])
        edges = np.unique(edges)
        a, b = edges[:-1, None], edges[1:, None]
        h = 0.5 * (b - a)
        k = (a + h * (x + 1)).ravel()
        wk = (h * w).ravel()
        f = k ** (N / 2) * special.jv(nu, k * ri) * np.exp(-t * k ** (2 * s))
        out[i] = (2 * math.pi) ** (-N / 2) * ri ** (-nu) * np.sum(wk * f)
    return out


@dataclass
class HeatProfile:
    N: int
    s: float
    field: RadialField
    meta: dict = field(default_factory=dict)

    @property
    def lam(self) -> float:
        return self.N / (2 * self.s)

    def mass(self) -> float:
        """``int P dx`` from the interpolant plus the closed-form tail."""
        x = self.field.grid.nodes
        fine = np.concatenate([np.linspace(a, b, 9)[:-1] for a, b in zip(x[:-1], x[1:])] + [[x[-1]]])
        y = self.field(fine) * fine ** (self.N - 1)
        inner = integrate.trapezoid(y, fine)
        A, p = self.field.tail.A, self.field.tail.p
        R = x[-1]
        return sphere_area(self.N) * (inner + A * R ** (self.N - p) / (p - self.N))


def heat_profile(N: int, s: float, grid: RadialGrid | None = None, R: float = 200.0, check: bool = True) -> HeatProfile:
    """Profile ``P(., 1)`` on a graded grid with a fitted power-law tail."""
    if N not in (1, 2, 3):
        raise ValueError("N must be 1, 2 or 3")
    if not 0 < s < 1:
        raise ValueError("s must lie in (0, 1)")
    if grid is None:
        grid = RadialGrid(graded_nodes(R, h0=0.05, ratio=1.03, refine_right=False), N)
    x = grid.nodes
    vals = fourier_profile(N, s, x, order=12)
    if check:
        coarse = fourier_profile(N, s, x, order=8, grading=30)
        rel = np.max(np.abs(coarse - vals) / np.abs(vals))
        if not rel < 1e-4:
            raise RuntimeError(f"Fourier inversion did not converge (levels differ by {rel:.2e})")
    else:
        rel = math.nan
    if np.any(vals <= 0):
        raise RuntimeError("profile is not positive; increase resolution")
    # amplitude of the leading r^-(N+2s) decay, fitted on the outer third
    p = N + 2 * s
    Rm = x[-1]
    m = x >= Rm / 3
    A = float(np.exp(np.mean(np.log(vals[m]) + p * np.log(x[m]))))
    f = RadialField(grid, vals, PowerLaw(A, p), smooth=True)
    return HeatProfile(N, s, f, {"order": 12, "refinement_change": float(rel), "R": float(Rm)})


def verify_kernel_bounds(profile: HeatProfile):
    """Range of ``P(r) (1 + r^2)^((N+2s)/2)`` over the grid: ``(min, max, max/min)``."""
    x = profile.field.grid.nodes
    v = profile.field.values
    if np.any(v <= 0):
        raise ValueError("profile has nonpositive values")
    g = v * (1 + x * x) ** ((profile.N + 2 * profile.s) / 2)
    lo, hi = float(np.min(g)), float(np.max(g))
    return lo, hi, hi / lo


def verify_eigen_relation(profile: HeatProfile, cfg: QuadratureConfig = DEFAULT_CFG,
                          radii=(0.0, 0.5, 1.0, 2.0, 5.0, 10.0)) -> float:
    """Largest relative residual of ``(-Delta)^s`` form plus drift against ``-(N/2s) P``."""
    N, s = profile.N, profile.s
    if not s > 0.5:
        raise ValueError("drift term needs s > 1/2")
    spec = OperatorSpec(FractionalLaplacian(N, s), drift="selfsimilar")
    worst = 0.0
    for r in radii:
        v = full_operator(profile.field, spec, r, cfg).value
        phi = float(profile.field(np.array([r]))[0])
        worst = max(worst, abs(v + profile.lam * phi) / abs(profile.lam * phi))
    return worst


def _ss(phi, lam, s, x_r, t):
    if not t > 0:
        raise ValueError("t must be positive")
    return t ** (-lam) * phi(np.asarray(x_r, float) * t ** (-1 / (2 * s)))


def self_similar_value(phi, lam: float, x_r, t: float, s: float):
    """``Phi(x, t) = t^-lam phi(|x| t^(-1/2s))``."""
    out = _ss(phi, lam, s, x_r, t)
    return float(out) if np.ndim(x_r) == 0 else out


def verify_scaling(phi, lam: float, s: float, c_list=(0.5, 2.0, 3.0), x_list=(0.0, 0.5, 1.0, 3.0),
                   t_list=(0.5, 1.0, 2.0)) -> float:
    """Largest relative deviation from ``Phi(x,t) = c^lam Phi(c^(1/2s) x, c t)``."""
    worst = 0.0
    for c in c_list:
        if not c > 0:
            raise ValueError("c must be positive")
        for t in t_list:
            x = np.asarray(x_list, float)
            lhs = _ss(phi, lam, s, x, t)
            rhs = c**lam * _ss(phi, lam, s, c ** (1 / (2 * s)) * x, c * t)
            worst = max(worst, float(np.max(np.abs(lhs - rhs) / np.maximum(np.abs(lhs), 1e-300))))
    return worst
