"""Exponents of radial power functions annihilated by the Pucci operators.

By homogeneity ``M(|.|^sigma)(x) = |x|^(sigma - 2s) C(sigma)``, so the
fundamental exponent is a root of the scalar symbol ``C`` on ``(-N, 0)``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .fields import AnalyticField
from .kernels import EllipticityBounds, Extremal
from .operators import DEFAULT_CFG, kernel_value_only, kink_resolving
from .quadrature import QuadratureConfig

__all__ = [
    "FundamentalExponent",
    "NoExponentFound",
    "power_symbol",
    "solve_sigma",
    "check_plus_condition",
    "SCAN_POINTS",
    "END_GUARD",
]

SCAN_POINTS = 33
END_GUARD = 1e-3


class NoExponentFound(RuntimeError):
    pass


@dataclass(frozen=True)
class FundamentalExponent:
    sigma: float
    Ntilde: float
    operator_sign: str
    residual: float
    bracket: tuple[float, float]

    def to_json(self) -> dict:
        return {"sigma": self.sigma, "Ntilde": self.Ntilde, "sign": self.operator_sign,
                "residual": self.residual, "bracket": list(self.bracket)}


def power_symbol(sigma: float, bounds: EllipticityBounds, sign: str, cfg: QuadratureConfig = DEFAULT_CFG) -> float:
    """``C(sigma)``: the extremal operator applied to ``|x|^sigma`` at ``|x| = 1``.

    With ``gamma < Gamma`` the evaluation uses :func:`kink_resolving` on ``cfg``.
    """
    bounds.check()
    N, s = bounds.N, bounds.s
    if not (-N < sigma < 2 * s) or sigma == 0:
        raise ValueError(f"sigma={sigma} outside (-N, 2s) minus {{0}}")
    if sign not in ("plus", "minus"):
        raise ValueError("sign must be 'plus' or 'minus'")
    if bounds.gamma < bounds.Gamma:
        cfg = kink_resolving(cfg)
    return kernel_value_only(AnalyticField.power(sigma), Extremal(bounds), sign, 1.0, cfg)


def solve_sigma(
    bounds: EllipticityBounds,
    sign: str,
    tol: float = 1e-7,
    cfg: QuadratureConfig = DEFAULT_CFG,
    n_scan: int = SCAN_POINTS,
) -> FundamentalExponent:
    """Scan ``(-N + eps, -eps)`` for a sign change of ``C`` and bisect it."""
    N = bounds.N
    return _scan_bisect(bounds, sign, -N + END_GUARD, -END_GUARD, tol, cfg, n_scan)


def _scan_bisect(bounds, sign, lo, hi, tol, cfg, n_scan):
    if not tol > 0:
        raise ValueError("tol must be positive")
    s = bounds.s
    grid = np.linspace(lo, hi, n_scan)

    def C(x):
        return power_symbol(float(x), bounds, sign, cfg)

    vals = np.array([C(x) for x in grid])
    # the symbol is positive near -N; take the first crossing from the left
    idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]
    if len(idx) == 0:
        raise NoExponentFound("no admissible exponent in scan range")
    i = int(idx[0])
    a, b, fa, fb = grid[i], grid[i + 1], vals[i], vals[i + 1]
    if fa == 0.0:
        b, fb = a, fa
    while b - a > tol:
        m = 0.5 * (a + b)
        fm = C(m)
        if fm == 0.0:
            a = b = m
            fa = fb = 0.0
            break
        if np.sign(fm) == np.sign(fa):
            a, fa = m, fm
        else:
            b, fb = m, fm
    sigma = float(0.5 * (a + b))
    return FundamentalExponent(sigma, 2 * s - sigma, sign, float(abs(C(sigma))), (float(a), float(b)))


def check_plus_condition(bounds: EllipticityBounds, cfg: QuadratureConfig = DEFAULT_CFG, tol: float = 1e-7):
    """Whether the plus exponent satisfies ``Ntilde+ > 2s``; returns ``(ok, margin)``.

    When the symbol has no root in ``(-N, 0)`` the search continues on
    ``(0, 2s)``, where a root means ``Ntilde+ < 2s``.
    """
    try:
        fe = solve_sigma(bounds, "plus", tol, cfg)
    except NoExponentFound:
        try:
            fe = _scan_bisect(bounds, "plus", END_GUARD, 2 * bounds.s - END_GUARD, tol, cfg, SCAN_POINTS)
        except NoExponentFound:
            return False, -math.inf
    margin = float(fe.Ntilde - 2 * bounds.s)
    return margin > 0, margin
