"""Regenerate ``frozen.json``: reference values computed independently of the fast paths.

Run ``python3 tests/oracles/generate.py``.  Each entry records how it was
obtained.  The tests read the frozen numbers and never call this script.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
from scipy import integrate

from nonlocal_pucci.fields import AnalyticField
from nonlocal_pucci.kernels import EllipticityBounds, Explicit, frac_laplacian_constant
from nonlocal_pucci.oracle import oracle_bilinear, oracle_extremal, oracle_linear, oracle_weighted_l1

HERE = Path(__file__).parent


def heat_1d(s: float, r: float, t: float = 1.0) -> float:
    """``(1/pi) int_0^K cos(k r) exp(-t k^2s) dk`` by adaptive Gauss-Kronrod on half-periods.

    ``K`` is where the integrand drops below ``e^-80`` of its peak.
    """
    if r == 0:
        return math.gamma(1 + 1 / (2 * s)) * t ** (-1 / (2 * s)) / math.pi
    K = (80.0 / t) ** (1 / (2 * s))
    edges = np.arange(0.0, K + math.pi / r, math.pi / r)
    f = lambda k: math.cos(k * r) * math.exp(-t * k ** (2 * s))  # noqa: E731
    total = math.fsum(integrate.quad(f, a, b, epsabs=1e-17, epsrel=1e-13, limit=200)[0]
                      for a, b in zip(edges[:-1], edges[1:]))
    return total / math.pi


def power_symbol_adaptive(sigma: float, bounds: EllipticityBounds, sign: str) -> float:
    """Adaptive polar quadrature of the extremal operator on ``|x|^sigma`` at ``e_1`` (N = 2)."""
    assert bounds.N == 2
    s = bounds.s
    hi, lo = (bounds.Gamma, bounds.gamma) if sign == "plus" else (bounds.gamma, bounds.Gamma)

    def delta(rho, th):
        c = math.cos(th)
        if rho < 1e-3:
            # second-order Taylor expansion avoids cancellation
            return rho * rho * sigma * ((sigma - 2) * c * c + 1)
        p = (1 + 2 * rho * c + rho * rho) ** (sigma / 2)
        m = max(1 - 2 * rho * c + rho * rho, 1e-300) ** (sigma / 2)
        return p + m - 2.0

    def inner(rho):
        g = lambda th: (lambda d: (hi if d > 0 else lo) * d)(delta(rho, th))  # noqa: E731
        v, _ = integrate.quad(g, 0.0, math.pi / 2, epsabs=1e-15, epsrel=1e-12, limit=1000)
        return 2.0 * v * rho ** (1 - 2 - 2 * s)

    # half space y_1 > 0 covers the full integral once delta is symmetrised
    parts = [(0.0, 0.5), (0.5, 0.9), (0.9, 1.0), (1.0, 1.1), (1.1, 2.0), (2.0, 100.0)]
    total = 0.0
    for a, b in parts:
        v, _ = integrate.quad(inner, a, b, epsabs=1e-13, epsrel=1e-11, limit=400)
        total += v
    # beyond rho = 100: delta -> -2 + O(rho^sigma), both branches negative
    tail, _ = integrate.quad(inner, 100.0, np.inf, epsabs=1e-14, limit=400)
    return total + tail


def main():
    out = {}
    N, s = 2, 0.75
    C = frac_laplacian_constant(N, s)
    phi = AnalyticField.bump_power(1.0, N + 2 * s)
    K = Explicit.constant(EllipticityBounds(C, C, s, N), C)
    fine = dict(panels_per_decade=96, order=16, n_theta_panels=16, theta_order=16)
    out["linear_phi_1_3.5_N2_s0.75_x3"] = {
        "value": oracle_linear(phi, K, 3.0, **fine),
        "how": "dense polar tensor grid, 96 panels/decade x 16 points, 16x16 angular",
    }
    out["weighted_l1_phi_1_4_N2_s0.75_R1"] = {
        "value": oracle_weighted_l1(AnalyticField.bump_power(1.0, 4.0), 0.75, 1.0, 2, panels_per_decade=96),
        "how": "dense radial Gauss panels plus adaptive tail",
    }
    b = EllipticityBounds(1.0, 2.0, 0.75, 2)
    out["power_symbol_g1_G2_N2_s0.75_sigma-1"] = {
        "plus": power_symbol_adaptive(-1.0, b, "plus"),
        "minus": power_symbol_adaptive(-1.0, b, "minus"),
        "how": "nested adaptive QUADPACK in polar coordinates",
    }
    out["heat_N1_s0.75"] = {
        "r": [0.0, 1.0, 5.0, 20.0],
        "value": [heat_1d(0.75, r) for r in (0.0, 1.0, 5.0, 20.0)],
        "how": "adaptive Gauss-Kronrod over half-periods of the cosine transform",
    }
    out["heat_N1_s0.75_times"] = {
        "t": [0.5, 2.0],
        "r": [0.0, 0.5, 1.0, 3.0],
        "value": [[heat_1d(0.75, r, t) for r in (0.0, 0.5, 1.0, 3.0)] for t in (0.5, 2.0)],
        "how": "adaptive Gauss-Kronrod over half-periods of the cosine transform at time t",
    }
    # (-Delta)^s (1-|x|^2)_+^s = 4^s Gamma(1+s) Gamma(N/2+s) / Gamma(N/2)
    s1 = 0.75
    out["torsion_N1_s0.75_u0"] = {
        "value": math.gamma(0.5) / (4**s1 * math.gamma(1 + s1) * math.gamma(0.5 + s1)),
        "how": "closed-form torsion function of the unit ball",
    }
    g1, g2 = AnalyticField.gaussian(1.0), AnalyticField.gaussian(1.5, 0.5)
    out["bilinear_gauss_N2_s0.75_x0.7"] = {
        "value": oracle_bilinear(g1, g2, Explicit.constant(b, 1.0), 0.7, **fine),
        "how": "dense polar tensor grid on the increment products",
    }
    out["extremal_gauss_N3_s0.6_x1.2"] = {
        "plus": oracle_extremal(g1, EllipticityBounds(1.0, 3.0, 0.6, 3), "plus", 1.2,
                                panels_per_decade=96, n_theta_panels=48, theta_order=16),
        "minus": oracle_extremal(g1, EllipticityBounds(1.0, 3.0, 0.6, 3), "minus", 1.2,
                                 panels_per_decade=96, n_theta_panels=48, theta_order=16),
        "how": "dense polar tensor grid with the sign split applied pointwise",
    }
    out["mollifier_kappa"] = {
        str(n): 1.0 / (2 * math.pi ** (n / 2) / math.gamma(n / 2)
                       * integrate.quad(lambda r: math.exp(-1 / (1 - r * r)) * r ** (n - 1), 0, 1,
                                        epsabs=0, epsrel=1e-13)[0])
        for n in (1, 2, 3)
    }
    (HERE / "frozen.json").write_text(json.dumps(out, indent=2) + "\n")
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
