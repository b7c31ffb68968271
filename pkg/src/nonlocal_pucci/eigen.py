"""Dirichlet problems and principal eigenpairs on radial domains.

The equation is imposed at grid nodes (collocation); the nonlinear
operators are handled by freezing the pointwise kernel selection of the
current iterate.  Whole-space eigenpairs for the self-similar drift are
obtained by solving on a growing sequence of balls.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.optimize import brentq

from .discrete import DEFAULT_DISCRETE_CFG, DiscreteOperator, HermiteSpace
from .fields import PowerLaw, RadialField, RadialGrid, ZeroOutside, graded_nodes
from .kernels import EllipticityBounds, Extremal
from .operators import OperatorSpec
from .quadrature import QuadratureConfig

__all__ = [
    "Ball",
    "Annulus",
    "PuncturedBall",
    "WholeSpace",
    "EigenPair",
    "ExhaustionTrace",
    "PositivityLost",
    "Discretization",
    "solve_dirichlet",
    "principal_eigenpair",
    "whole_space_eigenpair",
    "punctured_eigenvalue",
    "decay_exponent",
    "simplicity_probe",
    "richardson",
    "standard_starts",
]


class PositivityLost(RuntimeError):
    pass


# -- domains ------------------------------------------------------------------------


@dataclass(frozen=True)
class Ball:
    R: float

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError("ball radius must be positive")

    @property
    def r_star(self) -> float:
        return 0.0

    @property
    def outer(self) -> float:
        return self.R


@dataclass(frozen=True)
class Annulus:
    r_in: float
    r_out: float

    def __post_init__(self):
        if not (0 < self.r_in < self.r_out):
            raise ValueError("annulus radii must satisfy 0 < r_in < r_out")

    @property
    def r_star(self) -> float:
        return 0.5 * (self.r_in + self.r_out)

    @property
    def outer(self) -> float:
        return self.r_out


@dataclass(frozen=True)
class PuncturedBall(Annulus):
    """``B_R`` minus ``B_eps``."""

    def __init__(self, eps: float, R: float):
        object.__setattr__(self, "r_in", float(eps))
        object.__setattr__(self, "r_out", float(R))
        self.__post_init__()

    @property
    def eps(self) -> float:
        return self.r_in


@dataclass(frozen=True)
class WholeSpace:
    radii: tuple

    def __init__(self, radii):
        radii = tuple(float(r) for r in radii)
        if any(r <= 0 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
            raise ValueError("exhaustion radii must be positive and increasing")
        object.__setattr__(self, "radii", radii)


# -- discretisation -------------------------------------------------------------------


@dataclass
class Discretization:
    """Nodes, free (collocation) nodes, and fixed nodal values."""

    nodes: np.ndarray
    free: np.ndarray
    fixed_values: np.ndarray
    breaks: tuple
    domain: object

    @classmethod
    def for_domain(cls, domain, h0: float | None = None, ratio: float = 1.03, exterior=None,
                   exterior_radius: float | None = None, n_hole: int = 2):
        """Graded grid for ``domain``.

        ``h0`` defaults to ``0.04 R`` for small balls (so that grids of
        different balls are exact dilations) and to 0.05 otherwise.
        ``exterior`` (callable) prescribes data on ``(R, exterior_radius]``.
        """
        R = domain.outer
        if h0 is None:
            h0 = 0.04 * R if R <= 1.25 else 0.05
        breaks = []
        if isinstance(domain, Ball):
            x = graded_nodes(R, h0=h0, ratio=ratio, h_min=h0 / 20)
            free = np.arange(len(x) - 1)
        elif isinstance(domain, Annulus):
            a = domain.r_in
            hole = np.linspace(0.0, a, n_hole + 1)[:-1]
            inner = graded_nodes(R, h0=h0, ratio=ratio, r0=a, refine_left=True, h_min=min(h0, a) / 20)
            x = np.concatenate([hole, inner])
            breaks.append(a)
            free = np.arange(len(hole) + 1, len(x) - 1)
        else:
            raise TypeError("bounded domain required")
        vals = np.zeros(len(x))
        if exterior is not None:
            if exterior_radius is None or exterior_radius <= R:
                raise ValueError("exterior data needs exterior_radius > R")
            ext = graded_nodes(exterior_radius - R, h0=h0, ratio=1.0, refine_left=True, h_min=h0 / 20)[1:] + R
            x = np.concatenate([x, ext])
            vals = np.concatenate([vals, np.asarray(exterior(ext), float)])
            breaks.append(R)
        return cls(x, free, vals, tuple(breaks), domain)

    def space(self) -> HermiteSpace:
        return HermiteSpace(self.nodes, self.breaks)

    @property
    def fixed(self) -> np.ndarray:
        m = np.ones(len(self.nodes), bool)
        m[self.free] = False
        return np.nonzero(m)[0]


def _coeff_at(coef, r):
    if coef is None:
        return None
    if callable(coef):
        return np.asarray(coef(r), float)
    return np.full(len(r), float(coef))


def _operator(spec: OperatorSpec, disc: Discretization, cfg, upwind=False) -> DiscreteOperator:
    xc = disc.nodes[disc.free]
    drift = None if spec.drift is None else spec.drift_at(xc)
    c = spec.c_at(xc) if spec.has_zero_order else None
    grad = None if spec.gradient is None else _coeff_at(spec.gradient, xc)
    if spec.bilinear_terms is not None:
        raise NotImplementedError("bilinear terms are evaluated pointwise only")
    return DiscreteOperator(disc.space(), spec.kernel, spec.sign, disc.free, cfg,
                            drift=drift, gradient=grad, c=c, upwind=upwind)


def _to_field(disc: Discretization, U, N: int) -> RadialField:
    return RadialField(RadialGrid(disc.nodes, N), np.asarray(U, float), ZeroOutside())


# -- Dirichlet problems ----------------------------------------------------------------


def solve_dirichlet(spec: OperatorSpec, rhs, domain, cfg: QuadratureConfig = DEFAULT_DISCRETE_CFG,
                    exterior=None, exterior_radius=None, shift: float | None = None, tol: float = 1e-10,
                    max_sweeps: int = 50, h0=None, ratio: float = 1.03, disc: Discretization | None = None,
                    op: DiscreteOperator | None = None, return_info: bool = False):
    """Solve ``-F(u) = rhs`` in the domain with prescribed exterior values.

    Policy iteration: the kernel selection (and the sign of ``u'`` for a
    gradient term) is frozen from the current iterate, the linear system is
    solved, and the two steps alternate until the selection repeats.  With
    a positive zero-order coefficient a shift ``m`` must be supplied; the
    iteration then solves ``(-F + m) u_{k+1} = rhs + m u_k``.
    """
    if disc is None:
        disc = Discretization.for_domain(domain, h0=h0, ratio=ratio, exterior=exterior, exterior_radius=exterior_radius)
    if op is None:
        op = _operator(spec, disc, cfg)
    xc = disc.nodes[disc.free]
    if spec.has_zero_order and np.any(spec.c_at(xc) > 0) and shift is None:
        raise ValueError("zero-order coefficient is positive somewhere; supply a shift")
    m = 0.0 if shift is None else float(shift)
    if callable(rhs):
        f = np.asarray(rhs(xc), float)
    else:
        f = np.broadcast_to(np.asarray(rhs, float), xc.shape).astype(float)
    U = disc.fixed_values.copy()
    I, B = disc.free, disc.fixed
    linear = op._linear is not None and spec.gradient is None
    prev = None
    for sweep in range(1, max_sweeps + 1):
        A = op.matrix(U)
        AII = A[:, I]
        rhs_k = f + A[:, B] @ U[B] + m * U[I]
        Unew = U.copy()
        Unew[I] = linalg.solve(-AII + m * np.eye(len(I)), rhs_k)
        change = np.max(np.abs(Unew - U)) / max(1.0, np.max(np.abs(Unew)))
        U, prev = Unew, U
        if (linear and m == 0.0) or change < tol:
            break
    else:
        raise RuntimeError(f"policy iteration did not converge in {max_sweeps} sweeps (last change {change:.3e})")
    out = _to_field(disc, U, spec.N)
    if return_info:
        return out, {"sweeps": sweep, "change": change, "disc": disc, "op": op}
    return out


# -- eigenpairs ----------------------------------------------------------------------------


@dataclass
class EigenPair:
    lam: float
    phi: RadialField
    r_star: float
    residual: float
    iterations: int = 0
    info: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        d = {"lambda": self.lam, "r_star": self.r_star, "residual": self.residual, "iterations": self.iterations}
        d.update({k: v for k, v in self.info.items() if isinstance(v, (int, float, str, list))})
        return d


def standard_starts(x: np.ndarray, N: int, s: float) -> dict:
    """Three distinct positive initial iterates."""
    return {
        "constant": np.ones_like(x),
        "bump": np.exp(-((x / max(1.0, 0.2 * x[-1])) ** 2)) + 1e-3,
        "power": (1.0 + x * x) ** (-(N + 2 * s) / 2),
    }


def principal_eigenpair(spec: OperatorSpec, domain, tol: float = 1e-9, cfg: QuadratureConfig = DEFAULT_DISCRETE_CFG,
                        start=None, max_iter: int = 2000, h0=None, ratio: float = 1.03,
                        disc: Discretization | None = None, op: DiscreteOperator | None = None) -> EigenPair:
    """Inverse power iteration for ``F(phi) = -lambda phi``, ``phi(r*) = 1``.

    ``u_{k+1}`` solves ``(-F + m) u_{k+1} = u_k`` with the kernel selection
    frozen from ``u_k``; the normalisation factor ``mu`` gives
    ``lambda = 1/mu - m``.
    """
    if isinstance(domain, WholeSpace):
        raise TypeError("use whole_space_eigenpair for the whole space")
    if disc is None:
        disc = Discretization.for_domain(domain, h0=h0, ratio=ratio)
    if op is None:
        op = _operator(spec, disc, cfg)
    I = disc.free
    x = disc.nodes
    sp = op.space
    r_star = domain.r_star
    e_star = sp.matrix([r_star]).toarray()[0]  # interpolation functional at r*
    m = 0.0
    if spec.has_zero_order:
        m = 2.0 * max(0.0, float(np.max(spec.c_at(x[I]))))
    U = np.zeros(len(x))
    if start is None:
        U[I] = standard_starts(x, spec.N, spec.s)["power"][I]
    else:
        U[I] = np.asarray(start(x[I]) if callable(start) else np.asarray(start)[I], float)
    if not np.all(U[I] > 0):
        warnings.warn("initial iterate is not positive", RuntimeWarning, stacklevel=2)
    U /= e_star @ U
    lam_old = math.inf
    linear = op._linear is not None and spec.gradient is None
    lu = None
    if linear:
        lu = linalg.lu_factor(-op.matrix()[:, I] + m * np.eye(len(I)))
    it = 0
    for it in range(1, max_iter + 1):
        if linear:
            v = linalg.lu_solve(lu, U[I])
        else:
            A = op.matrix(U)[:, I]
            v = linalg.solve(-A + m * np.eye(len(I)), U[I])
        V = np.zeros_like(U)
        V[I] = v
        mu = e_star @ V
        if mu == 0 or not math.isfinite(mu):
            raise RuntimeError("inverse iteration broke down")
        V /= mu
        lam = 1.0 / mu - m
        dphi = np.max(np.abs(V - U))
        U = V
        if abs(lam - lam_old) < tol * (1 + abs(lam)) and dphi < tol:
            break
        lam_old = lam
    else:
        raise RuntimeError(f"eigen iteration did not converge in {max_iter} steps (last lambda {lam:.8g})")
    if np.min(U[I]) <= 0:
        raise PositivityLost("positivity lost")
    res = np.max(np.abs(op.apply(U) + lam * U[I]) / (1.0 + np.abs(U[I])))
    info = {"n_nodes": int(len(x)), "domain": repr(domain)}
    if isinstance(spec.kernel, Extremal) and spec.N == 1:
        info["outside_proven_range"] = "extremal operator in dimension 1"
    return EigenPair(float(lam), _to_field(disc, U, spec.N), float(r_star), float(res), it, info)


# -- whole space -----------------------------------------------------------------------------


@dataclass
class ExhaustionTrace:
    radii: list
    lambdas: list
    decay: list
    lambda_extrapolated: float
    lambda_last: float
    order: float
    monotone: bool
    monotone_flags: list

    def to_json(self) -> dict:
        return {
            "trace": [{"R": R, "lambda": l, "p": p} for R, l, p in zip(self.radii, self.lambdas, self.decay)],
            "lambda_extrapolated": self.lambda_extrapolated,
            "lambda_last": self.lambda_last,
            "order": self.order,
            "monotone": self.monotone,
        }


def richardson(values, ratio: float = 2.0):
    """Extrapolate the last three terms of a sequence with an observed order.

    Returns ``(limit, order)``; falls back to the last value when the
    differences do not contract.
    """
    if len(values) < 3:
        raise ValueError("need at least three values")
    a, b, c = values[-3:]
    d1, d2 = a - b, b - c
    if d2 == 0:
        return c, math.inf
    q = d1 / d2
    if not (q > 1.0) or not math.isfinite(q):
        return c, math.nan
    order = math.log(q) / math.log(ratio)
    return c - d2 / (q - 1.0), order


def _kernel_from(kernel):
    return Extremal(kernel) if isinstance(kernel, EllipticityBounds) else kernel


def _corrected_tail(x, phi, R, lam, s, lo=0.5, hi=0.8) -> PowerLaw:
    """Power-law fit on ``[lo R, hi R]`` corrected for Dirichlet truncation.

    Far out the ball eigenfunction differs from the whole-space one by a
    multiple of ``r^(-2 s lam)`` (the homogeneous solution of the transport
    part ``(r/2s) u' = -lam u``) that cancels it at ``R``; this gives
    ``phi_R ~ A r^-p (1 - (r/R)^(p - 2 s lam))``, solved self-consistently
    for ``p``.
    """
    m = (x >= lo * R) & (x <= hi * R) & (phi > 0)
    r, v = x[m], phi[m]
    if len(r) < 5:
        raise ValueError("tail fit window needs at least 5 positive nodes")
    lr = np.log(r)

    def fit(p):
        q = max(p - 2 * s * lam, 1e-3)
        y = np.log(v) - np.log1p(-((r / R) ** q))
        return np.polyfit(lr, y, 1)

    def g(p):
        return -fit(p)[0] - p

    grid = np.linspace(2 * s * lam + 0.05, 2 * s * lam + 10, 200)
    vals = [g(p) for p in grid]
    for a, b, fa, fb in zip(grid, grid[1:], vals, vals[1:]):
        if fa * fb <= 0:
            p = brentq(g, a, b)
            return PowerLaw(float(math.exp(fit(p)[1])), float(p))
    raise ValueError("truncation-corrected tail fit has no consistent exponent")


def whole_space_eigenpair(kernel, sign: str = "plus", radii=(10.0, 20.0, 40.0), tol: float = 1e-9,
                          cfg: QuadratureConfig = DEFAULT_DISCRETE_CFG, h0: float = 0.05, ratio: float = 1.03,
                          start=None, slack: float = 1e-3):
    """Exhaust ``R^N`` by balls with the self-similar drift ``x / 2s``.

    Returns the eigenpair of the largest ball (with a whole-space profile
    and power-law tail, see :func:`decay_exponent`) and the trace.
    """
    kernel = _kernel_from(kernel)
    s = kernel.s
    if not (0.5 < s < 1):
        raise ValueError("self-similar drift needs s in (1/2, 1)")
    ws = WholeSpace(radii)
    if len(ws.radii) < 3:
        raise ValueError("at least three exhaustion radii are needed")
    spec = OperatorSpec(kernel, sign=sign, drift="selfsimilar")
    pairs, lams, decs = [], [], []
    for R in ws.radii:
        pair = principal_eigenpair(spec, Ball(R), tol, cfg, start=start, h0=h0, ratio=ratio)
        x, v = pair.phi.grid.nodes, pair.phi.values
        try:
            p = _corrected_tail(x, v, R, pair.lam, s).p
        except ValueError:
            p = math.nan
        pairs.append(pair)
        lams.append(pair.lam)
        decs.append(p)
    flags = [b <= a + slack * (1 + abs(a)) for a, b in zip(lams, lams[1:])]
    ratio_R = ws.radii[-1] / ws.radii[-2]
    lam_inf, order = richardson(lams, ratio_R)
    if not all(flags):
        warnings.warn("exhaustion eigenvalues are not decreasing within slack", RuntimeWarning, stacklevel=2)
    trace = ExhaustionTrace(list(ws.radii), lams, decs, float(lam_inf), lams[-1], float(order), all(flags), flags)
    last = pairs[-1]
    R = ws.radii[-1]
    pair = _whole_space_pair(last, R, s, kernel.N)
    pair.info["trace"] = trace.to_json()["trace"]
    pair.info["lambda_extrapolated"] = float(lam_inf)
    pair.info["ball_pairs"] = pairs
    return pair, trace


def _whole_space_pair(ball: EigenPair, R: float, s: float, N: int) -> EigenPair:
    x, v = ball.phi.grid.nodes, ball.phi.values
    tail = _corrected_tail(x, v, R, ball.lam, s)
    keep = x <= 0.8 * R
    xr, vr = x[keep], v[keep]
    q = max(tail.p - 2 * s * ball.lam, 1e-3)
    corr = 1.0 - (xr / R) ** q
    vals = vr / corr
    field_ = RadialField(RadialGrid(xr, N), vals, tail)
    info = dict(ball.info)
    info.update({"R": R, "s": s, "ball_field": ball.phi, "tail_A": tail.A, "tail_p": tail.p})
    return EigenPair(ball.lam, field_, 0.0, ball.residual, ball.iterations, info)


def decay_exponent(pair: EigenPair) -> PowerLaw:
    """Fitted far-field power law of a whole-space eigenfunction."""
    if "ball_field" not in pair.info:
        raise ValueError("decay exponent needs a whole-space eigenpair")
    ball = pair.info["ball_field"]
    R = pair.info["R"]
    return _corrected_tail(ball.grid.nodes, ball.values, R, pair.lam, _s_of(pair))


def _s_of(pair: EigenPair) -> float:
    return pair.info["s"]


def punctured_eigenvalue(kernel, sign: str = "plus", eps_list=(0.2, 0.1, 0.05), R: float = 10.0, tol: float = 1e-9,
                         cfg: QuadratureConfig = DEFAULT_DISCRETE_CFG, h0: float = 0.05, ratio: float = 1.03):
    """Principal eigenvalues on ``B_R \\ B_eps`` with the self-similar drift."""
    kernel = _kernel_from(kernel)
    if not (0.5 < kernel.s < 1):
        raise ValueError("self-similar drift needs s in (1/2, 1)")
    spec = OperatorSpec(kernel, sign=sign, drift="selfsimilar")
    out = []
    for eps in eps_list:
        if not (0 < eps < R):
            raise ValueError("need 0 < eps < R")
        pair = principal_eigenpair(spec, PuncturedBall(eps, R), tol, cfg, h0=min(h0, eps / 2), ratio=ratio)
        out.append((float(eps), pair.lam))
    return out


def simplicity_probe(spec: OperatorSpec, domain, starts=None, tol: float = 1e-9,
                     cfg: QuadratureConfig = DEFAULT_DISCRETE_CFG, h0=None, ratio: float = 1.03):
    """Run the eigen iteration from several positive starts.

    Returns ``(sup_distance, lambda_spread, pairs)`` where the distance is
    the largest nodewise difference between normalised eigenfunctions.
    """
    disc = Discretization.for_domain(domain, h0=h0, ratio=ratio)
    op = _operator(spec, disc, cfg)
    x = disc.nodes
    if starts is None:
        starts = standard_starts(x, spec.N, spec.s)
    if len(starts) < 3:
        raise ValueError("at least three starts are required")
    pairs = {k: principal_eigenpair(spec, domain, tol, cfg, start=v, disc=disc, op=op) for k, v in starts.items()}
    P = list(pairs.values())
    dist = max(np.max(np.abs(a.phi.values - b.phi.values)) for i, a in enumerate(P) for b in P[i + 1:])
    spread = max(abs(a.lam - b.lam) for i, a in enumerate(P) for b in P[i + 1:])
    return float(dist), float(spread), pairs
