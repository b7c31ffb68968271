"""Closed-form barrier profiles and numerical certificates for their inequalities.

Each ``verify_*`` routine evaluates a Pucci operator on a barrier at a set of
radii and returns a :class:`VerificationReport` holding per-point records
together with empirical constants (witnesses for the existential ones).
Margins are arranged so that ``lhs - rhs >= 0`` is the desired inequality;
a point counts as a violation only when the margin is below minus twice the
quadrature error estimate.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate

from .exponents import solve_sigma
from .fields import AnalyticField
from .kernels import EllipticityBounds, sphere_area
from .operators import DEFAULT_CFG, extremal
from .quadrature import QuadratureConfig

__all__ = [
    "SubVarphi",
    "FundamentalE",
    "SuperPhi",
    "PsiSub",
    "PointRecord",
    "VerificationReport",
    "barrier_field",
    "eval_barrier",
    "mollifier",
    "verify_subsolution",
    "verify_corollary",
    "verify_supersolution",
    "verify_psi",
    "C0_LADDER",
]

C0_LADDER = tuple(2.0**k for k in range(11))
KINK_BAND = 0.05


# -- barrier profiles ------------------------------------------------------


@dataclass(frozen=True)
class SubVarphi:
    """``(M^2 + |x|^2)^(-beta/2)``."""
    M: float
    beta: float

    def __post_init__(self):
        if not self.M >= 1:
            raise ValueError("SubVarphi needs M >= 1")
        if not self.beta > 0:
            raise ValueError("SubVarphi needs beta > 0")

    def check(self, N: int, s: float):
        if self.beta < N + 2 * s - 1e-12:
            raise ValueError(f"SubVarphi needs beta >= N + 2s = {N + 2 * s:g}")


@dataclass(frozen=True)
class FundamentalE:
    """``|x|^sigma``."""
    sigma: float

    def __post_init__(self):
        if self.sigma == 0:
            raise ValueError("sigma must be nonzero")


@dataclass(frozen=True)
class SuperPhi:
    """``min(c |x|^sigma, |x|^-beta)`` with the branch switch at ``r_c``."""
    beta: float
    c: float
    sigma: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("SuperPhi needs c > 0")
        if not self.sigma < 0:
            raise ValueError("SuperPhi needs sigma < 0")
        if not self.beta + self.sigma > 0:
            raise ValueError("SuperPhi needs beta + sigma > 0")

    def check(self, N: int, s: float):
        if not (N < self.beta <= N + 2 * s + 1e-12):
            raise ValueError(f"SuperPhi needs N < beta <= N + 2s, got beta={self.beta:g}")

    @property
    def r_c(self) -> float:
        return float(self.c ** (-1.0 / (self.beta + self.sigma)))

    def theta(self, N: int) -> float:
        return float((self.beta - N) / (self.beta + self.sigma))

    def branch(self, r: float) -> str:
        """``"inner"`` (``c |x|^sigma``) below ``r_c``, ``"outer"`` (power) above."""
        return "inner" if r < self.r_c else "outer"


@dataclass(frozen=True)
class PsiSub:
    """``(M + |x|^2)^(-beta/2) + C0 eta(x) - eps |x|^sigma_p``."""
    M: float
    beta: float
    C0: float
    eps: float
    sigma_p: float
    sigma: float | None = None

    def __post_init__(self):
        if not (self.M > 0 and self.C0 >= 0 and self.eps >= 0):
            raise ValueError("PsiSub needs M > 0, C0 >= 0, eps >= 0")
        if not self.sigma_p < 0:
            raise ValueError("PsiSub needs sigma' < 0")
        if not self.sigma_p > -self.beta:
            raise ValueError("PsiSub needs sigma' > -beta")
        if self.sigma is not None and not self.sigma < self.sigma_p:
            raise ValueError("PsiSub needs sigma < sigma'")


# -- closed forms -------------------------------------------------------------------


def _bump_profile(r):
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    m = r < 1.0
    out[m] = np.exp(-1.0 / (1.0 - r[m] ** 2))
    return out


_MOLLIFIER_NORMS: dict[int, float] = {}


def _mollifier_norm(N: int) -> float:
    if N not in _MOLLIFIER_NORMS:
        val, _ = integrate.quad(lambda r: math.exp(-1.0 / (1.0 - r * r)) * r ** (N - 1), 0.0, 1.0,
                                epsabs=0.0, epsrel=1e-13, limit=200)
        _MOLLIFIER_NORMS[N] = 1.0 / (sphere_area(N) * val)
    return _MOLLIFIER_NORMS[N]


def mollifier(N: int) -> AnalyticField:
    """Standard smooth bump on the unit ball normalised to unit mass in ``R^N``."""
    kappa = _mollifier_norm(N)

    def f(r):
        return kappa * _bump_profile(r)

    def df(r):
        r = np.asarray(r, dtype=float)
        q = np.where(r < 1.0, 1.0 - r * r, 1.0)
        return np.where(r < 1.0, f(r) * (-2.0 * r / q**2), 0.0)

    def d2f(r):
        r = np.asarray(r, dtype=float)
        q = np.where(r < 1.0, 1.0 - r * r, 1.0)
        return np.where(r < 1.0, f(r) * (4 * r * r - (2 + 6 * r * r) * q) / q**4, 0.0)

    return AnalyticField(f, df, d2f, breakpoints=(1.0,), far_power=(0.0, 1.0), name="eta",
                         meta={"kappa": kappa})


def barrier_field(spec, N: int | None = None) -> AnalyticField:
    """The barrier as an :class:`AnalyticField` (``PsiSub`` needs ``N``)."""
    if isinstance(spec, SubVarphi):
        return AnalyticField.bump_power(spec.M, spec.beta)
    if isinstance(spec, FundamentalE):
        return AnalyticField.power(spec.sigma)
    if isinstance(spec, SuperPhi):
        c, sg, b, rc = spec.c, spec.sigma, spec.beta, spec.r_c

        def f(r):
            r = np.asarray(r, dtype=float)
            with np.errstate(divide="ignore"):
                return np.where(r < rc, c * r**sg, r ** (-b))

        def df(r):
            r = np.asarray(r, dtype=float)
            return np.where(r < rc, c * sg * r ** (sg - 1), -b * r ** (-b - 1))

        def d2f(r):
            r = np.asarray(r, dtype=float)
            return np.where(r < rc, c * sg * (sg - 1) * r ** (sg - 2), b * (b + 1) * r ** (-b - 2))

        return AnalyticField(f, df, d2f, singular_origin=True, breakpoints=(rc,), far_power=(1.0, b),
                             origin_power=(c, sg), name=f"Phi(beta={b:g},c={c:g})")
    if isinstance(spec, PsiSub):
        if N is None:
            raise ValueError("PsiSub needs the dimension N")
        M, b, C0, eps, sp = spec.M, spec.beta, spec.C0, spec.eps, spec.sigma_p
        eta = mollifier(N)

        def f(r):
            r = np.asarray(r, dtype=float)
            return (M + r * r) ** (-b / 2) + C0 * eta.f(r) - eps * r**sp

        def df(r):
            r = np.asarray(r, dtype=float)
            return -b * r * (M + r * r) ** (-b / 2 - 1) + C0 * eta.df(r) - eps * sp * r ** (sp - 1)

        def d2f(r):
            r = np.asarray(r, dtype=float)
            q = M + r * r
            return (b * (b + 2) * r * r * q ** (-b / 2 - 2) - b * q ** (-b / 2 - 1) + C0 * eta.d2f(r)
                    - eps * sp * (sp - 1) * r ** (sp - 2))

        singular = eps > 0
        return AnalyticField(f, df, d2f, singular_origin=singular, breakpoints=(1.0,),
                             far_power=(-eps, -sp) if singular else (1.0, b),
                             origin_power=(-eps, sp) if singular else None,
                             name=f"psi(M={M:g},C0={C0:g},eps={eps:g})")
    raise TypeError(f"unknown barrier {type(spec).__name__}")


def eval_barrier(spec, r, N: int | None = None):
    """Closed-form value at radius ``r`` (scalar or array)."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise ValueError("radius must be nonnegative")
    if isinstance(spec, (FundamentalE, SuperPhi)) or (isinstance(spec, PsiSub) and spec.eps > 0):
        if np.any(r_arr == 0):
            raise ValueError("barrier is singular at the origin")
    if isinstance(spec, PsiSub) and N is None:
        N = 1 if np.all(r_arr >= 1) else None  # the bump vanishes there, any N works
    out = barrier_field(spec, N)(r_arr)
    return float(out) if np.ndim(r) == 0 else out


# -- reports ----------------------------------------------------------------------------


@dataclass(frozen=True)
class PointRecord:
    radius: float
    lhs: float
    rhs: float
    margin: float
    err: float

    @property
    def violated(self) -> bool:
        return self.margin < -2.0 * self.err


@dataclass
class VerificationReport:
    name: str
    records: list[PointRecord]
    constants: dict = field(default_factory=dict)
    passed: bool = True
    notes: list[str] = field(default_factory=list)

    @property
    def min_margin(self) -> float:
        return min((r.margin for r in self.records), default=math.inf)

    @property
    def violations(self) -> int:
        return sum(r.violated for r in self.records)

    def summary(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "min_margin": self.min_margin,
                "violations": self.violations, "constants": self.constants, "notes": list(self.notes)}

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["radius", "lhs", "rhs", "margin", "err"])
        for rec in self.records:
            w.writerow([format(float(v), ".17g") for v in (rec.radius, rec.lhs, rec.rhs, rec.margin, rec.err)])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text

    def to_json(self, path=None) -> str:
        text = json.dumps({**self.summary(), "records": [asdict(r) for r in self.records]}, indent=2,
                          default=float)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


def _evaluate(u, bounds, sign, radii, cfg, workers):
    def one(r):
        try:
            return extremal(u, bounds, sign, float(r), cfg)
        except (ValueError, FloatingPointError, ArithmeticError) as exc:  # pragma: no cover - reported
            return exc

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(one, radii))
    return [one(r) for r in radii]


def _split_failures(radii, vals, notes):
    good = []
    for r, v in zip(radii, vals):
        if isinstance(v, Exception):
            notes.append(f"quadrature failed at r={r:g}: {v}")
        else:
            good.append((float(r), v))
    return good


# -- certificate checks ------------------------------------------------------------------


def _default_sub_radii(M):
    return M * np.concatenate([[0.0], np.geomspace(0.05, 40.0, 24)])


def verify_subsolution(bounds: EllipticityBounds, M: float, beta: float | None = None, sample_radii=None,
                       cfg: QuadratureConfig = DEFAULT_CFG, workers: int = 1) -> VerificationReport:
    """Lower bounds for ``M^- phi_{M,beta}`` relative to ``M^-2s phi``.

    The crossover ``lambda_emp`` is the smallest sampled ``r / M`` beyond
    which the ratio stays positive (at least 1).  ``c_emp`` is the smallest
    ratio over ``r >= lambda_emp M`` divided by ``gamma``; ``C_emp`` the
    largest negative part inside divided by ``Gamma``.
    """
    N, s = bounds.N, bounds.s
    beta = N + 2 * s if beta is None else beta
    spec = SubVarphi(M, beta)
    spec.check(N, s)
    radii = np.sort(np.asarray(_default_sub_radii(M) if sample_radii is None else sample_radii, dtype=float))
    u = barrier_field(spec)
    notes: list[str] = []
    pts = _split_failures(radii, _evaluate(u, bounds, "minus", radii, cfg, workers), notes)
    scale = M ** (-2 * s)
    r = np.array([p[0] for p in pts])
    phi = u(r)
    v = np.array([p[1].value for p in pts])
    err = np.array([p[1].error_estimate for p in pts])
    g = v / (scale * phi)
    nonpos = np.nonzero(g <= 0)[0]
    k = 0 if len(nonpos) == 0 else int(nonpos[-1]) + 1
    while k < len(r) and r[k] < M:
        k += 1
    if k >= len(r):
        notes.append("no positive far region among the sampled radii")
        lam_emp, c_emp = math.inf, 0.0
    else:
        lam_emp = float(r[k] / M)
        c_emp = float(np.min(g[k:])) / bounds.gamma
    inner = g[:k]
    C_emp = float(max(0.0, np.max(-inner))) / bounds.Gamma if len(inner) else 0.0
    records = []
    for i in range(len(r)):
        rhs = (c_emp * bounds.gamma if i >= k else -C_emp * bounds.Gamma) * scale * phi[i]
        records.append(PointRecord(float(r[i]), float(v[i]), float(rhs), float(v[i] - rhs), float(err[i])))
    passed = c_emp > 0 and math.isfinite(C_emp) and not notes
    return VerificationReport("subsolution", records,
                              {"c_emp": c_emp, "C_emp": C_emp, "lambda_emp": lam_emp, "M": M, "beta": beta},
                              passed, notes)


def verify_corollary(bounds: EllipticityBounds, M: float, beta: float | None = None, sample_radii=None,
                     cfg: QuadratureConfig = DEFAULT_CFG, workers: int = 1) -> VerificationReport:
    """Slack ``c_emp = min_r [2s (M^- phi + r phi'/2s) / phi + beta]``; success iff positive."""
    N, s = bounds.N, bounds.s
    beta = N + 2 * s if beta is None else beta
    spec = SubVarphi(M, beta)
    spec.check(N, s)
    radii = np.sort(np.asarray(_default_sub_radii(M) if sample_radii is None else sample_radii, dtype=float))
    u = barrier_field(spec)
    notes: list[str] = []
    pts = _split_failures(radii, _evaluate(u, bounds, "minus", radii, cfg, workers), notes)
    r = np.array([p[0] for p in pts])
    phi = u(r)
    lhs = np.array([p[1].value for p in pts]) + r / (2 * s) * u.deriv(r)
    err = np.array([p[1].error_estimate for p in pts])
    slack = 2 * s * lhs / phi + beta
    c_emp = float(np.min(slack))
    records = []
    for i in range(len(r)):
        rhs = -(beta - c_emp) / (2 * s) * phi[i]
        records.append(PointRecord(float(r[i]), float(lhs[i]), float(rhs), float(lhs[i] - rhs), float(err[i])))
    if not c_emp > 0:
        notes.append("M below empirical M0")
    return VerificationReport("corollary", records, {"c_emp": c_emp, "M": M, "beta": beta},
                              c_emp > 0 and len(pts) == len(radii), notes)


def _super_once(bounds, spec, radii, cfg, workers):
    N = bounds.N
    u = barrier_field(spec)
    rc = spec.r_c
    keep = np.abs(radii / rc - 1.0) > KINK_BAND
    radii = radii[keep & (radii > 0)]
    notes: list[str] = []
    pts = _split_failures(radii, _evaluate(u, bounds, "plus", radii, cfg, workers), notes)
    r = np.array([p[0] for p in pts])
    v = np.array([p[1].value for p in pts])
    err = np.array([p[1].error_estimate for p in pts])
    Phi = u(r)
    ctheta = spec.c ** spec.theta(N)
    outer = r > rc
    C_emp = float(np.max(v[outer] / (bounds.Gamma * ctheta * Phi[outer]))) if np.any(outer) else math.nan
    records = []
    for i in range(len(r)):
        bound = 0.0 if not outer[i] else C_emp * bounds.Gamma * ctheta * Phi[i]
        records.append(PointRecord(float(r[i]), float(bound), float(v[i]), float(bound - v[i]), float(err[i])))
    inner_recs = [rec for rec, o in zip(records, outer) if not o]
    return records, inner_recs, C_emp, notes


def verify_supersolution(bounds: EllipticityBounds, beta: float, c: float, sigma: float | None = None,
                         sample_radii=None, cfg: QuadratureConfig = DEFAULT_CFG,
                         workers: int = 1) -> VerificationReport:
    """``M^+ Phi <= 0`` inside ``r_c`` and ``M^+ Phi <= C Gamma c^theta Phi`` outside.

    Radii within 5% of ``r_c`` are skipped (the kink is only a viscosity
    point).  Sample radii are given in units of ``r_c`` so the rerun with
    ``c/2`` probes the same relative positions.
    """
    N, s = bounds.N, bounds.s
    if sigma is None:
        sigma = solve_sigma(bounds, "plus", cfg=cfg).sigma
    spec = SuperPhi(beta, c, sigma)
    spec.check(N, s)
    rel = np.asarray(np.concatenate([np.geomspace(0.02, 0.9, 10), np.geomspace(1.1, 30.0, 12)])
                     if sample_radii is None else sample_radii, dtype=float)
    records, inner, C_emp, notes = _super_once(bounds, spec, rel * spec.r_c, cfg, workers)
    half = SuperPhi(beta, c / 2, sigma)
    _, inner_h, C_half, notes_h = _super_once(bounds, half, rel * half.r_c, cfg, workers)
    ratio = C_half / C_emp if C_emp != 0 and math.isfinite(C_emp) else math.nan
    stable = math.isfinite(ratio) and 1 / 3 <= ratio <= 3
    inner_ok = all(not rec.violated for rec in inner + inner_h)
    inner_margin = float(min((rec.margin for rec in inner), default=math.inf))
    if not stable:
        notes.append(f"C_emp not stable under c -> c/2 (ratio {ratio:.3g})")
    passed = inner_ok and math.isfinite(C_emp) and stable and not notes_h and not notes
    return VerificationReport(
        "supersolution", records,
        {"C_emp": C_emp, "C_emp_half": C_half, "ratio": ratio, "theta": spec.theta(N), "r_c": spec.r_c,
         "sigma": sigma, "inner_margin": inner_margin, "beta": beta, "c": c},
        passed, notes + notes_h)


def _psi_records(bounds, spec, radii, cfg, workers):
    s = bounds.s
    u = barrier_field(spec, bounds.N)
    notes: list[str] = []
    pts = _split_failures(radii, _evaluate(u, bounds, "plus", radii, cfg, workers), notes)
    r = np.array([p[0] for p in pts])
    lhs = np.array([p[1].value for p in pts]) + r / (2 * s) * u.deriv(r)
    rhs = spec.sigma_p / (2 * s) * u(r)
    err = np.array([p[1].error_estimate for p in pts])
    recs = [PointRecord(float(r[i]), float(lhs[i]), float(rhs[i]), float(lhs[i] - rhs[i]), float(err[i]))
            for i in range(len(r))]
    return recs, notes


def verify_psi(bounds: EllipticityBounds, M: float = 4.0, eps: float = 1e-3, sigma_p: float | None = None,
               sample_radii=None, ladder=C0_LADDER, sigma: float | None = None,
               cfg: QuadratureConfig = DEFAULT_CFG, workers: int = 1) -> VerificationReport:
    """Climb the ``C0`` ladder until ``M^+ psi + r psi'/2s >= (sigma'/2s) psi`` holds at all radii.

    ``sigma'`` defaults to ``sigma + 0.05`` (capped below 0) with ``sigma``
    the plus exponent.
    """
    N, s = bounds.N, bounds.s
    beta = N + 2 * s
    if sigma is None:
        sigma = solve_sigma(bounds, "plus", cfg=cfg).sigma
    if sigma_p is None:
        sigma_p = float(min(sigma + 0.05, 0.5 * sigma))
    radii = np.asarray(np.geomspace(2.0, 60.0, 12) if sample_radii is None else sample_radii, dtype=float)
    if np.any(radii < 2):
        raise ValueError("psi is checked on |x| >= 2 only")
    worst = None
    for C0 in ladder:
        spec = PsiSub(M, beta, C0, eps, sigma_p, sigma)
        records, notes = _psi_records(bounds, spec, radii, cfg, workers)
        bad = sum(rec.violated for rec in records)
        if worst is None or min(r.margin for r in records) > min(r.margin for r in worst):
            worst = records
        if bad == 0 and not notes:
            return VerificationReport("psi", records, {"M": M, "C0": C0, "eps": eps, "sigma_p": sigma_p,
                                                       "sigma": sigma, "beta": beta}, True, [])
    return VerificationReport("psi", worst, {"M": M, "C0": None, "eps": eps, "sigma_p": sigma_p, "sigma": sigma,
                                             "beta": beta}, False, ["no certificate found"])
