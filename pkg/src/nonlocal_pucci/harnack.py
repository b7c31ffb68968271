"""Randomised Harnack experiments and super-level-set decay fits.

Each sample is a Dirichlet problem on ``B_2``

    I(u) + m(x)|Du| + c(x) u = f,   u = g on B_3 minus B_2,  u = 0 beyond,

with nonnegative exterior data ``g`` and ``f <= 0``, so the solution is a
nonnegative supersolution.  The experiment records ``sup_{B_1/2} u`` over
``inf_{B_1} u + |f|_inf``.
"""
from __future__ import annotations

import copy
import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize

from .discrete import DEFAULT_DISCRETE_CFG
from .eigen import Ball, Discretization, _operator, solve_dirichlet
from .kernels import EllipticityBounds, Extremal, sphere_area
from .operators import OperatorSpec
from .quadrature import QuadratureConfig

__all__ = [
    "ProblemSample",
    "HarnackRecord",
    "HarnackReport",
    "generate_family",
    "harnack_ratio",
    "solve_sample",
    "run_harnack_experiment",
    "LevelSetFit",
    "level_set_measure",
    "level_set_fit",
]

DOMAIN_RADIUS = 2.0
DATA_RADIUS = 3.0
INNER, OUTER = 0.5, 1.0


@dataclass(frozen=True)
class ProblemSample:
    """One randomised instance; every bound holds by construction."""

    seed: int
    index: int
    centers: tuple
    widths: tuple
    amplitudes: tuple
    c_omega: float
    c_phase: float
    f_amp: float
    f_width: float
    M1: float
    M2: float
    constant_data: float | None = None

    def exterior(self, r):
        r = np.asarray(r, dtype=float)
        if self.constant_data is not None:
            return np.where(r <= DATA_RADIUS, self.constant_data, 0.0)
        out = np.zeros_like(r)
        for c, w, a in zip(self.centers, self.widths, self.amplitudes):
            out += a * np.exp(-(((r - c) / w) ** 2))
        return np.where(r <= DATA_RADIUS, out, 0.0)

    def c(self, r):
        return self.M2 * np.cos(self.c_omega * np.asarray(r, dtype=float) + self.c_phase)

    def m(self, r):
        return self.M1 * np.sin(3.0 * np.asarray(r, dtype=float))

    def f(self, r):
        return -self.f_amp * np.exp(-((np.asarray(r, dtype=float) / self.f_width) ** 2))

    @property
    def f_norm(self) -> float:
        return float(self.f_amp)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def constant(cls, value: float = 1.0, M1: float = 0.0, M2: float = 0.0) -> "ProblemSample":
        return cls(0, 0, (), (), (), 0.0, math.pi / 2, 0.0, 1.0, M1, M2, constant_data=float(value))


def generate_family(seed: int, count: int, M1: float = 1.0, M2: float = 1.0, bounds: EllipticityBounds | None = None,
                    zero_amplitudes: bool = False) -> list[ProblemSample]:
    """Deterministic family of ``count`` samples drawn from ``seed``.

    ``bounds`` is accepted for interface symmetry; the samples themselves
    do not depend on the kernel.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if M1 < 0 or M2 < 0:
        raise ValueError("M1 and M2 must be nonnegative")
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        k = int(rng.integers(1, 6))
        centers = tuple(float(v) for v in rng.uniform(1.0, 3.0, k))
        widths = tuple(float(v) for v in rng.uniform(0.1, 1.0, k))
        amps = rng.uniform(0.0, 1.0, k)
        c_omega, c_phase = float(rng.uniform(0.0, 4.0)), float(rng.uniform(0.0, 2 * math.pi))
        f_amp, f_width = float(rng.uniform(0.0, 1.0)), float(rng.uniform(0.3, 2.0))
        if zero_amplitudes:
            amps, f_amp = np.zeros(k), 0.0
        out.append(ProblemSample(int(seed), i, centers, widths, tuple(float(a) for a in amps), c_omega, c_phase,
                                 f_amp, f_width, float(M1), float(M2)))
    return out


def harnack_ratio(u, f_norm: float = 0.0, inner: float = INNER, outer: float = OUTER) -> float:
    """``max_{nodes in B_inner} u / (min_{nodes in B_outer} u + f_norm)`` (``0/0 := 0``)."""
    x = u.grid.nodes
    v = u.values
    vi, vo = v[x <= inner], v[x <= outer]
    if np.any(vo < 0) or np.any(vi < 0):
        raise ValueError("harnack_ratio needs a nonnegative field")
    if f_norm < 0:
        raise ValueError("f_norm must be nonnegative")
    num, den = float(np.max(vi)), float(np.min(vo)) + float(f_norm)
    if den == 0.0:
        if num == 0.0:
            return 0.0
        return math.inf
    return num / den


# -- experiment ------------------------------------------------------------------------


@dataclass(frozen=True)
class HarnackRecord:
    sample_id: int
    sup: float
    inf: float
    ratio: float
    min_value: float


@dataclass
class HarnackReport:
    records: list[HarnackRecord]
    failures: list[tuple[int, str]] = field(default_factory=list)
    params: dict = field(default_factory=dict)

    @property
    def ratios(self) -> np.ndarray:
        return np.array([r.ratio for r in self.records])

    @property
    def max_ratio(self) -> float:
        return float(np.max(self.ratios))

    @property
    def median_ratio(self) -> float:
        return float(np.median(self.ratios))

    def max_ratio_at(self, n: int) -> float:
        return float(max(r.ratio for r in self.records if r.sample_id < n))

    @property
    def stability(self) -> float:
        """Max ratio over the first half of the samples divided by the max over all."""
        n = len(self.records) + len(self.failures)
        return self.max_ratio_at((n + 1) // 2) / self.max_ratio

    @property
    def all_nonnegative(self) -> bool:
        return all(r.min_value >= 0 for r in self.records)

    def summary(self) -> dict:
        return {"count": len(self.records), "failures": len(self.failures), "max_ratio": self.max_ratio,
                "median_ratio": self.median_ratio, "stability": self.stability,
                "all_nonnegative": self.all_nonnegative, "all_finite": bool(np.all(np.isfinite(self.ratios))),
                **self.params}

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sample_id", "sup", "inf", "ratio"])
        for r in self.records:
            w.writerow([r.sample_id] + [format(float(v), ".17g") for v in (r.sup, r.inf, r.ratio)])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text

    def to_json(self, path=None) -> str:
        text = json.dumps(self.summary(), indent=2)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


def _base(bounds, sign, cfg, h0, with_gradient, with_c):
    s = bounds.s
    if not 0.5 < s < 1:
        raise ValueError("the Harnack experiment needs s in (1/2, 1)")
    disc = Discretization.for_domain(Ball(DOMAIN_RADIUS), h0=h0, exterior=lambda r: np.zeros_like(r),
                                     exterior_radius=DATA_RADIUS)
    spec = OperatorSpec(Extremal(bounds), sign, gradient=(lambda r: np.ones_like(r)) if with_gradient else None,
                        c=(lambda r: np.ones_like(r)) if with_c else 0.0)
    return disc, _operator(spec, disc, cfg)


def solve_sample(sample: ProblemSample, bounds: EllipticityBounds, sign: str = "plus",
                 cfg: QuadratureConfig = DEFAULT_DISCRETE_CFG, h0: float = 0.05, base=None):
    """Solve one sample; ``base`` reuses a prebuilt ``(disc, op)`` pair."""
    with_grad, with_c = sample.M1 > 0, sample.M2 > 0
    disc, op = base if base is not None else _base(bounds, sign, cfg, h0, with_grad, with_c)
    xc = disc.nodes[disc.free]
    op = copy.copy(op)
    op.gradient = sample.m(xc) if with_grad else None
    op.c = sample.c(xc) if with_c else None
    ext = disc.nodes >= DOMAIN_RADIUS
    disc = copy.copy(disc)
    disc.fixed_values = np.where(ext, sample.exterior(disc.nodes), 0.0)
    spec = OperatorSpec(Extremal(bounds), sign, gradient=sample.m if with_grad else None,
                        c=sample.c if with_c else 0.0)
    shift = sample.M2 if with_c else None
    return solve_dirichlet(spec, lambda r: -sample.f(r), Ball(DOMAIN_RADIUS), cfg, shift=shift, disc=disc, op=op)


def run_harnack_experiment(bounds: EllipticityBounds, M1: float = 1.0, M2: float = 1.0, count: int = 100,
                           seed: int = 0, cfg: QuadratureConfig = DEFAULT_DISCRETE_CFG, sign: str = "plus",
                           h0: float = 0.05, workers: int = 1, samples=None) -> HarnackReport:
    """Solve ``count`` random samples and collect Harnack ratios.

    Solver failures are dropped from the summary when they affect fewer
    than 10% of the samples; otherwise the experiment fails.  A negative
    nodal value below ``-1e-9`` times the data scale is a maximum-principle
    violation and also fails the experiment.
    """
    if samples is None:
        samples = generate_family(seed, count, M1, M2, bounds)
    base = _base(bounds, sign, cfg, h0, M1 > 0, M2 > 0)

    def one(sample):
        try:
            u = solve_sample(sample, bounds, sign, cfg, h0, base)
        except (RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
            return sample.index, exc
        return sample.index, u

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(one, samples))
    else:
        results = [one(smp) for smp in samples]
    records, failures = [], []
    for smp, (idx, u) in zip(samples, results):
        if isinstance(u, Exception):
            failures.append((idx, str(u)))
            continue
        v = u.values[u.grid.nodes <= DOMAIN_RADIUS]
        scale = max(1.0, float(np.max(np.abs(u.values))))
        vmin = float(np.min(v))
        if vmin < -1e-9 * scale:
            raise RuntimeError(f"sample {idx}: solution is negative ({vmin:.3e}); maximum principle violated")
        clipped = u.with_values(np.maximum(u.values, 0.0))
        x = u.grid.nodes
        records.append(HarnackRecord(idx, float(np.max(clipped.values[x <= INNER])),
                                     float(np.min(clipped.values[x <= OUTER])),
                                     harnack_ratio(clipped, smp.f_norm), max(vmin, 0.0)))
    if failures and len(failures) >= 0.1 * len(samples):
        raise RuntimeError(f"{len(failures)} of {len(samples)} samples failed: {failures[0][1]}")
    return HarnackReport(records, failures, {"M1": M1, "M2": M2, "seed": seed, "sign": sign,
                                             "gamma": bounds.gamma, "Gamma": bounds.Gamma, "s": bounds.s,
                                             "N": bounds.N})


# -- level sets ----------------------------------------------------------------------------


def _ball_volume(N: int, r):
    return sphere_area(N) / N * np.asarray(r, dtype=float) ** N


def level_set_measure(u, t: float, r: float, N: int, samples: int = 2001) -> float:
    """``|{u > t} cap B_r|`` for a radial profile, with crossings located by root finding."""
    lo = 1e-9 * r if getattr(u, "singular_origin", False) else 0.0
    grid = np.linspace(lo, r, samples)
    if hasattr(u, "grid"):
        nodes = u.grid.nodes
        grid = np.union1d(grid, nodes[(nodes > lo) & (nodes < r)])
    g = np.asarray(u(grid), dtype=float) - t
    total = 0.0
    start = lo if g[0] > 0 else None
    for i in range(len(grid) - 1):
        a, b = grid[i], grid[i + 1]
        if (g[i] > 0) != (g[i + 1] > 0):
            if g[i + 1] == 0 or g[i] == 0:
                z = b if g[i + 1] == 0 else a
            else:
                z = optimize.brentq(lambda q: float(u(np.array([q]))[0]) - t, a, b, xtol=1e-14 * r)
            if g[i] > 0:
                total += float(_ball_volume(N, z) - _ball_volume(N, start))
                start = None
            else:
                start = z
    if start is not None:
        total += float(_ball_volume(N, r) - _ball_volume(N, start))
    return total


@dataclass(frozen=True)
class LevelSetFit:
    eps: float
    per_radius: dict
    r2: float
    n_points: int


def level_set_fit(u, u0: float, C0: float, r_list, t_list, N: int | None = None, s: float | None = None) -> LevelSetFit:
    """Fit ``eps`` in ``|{u > t} cap B_r| <~ r^N (u0 + C0 r^2s)^eps t^-eps``.

    For each ``r`` the points with a proper, nonempty level set form the
    large-``t`` branch; ``eps`` is the slope of ``log(measure / r^N)`` against
    ``-log(t / (u0 + C0 r^2s))`` over the pooled branches.
    """
    N = u.N if N is None else N
    if C0 != 0 and s is None:
        raise ValueError("s is needed when C0 != 0")
    xs, ys, per = [], [], {}
    for r in r_list:
        scale = u0 + (C0 * r ** (2 * s) if C0 else 0.0)
        if not scale > 0:
            raise ValueError("u0 + C0 r^2s must be positive")
        full = float(_ball_volume(N, r))
        px, py = [], []
        for t in t_list:
            m = level_set_measure(u, t, r, N)
            if 0 < m < full * (1 - 1e-12):
                px.append(-math.log(t / scale))
                py.append(math.log(m / r**N))
        if len(px) >= 2:
            per[float(r)] = float(np.polyfit(px, py, 1)[0])
        xs += px
        ys += py
    if len(xs) < 2:
        raise ValueError("insufficient range: level sets are empty or full across the lattice")
    coef = np.polyfit(xs, ys, 1)
    pred = np.polyval(coef, xs)
    ss = float(np.sum((np.asarray(ys) - np.mean(ys)) ** 2))
    r2 = 1.0 - float(np.sum((np.asarray(ys) - pred) ** 2)) / ss if ss > 0 else 1.0
    return LevelSetFit(float(coef[0]), per, r2, len(xs))
