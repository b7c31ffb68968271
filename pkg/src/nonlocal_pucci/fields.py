"""Radially symmetric functions on R^N.

Two carriers are provided.  :class:`RadialField` stores nodal values on a
graded radial grid and extends them beyond the last node with a tail model;
:class:`AnalyticField` wraps a closed-form profile and its derivative.
Both expose ``__call__`` (vectorised evaluation in the radius), ``deriv`` and
``second_derivative`` so the nonlocal evaluator can treat them alike.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

__all__ = [
    "RadialGrid",
    "ZeroOutside",
    "PowerLaw",
    "RadialField",
    "AnalyticField",
    "graded_nodes",
    "fit_tail",
    "radial_derivative",
    "fit_tail_window",
    "write_csv",
    "read_csv",
]


@dataclass(frozen=True)
class ZeroOutside:
    """Field vanishes beyond ``cutoff`` (``None`` means the last grid node)."""

    cutoff: float | None = None


@dataclass(frozen=True)
class PowerLaw:
    """Far field ``A r^-p``."""

    A: float
    p: float

    def __post_init__(self):
        if not (self.A >= 0):
            raise ValueError("PowerLaw amplitude must be nonnegative")
        if not (self.p > 0):
            raise ValueError("PowerLaw exponent must be positive")

    def __call__(self, r):
        return self.A * np.asarray(r, dtype=float) ** (-self.p)

    def deriv(self, r):
        return -self.p * self.A * np.asarray(r, dtype=float) ** (-self.p - 1.0)


def graded_nodes(
    R: float,
    h0: float = 0.05,
    ratio: float = 1.03,
    r0: float = 0.0,
    refine_left: bool = False,
    refine_right: bool = True,
    h_min: float | None = None,
    boundary_factor: float = 0.3,
) -> np.ndarray:
    """Nodes on ``[r0, R]`` with spacing ``max(h0, (ratio-1) r)``.

    Spacing is additionally capped by ``boundary_factor`` times the distance
    to a refined end, never going below ``h_min``.
    """
    if R <= r0:
        raise ValueError("need R > r0")
    if h_min is None:
        h_min = h0 / 40.0
    g = ratio - 1.0
    nodes = [r0]
    r = r0
    while True:
        h = max(h0, g * r)
        if refine_right:
            h = min(h, max(h_min, boundary_factor * (R - r)))
        if refine_left:
            h = min(h, max(h_min, boundary_factor * (r - r0) + h_min))
        if r + h >= R - 0.5 * h_min:
            break
        r += h
        nodes.append(r)
    nodes = np.asarray(nodes + [R])
    # avoid a sliver as the last cell
    if len(nodes) > 3 and nodes[-1] - nodes[-2] < 0.3 * (nodes[-2] - nodes[-3]):
        nodes = np.delete(nodes, -2)
    return nodes


class RadialGrid:
    """Strictly increasing nodes starting at the origin."""

    MIN_CELLS = 16

    def __init__(self, nodes: Sequence[float], N: int):
        nodes = np.asarray(nodes, dtype=float)
        if nodes.ndim != 1 or nodes[0] != 0.0:
            raise ValueError("radial grid must start exactly at 0")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("radial grid nodes must be strictly increasing")
        if len(nodes) - 1 < self.MIN_CELLS:
            raise ValueError(f"radial grid needs at least {self.MIN_CELLS} cells")
        if int(N) != N or N < 1:
            raise ValueError("N must be a positive integer")
        self.nodes = nodes
        self.N = int(N)

    @classmethod
    def graded(cls, R: float, N: int, h0: float = 0.05, ratio: float = 1.03, **kw) -> "RadialGrid":
        return cls(graded_nodes(R, h0=h0, ratio=ratio, **kw), N)

    @property
    def r_max(self) -> float:
        return float(self.nodes[-1])

    def __len__(self) -> int:
        return len(self.nodes)


class RadialField:
    """Nodal values plus a far-field model.

    Inside ``[0, r_max]`` values are interpolated with a monotone piecewise
    cubic (PCHIP) applied to the even extension, so the profile has zero
    slope at the origin and never overshoots the data.  ``smooth=True``
    switches to a C2 cubic spline, preferable for smooth sampled profiles
    where curvature at the origin matters.
    """

    def __init__(self, grid: RadialGrid, values: Sequence[float], tail=None, smooth: bool = False):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.nodes.shape:
            raise ValueError("values must align with grid nodes")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        self.grid = grid
        self.values = values
        self.tail = tail if tail is not None else ZeroOutside()
        if isinstance(self.tail, ZeroOutside) and self.tail.cutoff is not None:
            if not math.isclose(self.tail.cutoff, grid.r_max, rel_tol=1e-12):
                raise ValueError("ZeroOutside cutoff must coincide with the last node")
        x = grid.nodes
        self.smooth = bool(smooth)
        interp = CubicSpline if self.smooth else PchipInterpolator
        self._interp = interp(np.concatenate([-x[:0:-1], x]), np.concatenate([values[:0:-1], values]))
        self._dinterp = self._interp.derivative()
        self._check_tail_match()

    # -- properties used by the evaluator -------------------------------------
    @property
    def N(self) -> int:
        return self.grid.N

    @property
    def singular_origin(self) -> bool:
        return False

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (self.grid.r_max,) if isinstance(self.tail, ZeroOutside) else ()

    @property
    def support_radius(self) -> float | None:
        return self.grid.r_max if isinstance(self.tail, ZeroOutside) else None

    @property
    def far_power(self) -> tuple[float, float] | None:
        return (self.tail.A, self.tail.p) if isinstance(self.tail, PowerLaw) else None

    origin_power = None
    max_panel = None

    def local_spacing(self, r: float) -> float:
        x = self.grid.nodes
        k = int(np.clip(np.searchsorted(x, r), 1, len(x) - 1))
        h = x[k] - x[k - 1]
        if k + 1 < len(x):
            h = min(h, x[k + 1] - x[k])
        return float(h)

    def _check_tail_match(self):
        vM = self.values[-1]
        if isinstance(self.tail, PowerLaw):
            tM = float(self.tail(self.grid.r_max))
            scale = max(abs(vM), abs(tM))
            if scale > 0 and abs(vM - tM) > 0.1 * scale:
                warnings.warn(
                    f"tail mismatch at r_max: grid {vM:.3e} vs tail {tM:.3e}", RuntimeWarning, stacklevel=3
                )

    # -- evaluation ----------------------------------------------------------------
    def __call__(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        out = np.empty_like(r)
        inside = r <= self.grid.r_max
        out[inside] = self._interp(r[inside])
        if isinstance(self.tail, PowerLaw):
            out[~inside] = self.tail(r[~inside])
        else:
            out[~inside] = 0.0
        return out

    def eval(self, r):
        if np.any(np.asarray(r) < 0):
            raise ValueError("radius must be nonnegative")
        out = self(r)
        return float(out) if np.ndim(r) == 0 else out

    def deriv(self, r):
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        inside = r <= self.grid.r_max
        out[inside] = self._dinterp(r[inside])
        if isinstance(self.tail, PowerLaw):
            out[~inside] = self.tail.deriv(r[~inside])
        else:
            out[~inside] = 0.0
        return out

    def second_derivative(self, r: float, h: float | None = None) -> float:
        """Central difference of the interpolant (even extension near 0)."""
        if h is None:
            h = 0.25 * self.local_spacing(r)
        return float((self(r + h) - 2 * self(r) + self(abs(r - h))) / h**2)

    def with_values(self, values, tail=None) -> "RadialField":
        return RadialField(self.grid, values, self.tail if tail is None else tail, smooth=self.smooth)


@dataclass
class AnalyticField:
    """Closed-form radial profile ``f(r)`` with first derivative ``df``.

    ``singular_origin`` marks profiles that cannot be evaluated at 0
    (e.g. ``|x|^sigma``); ``breakpoints`` lists radii where the profile has
    a kink.  ``far_power = (A, p)`` declares ``f ~ A r^-p`` at infinity and
    is used to close the outer nonlocal integral (``p <= 0`` is allowed for
    bounded or slowly growing profiles); ``origin_power`` does the same at
    the origin for singular profiles.  ``max_panel`` is an oscillation hint.
    """

    f: Callable
    df: Callable
    d2f: Callable | None = None
    singular_origin: bool = False
    breakpoints: tuple[float, ...] = ()
    far_power: tuple[float, float] | None = None
    support_radius: float | None = None
    name: str = ""
    origin_power: tuple[float, float] | None = None
    max_panel: float | None = None
    meta: dict = field(default_factory=dict)

    def __call__(self, r):
        return np.asarray(self.f(np.abs(np.asarray(r, dtype=float))), dtype=float)

    def eval(self, r):
        r_arr = np.asarray(r, dtype=float)
        if np.any(r_arr < 0):
            raise ValueError("radius must be nonnegative")
        if self.singular_origin and np.any(r_arr == 0):
            raise ValueError(f"{self.name or 'field'} is singular at the origin")
        out = self(r_arr)
        return float(out) if np.ndim(r) == 0 else out

    def deriv(self, r):
        r_arr = np.asarray(r, dtype=float)
        if self.singular_origin and np.any(r_arr == 0):
            raise ValueError(f"{self.name or 'field'} is singular at the origin")
        return np.asarray(self.df(r_arr), dtype=float)

    def second_derivative(self, r: float, h: float | None = None) -> float:
        if self.d2f is not None:
            return float(self.d2f(np.asarray(r, dtype=float)))
        if h is None:
            h = 1e-4 * max(r, 1e-2)
        if r < h:
            return float((self.df(np.asarray(h)) - 0.0) / h) if not self.singular_origin else float("nan")
        return float((self.df(np.asarray(r + h)) - self.df(np.asarray(r - h))) / (2 * h))

    def local_spacing(self, r: float) -> float:
        return float("inf")

    # -- common profiles ---------------------------------------------------------
    @classmethod
    def constant(cls, c: float) -> "AnalyticField":
        return cls(
            lambda r: np.full(np.shape(r), float(c)),
            lambda r: np.zeros(np.shape(r)),
            lambda r: np.zeros(np.shape(r)),
            far_power=(float(c), 0.0),
            name=f"const({c:g})",
        )

    @classmethod
    def power(cls, sigma: float) -> "AnalyticField":
        """``|x|^sigma``; a fundamental-solution candidate when ``sigma < 0``."""
        return cls(
            lambda r: np.asarray(r, dtype=float) ** sigma,
            lambda r: sigma * np.asarray(r, dtype=float) ** (sigma - 1.0),
            lambda r: sigma * (sigma - 1.0) * np.asarray(r, dtype=float) ** (sigma - 2.0),
            singular_origin=sigma < 0,
            far_power=(1.0, -sigma),
            origin_power=(1.0, sigma) if sigma < 0 else None,
            name=f"|x|^{sigma:g}",
        )

    @classmethod
    def bump_power(cls, M: float, beta: float) -> "AnalyticField":
        """``(M^2 + |x|^2)^(-beta/2)``."""

        def f(r):
            return (M * M + np.asarray(r, dtype=float) ** 2) ** (-beta / 2.0)

        def df(r):
            r = np.asarray(r, dtype=float)
            return -beta * r * (M * M + r * r) ** (-beta / 2.0 - 1.0)

        def d2f(r):
            r = np.asarray(r, dtype=float)
            q = M * M + r * r
            return beta * (beta + 2.0) * r * r * q ** (-beta / 2.0 - 2.0) - beta * q ** (-beta / 2.0 - 1.0)

        return cls(f, df, d2f, far_power=(1.0, beta), name=f"phi_{M:g},{beta:g}")

    @classmethod
    def gaussian(cls, width: float = 1.0, amp: float = 1.0) -> "AnalyticField":
        w2 = width * width
        return cls(
            lambda r: amp * np.exp(-np.asarray(r, dtype=float) ** 2 / w2),
            lambda r: -2 * amp * np.asarray(r) / w2 * np.exp(-np.asarray(r, dtype=float) ** 2 / w2),
            lambda r: amp * (4 * np.asarray(r) ** 2 / w2**2 - 2 / w2) * np.exp(-np.asarray(r, dtype=float) ** 2 / w2),
            name=f"gauss({width:g})",
        )

    @classmethod
    def cosine(cls, k: float = 1.0) -> "AnalyticField":
        return cls(
            lambda r: np.cos(k * np.asarray(r, dtype=float)),
            lambda r: -k * np.sin(k * np.asarray(r, dtype=float)),
            lambda r: -k * k * np.cos(k * np.asarray(r, dtype=float)),
            name=f"cos({k:g}r)",
            max_panel=1.0 / k,
        )

    def scaled(self, t: float) -> "AnalyticField":
        """``t * f``."""
        f, df, d2f = self.f, self.df, self.d2f
        return replace(
            self,
            f=lambda r: t * f(r),
            df=lambda r: t * df(r),
            d2f=None if d2f is None else (lambda r: t * d2f(r)),
            far_power=None if self.far_power is None else (t * self.far_power[0], self.far_power[1]),
            origin_power=None if self.origin_power is None else (t * self.origin_power[0], self.origin_power[1]),
            name=f"{t:g}*{self.name}",
        )

    def dilated(self, l: float) -> "AnalyticField":
        """``x -> f(l x)``."""
        f, df, d2f = self.f, self.df, self.d2f
        fp, op = self.far_power, self.origin_power
        return replace(
            self,
            f=lambda r: f(l * np.asarray(r, dtype=float)),
            df=lambda r: l * df(l * np.asarray(r, dtype=float)),
            d2f=None if d2f is None else (lambda r: l * l * d2f(l * np.asarray(r, dtype=float))),
            breakpoints=tuple(b / l for b in self.breakpoints),
            far_power=None if fp is None else (fp[0] * l ** (-fp[1]), fp[1]),
            origin_power=None if op is None else (op[0] * l ** op[1], op[1]),
            support_radius=None if self.support_radius is None else self.support_radius / l,
            max_panel=None if self.max_panel is None else self.max_panel / l,
            name=f"{self.name}(x*{l:g})",
        )


# -- tail fitting --------------------------------------------------------------------


def _loglog_fit(r: np.ndarray, v: np.ndarray) -> PowerLaw:
    if len(r) < 5:
        raise ValueError("tail fit window needs at least 5 points")
    if np.any(v <= 0):
        raise ValueError("tail fit needs strictly positive values")
    slope, intercept = np.polyfit(np.log(r), np.log(v), 1)
    p = -slope
    # p == 0 is allowed as a diagnostic (constant data); PowerLaw insists on p > 0
    fit = object.__new__(PowerLaw)
    object.__setattr__(fit, "A", float(math.exp(intercept)))
    object.__setattr__(fit, "p", float(p))
    return fit


def radial_derivative(field, r):
    """``d/dr`` of a radial field at ``r`` (scalar in, scalar out)."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise ValueError("radius must be nonnegative")
    out = np.asarray(field.deriv(np.atleast_1d(r_arr)), dtype=float)
    return float(out[0]) if np.ndim(r) == 0 else out.reshape(r_arr.shape)


def fit_tail(field: RadialField, window: tuple[int, int]) -> PowerLaw:
    """Least-squares power law over the nodes ``window[0]:window[1]``."""
    i0, i1 = window
    r = field.grid.nodes[i0:i1]
    if len(r) and r[0] <= 0:
        raise ValueError("tail fit window must exclude the origin")
    return _loglog_fit(r, field.values[i0:i1])


def fit_tail_window(field: RadialField, r_lo: float, r_hi: float) -> PowerLaw:
    """Power law fitted to the nodes with ``r_lo <= r <= r_hi``."""
    x = field.grid.nodes
    i0 = int(np.searchsorted(x, r_lo, side="left"))
    i1 = int(np.searchsorted(x, r_hi, side="right"))
    return fit_tail(field, (max(i0, 1), i1))


# -- persistence -----------------------------------------------------------------------


def write_csv(field: RadialField, path, extra: dict | None = None) -> Path:
    """``r,value`` CSV (17 significant digits) plus a JSON sidecar."""
    path = Path(path)
    lines = ["r,value"]
    lines += [f"{r:.17g},{v:.17g}" for r, v in zip(field.grid.nodes, field.values)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    if isinstance(field.tail, PowerLaw):
        tail = {"A": field.tail.A, "p": field.tail.p}
    else:
        tail = {"cutoff": field.grid.r_max}
    side = {"N": field.N, "tail": tail}
    if extra:
        side.update(extra)
    path.with_suffix(".json").write_text(json.dumps(side, indent=2, sort_keys=True), encoding="utf-8")
    return path


def read_csv(path) -> RadialField:
    path = Path(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    side = json.loads(path.with_suffix(".json").read_text(encoding="utf-8"))
    t = side["tail"]
    tail = PowerLaw(t["A"], t["p"]) if "p" in t else ZeroOutside()
    return RadialField(RadialGrid(data[:, 0], side["N"]), data[:, 1], tail)
