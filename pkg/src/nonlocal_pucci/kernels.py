"""Admissible kernels of order 2s and their ellipticity bounds.

A kernel ``K`` belongs to the class used throughout the package when it is
symmetric and pinched between ``gamma |y|^-(N+2s)`` and
``Gamma |y|^-(N+2s)``.  Four concrete descriptions are supported:

``Extremal``
    the whole class, used by the Pucci operators.
``FractionalLaplacian``
    the single kernel ``C_{N,s} |y|^-(N+2s)`` whose operator has Fourier
    symbol ``-|xi|^(2s)``.
``Explicit``
    ``a(y) |y|^-(N+2s)`` with a user multiplier ``a``.
``IsaacsFamily``
    a finite inf-sup family of explicit kernels.

Multipliers of explicit kernels are callables ``a(rho, cos)`` of the radius
``rho = |y|`` and of ``cos = y_1 / |y|``, the cosine with the first axis.
Radial fields are always evaluated on that axis, so this is exactly the
information the radial reduction can use.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import gamma as euler_gamma

__all__ = [
    "EllipticityBounds",
    "Extremal",
    "FractionalLaplacian",
    "Explicit",
    "IsaacsFamily",
    "ValidationResult",
    "frac_laplacian_constant",
    "sphere_area",
    "kernel_value",
    "validate",
    "kernel_to_json",
    "kernel_from_json",
]


def sphere_area(N: int) -> float:
    """Surface measure of the unit sphere ``S^{N-1}`` (2 for ``N = 1``)."""
    return 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)


def frac_laplacian_constant(N: int, s: float) -> float:
    """Normalisation making ``C |y|^-(N+2s)`` the kernel of ``-(-Delta)^s``."""
    return float(
        4.0**s * euler_gamma(N / 2.0 + s) / (math.pi ** (N / 2.0) * abs(euler_gamma(-s)))
    )


@dataclass(frozen=True)
class EllipticityBounds:
    """The quadruple ``(gamma, Gamma, s, N)``.

    Construction never raises so that :func:`validate` can report bad
    bounds as data; operations call :meth:`check` instead.
    """

    gamma: float
    Gamma: float
    s: float
    N: int

    def violations(self) -> list[str]:
        out = []
        if not (self.gamma > 0):
            out.append("gamma must be positive")
        if not (self.Gamma > 0):
            out.append("Gamma must be positive")
        if self.gamma > self.Gamma:
            out.append("gamma > Gamma")
        if not math.isfinite(self.Gamma):
            out.append("Gamma must be finite")
        if not (0.0 < self.s < 1.0):
            out.append("s must lie in (0, 1)")
        if int(self.N) != self.N or self.N < 1:
            out.append("N must be a positive integer")
        return out

    def check(self, gradient: bool = False) -> "EllipticityBounds":
        bad = self.violations()
        if bad:
            raise ValueError("invalid ellipticity bounds: " + "; ".join(bad))
        if gradient and self.s <= 0.5:
            raise ValueError(f"gradient terms need s in (1/2, 1), got s={self.s}")
        return self


@dataclass(frozen=True)
class Extremal:
    bounds: EllipticityBounds

    @property
    def s(self) -> float:
        return self.bounds.s

    @property
    def N(self) -> int:
        return self.bounds.N


@dataclass(frozen=True)
class FractionalLaplacian:
    N: int
    s: float

    @property
    def constant(self) -> float:
        return frac_laplacian_constant(self.N, self.s)

    @property
    def bounds(self) -> EllipticityBounds:
        c = self.constant
        return EllipticityBounds(c, c, self.s, self.N)

    def multiplier(self, rho, cos):
        return np.full(np.broadcast(np.asarray(rho), np.asarray(cos)).shape, self.constant)


def _constant_multiplier(value: float) -> Callable:
    def a(rho, cos):
        return np.full(np.broadcast(np.asarray(rho), np.asarray(cos)).shape, float(value))

    a.constant_value = float(value)  # type: ignore[attr-defined]
    return a


@dataclass(frozen=True)
class Explicit:
    bounds: EllipticityBounds
    multiplier: Callable = field(compare=False)
    name: str = ""

    @classmethod
    def constant(cls, bounds: EllipticityBounds, value: float, name: str = "") -> "Explicit":
        return cls(bounds, _constant_multiplier(value), name or f"const({value:g})")

    @property
    def s(self) -> float:
        return self.bounds.s

    @property
    def N(self) -> int:
        return self.bounds.N

    @property
    def constant_value(self) -> float | None:
        return getattr(self.multiplier, "constant_value", None)


@dataclass(frozen=True)
class IsaacsFamily:
    """``inf`` over rows of ``sup`` over the members of each row."""

    rows: tuple[tuple[Explicit, ...], ...]

    def __init__(self, rows: Sequence[Sequence[Explicit]]):
        object.__setattr__(self, "rows", tuple(tuple(r) for r in rows))

    @property
    def members(self) -> list[Explicit]:
        return [k for row in self.rows for k in row]

    @property
    def s(self) -> float:
        return self.members[0].s

    @property
    def N(self) -> int:
        return self.members[0].N

    @property
    def bounds(self) -> EllipticityBounds:
        ms = self.members
        return EllipticityBounds(
            min(k.bounds.gamma for k in ms), max(k.bounds.Gamma for k in ms), ms[0].s, ms[0].N
        )


KernelSpec = Extremal | FractionalLaplacian | Explicit | IsaacsFamily


@dataclass
class ValidationResult:
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def _probe_lattice(N: int, n_dir: int = 64, n_rad: int = 32):
    """Deterministic direction cosines and radii used for membership checks."""
    if N == 1:
        cos = np.array([1.0, -1.0])
    else:
        # golden-angle spiral on the sphere; only the first coordinate matters
        k = np.arange(n_dir)
        cos = 1.0 - 2.0 * (k + 0.5) / n_dir
        cos = np.concatenate([cos, [1.0, -1.0]])
    rho = np.geomspace(1e-3, 1e3, n_rad)
    return np.meshgrid(rho, cos, indexing="ij")


def kernel_value(spec, y) -> float:
    """Value of a single kernel at the nonzero point ``y``."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    rho = float(np.linalg.norm(y))
    if rho == 0.0:
        raise ValueError("kernel is singular at y = 0")
    if isinstance(spec, FractionalLaplacian):
        return spec.constant * rho ** (-(spec.N + 2 * spec.s))
    if isinstance(spec, Explicit):
        cos = y[0] / rho
        a = float(np.asarray(spec.multiplier(rho, cos)))
        return a * rho ** (-(spec.N + 2 * spec.s))
    raise TypeError(f"{type(spec).__name__} does not describe a single kernel")


def _explicit_violations(k: Explicit, tag: str = "") -> list[str]:
    out = [tag + v for v in k.bounds.violations()]
    rho, cos = _probe_lattice(k.N)
    a = np.asarray(k.multiplier(rho, cos), dtype=float)
    a_mirror = np.asarray(k.multiplier(rho, -cos), dtype=float)
    tol = 1e-12 * max(1.0, k.bounds.Gamma)
    if not np.all(np.isfinite(a)):
        out.append(tag + "multiplier not finite")
    elif np.any(a < k.bounds.gamma - tol) or np.any(a > k.bounds.Gamma + tol):
        out.append(tag + "bound exceeded")
    if np.any(a != a_mirror):
        out.append(tag + "asymmetry")
    return out


def validate(spec) -> ValidationResult:
    """Check the invariants of a kernel description; violations are returned."""
    if isinstance(spec, Extremal):
        return ValidationResult(spec.bounds.violations())
    if isinstance(spec, FractionalLaplacian):
        return ValidationResult(EllipticityBounds(1.0, 1.0, spec.s, spec.N).violations())
    if isinstance(spec, Explicit):
        return ValidationResult(_explicit_violations(spec))
    if isinstance(spec, IsaacsFamily):
        out = []
        if not spec.rows or any(len(r) == 0 for r in spec.rows):
            return ValidationResult(["empty Isaacs family or row"])
        sN = {(k.s, k.N) for k in spec.members}
        if len(sN) > 1:
            out.append("members disagree on (s, N)")
        for i, row in enumerate(spec.rows):
            for j, k in enumerate(row):
                out += _explicit_violations(k, f"[{i}][{j}] ")
        return ValidationResult(out)
    return ValidationResult([f"unknown kernel description {type(spec).__name__}"])


def kernel_to_json(spec) -> dict:
    if isinstance(spec, Extremal):
        b = spec.bounds
        return {"variant": "extremal", "gamma": b.gamma, "Gamma": b.Gamma, "s": b.s, "N": b.N}
    if isinstance(spec, FractionalLaplacian):
        c = spec.constant
        return {"variant": "frac_laplacian", "gamma": c, "Gamma": c, "s": spec.s, "N": spec.N}
    if isinstance(spec, Explicit):
        if spec.constant_value is None:
            raise ValueError("only constant explicit multipliers serialise to JSON")
        b = spec.bounds
        return {
            "variant": "explicit", "gamma": b.gamma, "Gamma": b.Gamma, "s": b.s, "N": b.N,
            "value": spec.constant_value,
        }
    if isinstance(spec, IsaacsFamily):
        b = spec.bounds
        return {
            "variant": "isaacs", "gamma": b.gamma, "Gamma": b.Gamma, "s": b.s, "N": b.N,
            "rows": [[kernel_to_json(k) for k in row] for row in spec.rows],
        }
    raise TypeError(type(spec).__name__)


def kernel_from_json(obj: dict):
    variant = obj.get("variant")
    if variant == "frac_laplacian":
        return FractionalLaplacian(int(obj["N"]), float(obj["s"]))
    bounds = EllipticityBounds(float(obj["gamma"]), float(obj["Gamma"]), float(obj["s"]), int(obj["N"]))
    if variant == "extremal":
        return Extremal(bounds)
    if variant == "explicit":
        return Explicit.constant(bounds, float(obj["value"]))
    if variant == "isaacs":
        return IsaacsFamily([[kernel_from_json(k) for k in row] for row in obj["rows"]])
    raise ValueError(f"unknown kernel variant {variant!r}")
