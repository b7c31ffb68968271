"""Numerics for fully nonlinear nonlocal operators of Pucci type.

Radial fields, extremal and Isaacs operators, fundamental exponents,
eigenpairs by domain exhaustion, barrier certificates, Harnack experiments
and the self-similar heat profile.
"""
__version__ = "0.1.0"

from .kernels import (  # noqa: E402
    EllipticityBounds,
    Explicit,
    Extremal,
    FractionalLaplacian,
    IsaacsFamily,
    frac_laplacian_constant,
    validate,
)
from .fields import AnalyticField, PowerLaw, RadialField, RadialGrid, ZeroOutside  # noqa: E402
from .operators import OperatorSpec, OperatorValue, extremal, full_operator, isaacs, linear_op  # noqa: E402
from .exponents import FundamentalExponent, solve_sigma  # noqa: E402
from .eigen import (  # noqa: E402
    Annulus,
    Ball,
    EigenPair,
    PuncturedBall,
    WholeSpace,
    principal_eigenpair,
    punctured_eigenvalue,
    simplicity_probe,
    solve_dirichlet,
    whole_space_eigenpair,
)
from .heat import heat_profile, self_similar_value  # noqa: E402

__all__ = [
    "__version__",
    "EllipticityBounds", "Explicit", "Extremal", "FractionalLaplacian", "IsaacsFamily",
    "frac_laplacian_constant", "validate",
    "AnalyticField", "PowerLaw", "RadialField", "RadialGrid", "ZeroOutside",
    "OperatorSpec", "OperatorValue", "extremal", "full_operator", "isaacs", "linear_op",
    "FundamentalExponent", "solve_sigma",
    "Annulus", "Ball", "EigenPair", "PuncturedBall", "WholeSpace", "principal_eigenpair",
    "punctured_eigenvalue", "simplicity_probe", "solve_dirichlet", "whole_space_eigenpair",
    "heat_profile", "self_similar_value",
]
