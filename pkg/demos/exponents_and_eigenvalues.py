"""How far the minus extremal operator drifts from the linear picture.

Solves the fundamental exponent for the fractional Laplacian and for the
minus Pucci operator, then compares the whole-space eigenvalue of the
minus operator with the window those exponents predict.
"""
from nonlocal_pucci import EllipticityBounds, FractionalLaplacian, solve_sigma, whole_space_eigenpair
from nonlocal_pucci.eigen import decay_exponent

N, s = 2, 0.75
linear = EllipticityBounds(1.0, 1.0, s, N)
pucci = EllipticityBounds(1.0, 2.0, s, N)

for name, b in (("linear", linear), ("pucci", pucci)):
    e = solve_sigma(b, "minus")
    print(f"{name:7s} sigma={e.sigma:+.6f}  Ntilde={e.Ntilde:.6f}")

ntilde = solve_sigma(pucci, "minus").Ntilde
print(f"predicted window for lambda: [{(ntilde - 2 * s) / (2 * s):.4f}, {(N + 2 * s) / (2 * s):.4f}]")

pair, trace = whole_space_eigenpair(FractionalLaplacian(N, s), "plus", (10.0, 20.0, 40.0))
print(f"linear lambda by radius: {[round(x, 5) for x in trace.lambdas]} -> {trace.lambda_extrapolated:.5f}"
      f" (exact {N / (2 * s):.5f})")
print(f"linear tail exponent {decay_exponent(pair).p:.4f} (expected {N + 2 * s})")

_, trace = whole_space_eigenpair(pucci, "minus", (10.0, 20.0, 40.0))
print(f"minus lambda by radius: {[round(x, 5) for x in trace.lambdas]} -> {trace.lambda_extrapolated:.5f}")
