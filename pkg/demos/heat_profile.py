"""The self-similar profile of the fractional heat equation.

For s = 1/2 on the line the profile is the Cauchy density; for other orders
it is computed by Hankel inversion and checked against the drift eigen
relation it must satisfy.
"""
import math

import numpy as np

from nonlocal_pucci import heat_profile, self_similar_value
from nonlocal_pucci.heat import verify_eigen_relation

cauchy = heat_profile(1, 0.5)
r = np.array([0.0, 1.0, 3.0, 10.0])
print("r        computed        1/(pi(1+r^2))")
for ri, v in zip(r, cauchy.field(r)):
    print(f"{ri:5.1f}  {v:.12f}  {1 / (math.pi * (1 + ri * ri)):.12f}")

prof = heat_profile(2, 0.75)
print(f"N=2 s=0.75: mass={prof.mass():.6f}  tail ~ {prof.field.tail.A:.4f} r^-{prof.field.tail.p}")
print(f"eigen relation residual {verify_eigen_relation(prof):.2e}")
for t in (0.5, 1.0, 4.0):
    print(f"t={t}: value at the centre {self_similar_value(prof.field, prof.lam, 0.0, t, 0.75):.6f}")
