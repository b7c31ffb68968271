"""Empirical Harnack ratios for random data with bounded coefficients.

Draws a reproducible family of problems, solves each with the plus Pucci
operator and reports how the worst ratio sup/inf stabilises.
"""
import sys

from nonlocal_pucci import EllipticityBounds
from nonlocal_pucci.harnack import run_harnack_experiment

count = int(sys.argv[1]) if len(sys.argv) > 1 else 40
rep = run_harnack_experiment(EllipticityBounds(1.0, 2.0, 0.75, 2), M1=1.0, M2=1.0, count=count, seed=0)
print(f"solved {len(rep.records)} of {count}; all nonnegative: {rep.all_nonnegative}")
for n in (count // 4, count // 2, count):
    print(f"worst ratio after {n:3d} samples: {rep.max_ratio_at(n):.5f}")
print(rep.summary())
