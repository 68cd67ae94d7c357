"""Irrelevant covariates wash out residual skewness; a LASSO first step keeps it.

Run: python demos/01_irrelevant_covariates.py [--reps 100]
"""
import argparse

from sfpdl.montecarlo import McDesign, run_design

parser = argparse.ArgumentParser()
parser.add_argument("--reps", type=int, default=100)
parser.add_argument("--n", type=int, default=400)
args = parser.parse_args()

print(f"n = {args.n}, {args.reps} replications, true skewness of v - u is about -0.554\n")
print(f"{'c':>5} {'OLS skew':>10} {'OLS wrong':>10} {'LASSO skew':>11} {'LASSO wrong':>12}")
for c in (0.0, 0.1, 0.5, 0.9):
    s = run_design(McDesign("irrelevant_z", args.n, c, args.reps, 0, ("OLS", "LASSO-FULL")))
    print(f"{c:>5g} {s.mean('OLS', 'skewness'):>10.3f} {s.count('OLS', 'wrong_skew'):>10d} "
          f"{s.mean('LASSO-FULL', 'skewness'):>11.3f} {s.count('LASSO-FULL', 'wrong_skew'):>12d}")

print("\nWith c = 0.9 the OLS fit uses 0.9 n noise columns. Its residuals lose their")
print("asymmetry and often skew the wrong way, so COLS and MLE report no inefficiency.")
print("A cross-validated LASSO drops most of those columns and the skewness survives.")
