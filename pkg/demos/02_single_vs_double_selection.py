"""Single versus double LASSO selection before a frontier fit.

Run: python demos/02_single_vs_double_selection.py [--reps 200]
"""
import argparse

from sfpdl.montecarlo import McDesign, run_design, standardized_dist

parser = argparse.ArgumentParser()
parser.add_argument("--reps", type=int, default=200)
args = parser.parse_args()

chains = ("PSL-COLS", "PDL-COLS", "PSL-MLE", "PDL-MLE")
s = run_design(McDesign("belloni_d1", 100, 0.0, args.reps, 0, chains))

print(f"n = 100, d = 200 controls, {args.reps} replications, true beta = 1\n")
print(f"{'chain':<10}{'bias/se':>9}{'sd':>7}{'controls':>10}{'wrong skew':>12}{'eff ~ 1':>9}")
for e in chains:
    dist = standardized_dist(s.records, e, 1.0)
    print(f"{e:<10}{dist.mean:>9.3f}{dist.sd:>7.3f}{s.mean(e, 'num_selected'):>10.2f}"
          f"{s.count(e, 'wrong_skew'):>12d}{s.count(e, 'eff_one'):>9d}")

print("\nThe single selection keeps controls that predict output and misses those that")
print("only move the input, so the input coefficient absorbs their effect. Adding a")
print("selection step for the input recovers them and centres the t-statistic near zero.")
