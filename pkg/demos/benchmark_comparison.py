"""Probit BART versus probit monotone BART on the piecewise-linear benchmark.

The true success probability is Phi(f(x)) with f(x) = 0.2x left of zero and
x to the right, so it rises slowly and then quickly. Both models see the same
500 draws; the monotone one is told that the curve cannot go down.

    python demos/benchmark_comparison.py            # quick run, a few seconds per 100 sweeps
    python demos/benchmark_comparison.py --full     # 1000 burn-in + 1000 kept sweeps per model
"""

import argparse
import time

import numpy as np

from pmbart import ModelConfig, curve_summary, fit_report, run_mcmc
from pmbart.simulation import X_RANGE, simulate, true_probability

ap = argparse.ArgumentParser()
ap.add_argument("--full", action="store_true")
ap.add_argument("--seed", type=int, default=2024)
ap.add_argument("--csv", help="write both curves to this file")
args = ap.parse_args()

burn, keep = (1000, 1000) if args.full else (150, 150)
data = simulate(500, seed=args.seed)
grid = np.linspace(*X_RANGE, 100)
truth = true_probability(grid)
print(f"{data.n} observations, {int(data.y.sum())} successes; {burn} burn-in and {keep} kept sweeps")

curves = {}
for variant in ("pbart", "pmbart"):
    cfg = ModelConfig(
        variant=variant,
        burn_in=burn,
        keep=keep,
        seed=1,
        monotone={0: 1} if variant == "pmbart" else {},
    )
    t0 = time.perf_counter()
    draws = run_mcmc(data, cfg)
    secs = time.perf_counter() - t0
    cs = curve_summary(draws, grid, level=0.9)
    curves[variant] = cs
    rep = fit_report(draws, data)
    rmse = np.sqrt(np.mean((cs.mean - truth) ** 2))
    print(
        f"{variant:7s} alpha={cfg.alpha:<5} beta={cfg.beta:<4} "
        f"rmse={rmse:.4f}  band={np.mean(cs.width):.4f}  "
        f"depth={rep['mean_tree_depth']:.2f}  birth acc={rep['birth_acceptance']:.3f}  ({secs:.0f}s)"
    )

ratio = np.mean(curves["pmbart"].width) / np.mean(curves["pbart"].width)
print(f"monotone band is {ratio:.2f} times the unconstrained one")
print("monotone mean curve nondecreasing:", bool(np.all(np.diff(curves["pmbart"].mean) >= 0)))

# a coarse text picture of the two mean curves
for x, p, a, b in list(zip(grid, truth, curves["pbart"].mean, curves["pmbart"].mean))[::11]:
    print(f"x={x:+.2f}  truth={p:.3f}  pbart={a:.3f}  pmbart={b:.3f}")

if args.csv:
    with open(args.csv, "w") as fh:
        fh.write("x,truth,pbart_mean,pbart_lo,pbart_hi,pmbart_mean,pmbart_lo,pmbart_hi\n")
        a, b = curves["pbart"], curves["pmbart"]
        for i, x in enumerate(grid):
            fh.write(",".join(repr(float(v)) for v in (x, truth[i], a.mean[i], a.lower[i], a.upper[i], b.mean[i], b.lower[i], b.upper[i])) + "\n")
    print("wrote", args.csv)
