#!/usr/bin/env python3
"""Penalty sweep and budget dualization for the wireless power-control case.

Writes plot-ready CSVs:
    out/wireless_sweep/sweep.csv     p, gamma, beta, gap over a log grid
    out/wireless_sweep/dual.csv      budget, p_star, energy_cost rows

Usage:
    python scripts/wireless_sweep.py [--points 40] [--out out/wireless_sweep]
"""

import argparse
from pathlib import Path

import numpy as np

from driftctrl import (ConstraintSpec, ProblemParams, rejection_report, solve,
                       solve_dual, wireless_setup)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=40)
    ap.add_argument("--out", default="out/wireless_sweep")
    ap.add_argument("--arrival-rate", type=float, default=10.0)
    ap.add_argument("--delay-bound", type=float, default=0.1)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--sigma", type=float, default=1.0)
    args = ap.parse_args()

    model, system = wireless_setup(args.arrival_rate, args.delay_bound,
                                   args.alpha, args.sigma)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    grid = np.geomspace(1e-2, 1e3, args.points)
    rows = []
    for p in grid:
        params = system.with_penalty(float(p))
        sol = solve(model, params)
        rep = rejection_report(model, params, sol)
        rows.append((p, sol.gamma, rep.beta, rep.gap))
        print(f"p={p:10.4g}  gamma={sol.gamma:10.6g}  beta={rep.beta:10.6g}  "
              f"gap={rep.gap:10.6g}")
    with open(out / "sweep.csv", "w", newline="") as fh:
        fh.write("p,gamma,beta,gap\n")
        for r in rows:
            fh.write(",".join(format(v, ".17g") for v in r) + "\n")

    upper = rows[0][2]
    budgets = np.linspace(0.15, 0.75, 5) * upper
    with open(out / "dual.csv", "w", newline="") as fh:
        fh.write("beta_hat,p_star,gamma,energy_cost\n")
        for bh in budgets:
            dual = solve_dual(model, system, ConstraintSpec(float(bh)))
            fh.write(",".join(format(v, ".17g") for v in
                              (dual.beta_hat, dual.p_star, dual.gamma,
                               dual.energy_cost)) + "\n")
            print(f"budget={bh:8.5f}  p*={dual.p_star:10.6g}  "
                  f"energy={dual.energy_cost:10.6g}")
    print(f"wrote {out / 'sweep.csv'} and {out / 'dual.csv'}")


if __name__ == "__main__":
    main()
