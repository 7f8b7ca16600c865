#!/usr/bin/env python3
"""Action-variation residual vs epsilon for the Neumann and Robin models."""
import csv
import sys

from cpsforge import checks
from cpsforge.cli import load_model


def main(out="fd_convergence.csv"):
    rows = [("model", "eps", "residual", "residual_no_boundary")]
    for name in ("scalar_neumann.cps", "scalar_robin_const.cps"):
        model = load_model(name)
        res = checks.fd_check(model, (129, 129), eps_list=(1e-2, 1e-3, 1e-4))
        ab = dict(res.ablated_rows)
        for eps, r in res.rows:
            rows.append((model.name, eps, r, ab.get(eps, "")))
        print(f"{model.name}: slope = {res.slope:.3f}")
    with open(out, "w", newline="") as fh:
        csv.writer(fh).writerows(rows)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main(*sys.argv[1:]))
