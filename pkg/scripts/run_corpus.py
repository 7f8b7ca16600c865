#!/usr/bin/env python3
"""Derive every bundled model and print a one-screen summary per model."""
import sys

from cpsforge.cli import corpus_dir, load_model
from cpsforge.report import run_cps


def main():
    failures = 0
    for f in sorted(corpus_dir().iterdir()):
        if not f.name.endswith(".cps"):
            continue
        model = load_model(str(f))
        rep = run_cps(model)
        print(f"== {model.name}")
        if rep.error is not None:
            print(f"   {rep.error['kind']}: {rep.error['message']}")
            print(f"   offending term: {rep.error['term']}")
            failures += 1
            continue
        for a, e in rep.steps["1"]["E"].items():
            print(f"   E[{a}] = {e}")
        for a, e in rep.steps["2"]["b"].items():
            if e != "0":
                print(f"   b[{a}] = {e}")
        print(f"   theta_bar = {rep.steps['2']['theta_bar']}")
        print(f"   slice form = {rep.steps['4']['slice_form']}")
        for blk in rep.symmetries:
            if "xi_invariant" in blk:
                gauge = blk.get("gauge", {})
                tail = ""
                if "is_gauge" in gauge:
                    tail = f"; gauge: {'yes' if gauge['is_gauge'] else 'no'}"
                print(
                    f"   {blk['vector']}: invariant {'yes' if blk['xi_invariant'] else 'no'}"
                    f"; d-symmetry {'yes' if blk['d_symmetry'] else 'no'}{tail}"
                )
            elif blk.get("kind") == "gauge_parameter":
                g = blk["gauge"]
                print(
                    f"   gauge(lam): bulk {g['bulk_residual']}; "
                    f"boundary {g['boundary_residual']}"
                )
    return 1 if failures > 1 else 0  # the L3 variant is expected to fail


if __name__ == "__main__":
    sys.exit(main())
