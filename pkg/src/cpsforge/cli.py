"""Command-line interface: derive | check | numeric | corpus-list."""
from __future__ import annotations

import argparse
import csv
import importlib.resources
import pathlib
import sys

import sympy as sp

from .jetcalc import EvolutionaryField, NonDecomposableError
from .model import ModelError, parse_model
from .pipeline import (
    d_symmetry_check,
    decompose,
    gauge_residual,
    lift_vector_field,
    xi_invariance_residual,
)
from .report import fstr, report_json, run_cps


def corpus_dir():
    return importlib.resources.files("cpsforge") / "corpus"


def load_model(path: str, max_jet_order: int | None = None):
    p = pathlib.Path(path)
    if not p.exists():
        candidate = corpus_dir() / path
        if candidate.is_file():
            p = candidate
        else:
            raise SystemExit(f"model file not found: {path}")
    return parse_model(p.read_text(), max_jet_order=max_jet_order)


def cmd_derive(args) -> int:
    model = load_model(args.model, args.max_jet_order)
    rep = run_cps(model, with_symmetries=not args.no_symmetries)
    text = report_json(rep)
    if args.out:
        pathlib.Path(args.out).write_text(text)
    if args.json and not args.out:
        sys.stdout.write(text)
    else:
        print(f"model {rep.model}:")
        if rep.error is not None:
            print(f"  ERROR {rep.error['kind']}: {rep.error['message']}")
            return 2
        for a, e in rep.steps["1"]["E"].items():
            print(f"  E[{a}] = {e}")
        print(f"  Theta = {rep.steps['1']['Theta']}")
        for a, e in rep.steps["2"]["b"].items():
            if e != "0":
                print(f"  b[{a}] = {e}")
        print(f"  theta_bar = {rep.steps['2']['theta_bar']}")
        print(f"  slice form = {rep.steps['4']['slice_form']}")
        for blk in rep.symmetries:
            if "xi_invariant" in blk:
                print(
                    f"  vector {blk['vector']}: xi-invariant: "
                    f"{'yes' if blk['xi_invariant'] else 'no'}; "
                    f"d-symmetry: {'yes' if blk['d_symmetry'] else 'no'}"
                )
    return 0 if rep.error is None else 2


def cmd_check(args) -> int:
    model = load_model(args.model, args.max_jet_order)
    lp = model.lp
    v = decompose(lp)
    if args.xi:
        if args.xi not in model.vectors:
            raise SystemExit(f"unknown vector field {args.xi!r}")
        xi = model.vectors[args.xi]
        res = xi_invariance_residual(lp, xi, model.meta)
        inv = res.bulk.is_zero() and res.boundary.is_zero()
        W = lift_vector_field(lp.pair.chart, model.meta, xi)
        verdict = d_symmetry_check(lp, W, xi=xi, meta=model.meta)
        print(f"xi-invariant: {'yes' if inv else 'no'}")
        if not inv:
            print(f"  residual bulk = {fstr(res.bulk)}")
            print(f"  residual boundary = {fstr(res.boundary)}")
        print(f"d-symmetry: {'yes' if verdict.is_symmetry else 'no'}")
        if verdict.is_symmetry:
            g = gauge_residual(lp, v, W, xi=xi, meta=model.meta)
            print(f"gauge direction: {'yes' if g.is_gauge() else 'no'}")
            if not g.is_gauge():
                print(f"  gauge residual bulk = {fstr(g.bulk)}")
                print(f"  gauge residual boundary = {fstr(g.boundary)}")
        return 0
    if args.gauge:
        chart = lp.pair.chart
        lam = sp.Function(args.gauge)(*chart.xs)
        comps = {}
        for a, m in model.meta.items():
            if m.kind == "one_form":
                comps[a] = sp.diff(lam, chart.xs[m.axis])
        if not comps:
            raise SystemExit("gauge parameter checks need a one-form field")
        W = EvolutionaryField(chart, comps)
        g = gauge_residual(lp, v, W)
        print(f"gauge direction: {'yes' if g.is_gauge() else 'no'}")
        print(f"  bulk residual = {fstr(g.bulk)}")
        print(f"  boundary obstruction = {fstr(g.boundary)}")
        return 0
    if args.evolutionary:
        chart = lp.pair.chart
        comps = {}
        for item in args.evolutionary.split(","):
            name, _, exprtext = item.partition(":")
            comps[name.strip()] = sp.sympify(
                exprtext.strip(),
                locals={str(s): s for s in list(chart.xs)}
                | {chart.pretty_jet(sym): sym for sym in chart._jet_by_symbol},
            )
        W = EvolutionaryField(chart, comps)
        verdict = d_symmetry_check(lp, W)
        print(f"d-symmetry: {'yes' if verdict.is_symmetry else 'no'}")
        if verdict.note:
            print(f"  note: {verdict.note}")
        return 0
    raise SystemExit("check needs one of --xi, --gauge, --evolutionary")


def _write_csv(path: str | None, header: list[str], rows: list[tuple]):
    out = pathlib.Path(path) if path else None
    if out is None:
        print(",".join(header))
        for r in rows:
            print(",".join(f"{x:.12g}" if isinstance(x, float) else str(x) for x in r))
        return
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([f"{x:.12g}" if isinstance(x, float) else x for x in r])


def _parse_grid(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.lower().split("x"))


def cmd_numeric(args) -> int:
    from . import checks

    model = load_model(args.model, args.max_jet_order)
    shape = _parse_grid(args.grid) if args.grid else None
    if args.subcommand == "fd-check":
        eps = [float(args.eps)] if args.eps else [1e-2, 1e-3, 1e-4]
        res = checks.fd_check(model, shape or (129, 129), eps_list=eps)
        rows = [(e, r) for e, r in res.rows]
        _write_csv(args.out, ["eps", "residual"], rows)
        print(f"slope = {res.slope:.3f}")
        if res.ablated_rows:
            worst = max(a / max(b, 1e-300) for (_, a), (_, b) in zip(res.ablated_rows, res.rows))
            print(f"ablation ratio (no boundary term) = {worst:.3g}")
        return 0 if (len(rows) < 2 or res.slope >= 1.9) else 1
    if args.subcommand == "slice-independence":
        res = checks.slice_independence(model, shape or (129, 256), mode=args.mode)
        rows = [(i, val) for i, val in enumerate(res.values)]
        _write_csv(args.out, ["slice", "pairing"], rows)
        print(f"relative drift = {res.drift:.3g}")
        return 0
    if args.subcommand == "flux":
        if not args.xi:
            raise SystemExit("flux needs --xi")
        res = checks.flux_check(model, args.xi, shape or (257, 256))
        rows = [(res.q_values[0], res.q_values[1], res.delta_q, res.rhs, res.mismatch)]
        _write_csv(args.out, ["q1", "q2", "delta_q", "rhs", "mismatch"], rows)
        print(f"delta Q = {res.delta_q:.6g}, rhs = {res.rhs:.6g}, mismatch = {res.mismatch:.3g}")
        return 0
    if args.subcommand == "hamiltonian":
        val, canonical, diff = checks.hamiltonian_comparison(model, shape or (129, 256))
        _write_csv(args.out, ["slice_pairing", "canonical_pairing", "difference"],
                   [(val, canonical, diff)])
        print(f"slice pairing = {val:.9g}, canonical = {canonical:.9g}, diff = {diff:.3g}")
        return 0
    raise SystemExit(f"unknown numeric subcommand {args.subcommand!r}")


def cmd_corpus_list(_args) -> int:
    for f in sorted(corpus_dir().iterdir()):
        if f.name.endswith(".cps"):
            first = f.read_text().splitlines()[0].lstrip("# ")
            print(f"{f.name:36s} {first}")
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="cpsforge", description=__doc__)
    ap.add_argument("--max-jet-order", type=int, default=None)
    sub = ap.add_subparsers(dest="command", required=True)

    d = sub.add_parser("derive", help="run the CPS pipeline on a model file")
    d.add_argument("model")
    d.add_argument("--json", action="store_true")
    d.add_argument("--out")
    d.add_argument("--no-symmetries", action="store_true")
    d.set_defaults(fn=cmd_derive)

    c = sub.add_parser("check", help="symmetry / gauge verdicts")
    c.add_argument("model")
    c.add_argument("--xi")
    c.add_argument("--gauge")
    c.add_argument("--evolutionary")
    c.set_defaults(fn=cmd_check)

    n = sub.add_parser("numeric", help="numeric cross-checks (CSV output)")
    n.add_argument("subcommand", choices=["fd-check", "slice-independence", "flux", "hamiltonian"])
    n.add_argument("model")
    n.add_argument("--grid")
    n.add_argument("--eps")
    n.add_argument("--xi")
    n.add_argument("--mode", default="spectral", choices=["spectral", "fd"])
    n.add_argument("--out")
    n.set_defaults(fn=cmd_numeric)

    cl = sub.add_parser("corpus-list", help="list bundled model files")
    cl.set_defaults(fn=cmd_corpus_list)

    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except NonDecomposableError as err:
        print(f"NON_DECOMPOSABLE: {err}", file=sys.stderr)
        if err.term is not None:
            print(f"offending term: {err.term}", file=sys.stderr)
        return 2
    except ModelError as err:
        print(f"model error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
