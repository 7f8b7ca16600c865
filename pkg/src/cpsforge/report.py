"""Structured pipeline reports and canonical JSON serialization."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import sympy as sp

from .forms import Form
from .jetcalc import NonDecomposableError, SourceForm
from .model import Model
from .pipeline import (
    d_symmetry_check,
    decompose,
    gauge_residual,
    lift_vector_field,
    noether_current_xi,
    presymplectic_current,
    slice_presymplectic,
    xi_invariance_residual,
)
from .jetcalc import EvolutionaryField


@dataclass
class PipelineReport:
    model: str
    steps: dict[str, Any] = field(default_factory=dict)
    symmetries: list[dict] = field(default_factory=list)
    caveats: list[str] = field(default_factory=list)
    numeric: dict[str, Any] = field(default_factory=dict)
    error: dict[str, Any] | None = None

    def to_dict(self) -> dict:
        out = {
            "model": self.model,
            "steps": self.steps,
            "symmetries": self.symmetries,
            "caveats": self.caveats,
        }
        if self.numeric:
            out["numeric"] = self.numeric
        if self.error is not None:
            out["error"] = self.error
        return out


def fstr(form: Form) -> str:
    return str(form.normalize())


def source_dict(src: SourceForm) -> dict[str, str]:
    out = {}
    for a in sorted(src.components):
        e = sp.expand(src.coefficient(a))
        if "." in a and e == 0:
            continue  # silent zero entries of restriction families
        out[a] = sp.sstr(e)
    return out


def run_cps(model: Model, with_symmetries: bool = True) -> PipelineReport:
    """CPS algorithm steps 0-5 on a parsed model.

    A non-decomposable boundary variation is reported (with the offending
    term) rather than raised; the caller decides the exit status.
    """
    rep = PipelineReport(model=model.name)
    lp = model.lp
    rep.steps["0"] = {
        "L": fstr(lp.L),
        "ell": fstr(lp.ell),
        "bc": dict(sorted(lp.bc.items())),
    }
    try:
        v = decompose(lp)
    except NonDecomposableError as err:
        rep.error = {
            "kind": "NON_DECOMPOSABLE",
            "message": str(err),
            "term": fstr(err.term) if err.term is not None else "",
        }
        return rep
    rep.steps["1"] = {
        "E": source_dict(v.E),
        "Theta": fstr(v.theta),
        "residual": fstr(v.bulk_residual()),
        "theta_noncanonical": v.noncanonical_theta,
    }
    rep.steps["2"] = {
        "b": source_dict(v.b),
        "theta_bar": fstr(v.theta_bar),
        "residual": fstr(v.boundary_residual()) if lp.has_boundary else "0",
    }
    sol = {a: e for a, e in v.equations().items() if sp.expand(e) != 0}
    bsol = {a: e for a, e in v.boundary_equations().items() if sp.expand(e) != 0}
    rep.steps["3"] = {
        "Sol": {a: sp.sstr(e) for a, e in sorted(sol.items())},
        "Sol_boundary": {a: sp.sstr(e) for a, e in sorted(bsol.items())},
        "declared_constraints": [sp.sstr(sp.sympify(c)) for c in model.constraints],
    }
    omega, omega_bar = presymplectic_current(v)
    om_slice, om_corner = slice_presymplectic(v)
    rep.steps["4"] = {
        "Omega": fstr(omega),
        "omega_bar": fstr(omega_bar),
        "slice_form": fstr(om_slice),
        "corner_form": fstr(om_corner),
    }
    if with_symmetries:
        for vname, xi in sorted(model.vectors.items()):
            rep.symmetries.append(symmetry_block(model, v, vname, xi))
        if any(m.kind == "one_form" for m in model.meta.values()) and not model.lie_dim:
            if any(bg.name == "lam" and bg.kind == "function" for bg in model.backgrounds):
                rep.symmetries.append(gauge_parameter_block(model, v))
    rep.caveats.append(
        "xi-charges are reported for this Lagrangian-pair representative; equivalent "
        "representatives shift them by the boundary-variation lemma"
    )
    rep.caveats.append(
        "converse statements (symmetry verdicts implying invariant representatives) "
        "are not decided; the engine reports the constructive direction only"
    )
    return rep


def symmetry_block(model: Model, v, vname: str, xi) -> dict:
    lp = model.lp
    res = xi_invariance_residual(lp, xi, model.meta)
    invariant = res.bulk.is_zero() and res.boundary.is_zero()
    W = lift_vector_field(lp.pair.chart, model.meta, xi)
    verdict = d_symmetry_check(lp, W, xi=xi, meta=model.meta)
    noether = noether_current_xi(lp, v, xi, model.meta)
    block = {
        "vector": vname,
        "xi_invariant": invariant,
        "invariance_residual": {"bulk": fstr(res.bulk), "boundary": fstr(res.boundary)},
        "d_symmetry": verdict.is_symmetry,
        "S": fstr(verdict.S) if verdict.S is not None else None,
        "s_bar": fstr(verdict.s_bar) if verdict.s_bar is not None else None,
        "noether": {
            "J": fstr(noether.J),
            "j_bar": fstr(noether.j_bar),
            "identity_residual_bulk": fstr(noether.identity_residual_bulk),
            "identity_residual_boundary": fstr(noether.identity_residual_boundary),
            "slice_current": fstr(noether.slice_current),
            "corner_current": fstr(noether.corner_current),
        },
        "note": verdict.note,
    }
    if verdict.is_symmetry:
        try:
            g = gauge_residual(lp, v, W, xi=xi, meta=model.meta)
            block["gauge"] = {
                "bulk_residual": fstr(g.bulk),
                "boundary_residual": fstr(g.boundary),
                "is_gauge": g.is_gauge(),
            }
        except (ValueError, ArithmeticError, NotImplementedError) as err:
            block["gauge"] = {"not_reduced": str(err)}
    return block


def gauge_parameter_block(model: Model, v) -> dict:
    """The gauge-parameter direction W^{A_mu} = d_mu lam for abelian one-forms."""
    lp = model.lp
    chart = lp.pair.chart
    lam = sp.Function("lam")(*chart.xs)
    comps = {}
    for a, m in model.meta.items():
        if m.kind == "one_form":
            comps[a] = sp.diff(lam, chart.xs[m.axis])
    W = EvolutionaryField(chart, comps)
    g = gauge_residual(lp, v, W)
    return {
        "vector": "gauge(lam)",
        "kind": "gauge_parameter",
        "gauge": {
            "bulk_residual": fstr(g.bulk),
            "boundary_residual": fstr(g.boundary),
            "is_gauge": g.is_gauge(),
        },
    }


# -- canonical JSON ----------------------------------------------------------------------


def _canonical(obj):
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))}
    if isinstance(obj, (list, tuple)):
        return [_canonical(x) for x in obj]
    return obj


def report_json(rep: PipelineReport) -> str:
    """Canonical JSON: sorted keys, 12-significant-digit floats."""
    return json.dumps(_canonical(rep.to_dict()), sort_keys=True, indent=2) + "\n"
