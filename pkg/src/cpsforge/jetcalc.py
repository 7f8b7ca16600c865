"""Jet-bundle variational operators.

Total derivatives live on the chart; this module adds the source-form layer:
the componentwise Euler operator, the deterministic integration-by-parts sweep
producing a symplectic-potential representative, and its boundary analogue
(which either decomposes or raises NonDecomposableError when a transversal
variation survives).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import sympy as sp

from .chart import Chart, MultiIndex
from .forms import Form, dd, d_h, wedge


class NonDecomposableError(ValueError):
    """The boundary variation cannot be decomposed into sources of boundary fields."""

    def __init__(self, message: str, term: Form | None = None):
        super().__init__(message)
        self.term = term


@dataclass(frozen=True)
class EvolutionaryField:
    """Vertical (evolutionary) vector field: one component expression per field."""

    chart: Chart
    components: Mapping[str, sp.Expr]

    def __post_init__(self):
        comps = {a: sp.sympify(e) for a, e in self.components.items()}
        missing = set(self.chart.fields) - set(comps)
        for a in missing:
            comps[a] = sp.Integer(0)
        unknown = set(comps) - set(self.chart.fields)
        if unknown:
            raise KeyError(f"components for undeclared fields: {sorted(unknown)}")
        object.__setattr__(self, "components", comps)

    def __getitem__(self, a: str) -> sp.Expr:
        return self.components[a]

    def keys(self):
        return self.components.keys()

    def items(self):
        return self.components.items()

    def __contains__(self, a):
        return a in self.components

    def __add__(self, other: "EvolutionaryField") -> "EvolutionaryField":
        return EvolutionaryField(
            self.chart,
            {a: self.components[a] + other.components[a] for a in self.components},
        )

    def __mul__(self, c) -> "EvolutionaryField":
        return EvolutionaryField(self.chart, {a: sp.sympify(c) * e for a, e in self.items()})


@dataclass
class SourceForm:
    """Map field -> top horizontal form E_a (the coefficient pairs with th{a})."""

    chart: Chart
    components: dict[str, Form] = field(default_factory=dict)

    def coefficient(self, a: str) -> sp.Expr:
        f = self.components.get(a)
        if f is None or f.is_zero():
            return sp.Integer(0)
        word = tuple(("x", i) for i in range(self.chart.n))
        return f.terms.get(word, sp.Integer(0))

    def is_zero(self) -> bool:
        return all(f.is_zero() for f in self.components.values())

    def paired_with_contacts(self) -> Form:
        """Sum_a E_a ^ th{a}."""
        out = Form.zero(self.chart, self.chart.n, 1)
        for a, f in self.components.items():
            out = out + wedge(f, Form.contact(self.chart, a))
        return out

    def equations(self) -> dict[str, sp.Expr]:
        return {a: self.coefficient(a) for a in self.components}


def total_derivative(chart: Chart, axis: int, expr: sp.Expr) -> sp.Expr:
    return chart.total_derivative(axis, expr)


def total_derivative_multi(chart: Chart, mi: MultiIndex, expr: sp.Expr) -> sp.Expr:
    return chart.total_derivative_multi(mi, expr)


def _top_coefficient(chart: Chart, L: Form) -> sp.Expr:
    word = tuple(("x", i) for i in range(chart.n))
    extra = [w for w in L.terms if w != word]
    if extra:
        raise ValueError("expected a purely horizontal top-degree form")
    return L.terms.get(word, sp.Integer(0))


def euler_operator(L: Form) -> SourceForm:
    """Componentwise Euler operator: E_a = sum_J (-1)^|J| D_J dL/du^a_J.

    Vanishes identically iff L is a null Lagrangian on the chart.
    """
    chart = L.chart
    lag = _top_coefficient(chart, L)
    vol_word = tuple(("x", i) for i in range(chart.n))
    out = SourceForm(chart)
    acc: dict[str, sp.Expr] = {a: sp.Integer(0) for a in chart.fields}
    for sym, a, mi in chart.jets_in(lag):
        d = sp.diff(lag, sym)
        if d == 0:
            continue
        acc[a] += (-1) ** mi.order * chart.total_derivative_multi(mi, d)
    for a, e in acc.items():
        out.components[a] = Form(chart, chart.n, 0, {vol_word: sp.expand(e)})
    return out


def _sweep(P: Form) -> tuple[dict[str, sp.Expr], Form]:
    """Deterministic integration-by-parts sweep of a top-degree (n,1) form.

    Writes P = sum_a src_a ^ th{a} + d_h(theta); jet indices on contact factors
    are removed highest-order-first, largest axis first.  Returns (src, theta).
    """
    chart = P.chart
    vol_word = tuple(("x", i) for i in range(chart.n))
    work: dict[tuple[str, tuple], sp.Expr] = {}
    for word, coeff in P.terms.items():
        vfacs = [f for f in word if f[0] == "v"]
        xfacs = tuple(f for f in word if f[0] == "x")
        if len(vfacs) != 1 or xfacs != vol_word:
            raise ValueError("sweep expects terms of the form vol ^ contact")
        a, ent = vfacs[0][1], vfacs[0][2]
        key = (a, ent)
        work[key] = work.get(key, sp.Integer(0)) + coeff
    theta = Form.zero(chart, chart.n - 1, 1)
    while True:
        pending = [k for k in work if len(k[1]) > 0 and work[k] != 0]
        if not pending:
            break
        a, ent = max(pending, key=lambda k: (len(k[1]), k[0], k[1]))
        coeff = work.pop((a, ent))
        mi = MultiIndex(ent)
        axis = max(ent)
        kept = mi.remove_one(axis)
        # c vol ^ th{a,J+axis} = d_h(c iota_axis(vol) ^ th{a,J}) - (D_axis c) vol ^ th{a,J}
        word = tuple(("x", i) for i in range(chart.n) if i != axis) + (("v", a, kept.entries),)
        theta = theta + Form(chart, chart.n - 1, 1, {word: (-1) ** axis * coeff})
        prev = (a, kept.entries)
        work[prev] = work.get(prev, sp.Integer(0)) - chart.total_derivative(axis, coeff)
    src = {}
    for (a, ent), coeff in work.items():
        if ent == ():
            src[a] = src.get(a, sp.Integer(0)) + coeff
    return src, theta


def integrate_by_parts(L: Form) -> tuple[SourceForm, Form]:
    """Decompose the field-space differential of a Lagrangian form.

    Returns (E, Theta) with dd(L) = sum_a E_a ^ th{a} + d_h(Theta), Theta fixed
    by the highest-order-first sweep; the residual of the decomposition is
    checked to be identically zero, and E agrees with euler_operator.
    """
    chart = L.chart
    _top_coefficient(chart, L)  # validates shape
    P = dd(L)
    src, theta = _sweep(P)
    vol_word = tuple(("x", i) for i in range(chart.n))
    E = SourceForm(chart)
    for a in chart.fields:
        E.components[a] = Form(chart, chart.n, 0, {vol_word: src.get(a, sp.Integer(0))})
    residual = P - E.paired_with_contacts() - d_h(theta)
    if not residual.is_zero():
        raise ArithmeticError(f"integration-by-parts residual is nonzero: {residual}")
    return E, theta


def boundary_euler_operator(
    ell_bar: Form,
    pulled_theta: Form,
    dirichlet: frozenset[str] | set[str] = frozenset(),
) -> tuple[SourceForm, Form]:
    """Decompose dd(ell_bar) - j*Theta on the boundary chart.

    Returns (b, theta_bar) with dd(ell) - j*Theta = sum_a b_a ^ th{a} - d_h(theta_bar).
    Contact factors of Dirichlet fields are dropped (their variations vanish);
    any surviving variation of a transversal family (normal-derivative field)
    raises NonDecomposableError, since it is not a source of a boundary field.
    """
    bchart = ell_bar.chart
    P = dd(ell_bar) - pulled_theta

    def keep(word) -> bool:
        for f in word:
            if f[0] == "v" and f[1] in dirichlet:
                return False
        return True

    P = Form(bchart, bchart.n, 1, {w: c for w, c in P.terms.items() if keep(w)})
    src, theta_sweep = _sweep(P)
    vol_word = tuple(("x", i) for i in range(bchart.n))
    b = SourceForm(bchart)
    for a, coeff in sorted(src.items()):
        coeff = sp.expand(coeff)
        if coeff == 0:
            continue
        if ".n" in a or ".t" in a:
            term = wedge(
                Form(bchart, bchart.n, 0, {vol_word: coeff}), Form.contact(bchart, a)
            )
            raise NonDecomposableError(
                f"boundary variation contains a transversal-derivative variation of {a!r}",
                term=term,
            )
        b.components[a] = Form(bchart, bchart.n, 0, {vol_word: coeff})
    for a in bchart.fields:
        b.components.setdefault(a, Form.zero(bchart, bchart.n, 0))
    theta_bar = -theta_sweep
    residual = P - b.paired_with_contacts() + d_h(theta_bar)
    if not residual.is_zero():
        raise ArithmeticError(f"boundary decomposition residual is nonzero: {residual}")
    return b, theta_bar
