"""Covariant-phase-space pipeline on top of the form calculus.

Given a Lagrangian pair (bulk top form, lateral-boundary form) this module
derives the variational decomposition (sources and symplectic potentials on
both strata, with zero-residual certificates), the presymplectic currents and
their Cauchy-slice restriction, lifts of space-time vector fields, invariance
residuals, Noether currents/charges, variational-symmetry verdicts, and gauge
diagnostics modulo the on-shell ideal.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import sympy as sp

from .chart import Chart, MultiIndex
from .forms import Form, d_h, dd, iota_ev, iota_x, lie_ev, restrict, wedge
from .jetcalc import (
    EvolutionaryField,
    NonDecomposableError,
    SourceForm,
    boundary_euler_operator,
    euler_operator,
    integrate_by_parts,
)
from .relative import BoundaryPair, RelForm, rel_lie, rel_lie_ev


@dataclass(frozen=True)
class FieldMeta:
    """Tensor character of a declared field component."""

    kind: str  # "scalar" | "one_form"
    base: str = ""
    axis: int = -1  # component slot for one-form fields
    lie_index: int = 0


@dataclass
class LagrangianPair:
    """Bulk Lagrangian, lateral boundary Lagrangian, boundary-condition tags."""

    pair: BoundaryPair
    L: Form
    ell: Form
    bc: dict[str, str] = field(default_factory=dict)
    has_boundary: bool = True

    def __post_init__(self):
        if self.L.chart is not self.pair.chart:
            raise ValueError("bulk Lagrangian lives on the wrong chart")
        if self.ell.chart is not self.pair.bchart:
            raise ValueError("boundary Lagrangian lives on the wrong chart")
        for a, kind in self.bc.items():
            if kind not in ("free", "dirichlet", "robin"):
                raise ValueError(f"unknown boundary condition {kind!r} for field {a!r}")

    def dirichlet_fields(self) -> set[str]:
        return {a for a, k in self.bc.items() if k == "dirichlet"}


def kill_dirichlet(form: Form, dirichlet: set[str]) -> Form:
    """Impose homogeneous Dirichlet data: boundary restrictions of the listed
    fields vanish with all their tangential jets and variations."""
    if not dirichlet:
        return form
    bchart = form.chart
    terms = {}
    sub = {}
    for a in dirichlet:
        for (f2, mi), sym in list(bchart._jet_by_key.items()):
            if f2 == a:
                sub[sym] = sp.Integer(0)
    for word, coeff in form.terms.items():
        if any(f[0] == "v" and f[1] in dirichlet for f in word):
            continue
        terms[word] = coeff.xreplace(sub)
    return Form(form.chart, *form._tag, terms)


@dataclass
class VariationDecomposition:
    """Sources and symplectic potentials of a Lagrangian pair, with residuals."""

    lp: LagrangianPair
    E: SourceForm
    theta: Form
    b: SourceForm
    theta_bar: Form
    noncanonical_theta: bool = False

    @property
    def chart(self) -> Chart:
        return self.lp.pair.chart

    @property
    def bchart(self) -> Chart:
        return self.lp.pair.bchart

    def bulk_residual(self) -> Form:
        return dd(self.lp.L) - self.E.paired_with_contacts() - d_h(self.theta)

    def boundary_residual(self) -> Form:
        dirich = self.lp.dirichlet_fields()
        lhs = kill_dirichlet(dd(self.lp.ell) - self.lp.pair.pullback(self.theta), dirich)
        return lhs - self.b.paired_with_contacts() + d_h(self.theta_bar)

    def equations(self) -> dict[str, sp.Expr]:
        return self.E.equations()

    def boundary_equations(self) -> dict[str, sp.Expr]:
        return self.b.equations()


def decompose(lp: LagrangianPair) -> VariationDecomposition:
    """CPS steps 1-2: bulk and boundary variational decompositions."""
    E, theta = integrate_by_parts(lp.L)
    bchart = lp.pair.bchart
    if not lp.has_boundary:
        b = SourceForm(bchart, {a: Form.zero(bchart, bchart.n, 0) for a in bchart.fields})
        v = VariationDecomposition(
            lp, E, theta, b, Form.zero(bchart, bchart.n - 1, 1),
            noncanonical_theta=lp.L.jet_order() > 2,
        )
        if not v.bulk_residual().is_zero():
            raise ArithmeticError("bulk decomposition residual nonzero")
        return v
    dirich = lp.dirichlet_fields()
    pulled = kill_dirichlet(lp.pair.pullback(theta), dirich)
    ell = kill_dirichlet(lp.ell, dirich)
    b, theta_bar = boundary_euler_operator(ell, pulled, dirichlet=dirich)
    for a in dirich:
        b.components[a] = Form.zero(bchart, bchart.n, 0)
    v = VariationDecomposition(
        lp, E, theta, b, theta_bar, noncanonical_theta=lp.L.jet_order() > 2
    )
    if not v.bulk_residual().is_zero():
        raise ArithmeticError("bulk decomposition residual nonzero")
    if not v.boundary_residual().is_zero():
        raise ArithmeticError("boundary decomposition residual nonzero")
    return v


def presymplectic_current(v: VariationDecomposition) -> tuple[Form, Form]:
    """Symplectic currents: the field-space differential of the potentials."""
    return dd(v.theta), dd(v.theta_bar)


class SliceContext:
    """Cauchy-slice restriction {x^0 = const}; the slice value stays symbolic."""

    def __init__(self, chart: Chart):
        self.chart = chart
        self.schart = chart.restricted(0, tag="t")

    def pull(self, f: Form) -> Form:
        return restrict(f, 0, self.schart, value=None)

    @cached_property
    def cchart(self) -> Chart:
        return self.schart.restricted(self.schart.n - 1, tag="n")

    def corner_pull(self, f: Form) -> Form:
        return restrict(f, self.schart.n - 1, self.cchart, value=sp.Integer(0))


def slice_presymplectic(v: VariationDecomposition) -> tuple[Form, Form]:
    """The slice integrand of the presymplectic form: dd of the pulled potentials."""
    ctx = SliceContext(v.chart)
    omega_slice = dd(ctx.pull(v.theta))
    if v.theta_bar.is_zero():
        omega_corner = Form.zero(ctx.cchart)
    else:
        bctx = SliceContext(v.bchart)
        omega_corner = dd(bctx.pull(v.theta_bar))
    return omega_slice, omega_corner


# -- lifting space-time vector fields --------------------------------------------------


def lift_vector_field(
    chart: Chart, meta: Mapping[str, FieldMeta], xi
) -> EvolutionaryField:
    """Canonical field-space lift: the Lie derivative of each field along xi.

    Scalars: W^a = xi^m u^a_m; one-form components pick up the coefficient
    gradient: W^{A_mu} = xi^m A_{mu,m} + A_m d_mu xi^m.
    """
    comps = [sp.sympify(c) for c in xi]
    if len(comps) != chart.n:
        raise ValueError("component count mismatch")
    W: dict[str, sp.Expr] = {}
    by_base: dict[tuple[str, int], dict[int, str]] = {}
    for a, m in meta.items():
        if m.kind == "one_form":
            by_base.setdefault((m.base, m.lie_index), {})[m.axis] = a
    for a in chart.fields:
        m = meta.get(a, FieldMeta("scalar"))
        if m.kind == "scalar":
            expr = sp.Integer(0)
            for i in range(chart.n):
                expr += comps[i] * chart.jet(a, MultiIndex.make(i))
            W[a] = expr
        elif m.kind == "one_form":
            expr = sp.Integer(0)
            for i in range(chart.n):
                expr += comps[i] * chart.jet(a, MultiIndex.make(i))
            family = by_base[(m.base, m.lie_index)]
            for nu in range(chart.n):
                expr += chart.jet(family[nu], MultiIndex()) * sp.diff(comps[nu], chart.xs[m.axis])
            W[a] = expr
        else:
            raise ValueError(f"unsupported tensor kind {m.kind!r} (rank > 1 not supported)")
    return EvolutionaryField(chart, W)


def xi_invariance_residual(lp: LagrangianPair, xi, meta: Mapping[str, FieldMeta]) -> RelForm:
    """Background-variation operator applied to the pair: zero iff xi-invariant."""
    W = lift_vector_field(lp.pair.chart, meta, xi)
    rel = RelForm(lp.pair, lp.L, lp.ell)
    return rel_lie(xi, rel) - rel_lie_ev(W.components, rel)


# -- d-symmetries ----------------------------------------------------------------------


@dataclass
class SymmetryVerdict:
    is_symmetry: bool
    S: Form | None
    s_bar: Form | None
    obstruction_bulk: SourceForm | None = None
    obstruction_boundary: Form | None = None
    potential_constructed: bool = True
    note: str = ""


def d_symmetry_check(
    lp: LagrangianPair,
    W: EvolutionaryField,
    xi=None,
    meta: Mapping[str, FieldMeta] | None = None,
) -> SymmetryVerdict:
    """Decide whether W generates a variational symmetry of the pair.

    Accepts W iff the Lie derivative of the pair has identically vanishing
    bulk and boundary sources (exactness decided constructively on the chart).
    The potential (S, s_bar) is produced in closed form on the two routes the
    engine supports: xi-lifts of invariant pairs, and identically vanishing
    Lie derivatives; otherwise the verdict carries a not-constructed note.
    """
    pair = lp.pair
    A = lie_ev(W.components, lp.L)
    Wb = pair.restrict_ev(W.components)
    a_bar = lie_ev(Wb, lp.ell)
    E_A = euler_operator(A) if not A.is_zero() else None
    bulk_exact = A.is_zero() or E_A.is_zero()
    obstruction_boundary = None
    boundary_exact = True
    if bulk_exact:
        try:
            _, thA = integrate_by_parts(A) if not A.is_zero() else (None, Form.zero(pair.chart, pair.chart.n - 1, 1))
            dirich = lp.dirichlet_fields()
            pulledA = kill_dirichlet(pair.pullback(thA), dirich)
            bA, _ = boundary_euler_operator(
                kill_dirichlet(a_bar, dirich), pulledA, dirichlet=dirich
            )
            boundary_exact = bA.is_zero()
            if not boundary_exact:
                obstruction_boundary = bA.paired_with_contacts()
        except NonDecomposableError as err:
            boundary_exact = False
            obstruction_boundary = err.term
    is_symmetry = bulk_exact and boundary_exact
    if not is_symmetry:
        return SymmetryVerdict(
            False, None, None, obstruction_bulk=E_A, obstruction_boundary=obstruction_boundary
        )
    # construct the potential where a closed form is available
    if xi is not None and meta is not None:
        resid = xi_invariance_residual(lp, xi, meta)
        if resid.bulk.is_zero() and resid.boundary.is_zero():
            xibar = pair.restrict_vector(xi)
            return SymmetryVerdict(
                True, iota_x(xi, lp.L), -iota_x(xibar, lp.ell), note="potential = iota_xi(L, ell)"
            )
    if A.is_zero() and a_bar.is_zero():
        return SymmetryVerdict(
            True,
            Form.zero(pair.chart, pair.chart.n - 1, 0),
            Form.zero(pair.bchart, pair.bchart.n - 1, 0),
            note="Lie derivative vanishes identically",
        )
    return SymmetryVerdict(
        True,
        None,
        None,
        potential_constructed=False,
        note="exact by the source test; potential not constructed (general homotopy out of scope)",
    )


# -- Noether currents -------------------------------------------------------------------


@dataclass
class NoetherData:
    """xi-current pair, its potentials, and the flux-identity certificate."""

    J: Form
    j_bar: Form
    S: Form
    s_bar: Form
    identity_residual_bulk: Form
    identity_residual_boundary: Form
    slice_current: Form
    corner_current: Form

    def identity_holds(self) -> bool:
        return self.identity_residual_bulk.is_zero() and self.identity_residual_boundary.is_zero()


def noether_current_xi(
    lp: LagrangianPair,
    v: VariationDecomposition,
    xi,
    meta: Mapping[str, FieldMeta],
) -> NoetherData:
    """xi-current (J, j_bar) = iota_xi (L, ell) - iota_{lift xi} (Theta, theta_bar).

    Certifies the flux identity
        rel_d (J, j_bar) = (L_xi - Lie_lift)(L, ell) + (E_a W^a, b_a W^a)
    exactly; on xi-invariant pairs the first term vanishes and the current is
    conserved on shell.
    """
    pair = lp.pair
    chart, bchart = pair.chart, pair.bchart
    W = lift_vector_field(chart, meta, xi)
    Wb = pair.restrict_ev(W.components)
    xibar = pair.restrict_vector(xi)
    J = iota_x(xi, lp.L) - iota_ev(W.components, v.theta)
    j_bar = -iota_x(xibar, lp.ell) - iota_ev(Wb, v.theta_bar)
    S = iota_x(xi, lp.L)
    s_bar = -iota_x(xibar, lp.ell)

    tilde = xi_invariance_residual(lp, xi, meta)
    bulk_source = Form.zero(chart, chart.n, 0)
    for a in chart.fields:
        bulk_source = bulk_source + v.E.components[a] * W.components[a]
    bnd_source = Form.zero(bchart, bchart.n, 0)
    for a, f in v.b.components.items():
        if not f.is_zero():
            bnd_source = bnd_source + f * Wb.get(a, sp.Integer(0))
    res_bulk = d_h(J) - tilde.bulk - bulk_source
    res_bnd = pair.pullback(J) - d_h(j_bar) - tilde.boundary - bnd_source
    ctx = SliceContext(chart)
    slice_current = ctx.pull(J)
    if j_bar.is_zero():
        corner_current = Form.zero(SliceContext(bchart).schart if bchart.n > 1 else bchart)
    else:
        corner_current = SliceContext(bchart).pull(j_bar) if bchart.n > 1 else j_bar
    return NoetherData(J, j_bar, S, s_bar, res_bulk, res_bnd, slice_current, corner_current)


# -- on-shell ideal ----------------------------------------------------------------------


class OnShellIdeal:
    """Rewriting modulo the equations of motion and their total derivatives.

    Every generator must be solvable for its leading jet (linear, jet-free
    coefficient); reduction substitutes leading jets (and their prolongations)
    to a fixpoint under the chart's jet cap.  Contact factors reduce through
    the linearized rows of the same generators.
    """

    def __init__(self, chart: Chart, equations: list[sp.Expr], strict: bool = False):
        self.chart = chart
        self.rules: list[tuple[str, MultiIndex, sp.Expr]] = []
        self.skipped: list[sp.Expr] = []
        for eq in equations:
            eq = sp.expand(eq)
            if eq == 0:
                continue
            jets = chart.jets_in(eq)
            if not jets:
                raise ValueError(f"equation without jets: {eq}")
            sym, a, mi = max(
                jets, key=lambda t: (t[2].order, t[2].count(0), t[2].entries, t[1])
            )
            c = sp.diff(eq, sym)
            if c.has(sym) or chart.jets_in(c):
                # not solvable for its leading jet: a skipped generator weakens the
                # reduction but never makes it unsound
                if strict:
                    raise ValueError(f"equation not solvable for leading jet {sym}: {eq}")
                self.skipped.append(eq)
                continue
            rhs = sp.expand(-(eq - c * sym) / c)
            self.rules.append((a, mi, rhs))

    def _match(self, a: str, mi: MultiIndex):
        for ra, rmi, rhs in self.rules:
            if ra != a:
                continue
            rem = list(mi.entries)
            ok = True
            for e in rmi.entries:
                if e in rem:
                    rem.remove(e)
                else:
                    ok = False
                    break
            if ok:
                return MultiIndex(tuple(rem)), rhs
        return None

    def reduce_expr(self, e: sp.Expr, max_passes: int = 64) -> sp.Expr:
        e = sp.expand(e)
        for _ in range(max_passes):
            repl = {}
            for sym, a, mi in self.chart.jets_in(e):
                m = self._match(a, mi)
                if m is not None:
                    K, rhs = m
                    repl[sym] = self.chart.total_derivative_multi(K, rhs)
            if not repl:
                return e
            e = sp.expand(e.xreplace(repl))
        raise ArithmeticError("on-shell reduction did not reach a fixpoint")

    def reduce_form(self, f: Form, max_passes: int = 64) -> Form:
        chart = f.chart
        for _ in range(max_passes):
            out_terms: list[tuple[sp.Expr, tuple]] = []
            changed = False
            for word, coeff in f.terms.items():
                new_coeff = self.reduce_expr(coeff)
                if sp.expand(new_coeff - coeff) != 0:
                    changed = True
                replaced = False
                for pos, fac in enumerate(word):
                    if fac[0] != "v":
                        continue
                    m = self._match(fac[1], MultiIndex(fac[2]))
                    if m is None:
                        continue
                    K, rhs = m
                    # linearized rule: th{a, lead+K} = sum_b,J d(D_K rhs)/du^b_J th{b,J}
                    prolonged = self.chart.total_derivative_multi(K, rhs)
                    for sym2, b, mi2 in chart.jets_in(prolonged):
                        dcoef = sp.diff(prolonged, sym2)
                        if dcoef == 0:
                            continue
                        new_word = word[:pos] + (("v", b, mi2.entries),) + word[pos + 1:]
                        out_terms.append((new_coeff * dcoef, new_word))
                    replaced = True
                    changed = True
                    break
                if not replaced:
                    out_terms.append((new_coeff, word))
            f = Form.from_terms(chart, *f._tag, out_terms)
            if not changed:
                return f
        raise ArithmeticError("on-shell form reduction did not reach a fixpoint")


def prolonged_restricted_generators(
    chart: Chart, sub: Chart, axis: int, equations: list[sp.Expr], value=None
) -> list[sp.Expr]:
    """Restrict each generator and its axis-prolongations (up to the jet cap)
    to a hypersurface chart; this is how "all differential consequences" of an
    equation survive the loss of the transversal direction."""
    gens: list[sp.Expr] = []
    for eq in equations:
        if sp.expand(eq) == 0:
            continue
        order = max((mi.order for _, _, mi in chart.jets_in(eq)), default=0)
        bumped = eq
        for k in range(chart.max_jet_order - order + 1):
            gens.append(chart.restrict_expr(bumped, sub, axis, value=value))
            if k < chart.max_jet_order - order:
                bumped = chart.total_derivative(axis, bumped)
    return gens


def slice_ideal(chart: Chart, ctx: SliceContext, equations: list[sp.Expr]) -> OnShellIdeal:
    """The on-shell ideal relabeled to a Cauchy slice, including the time
    prolongations of every generator up to the jet cap."""
    return OnShellIdeal(
        ctx.schart, prolonged_restricted_generators(chart, ctx.schart, 0, equations)
    )


# -- gauge diagnostics --------------------------------------------------------------------


@dataclass
class GaugeResidual:
    bulk: Form
    boundary: Form

    def is_gauge(self) -> bool:
        return self.bulk.is_zero() and self.boundary.is_zero()


def _linearized_row(schart: Chart, c: sp.Expr, gen: sp.Expr):
    """Sweep c * dd(gen) ^ vol on the slice chart: returns (sources, kappa).

    These are the on-shell-trivial source rows (terms proportional to the
    linearized equations, integrated by parts) against which a gauge residual
    is reduced; kappa is the boundary term the integration by parts sheds.
    """
    from .jetcalc import _sweep

    vol_word = tuple(("x", i) for i in range(schart.n))
    raw = []
    for sym, b, mi in schart.jets_in(gen):
        dcoef = sp.diff(gen, sym)
        if dcoef != 0:
            raw.append((c * dcoef, vol_word + (("v", b, mi.entries),)))
    row = Form.from_terms(schart, schart.n, 1, raw)
    if row.is_zero():
        return {}, Form.zero(schart, schart.n - 1, 1)
    return _sweep(row)


def _monomials(src: Mapping[str, sp.Expr]) -> int:
    return sum(len(sp.Add.make_args(sp.expand(e))) for e in src.values() if sp.expand(e) != 0)


def gauge_multiplier_candidates(
    lp: LagrangianPair, ctx: SliceContext, W: EvolutionaryField, xi, meta
) -> list[sp.Expr]:
    """Multipliers for the absorbable rows of a gauge check.

    Lifted vector fields contribute the contractions xi^mu A_mu per one-form
    base (the multiplier of the linearized-equation term their current sheds);
    gauge parameters contribute their function symbols.
    """
    chart = lp.pair.chart
    cands: list[sp.Expr] = []
    if xi is not None and meta is not None:
        comps = [sp.sympify(cc) for cc in xi]
        bases: dict[tuple[str, int], sp.Expr] = {}
        for a, m in meta.items():
            if m.kind == "one_form":
                key = (m.base, m.lie_index)
                bases.setdefault(key, sp.Integer(0))
                bases[key] += comps[m.axis] * chart.jet(a, MultiIndex())
        for e in bases.values():
            cands.append(chart.restrict_expr(e, ctx.schart, 0, value=None))
    funcs = set()
    for e in W.components.values():
        funcs |= sp.sympify(e).atoms(sp.core.function.AppliedUndef)
    cands.extend(sorted(funcs, key=str))
    return [c for c in cands if c != 0]


def gauge_residual(
    lp: LagrangianPair,
    v: VariationDecomposition,
    W: EvolutionaryField,
    xi=None,
    meta: Mapping[str, FieldMeta] | None = None,
    dirichlet: set[str] | None = None,
) -> GaugeResidual:
    """Contract the symplectic current with W, pull to a Cauchy slice, and
    reduce modulo the on-shell ideal.

    The bulk reduction first rewrites coefficients modulo the slice ideal and
    then absorbs source rows proportional to linearized equations (multipliers
    from the structure of W: field contractions for lifts, gauge functions for
    parameter directions), shedding their integration-by-parts boundary terms
    into the corner piece.  The corner piece keeps its contact factors and only
    reduces coefficients modulo the boundary/corner equations, so a surviving
    boundary obstruction is reported verbatim; Dirichlet fields drop their
    corner variations.  Zero in both slots means W is a degenerate direction.
    """
    chart, bchart = lp.pair.chart, lp.pair.bchart
    dirichlet = dirichlet if dirichlet is not None else lp.dirichlet_fields()
    ctx = SliceContext(chart)
    omega = dd(v.theta)
    G = iota_ev(W.components, omega)
    Gs = ctx.pull(G)
    from .jetcalc import _sweep

    src, kappa = _sweep(Gs)
    bulk_eqs = [sp.expand(e) for e in v.equations().values()]
    ideal = slice_ideal(chart, ctx, bulk_eqs)
    src = {a: ideal.reduce_expr(c) for a, c in src.items()}
    src = {a: c for a, c in src.items() if c != 0}
    # absorb rows proportional to linearized equations of motion
    base_gens = [
        chart.restrict_expr(e, ctx.schart, 0, value=None) for e in bulk_eqs if e != 0
    ]
    cands = gauge_multiplier_candidates(lp, ctx, W, xi, meta)
    improved = True
    while improved and src:
        improved = False
        for c in cands:
            for gen in base_gens:
                for alpha in (1, -1):
                    row_src, row_kappa = _linearized_row(ctx.schart, alpha * c, gen)
                    if not row_src:
                        continue
                    trial = dict(src)
                    for a, e in row_src.items():
                        trial[a] = sp.expand(trial.get(a, sp.Integer(0)) - e)
                    trial = {a: ideal.reduce_expr(e) for a, e in trial.items()}
                    trial = {a: e for a, e in trial.items() if e != 0}
                    if _monomials(trial) < _monomials(src):
                        src = trial
                        kappa = kappa - row_kappa
                        improved = True
        if _monomials(src) == 0:
            break
    vol_word = tuple(("x", i) for i in range(ctx.schart.n))
    bulk_res = Form.zero(ctx.schart, ctx.schart.n, 1)
    for a, coeff in sorted(src.items()):
        bulk_res = bulk_res + wedge(
            Form(ctx.schart, ctx.schart.n, 0, {vol_word: coeff}),
            Form.contact(ctx.schart, a),
        )
    # corner piece: the swept-off exact parts restricted to the slice corner,
    # minus the boundary symplectic current contraction
    corner = ctx.corner_pull(kappa)
    if not v.theta_bar.is_zero():
        omega_bar = dd(v.theta_bar)
        Wb = lp.pair.restrict_ev(W.components)
        Gb = iota_ev(Wb, omega_bar)
        bslice = SliceContext(bchart)
        piece = bslice.pull(Gb)
        corner = corner - translate_form(piece, bslice.schart, ctx.cchart)
    corner = kill_dirichlet(corner, dirichlet)
    if not corner.is_zero() and lp.has_boundary:
        cideal = _corner_ideal(lp, v, ctx, bulk_eqs)
        corner = corner.map_coeffs(cideal.reduce_expr)
    return GaugeResidual(bulk_res, corner)


def translate_form(f: Form, src: Chart, dst: Chart) -> Form:
    """Relabel a form between corner charts reached by restriction in either order."""
    from .chart import parse_restricted_label, translate_expr

    raw = []
    for word, coeff in f.terms.items():
        new_word = []
        for fac in word:
            if fac[0] == "x":
                new_word.append(fac)
            else:
                key = parse_restricted_label(fac[1])
                target = next(
                    c for c in dst.fields if parse_restricted_label(c) == key
                )
                new_word.append(("v", target, fac[2]))
        raw.append((translate_expr(coeff, src, dst), tuple(new_word)))
    return Form.from_terms(dst, *f._tag, raw)


def _corner_ideal(
    lp: LagrangianPair, v: VariationDecomposition, ctx: SliceContext, bulk_eqs
) -> OnShellIdeal:
    """On-shell ideal on the slice corner: bulk equations restricted twice
    (with prolongations each time) plus the boundary equations restricted to
    the corner, all relabeled to the canonical corner chart."""
    from .chart import translate_expr

    chart, bchart = lp.pair.chart, lp.pair.bchart
    slice_gens = prolonged_restricted_generators(chart, ctx.schart, 0, bulk_eqs)
    corner_gens = prolonged_restricted_generators(
        ctx.schart, ctx.cchart, ctx.schart.n - 1, slice_gens, value=sp.Integer(0)
    )
    b_eqs = [sp.expand(e) for e in v.boundary_equations().values() if sp.expand(e) != 0]
    if b_eqs:
        bslice = SliceContext(bchart)
        bgens = prolonged_restricted_generators(bchart, bslice.schart, 0, b_eqs)
        corner_gens += [translate_expr(g, bslice.schart, ctx.cchart) for g in bgens]
    gens = [g for g in corner_gens if sp.expand(g) != 0]
    return OnShellIdeal(ctx.cchart, gens)
