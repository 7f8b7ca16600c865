"""Bigraded differential forms on a jet chart.

A ``Form`` is a finite sum of terms ``coeff * word`` where the word is a
strictly sorted wedge of horizontal generators ``dx^i`` and vertical (contact)
generators ``th{u_J}``.  The global basis order is dx^0 < ... < dx^{n-1} <
contact generators ordered by (field, multi-index).  A word with r horizontal
and s vertical factors has bidegree (r, s); most forms are homogeneous, but
mixed contractions are allowed to produce inhomogeneous sums (the word always
carries the true grading, and every operator acts term-by-term).

Sign conventions.  The wedge is graded-commutative with the double-grading sign

    f ^ g = (-1)^(r_f r_g + s_f s_g) g ^ f,

so horizontal and vertical generators commute with each other while generators
of like type anticommute.  On this algebra the consistent left-Leibniz signs
are per-grading, and the primitive operators are the commuting-convention pair:

    d_h   : (r,s) -> (r+1,s)   Leibniz sign (-1)^r,    d_h d_h = 0
    dd    : (r,s) -> (r,s+1)   Leibniz sign (-1)^s,    dd dd = 0,  d_h dd = dd d_h
    iota_x: horizontal slot sign (-1)^r, contact slot sign (-1)^s
    iota_ev: (r,s) -> (r,s-1)  Leibniz sign (-1)^s,    iota_ev d_h = d_h iota_ev
    lie_x  = iota_x d_h + d_h iota_x        lie_ev = iota_ev dd + dd iota_ev

The anticommuting-convention views differ by the usual (-1)^r twist and are
exposed as ``d_v_anti = (-1)^r dd`` and ``iota_ev_anti = (-1)^r iota_ev``; for
those the identities d_h d_v_anti + d_v_anti d_h = 0 and
iota_ev_anti d_h + d_h iota_ev_anti = 0 hold exactly.
"""
from __future__ import annotations

from typing import Callable, Iterable, Mapping

import sympy as sp

from .chart import Chart, MultiIndex, levi_civita

# factor encodings: ("x", axis) horizontal, ("v", field, entries) vertical
Factor = tuple
Word = tuple


def _factor_sort_key(f: Factor):
    if f[0] == "x":
        return (0, f[1], "", ())
    return (1, 0, f[1], f[2])


def word_bidegree(word: Word) -> tuple[int, int]:
    r = sum(1 for f in word if f[0] == "x")
    return (r, len(word) - r)


def _sort_word(raw: Iterable[Factor]) -> tuple[Word, int]:
    """Canonically sort a raw factor sequence.

    Returns (word, sign); the sign counts only transpositions of like-type
    factors (cross-type factors commute).  A repeated factor gives sign 0.
    """
    raw = list(raw)
    hs = [f for f in raw if f[0] == "x"]
    vs = [f for f in raw if f[0] != "x"]
    sign = 1
    for part in (hs, vs):
        m = len(part)
        for i in range(m):
            for j in range(m - 1 - i):
                ka, kb = _factor_sort_key(part[j]), _factor_sort_key(part[j + 1])
                if ka == kb:
                    return tuple(), 0
                if ka > kb:
                    part[j], part[j + 1] = part[j + 1], part[j]
                    sign = -sign
    return tuple(hs + vs), sign


def _norm_coeff(e: sp.Expr) -> sp.Expr:
    return sp.expand(e)


class Form:
    """Immutable linear combination of wedge words with Expr coefficients."""

    __slots__ = ("chart", "_tag", "terms")

    def __init__(self, chart: Chart, r: int = 0, s: int = 0, terms: Mapping[Word, sp.Expr] | None = None):
        self.chart = chart
        self._tag = (r, s)
        collected: dict[Word, sp.Expr] = {}
        for word, coeff in (terms or {}).items():
            c = _norm_coeff(sp.sympify(coeff))
            if c == 0:
                continue
            if word in collected:
                c = _norm_coeff(collected[word] + c)
                if c == 0:
                    del collected[word]
                    continue
            collected[word] = c
        self.terms = collected

    # -- constructors ------------------------------------------------------------------

    @staticmethod
    def zero(chart: Chart, r: int = 0, s: int = 0) -> "Form":
        return Form(chart, r, s)

    @staticmethod
    def scalar(chart: Chart, expr) -> "Form":
        return Form(chart, 0, 0, {(): sp.sympify(expr)})

    @staticmethod
    def dx(chart: Chart, axis: int) -> "Form":
        return Form(chart, 1, 0, {(("x", axis),): sp.Integer(1)})

    @staticmethod
    def contact(chart: Chart, field: str, mi: MultiIndex = MultiIndex()) -> "Form":
        chart.jet(field, mi)  # validates field and jet cap
        return Form(chart, 0, 1, {(("v", field, mi.entries),): sp.Integer(1)})

    @staticmethod
    def from_terms(chart: Chart, r: int, s: int, raw_terms: Iterable[tuple[sp.Expr, Iterable[Factor]]]) -> "Form":
        acc: dict[Word, sp.Expr] = {}
        for coeff, raw in raw_terms:
            word, sign = _sort_word(tuple(raw))
            if sign == 0:
                continue
            acc[word] = acc.get(word, sp.Integer(0)) + sign * coeff
        return Form(chart, r, s, acc)

    # -- bookkeeping -------------------------------------------------------------------

    @property
    def bidegree(self) -> tuple[int, int]:
        """Common bidegree of all terms (the construction tag for the zero form)."""
        degs = {word_bidegree(w) for w in self.terms}
        if not degs:
            return self._tag
        if len(degs) > 1:
            raise ValueError(f"inhomogeneous form: bidegrees {sorted(degs)}")
        return degs.pop()

    @property
    def r(self) -> int:
        return self.bidegree[0]

    @property
    def s(self) -> int:
        return self.bidegree[1]

    def is_zero(self) -> bool:
        return not self.terms

    def is_homogeneous(self) -> bool:
        return len({word_bidegree(w) for w in self.terms}) <= 1

    def iter_terms(self):
        for word in sorted(self.terms, key=lambda w: (len(w), tuple(_factor_sort_key(f) for f in w))):
            yield word, self.terms[word]

    def normalize(self) -> "Form":
        """Idempotent canonical representative (construction already canonicalizes)."""
        return Form(self.chart, *self._tag, self.terms)

    def map_coeffs(self, fn: Callable[[sp.Expr], sp.Expr]) -> "Form":
        return Form(self.chart, *self._tag, {w: fn(c) for w, c in self.terms.items()})

    def subs(self, mapping) -> "Form":
        return self.map_coeffs(lambda c: c.subs(mapping))

    def jet_order(self) -> int:
        order = 0
        for word, coeff in self.terms.items():
            order = max(order, self.chart.jet_order(coeff))
            for f in word:
                if f[0] == "v":
                    order = max(order, len(f[2]))
        return order

    # -- algebra -----------------------------------------------------------------------

    def __add__(self, other: "Form") -> "Form":
        if self.chart is not other.chart:
            raise ValueError("forms live on different charts")
        tag = self._tag if self.terms or not other.terms else other._tag
        acc = dict(self.terms)
        for w, c in other.terms.items():
            acc[w] = acc.get(w, sp.Integer(0)) + c
        return Form(self.chart, *tag, acc)

    def __sub__(self, other: "Form") -> "Form":
        return self + (other * -1)

    def __mul__(self, scalar) -> "Form":
        if isinstance(scalar, Form):
            raise TypeError("use wedge() for form products")
        c = sp.sympify(scalar)
        return Form(self.chart, *self._tag, {w: c * v for w, v in self.terms.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "Form":
        return self * -1

    def __eq__(self, other) -> bool:
        if not isinstance(other, Form):
            return NotImplemented
        if self.chart is not other.chart:
            return False
        diff = self - other
        return all(sp.expand(c) == 0 for c in diff.terms.values())

    def __hash__(self):
        raise TypeError("Form is not hashable")

    def __repr__(self):
        return f"Form{self._pretty_degree()}: {self}"

    def _pretty_degree(self) -> str:
        try:
            return str(self.bidegree)
        except ValueError:
            return "(mixed)"

    def __str__(self):
        if not self.terms:
            return "0"
        chart = self.chart
        parts = []
        for word, coeff in self.iter_terms():
            factors = []
            for f in word:
                if f[0] == "x":
                    factors.append("d" + chart.coord_names[f[1]])
                else:
                    factors.append("th{%s}" % chart.pretty_jet(chart.jet(f[1], MultiIndex(f[2]))))
            cs = sp.sstr(coeff)
            if factors:
                parts.append(f"({cs}) {'^'.join(factors)}")
            else:
                parts.append(f"({cs})")
        return " + ".join(parts)


# -- wedge ---------------------------------------------------------------------------


def wedge(f: Form, g: Form) -> Form:
    """Wedge product; graded-commutative with the double-grading sign.

    Horizontal overflow needs no special case: a word with more than n
    horizontal factors repeats one and collapses to zero.
    """
    if f.chart is not g.chart:
        raise ValueError("forms live on different charts")
    acc: dict[Word, sp.Expr] = {}
    for wf, cf in f.terms.items():
        for wg, cg in g.terms.items():
            word, sign = _sort_word(wf + wg)
            if sign == 0:
                continue
            acc[word] = acc.get(word, sp.Integer(0)) + sign * cf * cg
    rf, sf = f._tag
    rg, sg = g._tag
    return Form(f.chart, rf + rg, sf + sg, acc)


def wedge_all(*forms: Form) -> Form:
    out = forms[0]
    for f in forms[1:]:
        out = wedge(out, f)
    return out


def wedge_power(f: Form, k: int) -> Form:
    out = Form.scalar(f.chart, 1)
    for _ in range(k):
        out = wedge(out, f)
    return out


# -- differentials -------------------------------------------------------------------


def d_h(f: Form) -> Form:
    """Horizontal differential; (r,s) -> (r+1,s)."""
    chart = f.chart
    raw_terms: list[tuple[sp.Expr, tuple]] = []
    for word, coeff in f.terms.items():
        r, _ = word_bidegree(word)
        for i in range(chart.n):
            dc = chart.total_derivative(i, coeff)
            if dc != 0:
                raw_terms.append((dc, (("x", i),) + word))
        sign = (-1) ** r
        for pos, fac in enumerate(word):
            if fac[0] != "v":
                continue
            a, mi = fac[1], MultiIndex(fac[2])
            for i in range(chart.n):
                bumped = ("v", a, mi.union(i).entries)
                chart.jet(a, mi.union(i))  # jet-cap check
                raw = word[:pos] + (("x", i), bumped) + word[pos + 1:]
                raw_terms.append((sign * coeff, raw))
    r0, s0 = f._tag
    return Form.from_terms(chart, r0 + 1, s0, raw_terms)


def dd(f: Form) -> Form:
    """Vertical (field-space) differential; (r,s) -> (r,s+1); commutes with d_h."""
    chart = f.chart
    raw_terms: list[tuple[sp.Expr, tuple]] = []
    for word, coeff in f.terms.items():
        hs = tuple(fac for fac in word if fac[0] == "x")
        vs = tuple(fac for fac in word if fac[0] == "v")
        for sym, a, mi in chart.jets_in(coeff):
            dc = sp.diff(coeff, sym)
            if dc != 0:
                raw_terms.append((dc, hs + (("v", a, mi.entries),) + vs))
    r0, s0 = f._tag
    return Form.from_terms(chart, r0, s0 + 1, raw_terms)


def d_v_anti(f: Form) -> Form:
    """Anticommuting-convention vertical differential: (-1)^r dd, term by term."""
    chart = f.chart
    acc: dict[Word, sp.Expr] = {}
    r0, s0 = f._tag
    for word, coeff in f.terms.items():
        r, _ = word_bidegree(word)
        piece = dd(Form(chart, r0, s0, {word: coeff}))
        for w, c in piece.terms.items():
            acc[w] = acc.get(w, sp.Integer(0)) + (-1) ** r * c
    return Form(chart, r0, s0 + 1, acc)


# -- contractions --------------------------------------------------------------------


def _check_xi(chart: Chart, xi) -> list[sp.Expr]:
    comps = [sp.sympify(c) for c in xi]
    if len(comps) != chart.n:
        raise ValueError(f"vector field needs {chart.n} components, got {len(comps)}")
    for c in comps:
        for sym in c.atoms(sp.Symbol):
            if chart.is_jet(sym):
                raise ValueError("jet-dependent vector fields are not supported")
    return comps


def iota_x(xi, f: Form) -> Form:
    """Contraction with the coordinate vector field xi^i d/dx^i.

    Horizontal slots contract to xi^i (antiderivation in the horizontal
    grading); contact generators contract through their dx expansion,
    iota th{u_J} = -u_{J+m} xi^m (antiderivation in the vertical grading).
    """
    chart = f.chart
    comps = _check_xi(chart, xi)
    raw: list[tuple[sp.Expr, tuple]] = []
    for word, coeff in f.terms.items():
        hseen = vseen = 0
        for pos, fac in enumerate(word):
            rest = word[:pos] + word[pos + 1:]
            if fac[0] == "x":
                val = comps[fac[1]]
                if val != 0:
                    raw.append(((-1) ** hseen * coeff * val, rest))
                hseen += 1
            else:
                a, mi = fac[1], MultiIndex(fac[2])
                val = sp.Integer(0)
                for m in range(chart.n):
                    if comps[m] != 0:
                        val -= comps[m] * chart.jet(a, mi.union(m))
                if val != 0:
                    raw.append(((-1) ** vseen * coeff * val, rest))
                vseen += 1
    r0, s0 = f._tag
    return Form.from_terms(chart, max(r0 - 1, 0), s0, raw)


def iota_total(xi, f: Form) -> Form:
    """Contraction with the total lift xi^i D_i (annihilates contact generators)."""
    chart = f.chart
    comps = _check_xi(chart, xi)
    raw: list[tuple[sp.Expr, tuple]] = []
    for word, coeff in f.terms.items():
        hseen = 0
        for pos, fac in enumerate(word):
            if fac[0] != "x":
                continue
            val = comps[fac[1]]
            if val != 0:
                raw.append(((-1) ** hseen * coeff * val, word[:pos] + word[pos + 1:]))
            hseen += 1
    r0, s0 = f._tag
    return Form.from_terms(chart, max(r0 - 1, 0), s0, raw)


def iota_ev(W: Mapping[str, sp.Expr], f: Form) -> Form:
    """Contraction with the prolongation of the evolutionary field W.

    Contact slots contract to D_J W^a, horizontal slots are annihilated;
    vertical-grading antiderivation (Leibniz sign (-1)^s).
    """
    chart = f.chart
    raw: list[tuple[sp.Expr, tuple]] = []
    for word, coeff in f.terms.items():
        vseen = 0
        for pos, fac in enumerate(word):
            if fac[0] != "v":
                continue
            a, mi = fac[1], MultiIndex(fac[2])
            if a in W:
                val = chart.total_derivative_multi(mi, sp.sympify(W[a]))
                if val != 0:
                    raw.append(((-1) ** vseen * coeff * val, word[:pos] + word[pos + 1:]))
            vseen += 1
    r0, s0 = f._tag
    return Form.from_terms(chart, r0, max(s0 - 1, 0), raw)


def iota_ev_anti(W: Mapping[str, sp.Expr], f: Form) -> Form:
    """Anticommuting-convention evolutionary contraction: (-1)^r iota_ev, term by term."""
    chart = f.chart
    r0, s0 = f._tag
    out = Form.zero(chart, r0, max(s0 - 1, 0))
    for word, coeff in f.terms.items():
        r, _ = word_bidegree(word)
        piece = iota_ev(W, Form(chart, r0, s0, {word: coeff}))
        out = out + piece * ((-1) ** r)
    return out


# -- Lie derivatives -----------------------------------------------------------------


def lie_x(xi, f: Form) -> Form:
    """Lie derivative along xi via the horizontal Cartan formula.

    On purely horizontal forms this is the classical coordinate Lie derivative
    with total-derivative coefficients, which is the evaluation-compatible one.
    """
    return iota_x(xi, d_h(f)) + d_h(iota_x(xi, f))


def lie_ev(W: Mapping[str, sp.Expr], f: Form) -> Form:
    """Evolutionary Lie derivative: bidegree preserving, commutes with d_h and dd."""
    return iota_ev(W, dd(f)) + dd(iota_ev(W, f))


# -- metric machinery ----------------------------------------------------------------


def vol(chart: Chart) -> Form:
    """Metric volume form sqrt|det g| dx^0 ^ ... ^ dx^{n-1} (coefficient 1 if no metric)."""
    coeff = sp.Integer(1)
    if chart.metric is not None:
        coeff = sp.sqrt(sp.Abs(chart.metric_det()))
    word = tuple(("x", i) for i in range(chart.n))
    return Form(chart, chart.n, 0, {word: coeff})


def hodge(f: Form) -> Form:
    """Hodge star on horizontal forms, for the chart's constant diagonal metric."""
    chart = f.chart
    g = chart.require_metric()
    root = sp.sqrt(sp.Abs(chart.metric_det()))
    acc: dict[Word, sp.Expr] = {}
    k = None
    for word, coeff in f.terms.items():
        r, s = word_bidegree(word)
        if s != 0:
            raise ValueError("hodge star implemented on horizontal forms only")
        k = r
        idx = [fac[1] for fac in word]
        comp = [i for i in range(chart.n) if i not in idx]
        sign = levi_civita(*(idx + comp))
        scale = sp.Mul(*[sp.Integer(1) / g[i] for i in idx])
        val = sign * scale * root * coeff
        if val != 0:
            new_word = tuple(("x", i) for i in comp)
            acc[new_word] = acc.get(new_word, sp.Integer(0)) + val
    r0, _ = f._tag
    return Form(chart, chart.n - (k if k is not None else r0), 0, acc)


def boundary_volume(chart: Chart, bchart: Chart) -> Form:
    """Oriented lateral-boundary volume form (outward normal along +x^{n-1})."""
    g = chart.require_metric()
    gnn = g[-1]
    eps = sp.sign(gnn)
    coeff = eps * (-1) ** (chart.n - 1) * sp.sqrt(sp.Abs(chart.metric_det() / gnn))
    word = tuple(("x", i) for i in range(bchart.n))
    return Form(bchart, bchart.n, 0, {word: sp.nsimplify(coeff)})


def slice_volume(chart: Chart, schart: Chart) -> Form:
    """Oriented Cauchy-slice volume form (future normal along +x^0; note the extra minus)."""
    g = chart.require_metric()
    gtt = g[0]
    coeff = -sp.sign(gtt) * sp.sqrt(sp.Abs(chart.metric_det() / gtt))
    word = tuple(("x", i) for i in range(schart.n))
    return Form(schart, schart.n, 0, {word: sp.nsimplify(coeff)})


# -- restriction ----------------------------------------------------------------------


def restrict(f: Form, axis: int, sub: Chart, value: sp.Expr | None = None) -> Form:
    """Pull a form back to the hypersurface {x^axis = value}.

    Words containing dx^axis are dropped; transversal jets (in coefficients and
    in contact generators) are relabeled to the restricted chart's derivative
    families; remaining horizontal axes are renumbered.  The transversal
    coordinate stays an inert symbol unless a pin value is supplied.
    """
    chart = f.chart
    raw: list[tuple[sp.Expr, tuple]] = []
    for word, coeff in f.terms.items():
        if any(fac[0] == "x" and fac[1] == axis for fac in word):
            continue
        new_word = []
        for fac in word:
            if fac[0] == "x":
                new_word.append(("x", fac[1] - 1 if fac[1] > axis else fac[1]))
            else:
                mi = MultiIndex(fac[2])
                kept, k = mi.split_axis(axis)
                rf = chart.restricted_label(fac[1], k, sub)
                new_word.append(("v", rf, kept.shift_down(axis).entries))
        raw.append((chart.restrict_expr(coeff, sub, axis, value), tuple(new_word)))
    r0, s0 = f._tag
    return Form.from_terms(sub, max(r0 - 1, 0), s0, raw)


def section_pullback(f: Form, phi: Mapping[str, sp.Expr]) -> Form:
    """Pull back along the prolonged section u^a = phi^a(x).

    Contact generators are expanded in the du/dx basis and evaluated on the
    section, so any contact factor collapses to zero after simplification.
    """
    chart = f.chart

    def section_sub(e: sp.Expr) -> sp.Expr:
        repl = {}
        for sym, a, mi in chart.jets_in(e):
            base = sp.sympify(phi[a])
            for ax in mi:
                base = sp.diff(base, chart.xs[ax])
            repl[sym] = base
        return e.xreplace(repl)

    out = Form.zero(chart, 0, 0)
    for word, coeff in f.terms.items():
        piece = Form.scalar(chart, section_sub(coeff))
        for fac in word:
            if fac[0] == "x":
                piece = wedge(piece, Form.dx(chart, fac[1]))
            else:
                a, mi = fac[1], MultiIndex(fac[2])
                one_form = Form.zero(chart, 1, 0)
                for m in range(chart.n):
                    d_section = sp.diff(section_sub(chart.jet(a, mi)), chart.xs[m])
                    jet_val = section_sub(chart.jet(a, mi.union(m)))
                    one_form = one_form + Form.dx(chart, m) * (d_section - jet_val)
                piece = wedge(piece, one_form)
        out = out + piece
    return out
