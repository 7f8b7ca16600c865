"""Coordinate charts, jet symbols, and restriction (boundary / Cauchy slice) maps.

A chart fixes coordinate names, the declared dynamical fields, a jet-order cap
and an optional constant diagonal metric.  Jet variables ``u^a_J`` are plain
sympy symbols managed here, named ``<field>__<coords>`` with the multi-index
spelled as a sorted run of coordinate names (so ``u__tx`` is the mixed second
jet of ``u``).  Restriction to a hypersurface {axis = const} relabels jets with
transversal entries to independent fields of the restricted chart:
``u.n1`` / ``u.t1`` are the first normal / time derivative families produced by
restricting along the last / first axis.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Iterable

import sympy as sp


class JetOrderError(ValueError):
    """A jet symbol beyond the chart's configured maximum order was requested."""


class NonTangentError(ValueError):
    """A vector field used in a relative operation is not tangent to the boundary."""


@dataclass(frozen=True, order=True)
class MultiIndex:
    """Sorted multiset of coordinate axis indices; {1,2} == {2,1}."""

    entries: tuple[int, ...] = ()

    @staticmethod
    def make(*indices: int) -> "MultiIndex":
        return MultiIndex(tuple(sorted(indices)))

    def __post_init__(self):
        if tuple(sorted(self.entries)) != self.entries:
            object.__setattr__(self, "entries", tuple(sorted(self.entries)))

    @property
    def order(self) -> int:
        return len(self.entries)

    def union(self, axis: int) -> "MultiIndex":
        return MultiIndex(tuple(sorted(self.entries + (axis,))))

    def count(self, axis: int) -> int:
        return self.entries.count(axis)

    def remove_one(self, axis: int) -> "MultiIndex":
        entries = list(self.entries)
        entries.remove(axis)
        return MultiIndex(tuple(entries))

    def split_axis(self, axis: int) -> tuple["MultiIndex", int]:
        """Return (entries without `axis`, multiplicity of `axis`)."""
        kept = tuple(e for e in self.entries if e != axis)
        return MultiIndex(kept), self.order - len(kept)

    def shift_down(self, axis: int) -> "MultiIndex":
        """Re-number entries after deleting `axis` from the coordinate list."""
        return MultiIndex(tuple(e - 1 if e > axis else e for e in self.entries))

    def __iter__(self):
        return iter(self.entries)

    def __str__(self):
        return "{" + ",".join(str(e) for e in self.entries) + "}"


class Chart:
    """A single coordinate chart with declared fields and jet bookkeeping."""

    def __init__(
        self,
        coords: Iterable[str],
        fields: Iterable[str],
        max_jet_order: int = 4,
        metric: Iterable[sp.Expr] | None = None,
    ):
        self.coord_names: tuple[str, ...] = tuple(coords)
        if len(set(self.coord_names)) != len(self.coord_names):
            raise ValueError("duplicate coordinate names")
        self.n = len(self.coord_names)
        self.xs: tuple[sp.Symbol, ...] = tuple(
            sp.Symbol(c, real=True) for c in self.coord_names
        )
        self.fields: tuple[str, ...] = tuple(fields)
        if len(set(self.fields)) != len(self.fields):
            raise ValueError("duplicate field names")
        self.max_jet_order = max_jet_order
        # metric: constant diagonal entries g_00..g_{n-1,n-1}; None = no metric declared
        self.metric: tuple[sp.Expr, ...] | None = (
            tuple(sp.sympify(m) for m in metric) if metric is not None else None
        )
        self._jet_by_symbol: dict[sp.Symbol, tuple[str, MultiIndex]] = {}
        self._jet_by_key: dict[tuple[str, MultiIndex], sp.Symbol] = {}
        for a in self.fields:
            self.jet(a, MultiIndex())

    # -- jet symbols -----------------------------------------------------------------

    def jet(self, field: str, mi: MultiIndex) -> sp.Symbol:
        """The jet symbol u^field_mi (cached; errors beyond the jet cap)."""
        key = (field, mi)
        sym = self._jet_by_key.get(key)
        if sym is not None:
            return sym
        if field not in self.fields:
            raise KeyError(f"unknown field {field!r}")
        if mi.order > self.max_jet_order:
            raise JetOrderError(
                f"jet {field}_{mi} exceeds max jet order {self.max_jet_order}"
            )
        suffix = "".join(self.coord_names[i] for i in mi)
        name = field if not suffix else f"{field}__{suffix}"
        sym = sp.Symbol(name, real=True)
        self._jet_by_key[key] = sym
        self._jet_by_symbol[sym] = key
        return sym

    def jet_key(self, sym: sp.Symbol) -> tuple[str, MultiIndex] | None:
        return self._jet_by_symbol.get(sym)

    def is_jet(self, sym: sp.Symbol) -> bool:
        return sym in self._jet_by_symbol

    def jets_in(self, expr: sp.Expr) -> list[tuple[sp.Symbol, str, MultiIndex]]:
        """All jet symbols occurring in expr, deterministically ordered."""
        out = []
        for sym in expr.atoms(sp.Symbol):
            key = self._jet_by_symbol.get(sym)
            if key is not None:
                out.append((sym, key[0], key[1]))
        out.sort(key=lambda t: (t[1], t[2].order, t[2].entries))
        return out

    def jet_order(self, expr: sp.Expr) -> int:
        orders = [mi.order for _, _, mi in self.jets_in(expr)]
        return max(orders, default=0)

    def pretty_jet(self, sym: sp.Symbol) -> str:
        key = self._jet_by_symbol.get(sym)
        if key is None:
            return str(sym)
        field, mi = key
        if mi.order == 0:
            return field
        return f"{field}_" + "".join(self.coord_names[i] for i in mi)

    # -- derivatives -----------------------------------------------------------------

    def total_derivative(self, axis: int, expr: sp.Expr) -> sp.Expr:
        """Total derivative D_axis: chain rule through x^axis and every jet symbol."""
        expr = sp.sympify(expr)
        out = sp.diff(expr, self.xs[axis])
        for sym, field, mi in self.jets_in(expr):
            d = sp.diff(expr, sym)
            if d != 0:
                out += self.jet(field, mi.union(axis)) * d
        return out

    def total_derivative_multi(self, mi: MultiIndex, expr: sp.Expr) -> sp.Expr:
        out = sp.sympify(expr)
        for axis in mi:
            out = self.total_derivative(axis, out)
        return out

    # -- metric helpers ----------------------------------------------------------------

    def require_metric(self) -> tuple[sp.Expr, ...]:
        if self.metric is None:
            raise ValueError("chart declares no metric")
        return self.metric

    def metric_det(self) -> sp.Expr:
        g = self.require_metric()
        return sp.prod(g)

    # -- restriction -------------------------------------------------------------------

    def restricted(self, axis: int, tag: str | None = None) -> "Chart":
        """Chart of the hypersurface {x^axis = const}.

        Fields: every bulk field, plus transversal-derivative families
        ``<field>.n<k>`` (boundary role) or ``<field>.t<k>`` (Cauchy-slice
        role) up to the jet cap.  The restricted metric is the induced
        (deleted-axis) diagonal.
        """
        tag = tag or ("n" if axis == self.n - 1 else "t")
        cache = getattr(self, "_restricted_cache", None)
        if cache is None:
            cache = {}
            self._restricted_cache = cache
        got = cache.get((axis, tag))
        if got is not None:
            return got
        coords = tuple(c for i, c in enumerate(self.coord_names) if i != axis)
        fields = []
        for a in self.fields:
            fields.append(a)
            for k in range(1, self.max_jet_order + 1):
                fields.append(f"{a}.{tag}{k}")
        metric = None
        if self.metric is not None:
            metric = tuple(m for i, m in enumerate(self.metric) if i != axis)
        sub = Chart(coords, fields, max_jet_order=self.max_jet_order, metric=metric)
        sub.restriction_tag = tag
        cache[(axis, tag)] = sub
        return sub

    @staticmethod
    def restricted_label(field: str, transversal_order: int, sub: "Chart") -> str:
        if transversal_order == 0:
            return field
        tag = getattr(sub, "restriction_tag", "n")
        return f"{field}.{tag}{transversal_order}"

    def restrict_expr(
        self, expr: sp.Expr, sub: "Chart", axis: int, value: sp.Expr | None = None
    ) -> sp.Expr:
        """Relabel jets of expr for the restricted chart.

        The transversal coordinate symbol is kept inert unless a pin value is
        given (the numeric layer binds it per face; the pipeline pins it to the
        canonical face).
        """
        repl = {}
        for sym, field, mi in self.jets_in(expr):
            kept, k = mi.split_axis(axis)
            rfield = self.restricted_label(field, k, sub)
            repl[sym] = sub.jet(rfield, kept.shift_down(axis))
        if value is not None:
            repl[self.xs[axis]] = sp.sympify(value)
        return expr.xreplace(repl)


def parse_restricted_label(label: str) -> tuple[str, int, int]:
    """Decompose a (possibly twice-)restricted field label.

    Returns (base, normal_order, time_order); tags compose additively, so
    'u.t1.n2' and 'u.n2.t1' both parse to ('u', 2, 1).
    """
    parts = label.split(".")
    base = parts[0]
    n_ord = t_ord = 0
    for tag in parts[1:]:
        if tag.startswith("n"):
            n_ord += int(tag[1:])
        elif tag.startswith("t"):
            t_ord += int(tag[1:])
        else:
            raise ValueError(f"unparsable restriction tag {tag!r} in {label!r}")
    return base, n_ord, t_ord


def translate_expr(expr: sp.Expr, src: "Chart", dst: "Chart") -> sp.Expr:
    """Relabel the jets of expr between charts whose restricted-field labels
    differ only in tag composition order (e.g. corner charts reached via
    slice-then-boundary vs boundary-then-slice)."""
    repl = {}
    for sym, field, mi in src.jets_in(expr):
        base, n_ord, t_ord = parse_restricted_label(field)
        target = None
        for cand in dst.fields:
            if parse_restricted_label(cand) == (base, n_ord, t_ord):
                target = cand
                break
        if target is None:
            raise KeyError(f"no field in target chart matching {field!r}")
        repl[sym] = dst.jet(target, mi)
    return expr.xreplace(repl)


@functools.lru_cache(maxsize=None)
def _perm_sign(perm: tuple[int, ...]) -> int:
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def levi_civita(*indices: int) -> int:
    """Sign of the permutation given by indices; 0 on repeats."""
    if len(set(indices)) != len(indices):
        return 0
    order = tuple(sorted(range(len(indices)), key=lambda k: indices[k]))
    return _perm_sign(order)
