"""Relative pair calculus: pullback, differential, wedge, contractions, Cartan."""
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from cpsforge.chart import MultiIndex, NonTangentError
from cpsforge.forms import Form, d_h, iota_x, restrict
from cpsforge.relative import (
    BoundaryPair,
    RelForm,
    rel_d,
    rel_dd,
    rel_integrate_numeric,
    rel_iota,
    rel_lie,
    rel_wedge,
)

from strategies import forms, make_chart

settings.register_profile("relative", max_examples=30, deadline=None)
settings.load_profile("relative")

CH = make_chart(2, ("u", "v"))
PAIR = BoundaryPair(CH)
BCH = PAIR.bchart
T, X = CH.xs
U = CH.jet("u", MultiIndex())


def rel_forms(r, s, max_order=1):
    return st.tuples(
        forms(CH, r, s, max_order=max_order),
        forms(BCH, r - 1, s, max_order=max_order) if r >= 1 else st.just(Form.zero(BCH)),
    ).map(lambda t: RelForm(PAIR, t[0], t[1]))


def rel_degrees():
    return st.tuples(st.integers(1, 2), st.integers(0, 1))


def any_rel_forms(max_order=1):
    return rel_degrees().flatmap(lambda rs: rel_forms(rs[0], rs[1], max_order))


def tangent_fields():
    coeff = st.integers(-2, 2)
    comp = st.tuples(coeff, coeff).map(lambda c: c[0] + c[1] * T)
    return st.tuples(comp, comp).map(lambda c: [c[0], c[1] * X])


class TestPullback:
    def test_normal_one_form_dies(self):
        assert PAIR.pullback(Form.dx(CH, 1)).is_zero()

    def test_tangential_term_restricts(self):
        f = Form.dx(CH, 0) * U
        assert PAIR.pullback(f) == Form.dx(BCH, 0) * BCH.jet("u", MultiIndex())

    def test_transversal_jets_relabel(self):
        ux = CH.jet("u", MultiIndex.make(1))
        f = Form.dx(CH, 0) * ux
        assert PAIR.pullback(f) == Form.dx(BCH, 0) * BCH.jet("u.n1", MultiIndex())

    @given(forms(CH, 1, 1, max_order=2))
    def test_commutes_with_dh(self, f):
        assert PAIR.pullback(d_h(f)) == d_h(PAIR.pullback(f))

    @given(tangent_fields(), forms(CH, 1, 1, max_order=1))
    def test_commutes_with_tangent_contraction(self, xi, f):
        xibar = PAIR.restrict_vector(xi)
        assert PAIR.pullback(iota_x(xi, f)) == iota_x(xibar, PAIR.pullback(f))


class TestRelD:
    def test_bulk_only(self):
        a = Form.dx(CH, 0) * (T * U)
        p = RelForm.make(PAIR, bulk=a)
        out = rel_d(p)
        assert out.bulk == d_h(a)
        assert out.boundary == PAIR.pullback(a)

    def test_boundary_only(self):
        b = Form.scalar(BCH, BCH.jet("u", MultiIndex()))
        p = RelForm(PAIR, Form.zero(CH, 1, 0), b)
        out = rel_d(p)
        assert out.bulk.is_zero()
        assert out.boundary == -d_h(b)

    @given(any_rel_forms(max_order=2))
    def test_squares_to_zero(self, p):
        assert rel_d(rel_d(p)).is_zero()

    @given(any_rel_forms(max_order=1))
    def test_rel_dd_squares_to_zero(self, p):
        assert rel_dd(rel_dd(p)).is_zero()

    def test_degree_bookkeeping_enforced(self):
        with pytest.raises(ValueError):
            RelForm(PAIR, Form.dx(CH, 0), Form.dx(BCH, 0))


class TestRelWedge:
    def test_bulk_pair(self):
        p = RelForm.make(PAIR, bulk=Form.dx(CH, 0))
        q = RelForm.make(PAIR, bulk=Form.dx(CH, 1))
        out = rel_wedge(p, q)
        from cpsforge.forms import wedge

        assert out.bulk == wedge(Form.dx(CH, 0), Form.dx(CH, 1))
        assert out.boundary.is_zero()

    def test_half_factor_with_sign(self):
        # (dx^0, 0) rel-wedge (0, 1) -> (0, -1/2 dt-bar)
        p = RelForm.make(PAIR, bulk=Form.dx(CH, 0))
        q = RelForm(PAIR, Form.zero(CH, 1, 0), Form.scalar(BCH, 1))
        out = rel_wedge(p, q)
        assert out.bulk.is_zero()
        assert out.boundary == Form.dx(BCH, 0) * sp.Rational(-1, 2)

    @given(rel_forms(1, 0), rel_forms(1, 1))
    def test_relative_leibniz(self, p, q):
        lhs = rel_d(rel_wedge(p, q))
        sign = (-1) ** 1  # bulk horizontal degree of p
        rhs = rel_wedge(rel_d(p), q) + rel_wedge(p, rel_d(q)) * sign
        assert lhs == rhs

    @given(rel_forms(1, 0), rel_forms(2, 1))
    def test_graded_commutativity(self, p, q):
        sign = (-1) ** (1 * 2 + 0 * 1)
        assert rel_wedge(p, q) == rel_wedge(q, p) * sign

    def test_not_associative_documented(self):
        # the 1/2-weights break associativity: ((u,0)^(1,0))^(0,1) has boundary u/2,
        # while (u,0)^((1,0)^(0,1)) has boundary u/4
        p = RelForm.make(PAIR, bulk=Form.scalar(CH, U))
        q = RelForm.make(PAIR, bulk=Form.scalar(CH, 1))
        r = RelForm(PAIR, Form.zero(CH), Form.scalar(BCH, 1))
        left = rel_wedge(rel_wedge(p, q), r)
        right = rel_wedge(p, rel_wedge(q, r))
        ub = BCH.jet("u", MultiIndex())
        assert left.boundary == Form.scalar(BCH, ub / 2)
        assert right.boundary == Form.scalar(BCH, ub / 4)
        assert left != right


class TestRelIntegralSurface:
    def test_module_level_entry_point(self):
        import numpy as np
        from cpsforge.chart import Chart
        from cpsforge.numeric import Grid

        ch = Chart(("x",), ("u",), max_jet_order=4)
        pair = BoundaryPair(ch)
        grid = Grid.make(ch, [(0, 1)], (101,))
        p = RelForm(pair, Form.dx(ch, 0) * ch.xs[0], Form.zero(pair.bchart))
        val = rel_integrate_numeric(p, grid, {"u": np.zeros(grid.shape)})
        assert abs(val - 0.5) < 1e-4


class TestRelContraction:
    def test_bulk_slot(self):
        p = RelForm.make(PAIR, bulk=Form.dx(CH, 0))
        out = rel_iota([1, 0], p)
        assert out.bulk == Form.scalar(CH, 1)
        assert out.boundary.is_zero()

    def test_boundary_minus_sign(self):
        p = RelForm(PAIR, Form.zero(CH, 1, 0), Form.scalar(BCH, 1))
        out = rel_iota([1, 0], p)
        assert out.bulk.is_zero()
        # iota of a boundary 0-form is zero; use a boundary 1-form instead
        p = RelForm(PAIR, Form.zero(CH, 2, 0), Form.dx(BCH, 0))
        out = rel_iota([1, 0], p)
        assert out.boundary == Form.scalar(BCH, -1)

    def test_non_tangent_rejected(self):
        p = RelForm.make(PAIR, bulk=Form.dx(CH, 1))
        with pytest.raises(NonTangentError):
            rel_iota([0, 1], p)

    @given(tangent_fields(), any_rel_forms(max_order=1))
    def test_relative_cartan(self, xi, p):
        lhs = rel_lie(xi, p)
        rhs = rel_iota(xi, rel_d(p)) + rel_d(rel_iota(xi, p))
        assert lhs == rhs

    @given(tangent_fields(), any_rel_forms(max_order=1))
    def test_lie_commutes_with_rel_d(self, xi, p):
        assert rel_lie(xi, rel_d(p)) == rel_d(rel_lie(xi, p))
