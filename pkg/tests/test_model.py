"""DSL parsing, round trips, and positioned errors."""
import pathlib

import pytest
import sympy as sp

from cpsforge.model import ModelError, parse_model, print_model

CORPUS = pathlib.Path(__file__).resolve().parents[1] / "src" / "cpsforge" / "corpus"


def corpus_files():
    return sorted(CORPUS.glob("*.cps"))


@pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.stem)
def test_roundtrip(path):
    m1 = parse_model(path.read_text())
    m2 = parse_model(print_model(m1))
    assert str(m1.lp.L) == str(m2.lp.L)
    assert str(m1.lp.ell) == str(m2.lp.ell)
    assert m1.coords == m2.coords
    assert m1.bc == m2.bc
    assert {k: [sp.sstr(c) for c in v] for k, v in m1.vectors.items()} == {
        k: [sp.sstr(c) for c in v] for k, v in m2.vectors.items()
    }
    assert [sp.sstr(c) for c in m1.constraints] == [sp.sstr(c) for c in m2.constraints]


BASE = """
model demo {
  chart { coords = t, x; boundary = true; }
  fields { %s }
  background { metric = diag(-1, 1); }
  lagrangian { L = %s; ell = 0; }
}
"""


class TestErrors:
    def test_no_fields(self):
        with pytest.raises(ModelError, match="no dynamical fields"):
            parse_model(BASE % ("", "vol()"))

    def test_wedge_degree_overflow(self):
        with pytest.raises(ModelError, match="exceeds the chart dimension"):
            parse_model(BASE % ("u : scalar;", "wedge(vol(), vol())"))

    def test_unknown_symbol_position(self):
        text = BASE % ("u : scalar;", "q * vol()")
        with pytest.raises(ModelError, match="unknown symbol 'q'"):
            parse_model(text)

    def test_sum_degree_mismatch(self):
        with pytest.raises(ModelError, match="degree mismatch"):
            parse_model(BASE % ("u : scalar;", "vol() + d(u)"))

    def test_wrong_lagrangian_degree(self):
        with pytest.raises(ModelError, match="top horizontal form"):
            parse_model(BASE % ("u : scalar;", "d(u)"))

    def test_non_tangent_vector(self):
        text = """
model demo {
  chart { coords = t, x; boundary = true; }
  fields { u : scalar; }
  background { metric = diag(-1, 1); }
  lagrangian { L = u * vol(); ell = 0; }
  vectors { dx = (0, 1); }
}
"""
        with pytest.raises(ModelError, match="not tangent"):
            parse_model(text)

    def test_bvol_in_bulk_rejected(self):
        with pytest.raises(ModelError, match="bvol"):
            parse_model(BASE % ("u : scalar;", "bvol()"))


class TestResolution:
    def test_jet_names(self):
        text = BASE % ("u : scalar;", "(u_t**2 - u_{xx} * u) * vol()")
        m = parse_model(text)
        ch = m.chart
        from cpsforge.chart import MultiIndex

        ut = ch.jet("u", MultiIndex.make(0))
        uxx = ch.jet("u", MultiIndex.make(1, 1))
        u = ch.jet("u", MultiIndex())
        word = (("x", 0), ("x", 1))
        assert sp.expand(m.lp.L.terms[word] - (ut**2 - uxx * u)) == 0

    def test_one_form_components(self):
        text = """
model demo {
  chart { coords = t, x; boundary = true; }
  fields { A : one_form; }
  lagrangian { L = wedge(A, d(A_t) ) * 0 + wedge(A, A) * 0 + A_x * vol(); ell = 0; }
}
"""
        m = parse_model(text)
        assert "A_t" in m.chart.fields and "A_x" in m.chart.fields

    def test_su2_components(self):
        m = parse_model((CORPUS / "yang_mills_su2_n2.cps").read_text())
        assert "A1_t" in m.chart.fields and "A3_x" in m.chart.fields
        assert m.lie_dim["A"] == 3

    def test_formal_function_and_binding(self):
        m = parse_model((CORPUS / "scalar_robin_const.cps").read_text())
        assert m.bindings["f"] == 0.5
