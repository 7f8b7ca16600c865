"""Model-aware numeric cross-checks: FD variation, slice drift, flux, Hamiltonian."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import sympy as sp

from .chart import MultiIndex
from .model import Model
from .numeric import (
    FieldState,
    Grid,
    contract_two_vertical,
    fd_variation_residual,
    slice_integral_density,
    wave_solver,
)
from .pipeline import (
    SliceContext,
    decompose,
    noether_current_xi,
    slice_presymplectic,
    xi_invariance_residual,
)


def make_grid(model: Model, shape) -> Grid:
    periodic = tuple(c in model.periodic for c in model.coords)
    return Grid.make(model.chart, model.domain, tuple(shape), periodic=periodic)


class AnalyticState:
    """Field state with exact symbolic jets (spectral-exact evaluation)."""

    def __init__(self, grid: Grid, exprs: dict[str, sp.Expr]):
        self.grid = grid
        self.exprs = {a: sp.sympify(e) for a, e in exprs.items()}
        self.values = {a: self._eval(e) for a, e in self.exprs.items()}
        self._jets: dict[tuple[str, tuple], np.ndarray] = {}

    def _eval(self, e: sp.Expr) -> np.ndarray:
        mesh = self.grid.mesh()
        xs = self.grid.chart.xs
        fn = sp.lambdify(xs, e, modules="numpy")
        return np.broadcast_to(fn(*mesh), self.grid.shape).astype(float)

    def jet(self, field: str, mi: MultiIndex) -> np.ndarray:
        key = (field, mi.entries)
        got = self._jets.get(key)
        if got is None:
            e = self.exprs[field]
            for ax in mi:
                e = sp.diff(e, self.grid.chart.xs[ax])
            got = self._eval(e)
            self._jets[key] = got
        return got


def bump_array(t: np.ndarray, lo: float, hi: float) -> np.ndarray:
    s = (t - lo) * (hi - t)
    out = np.zeros_like(t)
    mask = s > 0
    out[mask] = np.exp(-1.0 / s[mask])
    m = out.max()
    return out / m if m > 0 else out


@dataclass
class FdCheckResult:
    rows: list[tuple[float, float]]  # (eps, residual)
    slope: float
    ablated_rows: list[tuple[float, float]]


def fd_check(model: Model, shape=(129, 129), eps_list=(1e-2, 1e-3, 1e-4), ablate=True) -> FdCheckResult:
    """Central-difference action variation against the symbolic sources."""
    grid = make_grid(model, shape)
    v = decompose(model.lp)
    chart, bchart = model.chart, model.pair.bchart
    from .numeric import boundary_density

    E_coeffs = {a: sp.expand(e) for a, e in v.equations().items()}
    b_dens = {a: boundary_density(chart, bchart, f) for a, f in v.b.components.items()}
    tt, xx = grid.mesh()
    state = FieldState(grid, {a: np.sin(2 * tt + 1) * np.cos(3 * xx) for a in chart.fields})
    vpert = {a: bump_array(tt, 0.15, 0.85) * (1 + 0.3 * np.cos(2 * xx)) for a in chart.fields}
    rows, ablated = [], []
    for eps in eps_list:
        r = fd_variation_residual(
            model.lp.L, model.lp.ell if model.has_boundary else None,
            E_coeffs, b_dens, grid, state, vpert, eps,
            bchart=bchart, bindings=model.bindings,
        )
        rows.append((eps, r))
        if ablate and model.has_boundary and not model.lp.ell.is_zero():
            r2 = fd_variation_residual(
                model.lp.L, model.lp.ell, E_coeffs, b_dens, grid, state, vpert, eps,
                bchart=bchart, bindings=model.bindings, include_boundary=False,
            )
            ablated.append((eps, r2))
    slope = (np.log10(rows[0][1]) - np.log10(rows[-1][1])) / (
        np.log10(eps_list[-1]) - np.log10(eps_list[0])
    ) * -1.0
    return FdCheckResult(rows, float(slope), ablated)


def standing_wave_state(model: Model, grid: Grid, k: int = 1) -> AnalyticState:
    t, x = model.chart.xs
    return AnalyticState(grid, {"u": sp.cos(k * t) * sp.sin(k * x)})


def spectral_tangents(model: Model, grid: Grid) -> tuple[AnalyticState, AnalyticState]:
    # a conjugate left-mover pair (nonzero symplectic product) plus spectators
    t, x = model.chart.xs
    d1 = AnalyticState(grid, {"u": sp.cos(x - t) + sp.Rational(1, 2) * sp.sin(2 * (x + t))})
    d2 = AnalyticState(grid, {"u": sp.sin(x - t) - sp.cos(3 * (x + t))})
    return d1, d2


def solve_model(model: Model, grid: Grid, initial, velocity) -> FieldState:
    """Leapfrog solve of a scalar model; the potential derivative is read off
    the symbolic Euler source."""
    v = decompose(model.lp)
    chart = model.chart
    utt = chart.jet("u", MultiIndex.make(0, 0))
    uxx = chart.jet("u", MultiIndex.make(1, 1))
    u = chart.jet("u", MultiIndex())
    vp_expr = sp.expand(v.equations()["u"] - utt + uxx)
    for s in vp_expr.free_symbols:
        if chart.is_jet(s) and s != u:
            raise ValueError("solver supports potentials depending on the field value only")
    vp_expr = vp_expr.subs({sp.Symbol(k): val for k, val in model.bindings.items()})
    vp = sp.lambdify(u, vp_expr, modules="numpy") if vp_expr != 0 else None
    bcs = model.lp.bc.get("u", "free")
    bc = {"free": "neumann", "robin": "robin", "dirichlet": "dirichlet"}[bcs]
    if not model.has_boundary:
        bc = "periodic"
    robin_f = float(model.bindings.get("f", 0.0))
    arr = wave_solver(
        grid, initial, velocity, bc=bc, robin_f=robin_f,
        potential_derivative=(lambda w: vp(w) + 0 * w) if vp else None,
    )
    return FieldState(grid, {"u": arr})


@dataclass
class SliceDriftResult:
    values: list[float]
    drift: float


def slice_independence(model: Model, shape=(129, 256), mode="spectral", nslices=5) -> SliceDriftResult:
    """Presymplectic pairing across Cauchy slices; returns values and max drift."""
    grid = make_grid(model, shape)
    v = decompose(model.lp)
    om_slice, om_corner = slice_presymplectic(v)
    if not om_corner.is_zero():
        raise NotImplementedError("corner contributions to the slice pairing are not evaluated")
    chart = model.chart
    schart = SliceContext(chart).schart
    if mode == "spectral":
        d1, d2 = spectral_tangents(model, grid)
        base = standing_wave_state(model, grid)
    else:
        nt, nx = grid.shape
        x = grid.axis_points(1)
        base = solve_model(model, grid, np.cos(x), np.zeros_like(x))
        # conjugate standing-wave pairs (shared modes, quater-period phase shift)
        d1 = solve_model(model, grid, np.cos(2 * x) + 0.3 * np.cos(x), np.zeros_like(x))
        d2 = solve_model(model, grid, np.zeros_like(x), 2 * np.cos(2 * x) - np.cos(x))
    nt = grid.shape[0]
    idxs = np.linspace(nt // 8, nt - 1 - nt // 8, nslices).astype(int)
    vals = [
        contract_two_vertical(chart, schart, om_slice, grid, base, int(i), d1, d2,
                              bindings=model.bindings)
        for i in idxs
    ]
    drift = max(abs(x - vals[0]) for x in vals)
    scale = max(1.0, max(abs(x) for x in vals))
    return SliceDriftResult(vals, drift / scale)


def hamiltonian_comparison(model: Model, shape=(129, 256)) -> tuple[float, float, float]:
    """Step-6 check: slice pairing vs the canonical pairing with p = normal derivative."""
    grid = make_grid(model, shape)
    v = decompose(model.lp)
    om_slice, _ = slice_presymplectic(v)
    chart = model.chart
    schart = SliceContext(chart).schart
    d1, d2 = spectral_tangents(model, grid)
    base = standing_wave_state(model, grid)
    k = grid.shape[0] // 2
    val = contract_two_vertical(chart, schart, om_slice, grid, base, k, d1, d2,
                               bindings=model.bindings)
    # canonical pairing on the same slice
    w = np.full(grid.shape[1], grid.spacing(1))
    if not grid.periodic[1]:
        w[0] = w[-1] = grid.spacing(1) / 2
    t0 = MultiIndex.make(0)
    f1, p1 = d1.jet("u", MultiIndex())[k], d1.jet("u", t0)[k]
    f2, p2 = d2.jet("u", MultiIndex())[k], d2.jet("u", t0)[k]
    canonical = float(np.sum(w * (f1 * p2 - f2 * p1)))
    return val, canonical, abs(val - canonical)


@dataclass
class FluxResult:
    q_values: list[float]
    delta_q: float
    rhs: float
    mismatch: float


def flux_check(model: Model, xi_name: str, shape=(257, 256), state: FieldState | None = None) -> FluxResult:
    """Charge difference between two slices against the background-variation term."""
    grid = make_grid(model, shape)
    xi = model.vectors[xi_name]
    v = decompose(model.lp)
    data = noether_current_xi(model.lp, v, xi, model.meta)
    if not data.corner_current.is_zero():
        raise NotImplementedError("corner charge contributions are not evaluated numerically")
    if state is None:
        state = standing_wave_state(model, grid)
    chart = model.chart
    ctx = SliceContext(chart)
    nt = grid.shape[0]
    i1, i2 = nt // 8, nt - 1 - nt // 8
    qs = [
        slice_integral_density(chart, ctx.schart, data.slice_current, grid, state, i,
                               bindings=model.bindings)
        for i in (i1, i2)
    ]
    delta_q = qs[1] - qs[0]
    # right-hand side: the background-variation term integrated over the slab
    tilde = xi_invariance_residual(model.lp, xi, model.meta)
    rhs = 0.0
    if not tilde.bulk.is_zero():
        word = tuple(("x", i) for i in range(chart.n))
        coeff = tilde.bulk.terms.get(word, sp.Integer(0))
        from .numeric import eval_bulk_expr

        vals = eval_bulk_expr(chart, coeff, grid, state, model.bindings)
        wt = np.full(grid.shape[0], grid.spacing(0))
        wt[0] = wt[-1] = grid.spacing(0) / 2
        mask = np.zeros(grid.shape[0])
        mask[i1:i2 + 1] = 1.0
        wt = wt * mask
        wt[i1] = grid.spacing(0) / 2
        wt[i2] = grid.spacing(0) / 2
        wx = np.full(grid.shape[1], grid.spacing(1))
        if not grid.periodic[1]:
            wx[0] = wx[-1] = grid.spacing(1) / 2
        rhs = float(np.sum(np.multiply.outer(wt, wx) * vals))
    if not tilde.boundary.is_zero() and model.has_boundary:
        raise NotImplementedError("lateral flux contributions require boundary terms")
    return FluxResult(qs, delta_q, rhs, abs(delta_q - rhs))
