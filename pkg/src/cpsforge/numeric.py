"""Discretized cross-validation of the symbolic outputs.

Grids are uniform boxes (n = 1 or 2).  Numeric jets are repeated applications
of one summation-by-parts first-derivative operator per axis (central interior,
one-sided edges, trapezoid norm), so discrete summation by parts is exact and
the finite-difference action-variation residual is purely O(eps^2).  Boundary
face integrals carry the section-2.6 orientations: the lateral volume is
outward-oriented (density integrals are plain positive quadrature of the
outward-normal binding), and raw chart-form face integrals carry the
outward-first sign (-1)^axis per max-side face.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np
import sympy as sp

from .chart import Chart, MultiIndex
from .forms import Form, boundary_volume


# -- grid ------------------------------------------------------------------------------


@dataclass
class Grid:
    """Uniform tensor grid over the chart's coordinate box."""

    chart: Chart
    extents: tuple[tuple[float, float], ...]
    shape: tuple[int, ...]
    periodic: tuple[bool, ...]
    lateral_sides: tuple[int, ...] = (-1, +1)

    def __post_init__(self):
        if self.chart.n != len(self.extents) or self.chart.n != len(self.shape):
            raise ValueError("grid shape/extents do not match the chart dimension")
        if self.chart.n not in (1, 2):
            raise ValueError("numeric grids support n in {1, 2}")
        if self.periodic[self.chart.n - 1]:
            object.__setattr__(self, "lateral_sides", ())

    @staticmethod
    def make(chart: Chart, extents, shape, periodic=None, lateral_sides=(-1, +1)) -> "Grid":
        periodic = tuple(periodic) if periodic is not None else (False,) * chart.n
        return Grid(
            chart,
            tuple(tuple(map(float, e)) for e in extents),
            tuple(shape),
            periodic,
            tuple(lateral_sides),
        )

    def axis_points(self, k: int) -> np.ndarray:
        a, b = self.extents[k]
        m = self.shape[k]
        if self.periodic[k]:
            return a + (b - a) * np.arange(m) / m
        return np.linspace(a, b, m)

    def spacing(self, k: int) -> float:
        a, b = self.extents[k]
        m = self.shape[k]
        return (b - a) / m if self.periodic[k] else (b - a) / (m - 1)

    def mesh(self) -> list[np.ndarray]:
        pts = [self.axis_points(k) for k in range(self.chart.n)]
        return list(np.meshgrid(*pts, indexing="ij"))

    def weights(self) -> np.ndarray:
        ws = []
        for k in range(self.chart.n):
            h = self.spacing(k)
            w = np.full(self.shape[k], h)
            if not self.periodic[k]:
                w[0] = w[-1] = h / 2
            ws.append(w)
        out = ws[0]
        for w in ws[1:]:
            out = np.multiply.outer(out, w)
        return out

    def diff(self, arr: np.ndarray, axis: int) -> np.ndarray:
        """SBP first derivative along an axis (periodic: central everywhere)."""
        h = self.spacing(axis)
        if self.periodic[axis]:
            return (np.roll(arr, -1, axis=axis) - np.roll(arr, 1, axis=axis)) / (2 * h)
        out = np.empty_like(arr, dtype=float)
        sl = [slice(None)] * arr.ndim

        def at(i):
            s = sl.copy()
            s[axis] = i
            return tuple(s)

        out[at(slice(1, -1))] = (arr[at(slice(2, None))] - arr[at(slice(0, -2))]) / (2 * h)
        out[at(0)] = (arr[at(1)] - arr[at(0)]) / h
        out[at(-1)] = (arr[at(-1)] - arr[at(-2)]) / h
        return out


class FieldState:
    """Per-field arrays on a grid, with cached SBP jet arrays."""

    def __init__(self, grid: Grid, values: Mapping[str, np.ndarray]):
        self.grid = grid
        self.values = {a: np.asarray(v, dtype=float) for a, v in values.items()}
        for a, v in self.values.items():
            if v.shape != grid.shape:
                raise ValueError(f"field {a!r} has shape {v.shape}, grid is {grid.shape}")
        self._jets: dict[tuple[str, tuple], np.ndarray] = {}

    def jet(self, field: str, mi: MultiIndex) -> np.ndarray:
        key = (field, mi.entries)
        got = self._jets.get(key)
        if got is not None:
            return got
        if mi.order == 0:
            arr = self.values[field]
        else:
            prev = self.jet(field, MultiIndex(mi.entries[:-1]))
            arr = self.grid.diff(prev, mi.entries[-1])
        self._jets[key] = arr
        return arr

    def perturbed(self, field: str, delta: np.ndarray, eps: float) -> "FieldState":
        vals = dict(self.values)
        vals[field] = vals[field] + eps * delta
        return FieldState(self.grid, vals)


# -- expression evaluation ---------------------------------------------------------------


def eval_bulk_expr(
    chart: Chart,
    expr: sp.Expr,
    grid: Grid,
    state: FieldState,
    bindings: Mapping[str, float] | None = None,
):
    """Evaluate a jet expression to an array on the grid."""
    expr = sp.sympify(expr)
    if expr.atoms(sp.Derivative) or expr.atoms(sp.core.function.AppliedUndef):
        raise ValueError(f"expression contains unbound formal functions: {expr}")
    mesh = grid.mesh()
    args, vals = [], []
    for sym in sorted(expr.free_symbols, key=lambda s: s.name):
        args.append(sym)
        key = chart.jet_key(sym)
        if key is not None:
            vals.append(state.jet(key[0], key[1]))
        elif sym in chart.xs:
            vals.append(mesh[chart.xs.index(sym)])
        elif bindings and sym.name in bindings:
            vals.append(bindings[sym.name])
        else:
            raise KeyError(f"no numeric binding for symbol {sym}")
    if not args:
        return float(expr) * np.ones(grid.shape)
    fn = sp.lambdify(args, expr, modules="numpy")
    return np.broadcast_to(fn(*vals), grid.shape).astype(float)


class FaceBinding:
    """Evaluate boundary-chart expressions on a lateral face.

    Normal-derivative families bind to outward normal derivatives when
    ``outward=True`` (model-derived densities) and to raw +axis derivatives
    otherwise (chart pullbacks, used by the relative Stokes oracle).
    """

    def __init__(self, chart: Chart, bchart: Chart, axis: int, side: int, outward: bool = True):
        self.chart = chart
        self.bchart = bchart
        self.axis = axis
        self.side = side  # +1: max face, -1: min face
        self.outward = outward

    def _face_index(self, grid: Grid):
        return -1 if self.side > 0 else 0

    def _bulk_axes(self) -> list[int]:
        return [i for i in range(self.chart.n) if i != self.axis]

    def restrict_array(self, grid: Grid, arr: np.ndarray) -> np.ndarray:
        sl = [slice(None)] * self.chart.n
        sl[self.axis] = self._face_index(grid)
        return arr[tuple(sl)]

    def eval(self, expr: sp.Expr, grid: Grid, state: FieldState, bindings=None) -> np.ndarray:
        expr = sp.sympify(expr)
        if expr.atoms(sp.Derivative) or expr.atoms(sp.core.function.AppliedUndef):
            raise ValueError(f"expression contains unbound formal functions: {expr}")
        mesh = grid.mesh()
        args, vals = [], []
        baxes = self._bulk_axes()
        for sym in sorted(expr.free_symbols, key=lambda s: s.name):
            args.append(sym)
            key = self.bchart.jet_key(sym)
            if key is not None:
                label, mi = key
                base, k = label, 0
                if "." in label:
                    base, tag = label.split(".")
                    k = int(tag[1:])
                bulk_mi = MultiIndex(
                    tuple(baxes[i] for i in mi.entries) + (self.axis,) * k
                )
                arr = state.jet(base, bulk_mi)
                sgn = self.side**k if self.outward else 1
                vals.append(sgn * self.restrict_array(grid, arr))
            elif sym in self.bchart.xs:
                i = self.bchart.xs.index(sym)
                vals.append(self.restrict_array(grid, mesh[baxes[i]]))
            elif sym == self.chart.xs[self.axis]:
                vals.append(self.restrict_array(grid, mesh[self.axis]))
            elif bindings and sym.name in bindings:
                vals.append(bindings[sym.name])
            else:
                raise KeyError(f"no numeric binding for boundary symbol {sym}")
        shape = tuple(grid.shape[i] for i in baxes) or (1,)
        if not args:
            return float(expr) * np.ones(shape)
        fn = sp.lambdify(args, expr, modules="numpy")
        return np.broadcast_to(fn(*vals), shape).astype(float)

    def face_weights(self, grid: Grid) -> np.ndarray:
        ws = []
        for k in self._bulk_axes():
            h = grid.spacing(k)
            w = np.full(grid.shape[k], h)
            if not grid.periodic[k]:
                w[0] = w[-1] = h / 2
            ws.append(w)
        if not ws:
            return np.ones((1,))
        out = ws[0]
        for w in ws[1:]:
            out = np.multiply.outer(out, w)
        return out


def _top_coeff(form: Form) -> sp.Expr:
    n = form.chart.n
    word = tuple(("x", i) for i in range(n))
    extra = [w for w in form.terms if w != word]
    if extra:
        raise ValueError("expected a top-degree horizontal form")
    return form.terms.get(word, sp.Integer(0))


def bulk_integral(form: Form, grid: Grid, state: FieldState, bindings=None) -> float:
    coeff = _top_coeff(form)
    vals = eval_bulk_expr(form.chart, coeff, grid, state, bindings)
    return float(np.sum(grid.weights() * vals))


def lateral_faces(grid: Grid) -> list[int]:
    axis = grid.chart.n - 1
    return [] if grid.periodic[axis] else list(grid.lateral_sides)


def boundary_density(chart: Chart, bchart: Chart, form: Form) -> sp.Expr:
    """Coefficient of a boundary form relative to the oriented boundary volume."""
    if form.is_zero():
        return sp.Integer(0)
    word = tuple(("x", i) for i in range(bchart.n))
    base = boundary_volume(chart, bchart).terms[word]
    return sp.expand(form.terms.get(word, sp.Integer(0)) / base)


def lateral_density_integral(
    chart: Chart,
    bchart: Chart,
    form: Form,
    grid: Grid,
    state: FieldState,
    bindings=None,
) -> float:
    """Integral of a model-derived boundary form over all lateral faces.

    The form is interpreted as density * oriented boundary volume on each face,
    with the outward normal-derivative binding; the result is the sum of plain
    positive-quadrature face integrals of the density.
    """
    density = boundary_density(chart, bchart, form)
    total = 0.0
    axis = chart.n - 1
    for side in lateral_faces(grid):
        fb = FaceBinding(chart, bchart, axis, side, outward=True)
        vals = fb.eval(density, grid, state, bindings)
        total += float(np.sum(fb.face_weights(grid) * vals))
    return total


def raw_face_integral(
    chart: Chart,
    bchart: Chart,
    form: Form,
    grid: Grid,
    state: FieldState,
    bindings=None,
) -> float:
    """Oriented integral of a raw lateral-chart form over both lateral faces.

    Uses the raw +axis jet binding and the outward-first orientation sign
    (-1)^axis on the max face (opposite on the min face); this is the Stokes
    -compatible face integral for chart pullbacks.
    """
    if form.is_zero():
        return 0.0
    word = tuple(("x", i) for i in range(bchart.n))
    coeff = form.terms.get(word, sp.Integer(0))
    axis = chart.n - 1
    o_max = (-1) ** axis
    total = 0.0
    for side in lateral_faces(grid):
        fb = FaceBinding(chart, bchart, axis, side, outward=False)
        vals = fb.eval(coeff, grid, state, bindings)
        o = o_max if side > 0 else -o_max
        total += o * float(np.sum(fb.face_weights(grid) * vals))
    return total


def relative_integral(p, grid: Grid, fields, bindings=None) -> float:
    """Relative integral: bulk quadrature minus oriented boundary-face quadrature."""
    state = fields if isinstance(fields, FieldState) else FieldState(grid, fields)
    total = bulk_integral(p.bulk, grid, state, bindings)
    total -= raw_face_integral(p.pair.chart, p.pair.bchart, p.boundary, grid, state, bindings)
    return total


def flux_through_boundary(
    form: Form, grid: Grid, state: FieldState, bindings=None, faces: str = "all"
) -> float:
    """Oriented boundary flux of a bulk (n-1, 0) form, evaluated face-natively.

    For each face {x^k = const} only word components without dx^k survive; the
    outward-first orientation contributes side * (-1)^k per face.  This is the
    Stokes-faithful flux (no canonical-chart round trip).
    """
    chart = form.chart
    mesh = grid.mesh()
    total = 0.0
    for axis in range(chart.n):
        if grid.periodic[axis]:
            continue
        if faces == "lateral" and axis != chart.n - 1:
            continue
        sides = lateral_faces(grid) if axis == chart.n - 1 else [-1, +1]
        for side in sides:
            idx = -1 if side > 0 else 0
            sl = [slice(None)] * chart.n
            sl[axis] = idx
            sl = tuple(sl)
            ws = []
            for k in range(chart.n):
                if k == axis:
                    continue
                h = grid.spacing(k)
                w = np.full(grid.shape[k], h)
                if not grid.periodic[k]:
                    w[0] = w[-1] = h / 2
                ws.append(w)
            w = ws[0] if ws else np.ones(())
            for wk in ws[1:]:
                w = np.multiply.outer(w, wk)
            orient = side * (-1) ** axis
            for word, coeff in form.terms.items():
                if any(f[0] == "v" for f in word):
                    raise ValueError("flux expects a horizontal form")
                if any(f[1] == axis for f in word):
                    continue
                vals = eval_bulk_expr(chart, coeff, grid, state, bindings)[sl]
                total += orient * float(np.sum(w * vals))
    return total


def relative_stokes_residual(pair, Y: Form, z: Form, grid: Grid, state: FieldState, bindings=None) -> float:
    """|integral over (M, dM) of rel_d(Y, z)|, with the bulk flux of Y evaluated
    face-natively and the boundary z integrated over the lateral faces (z is
    expected to vanish near the corners; v1 treats boundary faces separately)."""
    from .forms import d_h

    total = bulk_integral(d_h(Y), grid, state, bindings)
    total -= flux_through_boundary(Y, grid, state, bindings)
    if not z.is_zero():
        total += raw_face_integral(pair.chart, pair.bchart, d_h(z), grid, state, bindings)
    return abs(total)


# -- action and variation ------------------------------------------------------------


def action_value(
    L: Form,
    ell: Form | None,
    grid: Grid,
    state: FieldState,
    bchart: Chart | None = None,
    bindings=None,
) -> float:
    """Relative action: bulk Lagrangian quadrature minus lateral boundary term."""
    total = bulk_integral(L, grid, state, bindings)
    if ell is not None and not ell.is_zero():
        total -= lateral_density_integral(L.chart, bchart, ell, grid, state, bindings)
    return total


def source_pairing(
    E_coeffs: Mapping[str, sp.Expr],
    b_densities: Mapping[str, sp.Expr],
    grid: Grid,
    state: FieldState,
    perturbations: Mapping[str, np.ndarray],
    bchart: Chart | None = None,
    bindings=None,
    include_boundary: bool = True,
) -> float:
    """<E, v> over the bulk minus <b, v> over the lateral faces."""
    chart = grid.chart
    total = 0.0
    w = grid.weights()
    for a, v in perturbations.items():
        e = E_coeffs.get(a, sp.Integer(0))
        if e != 0:
            total += float(np.sum(w * eval_bulk_expr(chart, e, grid, state, bindings) * v))
    if include_boundary and bchart is not None:
        axis = chart.n - 1
        for a, v in perturbations.items():
            dens = b_densities.get(a, sp.Integer(0))
            if dens == 0:
                continue
            for side in lateral_faces(grid):
                fb = FaceBinding(chart, bchart, axis, side, outward=True)
                vals = fb.eval(dens, grid, state, bindings)
                vface = fb.restrict_array(grid, v)
                total -= float(np.sum(fb.face_weights(grid) * vals * vface))
    return total


def fd_variation_residual(
    L: Form,
    ell: Form | None,
    E_coeffs: Mapping[str, sp.Expr],
    b_densities: Mapping[str, sp.Expr],
    grid: Grid,
    state: FieldState,
    perturbations: Mapping[str, np.ndarray],
    eps: float,
    bchart: Chart | None = None,
    bindings=None,
    include_boundary: bool = True,
) -> float:
    """|central FD of the action - source pairing| for one epsilon."""

    def shifted(sgn: float) -> FieldState:
        vals = dict(state.values)
        for a, v in perturbations.items():
            vals[a] = vals[a] + sgn * eps * v
        return FieldState(grid, vals)

    sp_ = action_value(L, ell, grid, shifted(+1), bchart, bindings)
    sm_ = action_value(L, ell, grid, shifted(-1), bchart, bindings)
    fd = (sp_ - sm_) / (2 * eps)
    pair = source_pairing(
        E_coeffs, b_densities, grid, state, perturbations, bchart, bindings, include_boundary
    )
    return abs(fd - pair)


# -- slices ---------------------------------------------------------------------------


class SliceBinding:
    """Evaluate slice-chart expressions on {t = t_index} (raw time-jet binding)."""

    def __init__(self, chart: Chart, schart: Chart, t_index: int):
        self.chart = chart
        self.schart = schart
        self.t_index = t_index

    def eval(self, expr: sp.Expr, grid: Grid, state: FieldState, bindings=None) -> np.ndarray:
        fb = FaceBinding(self.chart, self.schart, 0, +1, outward=False)
        fb._face_index = lambda grid: self.t_index  # fixed interior slice
        return fb.eval(expr, grid, state, bindings)

    def weights(self, grid: Grid) -> np.ndarray:
        ws = []
        for k in range(1, grid.chart.n):
            h = grid.spacing(k)
            w = np.full(grid.shape[k], h)
            if not grid.periodic[k]:
                w[0] = w[-1] = h / 2
            ws.append(w)
        if not ws:
            return np.ones((1,))
        out = ws[0]
        for w in ws[1:]:
            out = np.multiply.outer(out, w)
        return out


def slice_integral_density(
    chart: Chart,
    schart: Chart,
    form: Form,
    grid: Grid,
    state: FieldState,
    t_index: int,
    bindings=None,
) -> float:
    """Integral over a Cauchy slice of a slice-chart top form (vol_gamma-positive)."""
    if form.is_zero():
        return 0.0
    word = tuple(("x", i) for i in range(schart.n))
    coeff = form.terms.get(word, sp.Integer(0))
    g = chart.metric or (1,) * chart.n
    scale = float(sp.sqrt(sp.Abs(sp.prod(g) / g[0])))
    sb = SliceBinding(chart, schart, t_index)
    vals = sb.eval(sp.expand(coeff / scale), grid, state, bindings)
    return float(scale * np.sum(sb.weights(grid) * vals))


def contract_two_vertical(
    chart: Chart,
    schart: Chart,
    form: Form,
    grid: Grid,
    state: FieldState,
    t_index: int,
    tangent1: FieldState,
    tangent2: FieldState,
    bindings=None,
) -> float:
    """Evaluate a slice (n-1,2) form on two field-space tangents and integrate.

    Each term c * w ^ th{a_J} ^ th{b_K} contributes
    c * (D_J t1^a D_K t2^b - D_J t2^a D_K t1^b) integrated over the slice.
    """
    sb = SliceBinding(chart, schart, t_index)
    w = sb.weights(grid)
    total = 0.0
    word_x = tuple(("x", i) for i in range(schart.n))

    def tjet(tan: FieldState, label: str, mi: MultiIndex) -> np.ndarray:
        base, k = label, 0
        if "." in label:
            base, tag = label.split(".")
            k = int(tag[1:])
        bulk_mi = MultiIndex(tuple(e + 1 for e in mi.entries) + (0,) * k)
        arr = tan.jet(base, bulk_mi)
        sl = [slice(None)] * chart.n
        sl[0] = t_index
        return arr[tuple(sl)]

    for word, coeff in form.terms.items():
        vfacs = [f for f in word if f[0] == "v"]
        xfacs = tuple(f for f in word if f[0] == "x")
        if len(vfacs) != 2 or xfacs != word_x:
            raise ValueError("expected a top-slice form with two contact factors")
        (a, ja), (b, jb) = (vfacs[0][1], MultiIndex(vfacs[0][2])), (
            vfacs[1][1],
            MultiIndex(vfacs[1][2]),
        )
        cvals = sb.eval(coeff, grid, state, bindings)
        pair = tjet(tangent1, a, ja) * tjet(tangent2, b, jb) - tjet(tangent2, a, ja) * tjet(
            tangent1, b, jb
        )
        total += float(np.sum(w * cvals * pair))
    return total


# -- wave solver ------------------------------------------------------------------------


def wave_solver(
    grid: Grid,
    initial: np.ndarray,
    initial_velocity: np.ndarray,
    bc: str = "neumann",
    robin_f: float = 0.0,
    potential_derivative: Callable[[np.ndarray], np.ndarray] | None = None,
) -> np.ndarray:
    """Leapfrog integration of u_tt = u_xx - V'(u) on the grid's (t, x) box.

    bc: 'dirichlet' | 'neumann' | 'robin' | 'periodic' lateral stencils
    (Robin: outward derivative equals robin_f * u).  Raises on CFL violation.
    """
    nt, nx = grid.shape
    dt, dx = grid.spacing(0), grid.spacing(1)
    if dt > dx:
        raise ValueError(f"CFL violation: dt={dt} > dx={dx}")
    vp = potential_derivative or (lambda u: 0.0 * u)
    u = np.zeros(grid.shape)
    u[0] = initial

    def laplacian(row: np.ndarray) -> np.ndarray:
        lap = np.empty_like(row)
        lap[1:-1] = (row[2:] - 2 * row[1:-1] + row[:-2]) / dx**2
        if bc == "periodic":
            lap[0] = (row[1] - 2 * row[0] + row[-1]) / dx**2
            lap[-1] = (row[0] - 2 * row[-1] + row[-2]) / dx**2
        elif bc == "dirichlet":
            lap[0] = lap[-1] = 0.0
        elif bc == "neumann":
            lap[0] = 2 * (row[1] - row[0]) / dx**2
            lap[-1] = 2 * (row[-2] - row[-1]) / dx**2
        elif bc == "robin":
            ghost_l = row[1] + 2 * dx * robin_f * row[0]
            ghost_r = row[-2] + 2 * dx * robin_f * row[-1]
            lap[0] = (row[1] - 2 * row[0] + ghost_l) / dx**2
            lap[-1] = (ghost_r - 2 * row[-1] + row[-2]) / dx**2
        else:
            raise ValueError(f"unknown boundary condition {bc!r}")
        return lap

    acc0 = laplacian(u[0]) - vp(u[0])
    u[1] = u[0] + dt * initial_velocity + dt**2 / 2 * acc0
    if bc == "dirichlet":
        u[1, 0] = u[1, -1] = 0.0
    for k in range(1, nt - 1):
        acc = laplacian(u[k]) - vp(u[k])
        u[k + 1] = 2 * u[k] - u[k - 1] + dt**2 * acc
        if bc == "dirichlet":
            u[k + 1, 0] = u[k + 1, -1] = 0.0
    return u
