"""The Lagrangian side: Poincare-Cartan forms, regularity, field equations.

Index conventions for the coefficient tables (all dicts keyed by integer
tuples, 1-based):

    G[(A, a, n)]  coefficient of d/dv^A_n in the a-th component of an
                  Euler-Lagrange multivector field.  Along an integral
                  section, G[(A, a, n)] = d^2 phi^A / dx^a dx^n.

The linear system tying G to the Lagrangian reads, for each field index B:

    sum_{A,a,n} Hess[(A,a),(B,n)] G[(A, n, a)] =
        dL/dy^B - sum_n d2L/dx^n dv^B_n - sum_{A,n} d2L/dy^A dv^B_n v^A_n

with Hess[(A,a),(B,n)] = d2L/dv^A_a dv^B_n.  For regular systems its
solution set is an affine space of dimension N(m^2-1).
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

import numpy as np

from . import linexpr
from .geom import (
    Chart,
    DiffForm,
    JetSectionContext,
    MultiVec,
    base_chart,
    base_projection,
    check_transverse,
    dcoord,
    exterior_derivative,
    interior_mv,
    jet_chart,
    scalar_form,
    vector_field,
    volume_form,
    wedge,
)
from .symexpr import (
    ONE,
    ZERO,
    Expr,
    SymbolTable,
    ZeroOptions,
    as_expr,
    derivative,
    evaluate,
    is_zero,
    parse_expr,
    render,
    sample_point,
    sym,
)
from .symexpr.zero import DEFAULT_OPTIONS


class LagrangianError(Exception):
    pass


def _dminus1_x(chart: Chart, a: int) -> DiffForm:
    """d^{m-1}x_a = i(d/dx^a) d^m x, the defining contraction."""
    from .geom import interior

    omega = volume_form(chart)
    direction = vector_field(chart, {chart.x(a): ONE})
    return interior(direction, omega)


class LagrangianSystem:
    """A first-order Lagrangian on the jet chart of (m, N) with parameters."""

    def __init__(self, m: int, N: int, lagrangian, params: tuple = (),
                 options: ZeroOptions | None = None):
        self.m = m
        self.N = N
        self.options = options or DEFAULT_OPTIONS
        self.chart = jet_chart(m, N, params)
        if isinstance(lagrangian, str):
            lagrangian = parse_expr(lagrangian, self.chart.table())
        self.L: Expr = as_expr(lagrangian)
        bad = [
            s.name
            for s in self.L.symbols()
            if s.chart not in (self.chart.name, "__const__")
        ]
        if bad:
            raise LagrangianError(f"Lagrangian uses foreign symbols: {bad}")
        mom = [s for s in self.L.symbols() if s.role in ("momentum", "affine-momentum")]
        if mom:
            raise LagrangianError("Lagrangian must not contain momentum symbols")
        # Eagerly cached derivatives; instances are read-only afterwards.
        self.dL_dv = {
            (A, a): derivative(self.L, self.chart.v(A, a))
            for A in range(1, N + 1)
            for a in range(1, m + 1)
        }
        self.dL_dy = {A: derivative(self.L, self.chart.y(A)) for A in range(1, N + 1)}
        self.dL_dx = {a: derivative(self.L, self.chart.x(a)) for a in range(1, m + 1)}
        self.hessian = {
            (A, a, B, n): derivative(self.dL_dv[(A, a)], self.chart.v(B, n))
            for A in range(1, N + 1)
            for a in range(1, m + 1)
            for B in range(1, N + 1)
            for n in range(1, m + 1)
        }
        self._theta = None
        self._omega = None

    # -- symbol shorthands ---------------------------------------------------

    def vel_pairs(self):
        return [
            (A, a) for A in range(1, self.N + 1) for a in range(1, self.m + 1)
        ]

    def hessian_matrix(self) -> list:
        """The (N m) x (N m) Hessian in (A,a) row-major order."""
        pairs = self.vel_pairs()
        return [
            [self.hessian[(A, a, B, n)] for (B, n) in pairs] for (A, a) in pairs
        ]

    def energy_term(self) -> Expr:
        """L - v^A_a dL/dv^A_a, the affine momentum component."""
        out = self.L
        for (A, a), p in self.dL_dv.items():
            out = out - sym(self.chart.v(A, a)) * p
        return out

    # -- Poincare-Cartan forms -------------------------------------------------

    def poincare_cartan(self):
        """Theta_L and Omega_L = -d Theta_L on the jet chart."""
        if self._theta is None:
            ch = self.chart
            theta = volume_form(ch).scale(self.energy_term())
            for (A, a), p in self.dL_dv.items():
                theta = theta + wedge(dcoord(ch, ch.y(A)), _dminus1_x(ch, a)).scale(p)
            self._theta = theta
            self._omega = exterior_derivative(theta).scale(-1)
        return self._theta, self._omega

    def omega_l_block_expansion(self) -> DiffForm:
        """Omega_L assembled from its displayed four-block local expression."""
        ch = self.chart
        out = None
        for B in range(1, self.N + 1):
            for n in range(1, self.m + 1):
                for A in range(1, self.N + 1):
                    for a in range(1, self.m + 1):
                        h = self.hessian[(B, n, A, a)]
                        blk1 = wedge(
                            wedge(dcoord(ch, ch.v(B, n)), dcoord(ch, ch.y(A))),
                            _dminus1_x(ch, a),
                        ).scale(-h)
                        blk3 = dcoord(ch, ch.v(B, n)).scale(
                            h * sym(ch.v(A, a))
                        )
                        blk3 = wedge(blk3, volume_form(ch))
                        out = blk1 if out is None else out + blk1
                        out = out + blk3
        for B in range(1, self.N + 1):
            coeff = ZERO
            for A in range(1, self.N + 1):
                for a in range(1, self.m + 1):
                    dyv = derivative(self.dL_dv[(A, a)], ch.y(B))
                    blk2 = wedge(
                        wedge(dcoord(ch, ch.y(B)), dcoord(ch, ch.y(A))),
                        _dminus1_x(ch, a),
                    ).scale(-dyv)
                    out = out + blk2
                    coeff = coeff + dyv * sym(ch.v(A, a))
            coeff = coeff - self.dL_dy[B]
            for a in range(1, self.m + 1):
                coeff = coeff + derivative(self.dL_dv[(B, a)], ch.x(a))
            out = out + wedge(dcoord(ch, ch.y(B)), volume_form(ch)).scale(coeff)
        return out

    # -- regularity ------------------------------------------------------------

    def hessian_det(self) -> Expr:
        return linexpr.det(self.hessian_matrix())

    def classify_regularity(self):
        return classify_regularity(self)


@dataclass
class RegularityReport:
    kind: str  # "regular" | "singular"
    hyper_regular_candidate: bool
    det: Expr
    rank: int | None = None
    constant_rank: bool = True
    detail: str = ""

    @property
    def regular(self) -> bool:
        return self.kind == "regular"

    def label(self) -> str:
        if self.kind == "regular":
            return "hyper-regular-candidate" if self.hyper_regular_candidate else "regular"
        return f"singular (rank {self.rank})"


def classify_regularity(sys: LagrangianSystem) -> RegularityReport:
    """Classify via the velocity Hessian determinant.

    A structurally nonzero constant determinant gives a regular system,
    flagged hyper-regular-candidate when the momenta relations are affine in
    the velocities with a constant invertible coefficient matrix (so the
    Legendre map inverts globally).  A vanishing determinant gives a singular
    system whose rank is sampled numerically; non-constant rank across sample
    points violates the almost-regular hypotheses and is reported.
    """
    opts = sys.options
    d = sys.hessian_det()
    if is_zero(d, opts):
        pairs = sys.vel_pairs()
        rng = random.Random(opts.seed)
        symbols = set()
        for row in sys.hessian_matrix():
            for e in row:
                symbols |= e.symbols()
        ranks = []
        for _ in range(32):
            point = sample_point(symbols | set(sys.chart.coordinates()), rng, opts)
            try:
                m = np.array(
                    [
                        [evaluate(e, point) for e in row]
                        for row in sys.hessian_matrix()
                    ],
                    dtype=float,
                )
            except Exception:
                continue
            ranks.append(int(np.linalg.matrix_rank(m, tol=1e-8)))
        if not ranks:
            raise LagrangianError("could not sample the Hessian rank")
        constant = all(r == ranks[0] for r in ranks)
        detail = "" if constant else "non-constant rank; almost-regular hypotheses violated"
        return RegularityReport(
            "singular", False, d, rank=ranks[0], constant_rank=constant, detail=detail
        )
    hyper = d.is_constant() and all(
        e.is_constant() for row in sys.hessian_matrix() for e in row
    )
    detail = ""
    if not d.is_constant():
        detail = "determinant is non-constant; nonvanishing checked by sampling only"
    return RegularityReport("regular", hyper, d, rank=len(sys.vel_pairs()), detail=detail)


# -- Euler-Lagrange equations ------------------------------------------------


def euler_lagrange_equations(sys: LagrangianSystem):
    """Residuals dL/dy^A o j1(phi) - d/dx^a (dL/dv^A_a o j1(phi)) = 0.

    The d/dx^a is the total derivative along the prolonged section; second
    derivatives enter through symmetrized formal symbols.  Returns the
    section context and one residual Expr per field index.
    """
    ctx = JetSectionContext(sys.chart)
    residuals = []
    for A in range(1, sys.N + 1):
        res = ctx.along_prolongation(sys.dL_dy[A])
        for a in range(1, sys.m + 1):
            momentum = ctx.along_prolongation(sys.dL_dv[(A, a)])
            res = res - ctx.total_derivative(momentum, a)
        residuals.append(res)
    return ctx, residuals


@dataclass
class ELCoefficients:
    """Solution data for the Euler-Lagrange coefficient system."""

    particular: dict | None  # (A, a, n) -> Expr, or None when obstructed
    kernel: list  # list of (A, a, n) -> Expr dictionaries
    obstructions: list  # residual expressions (symbolic) when inconsistent
    obstruction_samples: list  # [(point, residual_vector)] numeric evidence
    freedom: int

    @property
    def solvable(self) -> bool:
        return self.particular is not None


def _el_system(sys: LagrangianSystem):
    """Rows/RHS of the coefficient system over unknowns G[(A, a, n)]."""
    ch = sys.chart
    unknowns = [
        (A, a, n)
        for A in range(1, sys.N + 1)
        for a in range(1, sys.m + 1)
        for n in range(1, sys.m + 1)
    ]
    rows = []
    rhs = []
    for B in range(1, sys.N + 1):
        row = []
        for (A, a, n) in unknowns:
            # coefficient of G[(A, a, n)] in equation B: Hess[(A,n),(B,a)]
            row.append(sys.hessian[(A, n, B, a)])
        r = sys.dL_dy[B]
        for n in range(1, sys.m + 1):
            r = r - derivative(sys.dL_dv[(B, n)], ch.x(n))
            for A in range(1, sys.N + 1):
                r = r - derivative(sys.dL_dv[(B, n)], ch.y(A)) * sym(ch.v(A, n))
        rows.append(row)
        rhs.append(r)
    return unknowns, rows, rhs


def solve_el_coefficients(sys: LagrangianSystem) -> ELCoefficients:
    """Solve the linear coefficient system for G.

    The default particular solution is symmetric in the two base indices and
    has minimal norm among symmetric solutions; the kernel basis spans the
    full (unsymmetrized) solution freedom, of dimension N(m^2-1) for regular
    systems.  For inconsistent singular systems the numeric obstruction
    residuals at sample points are surfaced as constraint seeds.
    """
    opts = sys.options
    unknowns, rows, rhs = _el_system(sys)
    kernel_vecs = linexpr.nullspace(rows, opts)
    kernel = [
        {key: vec[i] for i, key in enumerate(unknowns) if not vec[i].is_structural_zero()}
        for vec in kernel_vecs
    ]
    freedom = len(kernel_vecs)

    # Symmetric ansatz: unknowns s[(A, a<=n)] with G[(A,a,n)] = s[(A,min,max)].
    sym_unknowns = [
        (A, a, n)
        for A in range(1, sys.N + 1)
        for a in range(1, sys.m + 1)
        for n in range(a, sys.m + 1)
    ]
    sym_rows = []
    for row in rows:
        srow = []
        for (A, a, n) in sym_unknowns:
            c = row[unknowns.index((A, a, n))]
            if a != n:
                c = c + row[unknowns.index((A, n, a))]
            srow.append(c)
        sym_rows.append(srow)

    particular = None
    obstructions: list = []
    samples: list = []
    if all(is_zero(r, opts) for r in rhs):
        particular = {key: ZERO for key in unknowns}
    else:
        # Minimal-norm symmetric solution s = A^T (A A^T)^{-1} b.
        gram = linexpr.mat_mul(sym_rows, linexpr.transpose(sym_rows))
        gram_inv = linexpr.inverse(gram, opts)
        if gram_inv is not None:
            lam = linexpr.mat_vec(gram_inv, rhs)
            svals = linexpr.mat_vec(linexpr.transpose(sym_rows), lam)
            solution = dict(zip(sym_unknowns, svals))
            particular = {
                (A, a, n): solution[(A, min(a, n), max(a, n))] for (A, a, n) in unknowns
            }
        else:
            part, _, residuals = linexpr.solve(rows, rhs, opts)
            if part is not None:
                particular = dict(zip(unknowns, part))
            else:
                obstructions = residuals
                samples = _obstruction_samples(sys, rows, rhs)
    if particular is not None:
        # Substituting back must produce zero residuals.
        for row, r in zip(rows, rhs):
            res = sum(
                (c * particular[key] for c, key in zip(row, unknowns)), ZERO
            ) - r
            if not is_zero(res, opts):
                raise LagrangianError(f"EL coefficient solve failed: residual {render(res)}")
    return ELCoefficients(particular, kernel, obstructions, samples, freedom)


def _obstruction_samples(sys, rows, rhs, count: int = 8):
    opts = sys.options
    rng = random.Random(opts.seed)
    symbols = set(sys.chart.coordinates())
    for row in rows:
        for e in row:
            symbols |= e.symbols()
    for e in rhs:
        symbols |= e.symbols()
    out = []
    for _ in range(count):
        point = sample_point(symbols, rng, opts)
        try:
            A = np.array([[evaluate(e, point) for e in row] for row in rows])
            b = np.array([evaluate(e, point) for e in rhs])
        except Exception:
            continue
        sol, res, *_ = np.linalg.lstsq(A, b, rcond=None)
        residual = b - A @ sol
        out.append(({s.name: v for s, v in point.items()}, residual.tolist()))
    return out


def el_multivector(sys: LagrangianSystem, coeffs: ELCoefficients | dict) -> MultiVec:
    """Assemble the f=1 semi-holonomic multivector field with coefficients G.

    Raises unless G solves the coefficient system; the result contracts to
    zero with Omega_L and is transverse by construction.
    """
    table = coeffs.particular if isinstance(coeffs, ELCoefficients) else coeffs
    if table is None:
        raise LagrangianError("no particular EL solution available")
    table = {k: as_expr(v) for k, v in table.items()}
    unknowns, rows, rhs = _el_system(sys)
    for row, r in zip(rows, rhs):
        res = sum((c * table.get(key, ZERO) for c, key in zip(row, unknowns)), ZERO) - r
        if not is_zero(res, sys.options):
            raise LagrangianError(
                f"coefficients do not solve the EL system: residual {render(res)}"
            )
    return _assemble_multivector(sys, table)


def _assemble_multivector(sys: LagrangianSystem, table: dict) -> MultiVec:
    ch = sys.chart
    comps = []
    for a in range(1, sys.m + 1):
        mapping = {ch.x(a): ONE}
        for A in range(1, sys.N + 1):
            mapping[ch.y(A)] = sym(ch.v(A, a))
            for n in range(1, sys.m + 1):
                mapping[ch.v(A, n)] = table.get((A, a, n), ZERO)
        comps.append(vector_field(ch, mapping))
    return MultiVec(ch, comps)


def is_semiholonomic(sys: LagrangianSystem, X: MultiVec) -> bool:
    """f = 1 representative with d/dy coefficients equal to the velocities."""
    ch = sys.chart
    for a, comp in enumerate(X.components, start=1):
        for b in range(1, sys.m + 1):
            want = ONE if a == b else ZERO
            if comp.coefficient(ch.x(b)) != want:
                return False
        for A in range(1, sys.N + 1):
            if not (comp.coefficient(ch.y(A)) - sym(ch.v(A, a))).is_structural_zero():
                return False
    return True
