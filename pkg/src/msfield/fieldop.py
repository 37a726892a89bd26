"""Covariant field operators along the Legendre maps.

An extended operator is the f=1, semi-holonomic multivector field along the
extended Legendre map whose contraction with the Liouville (m+1)-form pulls
back to zero.  Coefficient tables, 1-based indices throughout:

    f[(A, a)]      coefficient of d/dy^A        in the a-th component
    g[(A, eta, a)] coefficient of d/dp^eta_A    in the a-th component
    h[a]           coefficient of d/dpa         in the a-th component

The field equation forces the trace condition sum_a g[(A,a,a)] = dL/dy^A and
determines h from (f, g).  Two closed forms for h are tracked: the
`geometric` one derived here from the contraction itself,

    h_a = dL/dx^a + sum_{eta != a} (g[(A,eta,eta)] v^A_a - g[(A,eta,a)] v^A_eta)

and a `printed` variant that weights the sum by (-1)^eta.  They coincide for
m = 1 and disagree for m >= 2; construction uses the geometric one (it is the
unique solution of the contraction equations, and it alone matches the
independent check h_a = d(pa along a prolonged section)/dx^a).  Both variants
are kept on the operator so reports can show the comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import linexpr
from .geom import (
    CoordMap,
    DiffForm,
    MapForm,
    MapMultiVec,
    MapVector,
    MultiVec,
    interior_mv,
    map_vector,
    vector_field,
)
from .hamiltonian import (
    HamiltonianSystem,
    extended_legendre,
    liouville_forms,
    restricted_legendre,
)
from .lagrangian import (
    ELCoefficients,
    LagrangianSystem,
    el_multivector,
    is_semiholonomic,
    solve_el_coefficients,
)
from .symexpr import (
    ONE,
    ZERO,
    Expr,
    ZeroCheck,
    as_expr,
    derivative,
    is_zero,
    render,
    sym,
)


class FieldOperatorError(Exception):
    pass


EXTENDED = "extended"
RESTRICTED = "restricted"


@dataclass
class FieldOperator:
    """Coefficient tables of a normalized (f=1) operator along a Legendre map."""

    flavor: str
    sys: LagrangianSystem
    f: dict
    g: dict
    h: dict | None
    h_variants: dict = field(default_factory=dict)
    kernel: list = field(default_factory=list)
    freedom: int = 0
    normalized: bool = True

    @property
    def m(self) -> int:
        return self.sys.m

    @property
    def N(self) -> int:
        return self.sys.N

    def legendre_map(self) -> CoordMap:
        if self.flavor == EXTENDED:
            return extended_legendre(self.sys)
        return restricted_legendre(self.sys)

    def components(self) -> MapMultiVec:
        """The along-map multivector with these coefficient tables."""
        phi = self.legendre_map()
        target = phi.target
        comps = []
        for a in range(1, self.m + 1):
            mapping = {target.x(a): ONE}
            for A in range(1, self.N + 1):
                mapping[target.y(A)] = self.f[(A, a)]
                for eta in range(1, self.m + 1):
                    mapping[target.p(A, eta)] = self.g[(A, eta, a)]
            if self.flavor == EXTENDED:
                mapping[target.pa()] = self.h[a]
            comps.append(map_vector(phi, mapping))
        return MapMultiVec(phi, comps)

    def is_semiholonomic_structural(self) -> bool:
        ch = self.sys.chart
        return all(
            (self.f[(A, a)] - sym(ch.v(A, a))).is_structural_zero()
            for A in range(1, self.N + 1)
            for a in range(1, self.m + 1)
        )


def h_geometric(sys: LagrangianSystem, g: dict) -> dict:
    """h determined by the contraction equations (uniform sign)."""
    ch = sys.chart
    out = {}
    for a in range(1, sys.m + 1):
        e = sys.dL_dx[a]
        for A in range(1, sys.N + 1):
            for eta in range(1, sys.m + 1):
                if eta == a:
                    continue
                e = e + g[(A, eta, eta)] * sym(ch.v(A, a))
                e = e - g[(A, eta, a)] * sym(ch.v(A, eta))
        out[a] = e
    return out


def h_printed(sys: LagrangianSystem, g: dict) -> dict:
    """h with the (-1)^eta weight exactly as displayed in the source formula."""
    ch = sys.chart
    out = {}
    for a in range(1, sys.m + 1):
        e = sys.dL_dx[a]
        for A in range(1, sys.N + 1):
            for eta in range(1, sys.m + 1):
                if eta == a:
                    continue
                sign = (-1) ** eta
                term = g[(A, eta, eta)] * sym(ch.v(A, a)) - g[(A, eta, a)] * sym(
                    ch.v(A, eta)
                )
                e = e - term * sign
        out[a] = e
    return out


def _trace_system(sys: LagrangianSystem):
    unknowns = [
        (A, eta, a)
        for A in range(1, sys.N + 1)
        for eta in range(1, sys.m + 1)
        for a in range(1, sys.m + 1)
    ]
    rows = []
    for A in range(1, sys.N + 1):
        rows.append(
            [ONE if (B == A and eta == a) else ZERO for (B, eta, a) in unknowns]
        )
    return unknowns, rows


def operator_freedom(sys: LagrangianSystem):
    """Kernel basis of the coefficient constraints; dimension N(m^2-1)."""
    unknowns, rows = _trace_system(sys)
    vecs = linexpr.nullspace(rows, sys.options)
    kernel = [
        {key: v[i] for i, key in enumerate(unknowns) if not v[i].is_structural_zero()}
        for v in vecs
    ]
    return kernel


def transport_g(sys: LagrangianSystem, X: MultiVec) -> dict:
    """g tables of Lambda^m T(FL~) o X: each component applied to the momenta."""
    out = {}
    for a, comp in enumerate(X.components, start=1):
        for A in range(1, sys.N + 1):
            for eta in range(1, sys.m + 1):
                out[(A, eta, a)] = comp.apply(sys.dL_dv[(A, eta)])
    return out


def default_g(sys: LagrangianSystem) -> dict:
    """Symmetric-gauge default coefficients.

    The transported image of the Lagrangian module's symmetric-gauge G when
    the coefficient system is solvable (it always is for the regular case),
    so conversions between the pictures align; otherwise the minimal
    symmetric solution of the trace condition alone.
    """
    coeffs = solve_el_coefficients(sys)
    if coeffs.solvable:
        X = el_multivector(sys, coeffs)
        return transport_g(sys, X)
    ch = sys.chart
    out = {}
    for A in range(1, sys.N + 1):
        share = sys.dL_dy[A] / sys.m
        for eta in range(1, sys.m + 1):
            for a in range(1, sys.m + 1):
                out[(A, eta, a)] = share if eta == a else ZERO
    return out


def construct_extended_operator(
    sys: LagrangianSystem, g: dict | None = None, verify: bool = True
) -> FieldOperator:
    """Build the f=1 semi-holonomic extended operator.

    Construction is unconditional (no regularity needed).  `g` may fix the
    free part; it must satisfy the trace condition.  The returned operator
    carries both h variants and the kernel basis of the coefficient system.
    """
    ch = sys.chart
    if g is None:
        g = default_g(sys)
    else:
        g = {k: as_expr(v) for k, v in g.items()}
        for A in range(1, sys.N + 1):
            trace = sum((g.get((A, a, a), ZERO) for a in range(1, sys.m + 1)), ZERO)
            if not is_zero(trace - sys.dL_dy[A], sys.options):
                raise FieldOperatorError(
                    f"supplied g violates the trace condition for field {A}"
                )
    f = {
        (A, a): sym(ch.v(A, a))
        for A in range(1, sys.N + 1)
        for a in range(1, sys.m + 1)
    }
    hg = h_geometric(sys, g)
    hp = h_printed(sys, g)
    agree = all(is_zero(hg[a] - hp[a], sys.options) for a in range(1, sys.m + 1))
    kernel = operator_freedom(sys)
    op = FieldOperator(
        EXTENDED,
        sys,
        f,
        g,
        hg,
        h_variants={"geometric": hg, "printed": hp, "agree": agree},
        kernel=kernel,
        freedom=len(kernel),
    )
    if verify:
        residual = field_equation_residual(op)
        bad = [
            (idx, render(c))
            for idx, c in residual.items()
            if not is_zero(c, sys.options)
        ]
        if bad:
            raise FieldOperatorError(f"field equation residual nonzero: {bad}")
    return op


def field_equation_residual(op: FieldOperator) -> DiffForm:
    """FL~*[ i(K~)(Omega o FL~) ] as a 1-form on the jet chart.

    For a restricted operator the affine coefficient is reconstructed first,
    since the field equation is stated through the extended picture.
    """
    work = op if op.flavor == EXTENDED else extend_operator(op)
    phi = work.legendre_map()
    _, omega = liouville_forms(phi.target)
    along = MapForm.from_form(omega, phi)
    contracted = work.components().interior(along)
    return contracted.pullback()


def extend_operator(op: FieldOperator) -> FieldOperator:
    """Recover the extended operator over a restricted one (h is determined)."""
    if op.flavor == EXTENDED:
        return op
    hg = h_geometric(op.sys, op.g)
    hp = h_printed(op.sys, op.g)
    return FieldOperator(
        EXTENDED,
        op.sys,
        dict(op.f),
        dict(op.g),
        hg,
        h_variants={"geometric": hg, "printed": hp, "agree": op.sys.m == 1},
        kernel=op.kernel,
        freedom=op.freedom,
    )


def restrict_operator(op: FieldOperator) -> FieldOperator:
    """Drop the affine-momentum table; integral sections are unchanged."""
    if op.flavor == RESTRICTED:
        raise FieldOperatorError("operator is already restricted")
    return FieldOperator(
        RESTRICTED,
        op.sys,
        dict(op.f),
        dict(op.g),
        None,
        h_variants=dict(op.h_variants),
        kernel=op.kernel,
        freedom=op.freedom,
    )


@dataclass
class OperatorCheck:
    normalization: bool
    normalization_evidence: str
    semiholonomy: bool
    semiholonomy_evidence: str
    field_equation: bool
    field_equation_evidence: str
    residual: list  # [(coordinate name, rendered expr)] for failures
    h_comparison: dict

    def all_ok(self) -> bool:
        return self.normalization and self.semiholonomy and self.field_equation


def check_operator(op: FieldOperator, sys: LagrangianSystem | None = None) -> OperatorCheck:
    """Evaluate the three defining conditions with evidence kinds."""
    sys = sys or op.sys
    phi = op.legendre_map()
    target = phi.target
    # Normalization: contraction with the pulled-up volume form equals 1.
    base_idx = tuple(target.index_of(target.x(a)) for a in range(1, sys.m + 1))
    vol = MapForm(phi, sys.m, {base_idx: ONE})
    value = op.components().interior(vol).coefficient(())
    if (value - ONE).is_structural_zero():
        norm_ok, norm_ev = True, "structural"
    else:
        chk = is_zero(value - ONE, sys.options)
        norm_ok, norm_ev = bool(chk), chk.evidence
    # Semi-holonomy: f coefficients equal the velocities.
    ch = sys.chart
    residuals = [
        op.f[(A, a)] - sym(ch.v(A, a))
        for A in range(1, sys.N + 1)
        for a in range(1, sys.m + 1)
    ]
    if all(r.is_structural_zero() for r in residuals):
        semi_ok, semi_ev = True, "structural"
    else:
        checks = [is_zero(r, sys.options) for r in residuals]
        semi_ok = all(checks)
        semi_ev = "probabilistic"
    # Field equation.
    residual_form = field_equation_residual(op)
    bad = []
    all_structural = True
    coords = sys.chart.coordinates()
    for idx, c in residual_form.items():
        chk = is_zero(c, sys.options)
        if not chk:
            bad.append((coords[idx[0]].name, render(c)))
        elif chk.evidence != "structural":
            all_structural = False
    fe_ok = not bad
    fe_ev = "structural" if (fe_ok and all_structural) else "probabilistic"
    return OperatorCheck(
        norm_ok,
        norm_ev,
        semi_ok,
        semi_ev,
        fe_ok,
        fe_ev,
        bad,
        dict(op.h_variants),
    )


# -- the three equivalent views ------------------------------------------------

VIEW_KINDS = ("multivector", "jet-field", "connection")


@dataclass(frozen=True)
class AlongMapView:
    kind: str
    operator: FieldOperator

    def coefficients(self):
        op = self.operator
        return op.f, op.g, op.h

    def render(self) -> str:
        op = self.operator
        m, N = op.m, op.N
        label = "FL~" if op.flavor == EXTENDED else "FL"
        if self.kind == "multivector":
            return " ^ ".join(self._bracket(a, label) for a in range(1, m + 1))
        if self.kind == "connection":
            return " + ".join(
                f"dx_{a} (x) {self._bracket(a, label)}" for a in range(1, m + 1)
            )
        # jet-field: base point through the Legendre map, then the fiber part.
        phi = op.legendre_map()
        point = [s.name for s in op.sys.chart.coordinates()[: m + N]]
        point += [
            f"{c.name} = {render(e)}"
            for c, e in list(zip(phi.target.coordinates(), phi.exprs))[m + N :]
        ]
        fiber = [f"f_{A}_{a} = {render(op.f[(A, a)])}" for A in range(1, N + 1) for a in range(1, m + 1)]
        fiber += [
            f"g_{A}_{eta}_{a} = {render(op.g[(A, eta, a)])}"
            for A in range(1, N + 1)
            for eta in range(1, m + 1)
            for a in range(1, m + 1)
        ]
        if op.h is not None:
            fiber += [f"h_{a} = {render(op.h[a])}" for a in range(1, m + 1)]
        return "(" + ", ".join(point) + "; " + ", ".join(fiber) + ")"

    def _bracket(self, a: int, label: str) -> str:
        op = self.operator
        parts = [f"[d/dx_{a} o {label}]"]
        for A in range(1, op.N + 1):
            parts.append(f"({render(op.f[(A, a)])}) [d/dy_{A} o {label}]")
        for A in range(1, op.N + 1):
            for eta in range(1, op.m + 1):
                parts.append(
                    f"({render(op.g[(A, eta, a)])}) [d/dp_{A}_{eta} o {label}]"
                )
        if op.h is not None:
            parts.append(f"({render(op.h[a])}) [d/dpa o {label}]")
        return "(" + " + ".join(parts) + ")"


def as_view(op: FieldOperator, kind: str) -> AlongMapView:
    """Re-label the operator as multivector, jet field or connection view."""
    if kind not in VIEW_KINDS:
        raise FieldOperatorError(f"unknown view kind '{kind}'")
    return AlongMapView(kind, op)


# -- conversions: Euler-Lagrange side -------------------------------------------


def operator_from_el(X: MultiVec, sys: LagrangianSystem, verify: bool = True) -> FieldOperator:
    """Transport an Euler-Lagrange multivector field into an operator.

    The tables are the pushforward through the extended Legendre map: each
    component applied to the momentum and energy functions.
    """
    if not is_semiholonomic(sys, X):
        raise FieldOperatorError("multivector field is not semi-holonomic")
    ch = sys.chart
    g = transport_g(sys, X)
    h = {
        a: comp.apply(sys.energy_term())
        for a, comp in enumerate(X.components, start=1)
    }
    f = {
        (A, a): sym(ch.v(A, a))
        for A in range(1, sys.N + 1)
        for a in range(1, sys.m + 1)
    }
    hp = h_printed(sys, g)
    agree = all(is_zero(h[a] - hp[a], sys.options) for a in range(1, sys.m + 1))
    kernel = operator_freedom(sys)
    op = FieldOperator(
        EXTENDED,
        sys,
        f,
        g,
        h,
        h_variants={"geometric": h, "printed": hp, "agree": agree},
        kernel=kernel,
        freedom=len(kernel),
    )
    if verify and not check_operator(op, sys).all_ok():
        raise FieldOperatorError("transported operator fails its defining conditions")
    return op


@dataclass
class ELExtraction:
    multivector: MultiVec | None
    tables: dict | None
    freedom: int
    obstructions: list

    @property
    def solvable(self) -> bool:
        return self.multivector is not None


def el_from_operator(op: FieldOperator, sys: LagrangianSystem | None = None) -> ELExtraction:
    """Solve the transport relations for G; inverse of operator_from_el.

    Unique for a regular Hessian.  For singular systems the affine family is
    returned when consistent, otherwise the obstruction expressions (the
    seeds of the submanifold where Euler-Lagrange solutions exist).
    """
    sys = sys or op.sys
    if not op.is_semiholonomic_structural():
        raise FieldOperatorError("operator is not semi-holonomic")
    ch = sys.chart
    pairs = sys.vel_pairs()
    tables: dict = {}
    total_kernel = 0
    obstructions: list = []
    for a in range(1, sys.m + 1):
        rows = []
        rhs = []
        for A in range(1, sys.N + 1):
            for eta in range(1, sys.m + 1):
                rows.append([sys.hessian[(B, n, A, eta)] for (B, n) in pairs])
                r = (
                    op.g[(A, eta, a)]
                    - derivative(sys.dL_dv[(A, eta)], ch.x(a))
                )
                for B in range(1, sys.N + 1):
                    r = r - derivative(sys.dL_dv[(A, eta)], ch.y(B)) * sym(ch.v(B, a))
                rhs.append(r)
        particular, kernel, residuals = linexpr.solve(rows, rhs, sys.options)
        if particular is None:
            obstructions.extend(residuals)
            continue
        total_kernel += len(kernel)
        for (B, n), e in zip(pairs, particular):
            tables[(B, a, n)] = e
    if obstructions:
        return ELExtraction(None, None, 0, obstructions)
    X = el_multivector(sys, tables)
    return ELExtraction(X, tables, total_kernel, [])


# -- conversions: Hamilton-De Donder-Weyl side ----------------------------------


def operator_from_hdw(
    Xh: MultiVec, sys: LagrangianSystem, hsys: HamiltonianSystem
) -> FieldOperator:
    """Compose an HDW multivector field with the Legendre map.

    Verifies i(Xh) Omega_h = 0 first.  For regular systems the result is
    semi-holonomic (f = dH/dp o FL = v); for almost-regular inputs
    semi-holonomy is checked by the caller via check_operator, not assumed.
    """
    residual = interior_mv(Xh, hsys.omega_h)
    bad = [c for _, c in residual.items() if not is_zero(c, sys.options)]
    if bad:
        raise FieldOperatorError(
            f"input does not solve the HDW field equation: {render(bad[0])}"
        )
    fl = restricted_legendre(sys)
    rch = hsys.chart
    f = {}
    g = {}
    h = {}
    for a, comp in enumerate(Xh.components, start=1):
        for A in range(1, sys.N + 1):
            f[(A, a)] = fl.substitute_into(comp.coefficient(rch.y(A)))
            for eta in range(1, sys.m + 1):
                g[(A, eta, a)] = fl.substitute_into(comp.coefficient(rch.p(A, eta)))
        h[a] = fl.substitute_into(comp.apply(-hsys.H))
    hp = h_printed(sys, g)
    agree = all(is_zero(h[a] - hp[a], sys.options) for a in range(1, sys.m + 1))
    kernel = operator_freedom(sys)
    return FieldOperator(
        EXTENDED,
        sys,
        f,
        g,
        h,
        h_variants={"geometric": h, "printed": hp, "agree": agree},
        kernel=kernel,
        freedom=len(kernel),
    )


def hdw_from_operator(
    op: FieldOperator, sys: LagrangianSystem, hsys: HamiltonianSystem
) -> MultiVec:
    """Push the operator's tables through the verified inverse Legendre map."""
    if hsys.inverse_map is None:
        raise FieldOperatorError(
            "no verified inverse Legendre map: the singular path needs user "
            "constraints, where only residual checks on the locus apply"
        )
    inv = hsys.inverse_map
    rch = hsys.chart
    comps = []
    for a in range(1, sys.m + 1):
        mapping = {rch.x(a): ONE}
        for A in range(1, sys.N + 1):
            mapping[rch.y(A)] = inv.substitute_into(op.f[(A, a)])
            for eta in range(1, sys.m + 1):
                mapping[rch.p(A, eta)] = inv.substitute_into(op.g[(A, eta, a)])
        comps.append(vector_field(rch, mapping))
    X = MultiVec(rch, comps)
    residual = interior_mv(X, hsys.omega_h)
    bad = [c for _, c in residual.items() if not is_zero(c, sys.options)]
    if bad:
        raise FieldOperatorError(
            f"converted field does not solve the HDW equation: {render(bad[0])}"
        )
    return X


def transport_constraint(op: FieldOperator, xi: Expr) -> tuple:
    """i(K)(d xi o FL): one transported scalar per base direction.

    For m = 1 this is the classical transport of a Hamiltonian constraint to
    a Lagrangian one; for m > 1 the same contraction formula is applied
    componentwise.
    """
    if op.flavor != RESTRICTED:
        raise FieldOperatorError("constraint transport acts through the restricted operator")
    xi = as_expr(xi)
    fl = op.legendre_map()
    rch = fl.target
    foreign = [
        s.name
        for s in xi.symbols()
        if s.chart not in (rch.name, "__const__")
    ]
    if foreign:
        raise FieldOperatorError(
            f"constraint must live on the restricted momentum chart; found {foreign}"
        )
    comps = op.components()
    out = []
    for comp in comps.components:
        total = ZERO
        for pos, coord in enumerate(rch.coordinates()):
            d = derivative(xi, coord)
            if d.is_structural_zero():
                continue
            total = total + comp.coeffs[pos] * fl.substitute_into(d)
        out.append(total)
    return tuple(out)
