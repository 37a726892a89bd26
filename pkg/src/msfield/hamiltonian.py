"""The Hamiltonian side: multimomentum charts, Legendre maps, HDW equations.

The extended multimomentum chart carries (x, y, p^a_A, pa) and the canonical
Liouville forms

    Theta = p_A^a dy^A ^ d^{m-1}x_a + pa d^m x,   Omega = -d Theta.

The extended Legendre map sends p^a_A to dL/dv^A_a and pa to the energy term
L - v.dL/dv; the restricted map drops pa, and the factorization through the
explicit mu projection is kept testable by composition.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from . import linexpr
from .geom import (
    Chart,
    CoordMap,
    DiffForm,
    MomentumSectionContext,
    MultiVec,
    dcoord,
    exterior_derivative,
    extended_momentum_chart,
    restricted_momentum_chart,
    vector_field,
    volume_form,
    wedge,
)
from .lagrangian import LagrangianSystem, _dminus1_x, classify_regularity
from .symexpr import (
    ONE,
    ZERO,
    Expr,
    ZeroOptions,
    as_expr,
    derivative,
    evaluate,
    is_zero,
    parse_expr,
    render,
    sample_point,
    substitute,
    sym,
)
from .symexpr.zero import DEFAULT_OPTIONS


class HamiltonianError(Exception):
    pass


def liouville_forms(chart: Chart):
    """Theta and Omega = -d Theta on an extended multimomentum chart."""
    if chart.kind != "extended-momentum":
        raise HamiltonianError("Liouville forms live on the extended momentum chart")
    theta = volume_form(chart).scale(sym(chart.pa()))
    for A in range(1, chart.N + 1):
        for a in range(1, chart.m + 1):
            theta = theta + wedge(dcoord(chart, chart.y(A)), _dminus1_x(chart, a)).scale(
                sym(chart.p(A, a))
            )
    omega = exterior_derivative(theta).scale(-1)
    return theta, omega


def extended_legendre(sys: LagrangianSystem) -> CoordMap:
    """FL~: jet chart -> extended momentum chart."""
    target = extended_momentum_chart(sys.m, sys.N, tuple(p.name for p in sys.chart.params()))
    comps = []
    for a in range(1, sys.m + 1):
        comps.append(sym(sys.chart.x(a)))
    for A in range(1, sys.N + 1):
        comps.append(sym(sys.chart.y(A)))
    for A in range(1, sys.N + 1):
        for a in range(1, sys.m + 1):
            comps.append(sys.dL_dv[(A, a)])
    comps.append(sys.energy_term())
    return CoordMap(sys.chart, target, comps)


def restricted_legendre(sys: LagrangianSystem) -> CoordMap:
    """FL: jet chart -> restricted momentum chart (affine momentum dropped)."""
    target = restricted_momentum_chart(sys.m, sys.N, tuple(p.name for p in sys.chart.params()))
    ext = extended_legendre(sys)
    return CoordMap(sys.chart, target, ext.exprs[:-1])


def mu_projection(sys: LagrangianSystem) -> CoordMap:
    """mu: extended -> restricted momentum chart, forgetting pa."""
    params = tuple(p.name for p in sys.chart.params())
    source = extended_momentum_chart(sys.m, sys.N, params)
    target = restricted_momentum_chart(sys.m, sys.N, params)
    return CoordMap(source, target, [sym(s) for s in source.coordinates()[:-1]])


class HamiltonianSystem:
    """Restricted multimomentum chart with a local Hamiltonian function."""

    def __init__(self, chart: Chart, H: Expr, provenance: str = "user",
                 inverse_map: CoordMap | None = None,
                 options: ZeroOptions | None = None):
        if chart.kind != "restricted-momentum":
            raise HamiltonianError("Hamiltonian systems live on the restricted chart")
        self.chart = chart
        self.H = as_expr(H)
        self.provenance = provenance
        self.inverse_map = inverse_map
        self.options = options or DEFAULT_OPTIONS
        theta = volume_form(chart).scale(-self.H)
        for A in range(1, chart.N + 1):
            for a in range(1, chart.m + 1):
                theta = theta + wedge(
                    dcoord(chart, chart.y(A)), _dminus1_x(chart, a)
                ).scale(sym(chart.p(A, a)))
        self.theta_h = theta
        self.omega_h = exterior_derivative(theta).scale(-1)

    def hamiltonian_section(self, sys: LagrangianSystem) -> CoordMap:
        """h: restricted -> extended momentum chart, pa component -H."""
        target = extended_momentum_chart(
            sys.m, sys.N, tuple(p.name for p in sys.chart.params())
        )
        comps = [sym(s) for s in self.chart.coordinates()]
        comps.append(-self.H)
        return CoordMap(self.chart, target, comps)


def _momenta_affine_in_v(sys: LagrangianSystem):
    """Decompose dL/dv = C v + d with constant C, or None when not affine."""
    pairs = sys.vel_pairs()
    C = []
    for (A, a) in pairs:
        row = []
        for (B, n) in pairs:
            h = sys.hessian[(A, a, B, n)]
            if not h.is_constant():
                return None
            row.append(h)
        C.append(row)
    d = []
    for i, (A, a) in enumerate(pairs):
        rest = sys.dL_dv[(A, a)]
        for j, (B, n) in enumerate(pairs):
            rest = rest - C[i][j] * sym(sys.chart.v(B, n))
        for (B, n) in pairs:
            if not derivative(rest, sys.chart.v(B, n)).is_structural_zero():
                return None
        d.append(rest)
    return C, d


def inverse_legendre(sys: LagrangianSystem, user: dict | None = None) -> CoordMap:
    """FL^{-1}: restricted momentum chart -> jet chart.

    Automatic for momenta affine in the velocities with constant invertible
    coefficients (every regular quadratic Lagrangian); otherwise `user`
    supplies one expression per velocity and the round trips are verified.
    """
    opts = sys.options
    rchart = restricted_momentum_chart(
        sys.m, sys.N, tuple(p.name for p in sys.chart.params())
    )
    pairs = sys.vel_pairs()
    if user is not None:
        vmap = {key: as_expr(e) for key, e in user.items()}
        missing = [key for key in pairs if key not in vmap]
        if missing:
            raise HamiltonianError(f"user inverse lacks velocities {missing}")
    else:
        decomp = _momenta_affine_in_v(sys)
        if decomp is None:
            raise HamiltonianError(
                "momenta are not affine in the velocities with constant "
                "coefficients; supply inverse_legendre expressions"
            )
        C, d = decomp
        Cinv = linexpr.inverse(C, opts)
        if Cinv is None:
            raise HamiltonianError(
                "singular system: use the almost-regular path with user constraints"
            )
        jet_in_rchart = []
        for i, (A, a) in enumerate(pairs):
            subs = {}
            for B in range(1, sys.N + 1):
                subs[sys.chart.y(B)] = sym(rchart.y(B))
            for n in range(1, sys.m + 1):
                subs[sys.chart.x(n)] = sym(rchart.x(n))
            rhs_i = sym(rchart.p(A, a)) - substitute(d[i], subs)
            jet_in_rchart.append(rhs_i)
        vmap = {}
        for i, (A, a) in enumerate(pairs):
            e = ZERO
            for j in range(len(pairs)):
                e = e + Cinv[i][j] * jet_in_rchart[j]
            vmap[(A, a)] = e
    comps = [sym(rchart.x(a)) for a in range(1, sys.m + 1)]
    comps += [sym(rchart.y(A)) for A in range(1, sys.N + 1)]
    comps += [vmap[key] for key in pairs]
    inv = CoordMap(rchart, sys.chart, comps)
    _verify_inverse(sys, inv)
    return inv


def _verify_inverse(sys: LagrangianSystem, inv: CoordMap) -> None:
    opts = sys.options
    fl = restricted_legendre(sys)
    round1 = fl.compose(inv)  # jet -> jet
    for coord, e in zip(sys.chart.coordinates(), round1.exprs):
        if not is_zero(e - sym(coord), opts):
            raise HamiltonianError(
                f"inverse Legendre round trip fails on {coord.name}: {render(e)}"
            )
    round2 = inv.compose(fl)  # restricted -> restricted
    for coord, e in zip(inv.source.coordinates(), round2.exprs):
        if not is_zero(e - sym(coord), opts):
            raise HamiltonianError(
                f"Legendre o inverse round trip fails on {coord.name}: {render(e)}"
            )


def hamiltonian_from_legendre(
    sys: LagrangianSystem, user_inverse: dict | None = None
) -> HamiltonianSystem:
    """Build H = p.v(p) - L(v(p)) after inverting the momenta relations.

    Requires a regular system; verifies FL*Theta_h = Theta_L before
    returning.
    """
    report = classify_regularity(sys)
    if not report.regular:
        raise HamiltonianError(
            "singular Lagrangian: no global Hamiltonian; use the almost-regular "
            "path (user constraints plus restricted Hamiltonian)"
        )
    inv = inverse_legendre(sys, user_inverse)
    rchart = inv.source
    H = ZERO
    for A in range(1, sys.N + 1):
        for a in range(1, sys.m + 1):
            H = H + sym(rchart.p(A, a)) * inv.component(sys.chart.v(A, a))
    H = H - inv.substitute_into(sys.L)
    hsys = HamiltonianSystem(rchart, H, "legendre", inv, sys.options)
    theta_l, _ = sys.poincare_cartan()
    from .geom import pullback

    fl = restricted_legendre(sys)
    pulled = pullback(hsys.theta_h, fl)
    diff = pulled - theta_l
    for idx, c in diff.items():
        if not is_zero(c, sys.options):
            raise HamiltonianError(
                f"FL*Theta_h != Theta_L at {idx}: {render(c)}"
            )
    return hsys


# -- Hamilton-De Donder-Weyl equations ----------------------------------------


def hdw_equations(h: HamiltonianSystem):
    """Residuals of the HDW equations over formal section symbols.

    Returns (context, y_residuals, divergence_residuals) where the y-family
    contains d psi^A/dx^a - dH/dp^a_A o psi and the divergence family
    contains sum_a d psi^a_A/dx^a + dH/dy^A o psi.
    """
    ctx = MomentumSectionContext(h.chart)
    ch = h.chart
    y_res = []
    for A in range(1, ch.N + 1):
        for a in range(1, ch.m + 1):
            dH = ctx.along_section(derivative(h.H, ch.p(A, a)))
            y_res.append(sym(ctx.y_d1[(A, a)]) - dH)
    div_res = []
    for A in range(1, ch.N + 1):
        r = ctx.along_section(derivative(h.H, ch.y(A)))
        for a in range(1, ch.m + 1):
            r = r + sym(ctx.p_d1[(A, a, a)])
        div_res.append(r)
    return ctx, y_res, div_res


def hdw_multivector(
    h: HamiltonianSystem, free: dict | None = None
) -> MultiVec:
    """The f=1 HDW multivector field with momentum coefficients `free`.

    `free` maps (A, eta, a) to the coefficient of d/dp^eta_A in the a-th
    component.  The trace constraint sum_a free[(A,a,a)] = -dH/dy^A is
    verified (and used to fill a default when `free` is None); the y
    coefficients are forced to dH/dp^a_A.
    """
    ch = h.chart
    opts = h.options
    if free is None:
        free = {}
        for A in range(1, ch.N + 1):
            share = -derivative(h.H, ch.y(A)) / ch.m
            for a in range(1, ch.m + 1):
                for eta in range(1, ch.m + 1):
                    free[(A, eta, a)] = share if eta == a else ZERO
    else:
        free = {k: as_expr(v) for k, v in free.items()}
        for A in range(1, ch.N + 1):
            trace = sum(
                (free.get((A, a, a), ZERO) for a in range(1, ch.m + 1)), ZERO
            )
            if not is_zero(trace + derivative(h.H, ch.y(A)), opts):
                raise HamiltonianError(
                    f"trace constraint violated for field {A}: "
                    f"{render(trace)} != {render(-derivative(h.H, ch.y(A)))}"
                )
    comps = []
    for a in range(1, ch.m + 1):
        mapping = {ch.x(a): ONE}
        for A in range(1, ch.N + 1):
            mapping[ch.y(A)] = derivative(h.H, ch.p(A, a))
            for eta in range(1, ch.m + 1):
                mapping[ch.p(A, eta)] = free.get((A, eta, a), ZERO)
        comps.append(vector_field(ch, mapping))
    return MultiVec(ch, comps)


def hdw_freedom_dimension(h: HamiltonianSystem) -> int:
    """Kernel dimension of the HDW coefficient constraints: N(m^2-1)."""
    ch = h.chart
    unknowns = [
        (A, eta, a)
        for A in range(1, ch.N + 1)
        for eta in range(1, ch.m + 1)
        for a in range(1, ch.m + 1)
    ]
    rows = []
    for A in range(1, ch.N + 1):
        row = [
            ONE if (B == A and eta == a) else ZERO for (B, eta, a) in unknowns
        ]
        rows.append(row)
    return len(linexpr.nullspace(rows, h.options))


# -- almost-regular hooks ------------------------------------------------------


@dataclass
class ConstraintReport:
    names: list
    pullback_zero: list  # ZeroCheck per constraint
    differential_rank: int | None
    independent: bool | None
    failures: list

    def __bool__(self) -> bool:
        return not self.failures


def verify_constraints(
    sys: LagrangianSystem, constraints: dict, options: ZeroOptions | None = None
) -> ConstraintReport:
    """Check user-supplied candidate constraints for the Legendre image.

    Each constraint must pull back to zero along FL (membership of the
    image); independence is assessed by the numeric rank of the constraint
    differentials at sample points projected onto the constraint locus.
    """
    opts = options or sys.options
    report_checks = []
    failures = []
    fl = restricted_legendre(sys)
    names = sorted(constraints)
    exprs = [as_expr(constraints[k]) for k in names]
    for name, xi in zip(names, exprs):
        pulled = fl.substitute_into(xi)
        chk = is_zero(pulled, opts)
        report_checks.append(chk)
        if not chk:
            failures.append(name)
    rank = None
    independent = None
    if exprs:
        rank = _constraint_rank(fl.target, exprs, opts)
        independent = rank == len(exprs)
    return ConstraintReport(names, report_checks, rank, independent, failures)


def _constraint_rank(chart: Chart, exprs, opts, samples: int = 16):
    coords = chart.coordinates()
    jac = [[derivative(xi, s) for s in coords] for xi in exprs]
    rng = random.Random(opts.seed)
    symbols = set(coords)
    for xi in exprs:
        symbols |= xi.symbols()
    ranks = []
    for _ in range(samples):
        raw = sample_point(symbols, rng, opts)
        point = _project_to_locus(exprs, coords, raw, opts)
        if point is None:
            continue
        try:
            m = np.array(
                [[evaluate(e, point) for e in row] for row in jac], dtype=float
            )
        except Exception:
            continue
        ranks.append(int(np.linalg.matrix_rank(m, tol=1e-8)))
    return max(ranks) if ranks else None


def _project_to_locus(exprs, coords, point, opts, iterations: int = 25):
    """A few damped Newton steps toward the constraint locus (1e-10)."""
    work = dict(point)
    sym_list = [s for s in coords if s in work]
    for _ in range(iterations):
        try:
            vals = np.array([evaluate(e, work) for e in exprs])
        except Exception:
            return None
        if np.max(np.abs(vals)) < 1e-10:
            return work
        try:
            J = np.array(
                [[evaluate(derivative(e, s), work) for s in sym_list] for e in exprs]
            )
        except Exception:
            return None
        step, *_ = np.linalg.lstsq(J, vals, rcond=None)
        for s, d in zip(sym_list, 0.7 * step):
            work[s] = work[s] - d
    vals = np.array([evaluate(e, work) for e in exprs])
    return work if np.max(np.abs(vals)) < 1e-10 else None


def restricted_hamiltonian_system(
    sys: LagrangianSystem, H0, constraints: dict
) -> tuple:
    """Almost-regular path: user supplies the restricted Hamiltonian on P.

    Verifies the constraints and the identity FL0* Theta_h0 = Theta_L with
    is_zero restricted to... the identity is checked as exact pullback
    equality on the jet chart, which encodes evaluation on the image.
    Returns (HamiltonianSystem, ConstraintReport).
    """
    creport = verify_constraints(sys, constraints)
    if not creport:
        raise HamiltonianError(f"constraints fail pullback-vanishing: {creport.failures}")
    rchart = restricted_momentum_chart(
        sys.m, sys.N, tuple(p.name for p in sys.chart.params())
    )
    if isinstance(H0, str):
        H0 = parse_expr(H0, rchart.table())
    hsys = HamiltonianSystem(rchart, H0, "almost-regular", None, sys.options)
    theta_l, _ = sys.poincare_cartan()
    from .geom import pullback

    fl = restricted_legendre(sys)
    diff = pullback(hsys.theta_h, fl) - theta_l
    for idx, c in diff.items():
        if not is_zero(c, sys.options):
            raise HamiltonianError(
                f"FL0*Theta_h0 != Theta_L at {idx}: {render(c)}"
            )
    return hsys, creport
