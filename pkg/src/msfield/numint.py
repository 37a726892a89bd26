"""Desk-scale integral sections and the residual meters of the equivalence
theorems.

Schemes are fixed: classical RK4 for mechanics (m=1) and explicit leapfrog on
the second-order form for 1+1 field theories (m=2, x_1 = time on [0, t_end],
x_2 = space on [0, 1]).  The meters derive section arrays with 4th-order
central first-difference stencils, applied repeatedly for higher derivatives.
The same stencils are used for field and momenta arrays so discretization
errors cancel at leading order, and the meter then tracks the scheme's own
global error: order 4 for RK4 sections, order 2 for leapfrog sections.
Reductions are plain numpy sums over fixed-shape arrays, so results are
deterministic and independent of any worker partitioning.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .hamiltonian import HamiltonianSystem
from .lagrangian import (
    ELCoefficients,
    LagrangianSystem,
    classify_regularity,
    euler_lagrange_equations,
    solve_el_coefficients,
)
from .symexpr import Expr, Symbol, as_expr, derivative, evaluate
from .symexpr.expr import CONST_CHART, FuncAtom, PolyAtom, _CONST_VALUES

TRIM = 5  # layers dropped at non-periodic edges before taking norms

_NPFUNC = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "tanh": np.tanh,
}


class NumintError(Exception):
    pass


def eval_array(e: Expr, bindings: dict):
    """Vectorized evaluation of an Expr over numpy-array bindings."""
    total = None
    for coeff, mono in e.terms:
        val = float(coeff)
        for a, n in mono:
            val = val * _eval_atom_array(a, bindings) ** n
        total = val if total is None else total + val
    if total is None:
        return 0.0
    return total


def _eval_atom_array(a, bindings):
    if isinstance(a, Symbol):
        if a in bindings:
            return bindings[a]
        if a in _CONST_VALUES:
            return _CONST_VALUES[a]
        raise NumintError(f"unbound symbol '{a.name}' in array evaluation")
    if isinstance(a, FuncAtom):
        return _NPFUNC[a.name](eval_array(a.arg, bindings))
    if isinstance(a, PolyAtom):
        return eval_array(a.body, bindings)
    raise NumintError(f"cannot evaluate atom {a!r}")


def _d4(arr, h: float, axis: int):
    """4th-order central first derivative via periodic rolls.

    Non-periodic edges produce wrapped garbage that the caller must trim.
    """
    up1 = np.roll(arr, -1, axis=axis)
    up2 = np.roll(arr, -2, axis=axis)
    dn1 = np.roll(arr, 1, axis=axis)
    dn2 = np.roll(arr, 2, axis=axis)
    return (-up2 + 8.0 * up1 - 8.0 * dn1 + dn2) / (12.0 * h)


@dataclass
class GridM1:
    t_end: float
    dt: float


@dataclass
class GridM2:
    dx: float
    dt: float
    t_end: float
    bc: str = "periodic"  # or "dirichlet"
    cfl: float = 0.5


@dataclass
class NumericSection:
    """Sampled section with derived-derivative helpers."""

    m: int
    N: int
    grids: dict  # axis name -> 1d array ("t", "x")
    phi: dict  # A -> array (nt,) or (nt, nx)
    v: dict | None  # m=1 integrator velocities, A -> array
    bc: str
    steps: dict  # axis -> spacing
    scheme: str
    seed: int | None = None
    truncated: bool = False
    diagnostic: str = ""

    def axes_periodic(self):
        if self.m == 1:
            return (False,)
        return (False, self.bc == "periodic")

    def deriv(self, arr, direction: int):
        """d/dx^direction with the meter stencil (direction is 1-based)."""
        h = self.steps["t"] if direction == 1 else self.steps["x"]
        return _d4(arr, h, direction - 1)

    def interior(self, arr):
        """Mask wrapped edge layers of non-periodic axes."""
        sl = []
        for periodic in self.axes_periodic():
            sl.append(slice(None) if periodic else slice(TRIM, -TRIM))
        return arr[tuple(sl)]

    def base_arrays(self) -> dict:
        if self.m == 1:
            return {"t": self.grids["t"]}
        t = self.grids["t"][:, None] + 0.0 * self.grids["x"][None, :]
        x = 0.0 * self.grids["t"][:, None] + self.grids["x"][None, :]
        return {"t": t, "x": x}


def _norms(arr) -> dict:
    flat = np.asarray(arr, dtype=float).ravel()
    if flat.size == 0:
        raise NumintError("empty interior; grid too coarse for the meter trim")
    return {
        "max": float(np.max(np.abs(flat))),
        "l2": float(math.sqrt(float(np.mean(flat * flat)))),
    }


def _merge_norms(per_entry: list) -> dict:
    mx = max(n["max"] for n in per_entry)
    l2 = math.sqrt(sum(n["l2"] ** 2 for n in per_entry) / len(per_entry))
    return {"max": mx, "l2": l2}


# ---------------------------------------------------------------------------
# integrators


def _g_functions_m1(sys: LagrangianSystem, coeffs: ELCoefficients | None):
    coeffs = coeffs or solve_el_coefficients(sys)
    if not coeffs.solvable:
        raise NumintError("no Euler-Lagrange coefficient solution to integrate")
    return {A: coeffs.particular[(A, 1, 1)] for A in range(1, sys.N + 1)}


def integrate_m1(
    sys: LagrangianSystem,
    initial: dict,
    grid: GridM1,
    params: dict | None = None,
    coeffs: ELCoefficients | None = None,
) -> NumericSection:
    """Classical RK4 on y'' = G(x, y, y').

    `initial` maps A -> (y0, v0).  Requires a regular system.
    """
    if sys.m != 1:
        raise NumintError("integrate_m1 needs a mechanics system (m=1)")
    if not classify_regularity(sys).regular:
        raise NumintError("integration requires a regular system")
    G = _g_functions_m1(sys, coeffs)
    params = dict(params or {})
    ch = sys.chart
    # Land exactly on t_end: the step is adjusted to the nearest divisor.
    nsteps = max(1, int(round(grid.t_end / grid.dt)))
    ts = np.linspace(0.0, grid.t_end, nsteps + 1)
    N = sys.N
    y = np.zeros((nsteps + 1, N))
    v = np.zeros((nsteps + 1, N))
    for A in range(1, N + 1):
        y0, v0 = initial[A]
        y[0, A - 1] = y0
        v[0, A - 1] = v0

    def accel(t, yv, vv):
        bind = dict(params)
        bind[ch.x(1)] = t
        for A in range(1, N + 1):
            bind[ch.y(A)] = yv[A - 1]
            bind[ch.v(A, 1)] = vv[A - 1]
        return np.array([evaluate(G[A], bind) for A in range(1, N + 1)])

    truncated = False
    diagnostic = ""
    n_done = nsteps
    h = grid.t_end / nsteps
    for n in range(nsteps):
        t = ts[n]
        yn, vn = y[n], v[n]
        try:
            k1y, k1v = vn, accel(t, yn, vn)
            k2y, k2v = vn + 0.5 * h * k1v, accel(t + 0.5 * h, yn + 0.5 * h * k1y, vn + 0.5 * h * k1v)
            k3y, k3v = vn + 0.5 * h * k2v, accel(t + 0.5 * h, yn + 0.5 * h * k2y, vn + 0.5 * h * k2v)
            k4y, k4v = vn + h * k3v, accel(t + h, yn + h * k3y, vn + h * k3v)
        except Exception as exc:
            truncated, diagnostic, n_done = True, f"evaluation failed at t={t}: {exc}", n
            break
        y[n + 1] = yn + (h / 6.0) * (k1y + 2 * k2y + 2 * k3y + k4y)
        v[n + 1] = vn + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
        if not (np.all(np.isfinite(y[n + 1])) and np.all(np.isfinite(v[n + 1]))):
            truncated, diagnostic, n_done = True, f"blow-up at t={ts[n+1]}", n
            break
    if truncated:
        y, v, ts = y[: n_done + 1], v[: n_done + 1], ts[: n_done + 1]
    return NumericSection(
        1,
        N,
        {"t": ts},
        {A: y[:, A - 1].copy() for A in range(1, N + 1)},
        {A: v[:, A - 1].copy() for A in range(1, N + 1)},
        "none",
        {"t": h},
        "rk4",
        truncated=truncated,
        diagnostic=diagnostic,
    )


def _evolution_data_m2(sys: LagrangianSystem, params: dict):
    """Constant blocks and the lower-order source for the leapfrog form."""
    ch = sys.chart
    N = sys.N
    pairs = [(A, a) for A in range(1, N + 1) for a in (1, 2)]
    for (A, a) in pairs:
        for (B, n) in pairs:
            if not sys.hessian[(A, a, B, n)].is_constant():
                raise NumintError("leapfrog form needs a constant velocity Hessian")
    Mtt = np.array(
        [
            [float(evaluate(sys.hessian[(A, 1, B, 1)], params)) for B in range(1, N + 1)]
            for A in range(1, N + 1)
        ]
    )
    Mxx = np.array(
        [
            [float(evaluate(sys.hessian[(A, 2, B, 2)], params)) for B in range(1, N + 1)]
            for A in range(1, N + 1)
        ]
    )
    Mtx = np.array(
        [
            [float(evaluate(sys.hessian[(A, 1, B, 2)], params)) for B in range(1, N + 1)]
            for A in range(1, N + 1)
        ]
    )
    if np.max(np.abs(Mtx)) > 0:
        raise NumintError("mixed time-space velocity coupling is not supported")
    # Hyperbolic: time block positive definite, space block negative definite.
    if np.any(np.linalg.eigvalsh(Mtt) <= 0) or np.any(np.linalg.eigvalsh(Mxx) >= 0):
        raise NumintError("system is not hyperbolic (+,-) in the velocity Hessian")
    source = {}
    for B in range(1, N + 1):
        r = sys.dL_dy[B]
        for n in (1, 2):
            r = r - derivative(sys.dL_dv[(B, n)], ch.x(n))
            for A in range(1, N + 1):
                r = r - derivative(sys.dL_dv[(B, n)], ch.y(A)) * as_expr(ch.v(A, n))
        for A in range(1, N + 1):
            if not derivative(r, ch.v(A, 1)).is_structural_zero():
                raise NumintError(
                    "lower-order terms involve the time velocity; unsupported"
                )
        source[B] = r
    c2 = float(np.max(np.abs(np.linalg.eigvals(np.linalg.solve(Mtt, -Mxx)))))
    return Mtt, Mxx, source, math.sqrt(c2)


def integrate_m2(
    sys: LagrangianSystem,
    init_phi: dict,
    init_dphi: dict,
    grid: GridM2,
    params: dict | None = None,
) -> NumericSection:
    """Explicit leapfrog for hyperbolic 1+1 systems on the unit circle/interval.

    `init_phi[A]` and `init_dphi[A]` are arrays over the space grid (or Exprs
    in x_2 to be sampled).  The CFL bound dt <= cfl * dx / wavespeed is
    enforced up front.
    """
    if sys.m != 2:
        raise NumintError("integrate_m2 needs a 1+1 field theory (m=2)")
    if sys.m > 2:
        raise NumintError("m >= 3 is not supported")
    params = dict(params or {})
    Mtt, Mxx, source, speed = _evolution_data_m2(sys, params)
    ch = sys.chart
    N = sys.N
    periodic = grid.bc == "periodic"
    nx = int(round(1.0 / grid.dx))
    xs = np.arange(nx) * grid.dx if periodic else np.linspace(0.0, 1.0, nx + 1)
    nt = max(1, int(round(grid.t_end / grid.dt)))
    dt = grid.t_end / nt
    ts = np.linspace(0.0, grid.t_end, nt + 1)
    if dt > grid.cfl * grid.dx / max(speed, 1e-12) + 1e-15:
        raise NumintError(
            f"CFL violation: dt={dt} > {grid.cfl} * dx/c = {grid.cfl * grid.dx / speed}"
        )

    def sample(spec):
        if isinstance(spec, np.ndarray):
            return spec.astype(float)
        e = as_expr(spec)
        bind = dict(params)
        bind[ch.x(2)] = xs
        out = eval_array(e, bind)
        return np.full_like(xs, float(out)) if np.isscalar(out) else out

    phi0 = np.stack([sample(init_phi[A]) for A in range(1, N + 1)])
    dphi0 = np.stack([sample(init_dphi[A]) for A in range(1, N + 1)])
    Mtt_inv = np.linalg.inv(Mtt)

    def accel(t, phi_now):
        if periodic:
            xx = (np.roll(phi_now, -1, 1) - 2 * phi_now + np.roll(phi_now, 1, 1)) / grid.dx**2
            vx = (np.roll(phi_now, -1, 1) - np.roll(phi_now, 1, 1)) / (2 * grid.dx)
        else:
            xx = np.zeros_like(phi_now)
            vx = np.zeros_like(phi_now)
            xx[:, 1:-1] = (phi_now[:, 2:] - 2 * phi_now[:, 1:-1] + phi_now[:, :-2]) / grid.dx**2
            vx[:, 1:-1] = (phi_now[:, 2:] - phi_now[:, :-2]) / (2 * grid.dx)
        bind = dict(params)
        bind[ch.x(1)] = t
        bind[ch.x(2)] = xs
        for A in range(1, N + 1):
            bind[ch.y(A)] = phi_now[A - 1]
            bind[ch.v(A, 2)] = vx[A - 1]
        src = np.stack(
            [np.broadcast_to(np.asarray(eval_array(source[B], bind), dtype=float), phi_now.shape[1:]) for B in range(1, N + 1)]
        )
        rhs = src - np.einsum("ab,bj->aj", Mxx, xx)
        return np.einsum("ab,bj->aj", Mtt_inv, rhs)

    frames = np.zeros((nt + 1, N, len(xs)))
    frames[0] = phi0
    a0 = accel(ts[0], phi0)
    frames[1] = phi0 + dt * dphi0 + 0.5 * dt**2 * a0
    if not periodic:
        frames[1][:, 0] = phi0[:, 0]
        frames[1][:, -1] = phi0[:, -1]
    truncated = False
    diagnostic = ""
    last = nt
    for n in range(1, nt):
        frames[n + 1] = 2 * frames[n] - frames[n - 1] + dt**2 * accel(ts[n], frames[n])
        if not periodic:
            frames[n + 1][:, 0] = phi0[:, 0]
            frames[n + 1][:, -1] = phi0[:, -1]
        if not np.all(np.isfinite(frames[n + 1])):
            truncated, diagnostic, last = True, f"blow-up at t={ts[n+1]}", n
            break
    if truncated:
        frames, ts = frames[: last + 1], ts[: last + 1]
    return NumericSection(
        2,
        N,
        {"t": ts, "x": xs},
        {A: frames[:, A - 1, :].copy() for A in range(1, N + 1)},
        None,
        grid.bc,
        {"t": dt, "x": grid.dx},
        "leapfrog",
        truncated=truncated,
        diagnostic=diagnostic,
    )


# ---------------------------------------------------------------------------
# derived arrays shared by the meters


def _section_bindings(sys: LagrangianSystem, s: NumericSection, params: dict):
    """Bindings of jet-chart symbols to derived arrays (v by 4th-order stencils)."""
    ch = sys.chart
    base = s.base_arrays()
    bind = dict(params)
    bind[ch.x(1)] = base["t"]
    if sys.m == 2:
        bind[ch.x(2)] = base["x"]
    vel = {}
    for A in range(1, sys.N + 1):
        bind[ch.y(A)] = s.phi[A]
        for a in range(1, sys.m + 1):
            vel[(A, a)] = s.deriv(s.phi[A], a)
            bind[ch.v(A, a)] = vel[(A, a)]
    return bind, vel


def el_residual(
    sys: LagrangianSystem, s: NumericSection, params: dict | None = None
) -> dict:
    """Euler-Lagrange residual field and norms over the interior."""
    params = dict(params or {})
    ctx, residuals = euler_lagrange_equations(sys)
    base = s.base_arrays()
    bind = dict(params)
    for a in range(1, sys.m + 1):
        bind[ctx.x[a - 1]] = base["t" if a == 1 else "x"]
    first = {}
    for A in range(1, sys.N + 1):
        bind[ctx.value[A]] = s.phi[A]
        for a in range(1, sys.m + 1):
            first[(A, a)] = s.deriv(s.phi[A], a)
            bind[ctx.d1[(A, a)]] = first[(A, a)]
    for A in range(1, sys.N + 1):
        for a in range(1, sys.m + 1):
            for n in range(a, sys.m + 1):
                second = s.deriv(first[(A, a)], n)
                bind[ctx.d2[(A, a, n)]] = second
    fields = [s.interior(np.asarray(eval_array(r, bind), dtype=float)) for r in residuals]
    per = [_norms(f) for f in fields]
    return {"fields": fields, "per_field": per, "norms": _merge_norms(per)}


def operator_residual(
    op, sys: LagrangianSystem, s: NumericSection, params: dict | None = None
) -> dict:
    """Residuals of the integral-section system for a field operator.

    f-family: difference quotients of phi against the stored velocities
    (identically the derived ones for m=2).  g-family: stencil derivatives of
    the momenta arrays against g along the prolonged section.  h-family: the
    same for the affine momentum, evaluated for both h variants when they
    disagree.
    """
    from .fieldop import EXTENDED, extend_operator

    params = dict(params or {})
    work = op if op.flavor == EXTENDED else extend_operator(op)
    bind, vel = _section_bindings(sys, s, params)
    out: dict = {}
    # f-family
    if s.v is not None:
        per = []
        for A in range(1, sys.N + 1):
            diff = s.interior(vel[(A, 1)] - s.v[A])
            per.append(_norms(diff))
        out["f"] = _merge_norms(per)
    else:
        # Velocities are themselves the difference quotients: exact zero.
        out["f"] = {"max": 0.0, "l2": 0.0}
    # g-family
    momenta = {
        (A, eta): np.asarray(eval_array(sys.dL_dv[(A, eta)], bind), dtype=float)
        for A in range(1, sys.N + 1)
        for eta in range(1, sys.m + 1)
    }
    per = []
    details = {}
    for A in range(1, sys.N + 1):
        for eta in range(1, sys.m + 1):
            for a in range(1, sys.m + 1):
                lhs = s.deriv(momenta[(A, eta)], a)
                rhs = eval_array(work.g[(A, eta, a)], bind)
                diff = s.interior(lhs - rhs)
                n = _norms(diff)
                details[f"g_{A}_{eta}_{a}"] = n
                per.append(n)
    out["g"] = _merge_norms(per)
    out["g_detail"] = details
    # h-family
    pa = np.asarray(eval_array(sys.energy_term(), bind), dtype=float)
    for label, table in (
        ("h", work.h_variants.get("geometric", work.h)),
        ("h_printed", work.h_variants.get("printed")),
    ):
        if table is None:
            continue
        if label == "h_printed" and work.h_variants.get("agree", False):
            continue
        per = []
        for a in range(1, sys.m + 1):
            lhs = s.deriv(pa, a)
            rhs = eval_array(table[a], bind)
            per.append(_norms(s.interior(lhs - rhs)))
        out[label] = _merge_norms(per)
    return out


def hdw_residual(
    hsys: HamiltonianSystem,
    sys: LagrangianSystem,
    s: NumericSection,
    params: dict | None = None,
) -> dict:
    """HDW residuals of psi = FL o j1(phi) built from the section arrays."""
    params = dict(params or {})
    bind, vel = _section_bindings(sys, s, params)
    rch = hsys.chart
    momenta = {
        (A, eta): np.asarray(eval_array(sys.dL_dv[(A, eta)], bind), dtype=float)
        for A in range(1, sys.N + 1)
        for eta in range(1, sys.m + 1)
    }
    psi_bind = dict(params)
    base = s.base_arrays()
    psi_bind[rch.x(1)] = base["t"]
    if sys.m == 2:
        psi_bind[rch.x(2)] = base["x"]
    for A in range(1, sys.N + 1):
        psi_bind[rch.y(A)] = s.phi[A]
        for eta in range(1, sys.m + 1):
            psi_bind[rch.p(A, eta)] = momenta[(A, eta)]
    per_y = []
    for A in range(1, sys.N + 1):
        for a in range(1, sys.m + 1):
            dH = eval_array(derivative(hsys.H, rch.p(A, a)), psi_bind)
            per_y.append(_norms(s.interior(vel[(A, a)] - dH)))
    per_div = []
    for A in range(1, sys.N + 1):
        acc = None
        for a in range(1, sys.m + 1):
            d = s.deriv(momenta[(A, a)], a)
            acc = d if acc is None else acc + d
        dH = eval_array(derivative(hsys.H, rch.y(A)), psi_bind)
        per_div.append(_norms(s.interior(acc + dH)))
    return {
        "y_family": _merge_norms(per_y),
        "divergence": _merge_norms(per_div),
        "norms": _merge_norms(per_y + per_div),
    }


def perturbed(s: NumericSection, amplitude: float = 0.1) -> NumericSection:
    """Section plus a smooth non-solution perturbation (separation tests)."""
    phi = {}
    for A, arr in s.phi.items():
        if s.m == 1:
            t = s.grids["t"]
            noise = amplitude * np.sin(3.0 * t + 0.7 * A)
        else:
            t = s.grids["t"][:, None]
            x = s.grids["x"][None, :]
            noise = amplitude * np.sin(2 * np.pi * x + 0.5 + A) * np.sin(3.0 * t + 0.3)
        phi[A] = arr + noise
    return NumericSection(
        s.m, s.N, s.grids, phi, None, s.bc, s.steps, s.scheme + "+noise"
    )


def measured_order(coarse: float, fine: float) -> float:
    """log2 ratio of norms under halving of every step."""
    if fine <= 0:
        return float("inf")
    return math.log2(coarse / fine)


def write_csv(s: NumericSection, path) -> None:
    """Grid columns then field columns, row-major over the grid."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if s.m == 1:
            header = ["x_1"] + [f"phi_{A}" for A in sorted(s.phi)]
            if s.v is not None:
                header += [f"dphi_{A}" for A in sorted(s.v)]
            w.writerow(header)
            for i, t in enumerate(s.grids["t"]):
                row = [f"{t:.12g}"] + [f"{s.phi[A][i]:.12g}" for A in sorted(s.phi)]
                if s.v is not None:
                    row += [f"{s.v[A][i]:.12g}" for A in sorted(s.v)]
                w.writerow(row)
        else:
            header = ["x_1", "x_2"] + [f"phi_{A}" for A in sorted(s.phi)]
            w.writerow(header)
            for i, t in enumerate(s.grids["t"]):
                for j, x in enumerate(s.grids["x"]):
                    w.writerow(
                        [f"{t:.12g}", f"{x:.12g}"]
                        + [f"{s.phi[A][i, j]:.12g}" for A in sorted(s.phi)]
                    )
