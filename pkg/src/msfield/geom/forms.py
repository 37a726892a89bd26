"""Exterior forms, vector fields and decomposable multivector fields.

Forms store one Expr coefficient per strictly increasing coordinate
multi-index; antisymmetry is normalized away at construction.  Contraction
with a decomposable m-vector X_1 ^ ... ^ X_m is the iterated interior product
i(X_m) o ... o i(X_1).  The paper-level computations only ever test equality
to zero, so the overall orientation sign of this convention is immaterial
(the alternative ordering differs by (-1)^(m(m-1)/2) globally).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..symexpr import (
    ONE,
    ZERO,
    Expr,
    ZeroCheck,
    ZeroOptions,
    as_expr,
    derivative,
    evaluate,
    is_zero,
    sample_point,
    sym,
)
from ..symexpr.zero import DEFAULT_OPTIONS
from .chart import Chart


class ChartMismatch(Exception):
    """Operands live on different charts."""


def _require_same_chart(a, b) -> None:
    if a.chart is not b.chart:
        raise ChartMismatch(f"{a.chart!r} vs {b.chart!r}")


def _merge_sorted(i_idx: tuple, j_idx: tuple):
    """Merge two strictly increasing index tuples; returns (sign, merged)."""
    merged = list(i_idx)
    sign = 1
    for j in j_idx:
        pos = len(merged)
        for k, existing in enumerate(merged):
            if j == existing:
                return 0, ()
            if j < existing:
                pos = k
                break
        sign *= (-1) ** (len(merged) - pos)
        merged.insert(pos, j)
    return sign, tuple(merged)


class DiffForm:
    """Exterior k-form with Expr coefficients on one chart."""

    __slots__ = ("chart", "degree", "coeffs")

    def __init__(self, chart: Chart, degree: int, coeffs: dict | None = None):
        if degree < 0 or degree > chart.dim:
            raise ValueError(f"degree {degree} out of range on {chart.name}")
        self.chart = chart
        self.degree = degree
        cleaned = {}
        for idx, c in (coeffs or {}).items():
            e = as_expr(c)
            if len(idx) != degree or list(idx) != sorted(set(idx)):
                raise ValueError(f"bad multi-index {idx} for degree {degree}")
            if not e.is_structural_zero():
                cleaned[tuple(idx)] = e
        self.coeffs = cleaned

    def coefficient(self, idx: tuple) -> Expr:
        return self.coeffs.get(tuple(idx), ZERO)

    def items(self):
        return sorted(self.coeffs.items())

    def is_structural_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "DiffForm") -> "DiffForm":
        _require_same_chart(self, other)
        if self.degree != other.degree:
            raise ValueError("degree mismatch in form addition")
        out = dict(self.coeffs)
        for idx, c in other.coeffs.items():
            out[idx] = out.get(idx, ZERO) + c
        return DiffForm(self.chart, self.degree, out)

    def __sub__(self, other: "DiffForm") -> "DiffForm":
        return self + other.scale(-1)

    def scale(self, factor) -> "DiffForm":
        f = as_expr(factor)
        return DiffForm(
            self.chart, self.degree, {i: c * f for i, c in self.coeffs.items()}
        )

    def __neg__(self) -> "DiffForm":
        return self.scale(-1)

    def __repr__(self) -> str:
        if not self.coeffs:
            return "0"
        names = [s.name for s in self.chart.coordinates()]
        parts = []
        for idx, c in self.items():
            basis = "^".join(f"d{names[i]}" for i in idx) or "1"
            parts.append(f"({c!r}) {basis}")
        return " + ".join(parts)


def zero_form(chart: Chart, degree: int) -> DiffForm:
    return DiffForm(chart, degree, {})


def scalar_form(chart: Chart, value) -> DiffForm:
    return DiffForm(chart, 0, {(): as_expr(value)})


def dcoord(chart: Chart, coord) -> DiffForm:
    """The basis 1-form of a coordinate symbol."""
    i = chart.index_of(coord)
    return DiffForm(chart, 1, {(i,): ONE})


def wedge(a: DiffForm, b: DiffForm) -> DiffForm:
    _require_same_chart(a, b)
    degree = a.degree + b.degree
    out: dict = {}
    for i_idx, ci in a.coeffs.items():
        for j_idx, cj in b.coeffs.items():
            sign, merged = _merge_sorted(i_idx, j_idx)
            if sign == 0:
                continue
            term = ci * cj * sign
            out[merged] = out.get(merged, ZERO) + term
    return DiffForm(a.chart, degree, out)


def wedge_all(forms) -> DiffForm:
    it = iter(forms)
    acc = next(it)
    for f in it:
        acc = wedge(acc, f)
    return acc


def volume_form(chart: Chart) -> DiffForm:
    """omega = dx^1 ^ ... ^ dx^m on any chart carrying base coordinates."""
    idx = tuple(chart.index_of(x) for x in chart.with_role("base"))
    return DiffForm(chart, len(idx), {idx: ONE})


def exterior_derivative(f: DiffForm) -> DiffForm:
    coords = f.chart.coordinates()
    out: dict = {}
    for idx, c in f.coeffs.items():
        for s_pos, s in enumerate(coords):
            dc = derivative(c, s)
            if dc.is_structural_zero():
                continue
            sign, merged = _merge_sorted((s_pos,), idx)
            if sign == 0:
                continue
            out[merged] = out.get(merged, ZERO) + dc * sign
    return DiffForm(f.chart, f.degree + 1, out)


@dataclass(frozen=True)
class VectorFieldExpr:
    """A vector field as one Expr coefficient per chart coordinate."""

    chart: Chart
    coeffs: tuple

    def __post_init__(self):
        if len(self.coeffs) != self.chart.dim:
            raise ValueError("coefficient count must equal the chart dimension")

    def coefficient(self, coord) -> Expr:
        return self.coeffs[self.chart.index_of(coord)]

    def apply(self, e: Expr) -> Expr:
        """Directional derivative X(e)."""
        out = ZERO
        for pos, s in enumerate(self.chart.coordinates()):
            c = self.coeffs[pos]
            if c.is_structural_zero():
                continue
            out = out + c * derivative(e, s)
        return out


def vector_field(chart: Chart, mapping: dict) -> VectorFieldExpr:
    coeffs = [ZERO] * chart.dim
    for coord, c in mapping.items():
        coeffs[chart.index_of(coord)] = as_expr(c)
    return VectorFieldExpr(chart, tuple(coeffs))


def interior(X: VectorFieldExpr, f: DiffForm) -> DiffForm:
    """Interior product i(X) f."""
    _require_same_chart(X, f)
    if f.degree == 0:
        return zero_form(f.chart, 0)
    out: dict = {}
    for idx, c in f.coeffs.items():
        for pos_in_idx, coord_pos in enumerate(idx):
            xc = X.coeffs[coord_pos]
            if xc.is_structural_zero():
                continue
            rest = idx[:pos_in_idx] + idx[pos_in_idx + 1 :]
            term = xc * c * ((-1) ** pos_in_idx)
            out[rest] = out.get(rest, ZERO) + term
    return DiffForm(f.chart, f.degree - 1, out)


def lie_bracket(a: VectorFieldExpr, b: VectorFieldExpr) -> VectorFieldExpr:
    _require_same_chart(a, b)
    coeffs = []
    for pos, _ in enumerate(a.chart.coordinates()):
        coeffs.append(a.apply(b.coeffs[pos]) - b.apply(a.coeffs[pos]))
    return VectorFieldExpr(a.chart, tuple(coeffs))


class MultiVec:
    """Decomposable m-vector field stored as its m component vector fields.

    Distributions are only ever represented by the f=1 transverse
    representative: the a-th component has coefficient 1 on d/dx^a and 0 on
    the other base directions.
    """

    __slots__ = ("chart", "components")

    def __init__(self, chart: Chart, components):
        comps = tuple(components)
        if len(comps) != chart.m:
            raise ValueError(f"expected {chart.m} components, got {len(comps)}")
        for c in comps:
            if c.chart is not chart:
                raise ChartMismatch(f"{c.chart!r} vs {chart!r}")
        self.chart = chart
        self.components = comps

    def __repr__(self) -> str:
        return " ^ ".join(
            "("
            + " + ".join(
                f"({c!r}) d/d{s.name}"
                for s, c in zip(self.chart.coordinates(), comp.coeffs)
                if not c.is_structural_zero()
            )
            + ")"
            for comp in self.components
        )


def interior_mv(X: MultiVec, f: DiffForm) -> DiffForm:
    """Contraction i(X) f = i(X_m) o ... o i(X_1) applied to f.

    Forms of degree below m contract to zero by convention.
    """
    if f.degree < X.chart.m:
        return zero_form(f.chart, 0)
    acc = f
    for comp in X.components:
        acc = interior(comp, acc)
    return acc


@dataclass
class TransversalityReport:
    transverse: bool
    evidence: str
    value: Expr
    witness: dict | None = None

    def __bool__(self) -> bool:
        return self.transverse


def check_transverse(X: MultiVec, projection, options: ZeroOptions | None = None):
    """Is i(X)(pullback of the base volume form) nowhere zero?

    `projection` is a CoordMap from X's chart onto a base chart carrying the
    volume form.  For f=1 representatives the value is structurally 1.
    """
    from .maps import pullback

    opts = options or DEFAULT_OPTIONS
    omega = volume_form(projection.target)
    pulled = pullback(omega, projection)
    value = interior_mv(X, pulled).coefficient(())
    if value.is_structural_zero():
        return TransversalityReport(False, "structural", value)
    if value == ONE:
        return TransversalityReport(True, "structural", value)
    check = is_zero(value - ONE, opts)
    if check:
        return TransversalityReport(True, check.evidence, value)
    # Not identically 1: sample for vanishing points instead.
    import random

    rng = random.Random(opts.seed)
    symbols = value.symbols()
    for _ in range(opts.samples):
        point = sample_point(symbols, rng, opts)
        try:
            v = evaluate(value, point)
        except Exception:
            continue
        if abs(v) < 1e-12:
            return TransversalityReport(
                False, "probabilistic", value, {s.name: x for s, x in point.items()}
            )
    return TransversalityReport(True, "probabilistic", value)


@dataclass
class InvolutivityReport:
    involutive: bool
    failing_pairs: list

    def __bool__(self) -> bool:
        return self.involutive


def check_involutive(
    X: MultiVec, options: ZeroOptions | None = None, rank_samples: int = 64
) -> InvolutivityReport:
    """Frobenius test: does every [X_a, X_b] stay inside span(X_1..X_m)?

    For f=1 representatives the only candidate combination is read off the
    base components of the bracket; the leftover coefficients must vanish.
    When a leftover is not a structural zero it is sampled, and as a backstop
    the span membership is decided by a rank test (SVD, relative threshold
    1e-8) at random points.
    """
    opts = options or DEFAULT_OPTIONS
    m = X.chart.m
    base_pos = [X.chart.index_of(x) for x in X.chart.with_role("base")]
    failing = []
    for a in range(m):
        for b in range(a + 1, m):
            bracket = lie_bracket(X.components[a], X.components[b])
            residual = list(bracket.coeffs)
            for direction, comp in enumerate(X.components):
                factor = bracket.coeffs[base_pos[direction]]
                if factor.is_structural_zero():
                    continue
                residual = [
                    r - factor * c for r, c in zip(residual, comp.coeffs)
                ]
            checks = [is_zero(r, opts) for r in residual]
            if all(checks):
                continue
            # Rank-test fallback at sample points.
            witness = _rank_witness(X, bracket, opts, rank_samples)
            if witness is not None:
                failing.append({"pair": (a + 1, b + 1), "witness": witness})
    return InvolutivityReport(not failing, failing)


def _rank_witness(X: MultiVec, bracket: VectorFieldExpr, opts, samples: int):
    import random

    rng = random.Random(opts.seed)
    symbols = set()
    for comp in X.components:
        for c in comp.coeffs:
            symbols |= c.symbols()
    for c in bracket.coeffs:
        symbols |= c.symbols()
    symbols |= set(X.chart.coordinates())
    for _ in range(samples):
        point = sample_point(symbols, rng, opts)
        try:
            rows = [
                [evaluate(c, point) for c in comp.coeffs] for comp in X.components
            ]
            extra = [evaluate(c, point) for c in bracket.coeffs]
        except Exception:
            continue
        span = np.array(rows, dtype=float)
        stacked = np.array(rows + [extra], dtype=float)
        s_span = np.linalg.svd(span, compute_uv=False)
        s_all = np.linalg.svd(stacked, compute_uv=False)
        tol = 1e-8 * max(s_all[0], 1.0)
        rank_span = int(np.sum(s_span > tol))
        rank_all = int(np.sum(s_all > tol))
        if rank_all > rank_span:
            return {s.name: v for s, v in point.items()}
    return None
