"""Coordinate maps, pullbacks, and calculus along a map.

A CoordMap phi: source -> target is one source-chart Expr per target
coordinate.  It houses Legendre maps, Hamiltonian sections, projections and
formal section prolongations alike.

Along-map objects carry target-chart basis indices but source-chart
coefficient expressions: MapForm represents Xi o phi for a form Xi on the
target, MapMultiVec a decomposable m-vector field along phi.  Contraction is
pure pointwise multilinear algebra over the target index set;
`MapForm.pullback()` then lands the result back on the source chart by
substituting d(target coord) = sum_j d(phi^i)/d(source_j) d(source_j).
"""

from __future__ import annotations

from dataclasses import dataclass

from ..symexpr import ONE, ZERO, Expr, Symbol, as_expr, derivative, substitute
from .chart import Chart
from .forms import DiffForm, VectorFieldExpr, _merge_sorted, zero_form


class MapError(Exception):
    pass


class CoordMap:
    """A smooth map between charts, one Expr per target coordinate."""

    __slots__ = ("source", "target", "exprs", "_bindings")

    def __init__(self, source: Chart, target: Chart, exprs):
        self.source = source
        self.target = target
        self.exprs = tuple(as_expr(e) for e in exprs)
        if len(self.exprs) != target.dim:
            raise MapError(
                f"expected {target.dim} component expressions, got {len(self.exprs)}"
            )
        allowed = set(source.symbols)
        for e in self.exprs:
            for s in e.symbols():
                if s not in allowed and s.chart != "__const__":
                    raise MapError(f"component symbol '{s.name}' not in source chart")
        self._bindings = {
            coord: e for coord, e in zip(target.coordinates(), self.exprs)
        }
        # Shared parameters pass through by name.
        for p in target.params():
            match = [q for q in source.params() if q.name == p.name]
            if match:
                from ..symexpr import sym

                self._bindings[p] = sym(match[0])

    def component(self, coord) -> Expr:
        if coord in self._bindings:
            return self._bindings[coord]
        raise MapError(f"no component for '{coord.name}'")

    def substitute_into(self, e: Expr) -> Expr:
        """Compose a target-chart expression with the map."""
        return substitute(e, self._bindings)

    def compose(self, outer: "CoordMap") -> "CoordMap":
        """outer o self : source -> outer.target (requires matching middle chart)."""
        if outer.source is not self.target:
            raise MapError("charts do not line up for composition")
        return CoordMap(
            self.source,
            outer.target,
            [self.substitute_into(e) for e in outer.exprs],
        )

    def jacobian_row(self, coord) -> list[Expr]:
        """Partials of the `coord` component along all source coordinates."""
        e = self.component(coord)
        return [derivative(e, s) for s in self.source.coordinates()]

    def evaluate(self, point: dict) -> dict:
        from ..symexpr import evaluate as ev

        return {
            coord: ev(self.component(coord), point)
            for coord in self.target.coordinates()
        }

    def __repr__(self) -> str:
        rows = ", ".join(
            f"{c.name} <- {e!r}" for c, e in zip(self.target.coordinates(), self.exprs)
        )
        return f"CoordMap({self.source.name} -> {self.target.name}: {rows})"


def identity_map(chart: Chart) -> CoordMap:
    from ..symexpr import sym

    return CoordMap(chart, chart, [sym(s) for s in chart.coordinates()])


def base_projection(chart: Chart, base: Chart) -> CoordMap:
    """Forget the fiber: keep only the base coordinates."""
    from ..symexpr import sym

    return CoordMap(chart, base, [sym(chart.x(a)) for a in range(1, chart.m + 1)])


class MapForm:
    """A k-form along a CoordMap: target basis indices, source coefficients."""

    __slots__ = ("phi", "degree", "coeffs")

    def __init__(self, phi: CoordMap, degree: int, coeffs: dict | None = None):
        self.phi = phi
        self.degree = degree
        cleaned = {}
        for idx, c in (coeffs or {}).items():
            e = as_expr(c)
            if not e.is_structural_zero():
                cleaned[tuple(idx)] = e
        self.coeffs = cleaned

    @staticmethod
    def from_form(f: DiffForm, phi: CoordMap) -> "MapForm":
        """Xi o phi: compose each coefficient with the map."""
        if f.chart is not phi.target:
            raise MapError("form does not live on the map's target chart")
        return MapForm(
            phi,
            f.degree,
            {idx: phi.substitute_into(c) for idx, c in f.coeffs.items()},
        )

    def coefficient(self, idx) -> Expr:
        return self.coeffs.get(tuple(idx), ZERO)

    def pullback(self) -> DiffForm:
        """Land on the source chart: d z^i -> sum_j (d phi^i / d w^j) d w^j."""
        phi = self.phi
        src = phi.source
        target_coords = phi.target.coordinates()
        rows = {}

        def one_forms(i: int):
            if i not in rows:
                row = phi.jacobian_row(target_coords[i])
                rows[i] = [
                    (j, dj) for j, dj in enumerate(row) if not dj.is_structural_zero()
                ]
            return rows[i]

        out: dict = {}
        for idx, c in self.coeffs.items():
            partial = {(): c}
            for i in idx:
                nxt: dict = {}
                for built_idx, built_c in partial.items():
                    for j, dj in one_forms(i):
                        sign, merged = _merge_sorted(built_idx, (j,))
                        if sign == 0:
                            continue
                        term = built_c * dj * sign
                        if merged in nxt:
                            nxt[merged] = nxt[merged] + term
                        else:
                            nxt[merged] = term
                partial = nxt
            for midx, mc in partial.items():
                out[midx] = out.get(midx, ZERO) + mc
        return DiffForm(src, self.degree, out)


@dataclass(frozen=True)
class MapVector:
    """A vector field along a CoordMap."""

    phi: CoordMap
    coeffs: tuple  # one source-chart Expr per target coordinate

    def coefficient(self, coord) -> Expr:
        return self.coeffs[self.phi.target.index_of(coord)]


def map_vector(phi: CoordMap, mapping: dict) -> MapVector:
    coeffs = [ZERO] * phi.target.dim
    for coord, c in mapping.items():
        coeffs[phi.target.index_of(coord)] = as_expr(c)
    return MapVector(phi, tuple(coeffs))


class MapMultiVec:
    """Decomposable m-vector field along a CoordMap (f=1 representative)."""

    __slots__ = ("phi", "components")

    def __init__(self, phi: CoordMap, components):
        self.phi = phi
        self.components = tuple(components)

    def interior(self, f: MapForm) -> MapForm:
        """i(X_m) o ... o i(X_1) applied pointwise along the map."""
        if f.degree < len(self.components):
            return MapForm(self.phi, 0, {})
        acc = f
        for comp in self.components:
            out: dict = {}
            for idx, c in acc.coeffs.items():
                for pos_in_idx, coord_pos in enumerate(idx):
                    xc = comp.coeffs[coord_pos]
                    if xc.is_structural_zero():
                        continue
                    rest = idx[:pos_in_idx] + idx[pos_in_idx + 1 :]
                    term = xc * c * ((-1) ** pos_in_idx)
                    out[rest] = out.get(rest, ZERO) + term
            acc = MapForm(self.phi, acc.degree - 1, out)
        return acc


def pullback(f: DiffForm, phi: CoordMap) -> DiffForm:
    """phi^* f for a form on phi's target chart."""
    return MapForm.from_form(f, phi).pullback()
