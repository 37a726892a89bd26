"""Charts: named coordinate systems with role-tagged coordinates.

Standard charts for a first-order field theory with m base dimensions and N
fields:

    jet chart        (x_a, y_A, v_A_a)        dimension m + N + N*m
    extended momenta (x_a, y_A, p_A_a, pa)    dimension m + N + N*m + 1
    restricted       (x_a, y_A, p_A_a)        dimension m + N + N*m
    base             (x_a,)                   dimension m

Momentum names follow the grammar `p_<A>_<a>` with the field index first.
Extra constant parameters (such as a mass) may be attached to any chart.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..symexpr import Expr, Symbol, SymbolTable, sym

ROLE_BASE = "base"
ROLE_FIBER = "fiber"
ROLE_VELOCITY = "velocity"
ROLE_MOMENTUM = "momentum"
ROLE_AFFINE = "affine-momentum"
ROLE_PARAM = "param"


@dataclass(frozen=True)
class Chart:
    name: str
    m: int
    N: int
    kind: str
    symbols: tuple

    @property
    def dim(self) -> int:
        return sum(1 for s in self.symbols if s.role != ROLE_PARAM)

    def coordinates(self) -> tuple:
        return tuple(s for s in self.symbols if s.role != ROLE_PARAM)

    def params(self) -> tuple:
        return tuple(s for s in self.symbols if s.role == ROLE_PARAM)

    def with_role(self, role: str) -> tuple:
        return tuple(s for s in self.symbols if s.role == role)

    def table(self) -> SymbolTable:
        return SymbolTable(self.symbols)

    def x(self, a: int) -> Symbol:
        return self._named(f"x_{a}")

    def y(self, A: int) -> Symbol:
        return self._named(f"y_{A}")

    def v(self, A: int, a: int) -> Symbol:
        return self._named(f"v_{A}_{a}")

    def p(self, A: int, a: int) -> Symbol:
        return self._named(f"p_{A}_{a}")

    def pa(self) -> Symbol:
        return self._named("pa")

    def param(self, name: str) -> Symbol:
        return self._named(name)

    def _named(self, name: str) -> Symbol:
        for s in self.symbols:
            if s.name == name:
                return s
        raise KeyError(f"chart {self.name} has no coordinate '{name}'")

    def index_of(self, s: Symbol) -> int:
        return self.coordinates().index(s)

    def coord_exprs(self) -> list[Expr]:
        return [sym(s) for s in self.coordinates()]

    def __repr__(self) -> str:
        return f"Chart({self.name})"


_registry: dict = {}


def _build(name: str, m: int, N: int, kind: str, specs, params) -> Chart:
    key = (name, params)
    if key in _registry:
        return _registry[key]
    symbols = []
    for i, (coord_name, role) in enumerate(specs):
        symbols.append(Symbol(name, coord_name, role, i))
    base = len(symbols)
    for j, p in enumerate(params):
        symbols.append(Symbol(name, p, ROLE_PARAM, base + j))
    chart = Chart(name, m, N, kind, tuple(symbols))
    _registry[key] = chart
    return chart


def jet_chart(m: int, N: int, params: tuple = ()) -> Chart:
    specs = [(f"x_{a}", ROLE_BASE) for a in range(1, m + 1)]
    specs += [(f"y_{A}", ROLE_FIBER) for A in range(1, N + 1)]
    specs += [
        (f"v_{A}_{a}", ROLE_VELOCITY) for A in range(1, N + 1) for a in range(1, m + 1)
    ]
    return _build(f"jet{m}{N}", m, N, "jet", specs, params)


def extended_momentum_chart(m: int, N: int, params: tuple = ()) -> Chart:
    specs = [(f"x_{a}", ROLE_BASE) for a in range(1, m + 1)]
    specs += [(f"y_{A}", ROLE_FIBER) for A in range(1, N + 1)]
    specs += [
        (f"p_{A}_{a}", ROLE_MOMENTUM) for A in range(1, N + 1) for a in range(1, m + 1)
    ]
    specs += [("pa", ROLE_AFFINE)]
    return _build(f"mom{m}{N}", m, N, "extended-momentum", specs, params)


def restricted_momentum_chart(m: int, N: int, params: tuple = ()) -> Chart:
    specs = [(f"x_{a}", ROLE_BASE) for a in range(1, m + 1)]
    specs += [(f"y_{A}", ROLE_FIBER) for A in range(1, N + 1)]
    specs += [
        (f"p_{A}_{a}", ROLE_MOMENTUM) for A in range(1, N + 1) for a in range(1, m + 1)
    ]
    return _build(f"rmom{m}{N}", m, N, "restricted-momentum", specs, params)


def base_chart(m: int) -> Chart:
    specs = [(f"x_{a}", ROLE_BASE) for a in range(1, m + 1)]
    return _build(f"base{m}", m, 0, "base", specs, ())
