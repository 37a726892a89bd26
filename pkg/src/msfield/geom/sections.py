"""Formal section symbols and total derivatives along prolonged sections.

Field equations are emitted over formal symbols for a section and its
derivatives: phi_A for values, phi_A_d<a> for first derivatives and
phi_A_d<a>d<n> (a <= n, symmetrized) for second derivatives.  The total
derivative treats these as independent symbols with the declared derivative
relations, which is the standard reading of d/dx^a along a prolonged section.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..symexpr import Expr, Symbol, SymbolTable, derivative, substitute, sym
from .chart import Chart


class JetSectionContext:
    """Formal symbols for a section x -> (x, phi(x)) prolonged to second order."""

    def __init__(self, chart: Chart):
        if chart.kind != "jet":
            raise ValueError("jet section context requires a jet chart")
        self.chart = chart
        m, N = chart.m, chart.N
        name = f"sect:{chart.name}"
        idx = 0
        self.x = []
        for a in range(1, m + 1):
            self.x.append(Symbol(name, f"x_{a}", "base", idx))
            idx += 1
        self.value: dict = {}
        for A in range(1, N + 1):
            self.value[A] = Symbol(name, f"phi_{A}", "value", idx)
            idx += 1
        self.d1: dict = {}
        for A in range(1, N + 1):
            for a in range(1, m + 1):
                self.d1[(A, a)] = Symbol(name, f"phi_{A}_d{a}", "deriv1", idx)
                idx += 1
        self.d2: dict = {}
        for A in range(1, N + 1):
            for a in range(1, m + 1):
                for n in range(a, m + 1):
                    self.d2[(A, a, n)] = Symbol(name, f"phi_{A}_d{a}d{n}", "deriv2", idx)
                    idx += 1
        self._params = chart.params()

    def second(self, A: int, a: int, n: int) -> Symbol:
        lo, hi = min(a, n), max(a, n)
        return self.d2[(A, lo, hi)]

    def table(self) -> SymbolTable:
        syms = list(self.x) + list(self.value.values())
        syms += list(self.d1.values()) + list(self.d2.values())
        return SymbolTable(syms + list(self._params))

    def along_prolongation(self, e: Expr) -> Expr:
        """Compose a jet-chart expression with the formal 1-jet of the section."""
        bindings = {}
        for a in range(1, self.chart.m + 1):
            bindings[self.chart.x(a)] = sym(self.x[a - 1])
        for A in range(1, self.chart.N + 1):
            bindings[self.chart.y(A)] = sym(self.value[A])
            for a in range(1, self.chart.m + 1):
                bindings[self.chart.v(A, a)] = sym(self.d1[(A, a)])
        return substitute(e, bindings)

    def total_derivative(self, e: Expr, a: int) -> Expr:
        """d/dx^a of a formal-section expression, entering second derivatives."""
        out = derivative(e, self.x[a - 1])
        for A in range(1, self.chart.N + 1):
            out = out + derivative(e, self.value[A]) * sym(self.d1[(A, a)])
            for n in range(1, self.chart.m + 1):
                out = out + derivative(e, self.d1[(A, n)]) * sym(self.second(A, a, n))
        return out


class MomentumSectionContext:
    """Formal symbols for a section of the restricted multimomentum bundle."""

    def __init__(self, chart: Chart):
        if chart.kind != "restricted-momentum":
            raise ValueError("momentum section context requires a restricted chart")
        self.chart = chart
        m, N = chart.m, chart.N
        name = f"sect:{chart.name}"
        idx = 0
        self.x = []
        for a in range(1, m + 1):
            self.x.append(Symbol(name, f"x_{a}", "base", idx))
            idx += 1
        self.y_value: dict = {}
        for A in range(1, N + 1):
            self.y_value[A] = Symbol(name, f"psi_{A}", "value", idx)
            idx += 1
        self.p_value: dict = {}
        for A in range(1, N + 1):
            for a in range(1, m + 1):
                self.p_value[(A, a)] = Symbol(name, f"psi_p_{A}_{a}", "value", idx)
                idx += 1
        self.y_d1: dict = {}
        self.p_d1: dict = {}
        for A in range(1, N + 1):
            for b in range(1, m + 1):
                self.y_d1[(A, b)] = Symbol(name, f"psi_{A}_d{b}", "deriv1", idx)
                idx += 1
        for A in range(1, N + 1):
            for a in range(1, m + 1):
                for b in range(1, m + 1):
                    self.p_d1[(A, a, b)] = Symbol(
                        name, f"psi_p_{A}_{a}_d{b}", "deriv1", idx
                    )
                    idx += 1
        self._params = chart.params()

    def table(self) -> SymbolTable:
        syms = list(self.x) + list(self.y_value.values()) + list(self.p_value.values())
        syms += list(self.y_d1.values()) + list(self.p_d1.values())
        return SymbolTable(syms + list(self._params))

    def along_section(self, e: Expr) -> Expr:
        """Compose a restricted-chart expression with the formal section."""
        bindings = {}
        for a in range(1, self.chart.m + 1):
            bindings[self.chart.x(a)] = sym(self.x[a - 1])
        for A in range(1, self.chart.N + 1):
            bindings[self.chart.y(A)] = sym(self.y_value[A])
            for a in range(1, self.chart.m + 1):
                bindings[self.chart.p(A, a)] = sym(self.p_value[(A, a)])
        return substitute(e, bindings)
