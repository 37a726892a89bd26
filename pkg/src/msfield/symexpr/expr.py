"""Symbolic scalar expressions over chart coordinates.

The canonical form is a flattened, term-sorted sum of monomials.  A monomial
is a rational coefficient times a product of atom powers with nonzero integer
exponents.  Atoms are chart symbols, applications of the supported unary
functions, or (only with negative exponents) parenthesized sums that arose
from division.  Positive integer powers of sums are always expanded, so
structural zeros such as (x+y)^2 - x^2 - 2xy - y^2 cancel exactly.  Rational
function normal forms are deliberately not computed; the probabilistic zero
test in `zero.py` is the backstop for identities the canonical form misses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Union

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "tanh")

CONST_CHART = "__const__"


class ExprError(Exception):
    """Base class for expression kernel failures."""


class EvaluationError(ExprError):
    """Evaluation hit an unbound symbol or a non-finite subtree."""

    def __init__(self, message: str, subtree: str | None = None):
        super().__init__(message if subtree is None else f"{message}: {subtree}")
        self.subtree = subtree


@dataclass(frozen=True)
class Symbol:
    """A named coordinate (or parameter) belonging to exactly one chart."""

    chart: str
    name: str
    role: str
    index: int

    @property
    def key(self) -> str:
        # Sort key: chart first, then declaration order within the chart.
        return f"S:{self.chart}:{self.index:04d}:{self.name}"

    def __repr__(self) -> str:
        return self.name


PI = Symbol(CONST_CHART, "pi", "const", 0)

_CONST_VALUES = {PI: math.pi}


class FuncAtom:
    """Application of one of the supported unary functions."""

    __slots__ = ("name", "arg", "_key")

    def __init__(self, name: str, arg: "Expr"):
        self.name = name
        self.arg = arg
        self._key = f"F:{name}({arg.key})"

    @property
    def key(self) -> str:
        return self._key

    def __eq__(self, other):
        return isinstance(other, FuncAtom) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self) -> str:
        return f"{self.name}({self.arg!r})"


class PolyAtom:
    """A nontrivial sum kept opaque; only appears with negative exponents."""

    __slots__ = ("body", "_key")

    def __init__(self, body: "Expr"):
        self.body = body
        self._key = f"P:({body.key})"

    @property
    def key(self) -> str:
        return self._key

    def __eq__(self, other):
        return isinstance(other, PolyAtom) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self) -> str:
        return f"({self.body!r})"


Atom = Union[Symbol, FuncAtom, PolyAtom]
Mono = tuple  # tuple[tuple[Atom, int], ...], sorted by atom key
Term = tuple  # tuple[Fraction, Mono]

ExprLike = Union["Expr", Symbol, int, Fraction]


class Expr:
    """Immutable canonical expression. Use the module helpers to build one."""

    __slots__ = ("terms", "_key", "_hash")

    def __init__(self, terms: tuple):
        self.terms = terms
        self._key = "+".join(
            f"{c}|" + ",".join(f"{a.key}^{e}" for a, e in mono) for c, mono in terms
        )
        self._hash = hash(self._key)

    @property
    def key(self) -> str:
        return self._key

    def __eq__(self, other):
        return isinstance(other, Expr) and self._key == other._key

    def __hash__(self):
        return self._hash

    def is_structural_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        """True when no chart symbol occurs (reserved constants allowed)."""
        return all(s.chart == CONST_CHART for s in self.symbols())

    def as_rational(self) -> Fraction | None:
        """The exact rational value, or None when not a bare constant."""
        if not self.terms:
            return Fraction(0)
        if len(self.terms) == 1 and not self.terms[0][1]:
            return self.terms[0][0]
        return None

    def symbols(self) -> set:
        out: set = set()
        _collect_symbols(self, out)
        return out

    def __add__(self, other):
        return add(self, as_expr(other))

    __radd__ = __add__

    def __neg__(self):
        return scale(self, Fraction(-1))

    def __sub__(self, other):
        return add(self, -as_expr(other))

    def __rsub__(self, other):
        return add(as_expr(other), -self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __pow__(self, n: int):
        return pow_int(self, n)

    def __repr__(self) -> str:
        return render(self)


ZERO: Expr
ONE: Expr


def _make(term_map: dict) -> Expr:
    terms = []
    for mono, coeff in term_map.items():
        if coeff != 0:
            terms.append((coeff, mono))
    terms.sort(key=lambda t: tuple((a.key, e) for a, e in t[1]))
    return Expr(tuple(terms))


def const(value) -> Expr:
    q = Fraction(value)
    if q == 0:
        return ZERO
    return Expr(((q, ()),))


def sym(s: Symbol) -> Expr:
    return Expr(((Fraction(1), ((s, 1),)),))


def as_expr(v: ExprLike) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, Symbol):
        return sym(v)
    return const(v)


def add(a: Expr, b: Expr) -> Expr:
    if not a.terms:
        return b
    if not b.terms:
        return a
    acc: dict = {}
    for coeff, mono in a.terms + b.terms:
        acc[mono] = acc.get(mono, Fraction(0)) + coeff
    return _make(acc)


def scale(a: Expr, q: Fraction) -> Expr:
    if q == 0:
        return ZERO
    return Expr(tuple((c * q, mono) for c, mono in a.terms))


def _mul_monos(m1: Mono, m2: Mono):
    """Merge two monomials; returns (extra_factor_expr|None, coeff, mono).

    A PolyAtom whose exponent turns positive after merging is expanded; the
    expansion is returned as an extra Expr factor to multiply back in.
    """
    powers: dict = {}
    for a, e in m1 + m2:
        powers[a] = powers.get(a, 0) + e
    extra: Expr | None = None
    out = []
    for a, e in powers.items():
        if e == 0:
            continue
        if isinstance(a, PolyAtom) and e > 0:
            piece = pow_int(a.body, e)
            extra = piece if extra is None else mul(extra, piece)
        else:
            out.append((a, e))
    out.sort(key=lambda p: p[0].key)
    return extra, tuple(out)


def mul(a: Expr, b: Expr) -> Expr:
    if not a.terms or not b.terms:
        return ZERO
    acc: dict = {}
    pending: list = []
    for c1, m1 in a.terms:
        for c2, m2 in b.terms:
            extra, mono = _mul_monos(m1, m2)
            if extra is None:
                acc[mono] = acc.get(mono, Fraction(0)) + c1 * c2
            else:
                pending.append(mul(Expr(((c1 * c2, mono),)), extra))
    result = _make(acc)
    for p in pending:
        result = add(result, p)
    return result


def _invert_term(coeff: Fraction, mono: Mono) -> Expr:
    inv = tuple((a, -e) for a, e in mono)
    return Expr(((Fraction(1, 1) / coeff, inv),))


def invert(a: Expr) -> Expr:
    if not a.terms:
        raise ZeroDivisionError("division by structurally zero expression")
    if len(a.terms) == 1:
        coeff, mono = a.terms[0]
        return _invert_term(coeff, mono)
    # Normalize so the leading coefficient is 1, keeping PolyAtoms canonical.
    lead = a.terms[0][0]
    body = scale(a, Fraction(1) / lead)
    atom = PolyAtom(body)
    return Expr(((Fraction(1) / lead, ((atom, -1),)),))


def div(a: Expr, b: Expr) -> Expr:
    return mul(a, invert(b))


def pow_int(a: Expr, n: int) -> Expr:
    if not isinstance(n, int):
        raise ExprError("powers are restricted to integer exponents")
    if n == 0:
        return ONE
    if n < 0:
        return pow_int(invert(a), -n)
    result = ONE
    base = a
    k = n
    while k:
        if k & 1:
            result = mul(result, base)
        base = mul(base, base) if k > 1 else base
        k >>= 1
    return result


def _rational_sqrt(q: Fraction) -> Fraction | None:
    if q < 0:
        return None
    rn = math.isqrt(q.numerator)
    rd = math.isqrt(q.denominator)
    if rn * rn == q.numerator and rd * rd == q.denominator:
        return Fraction(rn, rd)
    return None


def func(name: str, arg: Expr) -> Expr:
    if name not in FUNCTIONS:
        raise ExprError(f"unknown function '{name}'")
    q = arg.as_rational()
    if q is not None:
        if q == 0:
            return {"sin": ZERO, "tanh": ZERO, "sqrt": ZERO, "cos": ONE, "exp": ONE}.get(
                name, func_atom_expr(name, arg)
            )
        if name == "log" and q == 1:
            return ZERO
        if name == "sqrt":
            r = _rational_sqrt(q)
            if r is not None:
                return const(r)
    return func_atom_expr(name, arg)


def func_atom_expr(name: str, arg: Expr) -> Expr:
    return Expr(((Fraction(1), ((FuncAtom(name, arg), 1),)),))


def _collect_symbols(e: Expr, out: set) -> None:
    for _, mono in e.terms:
        for a, _e in mono:
            if isinstance(a, Symbol):
                out.add(a)
            elif isinstance(a, FuncAtom):
                _collect_symbols(a.arg, out)
            else:
                _collect_symbols(a.body, out)


# ---------------------------------------------------------------------------
# differentiation

_DFUNC: dict = {
    "sin": lambda u: func("cos", u),
    "cos": lambda u: -func("sin", u),
    "exp": lambda u: func("exp", u),
    "log": lambda u: invert(u),
    "sqrt": lambda u: div(const(Fraction(1, 2)), func("sqrt", u)),
    "tanh": lambda u: ONE - pow_int(func("tanh", u), 2),
}


def _d_atom(a: Atom, s: Symbol) -> Expr:
    if isinstance(a, Symbol):
        return ONE if a == s else ZERO
    if isinstance(a, FuncAtom):
        du = derivative(a.arg, s)
        if du.is_structural_zero():
            return ZERO
        return mul(_DFUNC[a.name](a.arg), du)
    return derivative(a.body, s)


def derivative(e: Expr, s: Symbol) -> Expr:
    acc = ZERO
    for coeff, mono in e.terms:
        for i, (a, n) in enumerate(mono):
            da = _d_atom(a, s)
            if da.is_structural_zero():
                continue
            rest = ONE
            for j, (b, k) in enumerate(mono):
                if j == i:
                    continue
                rest = mul(rest, Expr(((Fraction(1), ((b, k),)),)))
            piece = mul(Expr(((coeff * n, ()),)), rest)
            if n != 1:
                piece = mul(piece, _atom_power(a, n - 1))
            acc = add(acc, mul(piece, da))
    return acc


def _atom_power(a: Atom, n: int) -> Expr:
    if n == 0:
        return ONE
    if isinstance(a, PolyAtom) and n > 0:
        return pow_int(a.body, n)
    return Expr(((Fraction(1), ((a, n),)),))


# ---------------------------------------------------------------------------
# substitution and evaluation


def substitute(e: Expr, bindings: Mapping[Symbol, Expr]) -> Expr:
    if not bindings:
        return e
    acc = ZERO
    for coeff, mono in e.terms:
        piece = const(coeff)
        for a, n in mono:
            if isinstance(a, Symbol):
                repl = bindings.get(a)
                base = repl if repl is not None else sym(a)
            elif isinstance(a, FuncAtom):
                base = func(a.name, substitute(a.arg, bindings))
            else:
                base = substitute(a.body, bindings)
            piece = mul(piece, pow_int(base, n))
        acc = add(acc, piece)
    return acc


_FVALS: dict = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
    "tanh": math.tanh,
}


def evaluate(e: Expr, bindings: Mapping[Symbol, float]) -> float:
    """IEEE double evaluation; raises EvaluationError on unbound/non-finite."""
    total = 0.0
    for coeff, mono in e.terms:
        val = float(coeff)
        for a, n in mono:
            try:
                val *= _eval_atom(a, bindings) ** n
            except (ZeroDivisionError, OverflowError) as exc:
                raise EvaluationError(str(exc), _render_atom(a, n)) from exc
        total += val
    if not math.isfinite(total):
        raise EvaluationError("non-finite value", render(e))
    return total


def _eval_atom(a: Atom, bindings: Mapping[Symbol, float]) -> float:
    if isinstance(a, Symbol):
        if a in bindings:
            return float(bindings[a])
        if a in _CONST_VALUES:
            return _CONST_VALUES[a]
        raise EvaluationError("unbound symbol", a.name)
    if isinstance(a, FuncAtom):
        x = evaluate(a.arg, bindings)
        try:
            v = _FVALS[a.name](x)
        except ValueError as exc:
            raise EvaluationError(f"domain error in {a.name}", render(a.arg)) from exc
        if not math.isfinite(v):
            raise EvaluationError("non-finite value", repr(a))
        return v
    v = evaluate(a.body, bindings)
    if v == 0.0:
        raise EvaluationError("division by zero", repr(a))
    return v


# ---------------------------------------------------------------------------
# rendering (parseable by symexpr.parser with the owning symbol tables)


def _render_atom(a: Atom, e: int) -> str:
    if isinstance(a, Symbol):
        base = a.name
    elif isinstance(a, FuncAtom):
        base = f"{a.name}({render(a.arg)})"
    else:
        base = f"({render(a.body)})"
    k = abs(e)
    return base if k == 1 else f"{base}^{k}"


def _render_term(coeff: Fraction, mono: Mono) -> str:
    num_parts = [_render_atom(a, e) for a, e in mono if e > 0]
    den_parts = [_render_atom(a, e) for a, e in mono if e < 0]
    c = abs(coeff)
    if c.numerator != 1 or not num_parts:
        num_parts.insert(0, str(c.numerator))
    if c.denominator != 1:
        den_parts.insert(0, str(c.denominator))
    s = "*".join(num_parts)
    if den_parts:
        den = "*".join(den_parts)
        s += f"/({den})" if len(den_parts) > 1 else f"/{den}"
    return s


def render(e: Expr) -> str:
    if not e.terms:
        return "0"
    parts = []
    for i, (coeff, mono) in enumerate(e.terms):
        body = _render_term(coeff, mono)
        if i == 0:
            parts.append(body if coeff > 0 else f"-{body}")
        else:
            parts.append(f" + {body}" if coeff > 0 else f" - {body}")
    return "".join(parts)


ZERO = Expr(())
ONE = Expr(((Fraction(1), ()),))
