"""Expression kernel: parse, differentiate, substitute, evaluate, test zero."""

from .expr import (
    CONST_CHART,
    FUNCTIONS,
    ONE,
    PI,
    ZERO,
    EvaluationError,
    Expr,
    ExprError,
    Symbol,
    as_expr,
    const,
    derivative,
    evaluate,
    func,
    render,
    substitute,
    sym,
)
from .parser import ParseError, parse_expr
from .table import SymbolTable
from .zero import (
    DEFAULT_OPTIONS,
    SampleDomainError,
    ZeroCheck,
    ZeroOptions,
    equal,
    is_zero,
    sample_point,
)

eval_at = evaluate

__all__ = [
    "CONST_CHART",
    "FUNCTIONS",
    "ONE",
    "PI",
    "ZERO",
    "DEFAULT_OPTIONS",
    "EvaluationError",
    "Expr",
    "ExprError",
    "ParseError",
    "SampleDomainError",
    "Symbol",
    "SymbolTable",
    "ZeroCheck",
    "ZeroOptions",
    "as_expr",
    "const",
    "derivative",
    "equal",
    "eval_at",
    "evaluate",
    "func",
    "is_zero",
    "parse_expr",
    "render",
    "sample_point",
    "substitute",
    "sym",
]
