"""Zero testing: structural first, then seeded probabilistic sampling.

Full canonical simplification of transcendental expressions is out of reach,
so a non-structural zero is decided by evaluating at K independent random
points and comparing against the magnitude of the individual terms.  Results
carry the kind of evidence so downstream reports can distinguish exact
cancellations from sampled ones.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .expr import CONST_CHART, EvaluationError, Expr, Symbol, evaluate


class SampleDomainError(Exception):
    """Evaluation failed (non-finite) at more than half the sample points."""


@dataclass(frozen=True)
class ZeroOptions:
    """Sampling policy for the probabilistic zero test."""

    seed: int = 1729
    samples: int = 128
    rel_tol: float = 1e-9
    box: tuple = (-2.0, 2.0)
    exclusion: float = 1e-3


DEFAULT_OPTIONS = ZeroOptions()


@dataclass(frozen=True)
class ZeroCheck:
    """Boolean-with-confidence result of a zero test."""

    result: bool
    evidence: str  # "structural" or "probabilistic"
    witness: dict | None = None
    max_rel: float = 0.0

    def __bool__(self) -> bool:
        return self.result


def _draw(rng: random.Random, lo: float, hi: float, exclusion: float) -> float:
    while True:
        x = rng.uniform(lo, hi)
        if abs(x) >= exclusion:
            return x


def sample_point(symbols, rng: random.Random, options: ZeroOptions) -> dict:
    """One random point in the evaluation box for the given symbols."""
    point = {}
    for s in sorted(symbols, key=lambda s: s.key):
        if s.chart == CONST_CHART:
            continue
        point[s] = _draw(rng, options.box[0], options.box[1], options.exclusion)
    return point


def _term_scale(e: Expr, point: dict) -> float:
    scale = 1.0
    for coeff, mono in e.terms:
        piece = Expr(((coeff, mono),))
        try:
            scale = max(scale, abs(evaluate(piece, point)))
        except EvaluationError:
            continue
    return scale


def is_zero(e: Expr, options: ZeroOptions | None = None) -> ZeroCheck:
    """Decide whether `e` vanishes identically.

    TRUE structurally when the canonical form is empty, otherwise TRUE
    probabilistically when |e| <= rel_tol * max term magnitude at every
    sampled point.  A FALSE result carries a witness point.
    """
    if e.is_structural_zero():
        return ZeroCheck(True, "structural")
    opts = options or DEFAULT_OPTIONS
    q = e.as_rational()
    if q is not None:
        # A nonzero rational constant: no sampling needed.
        return ZeroCheck(False, "structural", witness={"value": float(q)})
    rng = random.Random(opts.seed)
    symbols = e.symbols()
    failures = 0
    worst = 0.0
    for _ in range(opts.samples):
        point = sample_point(symbols, rng, opts)
        try:
            value = evaluate(e, point)
        except EvaluationError:
            failures += 1
            if failures > opts.samples // 2:
                raise SampleDomainError(
                    f"non-finite at {failures} of {opts.samples} sample points"
                )
            continue
        rel = abs(value) / _term_scale(e, point)
        worst = max(worst, rel)
        if rel > opts.rel_tol:
            witness = {s.name: v for s, v in point.items()}
            witness["value"] = value
            return ZeroCheck(False, "probabilistic", witness=witness, max_rel=rel)
    return ZeroCheck(True, "probabilistic", max_rel=worst)


def equal(a: Expr, b: Expr, options: ZeroOptions | None = None) -> ZeroCheck:
    return is_zero(a - b, options)
