"""Batch front end: declarative model files in, reports and CSV sections out.

Model files are line-oriented `key = value` under `[section]` headers; see
README for the grammar.  Expression values reuse the shared expression
grammar (the reserved constant `pi` is available).  The machine-readable
report is a single versioned JSON document whose bytes are deterministic for
a fixed model and seed.

Exit codes: 0 all checks pass, 1 check failure, 2 input error, 3 numeric
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys as _sys
from dataclasses import dataclass, field

import numpy as np

from . import fieldop, hamiltonian, lagrangian, numint
from .geom import interior_mv, pullback
from .lagrangian import LagrangianSystem
from .symexpr import SymbolTable, ZeroOptions, evaluate, is_zero, parse_expr, render, sym

TOOL_VERSION = "0.1.0"
REPORT_SCHEMA = "msfield-report/1"


class ModelError(Exception):
    pass


@dataclass
class ModelFile:
    name: str
    m: int
    N: int
    lagrangian: str
    inverse_legendre: dict = field(default_factory=dict)  # (A, a) -> source text
    constraints: dict = field(default_factory=dict)  # name -> source text
    h0: str | None = None
    gauge: dict = field(default_factory=dict)  # (A, a, n) -> source text
    numeric: dict = field(default_factory=dict)


_SECTIONS = (
    "model",
    "lagrangian",
    "inverse_legendre",
    "constraints",
    "hamiltonian",
    "gauge",
    "numeric",
)


def parse_model(path: str) -> ModelFile:
    sections: dict = {}
    current = None
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ModelError(f"cannot read model file: {exc}")
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current not in _SECTIONS:
                raise ModelError(f"{path}:{lineno}: unknown section [{current}]")
            sections.setdefault(current, {})
            continue
        if current is None or "=" not in line:
            raise ModelError(f"{path}:{lineno}: expected 'key = value' inside a section")
        key, _, value = line.partition("=")
        sections[current][key.strip()] = value.strip()
    if "model" not in sections or "lagrangian" not in sections:
        raise ModelError(f"{path}: [model] and [lagrangian] sections are required")
    meta = sections["model"]
    try:
        name = meta["name"]
        m = int(meta["m"])
        N = int(meta["N"])
    except KeyError as exc:
        raise ModelError(f"{path}: [model] lacks {exc}")
    except ValueError as exc:
        raise ModelError(f"{path}: bad [model] value: {exc}")
    if m not in (1, 2, 3) or N < 1:
        raise ModelError(f"{path}: need m in {{1,2,3}} and N >= 1")
    if "expr" not in sections["lagrangian"]:
        raise ModelError(f"{path}: [lagrangian] needs 'expr ='")
    inverse = {}
    for key, text in sections.get("inverse_legendre", {}).items():
        parts = key.split("_")
        if len(parts) != 3 or parts[0] != "v":
            raise ModelError(f"{path}: bad inverse_legendre key '{key}' (want v_<A>_<a>)")
        inverse[(int(parts[1]), int(parts[2]))] = text
    gauge = {}
    for key, text in sections.get("gauge", {}).items():
        parts = key.split("_")
        if len(parts) != 4 or parts[0] != "g":
            raise ModelError(f"{path}: bad gauge key '{key}' (want g_<A>_<a>_<n>)")
        gauge[(int(parts[1]), int(parts[2]), int(parts[3]))] = text
    h0 = sections.get("hamiltonian", {}).get("h0")
    return ModelFile(
        name,
        m,
        N,
        sections["lagrangian"]["expr"],
        inverse,
        dict(sections.get("constraints", {})),
        h0,
        gauge,
        dict(sections.get("numeric", {})),
    )


def _number(model_text: str, what: str) -> float:
    """Numeric values: plain floats, or constant expressions (pi allowed)."""
    try:
        return float(model_text)
    except ValueError:
        pass
    try:
        return float(evaluate(parse_expr(model_text, SymbolTable()), {}))
    except Exception as exc:
        raise ModelError(f"bad numeric value for {what}: {model_text!r} ({exc})")


def build_system(model: ModelFile, options: ZeroOptions) -> LagrangianSystem:
    try:
        return LagrangianSystem(model.m, model.N, model.lagrangian, options=options)
    except Exception as exc:
        raise ModelError(f"invalid Lagrangian: {exc}")


# ---------------------------------------------------------------------------
# reports


@dataclass
class CheckRecord:
    name: str
    status: str  # "pass" | "fail" | "skipped"
    evidence: str = ""  # "structural" | "probabilistic" | "numeric" | ""
    detail: str = ""
    data: dict = field(default_factory=dict)


@dataclass
class Report:
    model: str
    command: str
    seed: int
    samples: int
    checks: list = field(default_factory=list)

    def add(self, record: CheckRecord) -> CheckRecord:
        self.checks.append(record)
        return record

    def failed(self) -> list:
        return [c for c in self.checks if c.status == "fail"]

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "tool": {"name": "msfield", "version": TOOL_VERSION},
            "model": self.model,
            "command": self.command,
            "seed": self.seed,
            "samples": self.samples,
            "checks": [
                {
                    "name": c.name,
                    "status": c.status,
                    "evidence": c.evidence,
                    "detail": c.detail,
                    "data": c.data,
                }
                for c in self.checks
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_text(self) -> str:
        lines = [f"model {self.model}: {self.command} (seed {self.seed}, samples {self.samples})"]
        for c in self.checks:
            mark = {"pass": "PASS", "fail": "FAIL", "skipped": "skip"}[c.status]
            ev = f" [{c.evidence}]" if c.evidence else ""
            detail = f"  {c.detail}" if c.detail else ""
            lines.append(f"  {mark} {c.name}{ev}{detail}")
        bad = len(self.failed())
        lines.append(
            f"{len(self.checks)} checks, {bad} failure(s)" if bad else f"{len(self.checks)} checks, all passing ok"
        )
        return "\n".join(lines) + "\n"


def _zero_record(name: str, exprs, opts, detail: str = "") -> CheckRecord:
    """Pass iff every expression is zero; evidence is the weakest kind used."""
    evidence = "structural"
    for e in exprs:
        chk = is_zero(e, opts)
        if not chk:
            data = {"witness": chk.witness or {}, "residual": render(e)}
            return CheckRecord(name, "fail", chk.evidence, detail, data)
        if chk.evidence != "structural":
            evidence = "probabilistic"
    return CheckRecord(name, "pass", evidence, detail)


def _form_zero_record(name: str, form, opts, detail: str = "") -> CheckRecord:
    return _zero_record(name, [c for _, c in form.items()], opts, detail)


# ---------------------------------------------------------------------------
# verify pipeline


def run_verify(model: ModelFile, seed: int = 1729, samples: int = 128) -> Report:
    opts = ZeroOptions(seed=seed, samples=samples)
    report = Report(model.name, "verify", seed, samples)
    sys_ = build_system(model, opts)
    ch = sys_.chart

    # Expression kernel invariants on this model.
    pairs = sys_.vel_pairs()
    sym_diffs = [
        sys_.hessian[(A, a, B, n)] - sys_.hessian[(B, n, A, a)]
        for (A, a) in pairs
        for (B, n) in pairs
    ]
    report.add(_zero_record("hessian_symmetry", sym_diffs, opts))

    theta_l, omega_l = sys_.poincare_cartan()
    fl_ext = hamiltonian.extended_legendre(sys_)
    fl = hamiltonian.restricted_legendre(sys_)
    theta, omega = hamiltonian.liouville_forms(fl_ext.target)
    report.add(
        _form_zero_record(
            "pullback_theta_extended", pullback(theta, fl_ext) - theta_l, opts
        )
    )
    report.add(
        _form_zero_record(
            "pullback_omega_extended", pullback(omega, fl_ext) - omega_l, opts
        )
    )
    report.add(
        _form_zero_record(
            "omega_l_expansion", sys_.omega_l_block_expansion() - omega_l, opts
        )
    )
    mu = hamiltonian.mu_projection(sys_)
    comp = fl_ext.compose(mu)
    diffs = [a - b for a, b in zip(comp.exprs, fl.exprs)]
    report.add(_zero_record("legendre_factorization", diffs, opts))

    reg = lagrangian.classify_regularity(sys_)
    report.add(
        CheckRecord(
            "regularity",
            "pass",
            "structural" if reg.regular else "numeric",
            reg.label(),
            {"hessian_det": render(reg.det)},
        )
    )

    coeffs = lagrangian.solve_el_coefficients(sys_)
    n_expected = sys_.N * (sys_.m**2 - 1)
    if coeffs.solvable:
        report.add(
            CheckRecord(
                "el_coefficients",
                "pass",
                "structural",
                f"particular solution found; freedom {coeffs.freedom}",
            )
        )
        if reg.regular:
            report.add(
                CheckRecord(
                    "el_freedom",
                    "pass" if coeffs.freedom == n_expected else "fail",
                    "structural",
                    f"{coeffs.freedom} == N(m^2-1) = {n_expected}",
                )
            )
        X = lagrangian.el_multivector(sys_, coeffs)
        report.add(
            _form_zero_record(
                "el_multivector_contraction", interior_mv(X, omega_l), opts
            )
        )
        from .geom import base_chart, base_projection

        trans = lagrangian.check_transverse(
            X, base_projection(ch, base_chart(sys_.m)), opts
        )
        report.add(
            CheckRecord(
                "el_transversality",
                "pass" if trans.transverse else "fail",
                trans.evidence,
            )
        )
    else:
        report.add(
            CheckRecord(
                "el_coefficients",
                "pass",
                "numeric",
                "inconsistent system; obstruction seeds reported",
                {"obstructions": [render(o) for o in coeffs.obstructions]},
            )
        )

    # Field operator checks (unconditional).
    try:
        op = fieldop.construct_extended_operator(sys_)
        report.add(CheckRecord("operator_construction", "pass", "structural"))
    except Exception as exc:
        report.add(CheckRecord("operator_construction", "fail", "", str(exc)))
        op = None
    if op is not None:
        chk = fieldop.check_operator(op, sys_)
        report.add(
            CheckRecord(
                "operator_normalization",
                "pass" if chk.normalization else "fail",
                chk.normalization_evidence,
            )
        )
        report.add(
            CheckRecord(
                "operator_semiholonomy",
                "pass" if chk.semiholonomy else "fail",
                chk.semiholonomy_evidence,
            )
        )
        report.add(
            CheckRecord(
                "operator_field_equation",
                "pass" if chk.field_equation else "fail",
                chk.field_equation_evidence,
                "",
                {"residual": chk.residual},
            )
        )
        report.add(
            CheckRecord(
                "operator_freedom",
                "pass" if op.freedom == n_expected else "fail",
                "structural",
                f"{op.freedom} == N(m^2-1) = {n_expected}",
            )
        )
        traces = [
            sum((op.g[(A, a, a)] for a in range(1, sys_.m + 1)), lagrangian.ZERO)
            - sys_.dL_dy[A]
            for A in range(1, sys_.N + 1)
        ]
        report.add(_zero_record("operator_trace_identity", traces, opts))
        if op.h_variants.get("agree", True):
            report.add(
                CheckRecord(
                    "h_variant_comparison",
                    "pass",
                    "structural",
                    "printed and geometric h coincide (m=1 reduction)",
                )
            )
        else:
            printed_op = fieldop.FieldOperator(
                fieldop.EXTENDED, sys_, dict(op.f), dict(op.g),
                op.h_variants["printed"],
            )
            printed_res = fieldop.field_equation_residual(printed_op)
            printed_fails = any(
                not is_zero(c, opts) for _, c in printed_res.items()
            )
            report.add(
                CheckRecord(
                    "h_variant_comparison",
                    "pass" if printed_fails else "fail",
                    "probabilistic",
                    "variants differ; geometric h satisfies the field equation, "
                    "printed (-1)^eta variant does not",
                    {
                        "geometric": {str(k): render(v) for k, v in op.h.items()},
                        "printed": {
                            str(k): render(v)
                            for k, v in op.h_variants["printed"].items()
                        },
                    },
                )
            )
        rop = fieldop.restrict_operator(op)
        if sys_.m == 1:
            diffs = [rop.f[(A, 1)] - sym(ch.v(A, 1)) for A in range(1, sys_.N + 1)]
            diffs += [rop.g[(A, 1, 1)] - sys_.dL_dy[A] for A in range(1, sys_.N + 1)]
            structural = all(d.is_structural_zero() for d in diffs)
            report.add(
                CheckRecord(
                    "mechanics_reduction",
                    "pass" if structural else "fail",
                    "structural",
                    "restricted tables are f = v, g = dL/dy",
                )
            )
        if coeffs.solvable and reg.regular:
            X = lagrangian.el_multivector(sys_, coeffs)
            op4 = fieldop.operator_from_el(X, sys_)
            back = fieldop.el_from_operator(op4, sys_)
            ok = back.solvable and all(
                (back.tables[key] - coeffs.particular[key]).is_structural_zero()
                for key in coeffs.particular
            )
            report.add(
                CheckRecord(
                    "theorem4_roundtrip",
                    "pass" if ok else "fail",
                    "structural",
                    "el_from_operator o operator_from_el is the identity",
                )
            )

    # Hamiltonian side.
    hsys = None
    if reg.regular:
        user_inverse = None
        if model.inverse_legendre:
            rch = hamiltonian.restricted_momentum_chart(sys_.m, sys_.N)
            user_inverse = {
                key: parse_expr(text, rch.table())
                for key, text in model.inverse_legendre.items()
            }
        try:
            hsys = hamiltonian.hamiltonian_from_legendre(sys_, user_inverse)
            report.add(
                CheckRecord(
                    "legendre_inverse_roundtrip",
                    "pass",
                    "structural",
                    f"H = {render(hsys.H)}",
                )
            )
        except hamiltonian.HamiltonianError as exc:
            report.add(CheckRecord("legendre_inverse_roundtrip", "fail", "", str(exc)))
    else:
        report.add(
            CheckRecord("legendre_inverse_roundtrip", "skipped", "", "singular system")
        )

    if hsys is not None:
        report.add(
            _form_zero_record(
                "pullback_theta_hamiltonian", pullback(hsys.theta_h, fl) - theta_l, opts
            )
        )
        report.add(
            _form_zero_record(
                "pullback_omega_hamiltonian", pullback(hsys.omega_h, fl) - omega_l, opts
            )
        )
        rebuilt = fl.substitute_into(
            sum(
                (
                    sym(hsys.chart.p(A, a)) * hsys.inverse_map.component(ch.v(A, a))
                    for A in range(1, sys_.N + 1)
                    for a in range(1, sys_.m + 1)
                ),
                -hsys.H,
            )
        )
        report.add(_zero_record("lagrangian_roundtrip", [rebuilt - sys_.L], opts))
        Xh = hamiltonian.hdw_multivector(hsys)
        report.add(
            _form_zero_record(
                "hdw_multivector_contraction", interior_mv(Xh, hsys.omega_h), opts
            )
        )
        freedom = hamiltonian.hdw_freedom_dimension(hsys)
        report.add(
            CheckRecord(
                "hdw_freedom",
                "pass" if freedom == n_expected else "fail",
                "structural",
                f"{freedom} == N(m^2-1) = {n_expected}",
            )
        )
        if op is not None:
            op6 = fieldop.operator_from_hdw(Xh, sys_, hsys)
            chk6 = fieldop.check_operator(op6, sys_)
            report.add(
                CheckRecord(
                    "theorem6_operator_conditions",
                    "pass" if chk6.all_ok() else "fail",
                    chk6.field_equation_evidence,
                    "operator induced from an HDW field satisfies all conditions",
                )
            )
            back = fieldop.hdw_from_operator(op6, sys_, hsys)
            diffs = []
            for comp_a, comp_b in zip(back.components, Xh.components):
                diffs += [x - y for x, y in zip(comp_a.coeffs, comp_b.coeffs)]
            ok = all(d.is_structural_zero() for d in diffs)
            report.add(
                CheckRecord(
                    "theorem6_roundtrip",
                    "pass" if ok else "fail",
                    "structural",
                    "hdw_from_operator o operator_from_hdw is the identity",
                )
            )
    else:
        for name in (
            "pullback_theta_hamiltonian",
            "pullback_omega_hamiltonian",
            "lagrangian_roundtrip",
            "hdw_multivector_contraction",
            "hdw_freedom",
            "theorem6_operator_conditions",
            "theorem6_roundtrip",
        ):
            report.add(CheckRecord(name, "skipped", "", "no Hamiltonian system"))

    # Constraints (almost-regular hooks).
    if model.constraints:
        rch = hamiltonian.restricted_momentum_chart(sys_.m, sys_.N)
        table = rch.table()
        exprs = {k: parse_expr(v, table) for k, v in model.constraints.items()}
        creport = hamiltonian.verify_constraints(sys_, exprs, opts)
        report.add(
            CheckRecord(
                "constraints_pullback",
                "pass" if not creport.failures else "fail",
                "probabilistic",
                (
                    "all constraints vanish on the Legendre image"
                    if not creport.failures
                    else f"failing: {creport.failures}"
                ),
                {"rank": creport.differential_rank},
            )
        )
        if op is not None:
            rop = fieldop.restrict_operator(op)
            transported = {
                k: [render(e) for e in fieldop.transport_constraint(rop, xi)]
                for k, xi in exprs.items()
            }
            report.add(
                CheckRecord(
                    "constraint_transport",
                    "pass",
                    "structural",
                    "transported constraints computed",
                    {"values": transported},
                )
            )
        if model.h0 is not None:
            try:
                hsys0, _ = hamiltonian.restricted_hamiltonian_system(
                    sys_, model.h0, exprs
                )
                report.add(
                    CheckRecord(
                        "almost_regular_identity",
                        "pass",
                        "probabilistic",
                        f"FL0* Theta_h0 = Theta_L with H0 = {render(hsys0.H)}",
                    )
                )
            except hamiltonian.HamiltonianError as exc:
                report.add(CheckRecord("almost_regular_identity", "fail", "", str(exc)))
    return report


# ---------------------------------------------------------------------------
# derive pipeline


def run_derive(model: ModelFile, seed: int = 1729, samples: int = 128) -> str:
    opts = ZeroOptions(seed=seed, samples=samples)
    sys_ = build_system(model, opts)
    out = []
    out.append(f"model {model.name} (m={model.m}, N={model.N})")
    out.append(f"lagrangian: {render(sys_.L)}")
    reg = lagrangian.classify_regularity(sys_)
    out.append(f"classification: {reg.label()}")
    theta_l, omega_l = sys_.poincare_cartan()
    out.append(f"theta_L = {theta_l!r}")
    out.append(f"omega_L = {omega_l!r}")
    fl_ext = hamiltonian.extended_legendre(sys_)
    fl = hamiltonian.restricted_legendre(sys_)
    out.append(f"extended legendre: {fl_ext!r}")
    out.append(f"restricted legendre: {fl!r}")
    ctx, residuals = lagrangian.euler_lagrange_equations(sys_)
    for A, r in enumerate(residuals, start=1):
        out.append(f"euler_lagrange[{A}]: {render(r)} = 0")
    if reg.regular:
        try:
            user_inverse = None
            if model.inverse_legendre:
                rch = hamiltonian.restricted_momentum_chart(sys_.m, sys_.N)
                user_inverse = {
                    key: parse_expr(text, rch.table())
                    for key, text in model.inverse_legendre.items()
                }
            hsys = hamiltonian.hamiltonian_from_legendre(sys_, user_inverse)
            out.append(f"H = {render(hsys.H)}")
            _, y_res, div_res = hamiltonian.hdw_equations(hsys)
            for i, r in enumerate(y_res):
                out.append(f"hdw_y[{i + 1}]: {render(r)} = 0")
            for i, r in enumerate(div_res):
                out.append(f"hdw_div[{i + 1}]: {render(r)} = 0")
        except hamiltonian.HamiltonianError as exc:
            out.append(f"H: unavailable ({exc})")
    else:
        out.append("H: unavailable (singular system; supply constraints and h0)")
    op = fieldop.construct_extended_operator(sys_)
    out.append("extended operator (multivector view):")
    out.append("  " + fieldop.as_view(op, "multivector").render())
    out.append("extended operator (jet-field view):")
    out.append("  " + fieldop.as_view(op, "jet-field").render())
    out.append("extended operator (connection view):")
    out.append("  " + fieldop.as_view(op, "connection").render())
    rop = fieldop.restrict_operator(op)
    out.append("restricted operator (multivector view):")
    out.append("  " + fieldop.as_view(rop, "multivector").render())
    return "\n".join(out) + "\n"


def run_classify(model: ModelFile, seed: int = 1729, samples: int = 128) -> str:
    opts = ZeroOptions(seed=seed, samples=samples)
    sys_ = build_system(model, opts)
    reg = lagrangian.classify_regularity(sys_)
    extra = f"; {reg.detail}" if reg.detail else ""
    return f"{model.name}: {reg.label()} (det = {render(reg.det)}){extra}\n"


# ---------------------------------------------------------------------------
# integrate pipeline


def _numeric_required(model: ModelFile, key: str) -> str:
    if key not in model.numeric:
        raise ModelError(f"[numeric] section lacks '{key}'")
    return model.numeric[key]


def _init_values(model: ModelFile, key: str, N: int) -> dict:
    out = {}
    for A in range(1, N + 1):
        suffixed = f"{key}_{A}"
        if suffixed in model.numeric:
            out[A] = model.numeric[suffixed]
        elif key in model.numeric and N == 1:
            out[A] = model.numeric[key]
        else:
            raise ModelError(f"[numeric] section lacks '{suffixed}'")
    return out


def _gauge_tables(model: ModelFile, sys_: LagrangianSystem):
    if not model.gauge:
        return None
    table = sys_.chart.table()
    return {key: parse_expr(text, table) for key, text in model.gauge.items()}


def run_integrate(model: ModelFile, out_dir: str | None, seed: int = 1729,
                  samples: int = 128):
    opts = ZeroOptions(seed=seed, samples=samples)
    report = Report(model.name, "integrate", seed, samples)
    sys_ = build_system(model, opts)
    if not model.numeric:
        raise ModelError("model has no [numeric] section")
    if sys_.m not in (1, 2):
        raise numint.NumintError("numeric integration supports m in {1, 2} only")

    gauge = _gauge_tables(model, sys_)
    coeffs = lagrangian.solve_el_coefficients(sys_)
    if gauge is not None:
        table = dict(coeffs.particular or {})
        table.update(gauge)
        X = lagrangian.el_multivector(sys_, table)
    else:
        X = lagrangian.el_multivector(sys_, coeffs)
    op = fieldop.operator_from_el(X, sys_)
    reg = lagrangian.classify_regularity(sys_)
    hsys = hamiltonian.hamiltonian_from_legendre(sys_) if reg.regular else None

    def integrate(scale: int, dt_override: float | None = None):
        """scale = 1 for the model grid, 2 for both steps halved."""
        if sys_.m == 1:
            dt = dt_override or _number(_numeric_required(model, "dt"), "dt") / scale
            t_end = _number(_numeric_required(model, "t_end"), "t_end")
            init_y = {
                A: (_number(v, "init_phi"), _number(w, "init_dphi"))
                for (A, v), w in zip(
                    _init_values(model, "init_phi", sys_.N).items(),
                    _init_values(model, "init_dphi", sys_.N).values(),
                )
            }
            return numint.integrate_m1(sys_, init_y, numint.GridM1(t_end, dt), coeffs=coeffs)
        if "dx" in model.numeric:
            dx = _number(model.numeric["dx"], "dx") / scale
        elif "grid" in model.numeric:
            dx = 1.0 / (int(model.numeric["grid"]) * scale)
        else:
            raise ModelError("[numeric] needs 'dx' or 'grid' for m=2")
        dt = _number(_numeric_required(model, "dt"), "dt") / scale
        t_end = _number(_numeric_required(model, "t_end"), "t_end")
        bc = model.numeric.get("bc", "periodic")
        if bc not in ("periodic", "dirichlet"):
            raise ModelError(f"bad bc '{bc}'")
        ch = sys_.chart
        table = ch.table()
        init_phi = {
            A: parse_expr(text, table)
            for A, text in _init_values(model, "init_phi", sys_.N).items()
        }
        init_dphi = {
            A: parse_expr(text, table)
            for A, text in _init_values(model, "init_dphi", sys_.N).items()
        }
        return numint.integrate_m2(
            sys_, init_phi, init_dphi, numint.GridM2(dx, dt, t_end, bc)
        )

    def meter_norms(s) -> dict:
        level = {"el": numint.el_residual(sys_, s)["norms"]}
        opres = numint.operator_residual(op, sys_, s)
        level["operator_f"] = opres["f"]
        level["operator_g"] = opres["g"]
        if "h" in opres:
            level["operator_h"] = opres["h"]
        if "h_printed" in opres:
            level["operator_h_printed"] = opres["h_printed"]
        if hsys is not None:
            level["hdw"] = numint.hdw_residual(hsys, sys_, s)["norms"]
        return level

    def checked(s):
        if s.truncated:
            raise numint.NumintError(f"integration truncated: {s.diagnostic}")
        return s

    base = checked(integrate(1))
    base_norms = meter_norms(base)
    # The order study runs where the meters sit well above round-off: on the
    # model grid for m=2, on a fixed coarse grid for m=1 (RK4 at the model
    # step is usually at the 1e-10 level already).
    if sys_.m == 1:
        t_end = _number(_numeric_required(model, "t_end"), "t_end")
        study_coarse = checked(integrate(1, dt_override=t_end / 256))
        study_fine = checked(integrate(1, dt_override=t_end / 512))
        coarse_norms = meter_norms(study_coarse)
        fine_norms = meter_norms(study_fine)
        sections = {"base": base, "study": study_fine}
    else:
        study_fine = checked(integrate(2))
        coarse_norms = base_norms
        fine_norms = meter_norms(study_fine)
        sections = {"base": base, "study": study_fine}

    order_band = (3.7, 4.3) if sys_.m == 1 else (1.7, 2.3)
    meters = ["el", "operator_g"] + (["hdw"] if hsys is not None else [])
    for meter in meters:
        coarse = coarse_norms[meter]["max"]
        fine = fine_norms[meter]["max"]
        order = numint.measured_order(coarse, fine)
        ok = order_band[0] <= order <= order_band[1]
        report.add(
            CheckRecord(
                f"order_{meter}",
                "pass" if ok else "fail",
                "numeric",
                f"measured order {order:.3f} in [{order_band[0]}, {order_band[1]}]",
                {"coarse": coarse, "fine": fine, "order": order},
            )
        )

    pert = numint.perturbed(base, 0.1)
    separations = {"el": numint.el_residual(sys_, pert)["norms"]["max"] / max(base_norms["el"]["max"], 1e-300)}
    opres_p = numint.operator_residual(op, sys_, pert)
    separations["operator_g"] = opres_p["g"]["max"] / max(base_norms["operator_g"]["max"], 1e-300)
    if hsys is not None:
        separations["hdw"] = numint.hdw_residual(hsys, sys_, pert)["norms"]["max"] / max(
            base_norms["hdw"]["max"], 1e-300
        )
    ok = all(v >= 10.0 for v in separations.values())
    report.add(
        CheckRecord(
            "separation",
            "pass" if ok else "fail",
            "numeric",
            "perturbed section residuals at least 10x the solution's",
            {k: float(v) for k, v in separations.items()},
        )
    )

    if "exact_phi_1" in model.numeric:
        tol = _number(model.numeric.get("exact_tol", "1e-2"), "exact_tol")
        table = sys_.chart.table()
        err = 0.0
        for A in range(1, sys_.N + 1):
            e = parse_expr(model.numeric[f"exact_phi_{A}"], table)
            bind = base.base_arrays()
            bindings = {sys_.chart.x(1): bind["t"]}
            if sys_.m == 2:
                bindings[sys_.chart.x(2)] = bind["x"]
            exact = numint.eval_array(e, bindings)
            err = max(err, float(np.max(np.abs(base.phi[A] - exact))))
        report.add(
            CheckRecord(
                "exact_solution_error",
                "pass" if err <= tol else "fail",
                "numeric",
                f"max |phi - exact| = {err:.6e} <= {tol:.1e}",
                {"error": err, "tol": tol},
            )
        )

    report.add(
        CheckRecord(
            "residual_norms",
            "pass",
            "numeric",
            "meter norms recorded (base grid and refinement study)",
            {"base": base_norms, "study_coarse": coarse_norms, "study_fine": fine_norms},
        )
    )

    artifacts = []
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        for label, s in sections.items():
            path = os.path.join(out_dir, f"{model.name}_{label}.csv")
            numint.write_csv(s, path)
            artifacts.append(path)
    return report, artifacts


# ---------------------------------------------------------------------------
# entry point


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="msfield",
        description="derive, verify and numerically check first-order Lagrangian field theories",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("derive", "classify", "verify", "integrate"):
        p = sub.add_parser(name)
        p.add_argument("model", help="path to a .model file")
        p.add_argument("--seed", type=int, default=1729)
        p.add_argument("--samples", type=int, default=128)
        if name == "verify":
            p.add_argument("--json", dest="json_path", default=None,
                           help="write the machine-readable report here")
        if name == "integrate":
            p.add_argument("--out", dest="out_dir", default=None,
                           help="directory for CSV sections and the JSON report")
    args = parser.parse_args(argv)
    try:
        model = parse_model(args.model)
    except ModelError as exc:
        print(f"input error: {exc}", file=_sys.stderr)
        return 2
    try:
        if args.command == "derive":
            _sys.stdout.write(run_derive(model, args.seed, args.samples))
            return 0
        if args.command == "classify":
            _sys.stdout.write(run_classify(model, args.seed, args.samples))
            return 0
        if args.command == "verify":
            report = run_verify(model, args.seed, args.samples)
            _sys.stdout.write(report.to_text())
            if args.json_path:
                with open(args.json_path, "w") as fh:
                    fh.write(report.to_json())
            return 1 if report.failed() else 0
        report, artifacts = run_integrate(model, args.out_dir, args.seed, args.samples)
        _sys.stdout.write(report.to_text())
        if args.out_dir:
            path = os.path.join(args.out_dir, f"{model.name}_report.json")
            with open(path, "w") as fh:
                fh.write(report.to_json())
            artifacts.append(path)
        for a in artifacts:
            print(f"wrote {a}")
        return 1 if report.failed() else 0
    except ModelError as exc:
        print(f"input error: {exc}", file=_sys.stderr)
        return 2
    except numint.NumintError as exc:
        print(f"numeric failure: {exc}", file=_sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
