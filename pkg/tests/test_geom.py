"""Exterior calculus: wedge, d, interior products, pullbacks, brackets."""

import pytest

from msfield.geom import (
    MultiVec,
    base_chart,
    base_projection,
    check_involutive,
    check_transverse,
    dcoord,
    exterior_derivative,
    extended_momentum_chart,
    interior,
    interior_mv,
    jet_chart,
    lie_bracket,
    pullback,
    scalar_form,
    vector_field,
    volume_form,
    wedge,
)
from msfield.hamiltonian import extended_legendre, liouville_forms
from msfield.lagrangian import LagrangianSystem, _dminus1_x
from msfield.symexpr import ONE, ZERO, const, is_zero, parse_expr, render, sym

J11 = jet_chart(1, 1)
J21 = jet_chart(2, 1)
M11 = extended_momentum_chart(1, 1)
M21 = extended_momentum_chart(2, 1)


def form_is_zero(f):
    return all(is_zero(c) for _, c in f.items())


# -- wedge ---------------------------------------------------------------------


def test_wedge_antisymmetry():
    dx = dcoord(J11, J11.x(1))
    dy = dcoord(J11, J11.y(1))
    assert (wedge(dx, dy) + wedge(dy, dx)).is_structural_zero()
    assert wedge(dx, dx).is_structural_zero()


def test_wedge_contact_form_example():
    # (dy - v dx) ^ dx = dy ^ dx  (hand expansion)
    dx = dcoord(J11, J11.x(1))
    dy = dcoord(J11, J11.y(1))
    contact = dy - dx.scale(sym(J11.v(1, 1)))
    assert (wedge(contact, dx) - wedge(dy, dx)).is_structural_zero()


def test_wedge_graded_commutativity_on_two_forms():
    a = wedge(dcoord(M21, M21.p(1, 1)), dcoord(M21, M21.y(1)))
    b = wedge(dcoord(M21, M21.x(1)), dcoord(M21, M21.x(2)))
    # deg 2 * deg 2: a^b = +b^a
    assert (wedge(a, b) - wedge(b, a)).is_structural_zero()


# -- exterior derivative ---------------------------------------------------------


def test_d_of_momentum_times_dy():
    # m=1: d(p dy ^ d^0 x) = dp ^ dy
    theta = dcoord(M11, M11.y(1)).scale(sym(M11.p(1, 1)))
    d = exterior_derivative(theta)
    expected = wedge(dcoord(M11, M11.p(1, 1)), dcoord(M11, M11.y(1)))
    assert (d - expected).is_structural_zero()


def test_d_squared_is_zero_on_corpus():
    sys_ = LagrangianSystem(2, 1, "(v_1_1^2 - v_1_2^2)/2 - y_1^2/2")
    theta_l, _ = sys_.poincare_cartan()
    for f in (theta_l, scalar_form(J21, parse_expr("sin(x_1)*y_1", J21.table()))):
        assert exterior_derivative(exterior_derivative(f)).is_structural_zero()
    assert exterior_derivative(dcoord(M21, M21.x(1))).is_structural_zero()


@pytest.mark.parametrize("m", [1, 2])
def test_liouville_omega_matches_displayed_expansion(m):
    # Omega = -d Theta must reproduce -dp^a_A ^ dy^A ^ d^{m-1}x_a - dpa ^ d^m x.
    chart = extended_momentum_chart(m, 1)
    theta, omega = liouville_forms(chart)
    expected = wedge(dcoord(chart, chart.pa()), volume_form(chart)).scale(-1)
    for a in range(1, m + 1):
        block = wedge(
            wedge(dcoord(chart, chart.p(1, a)), dcoord(chart, chart.y(1))),
            _dminus1_x(chart, a),
        )
        expected = expected - block
    assert (omega - expected).is_structural_zero()


# -- interior products -------------------------------------------------------------


def test_interior_defines_dm1x():
    # i(d/dx^a) d^m x: m=2 gives dx_2 for a=1 and -dx_1 for a=2.
    omega = volume_form(J21)
    d1 = interior(vector_field(J21, {J21.x(1): ONE}), omega)
    d2 = interior(vector_field(J21, {J21.x(2): ONE}), omega)
    assert (d1 - dcoord(J21, J21.x(2))).is_structural_zero()
    assert (d2 + dcoord(J21, J21.x(1))).is_structural_zero()


def test_interior_of_f1_representative_is_one():
    X = MultiVec(
        J21,
        [
            vector_field(J21, {J21.x(1): ONE, J21.y(1): sym(J21.v(1, 1))}),
            vector_field(J21, {J21.x(2): ONE, J21.y(1): sym(J21.v(1, 2))}),
        ],
    )
    value = interior_mv(X, volume_form(J21))
    assert value.coefficient(()) == ONE


def test_interior_component_swap_flips_sign():
    X1 = vector_field(J21, {J21.x(1): ONE, J21.v(1, 1): sym(J21.y(1))})
    X2 = vector_field(J21, {J21.x(2): ONE})
    theta, omega = liouville_forms(M21)
    sysmap = extended_legendre(LagrangianSystem(2, 1, "(v_1_1^2 - v_1_2^2)/2"))
    f = pullback(omega, sysmap)
    a = interior_mv(MultiVec(J21, [X1, X2]), f)
    b = interior_mv(MultiVec(J21, [X2, X1]), f)
    assert (a + b).is_structural_zero()


def test_interior_low_degree_contracts_to_zero():
    X = MultiVec(
        J21,
        [
            vector_field(J21, {J21.x(1): ONE}),
            vector_field(J21, {J21.x(2): ONE}),
        ],
    )
    one_form = dcoord(J21, J21.y(1))
    assert interior_mv(X, one_form).is_structural_zero()


# -- pullback ------------------------------------------------------------------------


def test_pullback_theta_free_particle():
    # FL~* Theta = v dy - v^2/2 dx for L = v^2/2 (hand computation).
    sys_ = LagrangianSystem(1, 1, "v_1_1^2/2")
    fl = extended_legendre(sys_)
    theta, _ = liouville_forms(M11)
    pulled = pullback(theta, fl)
    v = sym(J11.v(1, 1))
    expected = dcoord(J11, J11.y(1)).scale(v) - dcoord(J11, J11.x(1)).scale(v * v / 2)
    assert (pulled - expected).is_structural_zero()


def test_pullback_of_constant_scalar():
    sys_ = LagrangianSystem(1, 1, "v_1_1^2/2")
    fl = extended_legendre(sys_)
    f = scalar_form(M11, const(7))
    assert (pullback(f, fl) - scalar_form(J11, const(7))).is_structural_zero()


def test_pullback_commutes_with_d():
    sys_ = LagrangianSystem(2, 1, "(v_1_1^2 - v_1_2^2)/2 - y_1^2/2")
    fl = extended_legendre(sys_)
    theta, _ = liouville_forms(M21)
    lhs = pullback(exterior_derivative(theta), fl)
    rhs = exterior_derivative(pullback(theta, fl))
    assert form_is_zero(lhs - rhs)


def test_pullback_is_ring_morphism():
    sys_ = LagrangianSystem(2, 1, "(v_1_1^2 - v_1_2^2)/2 - y_1^2/2")
    fl = extended_legendre(sys_)
    a = dcoord(M21, M21.p(1, 1)).scale(sym(M21.y(1)))
    b = wedge(dcoord(M21, M21.x(1)), dcoord(M21, M21.p(1, 2)))
    lhs = pullback(wedge(a, b), fl)
    rhs = wedge(pullback(a, fl), pullback(b, fl))
    assert form_is_zero(lhs - rhs)


# -- Lie bracket --------------------------------------------------------------------


def test_bracket_of_coordinate_fields_vanishes():
    a = vector_field(J11, {J11.x(1): ONE})
    b = vector_field(J11, {J11.y(1): ONE})
    assert all(c.is_structural_zero() for c in lie_bracket(a, b).coeffs)


def test_bracket_with_linear_coefficient():
    a = vector_field(J11, {J11.x(1): ONE})
    b = vector_field(J11, {J11.y(1): sym(J11.x(1))})
    br = lie_bracket(a, b)
    assert br.coefficient(J11.y(1)) == ONE
    assert br.coefficient(J11.x(1)).is_structural_zero()


def test_bracket_rotation_example():
    # [y d/dx, x d/dy] = y d/dy - x d/dx (hand computation)
    a = vector_field(J11, {J11.x(1): sym(J11.y(1))})
    b = vector_field(J11, {J11.y(1): sym(J11.x(1))})
    br = lie_bracket(a, b)
    assert br.coefficient(J11.y(1)) == sym(J11.y(1))
    assert br.coefficient(J11.x(1)) == -sym(J11.x(1))


def test_bracket_jacobi_identity():
    fields = [
        vector_field(J11, {J11.x(1): sym(J11.y(1)), J11.v(1, 1): ONE}),
        vector_field(J11, {J11.y(1): sym(J11.v(1, 1)) * sym(J11.x(1))}),
        vector_field(J11, {J11.v(1, 1): sym(J11.y(1)) ** 2}),
    ]
    a, b, c = fields
    total = lie_bracket(a, lie_bracket(b, c))
    total2 = lie_bracket(b, lie_bracket(c, a))
    total3 = lie_bracket(c, lie_bracket(a, b))
    for x, y, z in zip(total.coeffs, total2.coeffs, total3.coeffs):
        assert is_zero(x + y + z)


# -- involutivity / transversality ----------------------------------------------------


def test_coordinate_frame_is_involutive():
    X = MultiVec(
        J21,
        [
            vector_field(J21, {J21.x(1): ONE}),
            vector_field(J21, {J21.x(2): ONE}),
        ],
    )
    assert check_involutive(X)


def test_non_involutive_pair_reports_witness():
    # X1 = d/dx1 + v11 d/dy + d/dv12, X2 = d/dx2 + v12 d/dy:
    # [X1, X2] = d/dy, outside span(X1, X2)  (hand bracket computation).
    X = MultiVec(
        J21,
        [
            vector_field(
                J21,
                {J21.x(1): ONE, J21.y(1): sym(J21.v(1, 1)), J21.v(1, 2): ONE},
            ),
            vector_field(J21, {J21.x(2): ONE, J21.y(1): sym(J21.v(1, 2))}),
        ],
    )
    report = check_involutive(X)
    assert not report
    assert report.failing_pairs[0]["pair"] == (1, 2)
    assert report.failing_pairs[0]["witness"]


def test_any_single_vector_field_is_involutive():
    X = MultiVec(
        J11,
        [
            vector_field(
                J11,
                {J11.x(1): ONE, J11.y(1): sym(J11.v(1, 1)), J11.v(1, 1): -sym(J11.y(1))},
            )
        ],
    )
    assert check_involutive(X)


def test_transversality_of_f1_representative():
    X = MultiVec(
        J11,
        [vector_field(J11, {J11.x(1): ONE, J11.y(1): sym(J11.v(1, 1))})],
    )
    proj = base_projection(J11, base_chart(1))
    report = check_transverse(X, proj)
    assert report and report.evidence == "structural"


def test_vertical_field_is_not_transverse():
    X = MultiVec(J11, [vector_field(J11, {J11.y(1): ONE})])
    proj = base_projection(J11, base_chart(1))
    assert not check_transverse(X, proj)


def test_transversality_is_class_invariant():
    # Scaling by a nonvanishing function preserves the truth value.
    scale = parse_expr("2 + sin(x_1)", J11.table())
    X = MultiVec(
        J11,
        [
            vector_field(
                J11, {J11.x(1): scale, J11.y(1): scale * sym(J11.v(1, 1))}
            )
        ],
    )
    proj = base_projection(J11, base_chart(1))
    assert check_transverse(X, proj)
