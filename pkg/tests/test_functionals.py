from fractions import Fraction
from itertools import product

import pytest

from ncres import clifford as cl
from ncres.functionals import (
    CURVATURE_NAMES,
    FRAME,
    GEOMETRY,
    OMEGA_NAMES,
    F_UV,
    CurvatureSymbols,
    GeneralInputs,
    GeometricInputs,
    connection_endomorphism,
    curvature_term_trace,
    einstein_closed,
    einstein_comparison,
    einstein_general,
    functional_report,
    geo,
    nabla_v,
    norm_v_squared,
    sigma_part,
    slot_coefficient,
    trace_E,
    trace_of,
)
from ncres.scalar import InputValidationError, gaussian, substitute


def _pi2(value):
    return geo("pi_const") ** 2 * gaussian(Fraction(value))


def test_curvature_symbols_canonical_form():
    """Test the forced signs of the Riemann symmetries."""
    r = CurvatureSymbols()
    assert len(CURVATURE_NAMES) == 21
    assert r.component(2, 1, 3, 4) == -r.component(1, 2, 3, 4)
    assert r.component(1, 2, 4, 3) == -r.component(1, 2, 3, 4)
    assert r.component(3, 4, 1, 2) == r.component(1, 2, 3, 4)
    assert r.component(4, 3, 2, 1) == geo("R1234")
    assert r.component(1, 1, 2, 3) == GEOMETRY.zero


def test_curvature_symbols_invalid_index():
    """Test that frame indices outside 1..4 are rejected."""
    with pytest.raises(InputValidationError):
        CurvatureSymbols().component(0, 1, 2, 3)


def test_curvature_contractions():
    """Test Ricci and scalar curvature from the stored components."""
    r = CurvatureSymbols()
    assert r.ricci(1, 1) == -(geo("R1212") + geo("R1313") + geo("R1414"))
    assert r.ricci(1, 2) == r.ricci(2, 1)
    expected = GEOMETRY.zero
    for i, j in product(FRAME, FRAME):
        expected += r.component(i, j, j, i)
    assert r.scalar_curvature() == expected


def test_curvature_term_trace_vanishes():
    """Test that the curvature part of E is traceless."""
    assert curvature_term_trace() == GEOMETRY.zero


def test_trace_E_values():
    """Test Tr E from the matrix algebra against the stated value."""
    engine, reference, verdict = trace_E()
    s = geo("s")
    assert engine == s * -4 - norm_v_squared() * 4
    assert reference == s * 4 + norm_v_squared() * 8
    assert verdict == "mismatch"


def test_trace_E_trivial_inputs():
    """Test that both sides vanish for s = 0 and V' = 0."""
    engine, reference, _ = trace_E()
    values = {"s": 0, "W1": 0, "W2": 0, "W3": 0, "W4": 0}
    assert substitute(engine, values) == GEOMETRY.zero
    assert substitute(reference, values) == GEOMETRY.zero


def test_connection_parts_traceless():
    """Test Tr sigma(e_a) = 0 and Tr [Jbar_a, Jbar_b] = 0."""
    for a in FRAME:
        assert trace_of(sigma_part(a)) == GEOMETRY.zero
        assert trace_of(connection_endomorphism(a)) == geo(f"W{a}") * -8
    assert trace_of(cl.commutator(connection_endomorphism(1), connection_endomorphism(2))) == GEOMETRY.zero


def test_F_UV_general_frame():
    """Test F(U,V) is antisymmetric in the covariant derivative of V'."""
    engine, reference, verdict = F_UV()
    expected = GEOMETRY.zero
    stated = GEOMETRY.zero
    for a, b in product(FRAME, FRAME):
        weight = geo(f"U{a}") * geo(f"V{b}")
        expected += weight * (nabla_v(a, b) - nabla_v(b, a)) * -8
        stated += weight * (nabla_v(a, b) + nabla_v(b, a)) * -8
    assert engine == expected
    assert reference == stated
    assert verdict == "mismatch"


def test_F_UV_synchronous_frame():
    """Test that the synchronous frame drops every connection coefficient."""
    engine, reference, _ = F_UV(synchronous=True)
    values = {name: 0 for name in OMEGA_NAMES}
    assert substitute(engine, values) == engine
    assert substitute(reference, values) == reference


def test_F_UV_vanishes_without_field():
    """Test F(U,V) = 0 when V' and its derivatives vanish."""
    engine, _, _ = F_UV()
    values = {f"W{a}": 0 for a in FRAME}
    values.update({f"dW{a}_{b}": 0 for a in FRAME for b in FRAME})
    assert substitute(engine, values) == GEOMETRY.zero


def test_einstein_closed_zero_inputs():
    """Test that zero inputs give zero density."""
    inputs = GeometricInputs(m=2, ric=0, s=0, g_uv=0, g_v_nabla_u=0, g_u_nabla_v=0, norm_v2=0)
    assert einstein_closed(inputs) == GEOMETRY.zero


def test_einstein_closed_m2_coefficients():
    """Test the four-dimensional Ricci and |V'|^2 coefficients."""
    ricci_only = GeometricInputs(m=2, ric=1, s=0, g_uv=0, g_v_nabla_u=0, g_u_nabla_v=0, norm_v2=0)
    assert einstein_closed(ricci_only) == _pi2("16/3")
    field_only = GeometricInputs(m=2, ric=0, s=0, g_uv=1, g_v_nabla_u=0, g_u_nabla_v=0, norm_v2=1)
    assert einstein_closed(field_only) == GEOMETRY(4)


def test_einstein_closed_linear_in_ricci_slot():
    """Test linearity in the Ricci slot with the others formal."""
    base = einstein_closed(GeometricInputs(ric=0))
    one = einstein_closed(GeometricInputs(ric=1))
    three = einstein_closed(GeometricInputs(ric=3))
    assert three - base == (one - base) * 3


def test_einstein_closed_invalid_dimension():
    """Test that m < 1 is rejected."""
    with pytest.raises(InputValidationError):
        GeometricInputs(m=0)
    with pytest.raises(InputValidationError):
        GeneralInputs(m=0)


def test_einstein_general_m2():
    """Test the Laplace-type form coefficients in four dimensions."""
    einstein_only = GeneralInputs(m=2, einstein=1, f_uv=0, tr_e=0, g_uv=0)
    assert einstein_general(einstein_only) == _pi2("16/3")
    f_only = GeneralInputs(m=2, einstein=0, f_uv=1, tr_e=0, g_uv=0)
    assert einstein_general(f_only) == _pi2(1)
    trace_only = GeneralInputs(m=2, einstein=0, f_uv=0, tr_e=2, g_uv=1)
    assert einstein_general(trace_only) == GEOMETRY.one


def test_slot_coefficient():
    """Test extraction of a slot coefficient as a polynomial in pi_const."""
    expr = _pi2(3) * geo("Ric_UV") + geo("s") * geo("g_UV") * 5
    assert slot_coefficient(expr, ("Ric_UV",)) == _pi2(3)
    assert slot_coefficient(expr, ("s", "g_UV")) == GEOMETRY(5)
    assert slot_coefficient(expr, ("normV2",)) == GEOMETRY.zero


def test_einstein_comparison_flags_ricci_coefficient():
    """Test that the Ricci coefficient pair is flagged and the field term agrees."""
    rows = {row.target_ref: row for row in einstein_comparison()}
    assert rows["m=2 Ric(U,V): closed form vs stated density"].verdict == "mismatch"
    assert rows["m=2 |V'|^2 g(U,V): closed form vs stated density"].verdict == "match"
    assert rows["m=2 g(V,nabla_U V'): closed form vs stated density"].verdict == "match"
    assert rows["m=2 Ric(U,V): Laplace-type form vs closed form"].verdict == "match"
    assert rows["m=2 s g(U,V): Laplace-type form vs closed form"].verdict == "mismatch"


def test_functional_report_rows():
    """Test the functional section layout and its substitution handling."""
    rows = functional_report()
    assert len(rows) == 14
    assert rows[0].verdict == "match"
    assert rows[1].verdict == "mismatch"
    zeroed = functional_report({"s": 0, "W1": 0, "W2": 0, "W3": 0, "W4": 0})
    assert zeroed[1].verdict == "match"
