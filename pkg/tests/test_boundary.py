from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import quad

from ncres import clifford as cl
from ncres.boundary import (
    CaseSpec,
    decompose,
    enumerate_cases,
    integrate_xi_n,
    pairing_factors,
    phi_case,
    phi_total,
    pi_minus,
    pi_plus,
    reference_values,
    sphere_integrate,
    split_polynomial,
    worked_value_rows,
)
from ncres.scalar import (
    RING,
    XIN,
    DecayError,
    ImproperSymbolError,
    InputValidationError,
    XiRational,
    gaussian,
    substitute,
    sym,
)

CASE_LABELS = ["a-I", "a-II", "a-III", "b", "c"]


def test_integrate_xi_n_golden_values():
    """Test contour integrals of powers of (1 + xin^2)^-1."""
    pi = sym("pi_const")
    assert integrate_xi_n(XiRational.inv_norm(1)) == pi
    assert integrate_xi_n(XiRational.inv_norm(2)) == pi * gaussian(Fraction(1, 2))
    assert integrate_xi_n(XiRational(RING.zero)) == RING.zero


def test_integrate_xi_n_slow_decay():
    """Test that integrands decaying like 1/xin are rejected."""
    with pytest.raises(DecayError):
        integrate_xi_n(XiRational(XIN, 1, 1))


def test_integrate_xi_n_matches_quadrature(random_proper):
    """Test residue integration against numeric quadrature."""
    for _ in range(50):
        f = random_proper()
        exact = XiRational(integrate_xi_n(f)).evaluate(0.0, {"pi_const": np.pi})
        real, _ = quad(lambda t: f.evaluate(t).real, -np.inf, np.inf, epsabs=1e-12, epsrel=1e-12, limit=200)
        imag, _ = quad(lambda t: f.evaluate(t).imag, -np.inf, np.inf, epsabs=1e-12, epsrel=1e-12, limit=200)
        assert abs(complex(real, imag) - exact) <= 1e-8 * max(1.0, abs(exact))


def test_pi_plus_golden_values():
    """Test pi_plus on simple poles."""
    assert pi_plus(XiRational.inv_norm(1)) == XiRational(RING(gaussian(0, Fraction(-1, 2))), 1, 0)
    assert pi_plus(XiRational(RING.one, 0, 1)).is_zero


def test_pi_plus_rejects_improper():
    """Test that improper input needs its polynomial part dropped explicitly."""
    f = XiRational(XIN**2, 1, 1)
    with pytest.raises(ImproperSymbolError):
        pi_plus(f)
    assert pi_plus(f, drop_polynomial=True) == pi_plus(f - 1)


def test_pi_plus_projection_properties(random_proper):
    """Test pi_plus + pi_minus = id, idempotence and annihilation."""
    xi1 = sym("xi1")
    for _ in range(200):
        f = random_proper()
        plus, minus = pi_plus(f), pi_minus(f)
        assert plus + minus == f
        assert pi_plus(plus) == plus
        assert pi_plus(minus).is_zero
        g = f * (xi1 + 1) * xi1
        assert pi_plus(g.diff("xi1")) == pi_plus(g).diff("xi1")


def test_split_polynomial(random_proper, random_gaussian_poly):
    """Test separation of the polynomial part."""
    proper = random_proper()
    poly = random_gaussian_poly(3)
    head, tail = split_polynomial(proper + XiRational(poly))
    assert head == poly
    assert tail == proper


def test_pi_plus_endomorphism_entrywise():
    """Test pi_plus[i c(xi)/|xi|^2] = (c(xi') + i c(dx_n))/(2(xin - i))."""
    i_unit = RING(gaussian(0, 1))
    projected = pi_plus(cl.c_xi() * (XiRational.inv_norm(1) * i_unit))
    expected = (cl.c_xi_prime() + cl.c_dxn() * i_unit) * XiRational(RING(gaussian(Fraction(1, 2))), 1, 0)
    assert projected == expected


def test_sphere_integrate_moments():
    """Test unit-sphere moments of xi'."""
    omega = sym("Omega")
    xi1, xi2 = sym("xi1"), sym("xi2")
    assert sphere_integrate(RING.one) == omega
    assert sphere_integrate(xi1**2) == omega * gaussian(Fraction(1, 3))
    assert sphere_integrate(xi1) == RING.zero
    assert sphere_integrate(xi1**2 * xi2**2) == omega * gaussian(Fraction(1, 15))
    assert sphere_integrate(xi1 * sym("hp")) == RING.zero


def test_sphere_integrate_rejects_xin():
    """Test that xin-dependent input is rejected."""
    with pytest.raises(InputValidationError):
        sphere_integrate(XIN)


def test_enumerate_cases_pairings():
    """Test five labelled cases for both pairings."""
    assert [c.label for c in enumerate_cases(0, -2)] == CASE_LABELS
    assert [c.label for c in enumerate_cases(1, -3)] == CASE_LABELS
    assert enumerate_cases(-4, -2) == []


def test_enumerate_cases_constraint():
    """Test every enumerated case satisfies the order constraint."""
    for c in enumerate_cases(1, -3, -1, -5):
        assert c.r - c.k - c.alpha + c.l - c.j - 1 == -4


def test_case_spec_validation_and_coefficient():
    """Test the case constraint and the (-i)^m / (alpha! (j+k+1)!) coefficient."""
    with pytest.raises(InputValidationError):
        CaseSpec(0, 0, 0, 0, 0)
    assert CaseSpec(0, -3, 0, 0, 0).coefficient == gaussian(0, -1)
    assert CaseSpec(0, -2, 1, 0, 0).coefficient == gaussian(Fraction(-1, 2))


def test_phi_case_tangential_case_vanishes():
    """Test that case a-I is zero for a tangentially flat right factor."""
    left, right = pairing_factors("A")
    (case_a1,) = [c for c in enumerate_cases(left.top, right.top) if c.label == "a-I"]
    assert phi_case(case_a1, left, right) == RING.zero


def test_phi_case_b_constant_normal_fields():
    """Test case b of pairing A with U = V = dx_n, constant fields and h'(0) = 0."""
    left, right = pairing_factors("A")
    (case_b,) = [c for c in enumerate_cases(left.top, right.top) if c.label == "b"]
    value = phi_case(case_b, left, right)
    values = {name: 0 for name in ("hp", "U1", "U2", "U3", "V1", "V2", "V3", "W1", "W2", "W3")}
    values.update({f"d{f}{a}_{j}": 0 for f in "UV" for a in range(1, 5) for j in range(1, 5)})
    values.update({"U4": 1, "V4": 1})
    assert substitute(value, values) == -(sym("pi_const") * sym("Omega") * sym("W4"))


def test_phi_total_case_rows(pairing_a_report):
    """Test pairing A reports five cases and the a-I reference row."""
    assert [c.spec.label for c in pairing_a_report.cases] == CASE_LABELS
    rows = {row.target_ref: row for row in pairing_a_report.comparisons}
    assert rows["pairing A case a-I"].verdict == "match"
    assert "pairing A total" in rows
    assert "pairing A total: outside basis" in rows


def test_phi_total_total_is_sum_of_cases(pairing_b_report):
    """Test that the total density is the sum of the case densities."""
    total = RING.zero
    for case in pairing_b_report.cases:
        total += case.value
    assert total == pairing_b_report.total
    assert pairing_b_report.reference_total == reference_values("B")["total"]


def test_phi_total_zero_fields(zero_fields):
    """Test that the density vanishes without vector fields."""
    report = phi_total("A", substitutions=zero_fields)
    assert report.total == RING.zero
    assert all(row.verdict == "match" for row in report.comparisons)


def test_phi_total_threads_deterministic(pairing_a_report):
    """Test that parallel evaluation reproduces the serial report."""
    parallel = phi_total("A", threads=3)
    assert parallel.total == pairing_a_report.total
    assert parallel.comparisons == pairing_a_report.comparisons


def test_phi_total_invalid_inputs():
    """Test rejection of unknown pairings and thread counts."""
    with pytest.raises(InputValidationError):
        phi_total("C")
    with pytest.raises(InputValidationError):
        phi_total("A", threads=0)


def test_decompose_basis_combination():
    """Test extraction of basis coefficients with pi_const and Omega weights."""
    pi, omega, hp = sym("pi_const"), sym("Omega"), sym("hp")
    g_t = sym("U1") * sym("V1") + sym("U2") * sym("V2") + sym("U3") * sym("V3")
    unvn = sym("U4") * sym("V4")
    components, residual = decompose(pi * omega * g_t * 3 + hp * unvn * omega)
    found = dict(components)
    assert found["g(U^T,V^T)"] == pi * omega * 3
    assert found["h'(0)U_nV_n"] == omega
    assert residual == RING.zero
    _, leftover = decompose(sym("U1") * sym("V2"))
    assert leftover == sym("U1") * sym("V2")


def test_reference_values_pairing_a_total():
    """Test the published pairing A coefficient (142+23i) pi / 24."""
    pi, omega, hp = sym("pi_const"), sym("Omega"), sym("hp")
    components, _ = decompose(reference_values("A")["total"])
    found = dict(components)
    assert found["h'(0)g(U^T,V^T)"] == pi * pi * omega * gaussian(Fraction(142, 24), Fraction(23, 24))
    with pytest.raises(InputValidationError):
        reference_values("C")


def test_worked_value_rows():
    """Test the worked pi_plus rows and their verdicts."""
    rows = worked_value_rows()
    assert [row.verdict for row in rows] == ["match", "mismatch", "mismatch"]
    assert rows[1].difference != "0"


def _case_value(report, label):
    (case,) = [c for c in report.cases if c.spec.label == label]
    return case.value


def _tangential_and_normal_products():
    g_t = sum((sym(f"U{a}") * sym(f"V{a}") for a in range(1, 4)), RING.zero)
    return g_t, sym("U4") * sym("V4")


def test_phi_case_a_iii_value(pairing_a_report):
    """Test case a-III of pairing A: the normal derivative of sigma_-2(T^-2)."""
    g_t, unvn = _tangential_and_normal_products()
    pi_omega_hp = sym("pi_const") * sym("Omega") * sym("hp")
    expected = pi_omega_hp * (g_t * gaussian(Fraction(-5, 12)) + unvn * gaussian(Fraction(5, 4)))
    assert _case_value(pairing_a_report, "a-III") == expected


def test_phi_case_a_ii_value(pairing_a_report):
    """Test case a-II of pairing A: the normal derivative of the left factor."""
    g_t, unvn = _tangential_and_normal_products()
    hp = sym("hp")
    transport = sum(
        (sym(f"V{a}") * sym(f"dU{a}_4") + sym(f"U{a}") * sym(f"dV{a}_4") for a in range(1, 4)), RING.zero
    )
    expected = sym("pi_const") * sym("Omega") * (
        hp * (g_t * gaussian(Fraction(5, 12)) - unvn * gaussian(Fraction(1, 4)))
        - transport * gaussian(Fraction(1, 3))
        + sym("V4") * sym("dU4_4")
        + sym("U4") * sym("dV4_4")
    )
    assert _case_value(pairing_a_report, "a-II") == expected


def test_phi_case_c_value_without_twist(pairing_a_report, zero_fields):
    """Test case c of pairing A with V' = 0 and constant fields."""
    values = {name: 0 for name in ("W1", "W2", "W3", "W4")}
    values.update({name: 0 for name in zero_fields if name.startswith("d")})
    g_t, unvn = _tangential_and_normal_products()
    pi_omega_hp = sym("pi_const") * sym("Omega") * sym("hp")
    expected = pi_omega_hp * (g_t * gaussian(Fraction(-5, 12)) + unvn * gaussian(Fraction(5, 4)))
    assert substitute(_case_value(pairing_a_report, "c"), values) == expected


def test_pi_plus_commutes_with_scalar_factors(random_proper):
    """Test pi_plus[s f] = s pi_plus[f] for xin-free scalars s."""
    hp, xi1, w4 = sym("hp"), sym("xi1"), sym("W4")
    scalars = (hp * xi1 + 2, w4**2 - hp * gaussian(0, 3), RING(gaussian(Fraction(2, 7), -1)))
    for _ in range(50):
        f = random_proper()
        for s in scalars:
            assert pi_plus(f * s) == pi_plus(f) * s


def _random_sphere_poly(rng, degree):
    xi = [sym(name) for name in ("xi1", "xi2", "xi3")]
    total = RING.zero
    for _ in range(6):
        powers = rng.integers(0, degree + 1, size=3)
        re_part, im_part = (int(v) for v in rng.integers(-4, 5, size=2))
        term = RING(gaussian(re_part, im_part))
        for x, k in zip(xi, powers):
            term *= x ** int(k)
        total += term
    return total


def test_sphere_integrate_linear_and_unit_norm(rng):
    """Test linearity and sum_j integral(xi_j^2 p) = integral(p) on the unit sphere."""
    hp = sym("hp")
    xi = [sym(name) for name in ("xi1", "xi2", "xi3")]
    for _ in range(20):
        p, q = _random_sphere_poly(rng, 3), _random_sphere_poly(rng, 3)
        a, b = hp + gaussian(0, 2), RING(gaussian(Fraction(-3, 5)))
        assert sphere_integrate(p * a + q * b) == sphere_integrate(p) * a + sphere_integrate(q) * b
        lifted = sum((sphere_integrate(x**2 * p) for x in xi), RING.zero)
        assert lifted == sphere_integrate(p)


def test_integrate_xi_n_symbolic_coefficients(rng, random_gaussian_poly):
    """Test residue integration with coefficients in hp and xi1 against quadrature."""
    hp, xi1 = sym("hp"), sym("xi1")
    for _ in range(30):
        p, q = (int(v) for v in rng.integers(1, 4, size=2))
        degree = int(rng.integers(0, p + q - 1))
        num = random_gaussian_poly(degree) * hp + random_gaussian_poly(degree) * xi1 + random_gaussian_poly(degree)
        f = XiRational(num, p, q)
        point = {"hp": float(rng.uniform(-2, 2)), "xi1": float(rng.uniform(-1, 1))}
        exact = XiRational(integrate_xi_n(f)).evaluate(0.0, dict(point, pi_const=np.pi))
        real, _ = quad(lambda t: f.evaluate(t, point).real, -np.inf, np.inf, epsabs=1e-12, epsrel=1e-12, limit=200)
        imag, _ = quad(lambda t: f.evaluate(t, point).imag, -np.inf, np.inf, epsabs=1e-12, epsrel=1e-12, limit=200)
        assert abs(complex(real, imag) - exact) <= 1e-8 * max(1.0, abs(exact))
