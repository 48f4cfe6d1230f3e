"""
Boundary term of the residue density at n = 4.

pi_plus / pi_minus projections, contour integration in xin, moments over
the unit sphere |xi'| = 1 and the case-by-case assembly of the boundary
density for the two operator pairings.
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from sympy import factorial2
from sympy.polys.rings import PolyElement

from . import clifford as cl
from .clifford import CliffordEnd
from .scalar import (
    I_UNIT,
    RING,
    U_NAMES,
    V_NAMES,
    W_NAMES,
    XI_PRIME,
    XIN,
    DecayError,
    ImproperSymbolError,
    InputValidationError,
    JetOverflowError,
    NCResError,
    PartialFractions,
    XiRational,
    canonicalize,
    free_of_xin,
    gaussian,
    imag_unit,
    partial_fractions,
    recombine,
    substitute,
    sym,
)
from .symbols import GradedSymbol, JetValue, boundary_evaluate, catalog, cross_checked
from .utils import MATCH, MISMATCH, Comparison, compare, describe

log = logging.getLogger(__name__)

N_DIM = 4
PAIRINGS = ("A", "B")

Projectable = Union[XiRational, CliffordEnd]


def split_polynomial(f: XiRational) -> Tuple[PolyElement, XiRational]:
    """Separate f into its polynomial part and its proper part."""
    parts = partial_fractions(f)
    proper = recombine(PartialFractions(parts.terms, f.ring.zero))
    return parts.polynomial, proper


def pi_plus(f: Projectable, drop_polynomial: bool = False) -> Projectable:
    """
    Principal part of f at the upper pole xin = +i.

    Args:
        f: XiRational, or CliffordEnd projected entrywise
        drop_polynomial: discard a polynomial part instead of rejecting it

    Returns:
        Same type as f, with poles only at +i

    Raises:
        ImproperSymbolError: If f is improper and drop_polynomial is False
    """
    if isinstance(f, CliffordEnd):
        return f.map_entries(lambda e: pi_plus(e, drop_polynomial))
    f = canonicalize(f)
    if not f.is_proper and not drop_polynomial:
        raise ImproperSymbolError(
            f"pi_plus needs a proper function of xin; numerator degree {f.num_degree}, "
            f"denominator degree {f.den_degree}"
        )
    total = XiRational(f.ring.zero)
    for term in partial_fractions(f).upper():
        total = total + term.as_xi()
    return total


def pi_minus(f: Projectable) -> Projectable:
    """f - pi_plus(f); carries the lower-pole terms and any polynomial part."""
    return f - pi_plus(f, drop_polynomial=True)


def integrate_xi_n(f: XiRational) -> PolyElement:
    """
    Integral of f over the real xin line.

    Closes the contour in the upper half-plane: 2 pi i times the residue at
    xin = +i, with pi rendered as the symbol pi_const.

    Raises:
        DecayError: If f decays slower than xin^-2
    """
    if f.is_zero:
        return f.ring.zero
    if f.num_degree > f.den_degree - 2:
        raise DecayError(
            f"Integrand decays too slowly: numerator degree {f.num_degree}, "
            f"denominator degree {f.den_degree}"
        )
    residue = f.ring.zero
    for term in partial_fractions(f).upper():
        if term.order == 1:
            residue += term.coeff
    return residue * 2 * imag_unit(f.ring) * sym("pi_const", f.ring)


def _moment(exponents: Sequence[int]) -> Fraction:
    if any(e % 2 for e in exponents):
        return Fraction(0)
    numerator = 1
    for e in exponents:
        numerator *= int(factorial2(e - 1))
    return Fraction(numerator, int(factorial2(sum(exponents) + len(exponents) - 2)))


def sphere_integrate(p: PolyElement) -> PolyElement:
    """
    Integral over the unit sphere |xi'| = 1 in the 3-dimensional xi' space.

    Each monomial xi1^a xi2^b xi3^c becomes
    Omega (a-1)!! (b-1)!! (c-1)!! / (a+b+c+1)!!, or 0 if an exponent is odd.

    Raises:
        InputValidationError: If p depends on xin
    """
    if not free_of_xin(p):
        raise InputValidationError("sphere_integrate expects a polynomial free of xin")
    poly_ring = p.ring
    slots = [poly_ring.index(sym(n, poly_ring)) for n in XI_PRIME]
    omega = sym("Omega", poly_ring)
    terms: Dict[Tuple[int, ...], object] = {}
    for monom, coeff in p.terms():
        weight = _moment([monom[s] for s in slots])
        if not weight:
            continue
        rest = list(monom)
        for s in slots:
            rest[s] = 0
        key = tuple(rest)
        value = coeff * gaussian(weight)
        terms[key] = terms.get(key, poly_ring.domain.zero) + value
    return poly_ring.from_dict({k: v for k, v in terms.items() if v}) * omega


@dataclass(frozen=True)
class CaseSpec:
    """
    One term of the boundary sum: orders r, l, derivative counts k, j and |alpha|.

    Each d_xi'^alpha lowers the symbol order, so |alpha| enters the order
    constraint with a minus sign. The phase counts only the derivatives and
    the composition, (-i)^(|alpha|+j+k+1); it does not depend on l.
    """

    r: int
    l: int
    k: int
    j: int
    alpha: int
    label: str = ""

    def __post_init__(self) -> None:
        if min(self.k, self.j, self.alpha) < 0:
            raise InputValidationError("Derivative counts must be non-negative")
        if self.r - self.k - self.alpha + self.l - self.j - 1 != -N_DIM:
            raise InputValidationError(
                f"Case (r={self.r}, l={self.l}, k={self.k}, j={self.j}, |alpha|={self.alpha}) "
                f"violates r - k - |alpha| + l - j - 1 = -{N_DIM}"
            )

    @property
    def coefficient(self) -> object:
        """(-i)^(|alpha|+j+k+1) / (alpha! (j+k+1)!)."""
        power = self.alpha + self.j + self.k + 1
        scale = Fraction(1, factorial(self.alpha) * factorial(self.j + self.k + 1))
        return gaussian(0, -1) ** power * gaussian(scale)

    def describe(self) -> str:
        return f"r={self.r}, l={self.l}, k={self.k}, j={self.j}, |alpha|={self.alpha}"


_SINGLE_DERIVATIVE = {"alpha": "a-I", "j": "a-II", "k": "a-III"}


def _label(r: int, l: int, k: int, j: int, alpha: int, top1: int, top2: int) -> str:
    if (r, l) == (top1, top2) and k + j + alpha == 1:
        return _SINGLE_DERIVATIVE["alpha" if alpha else "j" if j else "k"]
    if k + j + alpha == 0:
        return "b" if r == 0 else "c"
    return f"r{r}l{l}k{k}j{j}a{alpha}"


def enumerate_cases(
    top1: int, top2: int, floor1: Optional[int] = None, floor2: Optional[int] = None
) -> List[CaseSpec]:
    """
    All cases with r - k - |alpha| + l - j - 1 = -4 inside the factor ranges.

    Args:
        top1, top2: top orders of the left and right factors
        floor1, floor2: truncation floors (default: one below the top)

    Returns:
        Cases ordered a-I, a-II, a-III, b, c, then any others by decreasing (r, l)
    """
    floor1 = top1 - 1 if floor1 is None else floor1
    floor2 = top2 - 1 if floor2 is None else floor2
    order = {"a-I": 0, "a-II": 1, "a-III": 2, "b": 3, "c": 4}
    cases = []
    for r in range(top1, floor1 - 1, -1):
        for l in range(top2, floor2 - 1, -1):
            budget = r + l + N_DIM - 1
            if budget < 0:
                continue
            for alpha in range(budget + 1):
                for j in range(budget - alpha + 1):
                    k = budget - alpha - j
                    label = _label(r, l, k, j, alpha, top1, top2)
                    cases.append(CaseSpec(r, l, k, j, alpha, label))
    cases.sort(key=lambda c: (order.get(c.label, 5), -c.r, -c.l, c.alpha, c.j, c.k))
    log.debug("enumerated %d cases for tops (%d, %d)", len(cases), top1, top2)
    return cases


def _normal_derivative(jet_value: JetValue, times: int, context: str) -> CliffordEnd:
    if times == 0:
        return jet_value.value
    if times == 1:
        return jet_value.dn(context)
    raise JetOverflowError(f"{times} normal derivatives required: {context}")


def phi_case(spec: CaseSpec, left: GradedSymbol, right: GradedSymbol) -> PolyElement:
    """
    Density coefficient of dx' for one boundary case.

    coefficient(spec) * sphere_integrate(integrate_xi_n(
        Tr[d_xn^j d_xi_n^k pi_plus sigma_r(left) * d_xi_n^(j+1) d_xn^k sigma_l(right)]))

    Tangential x-derivatives of the right factor vanish at x0, so cases
    with |alpha| > 0 contribute zero.

    Args:
        spec: the case
        left: boundary-evaluated left factor
        right: boundary-evaluated right factor

    Returns:
        Polynomial in the alphabet (pi_const and Omega included)

    Raises:
        JetOverflowError: If the case needs more normal derivatives than stored
        DecayError: If the xin-integrand decays too slowly
    """
    try:
        context = f"case {spec.label or spec.describe()}"
        if spec.alpha:
            if not right.tangentially_flat:
                raise JetOverflowError(f"Tangential derivatives of {right.name} needed: {context}")
            return RING.zero
        a = pi_plus(_normal_derivative(left.order(spec.r), spec.j, context), drop_polynomial=True)
        for _ in range(spec.k):
            a = a.diff(XIN)
        b = _normal_derivative(right.order(spec.l), spec.k, context)
        for _ in range(spec.j + 1):
            b = b.diff(XIN)
        integrand = (a @ b).trace().sphere_reduce()
        value = sphere_integrate(integrate_xi_n(integrand))
        return value * spec.coefficient
    except NCResError:
        raise
    except Exception as e:
        raise NCResError(f"Unexpected error in phi_case: {str(e)}")


# Output basis: (name, polynomial, witness monomial), extracted in this order.

def _dot(first: Sequence[str], second: Sequence[str], count: int = 4) -> PolyElement:
    return sum((sym(a) * sym(b) for a, b in zip(first[:count], second[:count])), RING.zero)


def _dot_dn(field: Sequence[str], deriv: str) -> PolyElement:
    return sum((sym(f"{name}") * sym(f"{deriv}{a}_4") for a, name in zip(range(1, 4), field[:3])), RING.zero)


def output_basis() -> List[Tuple[str, PolyElement, PolyElement]]:
    hp, w4 = sym("hp"), sym("W4")
    u1, v1, w1, u4, v4 = sym("U1"), sym("V1"), sym("W1"), sym("U4"), sym("V4")
    g_t = _dot(U_NAMES, V_NAMES, 3)
    unvn = u4 * v4
    return [
        ("g(U,V')V_n", _dot(U_NAMES, W_NAMES) * v4, u1 * w1 * v4),
        ("g(V,V')U_n", _dot(V_NAMES, W_NAMES) * u4, v1 * w1 * u4),
        ("h'(0)<dx_n,V'>g(U^T,V^T)", hp * w4 * g_t, hp * w4 * u1 * v1),
        ("h'(0)<dx_n,V'>U_nV_n", hp * w4 * unvn, hp * w4 * unvn),
        ("h'(0)g(U^T,V^T)", hp * g_t, hp * u1 * v1),
        ("h'(0)U_nV_n", hp * unvn, hp * unvn),
        ("<dx_n,V'>g(U^T,V^T)", w4 * g_t, w4 * u1 * v1),
        ("<dx_n,V'>U_nV_n", w4 * unvn, w4 * unvn),
        ("g(U^T,V^T)", g_t, u1 * v1),
        ("U_nV_n", unvn, unvn),
        ("U_n d_nV_n", u4 * sym("dV4_4"), u4 * sym("dV4_4")),
        ("V_n d_nU_n", v4 * sym("dU4_4"), v4 * sym("dU4_4")),
        ("g(U^T,d_nV^T)", _dot_dn(U_NAMES, "dV"), u1 * sym("dV1_4")),
        ("g(V^T,d_nU^T)", _dot_dn(V_NAMES, "dU"), v1 * sym("dU1_4")),
    ]


def _constant_slots() -> Tuple[int, ...]:
    return tuple(RING.index(sym(n)) for n in ("pi_const", "Omega"))


def _witness_coefficient(expr: PolyElement, witness: PolyElement) -> PolyElement:
    # coefficient of the witness monomial as a polynomial in pi_const and Omega
    slots = _constant_slots()
    (target,) = witness.monoms()
    found: Dict[Tuple[int, ...], object] = {}
    for monom, coeff in expr.terms():
        core = tuple(0 if i in slots else e for i, e in enumerate(monom))
        if core == target:
            const = tuple(e if i in slots else 0 for i, e in enumerate(monom))
            found[const] = coeff
    return RING.from_dict(found) if found else RING.zero


def decompose(expr: PolyElement) -> Tuple[List[Tuple[str, PolyElement]], PolyElement]:
    """
    Split a density over the output basis.

    Returns:
        (name, coefficient) pairs in basis order, and the residual that lies
        outside the basis (reported verbatim, never dropped)
    """
    residual = expr
    components = []
    for name, element, witness in output_basis():
        coefficient = _witness_coefficient(residual, witness)
        components.append((name, coefficient))
        if coefficient:
            residual = residual - coefficient * element
    return components, residual


def _reference_symbols() -> Dict[str, PolyElement]:
    return {
        "pi": sym("pi_const"),
        "om": sym("Omega"),
        "hp": sym("hp"),
        "w4": sym("W4"),
        "g_t": _dot(U_NAMES, V_NAMES, 3),
        "unvn": sym("U4") * sym("V4"),
        "guw_vn": _dot(U_NAMES, W_NAMES) * sym("V4"),
        "gvw_un": _dot(V_NAMES, W_NAMES) * sym("U4"),
        "un_dvn": sym("U4") * sym("dV4_4"),
    }


def _q(re_part: object, im_part: object = 0) -> object:
    return gaussian(Fraction(re_part), Fraction(im_part))


def reference_values(pairing: str) -> Dict[str, PolyElement]:
    """
    Published per-case values and total of the boundary density (coefficient of dx').

    <dx_n, V'> is W4, g(U, V') is sum_a U_a W_a and U_n d_n V_n is U4 dV4_4.
    """
    s = _reference_symbols()
    pi, om, hp, w4, g_t, unvn = s["pi"], s["om"], s["hp"], s["w4"], s["g_t"], s["unvn"]
    cross = s["guw_vn"] + s["gvw_un"]
    if pairing == "A":
        transport = (2 * pi * s["un_dvn"] + cross) * pi * om
        values = {
            "a-I": RING.zero,
            "a-II": (_q("13/6") * pi * g_t + _q("13/8") * unvn) * hp * pi * om,
            "a-III": (_q("5/3") * pi * g_t + _q(0, "5/4") * unvn) * hp * pi * om,
            "b": (
                g_t * (_q("-4/3") * pi * w4 + _q(0, "10/3") * pi * hp)
                - unvn * (_q(0, -1) * w4 + _q(2, "-1/2") * hp)
            ) * pi * om,
            "c": (
                (_q("4/3") * pi * w4 + _q(8, "-17/12") * pi * hp) * g_t
                - (_q(0, "1/4") * w4 + _q("3/32", "6/32") * hp - _q(0, 6) * hp) * unvn
            ) * pi * om - transport,
        }
        values["total"] = (
            ((_q("23/32", "-130/32") + _q(0, "5/4") * w4) * unvn + _q("142/24", "23/24") * pi * g_t)
            * hp * pi * om
            - transport
        )
        return values
    if pairing == "B":
        values = {
            "a-I": RING.zero,
            "a-II": (_q("29/48") * pi * g_t + _q("149/256", "120/256") * unvn) * hp * pi * om,
            "a-III": (_q(0, "10/3") * pi * g_t + _q(0, "5/4") * unvn) * hp * pi * om,
            "b": (
                (_q("110/3") * hp + _q("-16/3", 12) * w4) * pi * g_t
                + unvn * (_q(1, "-7/2") * w4 + _q(2, "-13/2") * hp)
                + _q("3/2") * cross
            ) * pi * om,
            "c": (
                (_q(-2, "-37/24") * pi * hp + _q(0, "-4/3") * pi * w4) * g_t
                + (_q("173/32", "-51/32") * hp + _q(0, "-3/2") * w4) * unvn
            ) * pi * om,
        }
        values["total"] = (
            (_q("1693/48", "43/8") * hp + _q("-16/3", "32/3") * w4) * pi * g_t
            + unvn * (_q(1, -5) * w4 + _q("2045/256", "-51/8") * hp)
            + _q("3/2") * cross
        ) * pi * om
        return values
    raise InputValidationError(f"Unknown pairing: {pairing}. Must be one of {PAIRINGS}")


@dataclass(frozen=True)
class CaseResult:
    spec: CaseSpec
    value: PolyElement
    reference: Optional[PolyElement]

    @property
    def verdict(self) -> str:
        if self.reference is None:
            return MISMATCH
        return MATCH if self.value == self.reference else MISMATCH


@dataclass(frozen=True)
class PhiReport:
    """Per-case densities, total, basis decomposition and comparisons for one pairing."""

    pairing: str
    cases: Tuple[CaseResult, ...]
    total: PolyElement
    components: Tuple[Tuple[str, PolyElement], ...]
    residual: PolyElement
    reference_total: PolyElement
    comparisons: Tuple[Comparison, ...]

    def case_rows(self) -> List[Dict[str, str]]:
        return [
            {
                "label": c.spec.label,
                "r": str(c.spec.r),
                "l": str(c.spec.l),
                "k": str(c.spec.k),
                "j": str(c.spec.j),
                "alpha": str(c.spec.alpha),
                "value": describe(c.value),
                "verdict": c.verdict,
            }
            for c in self.cases
        ]


def pairing_factors(pairing: str) -> Tuple[GradedSymbol, GradedSymbol]:
    """Boundary-evaluated (left, right) factors; the left one is checked against compose."""
    if pairing == "A":
        return cross_checked("UVTinv2"), boundary_evaluate(catalog("Tinv2"))
    if pairing == "B":
        return cross_checked("UVTinv"), boundary_evaluate(catalog("Tinv3"))
    raise InputValidationError(f"Unknown pairing: {pairing}. Must be one of {PAIRINGS}")


def _timed_case(spec: CaseSpec, left: GradedSymbol, right: GradedSymbol) -> PolyElement:
    start = time.perf_counter()
    value = phi_case(spec, left, right)
    log.debug("case %s (%s) took %.2fs", spec.label, spec.describe(), time.perf_counter() - start)
    return value


def phi_total(
    pairing: str,
    substitutions: Optional[Mapping[str, object]] = None,
    threads: int = 1,
) -> PhiReport:
    """
    Boundary density of one pairing with comparisons against the published values.

    Args:
        pairing: "A" (left factor with T^-2, right T^-2) or "B" (left with T^-1, right T^-3)
        substitutions: exact values applied to engine and reference expressions
        threads: worker count for case evaluation

    Returns:
        PhiReport; cases appear in enumeration order whatever the thread count

    Raises:
        InputValidationError: If the pairing or thread count is invalid
        NCResError: If a case fails or the left factor cross-check fails
    """
    try:
        if threads < 1:
            raise InputValidationError(f"Thread count must be positive, got {threads}")
        values = dict(substitutions or {})
        left, right = pairing_factors(pairing)
        cases = enumerate_cases(left.top, right.top, left.floor, right.floor)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            raw = list(pool.map(lambda c: _timed_case(c, left, right), cases))
        raw = [substitute(v, values) for v in raw]

        total = RING.zero
        for v in raw:
            total += v
        reference = {k: substitute(v, values) for k, v in reference_values(pairing).items()}
        results = tuple(CaseResult(c, v, reference.get(c.label)) for c, v in zip(cases, raw))

        comparisons: List[Comparison] = []
        for result in results:
            if result.reference is not None:
                comparisons.append(compare(f"pairing {pairing} case {result.spec.label}", result.value, result.reference))
        components, residual = decompose(total)
        ref_components, ref_residual = decompose(reference["total"])
        for (name, engine), (_, expected) in zip(components, ref_components):
            if engine or expected:
                comparisons.append(compare(f"pairing {pairing} total: {name}", engine, expected))
        comparisons.append(compare(f"pairing {pairing} total: outside basis", residual, ref_residual))
        comparisons.append(compare(f"pairing {pairing} total", total, reference["total"]))
        log.debug("pairing %s: %d comparisons", pairing, len(comparisons))
        return PhiReport(
            pairing,
            results,
            total,
            tuple(components),
            residual,
            reference["total"],
            tuple(comparisons),
        )
    except NCResError:
        raise
    except Exception as e:
        raise NCResError(f"Unexpected error in phi_total: {str(e)}")


def worked_value_rows() -> List[Comparison]:
    """
    Displayed intermediate values recomputed by the engine.

    Returns:
        Rows for pi_plus[i c(xi)/|xi|^2] (standard and displayed forms) and for
        d_xin pi_plus sigma_0 of the pairing-A left factor.
    """
    cxp, cn = cl.c_xi_prime(), cl.c_dxn()
    projected = pi_plus((cl.c_xi() * I_UNIT) * XiRational.inv_norm(1)).sphere_reduce()
    over = XiRational(RING.one, 1, 0) * gaussian(Fraction(1, 2))
    rows = [
        compare("pi_plus[i c(xi)/|xi|^2]: (c(xi')+i c(dx_n))/(2(xin-i))", projected, (cxp + cn * I_UNIT) * over),
        compare("pi_plus[i c(xi)/|xi|^2]: displayed (i c(xi')-c(dx_n))/(2(xin-i))", projected, (cxp * I_UNIT - cn) * over),
    ]

    left, _ = pairing_factors("A")
    engine = pi_plus(left.order(0).value, drop_polynomial=True).diff(XIN).sphere_reduce()
    u_t = sum((sym(a) * sym(x) for a, x in zip(U_NAMES[:3], XI_PRIME)), RING.zero)
    v_t = sum((sym(b) * sym(x) for b, x in zip(V_NAMES[:3], XI_PRIME)), RING.zero)
    u4, v4 = sym("U4"), sym("V4")
    half = gaussian(Fraction(1, 2))
    displayed = (u_t * v_t * (-I_UNIT) - u4 * v4 + u_t * v4 + u4 * v_t) * half
    rows.append(
        compare(
            "d_xin pi_plus sigma_0(gradUgradV T^-2) at x0",
            engine,
            cl.scalar(XiRational(displayed, 2, 0)).sphere_reduce(),
        )
    )
    for row in rows:
        log.debug("worked value %s: %s", row.target_ref, row.verdict)
    return rows
