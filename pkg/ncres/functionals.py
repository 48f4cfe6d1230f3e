"""
Closed-manifold spectral Einstein functional and the trace computations behind it.

Everything here lives in its own polynomial ring (GEOMETRY) holding formal
curvature, frame-connection and vector-field symbols; the endomorphism
traces use the same 16x16 matrix algebra as the boundary engine.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from math import factorial
from typing import Dict, List, Mapping, Optional, Tuple

from sympy.polys.rings import PolyElement, PolyRing

from . import clifford as cl
from .clifford import CliffordEnd
from .scalar import (
    InputValidationError,
    NCResError,
    Scalar,
    gaussian,
    make_ring,
    substitute,
    sym,
    to_scalar,
)
from .utils import MATCH, MISMATCH, Comparison, compare

log = logging.getLogger(__name__)

DIM = 4
FRAME = tuple(range(1, DIM + 1))
PAIRS = tuple(combinations(FRAME, 2))

CURVATURE_NAMES = tuple(
    f"R{i}{j}{k}{l}" for (i, j) in PAIRS for (k, l) in PAIRS if (i, j) <= (k, l)
)
SLOT_NAMES = ("Ric_UV", "g_UV", "gV_nUV", "gU_nVV", "normV2", "G_UV", "F_UV", "trE")
FIELD_NAMES = (
    tuple(f"U{a}" for a in FRAME)
    + tuple(f"V{a}" for a in FRAME)
    + tuple(f"W{a}" for a in FRAME)
    + tuple(f"dW{a}_{b}" for a in FRAME for b in FRAME)
)
OMEGA_NAMES = tuple(f"w{s}{t}_{a}" for (s, t) in PAIRS for a in FRAME)
D_OMEGA_NAMES = tuple(f"dw{s}{t}_{a}_{b}" for (s, t) in PAIRS for a in FRAME for b in FRAME)

GEOMETRY: PolyRing = make_ring(
    ("pi_const", "s") + SLOT_NAMES + CURVATURE_NAMES + FIELD_NAMES + OMEGA_NAMES + D_OMEGA_NAMES
)


def geo(name: str) -> PolyElement:
    """Generator of the geometry ring."""
    return sym(name, GEOMETRY)


def _q(value: object) -> object:
    return gaussian(Fraction(value))


def trace_of(a: CliffordEnd) -> PolyElement:
    return a.trace().num


@dataclass(frozen=True)
class CurvatureSymbols:
    """
    Formal Riemann tensor R_ijkl = g(R(e_i, e_j) e_k, e_l) in an orthonormal frame.

    Components are stored once per class of R_ijkl = -R_jikl = -R_ijlk = R_klij;
    any index order returns the canonical symbol with its forced sign.
    """

    poly_ring: PolyRing = GEOMETRY

    def component(self, i: int, j: int, k: int, l: int) -> PolyElement:
        for index in (i, j, k, l):
            if index not in FRAME:
                raise InputValidationError(f"Frame index must be in 1..{DIM}, got {index}")
        if i == j or k == l:
            return self.poly_ring.zero
        sign = 1
        if i > j:
            i, j, sign = j, i, -sign
        if k > l:
            k, l, sign = l, k, -sign
        if (i, j) > (k, l):
            i, j, k, l = k, l, i, j
        return sign * sym(f"R{i}{j}{k}{l}", self.poly_ring)

    def ricci(self, j: int, k: int) -> PolyElement:
        """Ric(e_j, e_k) = sum_i R_ijki."""
        return sum((self.component(i, j, k, i) for i in FRAME), self.poly_ring.zero)

    def scalar_curvature(self) -> PolyElement:
        return sum((self.ricci(j, j) for j in FRAME), self.poly_ring.zero)


def omega(s: int, t: int, a: int) -> PolyElement:
    """omega_{s,t}(e_a), antisymmetric in (s, t): nabla_{e_a} e_t = sum_s omega_{s,t}(e_a) e_s."""
    if s == t:
        return GEOMETRY.zero
    if s < t:
        return geo(f"w{s}{t}_{a}")
    return -geo(f"w{t}{s}_{a}")


def d_omega(s: int, t: int, a: int, b: int) -> PolyElement:
    """e_b(omega_{s,t}(e_a))."""
    if s == t:
        return GEOMETRY.zero
    if s < t:
        return geo(f"dw{s}{t}_{a}_{b}")
    return -geo(f"dw{t}{s}_{a}_{b}")


def nabla_v(a: int, b: int) -> PolyElement:
    """g(e_b, nabla_{e_a} V') from the frame derivatives e_a(W_b) and omega."""
    total = geo(f"dW{a}_{b}")
    for s in FRAME:
        total -= omega(s, b, a) * geo(f"W{s}")
    return total


def _spin_block(s: int, t: int) -> CliffordEnd:
    return cl.chat(s, GEOMETRY) @ cl.chat(t, GEOMETRY) - cl.c(s, GEOMETRY) @ cl.c(t, GEOMETRY)


def sigma_part(a: int, derivative: Optional[int] = None) -> CliffordEnd:
    """
    sigma(e_a) = 1/4 sum_{s,t} omega_{s,t}(e_a) [chat_s chat_t - c_s c_t].

    With derivative=b the coefficients are replaced by e_b(omega_{s,t}(e_a)).
    """
    total = cl.zero(GEOMETRY)
    for s, t in product(FRAME, FRAME):
        coefficient = omega(s, t, a) if derivative is None else d_omega(s, t, a, derivative)
        if coefficient:
            total = total + _spin_block(s, t) * (coefficient * _q("1/4"))
    return total


def connection_endomorphism(a: int) -> CliffordEnd:
    """Jbar(e_a) = sigma(e_a) - 1/2 g(e_a, V') Id."""
    return sigma_part(a) - cl.scalar(geo(f"W{a}") * _q("1/2"), GEOMETRY)


def _connection_derivative(b: int, a: int) -> CliffordEnd:
    # e_b(Jbar(e_a)); the frame matrices are constant
    return sigma_part(a, derivative=b) - cl.scalar(geo(f"dW{b}_{a}") * _q("1/2"), GEOMETRY)


def _bracket_coefficients(a: int, b: int) -> Dict[int, PolyElement]:
    # [e_a, e_b] = sum_s (omega_{s,b}(e_a) - omega_{s,a}(e_b)) e_s
    return {s: omega(s, b, a) - omega(s, a, b) for s in FRAME}


def connection_curvature(a: int, b: int) -> CliffordEnd:
    """F_{e_a,e_b} = e_a(Jbar_b) - e_b(Jbar_a) + [Jbar_a, Jbar_b] - Jbar([e_a, e_b])."""
    j_a, j_b = connection_endomorphism(a), connection_endomorphism(b)
    total = _connection_derivative(a, b) - _connection_derivative(b, a) + cl.commutator(j_a, j_b)
    for s, coefficient in _bracket_coefficients(a, b).items():
        if coefficient:
            total = total - connection_endomorphism(s) * coefficient
    return total


def _verdict(engine: PolyElement, reference: PolyElement) -> str:
    return MATCH if engine == reference else MISMATCH


def _synchronous(expr: PolyElement) -> PolyElement:
    return substitute(expr, {name: 0 for name in OMEGA_NAMES})


def F_UV(synchronous: bool = False) -> Tuple[PolyElement, PolyElement, str]:
    """
    Connection-curvature term F(U, V) = sum_{a,b} U^a V^b Tr F_{e_a,e_b}.

    Args:
        synchronous: evaluate in a frame with omega = 0 at the point

    Returns:
        (engine, reference, verdict); the stated side is
        -1/2 [g(V, nabla_U V') + g(U, nabla_V V')] Tr[Id]
    """
    try:
        engine = GEOMETRY.zero
        for a, b in product(FRAME, FRAME):
            engine += geo(f"U{a}") * geo(f"V{b}") * trace_of(connection_curvature(a, b))
        g_v_nabla_u = sum(
            (geo(f"U{a}") * geo(f"V{b}") * nabla_v(a, b) for a, b in product(FRAME, FRAME)), GEOMETRY.zero
        )
        g_u_nabla_v = sum(
            (geo(f"V{b}") * geo(f"U{a}") * nabla_v(b, a) for a, b in product(FRAME, FRAME)), GEOMETRY.zero
        )
        reference = (g_v_nabla_u + g_u_nabla_v) * _q(-8)
        if synchronous:
            engine, reference = _synchronous(engine), _synchronous(reference)
        verdict = _verdict(engine, reference)
        log.debug("F(U,V) %s frame: %s", "synchronous" if synchronous else "general", verdict)
        return engine, reference, verdict
    except NCResError:
        raise
    except Exception as e:
        raise NCResError(f"Unexpected error in F_UV: {str(e)}")


def endomorphism_E(curvature: Optional[CurvatureSymbols] = None) -> CliffordEnd:
    """
    E = 1/8 sum R_ijkl chat_i chat_j c_k c_l - s/4 - 1/4 sum_i {c_i, iota(V')}^2
        + 1/2 sum_j [iota(nabla_j V') c_j - c_j iota(nabla_j V')].
    """
    curvature = curvature or CurvatureSymbols()
    total = cl.zero(GEOMETRY)
    for i, j, k, l in product(FRAME, repeat=4):
        r = curvature.component(i, j, k, l)
        if not r:
            continue
        block = cl.chat(i, GEOMETRY) @ cl.chat(j, GEOMETRY) @ cl.c(k, GEOMETRY) @ cl.c(l, GEOMETRY)
        total = total + block * (r * _q("1/8"))
    total = total - cl.scalar(geo("s") * _q("1/4"), GEOMETRY)
    iota_v = cl.generator("iota", tuple(geo(f"W{a}") for a in FRAME), GEOMETRY)
    for i in FRAME:
        anti = cl.anticommutator(cl.c(i, GEOMETRY), iota_v)
        total = total - (anti @ anti) * _q("1/4")
    for j in FRAME:
        iota_nabla = cl.generator("iota", tuple(nabla_v(j, b) for b in FRAME), GEOMETRY)
        total = total + cl.commutator(iota_nabla, cl.c(j, GEOMETRY)) * _q("1/2")
    return total


def curvature_term_trace(curvature: Optional[CurvatureSymbols] = None) -> PolyElement:
    """Tr of 1/8 sum R_ijkl chat_i chat_j c_k c_l."""
    curvature = curvature or CurvatureSymbols()
    total = GEOMETRY.zero
    for i, j, k, l in product(FRAME, repeat=4):
        r = curvature.component(i, j, k, l)
        if r:
            block = cl.chat(i, GEOMETRY) @ cl.chat(j, GEOMETRY) @ cl.c(k, GEOMETRY) @ cl.c(l, GEOMETRY)
            total += r * trace_of(block) * _q("1/8")
    return total


def norm_v_squared() -> PolyElement:
    return sum((geo(f"W{a}") ** 2 for a in FRAME), GEOMETRY.zero)


def trace_E() -> Tuple[PolyElement, PolyElement, str]:
    """
    Trace of E over the 16-dimensional fiber.

    Returns:
        (engine, reference, verdict); the stated side is (s/4 + |V'|^2/2) Tr[Id]
    """
    try:
        engine = trace_of(endomorphism_E())
        reference = (geo("s") * _q("1/4") + norm_v_squared() * _q("1/2")) * 16
        verdict = _verdict(engine, reference)
        log.debug("Tr E: %s", verdict)
        return engine, reference, verdict
    except NCResError:
        raise
    except Exception as e:
        raise NCResError(f"Unexpected error in trace_E: {str(e)}")


def _slot(name: str) -> PolyElement:
    return geo(name)


@dataclass(frozen=True)
class GeometricInputs:
    """Slots of the closed-manifold Einstein density, formal by default."""

    m: int = 2
    ric: Scalar = field(default_factory=lambda: _slot("Ric_UV"))
    s: Scalar = field(default_factory=lambda: _slot("s"))
    g_uv: Scalar = field(default_factory=lambda: _slot("g_UV"))
    g_v_nabla_u: Scalar = field(default_factory=lambda: _slot("gV_nUV"))
    g_u_nabla_v: Scalar = field(default_factory=lambda: _slot("gU_nVV"))
    norm_v2: Scalar = field(default_factory=lambda: _slot("normV2"))

    def __post_init__(self) -> None:
        if self.m < 1:
            raise InputValidationError(f"Half-dimension m must be at least 1, got {self.m}")

    def value(self, slot: str) -> PolyElement:
        return to_scalar(getattr(self, slot), GEOMETRY)


@dataclass(frozen=True)
class GeneralInputs:
    """Slots of the Laplace-type form: Einstein tensor G, F(U,V), Tr E and g(U,V)."""

    m: int = 2
    einstein: Scalar = field(default_factory=lambda: _slot("G_UV"))
    f_uv: Scalar = field(default_factory=lambda: _slot("F_UV"))
    tr_e: Scalar = field(default_factory=lambda: _slot("trE"))
    g_uv: Scalar = field(default_factory=lambda: _slot("g_UV"))

    def __post_init__(self) -> None:
        if self.m < 1:
            raise InputValidationError(f"Half-dimension m must be at least 1, got {self.m}")

    def value(self, slot: str) -> PolyElement:
        return to_scalar(getattr(self, slot), GEOMETRY)


def einstein_closed(inp: GeometricInputs) -> PolyElement:
    """
    Closed-manifold Einstein density with Tr[Id] = 2^(2m).

    2^(2m+1) pi^m / (6 Gamma(m)) (Ric - s g / 2)
    - pi^m / Gamma(m) * 1/2 [g(V, nabla_U V') + g(U, nabla_V V')] Tr[Id]
    + 2^(2m-1) (s Tr[Id] / 4 + |V'|^2 / 2) g
    """
    m = inp.m
    pi_m = geo("pi_const") ** m
    gamma = factorial(m - 1)
    tr_id = 2 ** (2 * m)
    ric, s, g_uv = inp.value("ric"), inp.value("s"), inp.value("g_uv")
    einstein = ric - s * g_uv * _q("1/2")
    transport = (inp.value("g_v_nabla_u") + inp.value("g_u_nabla_v")) * _q("1/2") * tr_id
    potential = (s * _q("1/4") * tr_id + inp.value("norm_v2") * _q("1/2")) * g_uv
    return (
        einstein * pi_m * _q(Fraction(2 ** (2 * m + 1), 6 * gamma))
        - transport * pi_m * _q(Fraction(1, gamma))
        + potential * 2 ** (2 * m - 1)
    )


def einstein_general(inp: GeneralInputs) -> PolyElement:
    """
    upsilon/6 2^n G(U,V) + upsilon/2 F(U,V) + 1/2 Tr(E) g(U,V), upsilon = 2 pi^m / Gamma(m).
    """
    m = inp.m
    upsilon = geo("pi_const") ** m * _q(Fraction(2, factorial(m - 1)))
    return (
        inp.value("einstein") * upsilon * _q(Fraction(2 ** (2 * m), 6))
        + inp.value("f_uv") * upsilon * _q("1/2")
        + inp.value("tr_e") * inp.value("g_uv") * _q("1/2")
    )


def stated_closed_density() -> PolyElement:
    """The published four-dimensional closed-manifold density."""
    pi2 = geo("pi_const") ** 2
    einstein = geo("Ric_UV") - geo("s") * geo("g_UV") * _q("1/2")
    transport = (geo("gV_nUV") + geo("gU_nVV")) * _q("1/2") * 16
    return (
        einstein * pi2 * _q("4/3")
        - transport * pi2
        + (geo("s") * 2 * 16 + geo("normV2") * 4) * geo("g_UV")
    )


_DENSITY_SLOTS = (
    ("Ric(U,V)", ("Ric_UV",)),
    ("s g(U,V)", ("s", "g_UV")),
    ("g(V,nabla_U V')", ("gV_nUV",)),
    ("g(U,nabla_V V')", ("gU_nVV",)),
    ("|V'|^2 g(U,V)", ("normV2", "g_UV")),
)


def slot_coefficient(expr: PolyElement, names: Tuple[str, ...]) -> PolyElement:
    """Coefficient of the monomial prod(names) as a polynomial in pi_const."""
    pi_slot = GEOMETRY.index(geo("pi_const"))
    target_poly = GEOMETRY.one
    for name in names:
        target_poly *= geo(name)
    (target,) = target_poly.monoms()
    found = {}
    for monom, coeff in expr.terms():
        core = tuple(0 if i == pi_slot else e for i, e in enumerate(monom))
        if core == target:
            found[tuple(e if i == pi_slot else 0 for i, e in enumerate(monom))] = coeff
    return GEOMETRY.from_dict(found) if found else GEOMETRY.zero


def einstein_comparison(substitutions: Optional[Mapping[str, object]] = None) -> List[Comparison]:
    """
    Four-dimensional coefficients: literal specialization of the closed form,
    the general Laplace-type form, and the stated closed-manifold density.
    """
    literal = einstein_closed(GeometricInputs(m=2))
    stated = stated_closed_density()
    general = einstein_general(
        GeneralInputs(
            m=2,
            einstein=geo("Ric_UV") - geo("s") * geo("g_UV") * _q("1/2"),
            f_uv=(geo("gV_nUV") + geo("gU_nVV")) * _q(-8),
            tr_e=(geo("s") * _q("1/4") + geo("normV2") * _q("1/2")) * 16,
        )
    )
    rows = []
    for label, names in _DENSITY_SLOTS:
        rows.append(
            _row(
                f"m=2 {label}: closed form vs stated density",
                slot_coefficient(literal, names),
                slot_coefficient(stated, names),
                substitutions,
            )
        )
    for label, names in _DENSITY_SLOTS:
        rows.append(
            _row(
                f"m=2 {label}: Laplace-type form vs closed form",
                slot_coefficient(general, names),
                slot_coefficient(literal, names),
                substitutions,
            )
        )
    return rows


def _row(
    label: str, engine: PolyElement, reference: PolyElement, substitutions: Optional[Mapping[str, object]]
) -> Comparison:
    values = dict(substitutions or {})
    return compare(label, substitute(engine, values), substitute(reference, values))


def functional_report(substitutions: Optional[Mapping[str, object]] = None) -> List[Comparison]:
    """
    All functional checks as comparison rows.

    Args:
        substitutions: exact values for geometry symbols, applied to both sides

    Returns:
        Curvature-term trace, Tr E, F(U,V) in both frames, then the density coefficients
    """
    try:
        rows = [
            _row(
                "Tr[1/8 sum R_ijkl chat_i chat_j c_k c_l] = 0",
                curvature_term_trace(),
                GEOMETRY.zero,
                substitutions,
            )
        ]
        engine, reference, _ = trace_E()
        rows.append(_row("Tr E = (s/4 + |V'|^2/2) Tr[Id]", engine, reference, substitutions))
        for synchronous in (False, True):
            engine, reference, _ = F_UV(synchronous)
            frame = "synchronous frame" if synchronous else "general frame"
            label = f"F(U,V) = -1/2 [g(V,nabla_U V') + g(U,nabla_V V')] Tr[Id] ({frame})"
            rows.append(_row(label, engine, reference, substitutions))
        rows.extend(einstein_comparison(substitutions))
        return rows
    except NCResError:
        raise
    except Exception as e:
        raise NCResError(f"Unexpected error in functional_report: {str(e)}")
