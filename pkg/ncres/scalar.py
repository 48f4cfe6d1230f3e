import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from sympy.polys.domains import QQ, QQ_I
from sympy.polys.orderings import lex
from sympy.polys.polyerrors import ExactQuotientFailed
from sympy.polys.ring_series import rs_mul, rs_pow
from sympy.polys.rings import PolyElement, PolyRing, ring

log = logging.getLogger(__name__)


class NCResError(Exception):
    """Base exception class for ncres errors"""
    pass

class InputValidationError(NCResError):
    """Exception raised for input validation errors"""
    pass

class PoleStructureError(NCResError):
    """Exception raised when a denominator has a pole away from +i and -i"""
    pass

class ImproperSymbolError(NCResError):
    """Exception raised when pi_plus gets an improper function of xin"""
    pass

class DecayError(NCResError):
    """Exception raised when an xin-integrand decays slower than xin^-2"""
    pass

class JetOverflowError(NCResError):
    """Exception raised when a normal derivative beyond the stored jet is needed"""
    pass


XI_PRIME = ("xi1", "xi2", "xi3")
U_NAMES = tuple(f"U{a}" for a in range(1, 5))
V_NAMES = tuple(f"V{a}" for a in range(1, 5))
W_NAMES = tuple(f"W{a}" for a in range(1, 5))
DU_NAMES = tuple(f"dU{a}_{j}" for a in range(1, 5) for j in range(1, 5))
DV_NAMES = tuple(f"dV{a}_{j}" for a in range(1, 5) for j in range(1, 5))
# e_j(W_a), named as in the functional ring
DW_NAMES = tuple(f"dW{j}_{a}" for j in range(1, 5) for a in range(1, 5))

ALPHABET: Tuple[str, ...] = (
    XI_PRIME
    + ("hp",)
    + U_NAMES
    + V_NAMES
    + W_NAMES
    + DU_NAMES
    + DV_NAMES
    + DW_NAMES
    + ("pi_const", "Omega")
)


def make_ring(names: Sequence[str]) -> PolyRing:
    """
    Build a lex polynomial ring over Q(i) with xin as generator 0.

    xin must come first so that division by (xin -/+ i) uses xin as the
    leading variable.
    """
    if "xin" in names:
        raise InputValidationError("xin is implicit and must not be listed")
    new_ring, *_ = ring(",".join(("xin",) + tuple(names)), QQ_I, lex)
    return new_ring


RING = make_ring(ALPHABET)

GaussianRational = type(QQ_I(0, 1))
ScalarExpr = PolyElement
Scalar = Union[int, Fraction, PolyElement, GaussianRational]


@lru_cache(maxsize=None)
def symbol_table(poly_ring: PolyRing) -> Dict[str, PolyElement]:
    return {str(s): g for s, g in zip(poly_ring.symbols, poly_ring.gens)}


def sym(name: str, poly_ring: PolyRing = RING) -> PolyElement:
    """Return the ring generator for a named symbol."""
    try:
        return symbol_table(poly_ring)[name]
    except KeyError:
        raise InputValidationError(f"Unknown symbol: {name}")


def xin_of(poly_ring: PolyRing) -> PolyElement:
    return poly_ring.gens[0]


def imag_unit(poly_ring: PolyRing) -> PolyElement:
    return poly_ring(QQ_I(0, 1))


XIN = xin_of(RING)
I_UNIT = imag_unit(RING)


def dU(a: int, j: int) -> PolyElement:
    """Return the symbol for the partial derivative of U_a along x_j."""
    return sym(f"dU{a}_{j}")


def dV(b: int, j: int) -> PolyElement:
    """Return the symbol for the partial derivative of V_b along x_j."""
    return sym(f"dV{b}_{j}")


def dW(a: int, j: int) -> PolyElement:
    """Return the symbol for the partial derivative of W_a along x_j."""
    return sym(f"dW{j}_{a}")


def gaussian(re_part: Union[int, Fraction, str] = 0, im_part: Union[int, Fraction, str] = 0):
    """Build an exact Gaussian rational from rational real and imaginary parts."""
    re_q = Fraction(re_part)
    im_q = Fraction(im_part)
    return QQ_I(
        QQ(re_q.numerator, re_q.denominator), QQ(im_q.numerator, im_q.denominator)
    )


def to_scalar(value: Scalar, poly_ring: PolyRing = RING) -> PolyElement:
    """Coerce an int, Fraction, Gaussian rational or polynomial into a ring."""
    if isinstance(value, PolyElement):
        return value
    if isinstance(value, Fraction):
        return poly_ring(gaussian(value))
    return poly_ring(value)


def free_of_xin(expr: PolyElement) -> bool:
    """Check that a polynomial is a ScalarExpr, i.e. has no xin dependence."""
    return expr.degree(xin_of(expr.ring)) <= 0


def substitute(expr: PolyElement, values: Mapping[str, object]) -> PolyElement:
    """
    Replace named symbols by exact values.

    Parameters:
    - expr (PolyElement): expression
    - values (dict): symbol name -> Gaussian rational (or int / Fraction);
      names absent from the expression's ring are ignored

    Returns:
    - PolyElement: the instantiated expression
    """
    table = symbol_table(expr.ring)
    pairs = []
    for name, value in sorted(values.items()):
        if name not in table:
            continue
        if isinstance(value, Fraction):
            value = gaussian(value)
        pairs.append((table[name], QQ_I.convert(value)))
    return expr.subs(pairs) if pairs else expr


def sphere_reduce(expr: PolyElement) -> PolyElement:
    """Normal form of a polynomial modulo |xi'|^2 - 1."""
    xi1, xi2, xi3 = (sym(n, expr.ring) for n in XI_PRIME)
    return expr.rem([xi1**2 + xi2**2 + xi3**2 - 1])


def _pole_root(poly_ring: PolyRing, sign: int) -> PolyElement:
    unit = imag_unit(poly_ring)
    return unit if sign > 0 else -unit


def _strip_pole(num: PolyElement, power: int, sign: int) -> Tuple[PolyElement, int]:
    xin = xin_of(num.ring)
    factor = xin - _pole_root(num.ring, sign)
    root = QQ_I(0, sign)
    while power and num and not num.subs(xin, root):
        num = num.exquo(factor)
        power -= 1
    return num, power


@dataclass(frozen=True)
class XiRational:
    """
    Rational function num / ((xin - i)^p (xin + i)^q).

    Every instance is canonical: the numerator never vanishes at a pole that
    is still present in the denominator, and the zero function has p = q = 0.
    """

    num: PolyElement
    p: int = 0
    q: int = 0

    def __post_init__(self) -> None:
        if self.p < 0 or self.q < 0:
            raise InputValidationError("Pole orders must be non-negative")
        num = to_scalar(self.num)
        if not num:
            object.__setattr__(self, "num", num.ring.zero)
            object.__setattr__(self, "p", 0)
            object.__setattr__(self, "q", 0)
            return
        num, p = _strip_pole(num, self.p, 1)
        num, q = _strip_pole(num, self.q, -1)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @classmethod
    def from_polys(cls, num: Scalar, den: Scalar) -> "XiRational":
        """Build num/den, requiring den to be a constant times (xin-i)^p (xin+i)^q."""
        num = to_scalar(num)
        den = to_scalar(den, num.ring)
        if not den:
            raise PoleStructureError("Zero denominator")
        xin = xin_of(den.ring)
        orders = []
        for sign in (1, -1):
            count = 0
            while den.degree(xin) > 0 and not den.subs(xin, QQ_I(0, sign)):
                den = den.exquo(xin - _pole_root(den.ring, sign))
                count += 1
            orders.append(count)
        p, q = orders
        if not den.is_ground:
            raise PoleStructureError(
                f"Denominator factor {render(den)} has a pole away from xin = +i, -i"
            )
        return cls(num.quo_ground(den.LC), p, q)

    @classmethod
    def inv_norm(cls, k: int, poly_ring: PolyRing = RING) -> "XiRational":
        """Return (1 + xin^2)^-k, i.e. |xi|^-2k at |xi'| = 1."""
        return cls(poly_ring.one, k, k)

    @property
    def ring(self) -> PolyRing:
        return self.num.ring

    @property
    def is_zero(self) -> bool:
        return not self.num

    @property
    def den_degree(self) -> int:
        return self.p + self.q

    @property
    def num_degree(self) -> int:
        """xin-degree of the numerator (-1 for zero)."""
        if not self.num:
            return -1
        return int(self.num.degree(xin_of(self.ring)))

    @property
    def is_proper(self) -> bool:
        return self.num_degree < self.den_degree

    @property
    def is_polynomial(self) -> bool:
        return self.den_degree == 0

    def denominator(self) -> PolyElement:
        return pole_power(self.ring, self.p, self.q)

    def lift(self, p: int, q: int) -> PolyElement:
        """Numerator over the larger denominator (xin-i)^p (xin+i)^q."""
        return self.num * pole_power(self.ring, p - self.p, q - self.q)

    def __add__(self, other: object) -> "XiRational":
        other = as_xi(other, self.ring)
        p, q = max(self.p, other.p), max(self.q, other.q)
        return XiRational(self.lift(p, q) + other.lift(p, q), p, q)

    __radd__ = __add__

    def __neg__(self) -> "XiRational":
        return XiRational(-self.num, self.p, self.q)

    def __sub__(self, other: object) -> "XiRational":
        return self + (-as_xi(other, self.ring))

    def __rsub__(self, other: object) -> "XiRational":
        return as_xi(other, self.ring) - self

    def __mul__(self, other: object) -> "XiRational":
        if not isinstance(other, (XiRational, PolyElement, int, Fraction, GaussianRational)):
            return NotImplemented
        other = as_xi(other, self.ring)
        return XiRational(self.num * other.num, self.p + other.p, self.q + other.q)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "XiRational":
        if n < 0:
            raise InputValidationError("XiRational powers must be non-negative")
        return XiRational(self.num**n, self.p * n, self.q * n)

    def diff(self, var: Union[str, PolyElement]) -> "XiRational":
        """Exact partial derivative along xin or a named symbol."""
        gen = sym(var, self.ring) if isinstance(var, str) else var
        xin = xin_of(self.ring)
        if gen != xin:
            return XiRational(self.num.diff(gen), self.p, self.q)
        if self.is_polynomial:
            return XiRational(self.num.diff(xin))
        unit = imag_unit(self.ring)
        up, down = xin - unit, xin + unit
        num = self.num.diff(xin) * up * down - self.num * (self.p * down + self.q * up)
        return XiRational(num, self.p + 1, self.q + 1)

    def map_coefficients(self, fn: Callable[[PolyElement], PolyElement]) -> "XiRational":
        """Apply fn to the numerator, keeping the denominator."""
        return XiRational(fn(self.num), self.p, self.q)

    def sphere_reduce(self) -> "XiRational":
        return self.map_coefficients(sphere_reduce)

    def subs(self, values: Mapping[str, object]) -> "XiRational":
        return self.map_coefficients(lambda n: substitute(n, values))

    def evaluate(self, t: complex, values: Optional[Mapping[str, complex]] = None) -> complex:
        """
        Numeric value at xin = t with named symbols set from values.

        Symbols missing from values evaluate to 0.
        """
        values = values or {}
        names = [str(s) for s in self.ring.symbols]
        point = [complex(t)] + [complex(values.get(n, 0)) for n in names[1:]]
        total = 0j
        for monom, coeff in self.num.terms():
            term = complex(float(coeff.x), float(coeff.y))
            for exp, value in zip(monom, point):
                if exp:
                    term *= value**exp
            total += term
        return total / ((point[0] - 1j) ** self.p * (point[0] + 1j) ** self.q)

    def __str__(self) -> str:
        return render(self)


def pole_power(poly_ring: PolyRing, p: int, q: int) -> PolyElement:
    """(xin - i)^p (xin + i)^q in the given ring."""
    xin, unit = xin_of(poly_ring), imag_unit(poly_ring)
    return (xin - unit) ** p * (xin + unit) ** q


def as_xi(value: object, poly_ring: PolyRing = RING) -> XiRational:
    """Coerce a scalar or polynomial into an XiRational."""
    if isinstance(value, XiRational):
        return value
    return XiRational(to_scalar(value, poly_ring))


def canonicalize(expr):
    """Return the canonical form of a ScalarExpr or XiRational (idempotent)."""
    if isinstance(expr, XiRational):
        return XiRational(expr.num, expr.p, expr.q)
    return to_scalar(expr).copy()


@dataclass(frozen=True)
class PoleTerm:
    """coeff / (xin - pole)^order with pole in {+i, -i}."""

    pole: str
    order: int
    coeff: PolyElement

    def as_xi(self) -> XiRational:
        if self.pole == "+i":
            return XiRational(self.coeff, self.order, 0)
        return XiRational(self.coeff, 0, self.order)


@dataclass(frozen=True)
class PartialFractions:
    terms: Tuple[PoleTerm, ...]
    polynomial: PolyElement

    def upper(self) -> Tuple[PoleTerm, ...]:
        return tuple(t for t in self.terms if t.pole == "+i")

    def lower(self) -> Tuple[PoleTerm, ...]:
        return tuple(t for t in self.terms if t.pole == "-i")


def _principal_coefficients(num: PolyElement, order: int, other: int, sign: int) -> List[PolyElement]:
    # Taylor coefficients, degree < order, of num(t + root) * (t + 2 root)^-other.
    xin = xin_of(num.ring)
    root = _pole_root(num.ring, sign)
    shifted = num.compose(xin, xin + root)
    if other:
        weight = rs_pow(xin + 2 * root, -other, xin, order)
    else:
        weight = num.ring.one
    series = rs_mul(shifted, weight, xin, order)
    return [series.coeff_wrt(xin, k) for k in range(order)]


def partial_fractions(f: XiRational) -> PartialFractions:
    """
    Decompose f into principal parts at +i and -i plus a polynomial part.

    Principal terms are ordered +i before -i, by decreasing pole order.
    """
    f = canonicalize(f)
    terms: List[PoleTerm] = []
    rest = f.num
    for sign, order, other in ((1, f.p, f.q), (-1, f.q, f.p)):
        if not order:
            continue
        pole = "+i" if sign > 0 else "-i"
        for k, c in enumerate(_principal_coefficients(f.num, order, other, sign)):
            if not c:
                continue
            terms.append(PoleTerm(pole, order - k, c))
            if sign > 0:
                rest = rest - c * pole_power(f.ring, k, f.q)
            else:
                rest = rest - c * pole_power(f.ring, f.p, k)
    try:
        polynomial = rest.exquo(f.denominator()) if f.den_degree else rest
    except ExactQuotientFailed:
        raise PoleStructureError(f"Partial fraction remainder is not polynomial for {render(f)}")
    return PartialFractions(tuple(terms), polynomial)


def recombine(parts: PartialFractions) -> XiRational:
    """Reassemble a partial fraction decomposition into one XiRational."""
    total = XiRational(parts.polynomial)
    for term in parts.terms:
        total = total + term.as_xi()
    return total


def _fmt_rational(q) -> str:
    num, den = int(q.numerator), int(q.denominator)
    return str(num) if den == 1 else f"{num}/{den}"


def format_gaussian(c) -> str:
    """Render a Gaussian rational as a+bi with reduced fractions."""
    c = QQ_I.convert(c)
    re_s = _fmt_rational(c.x)
    im = c.y
    if not im:
        return re_s
    im_abs = _fmt_rational(abs(im))
    im_s = "i" if im_abs == "1" else f"{im_abs}i"
    if not c.x:
        return im_s if im > 0 else f"-{im_s}"
    return f"{re_s}{'+' if im > 0 else '-'}{im_s}"


_RATIONAL_RE = re.compile(r"^[+-]?\d+(?:/\d+)?$")


def _parse_rational(text: str, default: int) -> Fraction:
    if text in ("", "+", "-"):
        return Fraction(-default if text == "-" else default)
    if not _RATIONAL_RE.match(text):
        raise InputValidationError(f"Invalid rational: {text!r}")
    return Fraction(text)


def parse_gaussian(text: str):
    """
    Parse '3', '-1/2', 'i', '-2i', '1/2+3/4i' into an exact Gaussian rational.

    Raises:
        InputValidationError: If the text is not a Gaussian rational
    """
    text = text.replace(" ", "")
    if not text:
        raise InputValidationError("Empty exact value")
    if not text.endswith("i"):
        return gaussian(_parse_rational(text, 0))
    body = text[:-1]
    split = max(body.rfind("+"), body.rfind("-"))
    if split > 0:
        re_text, im_text = body[:split], body[split:]
    else:
        re_text, im_text = "0", body
    return gaussian(_parse_rational(re_text, 0), _parse_rational(im_text, 1))


def _fmt_monomial(names: Sequence[str], monom: Sequence[int]) -> str:
    parts = []
    for name, exp in zip(names, monom):
        if exp == 1:
            parts.append(name)
        elif exp:
            parts.append(f"{name}^{exp}")
    return "*".join(parts)


def render_poly(expr: PolyElement) -> str:
    """Canonical text of a polynomial: terms in ring order, a+bi coefficients."""
    if not expr:
        return "0"
    names = [str(s) for s in expr.ring.symbols]
    out = []
    for monom, coeff in expr.terms():
        mono = _fmt_monomial(names, monom)
        coef = format_gaussian(coeff)
        negative = coef.startswith("-") and "+" not in coef and "-" not in coef[1:]
        if negative:
            coef = coef[1:]
        if "+" in coef or "-" in coef[1:]:
            coef = f"({coef})"
        if mono:
            text = mono if coef == "1" else f"{coef}*{mono}"
        else:
            text = coef
        out.append(("- " if negative else "+ ") + text)
    joined = " ".join(out)
    return joined[2:] if joined.startswith("+ ") else "-" + joined[2:]


def render(expr) -> str:
    """Canonical text for ScalarExpr or XiRational values."""
    if isinstance(expr, XiRational):
        num = render_poly(expr.num)
        if expr.is_polynomial:
            return num
        den = []
        if expr.p:
            den.append("(xin-i)" + (f"^{expr.p}" if expr.p > 1 else ""))
        if expr.q:
            den.append("(xin+i)" + (f"^{expr.q}" if expr.q > 1 else ""))
        return f"({num})/({'*'.join(den)})"
    return render_poly(to_scalar(expr))
