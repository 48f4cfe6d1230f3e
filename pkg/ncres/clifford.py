"""
Double Clifford algebra on the 16-dimensional fiber of forms on R^4.

Endomorphisms are sparse 16x16 polynomial matrices over a shared
denominator (xin - i)^p (xin + i)^q.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from sympy.polys.matrices import DomainMatrix
from sympy.polys.rings import PolyElement, PolyRing

from .scalar import (
    RING,
    W_NAMES,
    XI_PRIME,
    InputValidationError,
    XiRational,
    as_xi,
    gaussian,
    imag_unit,
    pole_power,
    render,
    sphere_reduce,
    substitute,
    sym,
    to_scalar,
    xin_of,
)

log = logging.getLogger(__name__)

DIM = 16
N = 4

# Subsets of {1,2,3,4} in lexicographic order.
BASIS: Tuple[Tuple[int, ...], ...] = tuple(
    sorted(s for k in range(N + 1) for s in combinations(range(1, N + 1), k))
)
INDEX: Dict[Tuple[int, ...], int] = {s: k for k, s in enumerate(BASIS)}

KINDS = ("c", "chat", "iota", "eps")


def _matrix_from_dok(dok: Mapping[Tuple[int, int], PolyElement], poly_ring: PolyRing) -> DomainMatrix:
    return DomainMatrix.from_dok(
        {k: v for k, v in dok.items() if v}, (DIM, DIM), poly_ring.to_domain()
    )


def _crossings(subset: Tuple[int, ...], a: int) -> int:
    return sum(1 for b in subset if b < a)


@dataclass(frozen=True, eq=False)
class CliffordEnd:
    """Endomorphism of the fiber: numerator matrix over (xin-i)^p (xin+i)^q."""

    matrix: DomainMatrix
    p: int = 0
    q: int = 0

    def __post_init__(self) -> None:
        if self.matrix.shape != (DIM, DIM):
            raise InputValidationError(f"Expected a {DIM}x{DIM} matrix")
        matrix, p, q = self.matrix, self.p, self.q
        if matrix.is_zero_matrix:
            object.__setattr__(self, "p", 0)
            object.__setattr__(self, "q", 0)
            return
        for sign in (1, -1):
            while (p if sign > 0 else q) and _all_vanish(matrix, sign):
                matrix = _divide_pole(matrix, sign)
                if sign > 0:
                    p -= 1
                else:
                    q -= 1
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def ring(self) -> PolyRing:
        return self.matrix.domain.ring

    @property
    def is_zero(self) -> bool:
        return self.matrix.is_zero_matrix

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CliffordEnd):
            return NotImplemented
        return (self.p, self.q) == (other.p, other.q) and self.matrix.to_dok() == other.matrix.to_dok()

    def __hash__(self) -> int:
        return hash((self.p, self.q, frozenset(self.matrix.to_dok().items())))

    def lift(self, p: int, q: int) -> DomainMatrix:
        factor = pole_power(self.ring, p - self.p, q - self.q)
        if factor == self.ring.one:
            return self.matrix
        return self.matrix.scalarmul(factor)

    def __add__(self, other: "CliffordEnd") -> "CliffordEnd":
        if not isinstance(other, CliffordEnd):
            return NotImplemented
        p, q = max(self.p, other.p), max(self.q, other.q)
        return CliffordEnd(self.lift(p, q).add(other.lift(p, q)), p, q)

    def __neg__(self) -> "CliffordEnd":
        return CliffordEnd(self.matrix.neg(), self.p, self.q)

    def __sub__(self, other: "CliffordEnd") -> "CliffordEnd":
        if not isinstance(other, CliffordEnd):
            return NotImplemented
        return self + (-other)

    def __matmul__(self, other: "CliffordEnd") -> "CliffordEnd":
        if not isinstance(other, CliffordEnd):
            return NotImplemented
        return CliffordEnd(self.matrix.matmul(other.matrix), self.p + other.p, self.q + other.q)

    def __mul__(self, scalar: object) -> "CliffordEnd":
        """Multiplication by a scalar (XiRational, polynomial or number)."""
        if isinstance(scalar, CliffordEnd):
            return self @ scalar
        xi = as_xi(scalar, self.ring)
        if xi.is_zero:
            return zero(self.ring)
        return CliffordEnd(self.matrix.scalarmul(xi.num), self.p + xi.p, self.q + xi.q)

    __rmul__ = __mul__

    def trace(self) -> XiRational:
        """Fiberwise trace as an XiRational."""
        total = self.ring.zero
        for value in self.matrix.diagonal():
            total += value
        return XiRational(total, self.p, self.q)

    def entry(self, i: int, j: int) -> XiRational:
        return XiRational(self.matrix.to_dok().get((i, j), self.ring.zero), self.p, self.q)

    def entries(self) -> Dict[Tuple[int, int], XiRational]:
        return {k: XiRational(v, self.p, self.q) for k, v in self.matrix.to_dok().items()}

    def map_entries(self, fn: Callable[[XiRational], XiRational]) -> "CliffordEnd":
        """Apply an XiRational transform to every nonzero entry."""
        mapped = {k: fn(v) for k, v in self.entries().items()}
        return from_entries(mapped, self.ring)

    def map_numerators(self, fn: Callable[[PolyElement], PolyElement]) -> "CliffordEnd":
        dok = {k: fn(v) for k, v in self.matrix.to_dok().items()}
        return CliffordEnd(_matrix_from_dok(dok, self.ring), self.p, self.q)

    def diff(self, var: Union[str, PolyElement]) -> "CliffordEnd":
        """Entrywise partial derivative along xin or a named symbol."""
        gen = sym(var, self.ring) if isinstance(var, str) else var
        xin = xin_of(self.ring)
        if gen != xin:
            return self.map_numerators(lambda v: v.diff(gen))
        derived = self.map_numerators(lambda v: v.diff(xin)).matrix
        if not (self.p or self.q):
            return CliffordEnd(derived, 0, 0)
        unit = imag_unit(self.ring)
        up, down = xin - unit, xin + unit
        num = derived.scalarmul(up * down).sub(
            self.matrix.scalarmul(self.p * down + self.q * up)
        )
        return CliffordEnd(num, self.p + 1, self.q + 1)

    def sphere_reduce(self) -> "CliffordEnd":
        return self.map_numerators(sphere_reduce)

    def subs(self, values: Mapping[str, object]) -> "CliffordEnd":
        return self.map_numerators(lambda v: substitute(v, values))

    def nnz(self) -> int:
        return self.matrix.nnz()


def _all_vanish(matrix: DomainMatrix, sign: int) -> bool:
    xin = xin_of(matrix.domain.ring)
    root = imag_unit(matrix.domain.ring) if sign > 0 else -imag_unit(matrix.domain.ring)
    value = root.LC
    return all(not v.subs(xin, value) for _, v in matrix.iter_items())


def _divide_pole(matrix: DomainMatrix, sign: int) -> DomainMatrix:
    poly_ring = matrix.domain.ring
    unit = imag_unit(poly_ring)
    factor = xin_of(poly_ring) - (unit if sign > 0 else -unit)
    dok = {k: v.exquo(factor) for k, v in matrix.to_dok().items()}
    return _matrix_from_dok(dok, poly_ring)


def from_entries(entries: Mapping[Tuple[int, int], XiRational], poly_ring: PolyRing = RING) -> CliffordEnd:
    """Pack XiRational entries over their common denominator."""
    live = {k: v for k, v in entries.items() if not v.is_zero}
    if not live:
        return zero(poly_ring)
    p = max(v.p for v in live.values())
    q = max(v.q for v in live.values())
    dok = {k: v.lift(p, q) for k, v in live.items()}
    return CliffordEnd(_matrix_from_dok(dok, poly_ring), p, q)


@lru_cache(maxsize=None)
def identity(poly_ring: PolyRing = RING) -> CliffordEnd:
    return CliffordEnd(DomainMatrix.eye(DIM, poly_ring.to_domain()))


@lru_cache(maxsize=None)
def zero(poly_ring: PolyRing = RING) -> CliffordEnd:
    return CliffordEnd(DomainMatrix.zeros((DIM, DIM), poly_ring.to_domain()))


def scalar(value: object, poly_ring: PolyRing = RING) -> CliffordEnd:
    """value * Id."""
    return identity(poly_ring) * value


@lru_cache(maxsize=None)
def _basis_operator(kind: str, a: int, poly_ring: PolyRing) -> CliffordEnd:
    if a not in range(1, N + 1):
        raise InputValidationError(f"Basis index must be in 1..{N}, got {a}")
    one = poly_ring.one
    dok: Dict[Tuple[int, int], PolyElement] = {}
    for subset in BASIS:
        sign = one if _crossings(subset, a) % 2 == 0 else -one
        col = INDEX[subset]
        if kind == "eps" and a not in subset:
            dok[(INDEX[tuple(sorted(subset + (a,)))], col)] = sign
        elif kind == "iota" and a in subset:
            dok[(INDEX[tuple(b for b in subset if b != a)], col)] = sign
    return CliffordEnd(_matrix_from_dok(dok, poly_ring))


@lru_cache(maxsize=None)
def basis_generator(kind: str, a: int, poly_ring: PolyRing = RING) -> CliffordEnd:
    """
    Generator of the given kind for the basis covector e_a.

    Args:
        kind: one of "c", "chat", "iota", "eps"
        a: basis index 1..4
        poly_ring: coefficient ring

    Returns:
        The exact +-1 matrix; c = eps - iota and chat = eps + iota.

    Raises:
        InputValidationError: If kind or index is unknown
    """
    if kind == "eps" or kind == "iota":
        return _basis_operator(kind, a, poly_ring)
    if kind == "c":
        return _basis_operator("eps", a, poly_ring) - _basis_operator("iota", a, poly_ring)
    if kind == "chat":
        return _basis_operator("eps", a, poly_ring) + _basis_operator("iota", a, poly_ring)
    raise InputValidationError(f"Unknown generator kind: {kind}. Must be one of {KINDS}")


def generator(kind: str, vector: Sequence[object], poly_ring: PolyRing = RING) -> CliffordEnd:
    """Linear extension sum_a v_a * generator(kind, e_a) for a 4-component covector."""
    if len(vector) != N:
        raise InputValidationError(f"Vector must have {N} components, got {len(vector)}")
    total = zero(poly_ring)
    for a, component in enumerate(vector, start=1):
        component = to_scalar(component, poly_ring) if not isinstance(component, XiRational) else component
        if component:
            total = total + basis_generator(kind, a, poly_ring) * component
    return total


def c(a: int, poly_ring: PolyRing = RING) -> CliffordEnd:
    return basis_generator("c", a, poly_ring)


def chat(a: int, poly_ring: PolyRing = RING) -> CliffordEnd:
    return basis_generator("chat", a, poly_ring)


def iota(a: int, poly_ring: PolyRing = RING) -> CliffordEnd:
    return basis_generator("iota", a, poly_ring)


def eps(a: int, poly_ring: PolyRing = RING) -> CliffordEnd:
    return basis_generator("eps", a, poly_ring)


def anticommutator(a: CliffordEnd, b: CliffordEnd) -> CliffordEnd:
    return a @ b + b @ a


def commutator(a: CliffordEnd, b: CliffordEnd) -> CliffordEnd:
    return a @ b - b @ a


def trace(a: CliffordEnd) -> XiRational:
    """Fiberwise trace (sum of diagonal entries)."""
    return a.trace()


# Boundary-point building blocks (|xi'| = 1, orthonormal frame at x0).

def xi_prime(poly_ring: PolyRing = RING) -> Tuple[PolyElement, ...]:
    return tuple(sym(n, poly_ring) for n in XI_PRIME)


def c_xi_prime(poly_ring: PolyRing = RING) -> CliffordEnd:
    """c(xi') = sum_{j<4} xi_j c(e_j)."""
    return generator("c", xi_prime(poly_ring) + (0,), poly_ring)


def c_dxn(poly_ring: PolyRing = RING) -> CliffordEnd:
    return c(N, poly_ring)


def c_xi(poly_ring: PolyRing = RING) -> CliffordEnd:
    """c(xi) = c(xi') + xin c(dx_n)."""
    return c_xi_prime(poly_ring) + c_dxn(poly_ring) * xin_of(poly_ring)


def iota_v(poly_ring: PolyRing = RING) -> CliffordEnd:
    """iota(V') with V' = sum W_c e_c."""
    return generator("iota", tuple(sym(n, poly_ring) for n in W_NAMES), poly_ring)


def dn_c_xi_prime(poly_ring: PolyRing = RING) -> CliffordEnd:
    """
    First normal derivative of c(xi') at x0.

    With the metric (1/h(x_n)) g^{bdry} + dx_n^2 the tangential coframe scales
    as sqrt(h), so d/dx_n c(dx_j)(x0) = (h'(0)/2) c(e_j) for j < n.
    """
    return c_xi_prime(poly_ring) * (sym("hp", poly_ring) * gaussian(Fraction(1, 2)))


@dataclass(frozen=True)
class IdentityRow:
    """One checked identity: every member must equal the expected value."""

    name: str
    members: Tuple[Tuple[str, XiRational], ...]
    expected: XiRational

    @property
    def verdict(self) -> str:
        return "match" if all(v == self.expected for _, v in self.members) else "mismatch"


def verify_relations(poly_ring: PolyRing = RING) -> List[IdentityRow]:
    """
    Check the Clifford relations as exact matrix identities.

    Returns one row per relation family: c/c, chat/chat and c/chat
    anticommutators, iota^2 = eps^2 = 0 and the iota/eps reconstruction.
    """
    rows: List[IdentityRow] = []
    zero_xi = XiRational(poly_ring.zero)
    ident = identity(poly_ring)
    families = (
        ("{c(e_i),c(e_j)} = -2 delta_ij Id", "c", "c", -2),
        ("{chat(e_i),chat(e_j)} = 2 delta_ij Id", "chat", "chat", 2),
        ("{c(e_i),chat(e_j)} = 0", "c", "chat", 0),
    )
    for name, k1, k2, diag in families:
        failures = 0
        for i in range(1, N + 1):
            for j in range(1, N + 1):
                got = anticommutator(basis_generator(k1, i, poly_ring), basis_generator(k2, j, poly_ring))
                want = ident * (diag if i == j else 0)
                if got != want:
                    failures += 1
        rows.append(_count_row(name, failures, zero_xi))
    nilpotent = 0
    rebuilt = 0
    half = gaussian(Fraction(1, 2))
    for a in range(1, N + 1):
        for kind in ("iota", "eps"):
            g = basis_generator(kind, a, poly_ring)
            nilpotent += 0 if (g @ g).is_zero else 1
        ca, ha = c(a, poly_ring), chat(a, poly_ring)
        if (ha - ca) * half != iota(a, poly_ring) or (ha + ca) * half != eps(a, poly_ring):
            rebuilt += 1
    rows.append(_count_row("iota^2 = eps^2 = 0", nilpotent, zero_xi))
    rows.append(_count_row("iota = (chat-c)/2, eps = (chat+c)/2", rebuilt, zero_xi))
    log.debug("relation suite: %s", [(r.name, r.verdict) for r in rows])
    return rows


def _count_row(name: str, failures: int, zero_xi: XiRational) -> IdentityRow:
    return IdentityRow(name, (("failing index pairs", as_xi(failures, zero_xi.ring)),), zero_xi)


def connection_at_x0(
    kind: str, omega: Optional[Mapping[Tuple[int, int, int], object]] = None, poly_ring: PolyRing = RING
) -> CliffordEnd:
    """
    Connection endomorphism A(x0) or B(x0) built from the coefficients omega_{s,t}(e_i).

    A = 1/4 sum omega_{s,t}(e_i) c(e_i)chat(e_s)chat(e_t) and
    B = -1/4 sum omega_{s,t}(e_i) c(e_i)c(e_s)c(e_t). omega is keyed (s, t, i)
    with s < t and extended antisymmetrically; the boundary normal frame has
    omega(x0) = 0, which is the default.

    Raises:
        InputValidationError: If kind is unknown or a key is not (s < t, i) in 1..4
    """
    if kind not in ("A", "B"):
        raise InputValidationError(f"Unknown connection kind: {kind}. Must be 'A' or 'B'")
    inner = "chat" if kind == "A" else "c"
    weight = gaussian(Fraction(1, 4) if kind == "A" else Fraction(-1, 4))
    total = zero(poly_ring)
    for (s, t, i), value in sorted((omega or {}).items()):
        if not (1 <= s < t <= N and 1 <= i <= N):
            raise InputValidationError(f"omega key must be (s, t, i) with 1 <= s < t <= {N}, got {(s, t, i)}")
        es, et = basis_generator(inner, s, poly_ring), basis_generator(inner, t, poly_ring)
        total = total + c(i, poly_ring) @ (es @ et - et @ es) * as_xi(value, poly_ring) * weight
    return total


def verify_trace_block(
    poly_ring: PolyRing = RING, omega: Optional[Mapping[Tuple[int, int, int], object]] = None
) -> List[IdentityRow]:
    """
    Recompute the boundary trace identities with the matrix oracle.

    The connection rows use A(x0) and B(x0) from connection_at_x0; omega
    defaults to the boundary normal frame, where both vanish.

    Every member is reduced with |xi'| = 1. A member equal to the expected
    value yields match for its row; the row verdict requires all members.
    """
    cxp, cn, iv, dcx = c_xi_prime(poly_ring), c_dxn(poly_ring), iota_v(poly_ring), dn_c_xi_prime(poly_ring)
    xi = xi_prime(poly_ring)
    w = tuple(sym(n, poly_ring) for n in W_NAMES)
    hp = sym("hp", poly_ring)
    xi_dot_w = sum((x * y for x, y in zip(xi, w[:3])), poly_ring.zero)
    zero_xi = XiRational(poly_ring.zero)

    def tr(*factors: CliffordEnd) -> XiRational:
        product = factors[0]
        for f in factors[1:]:
            product = product @ f
        return product.trace().sphere_reduce()

    connection = []
    for kind in ("A", "B"):
        x = connection_at_x0(kind, omega, poly_ring)
        for label, right in (("c(dx_n)", cn), ("c(xi')", cxp)):
            connection.append((f"Tr[c(xi){kind}(x0)c(xi){label}]", tr(c_xi(poly_ring), x, c_xi(poly_ring), right)))
    rows = [
        IdentityRow("Tr[c(xi)A c(xi)c(dx_n)] = Tr[c(xi)B c(xi)c(dx_n)] = 0",
                    (connection[0], connection[2]), zero_xi),
        IdentityRow("Tr[c(xi)A c(xi)c(xi')] = Tr[c(xi)B c(xi)c(xi')] = 0",
                    (connection[1], connection[3]), zero_xi),
        IdentityRow(
            "Tr[c(xi')iota(V')c(xi')c(dx_n)] = -Tr[c(dx_n)iota(V')c(dx_n)c(dx_n)] = 8<V',dx_n>",
            (
                ("Tr[c(xi')iota(V')c(xi')c(dx_n)]", tr(cxp, iv, cxp, cn)),
                ("-Tr[c(dx_n)iota(V')c(dx_n)c(dx_n)]", -tr(cn, iv, cn, cn)),
            ),
            as_xi(8 * w[3]),
        ),
        IdentityRow(
            "Tr[c(xi')iota(V')c(dx_n)c(dx_n)] = -Tr[c(dx_n)iota(V')c(xi')c(dx_n)] = -8<V',xi'>",
            (
                ("Tr[c(xi')iota(V')c(dx_n)c(dx_n)]", tr(cxp, iv, cn, cn)),
                ("-Tr[c(dx_n)iota(V')c(xi')c(dx_n)]", -tr(cn, iv, cxp, cn)),
            ),
            as_xi(-8 * xi_dot_w),
        ),
        IdentityRow(
            "Tr[c(xi')c(dx_n)dn c(xi')c(dx_n)] = -Tr[c(xi')c(xi')dn c(xi')c(xi')] = -8h'(0)",
            (
                ("Tr[c(xi')c(dx_n)dn c(xi')c(dx_n)]", tr(cxp, cn, dcx, cn)),
                ("-Tr[c(xi')c(xi')dn c(xi')c(xi')]", -tr(cxp, cxp, dcx, cxp)),
            ),
            as_xi(-8 * hp),
        ),
    ]
    for row in rows:
        log.debug("trace identity %s: %s", row.name, row.verdict)
    return rows


def render_end(a: CliffordEnd, limit: int = 0) -> str:
    """Text form listing nonzero entries as (row,col): value."""
    items = sorted(a.entries().items())
    if limit:
        items = items[:limit]
    return "; ".join(f"({i},{j}): {render(v)}" for (i, j), v in items) or "0"
