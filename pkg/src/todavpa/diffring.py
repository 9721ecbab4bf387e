"""Exact differential-polynomial arithmetic over the rationals.

The ring is a free commutative ring over Q whose generators come in four
families:

  * field jets        u_i^(n)         (n >= 0)
  * anti-derivatives  phi_i           with  d(phi_i) = u_i
  * half integrals    F_n             with  d(F_n) given by a registered density
  * Borel entries     B[r,c;k]        matrix-entry coordinates of a lower
                                       triangular loop-group element, with
                                       d given by a registered matrix equation

A polynomial is a dict mapping monomials to Fraction coefficients; the zero
polynomial is the empty dict.  Monomials are sorted tuples of
(generator, exponent) pairs.  Exponents are positive except for generators
explicitly marked invertible (the diagonal Borel coordinate), which may carry
negative exponents.

All arithmetic is exact; equality of polynomials is literal dict equality.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Dict, Iterable, NamedTuple, Optional, Tuple

FIELD = 0
ANTIDERIV = 1
HALFIM = 2
BOREL = 3

_KIND_NAMES = {FIELD: "u", ANTIDERIV: "phi", HALFIM: "F", BOREL: "B"}


class Gen(NamedTuple):
    """A ring generator.

    kind FIELD:     a = field index (1-based), b = derivative order
    kind ANTIDERIV: a = field index
    kind HALFIM:    a = exponent n
    kind BOREL:     a = row, b = col, c = lambda power (<= 0)
    """

    kind: int
    a: int = 0
    b: int = 0
    c: int = 0

    def pretty(self) -> str:
        if self.kind == FIELD:
            return f"u[{self.a}]" if self.b == 0 else f"u[{self.a}]^({self.b})"
        if self.kind == ANTIDERIV:
            return f"phi[{self.a}]"
        if self.kind == HALFIM:
            return f"F[{self.a}]"
        return f"B[{self.a},{self.b};{self.c}]"


def u_gen(i: int, n: int = 0) -> Gen:
    if n < 0:
        raise ValueError("derivative order must be >= 0")
    return Gen(FIELD, i, n)


def phi_gen(i: int) -> Gen:
    return Gen(ANTIDERIV, i)


def halfim_gen(n: int) -> Gen:
    return Gen(HALFIM, n)


def borel_gen(row: int, col: int, lam: int) -> Gen:
    return Gen(BOREL, row, col, lam)


# A monomial: sorted tuple of (Gen, exponent), exponents never zero.
Monomial = Tuple[Tuple[Gen, int], ...]
ONE_MONO: Monomial = ()


def mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    if not m1:
        return m2
    if not m2:
        return m1
    acc: Dict[Gen, int] = dict(m1)
    for g, e in m2:
        ne = acc.get(g, 0) + e
        if ne:
            acc[g] = ne
        else:
            del acc[g]
    return tuple(sorted(acc.items()))


def mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


class DiffPoly:
    """Sparse exact polynomial in the differential-ring generators."""

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Dict[Monomial, Fraction]] = None):
        self.terms = terms if terms is not None else {}

    # -- constructors -------------------------------------------------

    @staticmethod
    def zero() -> "DiffPoly":
        return DiffPoly({})

    @staticmethod
    def const(q) -> "DiffPoly":
        q = Fraction(q)
        return DiffPoly({} if q == 0 else {ONE_MONO: q})

    @staticmethod
    def one() -> "DiffPoly":
        return DiffPoly({ONE_MONO: Fraction(1)})

    @staticmethod
    def gen(g: Gen, exp: int = 1, coeff=1) -> "DiffPoly":
        coeff = Fraction(coeff)
        if coeff == 0 or exp == 0:
            return DiffPoly.const(coeff)
        return DiffPoly({((g, exp),): coeff})

    # -- ring structure -----------------------------------------------

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if isinstance(other, DiffPoly):
            return self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self.terms == DiffPoly.const(other).terms
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other) -> "DiffPoly":
        other = _coerce(other)
        if not self.terms:
            return other
        if not other.terms:
            return self
        out = dict(self.terms)
        for m, c in other.terms.items():
            nc = out.get(m, _ZERO) + c
            if nc:
                out[m] = nc
            else:
                out.pop(m, None)
        return DiffPoly(out)

    __radd__ = __add__

    def __neg__(self) -> "DiffPoly":
        return DiffPoly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "DiffPoly":
        return self + (-_coerce(other))

    def __rsub__(self, other) -> "DiffPoly":
        return _coerce(other) + (-self)

    def __mul__(self, other) -> "DiffPoly":
        if isinstance(other, (int, Fraction)):
            q = Fraction(other)
            if q == 0:
                return DiffPoly.zero()
            return DiffPoly({m: c * q for m, c in self.terms.items()})
        if not isinstance(other, DiffPoly):
            return NotImplemented
        if not self.terms or not other.terms:
            return DiffPoly.zero()
        out: Dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = mono_mul(m1, m2)
                nc = out.get(m, _ZERO) + c1 * c2
                if nc:
                    out[m] = nc
                else:
                    out.pop(m, None)
        return DiffPoly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "DiffPoly":
        if n < 0:
            raise ValueError("negative powers of polynomials are not defined")
        result = DiffPoly.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- calculus helpers ----------------------------------------------

    def partial(self, g: Gen) -> "DiffPoly":
        """Partial derivative with respect to a single generator."""
        out: Dict[Monomial, Fraction] = {}
        for m, c in self.terms.items():
            for idx, (gg, e) in enumerate(m):
                if gg == g:
                    rest = m[:idx] + m[idx + 1 :]
                    nm = rest if e == 1 else mono_mul(rest, ((g, e - 1),))
                    nc = out.get(nm, _ZERO) + c * e
                    if nc:
                        out[nm] = nc
                    else:
                        out.pop(nm, None)
                    break
        return DiffPoly(out)

    def generators(self) -> Iterable[Gen]:
        seen = set()
        for m in self.terms:
            for g, _ in m:
                if g not in seen:
                    seen.add(g)
                    yield g

    def derive(self, image: Callable[[Gen], "DiffPoly"]) -> "DiffPoly":
        """Apply the derivation with the given action on generators."""
        out = DiffPoly.zero()
        for m, c in self.terms.items():
            for idx, (g, e) in enumerate(m):
                rest = m[:idx] + m[idx + 1 :]
                nm = rest if e == 1 else mono_mul(rest, ((g, e - 1),))
                out = out + DiffPoly({nm: c * e}) * image(g)
        return out

    def constant_term(self) -> Fraction:
        return self.terms.get(ONE_MONO, _ZERO)

    def render(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for m, c in sorted(self.terms.items()):
            factors = []
            if c != 1 or not m:
                factors.append(str(c))
            for g, e in m:
                factors.append(g.pretty() if e == 1 else f"{g.pretty()}^{e}")
            parts.append("*".join(factors))
        return " + ".join(parts)

    def __repr__(self):
        return f"DiffPoly({self.render()})"


_ZERO = Fraction(0)


def _coerce(x) -> DiffPoly:
    if isinstance(x, DiffPoly):
        return x
    if isinstance(x, (int, Fraction)):
        return DiffPoly.const(x)
    raise TypeError(f"cannot coerce {type(x)!r} to DiffPoly")


def gen_grade(g: Gen) -> Tuple[int, int]:
    """(differential order, principal degree) of a single generator.

    A field jet u_i^(n) has order n+1 and principal degree n+1 (u_i itself is
    the first derivative of phi_i).  Anti-derivatives and adjoined generators
    carry degree so that the total derivation raises principal degree by one
    on the polynomial subring where the grading is used for truncation bounds.
    """
    if g.kind == FIELD:
        return (g.b + 1, g.b + 1)
    if g.kind == ANTIDERIV:
        return (0, 0)
    if g.kind == HALFIM:
        return (0, g.a)
    return (0, 0)


def grade(p: DiffPoly) -> Tuple[int, int]:
    """Max differential order and principal degree over the monomials."""
    order = 0
    pdeg = 0
    for m in p.terms:
        mo = 0
        md = 0
        for g, e in m:
            go, gd = gen_grade(g)
            mo = max(mo, go)
            md += gd * e
        order = max(order, mo)
        pdeg = max(pdeg, md)
    return (order, pdeg)


class TruncationExceeded(Exception):
    """A computation needs data outside the configured truncation window."""


class UnsupportedExponent(Exception):
    """Flow index outside the exponent set of the algebra."""


class NotExact(Exception):
    """An expression expected to be a total derivative is not one."""


class DiffRing:
    """The differential ring context.

    Knows the number of fields, the root inner products (used by the
    generator bracket tables), and the derivative / flow images of the
    adjoined generators.  Images for half-IM and Borel generators are
    registered by the dressing and Borel machinery.
    """

    def __init__(self, nfields: int, root_inner):
        self.nfields = nfields
        # root_inner[i][j] = (alpha_i, alpha_j), 0-based over 1..l
        self.root_inner = [[Fraction(x) for x in row] for row in root_inner]
        self._d_images: Dict[Gen, DiffPoly] = {}
        self._flow_images: Dict[int, Dict[Gen, DiffPoly]] = {}
        self._flow_cache: Dict[Tuple[int, Gen], DiffPoly] = {}
        self.exponents: Optional[Callable[[int], bool]] = None

    # -- registration --------------------------------------------------

    def register_d_image(self, g: Gen, image: DiffPoly) -> None:
        self._d_images[g] = image

    def register_flow(self, n: int, images: Dict[Gen, DiffPoly]) -> None:
        self._flow_images[n] = dict(images)

    def has_flow(self, n: int) -> bool:
        return n == 1 or n in self._flow_images

    # -- the derivation d ------------------------------------------------

    def d_gen(self, g: Gen) -> DiffPoly:
        if g.kind == FIELD:
            return DiffPoly.gen(Gen(FIELD, g.a, g.b + 1))
        if g.kind == ANTIDERIV:
            return DiffPoly.gen(Gen(FIELD, g.a, 0))
        img = self._d_images.get(g)
        if img is None:
            if g.kind == HALFIM:
                raise TruncationExceeded(
                    f"derivative of {g.pretty()} not available: dressing not computed to degree {g.a}"
                )
            raise TruncationExceeded(
                f"derivative of {g.pretty()} not available in the truncation window"
            )
        return img

    def d(self, p: DiffPoly, order: int = 1) -> DiffPoly:
        for _ in range(order):
            p = p.derive(self.d_gen)
        return p

    # -- hierarchy flows ---------------------------------------------------

    def flow_gen(self, n: int, g: Gen) -> DiffPoly:
        if n == 1:
            return self.d_gen(g)
        key = (n, g)
        cached = self._flow_cache.get(key)
        if cached is not None:
            return cached
        images = self._flow_images.get(n)
        if images is None:
            if self.exponents is not None and not self.exponents(n):
                raise UnsupportedExponent(f"{n} is not an exponent of the algebra")
            raise TruncationExceeded(f"flow {n} not computed")
        if g.kind == FIELD and g.b > 0:
            base = self.flow_gen(n, Gen(FIELD, g.a, 0))
            img = self.d(base, g.b)
        else:
            img = images.get(g)
            if img is None:
                raise TruncationExceeded(
                    f"flow {n} image of {g.pretty()} not available in the truncation window"
                )
        self._flow_cache[key] = img
        return img

    def flow(self, n: int, p: DiffPoly) -> DiffPoly:
        if self.exponents is not None and not self.exponents(n):
            raise UnsupportedExponent(f"{n} is not an exponent of the algebra")
        if n == 1:
            return self.d(p)
        return p.derive(lambda g: self.flow_gen(n, g))

    # -- variational calculus on the field subring -------------------------

    def euler_derivative(self, p: DiffPoly, i: int) -> DiffPoly:
        """Variational derivative with respect to u_i; kills total derivatives."""
        out = DiffPoly.zero()
        n = 0
        maxn = 0
        for m in p.terms:
            for g, _ in m:
                if g.kind == FIELD and g.a == i:
                    maxn = max(maxn, g.b)
        while n <= maxn:
            term = p.partial(Gen(FIELD, i, n))
            term = self.d(term, n)
            out = out + term * Fraction((-1) ** n)
            n += 1
        return out

    def is_total_derivative(self, p: DiffPoly) -> bool:
        """True iff p = d(q) for a field polynomial q (checked exactly)."""
        if p.is_zero():
            return True
        if p.constant_term() != 0:
            return False
        for g in p.generators():
            if g.kind != FIELD:
                raise ValueError("total-derivative test only applies to field polynomials")
        for i in range(1, self.nfields + 1):
            if not self.euler_derivative(p, i).is_zero():
                return False
        return True

    def integrate(self, p: DiffPoly) -> DiffPoly:
        """Solve d(q) = p for a field polynomial q with zero constant term.

        Works degreewise: the derivation is homogeneous of degree one for the
        principal grading, so candidates for q live in the finite monomial
        span one degree below each homogeneous component of p.  Raises
        NotExact when no exact solution exists.
        """
        if p.is_zero():
            return DiffPoly.zero()
        for g in p.generators():
            if g.kind != FIELD:
                raise NotExact("can only integrate polynomials in the field jets")
        by_deg: Dict[int, Dict[Monomial, Fraction]] = {}
        for m, c in p.terms.items():
            deg = sum((g.b + 1) * e for g, e in m)
            by_deg.setdefault(deg, {})[m] = c
        result = DiffPoly.zero()
        for deg, comp in sorted(by_deg.items()):
            if deg == 0:
                raise NotExact("nonzero constant term is not a total derivative")
            result = result + self._integrate_homogeneous(DiffPoly(comp), deg)
        return result

    def _integrate_homogeneous(self, p: DiffPoly, deg: int) -> DiffPoly:
        from .linsolve import solve_columns

        candidates = list(_field_monomials(self.nfields, deg - 1))
        columns = []
        for m in candidates:
            columns.append(self.d(DiffPoly({m: Fraction(1)})).terms)
        sol = solve_columns(columns, p.terms)
        if sol is None:
            raise NotExact("polynomial is not a total derivative")
        out: Dict[Monomial, Fraction] = {}
        for m, c in zip(candidates, sol):
            if c:
                out[m] = c
        return DiffPoly(out)


def _field_monomials(nfields: int, deg: int) -> Iterable[Monomial]:
    """All field-jet monomials of the given principal degree (weight n+1)."""
    gens = []
    for i in range(1, nfields + 1):
        for n in range(deg):
            if n + 1 <= deg:
                gens.append(Gen(FIELD, i, n))
    gens.sort()

    def rec(idx: int, remaining: int, acc):
        if remaining == 0:
            yield tuple(acc)
            return
        if idx >= len(gens):
            return
        g = gens[idx]
        w = g.b + 1
        maxe = remaining // w
        for e in range(maxe, -1, -1):
            if e:
                acc.append((g, e))
            yield from rec(idx + 1, remaining - w * e, acc)
            if e:
                acc.pop()

    if deg == 0:
        yield ONE_MONO
        return
    yield from rec(0, deg, [])


def binomial(n: int, k: int) -> int:
    return math.comb(n, k)
