"""Two- and three-point delta-function kernels and the bracket axioms.

A two-point kernel is a finite sum of terms f(x) g(y) Dx^k delta(x-y) with
k >= -1.  Canonical form: for k >= 0 the y coefficient is migrated to the x
slot (g(y) delta = g(x) delta plus finite Leibniz reordering), so those terms
are stored as f(x) Dx^k delta; k = -1 terms keep split coefficients and are
stored as a first-slot-monomial tensor expansion.  Under this normal form
kernel equality is literal dict equality.

Three-point kernels are sums f(x)g(y)h(z) Dx^a Dy^b Dz^c delta(x-y-z) with
a, b >= -1.  The normal form eliminates nonnegative z powers through
Dz -> -(Dx + Dy) on delta, reduces terms with Dz^-1 until the x exponent is
-1 (using the same relation once more), and migrates coefficients of
exponent-zero slots to the leading slot with nonnegative exponent
(priority x > y > z).  At most two negative exponents may appear.

A bracket structure is a table of two-point kernels indexed by ordered pairs
of ring generators, extended to arbitrary polynomials by the Leibniz rule,
derivative linearity in both slots, and antisymmetry.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from .diffring import (
    FIELD,
    DiffPoly,
    DiffRing,
    Gen,
    Monomial,
    ONE_MONO,
    binomial,
)
from .psdo import LeavesClass, PseudoDiffOp, _tensor_add

_ZERO = Fraction(0)
_ONEPOLY = DiffPoly.one()


class UnknownGenerator(Exception):
    """A bracket was requested for a generator outside the table universe."""


class NonlocalBracket(Exception):
    """A Hamiltonian operation needs a local bracket but got nonlocal terms."""


class SplitFailed(Exception):
    """A kernel did not decompose in the expected exact shape."""


class NotDCommuting(Exception):
    """A purported infinitesimal automorphism does not commute with d."""


# ---------------------------------------------------------------------------
# two-point kernels
# ---------------------------------------------------------------------------

K2Key = Tuple[Monomial, Monomial, int]


class TwoPointKernel:
    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Dict[K2Key, Fraction]] = None):
        self.terms = terms if terms is not None else {}

    @staticmethod
    def zero() -> "TwoPointKernel":
        return TwoPointKernel()

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, TwoPointKernel):
            return NotImplemented
        return self.terms == other.terms

    def __add__(self, other: "TwoPointKernel") -> "TwoPointKernel":
        out = dict(self.terms)
        for key, c in other.terms.items():
            nc = out.get(key, _ZERO) + c
            if nc:
                out[key] = nc
            else:
                out.pop(key, None)
        return TwoPointKernel(out)

    def __neg__(self) -> "TwoPointKernel":
        return TwoPointKernel({k: -c for k, c in self.terms.items()})

    def __sub__(self, other: "TwoPointKernel") -> "TwoPointKernel":
        return self + (-other)

    def scale(self, q) -> "TwoPointKernel":
        q = Fraction(q)
        if q == 0:
            return TwoPointKernel()
        return TwoPointKernel({k: c * q for k, c in self.terms.items()})

    def local_part(self) -> "TwoPointKernel":
        return TwoPointKernel({k: c for k, c in self.terms.items() if k[2] >= 0})

    def nonlocal_part(self) -> "TwoPointKernel":
        return TwoPointKernel({k: c for k, c in self.terms.items() if k[2] < 0})

    def max_dx(self) -> int:
        return max((k[2] for k in self.terms), default=0)

    def x_coefficient(self, k: int) -> DiffPoly:
        """The x-slot coefficient of Dx^k (local orders only)."""
        out: Dict[Monomial, Fraction] = {}
        for (mf, mg, kk), c in self.terms.items():
            if kk == k and kk >= 0:
                out[mf] = out.get(mf, _ZERO) + c
        return DiffPoly({m: c for m, c in out.items() if c})

    def render(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for (mf, mg, k), c in sorted(self.terms.items(), key=lambda kv: (-kv[0][2], kv[0])):
            factors = []
            f = DiffPoly({mf: c})
            factors.append(f"{f.render()}(x)")
            if mg:
                factors.append(f"{DiffPoly({mg: Fraction(1)}).render()}(y)")
            if k != 0:
                factors.append("Dx" if k == 1 else f"Dx^{k}")
            factors.append("delta")
            parts.append("*".join(factors))
        return " + ".join(parts)

    def __repr__(self):
        return f"TwoPointKernel({self.render()})"


def _k2_put(out: Dict[K2Key, Fraction], ring: DiffRing, mf: Monomial, mg: Monomial, k: int, coeff: Fraction) -> None:
    """Accumulate one raw term f(x) g(y) Dx^k delta into canonical form."""
    if not coeff:
        return
    if k < -1:
        raise SplitFailed("two-point kernels are restricted to Dx powers >= -1")
    if k == -1 or not mg:
        key = (mf, mg, k)
        nc = out.get(key, _ZERO) + coeff
        if nc:
            out[key] = nc
        else:
            out.pop(key, None)
        return
    # migrate the y coefficient: g(y) Dx^k delta = sum_j C(k,j) g^(j)(x) Dx^(k-j) delta
    g = DiffPoly({mg: Fraction(1)})
    for j in range(k + 1):
        gj = g if j == 0 else ring.d(g, j)
        for m2, c2 in gj.terms.items():
            _k2_put(out, ring, _mono_mul(mf, m2), ONE_MONO, k - j, coeff * c2 * binomial(k, j))


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    from .diffring import mono_mul

    return mono_mul(m1, m2)


def k2_term(ring: DiffRing, f: DiffPoly, g: DiffPoly, k: int) -> TwoPointKernel:
    """Build the canonical kernel for f(x) g(y) Dx^k delta."""
    out: Dict[K2Key, Fraction] = {}
    for m1, c1 in f.terms.items():
        for m2, c2 in g.terms.items():
            _k2_put(out, ring, m1, m2, k, c1 * c2)
    return TwoPointKernel(out)


def k2_delta(ring: DiffRing, f: DiffPoly, k: int = 0) -> TwoPointKernel:
    return k2_term(ring, f, _ONEPOLY, k)


def mult_x(ring: DiffRing, K: TwoPointKernel, p: DiffPoly) -> TwoPointKernel:
    out: Dict[K2Key, Fraction] = {}
    for (mf, mg, k), c in K.terms.items():
        for m, cp in p.terms.items():
            _k2_put(out, ring, _mono_mul(mf, m), mg, k, c * cp)
    return TwoPointKernel(out)


def mult_y(ring: DiffRing, K: TwoPointKernel, p: DiffPoly) -> TwoPointKernel:
    out: Dict[K2Key, Fraction] = {}
    for (mf, mg, k), c in K.terms.items():
        if k == -1:
            for m, cp in p.terms.items():
                _k2_put(out, ring, mf, _mono_mul(mg, m), k, c * cp)
        else:
            for m, cp in p.terms.items():
                _k2_put(out, ring, mf, m, k, c * cp)
    return TwoPointKernel(out)


def d_x(ring: DiffRing, K: TwoPointKernel) -> TwoPointKernel:
    out: Dict[K2Key, Fraction] = {}
    for (mf, mg, k), c in K.terms.items():
        fp = ring.d(DiffPoly({mf: c}))
        for m, cc in fp.terms.items():
            _k2_put(out, ring, m, mg, k, cc)
        if k >= 0:
            _k2_put(out, ring, mf, mg, k + 1, c)
        else:
            # Dx o f o Dx^-1 = f + f' Dx^-1: the delta spillover term
            _k2_put(out, ring, mf, mg, 0, c)
    return TwoPointKernel(out)


def d_y(ring: DiffRing, K: TwoPointKernel) -> TwoPointKernel:
    out: Dict[K2Key, Fraction] = {}
    for (mf, mg, k), c in K.terms.items():
        if k >= 0:
            _k2_put(out, ring, mf, mg, k + 1, -c)
        else:
            gp = ring.d(DiffPoly({mg: c}))
            for m, cc in gp.terms.items():
                _k2_put(out, ring, mf, m, k, cc)
            _k2_put(out, ring, mf, mg, 0, -c)
    return TwoPointKernel(out)


def dx_pow(ring: DiffRing, K: TwoPointKernel, n: int) -> TwoPointKernel:
    for _ in range(n):
        K = d_x(ring, K)
    return K


def dy_pow(ring: DiffRing, K: TwoPointKernel, n: int) -> TwoPointKernel:
    for _ in range(n):
        K = d_y(ring, K)
    return K


def sigma(ring: DiffRing, K: TwoPointKernel) -> TwoPointKernel:
    """The slot swap: sigma(f(x)g(y) Dx^k delta) = (-1)^k g(x)f(y) Dx^k delta."""
    out: Dict[K2Key, Fraction] = {}
    for (mf, mg, k), c in K.terms.items():
        if k >= 0:
            _k2_put(out, ring, mg, mf, k, c * ((-1) ** k))
        else:
            _k2_put(out, ring, mg, mf, k, -c)
    return TwoPointKernel(out)


def op_iso(ring: DiffRing, K: TwoPointKernel) -> PseudoDiffOp:
    """The module isomorphism onto pseudodifferential operators."""
    local: Dict[int, DiffPoly] = {}
    nl: Dict[Monomial, DiffPoly] = {}
    for (mf, mg, k), c in K.terms.items():
        if k >= 0:
            cur = local.get(k, DiffPoly.zero()) + DiffPoly({mf: c})
            if cur.is_zero():
                local.pop(k, None)
            else:
                local[k] = cur
        else:
            _tensor_add(nl, DiffPoly({mf: c}), DiffPoly({mg: Fraction(1)}))
    return PseudoDiffOp(local=local, nonlocal_=nl)


def op_iso_inv(ring: DiffRing, A: PseudoDiffOp) -> TwoPointKernel:
    if A.tail:
        raise LeavesClass("expanded tails have no kernel preimage in this class")
    out: Dict[K2Key, Fraction] = {}
    for k, p in A.local.items():
        for m, c in p.terms.items():
            _k2_put(out, ring, m, ONE_MONO, k, c)
    for am, bp in A.nonlocal_.items():
        for bm, c in bp.terms.items():
            _k2_put(out, ring, am, bm, -1, c)
    return TwoPointKernel(out)


def strip_dx(ring: DiffRing, K: TwoPointKernel) -> TwoPointKernel:
    """Solve Dx(L) = K for a local kernel L; unique when it exists."""
    if not K.nonlocal_part().is_zero():
        raise SplitFailed("strip_dx expects a local kernel")
    coeffs = {}
    top = K.max_dx()
    for k in range(top + 1):
        coeffs[k] = K.x_coefficient(k)
    c: Dict[int, DiffPoly] = {}
    for j in range(top - 1, -1, -1):
        # Dx(sum c_j Dx^j) = sum (c_j' Dx^j + c_j Dx^(j+1))
        above = c.get(j + 1, DiffPoly.zero())
        c[j] = coeffs.get(j + 1, DiffPoly.zero()) - ring.d(above)
    resid = coeffs.get(0, DiffPoly.zero()) - ring.d(c.get(0, DiffPoly.zero()))
    if not resid.is_zero():
        raise SplitFailed("kernel is not an exact Dx derivative")
    out = TwoPointKernel()
    for j, p in c.items():
        out = out + k2_delta(ring, p, j)
    return out


def y_form(ring: DiffRing, K: TwoPointKernel) -> Dict[int, DiffPoly]:
    """Rewrite a local kernel as sum_j A_j(y) Dx^j delta; returns {j: A_j}."""
    if not K.nonlocal_part().is_zero():
        raise SplitFailed("y_form expects a local kernel")
    top = K.max_dx()
    d = {k: K.x_coefficient(k) for k in range(top + 1)}
    A: Dict[int, DiffPoly] = {}
    for k in range(top, -1, -1):
        acc = d.get(k, DiffPoly.zero())
        for j in range(k + 1, top + 1):
            Aj = A.get(j)
            if Aj is not None:
                acc = acc - ring.d(Aj, j - k) * binomial(j, j - k)
        if not acc.is_zero():
            A[k] = acc
    return A


def from_y_form(ring: DiffRing, A: Dict[int, DiffPoly]) -> TwoPointKernel:
    out = TwoPointKernel()
    for j, p in A.items():
        out = out + k2_term(ring, _ONEPOLY, p, j)
    return out


# ---------------------------------------------------------------------------
# three-point kernels
# ---------------------------------------------------------------------------

K3Key = Tuple[Monomial, Monomial, Monomial, int, int, int]


class ThreePointKernel:
    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Dict[K3Key, Fraction]] = None):
        self.terms = terms if terms is not None else {}

    @staticmethod
    def zero() -> "ThreePointKernel":
        return ThreePointKernel()

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, ThreePointKernel):
            return NotImplemented
        return self.terms == other.terms

    def __add__(self, other: "ThreePointKernel") -> "ThreePointKernel":
        out = dict(self.terms)
        for key, c in other.terms.items():
            nc = out.get(key, _ZERO) + c
            if nc:
                out[key] = nc
            else:
                out.pop(key, None)
        return ThreePointKernel(out)

    def __neg__(self) -> "ThreePointKernel":
        return ThreePointKernel({k: -c for k, c in self.terms.items()})

    def __sub__(self, other: "ThreePointKernel") -> "ThreePointKernel":
        return self + (-other)

    def render(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for (m1, m2, m3, a, b, c), q in sorted(self.terms.items(), key=lambda kv: (kv[0][3], kv[0][4], kv[0][5], kv[0][:3])):
            factors = [f"{DiffPoly({m1: q}).render()}(x)"]
            if m2:
                factors.append(f"{DiffPoly({m2: Fraction(1)}).render()}(y)")
            if m3:
                factors.append(f"{DiffPoly({m3: Fraction(1)}).render()}(z)")
            if a:
                factors.append(f"Dx^{a}")
            if b:
                factors.append(f"Dy^{b}")
            if c:
                factors.append(f"Dz^{c}")
            factors.append("delta3")
            parts.append("*".join(factors))
        return " + ".join(parts)

    def __repr__(self):
        return f"ThreePointKernel({self.render()})"


def _k3_put(
    out: Dict[K3Key, Fraction],
    ring: DiffRing,
    m1: Monomial,
    m2: Monomial,
    m3: Monomial,
    a: int,
    b: int,
    c: int,
    coeff: Fraction,
) -> None:
    """Accumulate one raw three-point term into the normal form."""
    if not coeff:
        return
    if a < -1 or b < -1 or c < -1:
        raise SplitFailed("three-point exponents are restricted to >= -1")
    if (a < 0) + (b < 0) + (c < 0) > 2:
        raise SplitFailed("at most two negative exponents per three-point term")
    # 1. eliminate nonnegative Dz powers: Dz^c = (-(Dx+Dy))^c adjacent to delta
    if c >= 1:
        sign = Fraction((-1) ** c)
        for j in range(c + 1):
            _k3_put(out, ring, m1, m2, m3, a + j, b + (c - j), 0, coeff * sign * binomial(c, j))
        return
    # 2. with Dz^-1 present, trade positive Dx powers for Dy ones:
    #    (a,b,-1) = -(a-1,b+1,-1) - (a-1,b,0).
    #    The trade ends with Dx^-1, which would trap a coefficient sitting on
    #    the x slot, so that coefficient is relocated to the y slot first
    #    (finite reordering through both powers) whenever y is not blocked.
    if c == -1 and a >= 0:
        if m1 and b >= 0:
            w = DiffPoly({m1: Fraction(1)})
            for j in range(a + 1):
                wj = w if j == 0 else ring.d(w, j)
                wj = wj * Fraction((-1) ** j * binomial(a, j))
                if wj.is_zero():
                    continue
                for i in range(b + 1):
                    wji = wj if i == 0 else ring.d(wj, i)
                    for mm, cc in wji.terms.items():
                        _k3_put(
                            out, ring, ONE_MONO, _mono_mul(m2, mm), m3,
                            a - j, b - i, -1, coeff * cc * binomial(b, i),
                        )
            return
        _k3_put(out, ring, m1, m2, m3, a - 1, b + 1, -1, -coeff)
        _k3_put(out, ring, m1, m2, m3, a - 1, b, 0, -coeff)
        return
    # 2b. an x coefficient trapped behind Dx^-1 alongside a positive Dy power
    #     equals its y-relocated forms minus the power-lowered c=0 term
    #     (canonicalize the raw term (w,.,.,0,b-1,-1) along both legal paths)
    if c == -1 and a == -1 and b >= 1 and m1:
        _k3_put(out, ring, m1, m2, m3, -1, b - 1, 0, -coeff)
        w = DiffPoly({m1: Fraction(1)})
        for i in range(b):
            wi = w if i == 0 else ring.d(w, i)
            for mm, cc in wi.terms.items():
                q = coeff * cc * binomial(b - 1, i)
                _k3_put(out, ring, ONE_MONO, _mono_mul(m2, mm), m3, -1, b - i, -1, q)
                _k3_put(out, ring, ONE_MONO, _mono_mul(m2, mm), m3, -1, b - 1 - i, 0, q)
        return
    # 3. migrate coefficients off blocked-free slots (priority x > y > z);
    #    a coefficient may leave its slot whenever some higher-priority slot
    #    has a nonnegative exponent (finite reordering through both powers)
    if m3 and c == 0 and (a >= 0 or b >= 0):
        _k3_migrate(out, ring, m1, m2, m3, a, b, c, coeff, src="z", dst="x" if a >= 0 else "y")
        return
    if m2 and b >= 0 and a >= 0:
        _k3_migrate(out, ring, m1, m2, m3, a, b, c, coeff, src="y", dst="x")
        return
    key = (m1, m2, m3, a, b, c)
    nc = out.get(key, _ZERO) + coeff
    if nc:
        out[key] = nc
    else:
        out.pop(key, None)


def _k3_migrate(out, ring, m1, m2, m3, a, b, c, coeff, src: str, dst: str) -> None:
    """Move the coefficient of slot src across its own power and into slot dst.

    w on slot s with exponent e >= 0 satisfies
      w(s) Ds^e delta = sum_j (-1)^j C(e,j) w^(j)(s') Ds^(e-j) delta
    for any other slot s' once w is rewritten through the diagonal relations;
    landing inside the dst power costs one more finite Leibniz reordering.
    """
    w = DiffPoly({(m2 if src == "y" else m3): Fraction(1)})
    e = b if src == "y" else c
    for j in range(e + 1):
        wj = w if j == 0 else ring.d(w, j)
        wj = wj * Fraction((-1) ** j * binomial(e, j))
        if wj.is_zero():
            continue
        # wj now multiplies delta directly at slot dst, inside the dst power
        dexp = a if dst == "x" else b
        for i in range(dexp + 1):
            wji = wj if i == 0 else ring.d(wj, i)
            for mm, cc in wji.terms.items():
                q = coeff * cc * binomial(dexp, i)
                if src == "y":
                    _k3_put(out, ring, _mono_mul(m1, mm), ONE_MONO, m3, a - i, e - j, c, q)
                elif dst == "x":
                    _k3_put(out, ring, _mono_mul(m1, mm), m2, ONE_MONO, a - i, b, e - j, q)
                else:
                    _k3_put(out, ring, m1, _mono_mul(m2, mm), ONE_MONO, a, b - i, e - j, q)


def k3_term(
    ring: DiffRing,
    f: DiffPoly,
    g: DiffPoly,
    h: DiffPoly,
    a: int,
    b: int,
    c: int,
) -> ThreePointKernel:
    out: Dict[K3Key, Fraction] = {}
    for m1, c1 in f.terms.items():
        for m2, c2 in g.terms.items():
            for m3, c3 in h.terms.items():
                _k3_put(out, ring, m1, m2, m3, a, b, c, c1 * c2 * c3)
    return ThreePointKernel(out)


def sigma_xy(ring: DiffRing, K: ThreePointKernel) -> ThreePointKernel:
    out: Dict[K3Key, Fraction] = {}
    for (m1, m2, m3, a, b, c), q in K.terms.items():
        _k3_put(out, ring, m2, m1, m3, b, a, c, q)
    return ThreePointKernel(out)


def sigma_xz(ring: DiffRing, K: ThreePointKernel) -> ThreePointKernel:
    out: Dict[K3Key, Fraction] = {}
    for (m1, m2, m3, a, b, c), q in K.terms.items():
        _k3_put(out, ring, m3, m2, m1, c, b, a, q)
    return ThreePointKernel(out)


def k3_dx(ring: DiffRing, K: ThreePointKernel) -> ThreePointKernel:
    """Apply Dx to a three-point kernel."""
    out: Dict[K3Key, Fraction] = {}
    for (m1, m2, m3, a, b, c), q in K.terms.items():
        fp = ring.d(DiffPoly({m1: q}))
        for mm, cc in fp.terms.items():
            _k3_put(out, ring, mm, m2, m3, a, b, c, cc)
        if a >= 0:
            _k3_put(out, ring, m1, m2, m3, a + 1, b, c, q)
        else:
            # Dx o f o Dx^-1 = f + f' Dx^-1
            _k3_put(out, ring, m1, m2, m3, 0, b, c, q)
    return ThreePointKernel(out)


def k3_dy(ring: DiffRing, K: ThreePointKernel) -> ThreePointKernel:
    out: Dict[K3Key, Fraction] = {}
    for (m1, m2, m3, a, b, c), q in K.terms.items():
        gp = ring.d(DiffPoly({m2: q}))
        for mm, cc in gp.terms.items():
            _k3_put(out, ring, m1, mm, m3, a, b, c, cc)
        if b >= 0:
            _k3_put(out, ring, m1, m2, m3, a, b + 1, c, q)
        else:
            _k3_put(out, ring, m1, m2, m3, a, 0, c, q)
    return ThreePointKernel(out)


def k3_dz(ring: DiffRing, K: ThreePointKernel) -> ThreePointKernel:
    out: Dict[K3Key, Fraction] = {}
    for (m1, m2, m3, a, b, c), q in K.terms.items():
        hp = ring.d(DiffPoly({m3: q}))
        for mm, cc in hp.terms.items():
            _k3_put(out, ring, m1, m2, mm, a, b, c, cc)
        if c >= 0:
            _k3_put(out, ring, m1, m2, m3, a, b, c + 1, q)
        else:
            _k3_put(out, ring, m1, m2, m3, a, b, 0, q)
    return ThreePointKernel(out)


# ---------------------------------------------------------------------------
# bracket tables
# ---------------------------------------------------------------------------


class Derivation:
    """A ring derivation given by its images on generators.

    When commutes_with_d is set, images of derived field jets are produced by
    differentiating the image of the base jet.
    """

    def __init__(self, ring: DiffRing, images: Dict[Gen, DiffPoly], commutes_with_d: bool = True, name: str = ""):
        self.ring = ring
        self.images = dict(images)
        self.commutes_with_d = commutes_with_d
        self.name = name
        self._cache: Dict[Gen, DiffPoly] = {}

    def gen_image(self, g: Gen) -> DiffPoly:
        img = self.images.get(g)
        if img is not None:
            return img
        cached = self._cache.get(g)
        if cached is not None:
            return cached
        if g.kind == FIELD and g.b > 0 and self.commutes_with_d:
            base = self.gen_image(Gen(FIELD, g.a, 0))
            img = self.ring.d(base, g.b)
        else:
            img = DiffPoly.zero()
        self._cache[g] = img
        return img

    def __call__(self, p: DiffPoly) -> DiffPoly:
        return p.derive(self.gen_image)

    def check_commutes_with_d(self, gens: Iterable[Gen]) -> None:
        for g in gens:
            p = DiffPoly.gen(g)
            lhs = self(self.ring.d(p))
            rhs = self.ring.d(self(p))
            if lhs != rhs:
                raise NotDCommuting(f"derivation {self.name or '?'} fails to commute with d on {g.pretty()}")


def _base(g: Gen) -> Tuple[Gen, int]:
    if g.kind == FIELD and g.b > 0:
        return (Gen(FIELD, g.a, 0), g.b)
    return (g, 0)


class BracketTable:
    """Generator-pair table defining a candidate vertex Poisson structure."""

    def __init__(self, ring: DiffRing, name: str = ""):
        self.ring = ring
        self.name = name
        self.entries: Dict[Tuple[Gen, Gen], TwoPointKernel] = {}
        self._resolve_cache: Dict[Tuple[Gen, Gen], TwoPointKernel] = {}

    def set_pair(self, g1: Gen, g2: Gen, K: TwoPointKernel) -> None:
        self.entries[(g1, g2)] = K
        self._resolve_cache.clear()

    def universe(self) -> set:
        gens = set()
        for g1, g2 in self.entries:
            gens.add(g1)
            gens.add(g2)
        return gens

    def knows(self, g: Gen) -> bool:
        b, _ = _base(g)
        return any(b in pair for pair in self.entries)

    def resolve(self, G: Gen, H: Gen) -> TwoPointKernel:
        key = (G, H)
        cached = self._resolve_cache.get(key)
        if cached is not None:
            return cached
        bg, nx = _base(G)
        bh, ny = _base(H)
        K = self.entries.get((bg, bh))
        if K is None:
            K2 = self.entries.get((bh, bg))
            if K2 is None:
                raise UnknownGenerator(f"no bracket entry for ({bg.pretty()}, {bh.pretty()})")
            K = -sigma(self.ring, K2)
        if nx:
            K = dx_pow(self.ring, K, nx)
        if ny:
            K = dy_pow(self.ring, K, ny)
        self._resolve_cache[key] = K
        return K

    def bracket(self, A: DiffPoly, B: DiffPoly) -> TwoPointKernel:
        """The bilinear extension of the table to polynomials."""
        out = TwoPointKernel()
        for G in sorted(set(A.generators())):
            pa = A.partial(G)
            if pa.is_zero():
                continue
            for H in sorted(set(B.generators())):
                pb = B.partial(H)
                if pb.is_zero():
                    continue
                K = self.resolve(G, H)
                out = out + mult_y(self.ring, mult_x(self.ring, K, pa), pb)
        return out


# ---------------------------------------------------------------------------
# axiom defects
# ---------------------------------------------------------------------------


def antisymmetry_defect(table: BracketTable, a: DiffPoly, b: DiffPoly) -> TwoPointKernel:
    return table.bracket(a, b) + sigma(table.ring, table.bracket(b, a))


def dlin_defect(table: BracketTable, a: DiffPoly, b: DiffPoly) -> TwoPointKernel:
    return table.bracket(table.ring.d(a), b) - d_x(table.ring, table.bracket(a, b))


def dlin_defect_y(table: BracketTable, a: DiffPoly, b: DiffPoly) -> TwoPointKernel:
    return table.bracket(a, table.ring.d(b)) - d_y(table.ring, table.bracket(a, b))


def leibniz_defect(table: BracketTable, a: DiffPoly, b: DiffPoly, c: DiffPoly) -> TwoPointKernel:
    lhs = table.bracket(a * b, c)
    rhs = mult_x(table.ring, table.bracket(b, c), a) + mult_x(table.ring, table.bracket(a, c), b)
    return lhs - rhs


def p_xyz(table: BracketTable, a: DiffPoly, m: TwoPointKernel) -> ThreePointKernel:
    """Extend the bracket of a against a two-point kernel in slots (y, z)."""
    ring = table.ring
    out: Dict[K3Key, Fraction] = {}
    for (mf, mg, k), coeff in m.terms.items():
        fpoly = DiffPoly({mf: Fraction(1)})
        O_f = op_iso(ring, table.bracket(a, fpoly))
        if k >= 0:
            # P(a (x) f(y) Dy^k delta) = (-1)^k (op P)(a (x) f)(x) Dz^k delta
            sign = coeff * ((-1) ** k)
            for j, cj in O_f.local.items():
                for mm, cc in cj.terms.items():
                    _k3_put(out, ring, mm, ONE_MONO, ONE_MONO, j, 0, k, sign * cc)
            for am, bp in O_f.nonlocal_.items():
                for bm, cc in bp.terms.items():
                    _k3_put(out, ring, am, bm, ONE_MONO, -1, 0, k, sign * cc)
        else:
            gpoly = DiffPoly({mg: Fraction(1)})
            O_g = op_iso(ring, table.bracket(a, gpoly))
            # term 1: -(op P)(a (x) f)(x) g(z) Dz^-1 delta
            for j, cj in O_f.local.items():
                for mm, cc in cj.terms.items():
                    _k3_put(out, ring, mm, ONE_MONO, mg, j, 0, -1, -coeff * cc)
            for am, bp in O_f.nonlocal_.items():
                for bm, cc in bp.terms.items():
                    _k3_put(out, ring, am, bm, mg, -1, 0, -1, -coeff * cc)
            # term 2: + f(y) (op P)(a (x) g)(x) Dy^-1 delta
            for j, cj in O_g.local.items():
                for mm, cc in cj.terms.items():
                    _k3_put(out, ring, mm, mf, ONE_MONO, j, -1, 0, coeff * cc)
            for am, bp in O_g.nonlocal_.items():
                for bm, cc in bp.terms.items():
                    _k3_put(out, ring, am, mf, bm, -1, -1, 0, coeff * cc)
    return ThreePointKernel(out)


def jacobi_defect(table: BracketTable, a: DiffPoly, b: DiffPoly, c: DiffPoly) -> ThreePointKernel:
    ring = table.ring
    t1 = p_xyz(table, a, table.bracket(b, c))
    t2 = sigma_xy(ring, p_xyz(table, b, table.bracket(a, c)))
    t3 = sigma_xz(ring, p_xyz(table, c, table.bracket(b, a)))
    return t1 - t2 - t3


# ---------------------------------------------------------------------------
# Hamiltonian calculus
# ---------------------------------------------------------------------------


def hamiltonian_vf(table: BracketTable, f: DiffPoly, a: DiffPoly) -> DiffPoly:
    """The vector field of the density f applied to a: -(op P(a (x) f)) . 1."""
    K = table.bracket(a, f)
    if not K.nonlocal_part().is_zero():
        raise NonlocalBracket("bracket has nonlocal terms; the density vector field is undefined")
    op = op_iso(table.ring, K)
    return -op.apply_to_one()


def density_bracket(table: BracketTable, f: DiffPoly, g: DiffPoly) -> DiffPoly:
    """Representative of the Lie bracket of densities modulo total derivatives."""
    return hamiltonian_vf(table, f, g)


def kernel_derive(ring: DiffRing, D: Derivation, K: TwoPointKernel) -> TwoPointKernel:
    """The induced action on kernels of a derivation commuting with d."""
    out = TwoPointKernel()
    for (mf, mg, k), c in K.terms.items():
        df = D(DiffPoly({mf: c}))
        if not df.is_zero():
            out = out + k2_term(ring, df, DiffPoly({mg: Fraction(1)}), k)
        if mg:
            dg = D(DiffPoly({mg: Fraction(1)}))
            if not dg.is_zero():
                out = out + k2_term(ring, DiffPoly({mf: c}), dg, k)
    return out


def infinitesimal_auto_defect(
    D: Derivation, table: BracketTable, a: DiffPoly, b: DiffPoly, check: bool = True
) -> TwoPointKernel:
    if check:
        gens = sorted(set(list(a.generators()) + list(b.generators())))
        D.check_commutes_with_d(gens)
    lhs = table.bracket(D(a), b) + table.bracket(a, D(b))
    return lhs - kernel_derive(table.ring, D, table.bracket(a, b))


# ---------------------------------------------------------------------------
# structures from derivation tensors
# ---------------------------------------------------------------------------


class HypothesisViolated(Exception):
    pass


def from_derivation_tensors(
    ring: DiffRing,
    tensors: Dict[int, Sequence[Tuple[Derivation, Derivation]]],
    universe: Sequence[Gen],
    test_basis: Optional[Sequence[DiffPoly]] = None,
    name: str = "",
) -> BracketTable:
    """Build the bracket P(a,b) = sum_i sum_alpha (x_i a)(x) (y_i b)(y) Dx^i delta.

    tensors maps the power i >= -1 to its list of derivation pairs.  The
    antisymmetry and shift hypotheses are checked on the test basis; a
    violation raises with a witness.
    """
    if test_basis is None:
        test_basis = [DiffPoly.gen(g) for g in universe]
    # antisymmetry hypothesis: sum x (x) y = (-1)^(i+1) sum y (x) x
    for i, pairs in sorted(tensors.items()):
        sgn = (-1) ** (i + 1)
        for pa in test_basis:
            for pb in test_basis:
                lhs = DiffPoly.zero()
                rhs = DiffPoly.zero()
                for Dx_, Dy_ in pairs:
                    lhs = lhs + Dx_(pa) * Dy_(pb)
                    rhs = rhs + Dy_(pa) * Dx_(pb) * sgn
                if lhs != rhs:
                    kind = "symmetric" if sgn > 0 else "antisymmetric"
                    raise HypothesisViolated(
                        f"tensor at power {i} is not {kind}"
                        f" on witness pair ({pa.render()}, {pb.render()})"
                    )
    # shift hypothesis: sum [x_i, d] (x) y_i = sum x_(i-1) (x) y_(i-1) modulo E_i
    for i, pairs in sorted(tensors.items()):
        if i == -1:
            for Dx_, Dy_ in pairs:
                for g in universe:
                    p = DiffPoly.gen(g)
                    if Dx_(ring.d(p)) != ring.d(Dx_(p)) or Dy_(ring.d(p)) != ring.d(Dy_(p)):
                        raise HypothesisViolated(
                            f"power -1 derivations must commute with d; witness {g.pretty()}"
                        )
            continue
        prev = tensors.get(i - 1, [])
        for pa in test_basis:
            for pb in test_basis:
                for j in range(i + 1):
                    acc = DiffPoly.zero()
                    for Dx_, Dy_ in pairs:
                        comm = Dx_(ring.d(pa)) - ring.d(Dx_(pa))
                        acc = acc + comm * ring.d(Dy_(pb), j)
                    for Dx_, Dy_ in prev:
                        acc = acc - Dx_(pa) * ring.d(Dy_(pb), j)
                    if not acc.is_zero():
                        raise HypothesisViolated(
                            f"shift hypothesis fails at power {i}, contraction {j},"
                            f" witness pair ({pa.render()}, {pb.render()})"
                        )
    table = BracketTable(ring, name=name)
    for g1 in universe:
        p1 = DiffPoly.gen(g1)
        for g2 in universe:
            p2 = DiffPoly.gen(g2)
            K = TwoPointKernel()
            for i, pairs in sorted(tensors.items()):
                for Dx_, Dy_ in pairs:
                    va = Dx_(p1)
                    vb = Dy_(p2)
                    if va.is_zero() or vb.is_zero():
                        continue
                    K = K + k2_term(ring, va, vb, i)
            if not K.is_zero() or g1 == g2:
                table.set_pair(g1, g2, K)
    return table
