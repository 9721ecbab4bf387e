"""Formal pseudodifferential operators over a differential ring.

An operator is a local part sum c_k D^k (k >= 0), a factored nonlocal part
sum a D^-1 b, and optionally an expanded tail (negative powers down to a
truncation depth).  The factored class is closed under every composition
needed by the bracket calculus; products that would force an infinite tail
raise LeavesClass unless a truncation depth is supplied.  The expanded-tail
mode exists to unit-test the Leibniz series and must not be used inside
bracket computations.

The nonlocal part is stored in a canonical tensor form: a dict mapping the
left-factor monomial to the collected right-factor polynomial.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, Optional, Tuple

from .diffring import DiffPoly, DiffRing, Monomial, ONE_MONO, binomial


class LeavesClass(Exception):
    """The requested product falls outside the factored operator class."""


def _tensor_add(acc: Dict[Monomial, DiffPoly], a: DiffPoly, b: DiffPoly) -> None:
    """Accumulate the tensor a (x) b into first-slot-monomial canonical form."""
    if a.is_zero() or b.is_zero():
        return
    for m, c in a.terms.items():
        cur = acc.get(m)
        nxt = (cur + b * c) if cur is not None else (b * c)
        if nxt.is_zero():
            acc.pop(m, None)
        else:
            acc[m] = nxt


class PseudoDiffOp:
    __slots__ = ("local", "nonlocal_", "tail", "depth")

    def __init__(
        self,
        local: Optional[Dict[int, DiffPoly]] = None,
        nonlocal_: Optional[Dict[Monomial, DiffPoly]] = None,
        tail: Optional[Dict[int, DiffPoly]] = None,
        depth: Optional[int] = None,
    ):
        self.local = {k: v for k, v in (local or {}).items() if not v.is_zero()}
        self.nonlocal_ = {m: v for m, v in (nonlocal_ or {}).items() if not v.is_zero()}
        self.tail = {k: v for k, v in (tail or {}).items() if not v.is_zero()}
        self.depth = depth

    # -- constructors ---------------------------------------------------

    @staticmethod
    def zero() -> "PseudoDiffOp":
        return PseudoDiffOp()

    @staticmethod
    def from_poly(p: DiffPoly) -> "PseudoDiffOp":
        return PseudoDiffOp(local={0: p})

    @staticmethod
    def d_power(k: int, coeff: DiffPoly | int = 1) -> "PseudoDiffOp":
        p = coeff if isinstance(coeff, DiffPoly) else DiffPoly.const(coeff)
        if k >= 0:
            return PseudoDiffOp(local={k: p})
        if k == -1:
            acc: Dict[Monomial, DiffPoly] = {}
            _tensor_add(acc, p, DiffPoly.one())
            return PseudoDiffOp(nonlocal_=acc)
        raise LeavesClass("powers below -1 are not in the factored class")

    @staticmethod
    def nonlocal_pair(a: DiffPoly, b: DiffPoly) -> "PseudoDiffOp":
        acc: Dict[Monomial, DiffPoly] = {}
        _tensor_add(acc, a, b)
        return PseudoDiffOp(nonlocal_=acc)

    # -- structure ---------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.local and not self.nonlocal_ and not self.tail

    def is_local(self) -> bool:
        return not self.nonlocal_ and not self.tail

    def __eq__(self, other) -> bool:
        if not isinstance(other, PseudoDiffOp):
            return NotImplemented
        return (
            self.local == other.local
            and self.nonlocal_ == other.nonlocal_
            and self.tail == other.tail
        )

    def __add__(self, other: "PseudoDiffOp") -> "PseudoDiffOp":
        local = dict(self.local)
        for k, v in other.local.items():
            nv = local.get(k, DiffPoly.zero()) + v
            if nv.is_zero():
                local.pop(k, None)
            else:
                local[k] = nv
        nl = dict(self.nonlocal_)
        for m, v in other.nonlocal_.items():
            nv = nl.get(m, DiffPoly.zero()) + v
            if nv.is_zero():
                nl.pop(m, None)
            else:
                nl[m] = nv
        tail = dict(self.tail)
        for k, v in other.tail.items():
            nv = tail.get(k, DiffPoly.zero()) + v
            if nv.is_zero():
                tail.pop(k, None)
            else:
                tail[k] = nv
        depth = self.depth if other.depth is None else other.depth
        if self.depth is not None and other.depth is not None:
            depth = min(self.depth, other.depth)
        return PseudoDiffOp(local, nl, tail, depth)

    def __neg__(self) -> "PseudoDiffOp":
        return self * Fraction(-1)

    def __sub__(self, other: "PseudoDiffOp") -> "PseudoDiffOp":
        return self + (-other)

    def __mul__(self, q) -> "PseudoDiffOp":
        q = Fraction(q)
        return PseudoDiffOp(
            {k: v * q for k, v in self.local.items()},
            {m: v * q for m, v in self.nonlocal_.items()},
            {k: v * q for k, v in self.tail.items()},
            self.depth,
        )

    __rmul__ = __mul__

    def nonlocal_pairs(self):
        for m, b in sorted(self.nonlocal_.items()):
            yield DiffPoly({m: Fraction(1)}), b

    def apply_to_one(self) -> DiffPoly:
        """Evaluate the operator on the ring unit (local operators only)."""
        if not self.is_local():
            raise LeavesClass("cannot apply a nonlocal operator to 1")
        return self.local.get(0, DiffPoly.zero())

    def render(self) -> str:
        parts = []
        for k in sorted(self.local, reverse=True):
            c = self.local[k]
            body = f"({c.render()})" if len(c.terms) > 1 else c.render()
            parts.append(body if k == 0 else f"{body}*D^{k}" if k != 1 else f"{body}*D")
        for a, b in self.nonlocal_pairs():
            parts.append(f"({a.render()})*D^-1*({b.render()})")
        for k in sorted(self.tail, reverse=True):
            parts.append(f"({self.tail[k].render()})*D^{k}")
        return " + ".join(parts) if parts else "0"

    def __repr__(self):
        return f"PseudoDiffOp({self.render()})"


def _compose_local_local(A: Dict[int, DiffPoly], B: Dict[int, DiffPoly], ring: DiffRing) -> Dict[int, DiffPoly]:
    out: Dict[int, DiffPoly] = {}
    for k, f in A.items():
        for m, g in B.items():
            # D^k g = sum_j C(k,j) g^(j) D^(k-j)
            for j in range(k + 1):
                coeff = f * (ring.d(g, j) * binomial(k, j))
                if coeff.is_zero():
                    continue
                kk = k - j + m
                cur = out.get(kk, DiffPoly.zero()) + coeff
                if cur.is_zero():
                    out.pop(kk, None)
                else:
                    out[kk] = cur
    return out


def compose(A: PseudoDiffOp, B: PseudoDiffOp, ring: DiffRing, depth: Optional[int] = None) -> PseudoDiffOp:
    """Compose two operators; exact when the product stays factored.

    With a truncation depth, blocked products are expanded into a tail of
    negative powers cut below -depth.
    """
    if A.tail or B.tail:
        raise LeavesClass("expanded-tail operands cannot be composed further")
    out = PseudoDiffOp()
    out.local = _compose_local_local(A.local, B.local, ring)

    # local o nonlocal: f D^k (a D^-1 b) = f [sum_{j<k} C(k,j) a^(j) D^(k-1-j)] b + f a^(k) D^-1 b
    for k, f in A.local.items():
        for a, b in B.nonlocal_pairs():
            for j in range(k):
                mid = a if j == 0 else ring.d(a, j)
                piece = _compose_local_local({k - 1 - j: f * mid * binomial(k, j)}, {0: b}, ring)
                out = out + PseudoDiffOp(local=piece)
            acc: Dict[Monomial, DiffPoly] = {}
            _tensor_add(acc, f * ring.d(a, k), b)
            out = out + PseudoDiffOp(nonlocal_=acc)

    # nonlocal o local: (a D^-1 b)(c D^m): reduce D^-1 e D^m with e = b*c
    for a, b in A.nonlocal_pairs():
        for m, c in B.local.items():
            e = b * c
            # D^-1 e D^m = sum_{j=0}^{m-1} (-1)^j e^(j) D^(m-1-j) + (-1)^m D^-1 e^(m)
            for j in range(m):
                piece = _compose_local_local(
                    {0: a}, {m - 1 - j: ring.d(e, j) * Fraction((-1) ** j)}, ring
                )
                out = out + PseudoDiffOp(local=piece)
            acc2: Dict[Monomial, DiffPoly] = {}
            _tensor_add(acc2, a * Fraction((-1) ** m), ring.d(e, m))
            out = out + PseudoDiffOp(nonlocal_=acc2)

    # nonlocal o nonlocal leaves the class
    if A.nonlocal_ and B.nonlocal_:
        if depth is None:
            raise LeavesClass("nonlocal-by-nonlocal product needs a truncation depth")
        blockedA = expand(PseudoDiffOp(nonlocal_=A.nonlocal_), depth + 2, ring)
        blockedB = expand(PseudoDiffOp(nonlocal_=B.nonlocal_), depth + 2, ring)
        out = out + _compose_expanded(blockedA, blockedB, ring, depth)
    return out


def expand(A: PseudoDiffOp, depth: int, ring: DiffRing) -> PseudoDiffOp:
    """Expand the factored nonlocal part into a truncated Leibniz tail.

    a D^-1 b = sum_{j>=0} (-1)^j a b^(j) D^(-1-j), cut below -depth.
    Test-support only; the bracket calculus never calls this.
    """
    tail: Dict[int, DiffPoly] = dict(A.tail)
    for a, b in A.nonlocal_pairs():
        for j in range(depth):
            coeff = a * ring.d(b, j) * Fraction((-1) ** j)
            k = -1 - j
            cur = tail.get(k, DiffPoly.zero()) + coeff
            if cur.is_zero():
                tail.pop(k, None)
            else:
                tail[k] = cur
    return PseudoDiffOp(local=A.local, tail=tail, depth=depth)


def _compose_expanded(A: PseudoDiffOp, B: PseudoDiffOp, ring: DiffRing, depth: int) -> PseudoDiffOp:
    """Compose operators given by (local + tail) symbols, truncating below -depth."""

    def items(op):
        for k, v in op.local.items():
            yield k, v
        for k, v in op.tail.items():
            yield k, v

    tail: Dict[int, DiffPoly] = {}
    local: Dict[int, DiffPoly] = {}
    for k, f in items(A):
        for m, g in items(B):
            # D^k o g: generalized Leibniz, finite when k >= 0, truncated otherwise
            j = 0
            while True:
                kk = k - j + m
                if kk < -depth:
                    break
                if k >= 0 and j > k:
                    break
                coeff = f * ring.d(g, j) * _gen_binom(k, j)
                if not coeff.is_zero():
                    dest = local if kk >= 0 else tail
                    cur = dest.get(kk, DiffPoly.zero()) + coeff
                    if cur.is_zero():
                        dest.pop(kk, None)
                    else:
                        dest[kk] = cur
                j += 1
                if j > 200:
                    break
    return PseudoDiffOp(local=local, tail=tail, depth=depth)


def _gen_binom(k: int, j: int) -> Fraction:
    num = Fraction(1)
    for t in range(j):
        num *= Fraction(k - t, t + 1)
    return num


def adjoint(A: PseudoDiffOp, ring: DiffRing) -> PseudoDiffOp:
    """The formal adjoint: ring elements fixed, D -> -D, anti-automorphism."""
    if A.tail:
        raise LeavesClass("adjoint of expanded tails is not supported")
    out = PseudoDiffOp()
    for k, f in A.local.items():
        # (f D^k)^* = (-D)^k o f
        piece = _compose_local_local({k: DiffPoly.const((-1) ** k)}, {0: f}, ring)
        out = out + PseudoDiffOp(local=piece)
    acc: Dict[Monomial, DiffPoly] = {}
    for a, b in A.nonlocal_pairs():
        _tensor_add(acc, -b, a)
    return out + PseudoDiffOp(nonlocal_=acc)
