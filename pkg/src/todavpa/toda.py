"""Dressing of the Toda/mKdV connection and the hierarchy flows.

The graded solve conjugates d + p_(-1) + sum u_i h_i^vee into d + p_(-1):
the image-of-ad components of the logarithm are determined algebraically
degree by degree, while each principal-subalgebra degree introduces one new
half-integral generator F_n whose derivative is the density H_n read off
from the same equation.  The unipotent factor free of the new generators is
kept alongside (its product with exp(sum p_n F_n / n) is the full dressing
element).

Flows are realized through the dressed generators: the field flow comes from
the Cartan component of -[p_(-1), Ad(nbar) p_(-n)], the half-integral flows
from exact integration of the density flows, and the Borel flows from right
multiplication by the lower projection of Ad(n_+) p_(-n).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .borel import BorelModel
from .diffring import (
    DiffPoly,
    DiffRing,
    Gen,
    NotExact,
    TruncationExceeded,
    halfim_gen,
    phi_gen,
    u_gen,
)
from .kacmoody import AffineData, LoopMatrix, matrix_exp, matrix_log


class DressingData:
    def __init__(self, data: AffineData, ring: DiffRing, cutoff: int):
        self.data = data
        self.ring = ring
        self.cutoff = cutoff
        self.H: Dict[int, DiffPoly] = {}
        self.eta: Optional[LoopMatrix] = None       # log of the generator-free factor
        self.nbar: Optional[LoopMatrix] = None
        self.nbar_inv: Optional[LoopMatrix] = None
        self.nplus: Optional[LoopMatrix] = None
        self.nplus_inv: Optional[LoopMatrix] = None
        self._ad_nbar: Dict[int, LoopMatrix] = {}
        self._hpair: Dict[Tuple[int, int], DiffPoly] = {}
        self.exponents: List[int] = []

    # -- access ----------------------------------------------------------

    def ad_nbar_p(self, n: int) -> LoopMatrix:
        """Ad(nbar) applied to the principal element of degree n (cached)."""
        cached = self._ad_nbar.get(n)
        if cached is None:
            pn = self.data.p.get(n)
            if pn is None:
                raise TruncationExceeded(f"principal element p_{n} not inside the window")
            cached = self.nbar.matmul(pn, truncate=True).matmul(self.nbar_inv, truncate=True)
            self._ad_nbar[n] = cached
        return cached

    def h_pair(self, n: int, m: int) -> DiffPoly:
        """H_(n,m) with d H_(n,m) = flow_n H_m, zero constant term."""
        key = (n, m)
        cached = self._hpair.get(key)
        if cached is not None:
            return cached
        if m not in self.H:
            raise TruncationExceeded(f"density H_{m} not computed (cutoff {self.cutoff})")
        flowed = self.ring.flow(n, self.H[m])
        try:
            val = self.ring.integrate(flowed)
        except NotExact as exc:
            raise NotExact(
                f"flow_{n} H_{m} is not an exact derivative at cutoff {self.cutoff}"
            ) from exc
        self._hpair[key] = val
        return val


def dress(data: AffineData, ring: DiffRing, cutoff: int) -> DressingData:
    """Solve the dressing problem up to the given principal degree."""
    dd = DressingData(data, ring, cutoff)
    lo, hi = data.lo, data.hi
    if cutoff + 1 > data.h * hi + (data.N - 1):
        raise TruncationExceeded("lambda window too small for the requested dressing degree")

    U = LoopMatrix.zero(data.N, lo, hi)
    for i in range(1, data.N):
        ui = DiffPoly.gen(u_gen(i))
        U = U + data.h_vee[i].map_entries(lambda p, ui=ui: p * ui)
    L = data.p_minus1 + U

    eta = LoopMatrix.zero(data.N, lo, hi)
    residual: Dict[int, Fraction] = {}

    def conjugated(eta_now: LoopMatrix) -> LoopMatrix:
        """dexp-series of the derivative plus e^(-ad eta) applied to L."""
        deta = eta_now.map_entries(ring.d)
        total = LoopMatrix.zero(data.N, lo, hi)
        term = deta
        k = 0
        fact = 1
        while not term.is_zero() and k <= cutoff + 2:
            total = total + term.scale(Fraction(1, fact))
            # next term: (-ad eta)(term) = term*eta - eta*term
            term = term.matmul(eta_now, truncate=True) - eta_now.matmul(term, truncate=True)
            k += 1
            fact *= k + 1
        term = L
        k = 0
        fact = 1
        while not term.is_zero() and k <= cutoff + 2:
            total = total + term.scale(Fraction(1, fact))
            term = term.matmul(eta_now, truncate=True) - eta_now.matmul(term, truncate=True)
            k += 1
            fact *= k
        return total

    for d in range(0, cutoff):
        X = conjugated(eta)
        W = X.pdeg_component(d)
        if d >= 1 and data.exponent(d):
            coeff = W.pair(data.p[-d])
            if not coeff.is_zero():
                dd.H[d] = -d * coeff
                ring.register_d_image(halfim_gen(d), dd.H[d])
                dd.exponents.append(d)
                W = W - data.p[d].scale(coeff)
        if not data.project(W, "a").is_zero():
            raise RuntimeError(f"dressing solve left a principal component at degree {d}")
        eta = eta + data.ad_pinv(-W)
    dd.eta = eta
    dd.nbar = matrix_exp(eta, truncate=True)
    dd.nbar_inv = matrix_exp(-eta, truncate=True)

    _register_field_flows(dd)
    _symmetrize_densities(dd)

    phi = LoopMatrix.zero(data.N, lo, hi)
    for n in dd.exponents:
        Fn = DiffPoly.gen(halfim_gen(n))
        phi = phi + data.p[n].map_entries(lambda p, Fn=Fn: p * Fn * Fraction(1, n))
    expphi = matrix_exp(phi, truncate=True)
    expphi_neg = matrix_exp(-phi, truncate=True)
    dd.nplus = dd.nbar.matmul(expphi, truncate=True)
    dd.nplus_inv = expphi_neg.matmul(dd.nbar_inv, truncate=True)

    # half-integral flow images need the densities in final form
    for n in dd.exponents:
        if n == 1:
            continue
        images = ring._flow_images[n]
        for m in dd.exponents:
            images[halfim_gen(m)] = dd.h_pair(n, m)
    return dd


def _register_field_flows(dd: DressingData) -> None:
    data, ring = dd.data, dd.ring
    for n in dd.exponents:
        if n == 1:
            continue
        ad = dd.ad_nbar_p(-n)
        C = data.p_minus1.bracket(ad, truncate=True).pdeg_component(0)
        images: Dict[Gen, DiffPoly] = {}
        for i in range(1, data.N):
            images[u_gen(i)] = -C.pair(data.h_elt[i])
            images[phi_gen(i)] = data.h_elt[i].pair(ad)
        ring.register_flow(n, images)


def _symmetrize_densities(dd: DressingData) -> None:
    """Shift each density by an exact derivative so flow_n H_m = flow_m H_n.

    The dressing leaves the gauge freedom of right multiplication by the
    exponential of a principal-subalgebra element with polynomial entries;
    it moves every density by a total derivative.  The n = 1 compatibility
    conditions determine the shift; the remaining pairs are then exact and
    checked by the test suite.
    """
    data, ring = dd.data, dd.ring
    chi_total = None
    for m in dd.exponents:
        if m == 1:
            continue
        q = ring.flow(m, dd.H[1]) - ring.d(dd.H[m])
        if q.is_zero():
            continue
        psi = ring.integrate(q)
        dd.H[m] = dd.H[m] + psi
        ring.register_d_image(halfim_gen(m), dd.H[m])
        chi_m = -ring.integrate(psi)
        piece = data.p[m].map_entries(lambda p, chi_m=chi_m: p * chi_m * Fraction(1, m))
        chi_total = piece if chi_total is None else chi_total + piece
    if chi_total is not None:
        from .kacmoody import matrix_exp as _mexp, matrix_log as _mlog

        dd.nbar = dd.nbar.matmul(_mexp(chi_total, truncate=True), truncate=True)
        dd.nbar_inv = _mexp(-chi_total, truncate=True).matmul(dd.nbar_inv, truncate=True)
        dd.eta = _mlog(dd.nbar)
        dd._ad_nbar.clear()
        dd._hpair.clear()


def register_borel_flows(dd: DressingData, borel: BorelModel) -> None:
    ring = dd.ring
    for n in dd.exponents:
        if n == 1:
            continue
        images = ring._flow_images[n]
        borel.register_flow(n, dd.ad_nbar_p(-n), images)
    # the derivative of the Borel coordinates is already registered by the model


def zero_curvature_defect(dd: DressingData, n: int) -> LoopMatrix:
    """[d + p_(-1) + U, flow_n - (Ad(n_+) p_(-n))_+] as a matrix of polynomials."""
    data, ring = dd.data, dd.ring
    A = data.project(dd.ad_nbar_p(-n), "nplus")
    U = LoopMatrix.zero(data.N, data.lo, data.hi)
    for i in range(1, data.N):
        ui = DiffPoly.gen(u_gen(i))
        U = U + data.h_vee[i].map_entries(lambda p, ui=ui: p * ui)
    L = data.p_minus1 + U
    dA = A.map_entries(ring.d)
    flowU = U.map_entries(lambda p: ring.flow(n, p))
    return -flowU - dA + A.matmul(L, truncate=True) - L.matmul(A, truncate=True)


def cartan_flow_defect(dd: DressingData, n: int) -> LoopMatrix:
    """flow_n of the Cartan connection minus the degree-zero part of
    -[p_(-1), Ad(n_+) p_(-n)]."""
    data, ring = dd.data, dd.ring
    lhs = LoopMatrix.zero(data.N, data.lo, data.hi)
    for i in range(1, data.N):
        ui = DiffPoly.gen(u_gen(i))
        lhs = lhs + data.h_vee[i].map_entries(lambda p, ui=ui: p * ring.flow(n, ui))
    rhs = -data.p_minus1.bracket(dd.ad_nbar_p(-n), truncate=True).pdeg_component(0)
    return lhs - rhs


def evolution_defect(dd: DressingData) -> LoopMatrix:
    """d n_+ + (p_(-1) + U) n_+ - n_+ p_(-1), entrywise (window interior)."""
    data, ring = dd.data, dd.ring
    U = LoopMatrix.zero(data.N, data.lo, data.hi)
    for i in range(1, data.N):
        ui = DiffPoly.gen(u_gen(i))
        U = U + data.h_vee[i].map_entries(lambda p, ui=ui: p * ui)
    L = data.p_minus1 + U
    n_plus = dd.nplus
    return (
        n_plus.map_entries(ring.d)
        + L.matmul(n_plus, truncate=True)
        - n_plus.matmul(data.p_minus1, truncate=True)
    )


def factorization_defect(dd: DressingData) -> LoopMatrix:
    """n_+ minus nbar exp(sum p_n F_n / n), entrywise."""
    data = dd.data
    phi = LoopMatrix.zero(data.N, data.lo, data.hi)
    for n in dd.exponents:
        Fn = DiffPoly.gen(halfim_gen(n))
        phi = phi + data.p[n].map_entries(lambda p, Fn=Fn: p * Fn * Fraction(1, n))
    return dd.nplus - dd.nbar.matmul(matrix_exp(phi, truncate=True), truncate=True)


class LeftActionError(Exception):
    pass


def left_action(
    dd: DressingData,
    x: LoopMatrix,
    borel: Optional[BorelModel] = None,
    coset: bool = False,
):
    """The left-translation derivation generated by x, as generator images.

    With coset=True the Borel component is frozen at the identity, realizing
    the unipotent-group module structure on the field-and-half-integral ring
    (only meaningful for x in the upper nilpotent part).  Otherwise the full
    two-factor action is used and the Borel coordinates move as well.
    """
    data, ring = dd.data, dd.ring
    images: Dict[Gen, DiffPoly] = {}
    if coset:
        M = data.project(x, "nplus")
        if not (x - M).is_zero():
            raise LeftActionError("coset action is defined for upper-nilpotent generators only")
    else:
        if borel is None:
            raise LeftActionError("the full action needs the Borel coordinate model")
        binv = borel.inverse()
        conj = binv.matmul(x.clone_window(borel.lo, borel.hi), truncate=True).matmul(
            borel.matrix(), truncate=True
        )
        upper = LoopMatrix.zero(data.N, borel.lo, borel.hi)
        for d, comp in conj.pdeg_components().items():
            if d >= 1:
                upper = upper + comp
        lower = conj - upper
        prod = borel.matrix().matmul(lower, truncate=True)
        for g in borel.free_generators():
            images[g] = prod.entries.get((g.a, g.b, g.c), DiffPoly.zero())
        M = LoopMatrix.zero(data.N, data.lo, data.hi)
        for key, p in upper.entries.items():
            if data.lo <= key[2] <= data.hi:
                M.entries[key] = p

    # field components from the variation of the Cartan connection
    ad1 = dd.ad_nbar_p(-1)
    dU = M.matmul(ad1, truncate=True) - ad1.matmul(M, truncate=True)
    dU0 = dU.pdeg_component(0)
    for i in range(1, data.N):
        images[u_gen(i)] = dU0.pair(data.h_elt[i])

    # Half-integral components: split nbar^-1 M nbar into the dexp image of
    # the log variation (image-of-ad part, degree by degree) plus a principal
    # part.  The split is triangular in the principal degree; the residual
    # principal part collects the variations of the half integrals.
    rhs = dd.nbar_inv.matmul(M.matmul(dd.nbar, truncate=True), truncate=True)
    eta = dd.eta
    delta_eta = LoopMatrix.zero(data.N, data.lo, data.hi)
    delta_F: Dict[int, DiffPoly] = {}

    def dexp(v: LoopMatrix) -> LoopMatrix:
        total = LoopMatrix.zero(data.N, data.lo, data.hi)
        term = v
        k = 0
        fact = 1
        while not term.is_zero() and k <= dd.cutoff + 2:
            total = total + term.scale(Fraction(1, fact))
            term = term.matmul(eta, truncate=True) - eta.matmul(term, truncate=True)
            k += 1
            fact *= k + 1
        return total

    for d in range(1, dd.cutoff + 1):
        rem = (rhs - dexp(delta_eta)).pdeg_component(d)
        if rem.is_zero():
            continue
        if d in dd.exponents:
            coeff = rem.pair(data.p[-d])
            if not coeff.is_zero():
                delta_F[d] = coeff * d
                rem = rem - data.p[d].scale(coeff)
        if not data.project(rem, "a").is_zero():
            raise LeftActionError(
                f"left action does not close on the coordinates at degree {d}"
            )
        delta_eta = delta_eta + rem
    for n in dd.exponents:
        images[halfim_gen(n)] = delta_F.get(n, DiffPoly.zero())
    return images


def phi_flow_value(dd: DressingData, n: int, i: int) -> DiffPoly:
    """<h_i, Ad(nbar) p_(-n)>, the anti-derivative flow reading."""
    return dd.data.h_elt[i].pair(dd.ad_nbar_p(-n))
