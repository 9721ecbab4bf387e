"""Matrix-entry coordinates on the lower Borel loop group (sl2 realization).

The group element is a 2x2 matrix of Taylor series in the inverse spectral
parameter whose entries generate the coordinate ring.  The determinant is one
identically, which makes the (1,1) entries at each depth polynomial in the
remaining coordinates; those remaining entries are the free generators:

    a_0 (invertible), c_0          at power 0      (upper-right vanishes)
    a_j, b_j, c_j                  at power -j, j >= 1

The derivation acts by right multiplication with the connection matrix; the
images of the free coordinates are registered with the differential ring and
the derived entries stay consistent automatically (checked in the tests).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Tuple

from .diffring import BOREL, DiffPoly, DiffRing, Gen, borel_gen
from .kacmoody import AffineData, LoopMatrix


class BorelModel:
    def __init__(self, ring: DiffRing, data: AffineData, depth: int, hi: int):
        if data.type_label != "sl2":
            raise NotImplementedError("Borel coordinates are realized for sl2 only")
        self.ring = ring
        self.data = data
        self.depth = depth
        self.lo = -depth
        self.hi = hi
        self._entry_cache: Dict[Tuple[int, int, int], DiffPoly] = {}
        self._free: List[Gen] = [borel_gen(0, 0, 0), borel_gen(1, 0, 0)]
        for j in range(1, depth + 1):
            self._free += [borel_gen(0, 0, -j), borel_gen(0, 1, -j), borel_gen(1, 0, -j)]
        self._build_derived()
        self._register_d()

    # -- coordinates -----------------------------------------------------

    def free_generators(self) -> List[Gen]:
        return list(self._free)

    def generators_to_depth(self, depth: int) -> List[Gen]:
        return [g for g in self._free if -g.c <= depth]

    def entry(self, r: int, c: int, k: int) -> DiffPoly:
        """The (r, c) matrix entry at the given lambda power, as a polynomial."""
        if k > 0 or k < self.lo:
            return DiffPoly.zero()
        return self._entry_cache.get((r, c, k), DiffPoly.zero())

    def _build_derived(self) -> None:
        cache = self._entry_cache
        a0 = borel_gen(0, 0, 0)
        cache[(0, 0, 0)] = DiffPoly.gen(a0)
        cache[(1, 0, 0)] = DiffPoly.gen(borel_gen(1, 0, 0))
        cache[(0, 1, 0)] = DiffPoly.zero()
        cache[(1, 1, 0)] = DiffPoly.gen(a0, -1)
        for j in range(1, self.depth + 1):
            cache[(0, 0, -j)] = DiffPoly.gen(borel_gen(0, 0, -j))
            cache[(0, 1, -j)] = DiffPoly.gen(borel_gen(0, 1, -j))
            cache[(1, 0, -j)] = DiffPoly.gen(borel_gen(1, 0, -j))
            # det = 1 at each power: sum_(i+k=j) (a_i d_k - b_i c_k) = 0 for j >= 1
            acc = DiffPoly.zero()
            for i in range(0, j + 1):
                k = j - i
                if i >= 1:
                    acc = acc - cache[(0, 0, -i)] * cache[(1, 1, -k)]
                acc = acc + cache[(0, 1, -i)] * cache[(1, 0, -k)]
            cache[(1, 1, -j)] = acc * DiffPoly.gen(a0, -1)

    def matrix(self) -> LoopMatrix:
        out = LoopMatrix.zero(2, self.lo, self.hi)
        for (r, c, k), p in self._entry_cache.items():
            if not p.is_zero():
                out.entries[(r, c, k)] = p
        return out

    def inverse(self) -> LoopMatrix:
        """The inverse matrix: the adjugate, since the determinant is one."""
        out = LoopMatrix.zero(2, self.lo, self.hi)
        for (r, c, k), p in self._entry_cache.items():
            if p.is_zero():
                continue
            if (r, c) == (0, 0):
                out.entries[(1, 1, k)] = p
            elif (r, c) == (1, 1):
                out.entries[(0, 0, k)] = p
            elif (r, c) == (0, 1):
                out.entries[(0, 1, k)] = -p
            else:
                out.entries[(1, 0, k)] = -p
        return out

    def connection(self) -> LoopMatrix:
        """p_(-1) + sum_i u_i h_i^vee with polynomial coefficients."""
        data = self.data
        out = data.p_minus1.clone_window(self.lo, self.hi)
        for i in range(1, data.N):
            ui = DiffPoly.gen(Gen(0, i, 0))
            out = out + data.h_vee[i].clone_window(self.lo, self.hi).map_entries(lambda p: p * ui)
        return out

    def _register_d(self) -> None:
        prod = self.matrix().matmul(self.connection(), truncate=True)
        for g in self._free:
            img = prod.entries.get((g.a, g.b, g.c), DiffPoly.zero())
            self.ring.register_d_image(g, img)

    def d_consistency_defects(self) -> List[Tuple[Tuple[int, int, int], DiffPoly]]:
        """Leibniz derivative of every entry minus the matrix equation's value."""
        prod = self.matrix().matmul(self.connection(), truncate=True)
        out = []
        for key, p in sorted(self._entry_cache.items()):
            want = prod.entries.get(key, DiffPoly.zero())
            got = self.ring.d(p)
            if got != want:
                out.append((key, got - want))
        return out

    def register_flow(self, n: int, ad_nplus_pm: LoopMatrix, images: Dict[Gen, DiffPoly]) -> None:
        """Add the flow images of the Borel coordinates for the given exponent.

        ad_nplus_pm is the dressed generator of the flow; its lower projection
        multiplies the group element from the right.
        """
        M = self.data.project(ad_nplus_pm, "bminus").clone_window(self.lo, self.hi)
        prod = self.matrix().matmul(M, truncate=True)
        for g in self._free:
            images[g] = prod.entries.get((g.a, g.b, g.c), DiffPoly.zero())

    def left_translation_images(self, xi: LoopMatrix) -> Dict[Gen, DiffPoly]:
        """Derivation images of the coordinates under left multiplication by xi."""
        prod = xi.clone_window(self.lo, self.hi).matmul(self.matrix(), truncate=True)
        return {g: prod.entries.get((g.a, g.b, g.c), DiffPoly.zero()) for g in self._free}
