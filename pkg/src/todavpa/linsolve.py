"""Small exact linear solves over the rationals.

The systems appearing here are tiny (dual bases per graded piece, inversion
of the derivation on a finite monomial span), so straightforward Gaussian
elimination on sparse dict rows over Fraction is enough.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, Hashable, List, Optional, Sequence


def solve_columns(
    columns: Sequence[Dict[Hashable, Fraction]],
    target: Dict[Hashable, Fraction],
) -> Optional[List[Fraction]]:
    """Solve sum_j x_j * columns[j] = target; None if inconsistent.

    Any solution is returned when the system is underdetermined (free
    variables are set to zero, pivoting is deterministic).
    """
    row_keys = {}
    for col in columns:
        for k in col:
            row_keys.setdefault(k, len(row_keys))
    for k in target:
        row_keys.setdefault(k, len(row_keys))
    nrows = len(row_keys)
    ncols = len(columns)
    # dense is fine at these sizes
    mat = [[Fraction(0)] * (ncols + 1) for _ in range(nrows)]
    for j, col in enumerate(columns):
        for k, v in col.items():
            mat[row_keys[k]][j] = v
    for k, v in target.items():
        mat[row_keys[k]][ncols] = v

    pivots = []
    r = 0
    for c in range(ncols):
        pr = None
        for rr in range(r, nrows):
            if mat[rr][c] != 0:
                pr = rr
                break
        if pr is None:
            continue
        mat[r], mat[pr] = mat[pr], mat[r]
        pv = mat[r][c]
        mat[r] = [x / pv for x in mat[r]]
        for rr in range(nrows):
            if rr != r and mat[rr][c] != 0:
                f = mat[rr][c]
                mat[rr] = [x - f * y for x, y in zip(mat[rr], mat[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    for rr in range(r, nrows):
        if mat[rr][ncols] != 0:
            return None
    sol = [Fraction(0)] * ncols
    for rr, c in enumerate(pivots):
        sol[c] = mat[rr][ncols]
    return sol


def nullspace(columns: Sequence[Dict[Hashable, Fraction]]) -> List[List[Fraction]]:
    """Basis of {x : sum_j x_j columns[j] = 0}, deterministic order."""
    row_keys = {}
    for col in columns:
        for k in col:
            row_keys.setdefault(k, len(row_keys))
    nrows = len(row_keys)
    ncols = len(columns)
    mat = [[Fraction(0)] * ncols for _ in range(nrows)]
    for j, col in enumerate(columns):
        for k, v in col.items():
            mat[row_keys[k]][j] = v
    pivots: List[int] = []
    r = 0
    for c in range(ncols):
        pr = None
        for rr in range(r, nrows):
            if mat[rr][c] != 0:
                pr = rr
                break
        if pr is None:
            continue
        mat[r], mat[pr] = mat[pr], mat[r]
        pv = mat[r][c]
        mat[r] = [x / pv for x in mat[r]]
        for rr in range(nrows):
            if rr != r and mat[rr][c] != 0:
                f = mat[rr][c]
                mat[rr] = [x - f * y for x, y in zip(mat[rr], mat[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    basis = []
    pivset = set(pivots)
    for free in range(ncols):
        if free in pivset:
            continue
        vec = [Fraction(0)] * ncols
        vec[free] = Fraction(1)
        for rr, c in enumerate(pivots):
            vec[c] = -mat[rr][free]
        basis.append(vec)
    return basis
