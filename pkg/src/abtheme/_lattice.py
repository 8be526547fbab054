"""Row reduction over C[[b]] with valuation bookkeeping.

A lattice is given by rows, each a list of BSeries of the same length.
Pivots are chosen with minimal b-valuation, so every elimination factor
is a genuine power series and the row operations stay unimodular.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import List

from .coeff_core import BSeries, series_inverse, series_mul_sharp
from .errors import PrecisionExhausted


def _vec_sub(x, y, factor):
    return [xi - series_mul_sharp(factor, yi) for xi, yi in zip(x, y)]


def _quotient(entry, pivot, v):
    """entry / pivot where val(entry) >= val(pivot) = v."""
    return entry.divide_b(v) * series_inverse(pivot.divide_b(v))


@dataclass
class Pivot:
    col: int
    valuation: int
    row: list
    combo: list


@dataclass
class Reduction:
    pivots: List[Pivot] = field(default_factory=list)
    rest: list = field(default_factory=list)  # (row, combo) pairs not used as pivots

    @property
    def rank(self):
        return len(self.pivots)

    def solve(self, target):
        """Coefficients c with sum c_i row_i = target, or None if outside the lattice."""
        n_rows = len(self.pivots[0].combo) if self.pivots else 0
        t = min(x.trunc for x in target)
        sol = [BSeries.zero(t) for _ in range(n_rows)]
        cur = list(target)
        for p in self.pivots:
            e = cur[p.col]
            v = e.valuation()
            if v is None:
                continue
            if v < p.valuation:
                return None
            f = _quotient(e, p.row[p.col], p.valuation)
            cur = _vec_sub(cur, p.row, f)
            sol = [s + series_mul_sharp(f, c) for s, c in zip(sol, p.combo)]
        if any(not x.is_zero() for x in cur):
            return None
        return sol

    def contains(self, target):
        return self.solve(target) is not None


def dvr_reduce(rows, col_order, track=True):
    """Eliminate the columns in ``col_order`` one after the other.

    Rows left in ``rest`` vanish on every processed column: over a discrete
    valuation ring they form a basis of the sublattice cut out by those
    columns.
    """
    n = len(rows)
    active = []
    for i, r in enumerate(rows):
        t = min(x.trunc for x in r)
        combo = [BSeries.const(1 if j == i else 0, t) for j in range(n)] if track else []
        active.append((list(r), combo))
    red = Reduction()
    for col in col_order:
        best = None
        for idx, (r, _) in enumerate(active):
            v = r[col].valuation()
            if v is not None and (best is None or v < best[1]):
                best = (idx, v)
        if best is None:
            continue
        idx, v = best
        prow, pcombo = active.pop(idx)
        piv = prow[col]
        new_active = []
        for r, c in active:
            if r[col].valuation() is None:
                new_active.append((r, c))
                continue
            f = _quotient(r[col], piv, v)
            r2 = _vec_sub(r, prow, f)
            c2 = _vec_sub(c, pcombo, f) if track else c
            new_active.append((r2, c2))
        active = new_active
        red.pivots.append(Pivot(col, v, prow, pcombo))
    red.rest = active
    return red


def series_rank(rows, ncols):
    """Rank over the Laurent field; entries zero through trunc count as zero."""
    red = dvr_reduce(rows, list(range(ncols)), track=False)
    return red.rank


def series_det_valuation(rows):
    """b-valuation of the determinant of a square matrix of series."""
    k = len(rows)
    red = dvr_reduce(rows, list(range(k)), track=False)
    if red.rank < k:
        raise PrecisionExhausted("matrix is singular through trunc")
    return sum(p.valuation for p in red.pivots)


# -- plain linear algebra over Q ------------------------------------------

def rref(matrix, ncols=None):
    """Reduced row echelon form of a list of dict rows {col: Fraction}.

    Returns (rows, pivot_cols).  Kept in-house so scalars stay Fractions.
    """
    rows = [dict(r) for r in matrix if any(r.values())]
    pivots = []
    out = []
    while rows:
        # choose the row whose smallest column index is minimal
        best_i, best_c = None, None
        for i, r in enumerate(rows):
            c = min(k for k, v in r.items() if v)
            if best_c is None or c < best_c:
                best_i, best_c = i, c
        prow = rows.pop(best_i)
        inv = 1 / prow[best_c]
        prow = {k: v * inv for k, v in prow.items() if v}
        for r in out:
            f = r.get(best_c)
            if f:
                for k, v in prow.items():
                    r[k] = r.get(k, 0) - f * v
                    if not r[k]:
                        del r[k]
        new_rows = []
        for r in rows:
            f = r.get(best_c)
            if f:
                for k, v in prow.items():
                    r[k] = r.get(k, 0) - f * v
                    if not r[k]:
                        del r[k]
            if r:
                new_rows.append(r)
        rows = new_rows
        out.append(prow)
        pivots.append(best_c)
    order = sorted(range(len(out)), key=lambda i: pivots[i])
    return [out[i] for i in order], [pivots[i] for i in order]


def nullspace(matrix, ncols):
    """Basis of {x : M x = 0} for dict rows; vectors as lists of Fractions."""
    rows, piv = rref(matrix, ncols)
    free = [c for c in range(ncols) if c not in set(piv)]
    basis = []
    for f in free:
        x = [Fraction(0)] * ncols
        x[f] = Fraction(1)
        for r, p in zip(rows, piv):
            x[p] = -r.get(f, Fraction(0))
        basis.append(x)
    return basis


def rank_q(matrix):
    return len(rref(matrix)[1])


def solve_q(matrix, rhs, ncols):
    """One solution of M x = rhs (dict rows), or None when inconsistent."""
    aug = []
    for r, b in zip(matrix, rhs):
        row = dict(r)
        if b:
            row[ncols] = Fraction(b)
        aug.append(row)
    rows, piv = rref(aug)
    if ncols in piv:
        return None
    x = [Fraction(0)] * ncols
    for r, p in zip(rows, piv):
        x[p] = r.get(ncols, Fraction(0))
    return x
