"""Formal multivalued expansions and the a-action on them.

An element of Xi_lam^(N) is  sum_j c_j(b) e_{lam,j}  where e_{lam,j} stands
for s^(lam-1) (Log s)^j / j!.  The action of a is

    a e_{lam,0} = lam b e_{lam,0}
    a e_{lam,j} = lam b e_{lam,j} + b e_{lam,j-1}

extended by  a (c e) = c (a e) + b^2 c' e.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Tuple

from .coeff_core import BSeries, Q, TPoly, exp_coeff
from ._lattice import dvr_reduce
from .errors import NotInImage, PrecisionExhausted

__all__ = [
    "XiElement",
    "XiMultiElement",
    "GeneratedModule",
    "xi_apply_a",
    "generate_module",
    "filtration_member",
    "solve_shift",
    "component_split",
    "monodromy_defect",
    "krylov_rank",
]


class XiElement:
    __slots__ = ("lam", "comps")

    def __init__(self, lam, comps):
        lam = Q(lam)
        if not (0 < lam <= 1):
            raise ValueError(f"lambda must lie in ]0,1], got {lam}")
        self.lam = lam
        self.comps = tuple(comps)
        if not self.comps:
            raise ValueError("need at least one component")

    @classmethod
    def basis(cls, lam, j, trunc, N=None, coeff=None):
        N = j if N is None else N
        comps = [BSeries.zero(trunc) for _ in range(N + 1)]
        comps[j] = coeff if coeff is not None else BSeries.const(1, trunc)
        return cls(lam, comps)

    @property
    def N(self):
        return len(self.comps) - 1

    @property
    def trunc(self):
        return min(c.trunc for c in self.comps)

    def log_degree(self):
        for j in range(self.N, -1, -1):
            if not self.comps[j].is_zero():
                return j
        return -1

    def is_zero(self):
        return self.log_degree() < 0

    def top(self):
        d = self.log_degree()
        return None if d < 0 else self.comps[d]

    def with_N(self, N):
        t = self.trunc
        if N >= self.N:
            return XiElement(self.lam, list(self.comps) + [BSeries.zero(t)] * (N - self.N))
        for j in range(N + 1, self.N + 1):
            if not self.comps[j].is_zero():
                raise ValueError("cannot drop a nonzero Log component")
        return XiElement(self.lam, self.comps[: N + 1])

    def truncate(self, trunc):
        return XiElement(self.lam, [c.truncate(min(trunc, c.trunc)) for c in self.comps])

    def _aligned(self, other):
        if self.lam != other.lam:
            raise ValueError("elements live in different Xi_lambda")
        N = max(self.N, other.N)
        return self.with_N(N), other.with_N(N)

    def __add__(self, other):
        x, y = self._aligned(other)
        return XiElement(x.lam, [u + v for u, v in zip(x.comps, y.comps)])

    def __sub__(self, other):
        x, y = self._aligned(other)
        return XiElement(x.lam, [u - v for u, v in zip(x.comps, y.comps)])

    def __neg__(self):
        return XiElement(self.lam, [-c for c in self.comps])

    def scale(self, s):
        """Module multiplication by a series (or scalar)."""
        return XiElement(self.lam, [s * c if isinstance(s, BSeries) else c * s for c in self.comps])

    def agrees(self, other, through=None):
        x, y = self._aligned(other)
        return all(u.agrees(v, through) for u, v in zip(x.comps, y.comps))

    def __eq__(self, other):
        if not isinstance(other, XiElement):
            return NotImplemented
        return self.lam == other.lam and self.comps == other.comps

    def __hash__(self):
        return hash((self.lam, self.comps))

    def __repr__(self):
        inner = ", ".join(f"[{c}]" for c in self.comps)
        return f"XiElement(lam={self.lam}, comps=({inner}))"


@dataclass(frozen=True)
class XiMultiElement:
    parts: Tuple[Tuple[Fraction, XiElement], ...]

    @classmethod
    def of(cls, mapping):
        items = tuple(sorted((Q(k), v) for k, v in mapping.items()))
        return cls(items)

    def as_dict(self) -> Dict[Fraction, XiElement]:
        return dict(self.parts)

    def nonzero(self):
        return {lam: x for lam, x in self.parts if not x.is_zero()}


def xi_apply_a(phi):
    lam, cs = phi.lam, phi.comps
    out = []
    for i, c in enumerate(cs):
        r = (c * lam).shift(1) + c.derivative().shift(2)
        if i + 1 < len(cs):
            r = r + cs[i + 1].shift(1)
        out.append(r)
    return XiElement(lam, out)


def xi_apply_shifted(phi, mu):
    """(a - mu b) phi."""
    return xi_apply_a(phi) - phi.scale(BSeries.monomial(1, phi.trunc + 1, Q(mu)))


@dataclass(frozen=True)
class GeneratedModule:
    generator: XiElement
    rank: int
    basis: Tuple[XiElement, ...]
    relation: Tuple[BSeries, ...]  # a^k phi = sum_j relation[j] a^j phi

    @property
    def lam(self):
        return self.generator.lam


def _coord_rows(elements, N):
    return [list(e.with_N(N).comps) for e in elements]


def generate_module(phi):
    """Rank, basis phi, a phi, ..., a^(k-1) phi and the relation for a^k phi."""
    d = phi.log_degree()
    if d < 0:
        raise ValueError("the zero element generates nothing")
    k = d + 1
    phi = phi.with_N(d)
    powers = [phi]
    for _ in range(k):
        powers.append(xi_apply_a(powers[-1]))
    rows = _coord_rows(powers[:k], d)
    red = dvr_reduce(rows, list(range(d, -1, -1)))
    if red.rank < k:
        raise PrecisionExhausted("iterates of the generator are dependent through trunc")
    rel = red.solve(list(powers[k].comps))
    if rel is None:
        raise PrecisionExhausted("a^k phi is not in the span through trunc")
    return GeneratedModule(phi, k, tuple(powers[:k]), tuple(rel))


def krylov_rank(elements_by_lam, max_rank=None):
    """Rank over C((b)) of the span of a^i phi, for phi spread over several lambdas.

    ``elements_by_lam`` maps lambda to XiElement; coordinates are stacked.
    """
    lams = sorted(elements_by_lam)
    Ns = {l: elements_by_lam[l].log_degree() for l in lams}
    total = sum(max(n, 0) + 1 for n in Ns.values())
    cur = {l: elements_by_lam[l].with_N(max(Ns[l], 0)) for l in lams}
    rows = []
    rank = 0
    limit = max_rank if max_rank is not None else total
    for _ in range(total + 1):
        row = []
        for l in lams:
            row.extend(cur[l].comps)
        rows.append(row)
        r = dvr_reduce(rows, list(range(len(row))), track=False).rank
        if r == rank:
            break
        rank = r
        if rank >= limit:
            break
        cur = {l: xi_apply_a(cur[l]) for l in lams}
    return rank


def filtration_member(M, j):
    """C[[b]]-basis of F_j = M cap Xi^(j-1), plus the b^(k-j) divisibility check."""
    k = M.rank
    if not 1 <= j <= k:
        raise ValueError("filtration index out of range")
    rows = _coord_rows(M.basis, k - 1)
    red = dvr_reduce(rows, list(range(k - 1, j - 1, -1)))
    basis = [XiElement(M.lam, r[:j]) for r, _ in red.rest]
    if len(basis) != j:
        raise PrecisionExhausted("sublattice rank differs from the filtration index")
    divisible = all(
        (c.valuation() is None) or c.valuation() >= k - j for x in basis for c in x.comps
    )
    return basis, divisible


def solve_shift(j, q, theta):
    """Inverse of (a - (lam+q) b) from Xi^(j) plus one Log step up onto b Xi^(j).

    The coefficient of b^q e_{lam,0} (the kernel direction) is set to 0.
    The coefficient of b^q e_{lam,j+1} in the result equals the coefficient
    of b^(q+1) e_{lam,j} in theta.
    """
    if theta.log_degree() > j:
        raise NotInImage(f"Log-degree {theta.log_degree()} exceeds {j}")
    theta = theta.with_N(j)
    for i, c in enumerate(theta.comps):
        if c.trunc >= 0 and c[0] != 0:
            raise NotInImage(f"component {i} has a nonzero constant term")
    lam = theta.lam
    t = theta.trunc
    rhs = [c.divide_b(1) for c in theta.comps]  # b c_i' - q c_i + c_{i+1} = theta_i / b
    comps = [None] * (j + 2)
    kappa = rhs[j][q] if 0 <= q <= rhs[j].trunc else Fraction(0)
    if q > rhs[j].trunc:
        raise PrecisionExhausted("truncation below the shift degree")
    comps[j + 1] = BSeries.monomial(q, t - 1, kappa)
    for i in range(j, -1, -1):
        r = rhs[i] - comps[i + 1]
        out = [Fraction(0)] * (r.trunc + 1)
        for n in range(r.trunc + 1):
            if n == q:
                continue
            out[n] = r[n] / (n - q)
        if i > 0:
            # the free slot is forced by the obstruction of the next component
            out[q] = rhs[i - 1][q] if q <= rhs[i - 1].trunc else Fraction(0)
        comps[i] = BSeries(out, r.trunc)
        # the b^q coefficient of r must vanish: it is absorbed by comps[i+1]
        if q <= r.trunc and r[q] != 0:
            raise NotInImage(f"residual coefficient {r[q]} at b^{q} in component {i}")
    return XiElement(lam, comps)


def component_split(phi):
    """Generated module of every nonzero lambda-component."""
    return {lam: generate_module(x) for lam, x in phi.nonzero().items()}


def monodromy_defect(phi):
    """(e^{-2 i pi lam} T - id) phi with t standing for 2 i pi."""
    cs = phi.comps
    out = []
    for i in range(len(cs)):
        acc = BSeries.zero(phi.trunc)
        for j in range(i + 1, len(cs)):
            w = TPoly.t_power(j - i, exp_coeff(j - i))
            acc = acc + cs[j] * w
        out.append(acc)
    return XiElement(phi.lam, out)
