"""Hom spaces between themes and everything decided from them.

A morphism E -> F is fixed by the image y of the standard generator of E.
Writing y_1, ..., y_k for the images of the standard basis, the relations
of E become the chain

    (a - mu_1 b) y_1 = 0,    (a - mu_{j+1} b) y_{j+1} = S_j y_j

which is solved one component of F at a time, top down.  Each step is an
Euler equation  b Z' - m Z = r  with m = mu - lambda_i: when m is a natural
integer the coefficient of b^m is a fresh free constant and the coefficient
of b^(m+1) of r must vanish.  Coefficients are carried as linear forms in
the free constants; the vanishing conditions cut out the Hom space.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

from .coeff_core import BSeries, Q
from .errors import PrecisionExhausted
from ._lattice import nullspace, rref, series_det_valuation
from .op_algebra import word_expand
from .theme_core import (
    ThemePresentation,
    act_a,
    canonical_form,
    default_trunc,
    quotient,
    submodule,
)

__all__ = [
    "HomSpace",
    "HomSolution",
    "Obstructed",
    "Decision",
    "hom_space",
    "find_injection",
    "end_dimension",
    "end_flag",
    "is_invariant",
    "isomorphic",
    "ext_dimensions",
    "property_u",
    "UNKNOWN",
]

STAB_MARGIN = 8
UNKNOWN = "unknown"


# -- linear forms in the free constants -------------------------------------

def _lf_add(x, y, c=1):
    out = dict(x)
    for k, v in y.items():
        nv = out.get(k, 0) + c * v
        if nv:
            out[k] = nv
        else:
            out.pop(k, None)
    return out


def _lf_scale(x, c):
    if not c:
        return {}
    return {k: v * c for k, v in x.items()}


def _lin_mul(s, z):
    """BSeries times a list of linear forms, truncated at the shorter length."""
    n = min(s.trunc, len(z) - 1)
    out = [dict() for _ in range(n + 1)]
    sc = [(i, c) for i, c in enumerate(s.coeffs[: n + 1]) if c]
    for j, form in enumerate(z[: n + 1]):
        if not form:
            continue
        for i, c in sc:
            if i + j > n:
                break
            out[i + j] = _lf_add(out[i + j], form, c)
    return out


def _lin_sub(x, y):
    n = min(len(x), len(y))
    return [_lf_add(x[i], y[i], -1) for i in range(n)]


@dataclass
class _Condition:
    step: int
    component: int
    degree: int
    form: Dict[int, Fraction]


@dataclass
class _ChainState:
    nparams: int = 0
    conditions: List[_Condition] = field(default_factory=list)
    origin: Dict[int, Tuple[int, int, int]] = field(default_factory=dict)


def _solve_shift_in(dst, mu, w, step, st):
    """All Z in dst with (a - mu b) Z = w, as linear forms."""
    k = dst.rank
    Z = [None] * k
    for i in range(k - 1, -1, -1):
        r = w[i]
        if i + 1 < k:
            r = _lin_sub(r, _lin_mul(dst.S[i], Z[i + 1]))
        if r and r[0]:
            st.conditions.append(_Condition(step, i, 0, r[0]))
        m = Q(mu) - dst.lambdas[i]
        n_out = len(r) - 1
        out = []
        for n in range(n_out):
            rhs = r[n + 1]
            if n == m:
                if rhs:
                    st.conditions.append(_Condition(step, i, n + 1, rhs))
                pid = st.nparams
                st.nparams += 1
                st.origin[pid] = (step, i, n)
                out.append({pid: Fraction(1)})
            else:
                out.append(_lf_scale(rhs, 1 / (n - m)))
        Z[i] = out
    return Z


def _chain(src, dst, N):
    st = _ChainState()
    zero = [[dict() for _ in range(N + 1)] for _ in range(dst.rank)]
    ys = [_solve_shift_in(dst, src.lambdas[0], zero, 1, st)]
    for j in range(1, src.rank):
        w = [_lin_mul(src.S[j - 1], comp) for comp in ys[-1]]
        ys.append(_solve_shift_in(dst, src.lambdas[j], w, j + 1, st))
    return ys, st


def _evaluate(lin, vec):
    coeffs = []
    for form in lin:
        acc = Fraction(0)
        for k, v in form.items():
            if vec[k]:
                acc += v * vec[k]
        coeffs.append(acc)
    return BSeries(coeffs, len(lin) - 1)


@dataclass
class HomSpace:
    """Hom(source, target) as a finite-dimensional space of image vectors."""

    source: ThemePresentation
    target: ThemePresentation
    trunc: int
    chain: list  # y_1..y_k as linear forms
    state: _ChainState
    param_basis: List[List[Fraction]]

    @property
    def dim(self):
        return len(self.param_basis)

    def image(self, vec, level=None):
        """Image of e_level (default: the generator e_k) for parameter vector vec."""
        y = self.chain[(level or self.source.rank) - 1]
        return [_evaluate(c, vec) for c in y]

    def images(self):
        return [self.image(v) for v in self.param_basis]

    def flat(self, vec):
        out = {}
        for i, s in enumerate(self.image(vec)):
            for n, c in enumerate(s.coeffs):
                if c:
                    out[(i, n)] = c
        return out

    def level_dims(self):
        """dims of {x : W_i = 0 for i > r} for r = 0..k_target."""
        flats = [self.flat(v) for v in self.param_basis]
        out = []
        for r in range(self.target.rank + 1):
            out.append(len(_sub_with_zero(flats, lambda c: c[0] >= r)))
        return out


def _sub_with_zero(flats, forbidden):
    """Combination coefficients c with sum c_i flats_i zero on forbidden coordinates."""
    coords = sorted({c for f in flats for c in f if forbidden(c)})
    rows = []
    for c in coords:
        rows.append({i: f[c] for i, f in enumerate(flats) if c in f})
    return nullspace(rows, len(flats))


def _combine(flats, coeffs):
    out = {}
    for f, c in zip(flats, coeffs):
        if c:
            for k, v in f.items():
                nv = out.get(k, 0) + c * v
                if nv:
                    out[k] = nv
                else:
                    out.pop(k, None)
    return out


def hom_space(src, dst, trunc=None):
    N = trunc if trunc is not None else default_trunc(src, dst) + src.rank * dst.rank
    src = src.with_trunc(N) if src.rank > 1 else src
    dst = dst.with_trunc(N) if dst.rank > 1 else dst
    ys, st = _chain(src, dst, N)
    rows = [c.form for c in st.conditions]
    basis = nullspace(rows, st.nparams)
    return HomSpace(src, dst, N, ys, st, basis)


# -- result records -----------------------------------------------------------

def _rat(x):
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def vector_to_json(vec):
    return [str(s) for s in vec]


@dataclass
class HomSolution:
    source: ThemePresentation
    target: ThemePresentation
    image: List[BSeries]
    rank: int
    trunc: int
    chain_images: List[List[BSeries]] = field(default_factory=list)

    def __bool__(self):
        return True

    def cokernel_dimension(self):
        """dim_C of target / image, read off det[y_1 .. y_k]."""
        rows = [list(y) for y in self.chain_images]
        return series_det_valuation(rows)

    def to_json(self):
        return {"image": vector_to_json(self.image), "rank": self.rank}


@dataclass
class Obstructed:
    level: int
    max_rank: int
    hom_dim: int
    certificate: Dict[str, Any]
    trunc: int
    stabilized: bool = True

    def __bool__(self):
        return False

    def to_json(self):
        out = {"level": self.level, "max_rank": self.max_rank, "hom_dim": self.hom_dim}
        out.update(self.certificate)
        return out


@dataclass
class Decision:
    decision: Any  # True, False or UNKNOWN
    witness: Optional[Dict[str, Any]] = None
    obstruction: Optional[Dict[str, Any]] = None
    trunc_used: Optional[int] = None
    stabilized: bool = True
    extra: Dict[str, Any] = field(default_factory=dict)
    payload: Any = None  # engine objects behind the witness; not serialised

    def __bool__(self):
        return self.decision is True

    def to_json(self):
        out = {"decision": self.decision}
        if self.witness is not None:
            out["witness"] = self.witness
        if self.obstruction is not None:
            out["obstruction"] = self.obstruction
        out.update(self.extra)
        out["trunc_used"] = self.trunc_used
        out["stabilized"] = self.stabilized
        return out


# -- injections ---------------------------------------------------------------

def _first_killing_condition(H, functional):
    """Earliest condition after which the functional vanishes on solutions."""
    conds = H.state.conditions

    def forced(m):
        basis = nullspace([c.form for c in conds[:m]], H.state.nparams)
        return all(sum(functional.get(i, 0) * v[i] for i in range(len(v))) == 0 for v in basis)

    lo, hi = 0, len(conds)
    if not forced(hi):
        return None
    while lo < hi:
        mid = (lo + hi) // 2
        if forced(mid):
            hi = mid
        else:
            lo = mid + 1
    if lo == 0:
        return None
    c = conds[lo - 1]
    return {
        "chain_step": c.step,
        "component": c.component + 1,
        "degree": c.degree,
        "condition": _format_form(c.form),
    }


def _format_form(form):
    parts = [f"{_rat(v)}*c{k}" for k, v in sorted(form.items())]
    return " + ".join(parts) + " = 0" if parts else "0 = 0"


def _top_solution(H, level):
    """Parameter vector of a Hom element with W_level != 0 and W_i = 0 above."""
    flats = [H.flat(v) for v in H.param_basis]
    coeffs = _sub_with_zero(flats, lambda c: c[0] >= level)
    for co in coeffs:
        f = _combine(flats, co)
        if any(c[0] == level - 1 for c in f):
            vec = [sum(c * b[i] for c, b in zip(co, H.param_basis)) for i in range(H.state.nparams)]
            return vec, f
    return None, None


def _injection_once(src, dst, N):
    k = src.rank
    H = hom_space(src, dst, N)
    dims = H.level_dims()
    max_rank = max([r for r in range(1, dst.rank + 1) if dims[r] > dims[r - 1]], default=0)
    if max_rank < k:
        # the sigma slot: the free constant created at the top component of the last step
        top = H.chain[-1][dst.rank - 1]
        cert = None
        for n, form in enumerate(top):
            if form:
                cert = _first_killing_condition(H, form)
                if cert:
                    cert["coefficient_of"] = f"b^{n} e_{dst.rank}"
                    break
        return Obstructed(k, max_rank, H.dim, cert or {}, N)
    vec, _ = _top_solution(H, k)
    # normalise the leading coefficient of W_k to 1
    Wk = H.image(vec)[k - 1]
    lead = Wk[Wk.valuation()]
    vec = [x / lead for x in vec]
    chain_images = [H.image(vec, level=j) for j in range(1, k + 1)]
    return HomSolution(src, dst, H.image(vec), k, N, chain_images)


def _stable(fn, N, same):
    first = fn(N)
    second = fn(N + STAB_MARGIN)
    return first, same(first, second)


def find_injection(src, dst, trunc=None):
    """Injective morphism src -> dst (equal ranks), or an Obstructed certificate."""
    if src.rank != dst.rank:
        raise ValueError("injections are searched between themes of equal rank")
    N = trunc if trunc is not None else default_trunc(src, dst) + src.rank * dst.rank
    res, ok = _stable(lambda n: _injection_once(src, dst, n), N, lambda a, b: bool(a) == bool(b))
    if isinstance(res, Obstructed):
        res.stabilized = ok
    return res


# -- endomorphisms and invariance ---------------------------------------------

def end_flag(pres, trunc=None):
    """Ranks r such that some endomorphism has image of rank exactly r."""
    H = hom_space(pres, pres, trunc)
    dims = H.level_dims()
    return [r for r in range(1, pres.rank + 1) if dims[r] > dims[r - 1]]


def end_dimension(pres, trunc=None):
    return hom_space(pres, pres, trunc).dim


def end_dimension_by_levels(pres):
    """1 + number of levels j with an injection E/F_(k-j) -> F_j."""
    k = pres.rank
    count = 1
    for j in range(1, k):
        if find_injection(quotient(pres, k - j), submodule(pres, j)):
            count += 1
    return count


def _invariance_once(pres, N):
    k = pres.rank
    if k == 1:
        return True, {"image": ["1"]}, None
    H = hom_space(pres, pres, N)
    flats = [H.flat(v) for v in H.param_basis]
    coeffs = _sub_with_zero(flats, lambda c: c[0] >= k - 1)
    cand = [_combine(flats, co) for co in coeffs]
    if not any(any(c[0] == k - 2 for c in f) for f in cand):
        cert = None
        if H.state.conditions:
            cert = {"hom_dim": H.dim, "end_flag": [r for r in range(1, k + 1) if H.level_dims()[r] > H.level_dims()[r - 1]]}
        return False, None, cert
    order_top = lambda c: (-c[0], c[1])
    rows, piv = rref([{order_top(c): v for c, v in f.items()} for f in cand])
    w = None
    for r, p in zip(rows, piv):
        if -p[0] == k - 2:
            w = {(-c[0], c[1]): v for c, v in r.items()}
            break
    # reduce against the maps landing in F_(k-2)
    low_coeffs = _sub_with_zero(flats, lambda c: c[0] >= k - 2)
    low = [_combine(flats, co) for co in low_coeffs]
    if low:
        lrows, lpiv = rref(low)
        for r, p in zip(lrows, lpiv):
            c = w.get(p)
            if c:
                w = _lf_add(w, r, -c)
    vec = []
    for i in range(k):
        terms = {n: v for (lvl, n), v in w.items() if lvl == i}
        top_n = max(terms, default=-1)
        vec.append(BSeries.from_dict(terms, max(top_n, 0)))
    return True, {"image": vector_to_json(vec), "vector": vec}, None


def is_invariant(pres, trunc=None):
    """Does pres admit an endomorphism of rank k-1?"""
    N = trunc if trunc is not None else default_trunc(pres) + pres.rank ** 2
    r1 = _invariance_once(pres, N)
    r2 = _invariance_once(pres, N + STAB_MARGIN)
    witness = payload = None
    if r1[1] is not None:
        witness = {"image": r1[1]["image"]}
        payload = r1[1].get("vector")
    return Decision(r1[0], witness, r1[2], N, r1[0] == r2[0], payload=payload)


# -- isomorphism ---------------------------------------------------------------

def isomorphic(A, B, trunc=None):
    """Decide A ~ B.  Witness: the image of B's generator inside A."""
    if A.lambdas != B.lambdas:
        return Decision(False, None, {"reason": "fundamental invariants differ"}, trunc, True)
    if A.rank == 1:
        return Decision(True, {"image": ["1"]}, None, trunc, True)
    N = trunc if trunc is not None else default_trunc(A, B) + A.rank * B.rank
    inj = find_injection(B, A, N)
    inv_a, inv_b = bool(is_invariant(A)), bool(is_invariant(B))
    extra = {}
    if inv_a and inv_b:
        same = canonical_form(A).same_as(canonical_form(B))
        extra["canonical_forms_agree"] = same
        if same != bool(inj):
            raise PrecisionExhausted("canonical-form comparison and generator search disagree")
    if not inj:
        return Decision(False, None, inj.to_json(), N, inj.stabilized, extra)
    wit = {"image": vector_to_json(inj.image)}
    U = inj.image[A.rank - 2]
    if all(U[n] == 0 for n in range(1, U.trunc + 1)):
        wit["U"] = _rat(U[0])
    else:
        wit["U"] = str(U)
    return Decision(True, wit, None, N, True, extra, payload=inj)


# -- Ext -----------------------------------------------------------------------

def _word_matrix(E, F, N):
    """Columns: images of b^n e_i under P_E, as dict rows over (i, degree)."""
    P = word_expand(E.with_trunc(N).word(), N) if E.rank > 1 else None
    Fp = F.with_trunc(N) if F.rank > 1 else F
    cols = []
    for i in range(F.rank):
        for n in range(N + 1):
            v = [BSeries.zero(N) for _ in range(F.rank)]
            v[i] = BSeries.monomial(n, N)
            if P is None:
                img = [x - (w * E.lambdas[0]).shift(1).truncate(N) for x, w in zip(act_a(Fp, v), v)]
            else:
                acc = [BSeries.zero(N) for _ in range(F.rank)]
                cur = v
                for j, c in enumerate(P.coeffs):
                    if j > 0:
                        cur = act_a(Fp, cur)
                    cur = [x.truncate(N) for x in cur]
                    acc = [x + c * y for x, y in zip(acc, cur)]
                img = acc
            cols.append(img)
    rows = [dict() for _ in range(F.rank * (N + 1))]
    for ci, img in enumerate(cols):
        for i, s in enumerate(img):
            for d in range(N + 1):
                c = s[d]
                if c:
                    rows[i * (N + 1) + d][ci] = c
    return rows, F.rank * (N + 1)


def _ext_once(E, F, N, margin):
    rows, n = _word_matrix(E, F, N)
    red, piv = rref(rows)
    rank = len(piv)
    ext1 = n - rank
    M = N - margin
    # kernel vectors, projected onto degrees <= M
    pivset = set(piv)
    free = [c for c in range(n) if c not in pivset]
    proj = []
    for f in free:
        x = {f: Fraction(1)}
        for r, p in zip(red, piv):
            v = r.get(f)
            if v:
                x[p] = -v
        low = {c: v for c, v in x.items() if c % (N + 1) <= M}
        if low:
            proj.append(low)
    ext0 = len(rref(proj)[1]) if proj else 0
    return ext0, ext1


def ext_dimensions(E, F, trunc=None, check=True):
    """(dim Ext^0, dim Ext^1) of E by F, from the kernel and cokernel of P_E on F."""
    margin = 2 * (E.rank + F.rank) + 4
    span = math.ceil(max(E.lambdas + F.lambdas) - min(E.lambdas + F.lambdas))
    N = trunc if trunc is not None else span + int(sum(E.ps) + sum(F.ps)) + margin + 2 * (E.rank + F.rank)
    first = _ext_once(E, F, N, margin)
    stable = True
    if check:
        second = _ext_once(E, F, N + 16, margin)
        stable = first == second
    return ExtResult(first[0], first[1], N, stable)


@dataclass(frozen=True)
class ExtResult:
    ext0: int
    ext1: int
    trunc: int
    stabilized: bool

    def __iter__(self):
        return iter((self.ext0, self.ext1))


# -- property U ------------------------------------------------------------------

def property_u(pres, invariant=None):
    """Uniqueness of the canonical form, by the known implications; UNKNOWN otherwise."""
    k = pres.rank
    if k <= 2:
        return Decision(True, None, None, None, True, {"rule": "rank at most 2"})
    if invariant if invariant is not None else is_invariant(pres):
        return Decision(True, None, None, None, True, {"rule": "invariant"})
    Q1 = quotient(pres, 1)
    if is_invariant(Q1):
        return Decision(False, None, None, None, True, {"rule": "E/F_1 invariant, E not"})
    if k == 3:
        return Decision(int(pres.ps[1]) == 0, None, None, None, True, {"rule": "rank 3: p_2 = 0"})
    u_q = property_u(Q1)
    if u_q.decision is True and end_dimension(Q1) == 1:
        return Decision(True, None, None, None, True, {"rule": "E/F_1 has U and trivial endomorphisms"})
    return Decision(UNKNOWN, None, None, None, True, {"rule": "outside the decidable cases"})
