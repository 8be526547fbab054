"""Theme presentations in standard form and the operations built on them.

A presentation stores lambda_1..lambda_k and series S_1..S_{k-1}.  It
stands for the free C[[b]]-module with basis e_1..e_k and

    (a - lambda_1 b) e_1 = 0
    (a - lambda_{j+1} b) e_{j+1} = S_j e_j        (1 <= j < k)

so that e_k is annihilated by
(a - l_1 b) S_1^-1 (a - l_2 b) ... S_{k-1}^-1 (a - l_k b).
Module elements are plain lists [W_1, ..., W_k] of BSeries.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple

from .coeff_core import BSeries, Q, series_inverse, series_mul_sharp
from .errors import (
    DeltaTooSmall,
    InvalidPresentation,
    NotATheme,
    PrecisionExhausted,
    ShiftTooNegative,
    WrongRank,
)
from ._lattice import nullspace, solve_q
from .op_algebra import OpPoly, StandardWord
from .xi_space import (
    GeneratedModule,
    XiElement,
    generate_module,
    solve_shift,
    xi_apply_shifted,
)

__all__ = [
    "ThemePresentation",
    "FundamentalInvariants",
    "VSpace",
    "validate",
    "from_generator",
    "embed_in_xi",
    "embed_chain",
    "bernstein_element",
    "bernstein_from_module",
    "bernstein_roots",
    "vspace",
    "decompose_against",
    "canonical_form",
    "restandardize",
    "quotient",
    "submodule",
    "dual_twist",
    "tensor_rank1",
    "rank2_parameter",
    "default_trunc",
    "act_a",
    "apply_shift",
    "apply_word",
    "apply_op",
    "lambda_class",
]


def lambda_class(x):
    """Representative of x + Z in ]0, 1]."""
    x = Q(x)
    return x - math.ceil(x) + 1


@dataclass(frozen=True)
class FundamentalInvariants:
    lambda1: Fraction
    ps: Tuple[int, ...]

    @property
    def rank(self):
        return len(self.ps) + 1

    def lambdas(self):
        out = [Q(self.lambda1)]
        for p in self.ps:
            out.append(out[-1] + p - 1)
        return tuple(out)


@dataclass(frozen=True)
class ThemePresentation:
    lambdas: Tuple[Fraction, ...]
    S: Tuple[BSeries, ...]
    exact: bool = True  # S are polynomials, so zero-padding is harmless

    def __post_init__(self):
        object.__setattr__(self, "lambdas", tuple(Q(x) for x in self.lambdas))
        object.__setattr__(self, "S", tuple(self.S))
        if len(self.S) != len(self.lambdas) - 1:
            raise InvalidPresentation("a rank k presentation needs k-1 connecting series")

    @classmethod
    def from_invariants(cls, lambda1, ps, S, exact=True):
        inv = FundamentalInvariants(Q(lambda1), tuple(ps))
        return cls(inv.lambdas(), tuple(S), exact)

    @property
    def rank(self):
        return len(self.lambdas)

    @property
    def lambda1(self):
        return self.lambdas[0]

    @property
    def ps(self):
        return tuple(self.lambdas[j + 1] - self.lambdas[j] + 1 for j in range(self.rank - 1))

    @property
    def invariants(self):
        return FundamentalInvariants(self.lambda1, tuple(int(p) for p in self.ps))

    @property
    def lam(self):
        return lambda_class(self.lambda1)

    @property
    def trunc(self):
        return min((s.trunc for s in self.S), default=None)

    def with_trunc(self, N):
        if self.rank == 1:
            return self
        if self.exact:
            return ThemePresentation(self.lambdas, tuple(s.padded(N) for s in self.S), True)
        if N > self.trunc:
            raise PrecisionExhausted(f"presentation is only known through b^{self.trunc}")
        return ThemePresentation(self.lambdas, tuple(s.truncate(N) for s in self.S), False)

    def word(self):
        return StandardWord(self.lambdas, self.S)

    def same_as(self, other, through=None):
        """Equal invariants and S-series agreeing through the common trunc."""
        if self.lambdas != other.lambdas:
            return False
        return all(x.agrees(y, through) for x, y in zip(self.S, other.S))

    def to_json(self):
        def coeffs(s):
            d = s.degree()
            return [_rat(s[n]) for n in range(max(d, 0) + 1)]

        return {
            "lambda1": _rat(self.lambda1),
            "p": [int(p) for p in self.ps],
            "S": [coeffs(s) for s in self.S],
            "trunc": self.trunc if self.trunc is not None else 0,
        }

    @classmethod
    def from_json(cls, data, trunc=None):
        N = trunc if trunc is not None else int(data.get("trunc", 32))
        ps = [int(p) for p in data.get("p", [])]
        S = []
        for row in data.get("S", []):
            cs = [Fraction(str(c)) for c in row]
            if len(cs) > N + 1:
                N = len(cs) - 1
            S.append(cs)
        S = [BSeries(cs, N) for cs in S]
        return cls.from_invariants(Fraction(str(data["lambda1"])), ps, S)

    def fingerprint(self):
        """Stable text key: invariants plus the S coefficients through trunc."""
        parts = [",".join(_rat(x) for x in self.lambdas)]
        for s in self.S:
            parts.append(",".join(_rat(c) for c in s.coeffs[: s.degree() + 1]))
        return "|".join(parts)


def _rat(x):
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def default_trunc(*press):
    """Span of the lambdas plus the gaps plus twice the rank, plus a margin of 8."""
    lams = [l for p in press for l in p.lambdas]
    span = math.ceil(max(lams) - min(lams))
    return span + sum(int(x) for p in press for x in p.ps) + 2 * sum(p.rank for p in press) + 8


# -- module action on coordinates -------------------------------------------

def _zero_vec(k, t):
    return [BSeries.zero(t) for _ in range(k)]


def act_a(pres, v):
    out = []
    k = pres.rank
    for i in range(k):
        w = v[i]
        r = w.derivative().shift(2) + (w * pres.lambdas[i]).shift(1)
        if i + 1 < k:
            r = r + pres.S[i] * v[i + 1]
        out.append(r)
    return out


def apply_shift(pres, v, mu):
    """(a - mu b) v."""
    av = act_a(pres, v)
    mu = Q(mu)
    return [x - (w * mu).shift(1) for x, w in zip(av, v)]


def apply_word(pres, word, v):
    """Apply a factored word right to left."""
    cur = list(v)
    for idx in range(word.rank - 1, -1, -1):
        cur = apply_shift(pres, cur, word.lambdas[idx])
        if idx > 0:
            inv = series_inverse(word.S[idx - 1])
            cur = [inv * x for x in cur]
    return cur


def apply_op(pres, x, v):
    acc = None
    cur = list(v)
    for j, c in enumerate(x.coeffs):
        if j > 0:
            cur = act_a(pres, cur)
        term = [c * w for w in cur]
        acc = term if acc is None else [p + q for p, q in zip(acc, term)]
    return acc


# -- validation --------------------------------------------------------------

def validate(pres):
    """List of violated constraints; empty when the presentation is valid."""
    diags = []
    k = pres.rank
    for j, p in enumerate(pres.ps, start=1):
        if p.denominator != 1 or p < 0:
            diags.append(f"p_{j} = {p} is not a natural integer")
    for j, lam in enumerate(pres.lambdas, start=1):
        if not lam > k - j:
            diags.append(f"lambda_{j} = {lam} does not exceed {k - j}")
    for j, s in enumerate(pres.S, start=1):
        if s[0] != 1:
            diags.append(f"S_{j}(0) = {s[0]} differs from 1")
        p = pres.ps[j - 1]
        if p.denominator == 1 and p >= 0:
            if p > s.trunc:
                diags.append(f"S_{j} is not known through b^{p}")
            elif s[int(p)] == 0:
                diags.append(f"coefficient of b^{p} in S_{j} vanishes")
    return diags


def _require_valid(pres):
    d = validate(pres)
    if d:
        raise InvalidPresentation("; ".join(d))


# -- passage to and from Xi ---------------------------------------------------

def embed_chain(pres, trunc=None):
    """Elements phi_1..phi_k of Xi_lam realising the standard basis."""
    _require_valid(pres)
    N = trunc if trunc is not None else max(default_trunc(pres), pres.trunc or 0)
    pres = pres.with_trunc(N) if pres.rank > 1 else pres
    lam = pres.lam
    v1 = int(pres.lambdas[0] - lam)
    chain = [XiElement.basis(lam, 0, N, coeff=BSeries.monomial(v1, N))]
    for j in range(1, pres.rank):
        q = int(pres.lambdas[j] - lam)
        theta = chain[-1].scale(pres.S[j - 1])
        chain.append(solve_shift(j - 1, q, theta))
    return chain


def embed_in_xi(pres, trunc=None):
    return embed_chain(pres, trunc)[-1]


def _scale_sharp(x, s):
    # components with high valuation keep more of their known coefficients
    return XiElement(x.lam, [series_mul_sharp(s, c) for c in x.comps])


@dataclass(frozen=True)
class FromGenerator:
    presentation: ThemePresentation
    chain: Tuple[XiElement, ...]  # standard basis images x_1..x_k in Xi
    unit: BSeries  # x_k = unit * generator


def from_generator(M, with_chain=False):
    """Standard form of the theme generated by M.generator (or an XiElement)."""
    phi = M.generator if isinstance(M, GeneratedModule) else M
    d = phi.log_degree()
    if d < 0:
        raise NotATheme("zero generator")
    lam = phi.lam
    top = phi.comps[d]
    v = top.valuation()
    if v is None:
        raise PrecisionExhausted("top Log coefficient vanishes through trunc")
    u = top.divide_b(v)
    unit = series_inverse(u) * u[0]
    x = _scale_sharp(phi.with_N(d), unit)
    chain = [x]
    lambdas = [lam + v]
    S = []
    for i in range(d, 0, -1):
        theta = xi_apply_shifted(chain[0], lambdas[0])
        if theta.log_degree() != i - 1:
            raise NotATheme("Log-degree did not drop by exactly one")
        top = theta.comps[i - 1]
        v2 = top.valuation()
        if v2 is None:
            raise PrecisionExhausted("connecting coefficient vanishes through trunc")
        w = top.divide_b(v2)
        s = w * (1 / w[0])
        xs = _scale_sharp(theta, series_inverse(s)).with_N(i - 1)
        chain.insert(0, xs)
        lambdas.insert(0, lam + v2)
        S.insert(0, s)
    t = min([s.trunc for s in S], default=phi.trunc)
    pres = ThemePresentation(tuple(lambdas), tuple(s.truncate(t) for s in S), exact=False)
    diags = validate(pres)
    if diags:
        raise NotATheme("; ".join(diags))
    if with_chain:
        return FromGenerator(pres, tuple(chain), unit)
    return pres


# -- Bernstein data ------------------------------------------------------------

def bernstein_from_module(M):
    """Homogeneous element a^k - sum sigma_j b^(k-j) a^j of the generator's relation."""
    k = M.rank
    t = min(s.trunc for s in M.relation)
    coeffs = []
    for j in range(k):
        sig = M.relation[j][k - j] if k - j <= M.relation[j].trunc else None
        if sig is None:
            raise PrecisionExhausted("relation not known to the needed order")
        coeffs.append(BSeries.monomial(k - j, t, -sig))
    coeffs.append(BSeries.const(1, t))
    return OpPoly(coeffs)


def bernstein_element(pres, trunc=None):
    return bernstein_from_module(generate_module(embed_in_xi(pres, trunc)))


def rising_polynomial(element):
    """Coefficients (low to high) of B(x) = sum_j c_j x(x+1)...(x+j-1).

    c_j is the coefficient of b^(k-j) a^j; B(mu) b^k e_mu is the action of
    the homogeneous element on e_mu in a rank one module.
    """
    import sympy

    x = sympy.Symbol("x")
    k = element.degree
    poly = 0
    for j, c in enumerate(element.coeffs):
        cj = c[k - j] if k - j <= c.trunc else 0
        if cj:
            term = sympy.Rational(cj.numerator, cj.denominator)
            for i in range(j):
                term = term * (x + i)
            poly += term
    return sympy.Poly(poly, x, domain="QQ")


def roots_of_element(element):
    P = rising_polynomial(element)
    roots = []
    _, factors = P.factor_list()
    for f, mult in factors:
        if f.degree() == 1:
            a, b = f.all_coeffs()
            r = -b / a
            roots += [Fraction(int(r.p), int(r.q))] * mult
        else:
            raise NotATheme(f"non-rational Bernstein factor {f.as_expr()}")
    return sorted(roots)


def bernstein_roots(pres, trunc=None):
    """Roots of B(x); the Bernstein polynomial (-1)^k B(-x) has their negatives."""
    return roots_of_element(bernstein_element(pres, trunc))


# -- V spaces and canonical forms ---------------------------------------------

@dataclass(frozen=True)
class VSpace:
    j: int
    exponents: Tuple[int, ...]
    q: Optional[int]


def vspace(inv, j):
    ps = [int(p) for p in (inv.ps if hasattr(inv, "ps") else inv)]
    k = len(ps) + 1
    if not 1 <= j <= k - 1:
        raise ValueError("V_j is defined for 1 <= j <= k-1")
    base = list(range(k - j))
    tail = ps[j - 1:]
    if sum(tail) < k - j:
        return VSpace(j, tuple(base), None)
    q = 0
    for p in tail:
        q += p
        if q >= k - j:
            break
    exps = tuple(sorted(set(base) | {q}))
    return VSpace(j, exps, q)


def _rank1_shift(lam_j, Z, mu):
    return Z.derivative().shift(2) + (Z * (Q(lam_j) - Q(mu))).shift(1)


def _apply_tail_rank1(pres, j, Z):
    """P_j = (a - l_{j+1} b) S_{j+1}^-1 ... (a - l_k b) acting on E_{lambda_j}."""
    lam_j = pres.lambdas[j - 1]
    k = pres.rank
    cur = Z
    for idx in range(k - 1, j - 1, -1):  # 0-based lambda index k-1 .. j
        cur = _rank1_shift(lam_j, cur, pres.lambdas[idx])
        if idx > j:
            cur = series_inverse(pres.S[idx - 1]) * cur
    return cur


def decompose_against(pres, j, T, trunc=None):
    """Split T e = S e + P_j (z e) in E_{lambda_j} with S supported on V_j.

    Returns (S, z).  The split is unique; uniqueness through the working
    truncation is checked and PrecisionExhausted raised otherwise.
    """
    k = pres.rank
    N = trunc if trunc is not None else T.trunc
    T = T.truncate(min(N, T.trunc))
    N = T.trunc
    d = k - j
    V = vspace(pres.ps, j)
    nz = N - d
    if nz < 0:
        raise PrecisionExhausted("truncation smaller than the number of factors")
    cols = []
    for n in range(nz + 1):
        img = _apply_tail_rank1(pres, j, BSeries.monomial(n, N))
        cols.append(img)
    ncols = nz + 1 + len(V.exponents)
    rows = []
    for deg in range(N + 1):
        row = {}
        for n, img in enumerate(cols):
            if deg <= img.trunc and img[deg]:
                row[n] = img[deg]
        for i, e in enumerate(V.exponents):
            if e == deg:
                row[nz + 1 + i] = Fraction(1)
        rows.append(row)
    rhs = [T[deg] for deg in range(N + 1)]
    sol = solve_q(rows, rhs, ncols)
    if sol is None:
        raise PrecisionExhausted("no split found through trunc")
    for vec in nullspace(rows, ncols):
        if any(vec[nz + 1 + i] for i in range(len(V.exponents))):
            raise PrecisionExhausted("V-component of the split is not determined through trunc")
    S = BSeries.from_dict({e: sol[nz + 1 + i] for i, e in enumerate(V.exponents)}, N)
    z = BSeries(sol[: nz + 1], nz)
    return S, z


@dataclass(frozen=True)
class Restandardized:
    presentation: ThemePresentation
    chain: Tuple[list, ...]  # x_1..x_k in the old basis


def restandardize(pres, x):
    """Standard form attached to a generator x = c e_k + (terms in F_{k-1}).

    The e_k coordinate of x must be a nonzero constant.
    """
    k = pres.rank
    top = x[k - 1]
    if top[0] == 0 or any(top[n] for n in range(1, top.trunc + 1)):
        raise NotATheme("the e_k coordinate of a standard generator must be a nonzero constant")
    chain = [list(x)]
    S = []
    for i in range(k - 1, 0, -1):  # produce x_i from x_{i+1}
        y = apply_shift(pres, chain[0], pres.lambdas[i])
        for m in range(i, k):
            if not y[m].is_zero():
                raise NotATheme("image left the expected filtration step")
        T = y[i - 1]
        c = T[0]
        if c == 0:
            raise NotATheme("connecting series has zero constant term")
        s = T * (1 / c)
        xi = [series_inverse(s) * w for w in y]
        chain.insert(0, xi)
        S.insert(0, s)
    t = min([s.trunc for s in S], default=None)
    new = ThemePresentation(pres.lambdas, tuple(s.truncate(t) for s in S), exact=False)
    return Restandardized(new, tuple(chain))


def canonical_form(pres, trunc=None, with_generator=False):
    """Canonical form by the descending induction: each S_j pushed into V_j."""
    _require_valid(pres)
    k = pres.rank
    if k == 1:
        return (pres, [BSeries.const(1, 0)]) if with_generator else pres
    N = trunc if trunc is not None else max(default_trunc(pres), pres.trunc)
    pres = pres.with_trunc(N)
    x = _zero_vec(k, N)
    x[k - 1] = BSeries.const(1, N)
    for j in range(k - 1, 0, -1):
        cur = restandardize(pres, x)
        T = cur.presentation.S[j - 1]
        S_new, z = decompose_against(cur.presentation, j, T)
        xj = cur.chain[j - 1]
        corr = [z * w for w in xj]
        x = [a - b for a, b in zip(x, corr)]
    final = restandardize(pres, x).presentation
    S_out = []
    for j, s in enumerate(final.S, start=1):
        V = vspace(final.ps, j)
        for n in range(s.trunc + 1):
            if n not in V.exponents and s[n] != 0:
                raise PrecisionExhausted(f"S_{j} has a term b^{n} outside V_{j}")
        S_out.append(BSeries.from_dict({e: s[e] for e in V.exponents if e <= s.trunc}, N))
    out = ThemePresentation(pres.lambdas, tuple(S_out), exact=True)
    if with_generator:
        return out, x
    return out


# -- sub, quotient, duality, twist ---------------------------------------------

def submodule(pres, j):
    """F_j: invariants lambda_1..lambda_j, series S_1..S_{j-1}."""
    if not 0 <= j <= pres.rank:
        raise ValueError("index out of range")
    if j == 0:
        return None
    return ThemePresentation(pres.lambdas[:j], pres.S[: j - 1], pres.exact)


def quotient(pres, j):
    """E/F_j: invariants lambda_{j+1}..lambda_k, series S_{j+1}..S_{k-1}."""
    if not 0 <= j <= pres.rank:
        raise ValueError("index out of range")
    if j == pres.rank:
        return None
    return ThemePresentation(pres.lambdas[j:], pres.S[j:], pres.exact)


def dual_twist(pres, delta):
    """E* tensor E_delta on the reversed dual basis, S-series reversed."""
    delta = Q(delta)
    k = pres.rank
    if not delta > pres.lambdas[-1] + k - 1:
        raise DeltaTooSmall(f"delta must exceed {pres.lambdas[-1] + k - 1}")
    lams = tuple(delta - l for l in reversed(pres.lambdas))
    return ThemePresentation(lams, tuple(reversed(pres.S)), pres.exact)


def tensor_rank1(pres, delta):
    delta = Q(delta)
    if not pres.lambdas[0] + delta > pres.rank - 1:
        raise ShiftTooNegative(f"lambda_1 + delta must exceed {pres.rank - 1}")
    return ThemePresentation(tuple(l + delta for l in pres.lambdas), pres.S, pres.exact)


def rank2_parameter(pres):
    if pres.rank != 2:
        raise WrongRank("the parameter is defined for rank 2 themes")
    p = int(pres.ps[0])
    if p < 1:
        raise WrongRank("the parameter needs p_1 >= 1")
    return pres.S[0][p]
