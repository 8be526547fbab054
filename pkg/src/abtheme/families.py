"""Parametric presentations, grid sweeps and rank-2 normal forms.

Parameters are sympy symbols; every numerical question is answered at
rational sample points after exact substitution.
"""

import hashlib
import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, prod
from typing import Any, Dict, List, Tuple

import sympy

from .coeff_core import BSeries, Q, solve_euler
from .errors import InvalidPresentation, RankJump, WrongRank
from ._lattice import nullspace, rref
from .hom_engine import end_dimension, find_injection, is_invariant, property_u
from .theme_core import (
    ThemePresentation,
    bernstein_from_module,
    canonical_form,
    from_generator,
    rank2_parameter,
    roots_of_element,
    vspace,
)
from .xi_space import XiElement, generate_module, krylov_rank, xi_apply_a, xi_apply_shifted

__all__ = [
    "ParamPresentation",
    "ParamXi",
    "SweepReport",
    "canonical_family",
    "rank3_family",
    "rank4_family",
    "rank2_family",
    "sweep_invariance",
    "rank_stratify",
    "rank2_normal_form",
    "normal_form_constant",
    "to_fraction",
]


def to_fraction(expr):
    e = sympy.nsimplify(expr) if not isinstance(expr, (int, Fraction)) else expr
    if isinstance(e, (int, Fraction)):
        return Fraction(e)
    e = sympy.Rational(e) if e.is_Rational else e
    if not getattr(e, "is_Rational", False):
        raise InvalidPresentation(f"coefficient {expr} is not rational at this point")
    return Fraction(int(e.p), int(e.q))


def _subs(expr, point):
    if isinstance(expr, (int, Fraction)):
        return Fraction(expr)
    return to_fraction(sympy.sympify(expr).subs(point))


def _sym_point(point):
    return {sympy.Symbol(str(k)): sympy.Rational(str(Q(v))) for k, v in point.items()}


@dataclass(frozen=True)
class ParamPresentation:
    lambda1: Fraction
    ps: Tuple[int, ...]
    S: Tuple[Tuple[Any, ...], ...]  # sympy coefficients of b^0 .. b^d
    params: Tuple[str, ...]
    constraints: Tuple[Any, ...] = ()  # expressions that must not vanish
    trunc: int = 32

    @property
    def rank(self):
        return len(self.ps) + 1

    def admissible(self, point):
        sp = _sym_point(point)
        return all(sympy.sympify(c).subs(sp) != 0 for c in self.constraints)

    def instantiate(self, point):
        sp = _sym_point(point)
        S = [BSeries([_subs(c, sp) for c in row], max(self.trunc, len(row) - 1)) for row in self.S]
        return ThemePresentation.from_invariants(self.lambda1, self.ps, S)


@dataclass(frozen=True)
class ParamXi:
    """XiElement whose b-coefficients are sympy expressions in the parameters."""

    lam: Fraction
    comps: Tuple[Tuple[Any, ...], ...]
    params: Tuple[str, ...]
    trunc: int

    def instantiate(self, point):
        sp = _sym_point(point)
        comps = [BSeries([_subs(c, sp) for c in row], self.trunc) for row in self.comps]
        return XiElement(self.lam, comps)


def canonical_family(inv, trunc=32):
    """Free V_j coefficients; the b^(p_j) coefficient must not vanish."""
    k = inv.rank
    if not Q(inv.lambda1) > k - 1:
        raise InvalidPresentation(f"lambda_1 must exceed {k - 1}")
    S, params, cons = [], [], []
    for j in range(1, k):
        V = vspace(inv.ps, j)
        top = max(V.exponents)
        row = [sympy.Integer(0)] * (top + 1)
        row[0] = sympy.Integer(1)
        for e in V.exponents:
            if e == 0:
                continue
            name = f"s{j}_{e}"
            params.append(name)
            row[e] = sympy.Symbol(name)
        p = inv.ps[j - 1]
        if p > 0:
            cons.append(row[p])
        S.append(tuple(row))
    return ParamPresentation(Q(inv.lambda1), tuple(inv.ps), tuple(S), tuple(params), tuple(cons), trunc)


def rank2_family(lambda1, p, trunc=32):
    a = sympy.Symbol("alpha")
    if p == 0:
        return ParamPresentation(Q(lambda1), (0,), ((sympy.Integer(1),),), (), (), trunc)
    row = [sympy.Integer(1)] + [sympy.Integer(0)] * (p - 1) + [a]
    return ParamPresentation(Q(lambda1), (p,), (tuple(row),), ("alpha",), (a,), trunc)


def rank3_family(lambda1=3, trunc=32):
    """S_2 = 1 + alpha b, S_1 = 1 + beta b + gamma b^2 with p = (1, 1)."""
    al, be, ga = sympy.symbols("alpha beta gamma")
    S1 = (sympy.Integer(1), be, ga)
    S2 = (sympy.Integer(1), al)
    return ParamPresentation(Q(lambda1), (1, 1), (S1, S2), ("alpha", "beta", "gamma"), (al, be), trunc)


def rank4_family(lambda1=Fraction(7, 2), trunc=32):
    """p = (3, 2, 2): S_3 = 1 + alpha b^2, S_2 = 1 + beta b + gamma b^2,
    S_1 = 1 + delta b + epsilon b^2 + theta b^3."""
    al, be, ga, de, ep, th = sympy.symbols("alpha beta gamma delta epsilon theta")
    one = sympy.Integer(1)
    S1 = (one, de, ep, th)
    S2 = (one, be, ga)
    S3 = (one, sympy.Integer(0), al)
    names = ("alpha", "beta", "gamma", "delta", "epsilon", "theta")
    return ParamPresentation(Q(lambda1), (3, 2, 2), (S1, S2, S3), names, (al, ga, th), trunc)


# -- sweeps ------------------------------------------------------------------

@dataclass
class SweepReport:
    params: Tuple[str, ...]
    grid: Dict[str, List[str]]
    records: List[Dict[str, Any]]
    locus: Dict[str, Any]

    def to_json(self):
        return {"params": list(self.params), "grid": self.grid, "locus": self.locus, "points": len(self.records)}


def _rat(x):
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _hash(pres):
    return hashlib.sha1(pres.fingerprint().encode()).hexdigest()[:12]


def _subquotient_parameters(pres):
    out = []
    for j, p in enumerate(pres.ps):
        out.append(pres.S[j][int(p)] if p >= 1 else None)
    return tuple(out)


def classify_point(pres, invariant=None):
    inv = is_invariant(pres) if invariant is None else invariant
    u = property_u(pres, invariant=bool(inv))
    return {
        "invariant": bool(inv),
        "end_dimension": end_dimension(pres),
        "property_u": u.decision,
        "canonical_hash": _hash(canonical_form(pres)),
        "stabilized": inv.stabilized,
    }


def _integer_relation(vec):
    den = 1
    for x in vec:
        den = den * x.denominator // gcd(den, x.denominator)
    ints = [int(x * den) for x in vec]
    g = 0
    for x in ints:
        g = gcd(g, abs(x))
    ints = [x // g for x in ints] if g else ints
    lead = next((x for x in ints if x), 1)
    return [-x for x in ints] if lead < 0 else ints


def _format_relation(names, ints):
    terms = []
    for n, c in zip(names, ints[:-1]):
        if c:
            terms.append((c, n))
    lhs = ""
    for i, (c, n) in enumerate(terms):
        mag = "" if abs(c) == 1 else f"{abs(c)}*"
        if i == 0:
            lhs = ("-" if c < 0 else "") + mag + n
        else:
            lhs += (" - " if c < 0 else " + ") + mag + n
    const = ints[-1]
    rhs = -const
    return f"{lhs or '0'} = {rhs}"


def _satisfies(rel, point_vals):
    return sum(c * v for c, v in zip(rel[:-1], point_vals)) + rel[-1] == 0


def fit_locus(names, invariant_points):
    """Affine relations (integer coefficients) satisfied by every invariant point."""
    rows = [{i: v for i, v in enumerate(list(p) + [Fraction(1)]) if v} for p in invariant_points]
    basis = nullspace(rows, len(names) + 1)
    return [_integer_relation(v) for v in basis]


def sweep_invariance(fam, grid, seed=0, verify=4, classify=True):
    """Classify every admissible grid point and fit the invariance locus."""
    names = fam.params
    values = [[Q(v) for v in grid[n]] for n in names]
    records = []
    inv_points, all_points = [], []
    reps = []  # (bucket key, pres, class id)
    for combo in itertools.product(*values):
        point = dict(zip(names, combo))
        rec = {"point": {n: _rat(v) for n, v in point.items()}}
        if not fam.admissible(point):
            rec["admissible"] = False
            records.append(rec)
            continue
        pres = fam.instantiate(point)
        inv = is_invariant(pres)
        rec.update(classify_point(pres, inv) if classify else {"invariant": bool(inv), "stabilized": inv.stabilized})
        if classify:
            key = (pres.lambdas, _subquotient_parameters(pres), rec["invariant"], rec["end_dimension"])
            cls = None
            for rkey, rp, cid in reps:
                if rkey == key and find_injection(pres, rp):
                    cls = cid
                    break
            if cls is None:
                cls = len(reps)
                reps.append((key, pres, cls))
            rec["iso_class"] = cls
        records.append(rec)
        all_points.append((combo, rec["invariant"]))
        if rec["invariant"]:
            inv_points.append(combo)
    varying = [i for i, vs in enumerate(values) if len(set(vs)) > 1]
    fixed = {names[i]: values[i][0] for i in range(len(names)) if i not in varying}
    pick = lambda pt: tuple(pt[i] for i in varying)
    locus = describe_locus(
        fam,
        tuple(names[i] for i in varying),
        [(pick(p), f) for p, f in all_points],
        [pick(p) for p in inv_points],
        seed,
        verify,
        fixed,
    )
    return SweepReport(names, {n: [_rat(v) for v in vs] for n, vs in zip(names, values)}, records, locus)


def describe_locus(fam, names, all_points, inv_points, seed=0, verify=4, fixed=None):
    if not inv_points:
        return {"relations": [], "description": "no invariant point on the grid", "exact_on_grid": True, "claimed": False}
    rels = fit_locus(names, inv_points)
    exact = all(all(_satisfies(r, p) for r in rels) == flag for p, flag in all_points)
    text = [_format_relation(names, r) for r in rels]
    out = {
        "relations": text,
        "description": " and ".join(text) if text else "every admissible grid point",
        "exact_on_grid": exact,
    }
    if fixed:
        out["fixed"] = {n: _rat(v) for n, v in fixed.items()}
    ok_on, ok_off, tried = _reverify(fam, names, rels, seed, verify, fixed or {})
    out["offgrid_checks"] = tried
    out["offgrid_on_locus_ok"] = ok_on
    out["offgrid_off_locus_ok"] = ok_off
    out["claimed"] = exact and ok_on and ok_off
    return out


def _random_rational(rng):
    return Fraction(rng.randint(-40, 40), rng.randint(1, 7))


def _reverify(fam, names, rels, seed, count, fixed):
    """Random admissible points on and off the fitted locus, re-classified."""
    rng = random.Random(seed)
    ok_on = ok_off = True
    tried = 0
    for _ in range(count):
        # a point on the locus: solve the relations for their pivot variables
        for _attempt in range(20):
            pt = {n: _random_rational(rng) for n in names}
            pt = _project_on(names, rels, pt)
            if pt is not None:
                pt = {**fixed, **pt}
            if pt is not None and fam.admissible(pt):
                break
        else:
            continue
        tried += 1
        if not is_invariant(fam.instantiate(pt)):
            ok_on = False
        if rels:
            for _attempt in range(20):
                off = {n: _random_rational(rng) for n in names}
                vals = [off[n] for n in names]
                off = {**fixed, **off}
                if fam.admissible(off) and not all(_satisfies(r, vals) for r in rels):
                    break
            else:
                continue
            if is_invariant(fam.instantiate(off)):
                ok_off = False
    return ok_on, ok_off, tried


def _project_on(names, rels, pt):
    """Move pt onto the affine subspace cut out by rels (pivot variables solved)."""
    if not rels:
        return pt
    n = len(names)
    rows = []
    for r in rels:
        row = {i: Fraction(c) for i, c in enumerate(r[:-1]) if c}
        if r[-1]:
            row[n] = Fraction(-r[-1])
        rows.append(row)
    red, piv = rref(rows)
    if n in piv:
        return None
    vals = [pt[m] for m in names]
    for r, p in zip(red, piv):
        acc = r.get(n, Fraction(0))
        for c, v in r.items():
            if c not in (p, n):
                acc -= v * vals[c]
        vals[p] = acc
    return dict(zip(names, vals))


# -- rank stratification -------------------------------------------------------

def rank_stratify(phi, points):
    """Rank of A.phi(x) and its Bernstein element at each sample point."""
    out = []
    for point in points:
        x = phi.instantiate(point)
        rec = {"point": {n: _rat(Q(v)) for n, v in point.items()}}
        rank = krylov_rank({x.lam: x})
        rec["rank"] = rank
        try:
            M = generate_module(x)
            el = bernstein_from_module(M)
            rec["bernstein_element"] = str(el)
            rec["bernstein_roots"] = [_rat(r) for r in roots_of_element(el)]
        except Exception as exc:  # recorded, the sweep goes on
            rec["error"] = getattr(exc, "code", type(exc).__name__)
        out.append(rec)
    strata = {}
    for rec in out:
        key = (rec.get("rank"), rec.get("bernstein_element"))
        strata.setdefault(key, []).append(rec["point"])
    return out, [{"rank": k[0], "bernstein_element": k[1], "points": v} for k, v in strata.items()]


# -- rank 2 normal form ----------------------------------------------------------

def normal_form_constant(lambda1, p):
    """c = -(1/p) (lambda1 - 1) lambda1 ... (lambda1 + p - 2)."""
    lambda1 = Q(lambda1)
    return -prod((lambda1 - 1 + i for i in range(p)), start=Fraction(1)) / p


def s_power(lam, r, j, trunc, coeff=1):
    """s^r (Log s)^j / j!  as  a^m e_{lam,j}  with  r = lam - 1 + m."""
    m = Q(r) - (lam - 1)
    if m.denominator != 1 or m < 0:
        raise ValueError(f"s^{r} is not a natural a-power of e_(lam,{j})")
    x = XiElement.basis(lam, j, trunc, N=max(j, 1)).scale(Q(coeff))
    for _ in range(int(m)):
        x = xi_apply_a(x)
    return x


def rank2_normal_form(phi, points):
    """alpha(x) and the normal form alpha s^(l1+p-2) Log s + c s^(l1-2) per point."""
    out = []
    for point in points:
        x = phi.instantiate(point) if hasattr(phi, "instantiate") else phi
        if x.log_degree() != 1:
            raise RankJump(f"rank {x.log_degree() + 1} at {point}")
        fg = from_generator(x, with_chain=True)
        pres = fg.presentation
        p = int(pres.ps[0])
        if p < 1:
            raise WrongRank("the normal form needs p_1 >= 1")
        x1, x2 = fg.chain
        S = pres.S[0]
        alpha = S[p]
        tail = S - BSeries.from_dict({0: 1, p: alpha}, S.trunc)
        T = solve_euler(p - 1, tail.divide_b(1)).series
        psi = x2 - x1.scale(T)
        lhs = xi_apply_shifted(psi, pres.lambdas[1])
        rhs = x1.scale(BSeries.from_dict({0: 1, p: alpha}, T.trunc))
        l1 = pres.lambdas[0]
        c = normal_form_constant(l1, p)
        t = x.trunc
        nf = s_power(x.lam, l1 + p - 2, 1, t, alpha) + s_power(x.lam, l1 - 2, 0, t, c)
        nf_pres = from_generator(nf)
        out.append({
            "point": {n: _rat(Q(v)) for n, v in point.items()} if point else {},
            "lambda1": _rat(l1),
            "p": p,
            "alpha": alpha,
            "c": c,
            "normal_form": f"{_rat(alpha)}*s^({_rat(l1 + p - 2)})*log(s) + ({_rat(c)})*s^({_rat(l1 - 2)})",
            "relation_holds": lhs.agrees(rhs),
            "normal_form_checked": nf_pres.lambdas == pres.lambdas and rank2_parameter(nf_pres) == alpha,
            "parameter_crosscheck": rank2_parameter(pres) == alpha,
        })
    return out
