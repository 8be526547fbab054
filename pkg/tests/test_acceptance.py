"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Every comparison is exact (rational arithmetic).  Random inputs come from
seeded generators so a failure is reproducible from the printed detail.
"""

import random
import time
from fractions import Fraction

import pytest

from abtheme._lattice import dvr_reduce
from abtheme.coeff_core import BSeries
from abtheme.families import rank2_family, rank3_family, rank4_family, rank_stratify, sweep_invariance
from abtheme.hom_engine import (
    end_dimension,
    ext_dimensions,
    find_injection,
    is_invariant,
    isomorphic,
)
from abtheme.op_algebra import OpPoly, linear_factor, op_divide_right, op_normalize_mul
from abtheme.parser import ParamXiText, parse_word
from abtheme.theme_core import (
    ThemePresentation,
    act_a,
    apply_word,
    bernstein_element,
    bernstein_roots,
    canonical_form,
    decompose_against,
    default_trunc,
    dual_twist,
    embed_chain,
    embed_in_xi,
    from_generator,
    quotient,
    rank2_parameter,
    restandardize,
    submodule,
    validate,
    vspace,
)
from abtheme.xi_space import filtration_member, generate_module
from oracles import homogeneous_kernel_roots, random_presentation, random_rational, random_series, rngs, same_action

F = Fraction


@pytest.fixture
def report(capsys):
    def _report(n, title, failures, started):
        status = "PASS" if not failures else "FAIL"
        line = f"criterion {n:>2} {status}  {title}  [{time.perf_counter() - started:.1f}s]"
        if failures:
            line += f"  first failure: {failures[0]}"
        with capsys.disabled():
            print("\n" + line)
        assert not failures, failures

    return _report


def p3(alpha, beta, gamma, lam=3):
    """E_{alpha,beta,gamma}: p = (1, 1), S_1 = 1 + beta b + gamma b^2, S_2 = 1 + alpha b."""
    return ThemePresentation.from_invariants(lam, [1, 1], [BSeries([1, beta, gamma], 2), BSeries([1, alpha], 1)])


def nonzero_rational(rng):
    x = F(0)
    while x == 0:
        x = random_rational(rng)
    return x


def generator_change(pres, rng, N):
    """A random generator c e_k + (element of F_{k-1}) and its standard form."""
    k = pres.rank
    Pn = pres.with_trunc(N)
    x = [random_series(rng, 3, N) for _ in range(k - 1)] + [BSeries.const(rng.choice([1, -2, 3, F(1, 2)]), N)]
    return restandardize(Pn, x).presentation


def same_lattice(xs, ys, through):
    """Do the Xi elements xs and ys span the same C[[b]]-lattice (compared through `through`)?"""
    N = max(x.log_degree() for x in xs + ys)

    def rows(zs):
        return [[c.truncate(through) for c in z.with_N(N).comps] for z in zs]

    rx, ry = rows(xs), rows(ys)
    order = list(range(N, -1, -1))
    red_x, red_y = dvr_reduce(rx, order), dvr_reduce(ry, order)
    return all(red_x.contains(r) for r in ry) and all(red_y.contains(r) for r in rx)


# 1 ----------------------------------------------------------------------------------

def test_criterion_01_algebra_kernel(report):
    t0 = time.perf_counter()
    failures = []
    T = 6
    rng = random.Random(101)

    def rand_op():
        return OpPoly([random_series(rng, rng.randint(0, 3), T) for _ in range(rng.randint(1, 3))])

    for i in range(500):
        x, y, z = rand_op(), rand_op(), rand_op()
        left = op_normalize_mul(op_normalize_mul(x, y), z)
        right = op_normalize_mul(x, op_normalize_mul(y, z))
        if left != right:
            failures.append(f"associativity, triple {i}")
            break
    a, b = OpPoly.a(T), OpPoly.b(T)
    comm = op_normalize_mul(a, b) - op_normalize_mul(b, a)
    if comm != op_normalize_mul(b, b):
        failures.append(f"a b - b a = {comm}")
    for i in range(100):
        x = rand_op()
        mu = random_rational(rng)
        q, r = op_divide_right(x, mu)
        back = op_normalize_mul(q, linear_factor(mu, T)) + OpPoly.series(r)
        if back.truncate(x.trunc) != x:
            failures.append(f"division by (a - {mu} b), sample {i}")
            break
    report(1, "algebra kernel: associativity x500, commutation, right division", failures, t0)


# 2 ----------------------------------------------------------------------------------

def test_criterion_02_rank2_classification(report):
    t0 = time.perf_counter()
    failures = []
    for i, rng in enumerate(rngs(50, 202)):
        lam1 = 1 + F(rng.randint(1, 12), rng.choice([2, 3, 4]))
        p = rng.randint(1, 4)
        alpha = nonzero_rational(rng)
        cs = [F(1)] + [random_rational(rng) for _ in range(p + 2)]
        cs[p] = alpha
        P = ThemePresentation.from_invariants(lam1, [p], [BSeries(cs, p + 2)])
        back = from_generator(embed_in_xi(P))
        if back.invariants != P.invariants:
            failures.append(f"sample {i}: invariants {back.invariants} != {P.invariants}")
        elif rank2_parameter(back) != alpha or rank2_parameter(canonical_form(P)) != alpha:
            failures.append(f"sample {i}: parameter {rank2_parameter(back)} != {alpha}")
    for lam1 in (F(3, 2), F(5, 2), 3, F(13, 3)):
        # p_1 = 0 is the parameter-free E_{l,l} = A / A (a - l b)(a - (l - 1) b)
        text = f"(a - {lam1} b)(a - {lam1 - 1} b)"
        w = parse_word(text, 16)
        P = ThemePresentation(w.lambdas, w.S)
        ref = rank2_family(lam1, 0).instantiate({})
        back = from_generator(embed_in_xi(ref))
        if not (P.same_as(ref) and back.same_as(ref.with_trunc(back.trunc))):
            failures.append(f"p_1 = 0, lambda_1 = {lam1}: presentation mismatch")
        if end_dimension(ref) != 1:
            failures.append(f"p_1 = 0, lambda_1 = {lam1}: end_dimension {end_dimension(ref)}")
    report(2, "rank-2 classification: 50 round trips, parameter recovered, p_1 = 0 case", failures, t0)


# 3 ----------------------------------------------------------------------------------

def test_criterion_03_canonical_form(report):
    t0 = time.perf_counter()
    failures = []
    for i, rng in enumerate(rngs(50, 303)):
        P = random_presentation(rng, kmax=4)
        if P.rank == 1:
            P = random_presentation(rng, k=2)
        C = canonical_form(P)
        k = C.rank
        for j, s in enumerate(C.S, start=1):
            V = vspace(C.ps, j)
            if any(s[n] for n in range(s.trunc + 1) if n not in V.exponents):
                failures.append(f"sample {i}: S_{j} = {s} leaves V_{j} = {V.exponents}")
        if canonical_form(C).fingerprint() != C.fingerprint():
            failures.append(f"sample {i}: canonical form not idempotent")
        N = default_trunc(C)
        Cn = C.with_trunc(N)
        for j in range(1, k):
            T = BSeries([1] + [random_rational(rng) for _ in range(N)], N)
            S, z = decompose_against(Cn, j, T)
            E_j = ThemePresentation((C.lambdas[j - 1],), ())
            word = quotient(Cn, j).word()
            (Pz,) = apply_word(E_j, word, [z])
            if not (S + Pz).agrees(T, N):
                failures.append(f"sample {i}, j = {j}: S + P_j z differs from T")
            if any(S[n] for n in range(S.trunc + 1) if n not in vspace(C.ps, j).exponents):
                failures.append(f"sample {i}, j = {j}: split S outside V_j")
    report(3, "canonical form: 50 samples in V_j, idempotent, T = S_j + P_j z", failures, t0)


# 4 ----------------------------------------------------------------------------------

def test_criterion_04_uniqueness(report):
    t0 = time.perf_counter()
    failures = []
    for i, rng in enumerate(rngs(25, 404)):
        k = rng.randint(2, 4)
        P = random_presentation(rng, k=k, pmin=k - 1, pmax=k)
        if not is_invariant(P):
            failures.append(f"sample {i}: p = {P.ps} with p_j >= k - 1 is not invariant")
        N0 = default_trunc(P)
        one = generator_change(P, rng, N0 + 24)
        two = generator_change(P, rng, N0 + 24)
        if one.same_as(two.with_trunc(one.trunc)):
            failures.append(f"sample {i}: generator changes did not move the presentation")
            continue
        outs = [canonical_form(Q, trunc=N0).fingerprint() for Q in (P, one, two)]
        if len(set(outs)) != 1:
            failures.append(f"sample {i} (k = {k}, p = {P.ps}): canonical forms differ")
    report(4, "uniqueness: 25 invariant themes, two generator changes, identical canonical form", failures, t0)


# 5 ----------------------------------------------------------------------------------

def test_criterion_05_invariance_loci(report):
    t0 = time.perf_counter()
    failures = []
    grid3 = {"alpha": [1, 2, 3, -1, F(1, 2)], "beta": [1, 2, 3, -1, F(1, 2)], "gamma": [0, 1, F(-5, 2)]}
    rep3 = sweep_invariance(rank3_family(), grid3, verify=3, classify=False)
    for rec in rep3.records:
        pt = {n: F(v) for n, v in rec["point"].items()}
        if rec["invariant"] != (pt["alpha"] == pt["beta"]):
            failures.append(f"rank 3 at {rec['point']}: invariant = {rec['invariant']}")
    if rep3.locus["description"] != "alpha - beta = 0" or not rep3.locus["claimed"]:
        failures.append(f"rank 3 locus: {rep3.locus['description']}")
    grid4 = {"alpha": [5, 10, -5, F(5, 3)], "beta": [2], "gamma": [3, 6, -3, 1], "delta": [1], "epsilon": [-1],
             "theta": [1, -2, F(1, 3), 4]}
    rep4 = sweep_invariance(rank4_family(), grid4, verify=3, classify=False)
    for rec in rep4.records:
        pt = {n: F(v) for n, v in rec["point"].items()}
        if rec["invariant"] != (3 * pt["alpha"] == 5 * pt["gamma"]):
            failures.append(f"rank 4 at {rec['point']}: invariant = {rec['invariant']}")
    if rep4.locus["description"] != "3*alpha - 5*gamma = 0" or not rep4.locus["claimed"]:
        failures.append(f"rank 4 locus: {rep4.locus['description']}")
    report(5, "invariance loci: alpha = beta on 5x5x3, 3 alpha = 5 gamma on 4x4x4", failures, t0)


# 6 ----------------------------------------------------------------------------------

def test_criterion_06_isomorphism_witnesses(report):
    t0 = time.perf_counter()
    failures = []
    for i, rng in enumerate(rngs(8, 606)):
        alpha, beta = nonzero_rational(rng), nonzero_rational(rng)
        if alpha == beta:
            beta = alpha + 1
        gamma, gamma2 = random_rational(rng), F(0) if i % 2 == 0 else random_rational(rng)
        A, B = p3(alpha, beta, gamma), p3(alpha, beta, gamma2)
        d = isomorphic(A, B)
        expected = (gamma - gamma2) / (alpha - beta)
        if d.decision is not True or F(d.witness["U"]) != expected:
            failures.append(f"({alpha}, {beta}, {gamma}) vs gamma' = {gamma2}: U = {d.witness}, want {expected}")
            continue
        N = d.trunc_used
        img = [s.padded(N) for s in d.payload.image]
        killed = apply_word(A.with_trunc(N), B.with_trunc(N).word(), img)
        if not all(c.truncate(N - 6).is_zero() for c in killed):
            failures.append(f"sample {i}: B's annihilator does not kill the witness")
    for i, rng in enumerate(rngs(6, 607)):
        alpha = nonzero_rational(rng)
        gamma = random_rational(rng)
        gamma2 = gamma + nonzero_rational(rng)
        d = isomorphic(p3(alpha, alpha, gamma), p3(alpha, alpha, gamma2))
        if d.decision is not False or not d.obstruction or "condition" not in d.obstruction:
            failures.append(f"E_(a,a,{gamma}) vs E_(a,a,{gamma2}): {d.to_json()}")
    report(6, "isomorphism: U = (gamma - gamma')/(alpha - beta) verified, diagonal obstructed", failures, t0)


# 7 ----------------------------------------------------------------------------------

def test_criterion_07_ext(report):
    t0 = time.perf_counter()
    failures = []
    for i, rng in enumerate(rngs(30, 707)):
        E = random_presentation(rng, kmax=3)
        Fp = random_presentation(rng, kmax=3)
        res = ext_dimensions(E, Fp)
        if res.ext1 - res.ext0 != E.rank * Fp.rank:
            failures.append(f"pair {i}: ({res.ext0}, {res.ext1}) for ranks {E.rank}, {Fp.rank}")
        if not res.stabilized:
            failures.append(f"pair {i}: dimensions moved at trunc + 16")
    cases = {((F(3, 2),), (F(5, 2),)): (0, 1), ((F(5, 2),), (F(3, 2),)): (1, 2)}
    for (lam, mu), want in cases.items():
        got = tuple(ext_dimensions(ThemePresentation(lam, ()), ThemePresentation(mu, ())))
        if got != want:
            failures.append(f"rank one {lam[0]} by {mu[0]}: {got} != {want}")
    report(7, "Ext: ext1 - ext0 = rank product on 30 pairs, rank-one cases (0,1) and (1,2)", failures, t0)


# 8 ----------------------------------------------------------------------------------

def dual_action_matches(P, D, delta, N):
    """Compare a on Hom(E, E_delta) with the a-action of the presentation D.

    (a phi)(x) = a phi(x) - phi(a x) on the dual basis phi_i, and f_j = (-1)^j phi_(k+1-j).
    """
    k = P.rank
    Pn, Dn = P.with_trunc(N), D.with_trunc(N)
    unit = lambda i: [BSeries.const(1 if m == i else 0, N) for m in range(k)]
    ae = [act_a(Pn, unit(j)) for j in range(k)]  # a e_j in the e-basis
    for j in range(k):
        i = k - 1 - j  # f_j is +-phi_i
        # coordinates of a phi_i on phi_m: delta b [m = i] - (coefficient of e_i in a e_m)
        a_phi = [BSeries.monomial(1, N, delta if m == i else 0) - ae[m][i] for m in range(k)]
        expect = [None] * k
        for m in range(k):
            jm = k - 1 - m
            expect[jm] = a_phi[m] * (1 if (jm - j) % 2 == 0 else -1)
        got = act_a(Dn, unit(j))
        if not all(g.agrees(e, N - 2) for g, e in zip(got, expect)):
            return False
    return True


def test_criterion_08_twisted_duality(report):
    t0 = time.perf_counter()
    failures = []
    for i, rng in enumerate(rngs(20, 808)):
        P = random_presentation(rng, kmax=3)
        k = P.rank
        delta = P.lambdas[-1] + k - 1 + F(rng.randint(1, 6), rng.choice([1, 2]))
        D = dual_twist(P, delta)
        if D.lambdas != tuple(delta - l for l in reversed(P.lambdas)):
            failures.append(f"sample {i}: invariants {D.lambdas}")
        if not dual_action_matches(P, D, delta, 12):
            failures.append(f"sample {i}: presentation does not match the dual a-action")
        DD = dual_twist(D, delta)
        if isomorphic(P, DD).decision is not True:
            failures.append(f"sample {i}: double twist not isomorphic")
        if is_invariant(P) and canonical_form(P).fingerprint() != canonical_form(DD).fingerprint():
            failures.append(f"sample {i}: double twist changes the canonical form")
    for i, rng in enumerate(rngs(10, 809)):
        p = rng.randint(1, 3)
        alpha = nonzero_rational(rng)
        P = rank2_family(F(rng.randint(3, 9), 2), p).instantiate({"alpha": alpha})
        D = dual_twist(P, P.lambdas[-1] + 1 + rng.randint(1, 4))
        if rank2_parameter(canonical_form(D)) != alpha:
            failures.append(f"rank 2 sample {i}: parameter {rank2_parameter(D)} != {alpha}")
    report(8, "twisted duality: invariants, dual action, double twist, rank-2 parameter", failures, t0)


# 9 ----------------------------------------------------------------------------------

def forced_non_invariant(P):
    ps = [int(p) for p in P.ps]
    k = P.rank
    return k >= 2 and (ps[-1] == 0 or (k >= 3 and ps[-1] == 1 and ps[-2] >= 2))


def test_criterion_09_structural_invariants(report):
    t0 = time.perf_counter()
    failures = []
    forced_hits = 0
    samples = [random_presentation(rng, kmax=4) for rng in rngs(100, 909)]
    # make sure the non-invariance cases are exercised
    samples += [random_presentation(rng, k=3, pmin=0, pmax=0) for rng in rngs(3, 910)]
    samples += [ThemePresentation.from_invariants(4, [2, 1], [BSeries([1, 1, 2], 2), BSeries([1, -1], 1)])]
    for i, P in enumerate(samples):
        k = P.rank
        if validate(P):
            failures.append(f"sample {i}: invalid {validate(P)}")
            continue
        if not all(P.lambdas[j] > k - 1 - j for j in range(k)):
            failures.append(f"sample {i}: lambda bound")
        chain = embed_chain(P)
        M = generate_module(chain[-1])
        for j in range(1, k + 1):
            basis, divisible = filtration_member(M, j)
            through = min(c.trunc for x in list(chain) + basis for c in x.comps)
            if not divisible or not same_lattice(list(chain[:j]), basis, through):
                failures.append(f"sample {i}: F_{j} differs from the Xi filtration")
                break
        d = end_dimension(P)
        if not 1 <= d <= k:
            failures.append(f"sample {i}: end_dimension {d}")
        inv = is_invariant(P)
        lams = P.lambdas
        increasing = all(lams[j] < lams[j + 1] for j in range(k - 1))
        constant = len(set(lams)) == 1
        if inv and not (increasing or constant):
            failures.append(f"sample {i}: invariant with lambdas {lams}")
        if forced_non_invariant(P):
            forced_hits += 1
            if inv.decision is not False:
                failures.append(f"sample {i}: p = {P.ps} should not be invariant")
    if forced_hits == 0:
        failures.append("no sample fell in the non-invariance cases")
    report(9, f"structural invariants on {len(samples)} presentations ({forced_hits} non-invariance cases)",
           failures, t0)


# 10 ---------------------------------------------------------------------------------

def test_criterion_10_bernstein(report):
    t0 = time.perf_counter()
    failures = []
    for i, rng in enumerate(rngs(20, 1010)):
        P = random_presentation(rng, kmax=3)
        k = P.rank
        el = bernstein_element(P)
        # brute force: the weight-k part of the product of the linear factors, read in the s-picture
        prod = linear_factor(P.lambdas[0], k + 2)
        for lam in P.lambdas[1:]:
            prod = op_normalize_mul(prod, linear_factor(lam, k + 2))
        homog = OpPoly([BSeries.monomial(k - j, k + 2, prod.coeffs[j][k - j]) for j in range(k + 1)])
        el_trim = OpPoly([BSeries.monomial(k - j, k + 2, el.coeffs[j][k - j]) for j in range(k + 1)])
        if not same_action(el_trim, homog, k):
            failures.append(f"sample {i}: element {el} differs from the rising-factorial oracle")
        roots = bernstein_roots(P)
        if roots != homogeneous_kernel_roots(el):
            failures.append(f"sample {i}: roots {roots} vs kernel oracle")
        moved = generator_change(P, rng, default_trunc(P) + 24)
        if bernstein_roots(moved) != roots:
            failures.append(f"sample {i}: roots changed under a generator change")
    phi = ParamXiText("s^(3/2)*log(s) + (z+b)*s^(1/2)", ("z",), 24)
    recs, strata = rank_stratify(phi, [{"z": F(0)}, {"z": F(1)}, {"z": F(-3, 5)}, {"z": F(7)}])
    at_zero = recs[0]["bernstein_element"]
    elsewhere = {r["bernstein_element"] for r in recs[1:]}
    if len(elsewhere) != 1 or at_zero in elsewhere or len(strata) != 2:
        failures.append(f"jump example: {[r['bernstein_element'] for r in recs]}")
    report(10, "Bernstein data: 20 samples vs oracle, invariant under generator change, jump at z = 0",
           failures, t0)


# 11 ---------------------------------------------------------------------------------

def test_criterion_11_sharpness(report):
    t0 = time.perf_counter()
    failures = []
    fam = rank4_family()
    for i, rng in enumerate(rngs(6, 1111)):
        pt = {n: nonzero_rational(rng) for n in fam.params}
        if i % 3 == 2:
            pt["gamma"] = F(3, 5) * pt["alpha"]
        elif 3 * pt["alpha"] == 5 * pt["gamma"]:
            pt["gamma"] += 1
        P = fam.instantiate(pt)
        res = find_injection(quotient(P, 1), submodule(P, 3))
        on_locus = 3 * pt["alpha"] == 5 * pt["gamma"]
        if bool(res) != on_locus:
            failures.append(f"rank-4 pair at {pt}: injection found = {bool(res)}")
    done = 0
    for rng in rngs(200, 1112):
        if done == 25:
            break
        dst = random_presentation(rng, kmax=3)
        k = dst.rank
        shifts = [rng.randint(k - 1, k + 1) for _ in range(k)]
        lams = [l + s for l, s in zip(dst.lambdas, shifts)]
        ps = [lams[j + 1] - lams[j] + 1 for j in range(k - 1)]
        if any(p < 0 for p in ps):
            continue
        S = []
        for p in ps:
            cs = [F(1)] + [random_rational(rng) for _ in range(int(p) + 1)]
            if p >= 1:
                cs[int(p)] = nonzero_rational(rng)
            S.append(BSeries(cs, len(cs) - 1))
        src = ThemePresentation(tuple(lams), tuple(S))
        if validate(src):
            continue
        done += 1
        res = find_injection(src, dst)
        if not res:
            failures.append(f"shifts {shifts}, dst {dst.lambdas}: no injection")
        elif res.cokernel_dimension() != sum(shifts):
            failures.append(f"shifts {shifts}: cokernel {res.cokernel_dimension()} != {sum(shifts)}")
    if done < 25:
        failures.append(f"only {done} random pairs generated")
    report(11, "sharpness: rank-4 pair obstructed off 3 alpha = 5 gamma, 25 deep injections", failures, t0)
