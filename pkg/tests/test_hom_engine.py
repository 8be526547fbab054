import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from abtheme.coeff_core import BSeries
from abtheme.families import rank4_family
from abtheme.hom_engine import (
    UNKNOWN,
    end_dimension,
    end_dimension_by_levels,
    end_flag,
    ext_dimensions,
    find_injection,
    hom_space,
    is_invariant,
    isomorphic,
    property_u,
)
from abtheme.theme_core import ThemePresentation, apply_word, quotient, submodule, validate
from oracles import random_presentation

F = Fraction


def rank1(lam):
    return ThemePresentation((F(lam),), ())


def p3(alpha, beta, gamma, lam=3):
    return ThemePresentation.from_invariants(lam, [1, 1], [BSeries([1, beta, gamma], 2), BSeries([1, alpha], 1)])


def rank1_ext_oracle(lam, mu):
    # (a - lam b) b^n e_mu = (n + mu - lam) b^(n+1) e_mu
    d = F(lam) - F(mu)
    hit = d.denominator == 1 and d >= 0
    return (1, 2) if hit else (0, 1)


class TestRankOne:
    @pytest.mark.parametrize("lam,mu", [(F(3, 2), F(5, 2)), (F(5, 2), F(3, 2)), (F(7, 3), F(7, 3)),
                                        (F(11, 4), F(5, 4)), (2, 5)])
    def test_ext(self, lam, mu):
        res = ext_dimensions(rank1(lam), rank1(mu))
        assert tuple(res) == rank1_ext_oracle(lam, mu) and res.stabilized

    def test_hom(self):
        assert hom_space(rank1(F(7, 2)), rank1(F(3, 2))).dim == 1
        assert hom_space(rank1(F(3, 2)), rank1(F(7, 2))).dim == 0

    def test_trivially_isomorphic(self):
        assert isomorphic(rank1(2), rank1(2)).decision is True
        assert isomorphic(rank1(2), rank1(3)).decision is False


class TestRankThree:
    def test_invariant_on_diagonal(self):
        d = is_invariant(p3(2, 2, 5))
        assert d.decision is True and d.stabilized
        assert d.witness == {"image": ["-5*b", "1", "0"]}

    def test_witness_commutes_with_a(self):
        P = p3(2, 2, 5).with_trunc(30)
        d = is_invariant(P)
        v = [s.padded(30) for s in d.payload]
        assert all(c.truncate(26).is_zero() for c in apply_word(P, P.word(), v))

    def test_not_invariant_off_diagonal(self):
        d = is_invariant(p3(2, 3, 5))
        assert d.decision is False and d.obstruction == {"hom_dim": 2, "end_flag": [1, 3]}

    @pytest.mark.parametrize("abg,dim,flag", [((2, 2, 5), 3, [1, 2, 3]), ((2, 3, 5), 2, [1, 3]),
                                              ((1, 1, 0), 3, [1, 2, 3])])
    def test_endomorphisms(self, abg, dim, flag):
        P = p3(*abg)
        assert end_dimension(P) == dim == end_dimension_by_levels(P)
        assert end_flag(P) == flag

    def test_isomorphic_with_witness(self):
        A, B = p3(2, 3, 5), p3(2, 3, 0)
        d = isomorphic(A, B)
        assert d.decision is True and d.witness["U"] == "-5"
        assert F(5 - 0, 2 - 3) == -5
        An = A.with_trunc(d.trunc_used)
        img = [s.padded(d.trunc_used) for s in d.payload.image]
        assert all(c.truncate(d.trunc_used - 6).is_zero() for c in apply_word(An, B.with_trunc(d.trunc_used).word(), img))
        assert d.payload.cokernel_dimension() == 0

    def test_obstruction_on_diagonal(self):
        d = isomorphic(p3(2, 2, 5), p3(2, 2, 1))
        assert d.decision is False
        assert d.obstruction["level"] == 3 and "condition" in d.obstruction
        assert d.extra["canonical_forms_agree"] is False

    def test_property_u_rules(self):
        assert property_u(p3(2, 2, 5)).extra["rule"] == "invariant"
        u = property_u(p3(2, 3, 5))
        assert u.decision is False and u.extra["rule"] == "E/F_1 invariant, E not"


class TestRankFour:
    fam = rank4_family()

    def pair(self, alpha, gamma):
        pt = {"alpha": F(alpha), "beta": F(1), "gamma": F(gamma), "delta": F(2), "epsilon": F(-1), "theta": F(3)}
        P = self.fam.instantiate(pt)
        return quotient(P, 1), submodule(P, 3)

    def test_sharp_obstruction(self):
        src, dst = self.pair(1, 1)
        res = find_injection(src, dst)
        assert not res and res.stabilized

    def test_injection_on_locus(self):
        src, dst = self.pair(5, 3)
        assert find_injection(src, dst)


@settings(max_examples=12)
@given(st.integers(0, 2**32 - 1))
def test_ext_euler_characteristic(seed):
    rng = random.Random(seed)
    E = random_presentation(rng, kmax=2, pmax=2)
    Fp = random_presentation(rng, kmax=2, pmax=2)
    res = ext_dimensions(E, Fp)
    assert res.stabilized
    assert res.ext1 - res.ext0 == E.rank * Fp.rank
    assert hom_space(E, Fp).dim == res.ext0


@settings(max_examples=10)
@given(st.integers(0, 2**32 - 1))
def test_end_dimension_bounds(seed):
    P = random_presentation(random.Random(seed), kmax=3)
    d = end_dimension(P)
    assert 1 <= d <= P.rank
    assert d == end_dimension_by_levels(P)
    inv = is_invariant(P)
    assert inv.decision in (True, False)
    assert property_u(P).decision in (True, False, UNKNOWN)


@settings(max_examples=8)
@given(st.integers(0, 2**32 - 1))
def test_deep_injection_exists(seed):
    rng = random.Random(seed)
    dst = random_presentation(rng, k=2, pmax=2)
    k = dst.rank
    shifts = [rng.randint(k - 1, k + 1) for _ in range(k)]
    lams = [l + s for l, s in zip(dst.lambdas, shifts)]
    src = ThemePresentation(tuple(lams), (BSeries([1] + [F(rng.randint(-3, 3)) for _ in range(3)], 3),))
    if validate(src):
        return
    res = find_injection(src, dst)
    assert res
    assert res.cokernel_dimension() == sum(shifts)
