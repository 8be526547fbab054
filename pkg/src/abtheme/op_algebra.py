"""The operator algebra generated by a and b with  a b - b a = b^2.

Elements are kept in left normal form  sum_j C_j(b) a^j : every b-series
sits to the left of the powers of a.  Moving a past a series uses
a S(b) = S(b) a + b^2 S'(b).
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple

from .coeff_core import BSeries, Q, series_inverse
from .errors import NonInvertible, PrecisionExhausted

__all__ = [
    "OpPoly",
    "StandardWord",
    "op_normalize_mul",
    "op_divide_right",
    "word_expand",
    "op_apply_xi",
    "linear_factor",
]


class OpPoly:
    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        cs = list(coeffs)
        while len(cs) > 1 and cs[-1].is_zero():
            cs.pop()
        if not cs:
            raise ValueError("an operator needs at least one coefficient series")
        self.coeffs = tuple(cs)

    @classmethod
    def series(cls, s):
        return cls([s])

    @classmethod
    def a(cls, trunc):
        return cls([BSeries.zero(trunc), BSeries.const(1, trunc)])

    @classmethod
    def b(cls, trunc):
        return cls([BSeries.monomial(1, trunc)])

    @property
    def degree(self):
        if len(self.coeffs) == 1 and self.coeffs[0].is_zero():
            return -1
        return len(self.coeffs) - 1

    @property
    def trunc(self):
        return min(c.trunc for c in self.coeffs)

    def is_monic(self):
        lead = self.coeffs[-1]
        return lead[0] == 1 and all(lead[n] == 0 for n in range(1, lead.trunc + 1))

    def __add__(self, other):
        if isinstance(other, BSeries):
            other = OpPoly.series(other)
        n = max(len(self.coeffs), len(other.coeffs))
        t = min(self.trunc, other.trunc)
        out = []
        for j in range(n):
            x = self.coeffs[j] if j < len(self.coeffs) else BSeries.zero(t)
            y = other.coeffs[j] if j < len(other.coeffs) else BSeries.zero(t)
            out.append(x + y)
        return OpPoly(out)

    def __neg__(self):
        return OpPoly([-c for c in self.coeffs])

    def __sub__(self, other):
        if isinstance(other, BSeries):
            other = OpPoly.series(other)
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return OpPoly([c * other for c in self.coeffs])
        if isinstance(other, BSeries):
            other = OpPoly.series(other)
        return op_normalize_mul(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return OpPoly([c * other for c in self.coeffs])
        if isinstance(other, BSeries):
            return op_normalize_mul(OpPoly.series(other), self)
        return NotImplemented

    def truncate(self, trunc):
        return OpPoly([c.truncate(min(trunc, c.trunc)) for c in self.coeffs])

    def agrees(self, other, through=None):
        n = max(len(self.coeffs), len(other.coeffs))
        t = min(self.trunc, other.trunc)
        if through is not None:
            t = min(t, through)
        for j in range(n):
            x = self.coeffs[j] if j < len(self.coeffs) else BSeries.zero(t)
            y = other.coeffs[j] if j < len(other.coeffs) else BSeries.zero(t)
            if not x.agrees(y, t):
                return False
        return True

    def homogeneous_part(self, weight):
        """Terms c b^(weight-j) a^j: the part of weight ``weight`` (a, b weigh 1)."""
        out = []
        for j, c in enumerate(self.coeffs):
            n = weight - j
            out.append(BSeries.monomial(n, c.trunc, c[n]) if 0 <= n <= c.trunc else BSeries.zero(c.trunc))
        return OpPoly(out)

    def __eq__(self, other):
        if not isinstance(other, OpPoly):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __str__(self):
        return format_op(self)

    def __repr__(self):
        return f"OpPoly({format_op(self)!r})"


def format_op(x):
    parts = []
    for j, c in enumerate(x.coeffs):
        if c.is_zero():
            continue
        mono = "" if j == 0 else ("a" if j == 1 else f"a^{j}")
        body = str(c)
        if not mono:
            parts.append(body)
        elif body == "1":
            parts.append(mono)
        else:
            parts.append(f"({body})*{mono}")
    return " + ".join(parts) if parts else "0"


def _a_times(x):
    """a * x for x in left normal form: a C a^l = C a^(l+1) + b^2 C' a^l."""
    t = x.trunc
    out = [BSeries.zero(t) for _ in range(len(x.coeffs) + 1)]
    for l, c in enumerate(x.coeffs):
        out[l + 1] = out[l + 1] + c
        out[l] = out[l] + c.derivative().shift(2)
    return OpPoly(out)


def op_normalize_mul(x, y):
    t = min(x.trunc, y.trunc)
    y = y.truncate(t)
    acc = None
    power = y  # a^i * y, built up one a at a time
    for i, c in enumerate(x.coeffs):
        if i > 0:
            power = _a_times(power)
        if not c.is_zero():
            term = OpPoly([c.truncate(t) * d for d in power.coeffs])
            acc = term if acc is None else acc + term
    if acc is None:
        return OpPoly([BSeries.zero(t)])
    return acc.truncate(t)


def linear_factor(mu, trunc):
    """The operator a - mu b."""
    return OpPoly([BSeries.monomial(1, trunc, -Q(mu)), BSeries.const(1, trunc)])


def op_divide_right(x, mu):
    """Return (q, r) with x = q (a - mu b) + r(b)."""
    t = x.trunc
    div = linear_factor(mu, t)
    rem = x
    q_terms = [BSeries.zero(t) for _ in range(max(1, x.degree))]
    while rem.degree >= 1:
        d = rem.degree
        lead = rem.coeffs[d]
        mono = OpPoly([BSeries.zero(t)] * (d - 1) + [lead])
        q_terms[d - 1] = q_terms[d - 1] + lead
        rem = rem - op_normalize_mul(mono, div)
        if rem.degree >= d:
            raise PrecisionExhausted("leading term did not cancel")
    r = rem.coeffs[0] if rem.degree >= 0 else BSeries.zero(t)
    return OpPoly(q_terms), r.truncate(min(r.trunc, t))


@dataclass(frozen=True)
class StandardWord:
    """(a - l1 b) S1^-1 (a - l2 b) ... S_{k-1}^-1 (a - lk b), kept factored."""

    lambdas: Tuple[Fraction, ...]
    S: Tuple[BSeries, ...]

    def __post_init__(self):
        if len(self.S) != len(self.lambdas) - 1:
            raise ValueError("a word with k linear factors needs k-1 series")

    @property
    def rank(self):
        return len(self.lambdas)

    @property
    def trunc(self):
        ts = [s.trunc for s in self.S]
        return min(ts) if ts else None

    def factors(self, trunc):
        """Factors left to right, each an OpPoly."""
        out = []
        for j, lam in enumerate(self.lambdas):
            out.append(linear_factor(lam, trunc))
            if j < len(self.S):
                s = self.S[j].truncate(min(trunc, self.S[j].trunc))
                out.append(OpPoly.series(series_inverse(s)))
        return out

    def __str__(self):
        parts = []
        for j, lam in enumerate(self.lambdas):
            parts.append(f"(a - {_fmt_rational(lam)} b)")
            if j < len(self.S):
                parts.append(f"inv({self.S[j]})")
        return " * ".join(parts)


def _fmt_rational(x):
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def word_expand(w, trunc=None):
    """Monic generator of the left ideal spanned by the word, in left normal form."""
    if trunc is None:
        trunc = w.trunc if w.trunc is not None else 16
    for s in w.S:
        if s[0] == 0:
            raise NonInvertible("a connecting series has zero constant term")
    acc = None
    for f in w.factors(trunc):
        acc = f if acc is None else op_normalize_mul(acc, f)
    # the raw product leads with prod S_j^-1; a unit on the left makes it monic
    lead = acc.coeffs[-1]
    if acc.degree > 0 and not acc.is_monic():
        acc = op_normalize_mul(OpPoly.series(series_inverse(lead)), acc)
    return acc


def op_apply_xi(x, phi):
    """Apply sum C_j(b) a^j to an element of a Xi space (see xi_space)."""
    from .xi_space import xi_apply_a

    acc = None
    power = phi
    for j, c in enumerate(x.coeffs):
        if j > 0:
            power = xi_apply_a(power)
        if not c.is_zero():
            term = power.scale(c)
            acc = term if acc is None else acc + term
    if acc is None:
        return phi.scale(BSeries.zero(x.trunc))
    return acc
