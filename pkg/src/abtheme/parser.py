"""Text syntax for series, operator words and multivalued expansions.

A small recursive-descent parser builds sympy expressions; factorials are
kept as marker symbols so that a ``/j!`` next to ``log(s)^j`` can be told
apart from a plain rational factor.

Reading of s-powers: ``a`` acts as multiplication by ``s`` and ``b`` as
integration from 0, so that

    s^(lam-1+m) (Log s)^j / j!  =  a^m e_(lam,j),     0 < lam <= 1, m >= 0,

and in particular  s^(lam-1+m) = lam (lam+1) ... (lam+m-1) b^m e_(lam,0).
"""

import re
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Dict, List, Tuple

import sympy

from .coeff_core import BSeries, Q, rising
from .errors import AmbiguousNormalization, ParseError
from .op_algebra import StandardWord
from .xi_space import XiElement, XiMultiElement, xi_apply_a

__all__ = [
    "S_CONVENTION",
    "ParsedXi",
    "parse_expr",
    "parse_series",
    "parse_xi",
    "parse_word",
    "format_xi",
    "split_exponent",
    "ParamXiText",
]

S_CONVENTION = (
    "a = multiplication by s, b = integration from 0; "
    "s^(lam-1+m)*log(s)^j/j! = a^m e_(lam,j) with 0 < lam <= 1; "
    "s^(lam-1+m) = lam*(lam+1)*...*(lam+m-1) * b^m e_(lam,0)"
)

_B = sympy.Symbol("b")
_S = sympy.Symbol("s", positive=True)
_A = sympy.Symbol("a", commutative=False)
_LOG = sympy.Symbol("_log_s")
_INV = sympy.Function("inv", commutative=False)

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()!,]))"
)


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text):
    out, pos = [], 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            bad = len(text) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        start = m.start(kind)
        out.append(_Tok(kind, m.group(kind), start))
        pos = m.end()
    out.append(_Tok("end", "", len(text)))
    return out


_FUNCTIONS = ("log", "Log", "ln", "inv")


def _fact_marker(n):
    return sympy.Symbol(f"_fact_{n}", positive=True)


class _Parser:
    """expr := term (('+'|'-') term)*
    term := unary (('*'|'/'|<juxtaposition>) unary)*
    unary := ('-'|'+') unary | power
    power := postfix ('^' unary)?
    postfix := atom '!'?
    atom := number | name | name '(' expr ')' | '(' expr ')'
    """

    def __init__(self, text, symbols, noncommutative_a=False):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.symbols = symbols
        self.nc = noncommutative_a

    @property
    def tok(self):
        return self.toks[self.i]

    def take(self, text=None, kind=None):
        t = self.tok
        if (text is not None and t.text != text) or (kind is not None and t.kind != kind):
            want = text or kind
            got = t.text or "end of input"
            raise ParseError(f"expected {want!r}, found {got!r}", t.pos)
        self.i += 1
        return t

    def parse(self):
        e = self.expr()
        if self.tok.kind != "end":
            raise ParseError(f"unexpected {self.tok.text!r}", self.tok.pos)
        return e

    def expr(self):
        e = self.term()
        while self.tok.text in ("+", "-"):
            op = self.take().text
            r = self.term()
            e = e + r if op == "+" else e - r
        return e

    def _starts_atom(self):
        t = self.tok
        return t.kind in ("num", "name") or t.text == "("

    def term(self):
        e = self.unary()
        while True:
            if self.tok.text == "*":
                self.take()
                e = e * self.unary()
            elif self.tok.text == "/":
                t = self.take()
                d = self.unary()
                if d == 0:
                    raise ParseError("division by zero", t.pos)
                e = e * d ** -1
            elif self._starts_atom():
                e = e * self.unary()
            else:
                return e

    def unary(self):
        if self.tok.text == "-":
            self.take()
            return -self.unary()
        if self.tok.text == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.postfix()
        if self.tok.text == "^":
            t = self.take()
            ex = self.unary()
            if not ex.is_Rational:
                raise ParseError("exponents must be rational numbers", t.pos)
            if base == _LOG and not (ex.is_Integer and ex >= 0):
                raise ParseError("log(s) takes a natural exponent", t.pos)
            if self.nc and ex == -1 and base.free_symbols:
                return _INV(base)
            if base.has(_A) and not (ex.is_Integer and ex >= 0):
                raise ParseError("operators take natural exponents or ^(-1)", t.pos)
            return base ** ex
        return base

    def postfix(self):
        e = self.atom()
        if self.tok.text == "!":
            t = self.take()
            if not (e.is_Integer and e >= 0):
                raise ParseError("factorial of a non-natural number", t.pos)
            return _fact_marker(int(e))
        return e

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.take()
            return sympy.Rational(t.text)
        if t.text == "(":
            self.take()
            e = self.expr()
            self.take(")")
            return e
        if t.kind == "name":
            self.take()
            if self.tok.text == "(" and t.text in _FUNCTIONS:
                return self.call(t)
            return self.name(t)
        raise ParseError(f"unexpected {t.text or 'end of input'!r}", t.pos)

    def call(self, t):
        self.take("(")
        arg = self.expr()
        self.take(")")
        if t.text in ("log", "Log", "ln"):
            if arg != _S:
                raise ParseError("only log(s) is supported", t.pos)
            return _LOG
        if t.text == "inv" and self.nc:
            return _INV(arg)
        raise ParseError(f"unknown function {t.text!r}", t.pos)

    def name(self, t):
        if t.text == "b":
            return _B
        if t.text == "s":
            return _S
        if t.text == "a" and self.nc:
            return _A
        if t.text in self.symbols:
            return sympy.Symbol(t.text)
        raise ParseError(f"unknown name {t.text!r}", t.pos)


def parse_expr(text, params=(), operators=False):
    """Parse to a sympy expression in b, s, log(s), the parameters (and a)."""
    return _Parser(text, set(params), operators).parse()


def _poly_series(expr, trunc):
    """A polynomial in b with rational coefficients as a BSeries."""
    expr = sympy.expand(expr)
    try:
        poly = sympy.Poly(expr, _B)
    except sympy.PolynomialError as exc:
        raise ParseError(f"not a polynomial in b: {expr}") from exc
    coeffs = {}
    for (n,), c in poly.terms():
        if not c.is_Rational:
            raise ParseError(f"coefficient {c} of b^{n} is not rational")
        coeffs[int(n)] = c
    top = max(coeffs, default=0)
    return BSeries.from_dict({n: Fraction(int(c.p), int(c.q)) for n, c in coeffs.items()}, max(trunc, top))


def parse_series(text, trunc=32):
    e = parse_expr(text)
    if e.has(_S) or e.has(_LOG) or any(s.name.startswith("_fact_") for s in e.free_symbols):
        raise ParseError("a b-series may not contain s, log(s) or factorials")
    return _poly_series(e, trunc)


def split_exponent(r):
    """r = (lam - 1) + m with 0 < lam <= 1 and m an integer."""
    r = Q(r)
    # lam - 1 lies in (-1, 0], hence m = ceil(r)
    m = -((-r.numerator) // r.denominator)
    lam = r - m + 1
    return lam, int(m)


@dataclass(frozen=True)
class ParsedXi:
    element: XiMultiElement
    convention: str
    terms: Tuple[Dict[str, str], ...]

    def single(self):
        parts = self.element.nonzero()
        if len(parts) != 1:
            raise ParseError(f"expected a single lambda component, found {len(parts)}")
        return next(iter(parts.values()))


def _decompose_term(term):
    """(coefficient, s-exponent, log power, factorial markers)."""
    coeff = sympy.Integer(1)
    r = sympy.Integer(0)
    j = 0
    facts = {}
    for f in sympy.Mul.make_args(term):
        base, ex = f.as_base_exp()
        if base == _S:
            r += ex
        elif base == _LOG:
            j += int(ex)
        elif isinstance(base, sympy.Symbol) and base.name.startswith("_fact_"):
            n = int(base.name[len("_fact_"):])
            facts[n] = facts.get(n, 0) + int(ex)
        else:
            coeff *= f
    return coeff, Q(Fraction(int(sympy.Rational(r).p), int(sympy.Rational(r).q))), j, facts


def _fact_value(facts):
    v = Fraction(1)
    for n, e in facts.items():
        v *= Fraction(factorial(n)) ** e
    return v


def _place(lam, m, j, coeff_series, trunc):
    """coeff(b) * a^m e_(lam,j)."""
    x = XiElement.basis(lam, j, trunc + m + 1)
    for _ in range(m):
        x = xi_apply_a(x)
    return x.scale(coeff_series).truncate(trunc)


def parse_xi(text, trunc=32, params=None, point=None):
    """Parse a sum of terms  (<b-series>) * s^(<rational>) [* log(s)^j [/ j!]].

    With ``params`` the b-coefficients may contain those names; ``point``
    must then give them rational values.
    Raises AmbiguousNormalization when log(s)^j, j >= 2, comes without /j!.
    """
    params = tuple(params or ())
    e = sympy.expand(parse_expr(text, params))
    if point is not None:
        e = sympy.expand(e.subs({sympy.Symbol(k): sympy.Rational(str(Q(v))) for k, v in point.items()}))
    groups: Dict[Tuple[Fraction, int, Tuple], sympy.Expr] = {}
    for term in sympy.Add.make_args(e):
        if term == 0:
            continue
        c, r, j, facts = _decompose_term(term)
        key = (r, j, tuple(sorted(facts.items())))
        groups[key] = groups.get(key, 0) + c
    ambiguous = [
        (r, j) for (r, j, facts) in groups if j >= 2 and dict(facts).get(j, 0) != -1
    ]
    if ambiguous:
        r, j = ambiguous[0]
        literal = _build(groups, trunc, literal=True)[0]
        normalized = _build(groups, trunc, literal=False)[0]
        raise AmbiguousNormalization(
            f"s^({_rat(r)})*log(s)^{j} has no /{j}! marker",
            {
                f"log(s)^{j} as written ({j}! e_(lam,{j}))": format_xi(XiMultiElement.of(literal)),
                f"log(s)^{j} standing for (Log s)^{j}/{j}!": format_xi(XiMultiElement.of(normalized)),
            },
        )
    comps, echo = _build(groups, trunc, literal=True)
    if not comps:
        raise ParseError("the expression is zero")
    return ParsedXi(XiMultiElement.of(comps), S_CONVENTION, tuple(echo))


def _build(groups, trunc, literal):
    comps: Dict[Fraction, XiElement] = {}
    echo = []
    for (r, j, facts), c in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        facts = dict(facts)
        # (Log s)^j = j! e_j; a matching /j! marker cancels the j!
        scalar = _fact_value(facts)
        if literal or facts.get(j, 0) == -1 or j < 2:
            scalar *= factorial(j)
        lam, m = split_exponent(r)
        if m < 0:
            raise ParseError(f"s^({_rat(r)}) lies below s^(lam-1): not an element of Xi")
        cs = _poly_series(c, trunc)
        x = _place(lam, m, j, cs * scalar, trunc)
        comps[lam] = x if lam not in comps else comps[lam] + x
        echo.append({
            "term": f"s^({_rat(r)})" + ("" if j == 0 else "*log(s)" if j == 1 else f"*log(s)^{j}"),
            "lambda": _rat(lam),
            "m": m,
            "reading": f"a^{m} e_({_rat(lam)},{j})",
            "scalar": _rat(scalar),
            "b_power_factor": _rat(rising(lam, m)) if j == 0 else None,
        })
    return comps, echo


class ParamXiText:
    """A parametric expansion kept as text; instantiate() substitutes a point."""

    def __init__(self, text, params, trunc=32):
        self.text = text
        self.params = tuple(params)
        self.trunc = trunc
        parse_expr(text, self.params)  # syntax check up front

    def instantiate(self, point):
        return parse_xi(self.text, self.trunc, self.params, point).single()


def _rat(x):
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def format_xi(x):
    """Text that parse_xi reads back to the same element (at the same trunc)."""
    parts = x.element.nonzero() if isinstance(x, ParsedXi) else (
        x.nonzero() if isinstance(x, XiMultiElement) else {x.lam: x}
    )
    out = []
    for lam, el in sorted(parts.items()):
        r = _rat(lam - 1)
        for j, c in enumerate(el.comps):
            if c.is_zero():
                continue
            tail = "" if j == 0 else ("*log(s)" if j == 1 else f"*log(s)^{j}/{j}!")
            out.append(f"({c})*s^({r}){tail}")
    return " + ".join(out) if out else "0"


def parse_word(text, trunc=32):
    """Read ``(a - l1 b) * inv(S1) * ... * (a - lk b)`` (``(S)^(-1)`` also accepted)."""
    e = parse_expr(text, operators=True)
    factors = list(e.args) if isinstance(e, sympy.Mul) else [e]
    lambdas: List[Fraction] = []
    S: List[BSeries] = []
    expect_linear = True
    for f in factors:
        if isinstance(f, sympy.Pow) and f.base.has(_A) and f.exp.is_Integer:
            fs = [f.base] * int(f.exp)
        else:
            fs = [f]
        for g in fs:
            if g.func == _INV:
                if expect_linear:
                    raise ParseError("two connecting series in a row")
                inner = g.args[0]
                if inner.has(_A):
                    raise ParseError("inv() takes a b-series")
                S.append(_poly_series(inner, trunc))
                expect_linear = True
                continue
            if not g.has(_A):
                raise ParseError(f"stray factor {g}: expected (a - lam*b) or inv(S)")
            lam = _linear_lambda(g)
            if not expect_linear:
                S.append(BSeries.const(1, trunc))
            lambdas.append(lam)
            expect_linear = False
    if not lambdas or expect_linear:
        raise ParseError("a word must start and end with a linear factor")
    return StandardWord(tuple(lambdas), tuple(S))


def _linear_lambda(g):
    g = sympy.expand(g)
    rest = sympy.expand(g - _A)
    if rest.has(_A):
        raise ParseError(f"{g} is not of the form a - lam*b")
    lam = -sympy.expand(rest / _B)
    if not lam.is_Rational:
        raise ParseError(f"{g} is not of the form a - lam*b with lam rational")
    return Fraction(int(lam.p), int(lam.q))
