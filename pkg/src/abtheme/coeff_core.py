"""Exact scalars and truncated power series in b.

A ``BSeries`` stores the coefficients of b^0 .. b^trunc.  Nothing beyond
``trunc`` is ever read, and a binary operation keeps the smaller of the
two truncation orders.
"""

from fractions import Fraction
from math import factorial
from typing import NamedTuple, Optional

from .errors import NonInvertible, Obstruction, PrecisionExhausted

__all__ = [
    "Q",
    "TPoly",
    "BSeries",
    "EulerSolution",
    "series_mul",
    "series_mul_sharp",
    "series_inverse",
    "series_derivative",
    "solve_euler",
    "rising",
]


def Q(x):
    """Coerce ints, strings like ``"5/2"`` and Fractions to a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, str)):
        return Fraction(x)
    if isinstance(x, TPoly):
        raise TypeError("expected a rational, got a polynomial in t")
    raise TypeError(f"cannot read {x!r} as an exact rational")


def rising(x, n):
    """x (x+1) ... (x+n-1), with the empty product equal to 1."""
    out = Fraction(1)
    for i in range(n):
        out *= x + i
    return out


class TPoly:
    """Polynomial in one formal symbol t with rational coefficients.

    Used as a scalar by the monodromy computations, where t stands for 2iπ.
    """

    __slots__ = ("c",)

    def __init__(self, coeffs=()):
        c = [Q(x) for x in coeffs]
        while c and c[-1] == 0:
            c.pop()
        self.c = tuple(c)

    @classmethod
    def t_power(cls, n, scale=1):
        return cls([0] * n + [scale])

    @property
    def degree(self):
        return len(self.c) - 1

    def _lift(self, other):
        if isinstance(other, TPoly):
            return other
        if isinstance(other, (int, Fraction)):
            return TPoly([other])
        return None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        n = max(len(self.c), len(o.c))
        a = self.c + (0,) * (n - len(self.c))
        b = o.c + (0,) * (n - len(o.c))
        return TPoly([x + y for x, y in zip(a, b)])

    __radd__ = __add__

    def __neg__(self):
        return TPoly([-x for x in self.c])

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        if not self.c or not o.c:
            return TPoly()
        out = [Fraction(0)] * (len(self.c) + len(o.c) - 1)
        for i, x in enumerate(self.c):
            for j, y in enumerate(o.c):
                out[i + j] += x * y
        return TPoly(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return TPoly([x / other for x in self.c])
        return NotImplemented

    def __eq__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self.c == o.c

    def __hash__(self):
        if len(self.c) <= 1:
            return hash(self.c[0] if self.c else Fraction(0))
        return hash(self.c)

    def __bool__(self):
        return bool(self.c)

    def __repr__(self):
        return f"TPoly({[str(x) for x in self.c]})"

    def __str__(self):
        if not self.c:
            return "0"
        parts = []
        for i, x in enumerate(self.c):
            if x == 0:
                continue
            if i == 0:
                parts.append(str(x))
            else:
                mono = "t" if i == 1 else f"t^{i}"
                parts.append(mono if x == 1 else f"({x})*{mono}")
        return " + ".join(parts)


class BSeries:
    """Truncated formal power series  sum_{n <= trunc} c_n b^n."""

    __slots__ = ("coeffs", "trunc")

    def __init__(self, coeffs, trunc=None):
        cs = list(coeffs)
        if trunc is None:
            trunc = len(cs) - 1
        if trunc < -1:
            raise PrecisionExhausted("negative truncation order")
        if len(cs) < trunc + 1:
            cs += [Fraction(0)] * (trunc + 1 - len(cs))
        self.coeffs = tuple(c if isinstance(c, TPoly) else Q(c) for c in cs[: trunc + 1])
        self.trunc = trunc

    # -- constructors
    @classmethod
    def zero(cls, trunc):
        return cls([], trunc)

    @classmethod
    def const(cls, c, trunc):
        return cls([c], trunc)

    @classmethod
    def monomial(cls, n, trunc, c=1):
        if n > trunc:
            return cls([], trunc)
        return cls([0] * n + [c], trunc)

    @classmethod
    def from_dict(cls, terms, trunc):
        cs = [Fraction(0)] * (trunc + 1)
        for n, c in terms.items():
            if n <= trunc:
                cs[n] = cs[n] + c
        return cls(cs, trunc)

    # -- access
    def __getitem__(self, n):
        if n < 0:
            return Fraction(0)
        if n > self.trunc:
            raise PrecisionExhausted(f"coefficient of b^{n} requested beyond trunc {self.trunc}")
        return self.coeffs[n]

    def coeff(self, n):
        return self[n]

    def valuation(self):
        """Index of the first nonzero coefficient, or None if zero through trunc."""
        for n, c in enumerate(self.coeffs):
            if c:
                return n
        return None

    def is_zero(self):
        return self.valuation() is None

    def degree(self):
        for n in range(self.trunc, -1, -1):
            if self.coeffs[n]:
                return n
        return -1

    def terms(self):
        return {n: c for n, c in enumerate(self.coeffs) if c}

    # -- truncation management
    def truncate(self, trunc):
        if trunc > self.trunc:
            raise PrecisionExhausted(f"cannot raise trunc {self.trunc} to {trunc}")
        return BSeries(self.coeffs[: trunc + 1], trunc)

    def padded(self, trunc):
        """Extend with zeros.  Only meaningful when the series is a polynomial."""
        if trunc <= self.trunc:
            return self.truncate(trunc)
        return BSeries(self.coeffs, trunc)

    def agrees(self, other, through=None):
        n = min(self.trunc, other.trunc)
        if through is not None:
            n = min(n, through)
        return all(self.coeffs[i] == other.coeffs[i] for i in range(n + 1))

    # -- arithmetic
    def __add__(self, other):
        if isinstance(other, (int, Fraction, TPoly)):
            other = BSeries.const(other, self.trunc)
        if not isinstance(other, BSeries):
            return NotImplemented
        n = min(self.trunc, other.trunc)
        return BSeries([self.coeffs[i] + other.coeffs[i] for i in range(n + 1)], n)

    __radd__ = __add__

    def __neg__(self):
        return BSeries([-c for c in self.coeffs], self.trunc)

    def __sub__(self, other):
        if isinstance(other, (int, Fraction, TPoly)):
            other = BSeries.const(other, self.trunc)
        if not isinstance(other, BSeries):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, BSeries):
            return series_mul(self, other)
        if isinstance(other, (int, Fraction, TPoly)):
            if not other:
                return BSeries.zero(self.trunc)
            return BSeries([c * other for c in self.coeffs], self.trunc)
        return NotImplemented

    __rmul__ = __mul__

    def shift(self, k):
        """Multiply by b^k (k >= 0); known one order further per power."""
        if k < 0:
            return self.divide_b(-k)
        return BSeries([Fraction(0)] * k + list(self.coeffs), self.trunc + k)

    def divide_b(self, k):
        """Divide by b^k; the low coefficients must vanish."""
        for n in range(min(k, self.trunc + 1)):
            if self.coeffs[n]:
                raise Obstruction(n, self.coeffs[n], "division by a power of b")
        return BSeries(self.coeffs[k:], self.trunc - k)

    def derivative(self):
        return series_derivative(self)

    def inverse(self):
        return series_inverse(self)

    def subs_t(self, value):
        """Evaluate TPoly coefficients at a rational value of t."""
        out = []
        for c in self.coeffs:
            if isinstance(c, TPoly):
                acc = Fraction(0)
                for i, x in enumerate(c.c):
                    acc += x * Fraction(value) ** i
                out.append(acc)
            else:
                out.append(c)
        return BSeries(out, self.trunc)

    def __eq__(self, other):
        if not isinstance(other, BSeries):
            return NotImplemented
        return self.trunc == other.trunc and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.coeffs, self.trunc))

    def __repr__(self):
        return f"BSeries({format_series(self)!r}, trunc={self.trunc})"

    def __str__(self):
        return format_series(self)


def _fmt_scalar(c):
    if isinstance(c, TPoly):
        return f"({c})"
    if c.denominator == 1:
        return str(c.numerator)
    return f"({c})"


def format_series(x):
    """Render as ``1 + 3*b + (5/2)*b^2``; the truncation order is not printed."""
    parts = []
    for n, c in enumerate(x.coeffs):
        if not c:
            continue
        mono = "" if n == 0 else ("b" if n == 1 else f"b^{n}")
        if not mono:
            body = _fmt_scalar(c)
        elif c == 1:
            body = mono
        elif c == -1:
            body = "-" + mono
        else:
            body = f"{_fmt_scalar(c)}*{mono}"
        parts.append(body)
    if not parts:
        return "0"
    out = parts[0]
    for p in parts[1:]:
        out += " - " + p[1:] if p.startswith("-") else " + " + p
    return out


def series_mul(x, y):
    n = min(x.trunc, y.trunc)
    xs = [i for i in range(n + 1) if x.coeffs[i]]
    ys = [j for j in range(n + 1) if y.coeffs[j]]
    out = [Fraction(0)] * (n + 1)
    for i in xs:
        xi = x.coeffs[i]
        for j in ys:
            if i + j > n:
                break
            out[i + j] = out[i + j] + xi * y.coeffs[j]
    return BSeries(out, n)


def series_mul_sharp(x, y):
    """Product known through min(trunc_x + val_y, trunc_y + val_x).

    The min rule of ``series_mul`` discards coefficients that are in fact
    determined; row reduction over C[[b]] needs them.
    """
    vx, vy = x.valuation(), y.valuation()
    if vx is None or vy is None:
        return BSeries.zero(min(x.trunc + (vy if vy is not None else y.trunc + 1),
                                y.trunc + (vx if vx is not None else x.trunc + 1)))
    n = min(x.trunc + vy, y.trunc + vx)
    out = [Fraction(0)] * (n + 1)
    ys = [j for j in range(y.trunc + 1) if y.coeffs[j]]
    for i in range(min(x.trunc, n) + 1):
        xi = x.coeffs[i]
        if not xi:
            continue
        for j in ys:
            if i + j > n:
                break
            out[i + j] = out[i + j] + xi * y.coeffs[j]
    return BSeries(out, n)


def series_inverse(x):
    if x.trunc < 0 or not x.coeffs[0]:
        raise NonInvertible("constant term is zero")
    c0 = x.coeffs[0]
    if isinstance(c0, TPoly):
        raise NonInvertible("cannot invert a series with polynomial-in-t constant term")
    inv0 = 1 / c0
    n = x.trunc
    out = [inv0] + [Fraction(0)] * n
    nz = [i for i in range(1, n + 1) if x.coeffs[i]]
    for m in range(1, n + 1):
        acc = Fraction(0)
        for i in nz:
            if i > m:
                break
            acc += x.coeffs[i] * out[m - i]
        out[m] = -acc * inv0
    return BSeries(out, n)


def series_derivative(x):
    return BSeries([n * x.coeffs[n] for n in range(1, x.trunc + 1)], x.trunc - 1)


class EulerSolution(NamedTuple):
    series: BSeries
    free_slot: Optional[int]


def solve_euler(m, rhs, free=0):
    """Solve  b T' - m T = rhs.

    T_n = rhs_n / (n - m) for n != m.  When 0 <= m <= trunc the slot T_m is
    free; it is set to ``free`` and its index returned.  A nonzero
    coefficient of b^m in rhs makes the equation unsolvable.
    """
    n = rhs.trunc
    out = [Fraction(0)] * (n + 1)
    slot = None
    for i in range(n + 1):
        r = rhs.coeffs[i]
        if i == m:
            if r:
                raise Obstruction(m, r, "b T' - m T = rhs")
            out[i] = free
            slot = i
        else:
            out[i] = r / (i - m) if r else Fraction(0)
    return EulerSolution(BSeries(out, n), slot)


def exp_coeff(n):
    """1/n!, the weight of t^n in the unipotent monodromy expansion."""
    return Fraction(1, factorial(n))
