"""Exact calculus on one-variable exp-Laurent expressions.

An expression is a finite sum of terms ``c * y**p * exp(m*y)`` with real
``c``, ``p`` and ``m``.  The class is closed under addition,
multiplication, differentiation and multiplication by monomials, which is
all the momentum-profile formulas need.

Text grammar (whitespace is ignored)::

    expr    := term (("+" | "-") term)*        leading "-" allowed
    term    := factor ("*" factor)*
    factor  := NUMBER | "y" ("^" SNUMBER)? | "exp" "(" SNUMBER "*" "y" ")"
    SNUMBER := "-"? NUMBER
"""
from __future__ import annotations

import math
import re
from typing import Iterable

import numpy as np

from . import kernels
from .errors import DomainError, ExprSyntaxError, UnsupportedTerm

SNAP_TOL = 1e-12
DROP_REL = 1e-14


def _snap(x: float) -> float:
    x = float(x)
    r = round(x)
    if abs(x - r) <= SNAP_TOL:
        return float(r)
    return x


def _is_int(x: float) -> bool:
    return float(x).is_integer()


class ExpLaurentExpr:
    """Immutable normalized sum of ``c * y**p * exp(m*y)`` terms.

    ``terms`` is a tuple of ``(coeff, power, rate)`` sorted by
    ``(rate, power)``; keys are unique and no coefficient is zero.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Iterable[tuple[float, float, float]] = ()):
        buckets: dict[tuple[float, float], list[float]] = {}
        for c, p, m in terms:
            c = float(c)
            if c == 0.0:
                continue
            buckets.setdefault((_snap(p), _snap(m)), []).append(c)
        # fsum makes the merge independent of input order
        merged = {k: math.fsum(v) for k, v in buckets.items()}
        scale = max((abs(c) for c in merged.values()), default=0.0)
        cut = DROP_REL * scale
        kept = [(c, p, m) for (p, m), c in merged.items() if c != 0.0 and abs(c) >= cut]
        kept.sort(key=lambda t: (t[2], t[1]))
        object.__setattr__(self, "_terms", tuple(kept))

    def __setattr__(self, name, value):
        raise AttributeError("ExpLaurentExpr is immutable")

    @property
    def terms(self) -> tuple[tuple[float, float, float], ...]:
        return self._terms

    # constructors -------------------------------------------------------

    @classmethod
    def const(cls, c: float) -> "ExpLaurentExpr":
        return cls([(c, 0.0, 0.0)])

    @classmethod
    def monomial(cls, c: float, power: float, rate: float = 0.0) -> "ExpLaurentExpr":
        return cls([(c, power, rate)])

    # algebra ------------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = ExpLaurentExpr.const(other)
        if not isinstance(other, ExpLaurentExpr):
            return NotImplemented
        return ExpLaurentExpr(self._terms + other._terms)

    __radd__ = __add__

    def __neg__(self):
        return ExpLaurentExpr((-c, p, m) for c, p, m in self._terms)

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            other = ExpLaurentExpr.const(other)
        if not isinstance(other, ExpLaurentExpr):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return ExpLaurentExpr((c * other, p, m) for c, p, m in self._terms)
        if not isinstance(other, ExpLaurentExpr):
            return NotImplemented
        return ExpLaurentExpr(
            (c1 * c2, p1 + p2, m1 + m2)
            for c1, p1, m1 in self._terms
            for c2, p2, m2 in other._terms
        )

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only nonnegative integer powers are supported")
        out = ExpLaurentExpr.const(1.0)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, ExpLaurentExpr):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def __len__(self):
        return len(self._terms)

    def __repr__(self):
        return f"ExpLaurentExpr({to_text(self)!r})"

    def __str__(self):
        return to_text(self)

    def __call__(self, y):
        return evaluate(self, y)

    # calculus -----------------------------------------------------------

    def diff(self) -> "ExpLaurentExpr":
        return differentiate(self)

    def integral(self) -> "ExpLaurentExpr":
        return antiderivative(self)

    @property
    def is_polynomial_like(self) -> bool:
        """True when every term has rate 0."""
        return all(m == 0.0 for _, _, m in self._terms)

    def needs_positive_y(self) -> bool:
        return any(p < 0 or not _is_int(p) for _, p, _ in self._terms)


Y = ExpLaurentExpr.monomial(1.0, 1.0)
ZERO = ExpLaurentExpr()
ONE = ExpLaurentExpr.const(1.0)


# evaluation ---------------------------------------------------------------

def evaluate(e: ExpLaurentExpr, y):
    """Evaluate at a scalar or array ``y`` in double precision."""
    if np.ndim(y) == 0:
        y = float(y)
        if y <= 0.0 and e.needs_positive_y():
            raise DomainError(f"y={y} must be positive for negative or fractional powers")
        return math.fsum(c * _pow(y, p) * math.exp(m * y) for c, p, m in e.terms)
    ys = np.ascontiguousarray(y, dtype=float)
    if e.needs_positive_y() and np.any(ys <= 0.0):
        raise DomainError("y must be positive for negative or fractional powers")
    if not e.terms:
        return np.zeros_like(ys)
    c, p, m = (np.array(col, dtype=float) for col in zip(*e.terms))
    return kernels.eval_terms(c, p, m, ys.ravel()).reshape(ys.shape)


def _pow(y: float, p: float) -> float:
    if p == 0.0:
        return 1.0
    return y**p


# calculus -----------------------------------------------------------------

def differentiate(e: ExpLaurentExpr) -> ExpLaurentExpr:
    out = []
    for c, p, m in e.terms:
        if p != 0.0:
            out.append((c * p, p - 1.0, m))
        if m != 0.0:
            out.append((c * m, p, m))
    return ExpLaurentExpr(out)


def antiderivative(e: ExpLaurentExpr) -> ExpLaurentExpr:
    """Antiderivative with zero integration constant.

    Raises UnsupportedTerm for ``y**-1`` and for exponential terms whose
    power is not a nonnegative integer.
    """
    out = []
    for c, p, m in e.terms:
        if m == 0.0:
            if p == -1.0:
                raise UnsupportedTerm("y^-1 integrates to a logarithm")
            out.append((c / (p + 1.0), p + 1.0, 0.0))
            continue
        if p < 0 or not _is_int(p):
            raise UnsupportedTerm(f"y^{p}*exp({m}*y) has no exp-Laurent antiderivative")
        # int y^q e^{my} = e^{my} sum_j (-1)^j q!/(q-j)! y^{q-j} / m^{j+1}
        q = int(p)
        falling = 1.0
        for j in range(q + 1):
            out.append((c * (-1) ** j * falling / m ** (j + 1), float(q - j), m))
            falling *= q - j
    return ExpLaurentExpr(out)


def scale(a: ExpLaurentExpr, c: float) -> ExpLaurentExpr:
    return a * float(c)


def combine(a: ExpLaurentExpr, b: ExpLaurentExpr, mode: str = "add") -> ExpLaurentExpr:
    if mode == "add":
        return a + b
    if mode == "multiply":
        return a * b
    raise ValueError(f"unknown mode {mode!r}")


def constancy_check(e: ExpLaurentExpr, tol_abs: float = 0.0) -> float | None:
    """Return the constant value if every non-constant term is below ``tol_abs``."""
    value = 0.0
    for c, p, m in e.terms:
        if p == 0.0 and m == 0.0:
            value = c
        elif abs(c) > tol_abs:
            return None
    return value


def laurent_fit(e: ExpLaurentExpr, powers: Iterable[float]) -> dict[float, float] | None:
    """Coefficients of ``e`` in the monomial basis ``y**p, p in powers``.

    Returns None when ``e`` has a term outside that basis, including any
    exponential term.
    """
    basis = [_snap(p) for p in powers]
    if len(set(basis)) != len(basis):
        raise ValueError("powers must be distinct")
    coeffs = {p: 0.0 for p in basis}
    for c, p, m in e.terms:
        if m != 0.0 or p not in coeffs:
            return None
        coeffs[p] = c
    return coeffs


# printing -----------------------------------------------------------------

def _fmt(x: float) -> str:
    if _is_int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(float(x))


def to_text(e: ExpLaurentExpr) -> str:
    """Canonical text; ``parse(to_text(e)) == e``."""
    if not e.terms:
        return "0"
    parts = []
    for i, (c, p, m) in enumerate(e.terms):
        factors = []
        if p == 1.0:
            factors.append("y")
        elif p != 0.0:
            factors.append(f"y^{_fmt(p)}")
        if m != 0.0:
            factors.append(f"exp({_fmt(m)}*y)")
        mag = abs(c)
        if mag != 1.0 or not factors:
            factors.insert(0, _fmt(mag))
        body = "*".join(factors)
        if i == 0:
            parts.append(("-" if c < 0 else "") + body)
        else:
            parts.append((" - " if c < 0 else " + ") + body)
    return "".join(parts)


# parsing ------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<exp>exp)|(?P<y>y)|(?P<op>[-+*^()]))"
)


def _tokenize(text: str):
    pos = 0
    toks = []
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        mt = _TOKEN.match(text, pos)
        if mt is None or mt.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", text, pos)
        kind = mt.lastgroup
        start = mt.start(kind)
        toks.append((kind, mt.group(kind), start))
        pos = mt.end()
    toks.append(("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, kind, value=None):
        tok = self.toks[self.i]
        if tok[0] != kind or (value is not None and tok[1] != value):
            want = value if value is not None else kind
            got = tok[1] or "end of input"
            raise ExprSyntaxError(f"expected {want!r}, got {got!r}", self.text, tok[2])
        self.i += 1
        return tok

    def number(self):
        tok = self.take("num")
        val = float(tok[1])
        if math.isinf(val):
            raise OverflowError(f"literal {tok[1]} at position {tok[2]} exceeds double range")
        return val

    def snumber(self):
        if self.peek()[:2] == ("op", "-"):
            self.i += 1
            return -self.number()
        return self.number()

    def factor(self):
        kind, val, pos = self.peek()
        if kind == "num":
            return (self.number(), 0.0, 0.0)
        if kind == "y":
            self.i += 1
            if self.peek()[:2] == ("op", "^"):
                self.i += 1
                return (1.0, self.snumber(), 0.0)
            return (1.0, 1.0, 0.0)
        if kind == "exp":
            self.i += 1
            self.take("op", "(")
            rate = self.snumber()
            self.take("op", "*")
            self.take("y")
            self.take("op", ")")
            return (1.0, 0.0, rate)
        raise ExprSyntaxError(f"expected a factor, got {val or 'end of input'!r}", self.text, pos)

    def term(self):
        c, p, m = self.factor()
        while self.peek()[:2] == ("op", "*"):
            self.i += 1
            c2, p2, m2 = self.factor()
            c, p, m = c * c2, p + p2, m + m2
        return (c, p, m)

    def expr(self):
        sign = 1.0
        if self.peek()[:2] == ("op", "-"):
            self.i += 1
            sign = -1.0
        c, p, m = self.term()
        terms = [(sign * c, p, m)]
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            sign = 1.0 if self.peek()[1] == "+" else -1.0
            self.i += 1
            c, p, m = self.term()
            terms.append((sign * c, p, m))
        tok = self.peek()
        if tok[0] != "end":
            raise ExprSyntaxError(f"unexpected {tok[1]!r}", self.text, tok[2])
        return ExpLaurentExpr(terms)


def parse(text: str) -> ExpLaurentExpr:
    """Parse expression text into normalized form."""
    return _Parser(text).expr()
