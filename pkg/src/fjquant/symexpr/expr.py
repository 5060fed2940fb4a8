"""Canonical rational functions with exact rational coefficients."""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping, Union

from . import _poly as P

NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

DYNAMICAL = "dynamical"
PARAMETER = "parameter"


class ExprError(ValueError):
    """Invalid symbolic operation (bad symbol, zero denominator, ...)."""


@dataclass(frozen=True)
class Symbol:
    name: str
    kind: str = DYNAMICAL

    def __post_init__(self):
        if not isinstance(self.name, str) or not NAME_RE.match(self.name):
            raise ExprError(f"invalid symbol name {self.name!r}")
        if self.kind not in (DYNAMICAL, PARAMETER):
            raise ExprError(f"invalid symbol kind {self.kind!r}")

    def __str__(self):
        return self.name


def _name(s) -> str:
    return s.name if isinstance(s, Symbol) else s


class Expr:
    """Immutable reduced quotient ``num/den`` of polynomials over Q.

    The denominator is monic under graded-lex order (alphabetically first
    name most significant) and ``gcd(num, den) = 1``, so two Exprs are equal
    iff they are structurally identical.
    """

    __slots__ = ("_num", "_den", "_hash")

    def __init__(self, num=None, den=None, _reduced=False, _coprime=False):
        num = {} if num is None else num
        den = P.const(1) if den is None else den
        if not den:
            raise ExprError("division by the zero polynomial")
        if not num:
            num, den = {}, P.const(1)
        elif not _reduced:
            if not _coprime and not (len(den) == 1 and P.ONE in den):
                g = P.gcd(num, den)
                if not (len(g) == 1 and P.ONE in g):
                    num, den = P.div_exact(num, g), P.div_exact(den, g)
            _, lc = P.leading_term(den)
            if lc != 1:
                num, den = P.scale(num, 1 / lc), P.scale(den, 1 / lc)
        self._num = num
        self._den = den
        self._hash = None

    # -- construction -------------------------------------------------------

    @classmethod
    def const(cls, value) -> "Expr":
        return cls(P.const(Fraction(value)), _reduced=True)

    @classmethod
    def symbol(cls, s) -> "Expr":
        name = _name(s)
        if not NAME_RE.match(name):
            raise ExprError(f"invalid symbol name {name!r}")
        return cls(P.var(name), _reduced=True)

    # -- inspection ---------------------------------------------------------

    @property
    def free_symbols(self) -> frozenset:
        return frozenset(P.variables(self._num) | P.variables(self._den))

    def is_zero(self) -> bool:
        return not self._num

    def is_constant(self) -> bool:
        return not self.free_symbols

    def is_polynomial(self) -> bool:
        return len(self._den) == 1 and P.ONE in self._den

    def numerator(self) -> "Expr":
        return Expr(self._num, _reduced=True)

    def denominator(self) -> "Expr":
        return Expr(self._den, _reduced=True)

    def as_fraction(self) -> Fraction:
        if not self.is_constant():
            raise ExprError(f"{self} is not a constant")
        return self._num.get(P.ONE, Fraction(0))

    def terms(self):
        """Numerator terms as ``(coefficient, {name: exp})`` in grlex order."""
        return [(c, dict(m)) for m, c in P.sorted_terms(self._num)]

    def degree_in(self, targets: Iterable) -> int:
        names = {_name(t) for t in targets}
        if not self._num:
            return -1
        return max(sum(e for v, e in m if v in names) for m in self._num)

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        other = as_expr(other)
        if self._den == other._den:
            return Expr(P.add(self._num, other._num), self._den)
        return Expr(
            P.add(P.mul(self._num, other._den), P.mul(other._num, self._den)),
            P.mul(self._den, other._den),
        )

    __radd__ = __add__

    def __neg__(self):
        return Expr(P.neg(self._num), self._den, _reduced=True)

    def __sub__(self, other):
        return self + (-as_expr(other))

    def __rsub__(self, other):
        return as_expr(other) - self

    def __mul__(self, other):
        other = as_expr(other)
        if self.is_polynomial() and other.is_polynomial():
            return Expr(P.mul(self._num, other._num), _reduced=True)
        g1 = P.gcd(self._num, other._den)
        g2 = P.gcd(other._num, self._den)
        num = P.mul(P.div_exact(self._num, g1), P.div_exact(other._num, g2))
        den = P.mul(P.div_exact(self._den, g2), P.div_exact(other._den, g1))
        return Expr(num, den, _coprime=True)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_expr(other)
        if other.is_zero():
            raise ExprError("division by the zero polynomial")
        return self * Expr(other._den, other._num)

    def __rtruediv__(self, other):
        return as_expr(other) / self

    def __pow__(self, n):
        if not isinstance(n, int):
            raise ExprError("only integer powers are supported")
        if n < 0:
            return Expr.const(1) / (self ** -n)
        return Expr(P.power(self._num, n), P.power(self._den, n), _reduced=True)

    # -- comparison ---------------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, (int, Rational)):
            other = Expr.const(other)
        if not isinstance(other, Expr):
            return NotImplemented
        return self._num == other._num and self._den == other._den

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((frozenset(self._num.items()), frozenset(self._den.items())))
        return self._hash

    def __bool__(self):
        return bool(self._num)

    # -- printing -----------------------------------------------------------

    def __str__(self):
        return to_string(self)

    def __repr__(self):
        return f"Expr({to_string(self)!r})"


ExprLike = Union[Expr, int, Fraction, str]


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, Symbol):
        return Expr.symbol(x)
    if isinstance(x, bool):
        raise ExprError("booleans are not expressions")
    if isinstance(x, (int, Rational)):
        return Expr.const(x)
    if isinstance(x, str) and NAME_RE.match(x):
        return Expr.symbol(x)
    raise ExprError(f"cannot convert {x!r} to an expression")


# --- printing ----------------------------------------------------------------

def _coeff_str(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _mono_str(m) -> str:
    return "*".join(v if e == 1 else f"{v}^{e}" for v, e in m)


def _poly_str(p) -> str:
    if not p:
        return "0"
    parts = []
    for i, (m, c) in enumerate(P.sorted_terms(p)):
        sign = "-" if c < 0 else "+"
        a = abs(c)
        if not m:
            body = _coeff_str(a)
        elif a == 1:
            body = _mono_str(m)
        else:
            body = f"{_coeff_str(a)}*{_mono_str(m)}"
        if i == 0:
            parts.append(body if sign == "+" else "-" + body)
        else:
            parts.append(f" {sign} {body}")
    return "".join(parts)


def to_string(e: Expr) -> str:
    num = _poly_str(e._num)
    if e.is_polynomial():
        return num
    if len(e._num) > 1:
        num = f"({num})"
    elif len(e._num) == 1:
        (m, c), = e._num.items()
        # a lone fractional coefficient would otherwise read as a nested division
        if c.denominator != 1:
            num = f"({num})"
    den_terms = list(e._den.items())
    if len(den_terms) == 1 and len(den_terms[0][0]) == 1:
        den = _mono_str(den_terms[0][0])
    else:
        den = f"({_poly_str(e._den)})"
    return f"{num}/{den}"


# --- operations --------------------------------------------------------------

def differentiate(e: Expr, s) -> Expr:
    """Exact partial derivative of ``e`` with respect to symbol ``s``."""
    name = _name(s)
    if not isinstance(name, str) or not NAME_RE.match(name):
        raise ExprError(f"invalid symbol {s!r}")
    dn = P.derivative(e._num, name)
    if e.is_polynomial():
        return Expr(dn, _reduced=True)
    dd = P.derivative(e._den, name)
    if not dd:
        return Expr(dn, e._den)
    return Expr(P.sub(P.mul(dn, e._den), P.mul(e._num, dd)), P.mul(e._den, e._den))


def _eval_poly_expr(p, bindings: Mapping[str, Expr]) -> Expr:
    total = Expr.const(0)
    cache = {}
    for m, c in p.items():
        term = Expr.const(c)
        for v, k in m:
            if v in bindings:
                key = (v, k)
                if key not in cache:
                    cache[key] = bindings[v] ** k
                term = term * cache[key]
            else:
                term = term * Expr(P.power(P.var(v), k), _reduced=True)
        total = total + term
    return total


def substitute(e: Expr, bindings: Mapping) -> Expr:
    """Simultaneously replace symbols by expressions, then canonicalize."""
    b = {_name(k): as_expr(v) for k, v in bindings.items()}
    if not (e.free_symbols & b.keys()):
        return e
    num = _eval_poly_expr(e._num, b)
    den = _eval_poly_expr(e._den, b)
    if den.is_zero():
        raise ExprError("substitution makes the denominator identically zero")
    return num / den


def truncate_degree(e: Expr, targets: Iterable, max_total_degree: int) -> Expr:
    """Drop numerator monomials whose total degree in ``targets`` exceeds the bound."""
    names = {_name(t) for t in targets}
    if max_total_degree < 0:
        raise ExprError("max_total_degree must be >= 0")
    if P.variables(e._den) & names:
        raise ExprError("denominator depends on a truncation target")
    kept = {m: c for m, c in e._num.items()
            if sum(k for v, k in m if v in names) <= max_total_degree}
    return Expr(kept, e._den)


def _eval_poly(p, values):
    exact = all(isinstance(v, (int, Rational)) for v in values.values())
    total = Fraction(0) if exact else 0.0
    for m, c in p.items():
        t = c if exact else float(c)
        for v, k in m:
            t = t * values[v] ** k
        total += t
    return total


def eval_numeric(e: Expr, assignment: Mapping):
    """Evaluate at a point; exact ``Fraction`` when every binding is rational."""
    values = {_name(k): v for k, v in assignment.items()}
    missing = e.free_symbols - values.keys()
    if missing:
        raise ExprError(f"unbound symbols: {', '.join(sorted(missing))}")
    used = {k: values[k] for k in e.free_symbols}
    for k, v in used.items():
        if isinstance(v, (int, Rational)) and not isinstance(v, bool):
            used[k] = Fraction(v)
        else:
            used[k] = float(v)
    den = _eval_poly(e._den, used)
    if den == 0:
        raise ExprError(f"denominator {_poly_str(e._den)} vanishes at the point")
    return _eval_poly(e._num, used) / den


def parameter_factor(e: Expr, dynamical: Iterable) -> Expr:
    """Monic part of the numerator that is free of the given symbols."""
    if e.is_zero():
        return Expr.const(0)
    return Expr(P.content(e._num, {_name(s) for s in dynamical}), _reduced=True)


def split_monomial(e: Expr):
    """Split a polynomial into (variables of its monomial factor, monic cofactor)."""
    if not e.is_polynomial():
        raise ExprError("split_monomial expects a polynomial")
    if e.is_zero():
        return [], e
    m = P._monomial_gcd(list(e._num))
    rest = P.monic({P.mono_div(k, m): c for k, c in e._num.items()})
    return [v for v, _ in m], Expr(rest, _reduced=True)


def poly_gcd(a: Expr, b: Expr) -> Expr:
    """Monic gcd of two polynomial expressions."""
    if not (a.is_polynomial() and b.is_polynomial()):
        raise ExprError("poly_gcd expects polynomials")
    return Expr(P.gcd(a._num, b._num), _reduced=True)


def poly_lcm(a: Expr, b: Expr) -> Expr:
    """Monic lcm of two nonzero polynomial expressions."""
    g = poly_gcd(a, b)
    return Expr(P.monic(P.div_exact(P.mul(a._num, b._num), g._num)), _reduced=True)


def leading_coefficient(e: Expr) -> Fraction:
    """Graded-lex leading coefficient of the numerator (0 for zero)."""
    if e.is_zero():
        return Fraction(0)
    return P.leading_term(e._num)[1]
