"""Sparse multivariate polynomials over Q.

A polynomial is a plain ``dict`` mapping a monomial to a nonzero
``Fraction``.  A monomial is a tuple of ``(name, exponent)`` pairs sorted by
name, with every exponent positive; the empty tuple is the constant monomial.
Functions here never mutate their arguments.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Dict, Iterable, Tuple

Monomial = Tuple[Tuple[str, int], ...]
Poly = Dict[Monomial, Fraction]

ONE: Monomial = ()


def const(c) -> Poly:
    c = Fraction(c)
    return {ONE: c} if c else {}


def var(name: str) -> Poly:
    return {((name, 1),): Fraction(1)}


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    out = dict(a)
    for v, e in b:
        out[v] = out.get(v, 0) + e
    return tuple(sorted(out.items()))


def mono_div(a: Monomial, b: Monomial):
    """Return a / b, or None if b does not divide a."""
    if not b:
        return a
    da = dict(a)
    for v, e in b:
        got = da.get(v, 0)
        if got < e:
            return None
        if got == e:
            del da[v]
        else:
            da[v] = got - e
    return tuple(sorted(da.items()))


def mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


def variables(p: Poly) -> set:
    return {v for m in p for v, _ in m}


def add(a: Poly, b: Poly) -> Poly:
    if len(a) < len(b):
        a, b = b, a
    out = dict(a)
    for m, c in b.items():
        s = out.get(m, 0) + c
        if s:
            out[m] = s
        else:
            out.pop(m, None)
    return out


def neg(a: Poly) -> Poly:
    return {m: -c for m, c in a.items()}


def sub(a: Poly, b: Poly) -> Poly:
    return add(a, neg(b))


def scale(a: Poly, c) -> Poly:
    c = Fraction(c)
    if not c:
        return {}
    return {m: v * c for m, v in a.items()}


def mul(a: Poly, b: Poly) -> Poly:
    if not a or not b:
        return {}
    if len(a) == 1 and ONE in a:
        return scale(b, a[ONE])
    if len(b) == 1 and ONE in b:
        return scale(a, b[ONE])
    out: Poly = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = mono_mul(ma, mb)
            s = out.get(m, 0) + ca * cb
            if s:
                out[m] = s
            else:
                out.pop(m, None)
    return out


def mul_term(a: Poly, m: Monomial, c: Fraction) -> Poly:
    return {mono_mul(ma, m): ca * c for ma, ca in a.items()}


def power(a: Poly, n: int) -> Poly:
    result = const(1)
    base = a
    while n:
        if n & 1:
            result = mul(result, base)
        n >>= 1
        if n:
            base = mul(base, base)
    return result


def grlex_key(m: Monomial, order: Tuple[str, ...]):
    # lex part: the alphabetically first name is the most significant variable
    d = dict(m)
    return (mono_degree(m), tuple(d.get(v, 0) for v in order))


def sorted_terms(p: Poly):
    """Terms in descending graded-lex order."""
    order = tuple(sorted(variables(p)))
    return sorted(p.items(), key=lambda t: grlex_key(t[0], order), reverse=True)


def leading_term(p: Poly):
    order = tuple(sorted(variables(p)))
    return max(p.items(), key=lambda t: grlex_key(t[0], order))


def monic(p: Poly) -> Poly:
    if not p:
        return p
    _, lc = leading_term(p)
    return p if lc == 1 else scale(p, 1 / lc)


def derivative(p: Poly, name: str) -> Poly:
    out: Poly = {}
    for m, c in p.items():
        d = dict(m)
        e = d.get(name, 0)
        if not e:
            continue
        if e == 1:
            del d[name]
        else:
            d[name] = e - 1
        nm = tuple(sorted(d.items()))
        out[nm] = out.get(nm, 0) + c * e
    return {m: c for m, c in out.items() if c}


def div_exact(a: Poly, b: Poly) -> Poly:
    """Quotient of an exact division; raises ArithmeticError otherwise."""
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    if len(b) == 1:
        (mb, cb), = b.items()
        out = {}
        for m, c in a.items():
            q = mono_div(m, mb)
            if q is None:
                raise ArithmeticError("inexact polynomial division")
            out[q] = c / cb
        return out
    order = tuple(sorted(variables(a) | variables(b)))
    lm_b, lc_b = max(b.items(), key=lambda t: grlex_key(t[0], order))
    quot: Poly = {}
    rem = dict(a)
    while rem:
        lm_r, lc_r = max(rem.items(), key=lambda t: grlex_key(t[0], order))
        t = mono_div(lm_r, lm_b)
        if t is None:
            raise ArithmeticError("inexact polynomial division")
        c = lc_r / lc_b
        quot[t] = quot.get(t, 0) + c
        rem = sub(rem, mul_term(b, t, c))
    return {m: c for m, c in quot.items() if c}


# --- gcd -------------------------------------------------------------------

def _monomial_gcd(ms: Iterable[Monomial]) -> Monomial:
    ms = list(ms)
    common = dict(ms[0])
    for m in ms[1:]:
        d = dict(m)
        common = {v: min(e, d[v]) for v, e in common.items() if v in d}
        if not common:
            break
    return tuple(sorted(common.items()))


def _as_univariate(p: Poly, x: str) -> Dict[int, Poly]:
    out: Dict[int, Poly] = {}
    for m, c in p.items():
        e = 0
        rest = []
        for v, k in m:
            if v == x:
                e = k
            else:
                rest.append((v, k))
        out.setdefault(e, {})[tuple(rest)] = c
    return out


def _from_univariate(u: Dict[int, Poly], x: str) -> Poly:
    out: Poly = {}
    for e, coeff in u.items():
        xm = ((x, e),) if e else ONE
        for m, c in coeff.items():
            out[mono_mul(m, xm)] = c
    return out


def _gcd_list(polys: Iterable[Poly]) -> Poly:
    g: Poly = {}
    for p in polys:
        g = gcd(g, p)
        if len(g) == 1 and ONE in g:
            break
    return g


def _prem(a: Dict[int, Poly], b: Dict[int, Poly]) -> Dict[int, Poly]:
    db = max(b)
    lc = b[db]
    r = dict(a)
    while r and max(r) >= db:
        dr = max(r)
        lr = r[dr]
        shift = dr - db
        new: Dict[int, Poly] = {}
        for e, c in r.items():
            new[e] = mul(c, lc)
        for e, c in b.items():
            k = e + shift
            new[k] = sub(new.get(k, {}), mul(c, lr))
        r = {e: c for e, c in new.items() if c}
    return r


def _integer_primitive(u: Dict[int, Poly]) -> Dict[int, Poly]:
    """Rescale so all rational coefficients are coprime integers (stops PRS swell)."""
    coeffs = [c for p in u.values() for c in p.values()]
    den = 1
    for c in coeffs:
        den = den * c.denominator // math.gcd(den, c.denominator)
    num = 0
    for c in coeffs:
        num = math.gcd(num, (c * den).numerator)
    f = Fraction(den, num or 1)
    if f == 1:
        return u
    return {e: scale(p, f) for e, p in u.items()}


def _primitive(u: Dict[int, Poly]) -> Dict[int, Poly]:
    c = _gcd_list(u.values())
    if not (len(c) == 1 and ONE in c):
        u = {e: div_exact(p, c) for e, p in u.items()}
    return _integer_primitive(u)


def content(p: Poly, over: Iterable[str]) -> Poly:
    """gcd of the coefficients of p viewed as a polynomial in ``over``."""
    over = set(over)
    groups: Dict[Monomial, Poly] = {}
    for m, c in p.items():
        inner = tuple((v, e) for v, e in m if v in over)
        outer = tuple((v, e) for v, e in m if v not in over)
        groups.setdefault(inner, {})[outer] = c
    return monic(_gcd_list(groups.values()))


# Coprimality filter: images modulo a prime at fixed evaluation points.
_PRIME = 2**61 - 1
_PROBES = (3, -5, 7, 11, -13, 17, 23, -29)


def _mod_image(p: Poly, x: str, point: Dict[str, int]) -> Dict[int, int]:
    """p with every variable except x fixed, coefficients reduced mod _PRIME."""
    out: Dict[int, int] = {}
    for m, c in p.items():
        e = 0
        v_mod = c.numerator * pow(c.denominator, -1, _PRIME)
        for v, k in m:
            if v == x:
                e = k
            else:
                v_mod = v_mod * pow(point[v], k, _PRIME)
        out[e] = (out.get(e, 0) + v_mod) % _PRIME
    return {e: c for e, c in out.items() if c}


def _mod_gcd_degree(a: Dict[int, int], b: Dict[int, int]) -> int:
    """Degree of gcd of two univariate polynomials over GF(_PRIME)."""
    q = _PRIME
    while b:
        db = max(b)
        inv = pow(b[db], -1, q)
        a = dict(a)
        while a and max(a) >= db:
            da = max(a)
            f = a[da] * inv % q
            for e, c in b.items():
                k = e + da - db
                v = (a.get(k, 0) - f * c) % q
                if v:
                    a[k] = v
                else:
                    a.pop(k, None)
        a, b = b, a
    return max(a) if a else -1


def _degree_in(p: Poly, x: str) -> int:
    return max((k for m in p for v, k in m if v == x), default=0)


def _provably_coprime(a: Poly, b: Poly, shared) -> bool:
    """True only if gcd(a, b) is a constant.

    For each shared variable x the others are fixed at integers where both
    leading coefficients in x survive mod p.  A nonconstant common factor of
    positive degree in x would keep that degree in the images, so a constant
    image gcd for every x rules it out.
    """
    others = sorted(variables(a) | variables(b))
    for x in sorted(shared):
        da, db = _degree_in(a, x), _degree_in(b, x)
        for shift in range(len(_PROBES)):
            point = {v: _PROBES[(i + shift) % len(_PROBES)] % _PRIME
                     for i, v in enumerate(others)}
            try:
                ua, ub = _mod_image(a, x, point), _mod_image(b, x, point)
            except ValueError:  # a coefficient denominator vanishes mod p
                return False
            if ua and ub and max(ua) == da and max(ub) == db:
                break
        else:
            return False
        if _mod_gcd_degree(ua, ub) > 0:
            return False
    return True


def _strip_monomial(p: Poly):
    mg = _monomial_gcd(list(p))
    if mg == ONE:
        return mg, p
    return mg, {mono_div(m, mg): c for m, c in p.items()}


def gcd(a: Poly, b: Poly) -> Poly:
    """Monic greatest common divisor (gcd(0, 0) = 0)."""
    if not a:
        return monic(b)
    if not b:
        return monic(a)
    if len(a) == 1 or len(b) == 1:
        return {_monomial_gcd(list(a) + list(b)): Fraction(1)}
    va, vb = variables(a), variables(b)
    if not va or not vb:
        return const(1)
    ma, a_rest = _strip_monomial(a)
    mb, b_rest = _strip_monomial(b)
    if ma != ONE or mb != ONE:
        mono = _monomial_gcd([ma, mb])
        return mul({mono: Fraction(1)}, gcd(a_rest, b_rest))
    shared = va & vb
    if not shared or _provably_coprime(a, b, shared):
        return const(1)
    x = min(va | vb)
    if x not in va:
        return gcd(a, content(b, [x]))
    if x not in vb:
        return gcd(content(a, [x]), b)
    ua, ub = _as_univariate(a, x), _as_univariate(b, x)
    ca, cb = _gcd_list(ua.values()), _gcd_list(ub.values())
    c = gcd(ca, cb)
    pa = _integer_primitive({e: div_exact(p, ca) for e, p in ua.items()})
    pb = _integer_primitive({e: div_exact(p, cb) for e, p in ub.items()})
    if max(pa) < max(pb):
        pa, pb = pb, pa
    while pb:
        if max(pb) == 0:
            pa = {0: const(1)}
            break
        r = _prem(pa, pb)
        pa, pb = pb, (_primitive(r) if r else {})
    return monic(mul(_from_univariate(pa, x), c))
