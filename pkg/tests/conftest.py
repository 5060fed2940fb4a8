from fractions import Fraction

import hypothesis.strategies as st
import pytest

from fjquant.symexpr import DYNAMICAL, PARAMETER, Expr, Symbol

NAMES = ("x", "y", "z")


@st.composite
def polynomials(draw, names=NAMES, max_terms=4, max_exp=3):
    """Random sparse polynomial over ``names`` with small rational coefficients."""
    out = Expr.const(0)
    for _ in range(draw(st.integers(0, max_terms))):
        c = Fraction(draw(st.integers(-6, 6)), draw(st.integers(1, 4)))
        term = Expr.const(c)
        for n in names:
            e = draw(st.integers(0, max_exp))
            if e:
                term = term * Expr.symbol(n) ** e
        out = out + term
    return out


@st.composite
def rational_functions(draw, names=NAMES):
    num = draw(polynomials(names))
    den = draw(polynomials(names, max_terms=3, max_exp=2))
    if den.is_zero():
        den = Expr.const(1)
    return num / den


@pytest.fixture
def xyz():
    return [Symbol(n, DYNAMICAL) for n in NAMES]


@pytest.fixture
def bm():
    return [Symbol("b", PARAMETER), Symbol("m", PARAMETER)]
