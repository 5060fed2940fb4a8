"""Exact multivariate rational functions: parse, print, differentiate, substitute."""

from .expr import (
    DYNAMICAL,
    PARAMETER,
    Expr,
    ExprError,
    Symbol,
    as_expr,
    differentiate,
    eval_numeric,
    leading_coefficient,
    parameter_factor,
    poly_gcd,
    poly_lcm,
    split_monomial,
    substitute,
    to_string,
    truncate_degree,
)
from .parser import ParseError, parse_expr

__all__ = [
    "DYNAMICAL",
    "PARAMETER",
    "Expr",
    "ExprError",
    "ParseError",
    "Symbol",
    "as_expr",
    "differentiate",
    "eval_numeric",
    "leading_coefficient",
    "parameter_factor",
    "parse_expr",
    "poly_gcd",
    "poly_lcm",
    "split_monomial",
    "substitute",
    "to_string",
    "truncate_degree",
]
