"""Faddeev-Jackiw iteration: symplectic two-form, zero modes, constraints, brackets.

The two-form is built from the one-form without the model prefactor; the
prefactor is folded back in when brackets are read off the inverse.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .model import AnyModel, extend, parameter_loci, to_document
from .symexpr import (
    Expr,
    ExprError,
    differentiate,
    eval_numeric,
    leading_coefficient,
    poly_gcd,
    poly_lcm,
    to_string,
)

log = logging.getLogger(__name__)

NONSINGULAR = "nonsingular"
EXHAUSTED = "exhausted"
INCONSISTENT = "inconsistent"

DEFAULT_MAX_ROUNDS = 10

Matrix = Tuple[Tuple[Expr, ...], ...]


class SingularMatrixError(ArithmeticError):
    pass


class FJError(RuntimeError):
    pass


@dataclass(frozen=True)
class SymplecticForm:
    symbol_order: Tuple[str, ...]
    entries: Matrix

    @property
    def dimension(self) -> int:
        return len(self.symbol_order)

    def __getitem__(self, ij):
        i, j = ij
        if isinstance(i, str):
            i = self.symbol_order.index(i)
        if isinstance(j, str):
            j = self.symbol_order.index(j)
        return self.entries[i][j]


@dataclass(frozen=True)
class ZeroMode:
    components: Tuple[Expr, ...]


class Elimination(NamedTuple):
    rank: int
    modes: List[ZeroMode]
    pivot_vanishing_conditions: List[Expr]
    pivot_columns: List[int]


class ConstraintSet(NamedTuple):
    constraints: List[Expr]
    gauge_modes: List[ZeroMode]


@dataclass
class FJResult:
    final_model: AnyModel
    final_form: SymplecticForm
    inverse: Optional[Matrix]
    rounds: int
    constraint_history: List[List[Expr]]
    status: str
    vanishing_conditions: List[Expr] = field(default_factory=list)
    residual_modes: List[ZeroMode] = field(default_factory=list)
    reason: str = ""


def symplectic_matrix(m: AnyModel) -> SymplecticForm:
    """f_ij = d a_j / d xi_i - d a_i / d xi_j."""
    names = m.symbol_names
    a = m.one_form
    n = len(names)
    # grad[i][j] = d a_j / d xi_i
    grad = [[differentiate(a[j], names[i]) for j in range(n)] for i in range(n)]
    zero = Expr.const(0)
    rows = [[zero] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            v = grad[i][j] - grad[j][i]
            rows[i][j] = v
            rows[j][i] = -v
    return SymplecticForm(names, tuple(tuple(r) for r in rows))


# --- exact elimination -------------------------------------------------------

def _complexity(e: Expr):
    return (0 if e.is_constant() else 1, len(e.free_symbols),
            len(e.numerator().terms()) + len(e.denominator().terms()))


def _choose_pivot(rows, col, start):
    best = None
    for r in range(start, len(rows)):
        e = rows[r][col]
        if e.is_zero():
            continue
        key = _complexity(e)
        if best is None or key < best[0]:
            best = (key, r)
    return None if best is None else best[1]


def _rref(entries, dynamical, augment=None):
    """Gauss-Jordan over the rational-function field.

    Pivots prefer the structurally simplest nonzero entry of each column
    (constants first), ties broken by row order.  Returns the reduced rows,
    the pivot columns, the augmented block, and the parameter-only factors
    of every pivot.
    """
    rows = [list(r) for r in entries]
    aug = None if augment is None else [list(r) for r in augment]
    n_rows = len(rows)
    n_cols = len(rows[0]) if rows else 0
    pivots: List[int] = []
    conditions: List[Expr] = []
    r = 0
    for c in range(n_cols):
        if r >= n_rows:
            break
        p = _choose_pivot(rows, c, r)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        if aug is not None:
            aug[r], aug[p] = aug[p], aug[r]
        piv = rows[r][c]
        for cond in (parameter_loci(piv.numerator(), dynamical)
                     + parameter_loci(piv.denominator(), dynamical)):
            if cond not in conditions:
                conditions.append(cond)
        inv = 1 / piv
        rows[r] = [x * inv for x in rows[r]]
        if aug is not None:
            aug[r] = [x * inv for x in aug[r]]
        for k in range(n_rows):
            if k == r:
                continue
            factor = rows[k][c]
            if factor.is_zero():
                continue
            rows[k] = [x - factor * y if not y.is_zero() else x
                       for x, y in zip(rows[k], rows[r])]
            if aug is not None:
                aug[k] = [x - factor * y if not y.is_zero() else x
                          for x, y in zip(aug[k], aug[r])]
        pivots.append(c)
        r += 1
    return rows, pivots, aug, conditions


def normalize_mode(components: Sequence[Expr]) -> Tuple[Expr, ...]:
    """Clear denominators, remove the polynomial content, make the lead monic."""
    comps = list(components)
    den = Expr.const(1)
    for x in comps:
        if not x.is_zero():
            den = poly_lcm(den, x.denominator())
    comps = [x * den for x in comps]
    g = Expr.const(0)
    for x in comps:
        if not x.is_zero():
            g = poly_gcd(g, x) if not g.is_zero() else poly_gcd(x, x)
    comps = [x / g for x in comps]
    lead = leading_coefficient(next(x for x in comps if not x.is_zero()))
    return tuple(x / lead for x in comps)


def rank_and_nullspace(f: SymplecticForm) -> Elimination:
    """Generic rank over the function field, nullspace basis, pivot loci."""
    n = f.dimension
    if n == 0:
        return Elimination(0, [], [], [])
    rows, pivots, _, conditions = _rref(f.entries, f.symbol_order)
    free = [c for c in range(n) if c not in pivots]
    modes = []
    zero, one = Expr.const(0), Expr.const(1)
    for fc in free:
        v = [zero] * n
        v[fc] = one
        for r, pc in enumerate(pivots):
            v[pc] = -rows[r][fc]
        modes.append(ZeroMode(normalize_mode(v)))
    return Elimination(len(pivots), modes, conditions, pivots)


def invert(f: SymplecticForm) -> Matrix:
    """Exact inverse over the rational-function field."""
    n = f.dimension
    zero, one = Expr.const(0), Expr.const(1)
    ident = [[one if i == j else zero for j in range(n)] for i in range(n)]
    rows, pivots, aug, _ = _rref(f.entries, f.symbol_order, ident)
    if len(pivots) != n:
        raise SingularMatrixError(f"matrix has rank {len(pivots)} < {n}")
    return tuple(tuple(r) for r in aug)


def matmul(a: Sequence[Sequence[Expr]], b: Sequence[Sequence[Expr]]) -> Matrix:
    n, k, m = len(a), len(b), len(b[0]) if b else 0
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            s = Expr.const(0)
            for l in range(k):
                if not a[i][l].is_zero() and not b[l][j].is_zero():
                    s = s + a[i][l] * b[l][j]
            row.append(s)
        out.append(tuple(row))
    return tuple(out)


# --- constraints and iteration ------------------------------------------------

def _proportional(a: Expr, b: Expr, dynamical) -> bool:
    return not ((a / b).free_symbols & set(dynamical))


def derive_constraints(modes: Sequence[ZeroMode], m: AnyModel) -> ConstraintSet:
    """Omega = v . dV/dxi per mode; zero constraints dropped, proportional ones merged."""
    names = m.symbol_names
    grad_v = [differentiate(m.potential, s) for s in names]
    out: List[Expr] = []
    gauge: List[ZeroMode] = []
    for mode in modes:
        omega = Expr.const(0)
        for v, g in zip(mode.components, grad_v):
            if not v.is_zero() and not g.is_zero():
                omega = omega + v * g
        if omega.is_zero():
            gauge.append(mode)
            continue
        if any(_proportional(omega, c, names) for c in out):
            continue
        out.append(omega)
    return ConstraintSet(out, gauge)


def _flatten_history(history):
    return [c for rnd in history for c in rnd]


def iterate(m: AnyModel, max_rounds: int = DEFAULT_MAX_ROUNDS) -> FJResult:
    """Extend the model by its constraints until the two-form is invertible."""
    if max_rounds < 1:
        raise FJError("max_rounds must be >= 1")
    current = m
    history: List[List[Expr]] = []
    conditions: List[Expr] = []
    while True:
        f = symplectic_matrix(current)
        el = rank_and_nullspace(f)
        for cond in el.pivot_vanishing_conditions:
            if cond not in conditions:
                conditions.append(cond)
        log.debug("round %d: dimension %d rank %d", current.round, f.dimension, el.rank)
        if el.rank == f.dimension:
            return FJResult(current, f, invert(f), current.round, history, NONSINGULAR,
                            conditions)
        if current.round >= max_rounds:
            return FJResult(current, f, None, current.round, history, EXHAUSTED,
                            conditions, el.modes, f"still singular after {max_rounds} rounds")
        cs = derive_constraints(el.modes, current)
        names = set(current.symbol_names)
        for c in cs.constraints:
            if not (c.free_symbols & names):
                return FJResult(current, f, None, current.round, history, INCONSISTENT,
                                conditions, el.modes,
                                f"constraint {c} = 0 has no dynamical content")
        known = _flatten_history(history)
        fresh = [c for c in cs.constraints
                 if not any(_proportional(c, k, current.symbol_names) for k in known)]
        if not fresh:
            return FJResult(current, f, None, current.round, history, INCONSISTENT,
                            conditions, el.modes,
                            "gauge: zero modes yield no new constraints")
        history.append(fresh)
        current = extend(current, fresh)


# --- brackets ------------------------------------------------------------------

@dataclass(frozen=True)
class BracketTable:
    symbol_order: Tuple[str, ...]
    values: Dict[Tuple[str, str], Expr]
    prefactor: Expr

    def __call__(self, a: str, b: str) -> Expr:
        if a == b:
            return Expr.const(0)
        i, j = self.symbol_order.index(a), self.symbol_order.index(b)
        if i < j:
            return self.values[(a, b)]
        return -self.values[(b, a)]

    def matrix(self) -> Matrix:
        s = self.symbol_order
        return tuple(tuple(self(a, b) for b in s) for a in s)


def brackets(r: FJResult) -> BracketTable:
    """Brackets of the basic variables: inverse entries divided by the prefactor."""
    if r.status != NONSINGULAR or r.inverse is None:
        raise FJError(f"brackets need a nonsingular result (status {r.status})")
    s = r.final_form.symbol_order
    pref = r.final_model.prefactor
    values = {}
    for i in range(len(s)):
        for j in range(i + 1, len(s)):
            values[(s[i], s[j])] = r.inverse[i][j] / pref
    return BracketTable(s, values, pref)


def observable_bracket(t: BracketTable, a: Expr, b: Expr, point: Mapping) -> float:
    """Numeric [A, B] = dA/dxi_i {xi_i, xi_j} dB/dxi_j at a point."""
    s = t.symbol_order
    da = [float(eval_numeric(differentiate(a, x), point)) for x in s]
    db = [float(eval_numeric(differentiate(b, x), point)) for x in s]
    pi = np.array([[float(eval_numeric(e, point)) for e in row] for row in t.matrix()])
    return float(np.asarray(da) @ pi @ np.asarray(db))


def jacobi_residual(t: BracketTable, f_inverse: Optional[Sequence[Sequence[Expr]]] = None,
                    points: Sequence[Mapping] = ()) -> float:
    """Max |sum_cyclic sum_l w_il d_l w_jk| over points and triples, w = f_inverse."""
    w = t.matrix() if f_inverse is None else f_inverse
    s = t.symbol_order
    n = len(s)
    dw = [[[differentiate(w[j][k], s[l]) for l in range(n)] for k in range(n)]
          for j in range(n)]
    worst = 0.0
    for pt in points:
        try:
            W = np.array([[float(eval_numeric(e, pt)) for e in row] for row in w])
            D = np.array([[[float(eval_numeric(e, pt)) for e in col] for col in row]
                          for row in dw])
        except ExprError as exc:
            raise FJError(f"evaluation at a singular point: {exc}") from exc
        # J[i,j,k] = sum_l W[i,l] D[j,k,l] + cyclic
        term = np.einsum("il,jkl->ijk", W, D)
        J = term + np.transpose(term, (1, 2, 0)) + np.transpose(term, (2, 0, 1))
        worst = max(worst, float(np.max(np.abs(J))) if J.size else 0.0)
    return worst


# --- numeric rank ----------------------------------------------------------------

def _eval_matrix(m, point):
    return np.array([[float(eval_numeric(e, point)) for e in row] for row in m])


def numeric_rank(m: Sequence[Sequence[Expr]], point: Mapping, tol: float = 1e-9) -> int:
    a = _eval_matrix(m, point)
    if a.size == 0:
        return 0
    return int(np.linalg.matrix_rank(a, tol=tol * max(1.0, np.max(np.abs(a)))))


def rank_at(f: SymplecticForm, inverse: Optional[Matrix], point: Mapping) -> Tuple[int, bool]:
    """Rank of the structure at a point, and whether f is singular there.

    Where f is finite its numeric rank is used.  Where f has a pole but the
    inverse is finite, the Poisson matrix f^-1 carries the degenerate
    structure and its rank is reported.
    """
    try:
        r = numeric_rank(f.entries, point)
        return r, r < f.dimension
    except ExprError:
        if inverse is None:
            raise
    r = numeric_rank(inverse, point)
    return r, True


# --- reporting -------------------------------------------------------------------

def _mat_strings(m):
    return [[to_string(e) for e in row] for row in m]


def report(r: FJResult, table: Optional[BracketTable] = None) -> dict:
    out = {
        "model": to_document(r.final_model),
        "symbol_order": list(r.final_form.symbol_order),
        "status": r.status,
        "rounds": r.rounds,
        "constraint_history": [[to_string(c) for c in rnd] for rnd in r.constraint_history],
        "vanishing_conditions": [to_string(c) for c in r.vanishing_conditions],
        "symplectic_matrix": _mat_strings(r.final_form.entries),
        "inverse": None if r.inverse is None else _mat_strings(r.inverse),
        "residual_modes": [[to_string(x) for x in m.components] for m in r.residual_modes],
        "reason": r.reason,
    }
    if table is not None:
        out["prefactor"] = to_string(table.prefactor)
        out["brackets"] = [
            {"left": a, "right": b, "value": to_string(v)}
            for (a, b), v in table.values.items() if not v.is_zero()
        ]
    return out


def format_text(rep: dict) -> str:
    lines = [f"model: {rep['model']['name']}",
             f"status: {rep['status']} (rounds: {rep['rounds']})",
             "symbols: " + ", ".join(rep["symbol_order"])]
    for k, rnd in enumerate(rep["constraint_history"], 1):
        lines.append(f"round {k} constraints: " + ", ".join(rnd))
    if rep["vanishing_conditions"]:
        lines.append("rank may drop where: " + ", ".join(f"{c} = 0" for c in rep["vanishing_conditions"]))
    lines.append("symplectic matrix f:")
    lines += ["  [" + ", ".join(row) + "]" for row in rep["symplectic_matrix"]]
    if rep["inverse"] is not None:
        lines.append("inverse f^-1:")
        lines += ["  [" + ", ".join(row) + "]" for row in rep["inverse"]]
    if "brackets" in rep:
        lines.append(f"brackets (prefactor {rep['prefactor']}):")
        lines += [f"  [{b['left']}, {b['right']}] = {b['value']}" for b in rep["brackets"]]
    if rep["residual_modes"]:
        lines.append("residual zero modes:")
        lines += ["  (" + ", ".join(m) + ")" for m in rep["residual_modes"]]
    if rep["reason"]:
        lines.append(f"note: {rep['reason']}")
    return "\n".join(lines)


def analyze(m: AnyModel, max_rounds: int = DEFAULT_MAX_ROUNDS):
    """iterate + brackets; returns (result, table or None)."""
    r = iterate(m, max_rounds)
    return r, (brackets(r) if r.status == NONSINGULAR else None)


__all__ = [
    "BracketTable", "Elimination", "FJError", "FJResult", "SingularMatrixError",
    "SymplecticForm", "ZeroMode", "analyze", "brackets", "derive_constraints", "invert",
    "iterate", "jacobi_residual", "matmul", "numeric_rank", "observable_bracket",
    "rank_and_nullspace", "rank_at", "report", "symplectic_matrix", "format_text",
]
