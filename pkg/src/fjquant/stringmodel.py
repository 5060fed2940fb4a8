"""Discretized massive open string in a constant B-field on a D2-brane.

Brane indices are 1, 2 with the identity metric; the B-field is
``B_{mu nu} = b * eps_{mu nu}`` (``B_12 = b``).  In this representation
``M = 1 - B^2`` is taken as ``(1 - b^2)`` times the identity, so

    (B^-1 M)_12 = -(1 - b^2)/b,      (B M^-1)_12 = b/(1 - b^2).

Node ``n`` carries position symbols ``X{n}_1, X{n}_2``, velocity symbols
``Xd{n}_1, Xd{n}_2`` and momentum symbols ``P{n}_1, P{n}_2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .model import SymplecticModel, make_model
from .symexpr import Expr, ExprError, as_expr, parse_expr, substitute, truncate_degree

DIM = 2
LEFT, RIGHT = "left", "right"


class StringModelError(ValueError):
    pass


def _coerce(x) -> Expr:
    if isinstance(x, float):
        from fractions import Fraction
        return Expr.const(Fraction(x).limit_denominator(10**12))
    return as_expr(x)


@dataclass(frozen=True)
class StringParams:
    """String parameters; each may be a symbol name, Expr, or number."""

    b: object = "b"
    m: object = "m"
    eps: object = "eps"
    alpha_prime: object = "alpha_prime"
    N: int = 2

    def __post_init__(self):
        if not isinstance(self.N, int) or self.N < 2:
            raise StringModelError("N must be an integer >= 2")

    def expr(self, name: str) -> Expr:
        return _coerce(getattr(self, name))

    def floats(self) -> Tuple[float, float, float]:
        """(b, m, eps) as floats; raises if any is symbolic."""
        out = []
        for name in ("b", "m", "eps"):
            v = getattr(self, name)
            if isinstance(v, (Expr, str)):
                e = _coerce(v)
                if not e.is_constant():
                    raise StringModelError(f"parameter {name} is symbolic")
                v = e.as_fraction()
            out.append(float(v))
        if out[2] <= 0:
            raise StringModelError("eps must be positive")
        return tuple(out)


# --- D2 representation ---------------------------------------------------------

def x(n: int, mu: int) -> Expr:
    return Expr.symbol(f"X{n}_{mu}")


def xd(n: int, mu: int) -> Expr:
    return Expr.symbol(f"Xd{n}_{mu}")


def mom(n: int, mu: int) -> Expr:
    return Expr.symbol(f"P{n}_{mu}")


def b_matrix(b) -> List[List[Expr]]:
    b = _coerce(b)
    return [[Expr.const(0), b], [-b, Expr.const(0)]]


def b_inverse(b) -> List[List[Expr]]:
    b = _coerce(b)
    if b.is_zero():
        raise StringModelError("B-field is identically zero; B^-1 does not exist")
    return [[Expr.const(0), -1 / b], [1 / b, Expr.const(0)]]


def m_factor(b) -> Expr:
    """Scalar M = 1 - b^2 of the D2 representation."""
    b = _coerce(b)
    return 1 - b * b


def binv_m(b) -> List[List[Expr]]:
    mf = m_factor(b)
    return [[e * mf for e in row] for row in b_inverse(b)]


def b_minv(b) -> List[List[Expr]]:
    mf = m_factor(b)
    return [[e / mf for e in row] for row in b_matrix(b)]


def _matmul2(a, c):
    return [[a[i][0] * c[0][j] + a[i][1] * c[1][j] for j in range(DIM)] for i in range(DIM)]


# --- discrete action --------------------------------------------------------------

@dataclass(frozen=True)
class Term:
    kind: str    # kinetic | gradient | mass | bfield
    owner: int   # node the term is attributed to
    expr: Expr


@dataclass
class DiscreteLagrangian:
    terms: List[Term]
    params: StringParams

    @property
    def total(self) -> Expr:
        out = Expr.const(0)
        for t in self.terms:
            out = out + t.expr
        return out

    def restrict(self, nodes) -> List[Term]:
        nodes = set(nodes)
        return [t for t in self.terms if t.owner in nodes]

    def count(self, kind: str) -> int:
        return sum(t.kind == kind for t in self.terms)


def _dot(u, v) -> Expr:
    return u[0] * v[0] + u[1] * v[1]


def _bform(B, u, v) -> Expr:
    """B_{mu nu} u^mu v^nu."""
    out = Expr.const(0)
    for i in range(DIM):
        for j in range(DIM):
            if not B[i][j].is_zero():
                out = out + B[i][j] * u[i] * v[j]
    return out


def build_discrete_action(p: StringParams) -> DiscreteLagrangian:
    """Node/link terms of the discrete Lagrangian (overall 1/(4 pi alpha') omitted)."""
    N = p.N
    eps, m = p.expr("eps"), p.expr("m")
    B = b_matrix(p.expr("b"))
    X = [[x(n, mu) for mu in (1, 2)] for n in range(N + 1)]
    V = [[xd(n, mu) for mu in (1, 2)] for n in range(N + 1)]
    terms: List[Term] = []
    for n in range(N + 1):
        terms.append(Term("kinetic", n, -eps * _dot(V[n], V[n])))
    for n in range(N):
        d = [X[n + 1][i] - X[n][i] for i in range(DIM)]
        terms.append(Term("gradient", n, _dot(d, d) / eps))
    for n in range(N + 1):
        terms.append(Term("mass", n, m * m * eps * _dot(X[n], X[n])))
    for n in range(N + 1):
        # the last node couples to its only (backward) link
        lo, hi = (n, n + 1) if n < N else (N - 1, N)
        d = [X[hi][i] - X[lo][i] for i in range(DIM)]
        terms.append(Term("bfield", n, 2 * _bform(B, V[n], d)))
    return DiscreteLagrangian(terms, p)


# --- equations of motion and boundary conditions --------------------------------

def _numeric_b(b: float) -> np.ndarray:
    return np.array([[0.0, b], [-b, 0.0]])


def eom_residual(state, n: int, p: StringParams) -> np.ndarray:
    """eps * accel_n minus the force on node n (restoring mass term)."""
    _, m, eps = p.floats()
    X = np.asarray(state.positions, dtype=float)
    A = np.asarray(state.accelerations, dtype=float)
    N = X.shape[0] - 1
    if not 0 <= n <= N:
        raise StringModelError(f"node index {n} out of range 0..{N}")
    if n == 0:
        force = (X[1] - X[0]) / eps
    elif n == N:
        force = (X[N - 1] - X[N]) / eps
    else:
        force = (X[n + 1] - 2 * X[n] + X[n - 1]) / eps
    force = force - eps * m * m * X[n]
    return eps * A[n] - force


def boundary_residual(state, end: str, p: StringParams) -> np.ndarray:
    """(X_1 - X_0)/eps - B Xdot_0 at the left end, (X_N - X_{N-1})/eps - B Xdot_N at the right."""
    b, _, eps = p.floats()
    X = np.asarray(state.positions, dtype=float)
    Vel = np.asarray(state.velocities, dtype=float)
    B = _numeric_b(b)
    if end == LEFT:
        return (X[1] - X[0]) / eps - B @ Vel[0]
    if end == RIGHT:
        return (X[-1] - X[-2]) / eps - B @ Vel[-1]
    raise StringModelError(f"invalid end tag {end!r}")


# --- endpoint reduction ------------------------------------------------------------

ENDPOINT_DYNAMICAL = ("X0_1", "X0_2", "X1_1", "X1_2", "P0_1", "P0_2")
SPECTATORS = ("X2_1", "X2_2", "P1_1", "P1_2")


def _parameter_names(p: StringParams) -> List[str]:
    names: List[str] = []
    for key in ("b", "m", "eps", "alpha_prime"):
        for s in sorted(p.expr(key).free_symbols):
            if s not in names:
                names.append(s)
    names.append("pi")
    return names + list(SPECTATORS)


def hamiltonian_hx1(p: StringParams) -> Expr:
    """H for the X_1 sector, in terms of P_1, X_1, X_2 and the mass term on X_0, X_1."""
    eps, m, b = p.expr("eps"), p.expr("m"), p.expr("b")
    B = b_matrix(b)
    P1 = [mom(1, mu) for mu in (1, 2)]
    d = [x(2, mu) - x(1, mu) for mu in (1, 2)]
    X0 = [x(0, mu) for mu in (1, 2)]
    X1 = [x(1, mu) for mu in (1, 2)]
    return (-_dot(P1, P1) / (2 * eps)
            - m_factor(b) * _dot(d, d) / (2 * eps)
            + _bform(B, P1, d) / eps
            + m * m * eps * (_dot(X0, X0) + _dot(X1, X1)))


def bc_substituted_x0_sector(b="b", eps="eps"):
    """Both sides of the X_0-sector identity on the boundary-condition surface.

    lhs: -eps Xd0.Xd0 + (1/eps) D.D + 2 B(Xd0, D) with D = X1 - X0;
    rhs: (B^-1 M)_{mu nu} D^mu Xd0^nu with M = 1 - B.B as a matrix product.
    Both are returned after eliminating Xd0 = B^-1 D / eps.
    """
    b, eps = _coerce(b), _coerce(eps)
    B, Binv = b_matrix(b), b_inverse(b)
    BB = _matmul2(B, B)
    M = [[(1 if i == j else 0) - BB[i][j] for j in range(DIM)] for i in range(DIM)]
    C = _matmul2(Binv, M)
    D = [x(1, mu) - x(0, mu) for mu in (1, 2)]
    V = [xd(0, mu) for mu in (1, 2)]
    lhs = -eps * _dot(V, V) + _dot(D, D) / eps + 2 * _bform(B, V, D)
    rhs = _bform(C, D, V)
    on_bc = {f"Xd0_{mu + 1}": (Binv[mu][0] * D[0] + Binv[mu][1] * D[1]) / eps
             for mu in range(DIM)}
    return substitute(lhs, on_bc), substitute(rhs, on_bc)


def endpoint_one_form(p: StringParams, truncate: bool = True) -> Tuple[Expr, ...]:
    b, m = p.expr("b"), p.expr("m")
    if b.is_zero():
        raise StringModelError("b must be nonzero: the reduction divides by B")
    C = binv_m(b)
    B = b_matrix(b)
    X0 = [x(0, mu) for mu in (1, 2)]
    X1 = [x(1, mu) for mu in (1, 2)]
    X2 = [x(2, mu) for mu in (1, 2)]
    # X_0 sector after the BC substitution: (B^-1 M)_{nu mu} (X1 - X0)^nu
    x0_sector = [C[0][mu] * (X1[0] - X0[0]) + C[1][mu] * (X1[1] - X0[1]) for mu in range(DIM)]
    # the constraint B P_1 + M (X_2 - X_1) = 0 moves the X_1 dependence onto X_2
    # and leaves the spectator momentum P_1 behind
    shift = {f"X1_{mu}": X2[mu - 1] for mu in (1, 2)}
    a_x0 = [substitute(e, shift) + mom(1, mu + 1) for mu, e in enumerate(x0_sector)]
    # P_1 = P_0 + m^2 B X at the endpoint, with the coupling evaluated on X_1
    a_x1 = []
    for mu in range(DIM):
        e = substitute(mom(1, mu + 1), {f"P1_{mu + 1}": mom(0, mu + 1)})
        for nu in range(DIM):
            e = e + m * m * B[nu][mu] * X1[nu]
        a_x1.append(e)
    if truncate and b.free_symbols:
        a_x1 = [truncate_degree(e, b.free_symbols, 1) for e in a_x1]
    return tuple(a_x0 + a_x1 + [Expr.const(0), Expr.const(0)])


def build_endpoint_model(p: StringParams = StringParams(), truncate: bool = True) -> SymplecticModel:
    """First-order model of the two string points next to the sigma = 0 end."""
    one_form = endpoint_one_form(p, truncate)
    potential = hamiltonian_hx1(p)
    b = p.expr("b")
    if truncate and b.free_symbols:
        potential = truncate_degree(potential, b.free_symbols, 1)
    params = _parameter_names(p)
    prefactor = 1 / (4 * Expr.symbol("pi") * p.expr("alpha_prime"))
    return make_model("string_endpoint", ENDPOINT_DYNAMICAL, params, one_form,
                      potential, prefactor)


def params_from_strings(bfield: str = "b", mass: str = "m", eps: str = "eps",
                        alpha_prime: str = "alpha_prime", N: int = 2) -> StringParams:
    """Parse CLI-style parameter expressions over the default parameter names."""
    known = ("b", "m", "eps", "alpha_prime")
    try:
        vals = [parse_expr(s, known) for s in (bfield, mass, eps, alpha_prime)]
    except ExprError as exc:
        raise StringModelError(str(exc)) from exc
    return StringParams(*vals, N=N)
