"""First-order Lagrangian models ``L = prefactor * (a_k(xi) dxi^k/dt - V(xi))``.

Models are loaded from a small JSON document::

    {"name": "pair", "dynamical": ["q", "p"], "parameters": [],
     "one_form": ["p", "0"], "potential": "p^2/2", "prefactor": "1"}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple, Union

from .symexpr import (
    DYNAMICAL,
    PARAMETER,
    Expr,
    ExprError,
    Symbol,
    as_expr,
    parameter_factor,
    parse_expr,
    split_monomial,
    to_string,
)


class ModelError(ValueError):
    """Malformed or inconsistent model."""


@dataclass(frozen=True)
class SymplecticModel:
    name: str
    dynamical: Tuple[Symbol, ...]
    parameters: Tuple[Symbol, ...]
    one_form: Tuple[Expr, ...]
    potential: Expr
    prefactor: Expr = field(default_factory=lambda: Expr.const(1))

    round = 0

    def __post_init__(self):
        names = [s.name for s in self.dynamical] + [s.name for s in self.parameters]
        if len(set(names)) != len(names):
            raise ModelError("symbol names must be unique")
        if any(s.kind != DYNAMICAL for s in self.dynamical):
            raise ModelError("dynamical symbols must have kind 'dynamical'")
        if any(s.kind != PARAMETER for s in self.parameters):
            raise ModelError("parameter symbols must have kind 'parameter'")
        if len(self.one_form) != len(self.dynamical):
            raise ModelError(
                f"arity mismatch: {len(self.dynamical)} dynamical symbols but "
                f"{len(self.one_form)} one-form entries")
        declared = set(names)
        for e in (*self.one_form, self.potential, self.prefactor):
            undeclared = e.free_symbols - declared
            if undeclared:
                raise ModelError(f"undeclared symbols: {', '.join(sorted(undeclared))}")
        if self.prefactor.is_zero():
            raise ModelError("prefactor is identically zero")
        if self.prefactor.free_symbols & {s.name for s in self.dynamical}:
            raise ModelError("prefactor must not depend on dynamical symbols")

    @property
    def symbols(self) -> Tuple[Symbol, ...]:
        """The symplectic variables, in bracket-index order."""
        return self.dynamical

    @property
    def symbol_names(self) -> Tuple[str, ...]:
        return tuple(s.name for s in self.symbols)

    @property
    def parameter_names(self) -> Tuple[str, ...]:
        return tuple(s.name for s in self.parameters)


@dataclass(frozen=True)
class ExtendedModel:
    """A model enlarged by multipliers whose one-form entries are the constraints."""

    base: SymplecticModel
    multipliers: Tuple[Symbol, ...]
    constraints: Tuple[Expr, ...]
    round: int

    def __post_init__(self):
        if len(self.multipliers) != len(self.constraints):
            raise ModelError("one constraint per multiplier")
        taken = set(self.base.symbol_names) | set(self.base.parameter_names)
        clash = taken & {s.name for s in self.multipliers}
        if clash:
            raise ModelError(f"multiplier names collide with model symbols: {sorted(clash)}")

    name = property(lambda self: self.base.name)
    parameters = property(lambda self: self.base.parameters)
    potential = property(lambda self: self.base.potential)
    prefactor = property(lambda self: self.base.prefactor)

    @property
    def symbols(self) -> Tuple[Symbol, ...]:
        return self.base.dynamical + self.multipliers

    @property
    def one_form(self) -> Tuple[Expr, ...]:
        return self.base.one_form + self.constraints

    symbol_names = SymplecticModel.symbol_names
    parameter_names = SymplecticModel.parameter_names


AnyModel = Union[SymplecticModel, ExtendedModel]


@dataclass
class ModelDiagnostics:
    warnings: List[str] = field(default_factory=list)
    pivot_vanishing_conditions: List[Expr] = field(default_factory=list)


def make_model(name: str, dynamical: Sequence[str], parameters: Sequence[str],
               one_form: Sequence, potential, prefactor=1) -> SymplecticModel:
    """Build a model from names and expression strings (or Exprs)."""
    dyn = tuple(Symbol(n, DYNAMICAL) for n in dynamical)
    par = tuple(Symbol(n, PARAMETER) for n in parameters)
    declared = [*dyn, *par]

    def conv(x):
        return parse_expr(x, declared) if isinstance(x, str) else as_expr(x)

    return SymplecticModel(name, dyn, par, tuple(conv(a) for a in one_form),
                           conv(potential), conv(prefactor))


def load_model(document: str) -> SymplecticModel:
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ModelError(f"malformed model document: {exc}") from exc
    if not isinstance(data, dict):
        raise ModelError("model document must be a JSON object")
    for key in ("dynamical", "one_form", "potential"):
        if key not in data:
            raise ModelError(f"missing field {key!r}")
    for key in ("dynamical", "parameters", "one_form"):
        val = data.get(key, [])
        if not isinstance(val, list) or not all(isinstance(v, str) for v in val):
            raise ModelError(f"field {key!r} must be an array of strings")
    try:
        return make_model(
            str(data.get("name", "model")), data["dynamical"], data.get("parameters", []),
            data["one_form"], data["potential"], data.get("prefactor", "1"))
    except ExprError as exc:
        raise ModelError(str(exc)) from exc


def to_document(m: AnyModel) -> dict:
    """JSON-ready dict; an extended model is flattened with its multipliers dynamical."""
    return {
        "name": m.name,
        "dynamical": list(m.symbol_names),
        "parameters": list(m.parameter_names),
        "one_form": [to_string(a) for a in m.one_form],
        "potential": to_string(m.potential),
        "prefactor": to_string(m.prefactor),
    }


def serialize(m: AnyModel) -> str:
    return json.dumps(to_document(m), indent=2) + "\n"


def parameter_loci(e: Expr, dynamical) -> List[Expr]:
    """Parameter-only polynomial factors of ``e``: monomial variables and the cofactor."""
    f = parameter_factor(e, dynamical)
    if f.is_zero() or f.is_constant():
        return []
    names, rest = split_monomial(f)
    out = [Expr.symbol(v) for v in names]
    if not rest.is_constant():
        out.append(rest)
    return out


def _merge(into: List[Expr], new: Sequence[Expr]) -> None:
    for e in new:
        if e not in into:
            into.append(e)


def validate(m: AnyModel) -> ModelDiagnostics:
    diag = ModelDiagnostics()
    dyn = m.symbol_names
    used = set()
    for a in m.one_form:
        used |= a.free_symbols
    for name, own in zip(dyn, m.one_form):
        # absent everywhere and with a constant own entry, its row of f is zero
        if name not in used and own.is_constant():
            diag.warnings.append(f"{name} absent from one-form")
    for e in (*m.one_form, m.potential):
        if not e.is_polynomial():
            _merge(diag.pivot_vanishing_conditions, parameter_loci(e.denominator(), dyn))
    for cond in diag.pivot_vanishing_conditions:
        diag.warnings.append(f"denominator vanishes where {cond} = 0")
    return diag


def extend(m: AnyModel, constraints: Sequence[Expr]) -> ExtendedModel:
    """Append one multiplier per constraint, with the constraint as its one-form entry."""
    constraints = tuple(as_expr(c) for c in constraints)
    if not constraints:
        raise ModelError("empty constraint list")
    if any(c.is_zero() for c in constraints):
        raise ModelError("constraint is identically zero")
    base = m.base if isinstance(m, ExtendedModel) else m
    prev_mult = m.multipliers if isinstance(m, ExtendedModel) else ()
    prev_cons = m.constraints if isinstance(m, ExtendedModel) else ()
    declared = set(m.symbol_names) | set(m.parameter_names)
    for c in constraints:
        if c.free_symbols - declared:
            raise ModelError(f"constraint {c} uses undeclared symbols")
    rnd = m.round + 1
    new = tuple(Symbol(f"lam{rnd}_{i}", DYNAMICAL) for i in range(1, len(constraints) + 1))
    return ExtendedModel(base, prev_mult + new, prev_cons + constraints, rnd)
