"""Monadic counting formulas: parsing, normalization, ground-truth
evaluation, saturation profiles, and compilation to robust protocols.

Atoms constrain a single variable by a threshold (`x >= 3`, `x < 5`,
`x = 2`) or by residues (`x % 7 >= 2`, `x % 7 in {2,3}`); atoms combine
with `!`, `&`, `|` and parentheses, `!` binding tightest, then `&`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Any, Iterator, Mapping, Optional, Union

from . import zoo
from .core import Protocol, ProtocolError, State
from .zoo import FunctionSpec, robust_min, robust_min_mod, robust_mod


class FormulaError(ProtocolError):
    pass


class FormulaSyntaxError(FormulaError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class NonMonadicError(FormulaSyntaxError):
    pass


class UnboundVariable(FormulaError):
    pass


class InconsistentTuple(FormulaError):
    pass


class NoVariables(FormulaError):
    pass


# -- AST -------------------------------------------------------------------

RELATIONS = ("<", "<=", "=", ">=", ">")


@dataclass(frozen=True)
class Threshold:
    var: str
    relation: str
    bound: int

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise FormulaError(f"unknown relation {self.relation!r}")
        if self.bound < 0:
            raise FormulaError("thresholds must be natural numbers")


@dataclass(frozen=True)
class Mod:
    var: str
    modulus: int
    accepted: frozenset[int]

    def __post_init__(self):
        if self.modulus < 1:
            raise FormulaError("modulus must be >= 1")
        object.__setattr__(self, "accepted", frozenset(self.accepted))
        if any(not (0 <= r < self.modulus) for r in self.accepted):
            raise FormulaError("accepted residues must lie in [0, modulus)")


@dataclass(frozen=True)
class Not:
    operand: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


Formula = Union[Threshold, Mod, Not, And, Or]


def variables(formula: Formula) -> set[str]:
    if isinstance(formula, (Threshold, Mod)):
        return {formula.var}
    if isinstance(formula, Not):
        return variables(formula.operand)
    return variables(formula.left) | variables(formula.right)


# -- parsing ----------------------------------------------------------------

_SYMBOLS = (">=", "<=", "=", "<", ">", "%", "!", "&", "|", "(", ")", "{", "}", ",", "+")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            tokens.append(("num", text[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            tokens.append(("in" if word == "in" else "ident", word, i))
            i = j
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                tokens.append((sym, sym, i))
                i += len(sym)
                break
        else:
            raise FormulaSyntaxError(f"unexpected character {ch!r}", i)
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def take(self, kind=None):
        tok = self.tokens[self.pos]
        if kind is not None and tok[0] != kind:
            raise FormulaSyntaxError(f"expected {kind!r}, found {tok[1] or 'end of input'!r}", tok[2])
        self.pos += 1
        return tok

    def parse(self) -> Formula:
        f = self.parse_or()
        tok = self.peek()
        if tok[0] != "end":
            raise FormulaSyntaxError(f"unexpected {tok[1]!r}", tok[2])
        return f

    def parse_or(self) -> Formula:
        f = self.parse_and()
        while self.peek()[0] == "|":
            self.take()
            f = Or(f, self.parse_and())
        return f

    def parse_and(self) -> Formula:
        f = self.parse_unary()
        while self.peek()[0] == "&":
            self.take()
            f = And(f, self.parse_unary())
        return f

    def parse_unary(self) -> Formula:
        tok = self.peek()
        if tok[0] == "!":
            self.take()
            return Not(self.parse_unary())
        if tok[0] == "(":
            self.take()
            f = self.parse_or()
            self.take(")")
            return f
        return self.parse_atom()

    def parse_atom(self) -> Formula:
        kind, var, pos = self.take()
        if kind != "ident":
            raise FormulaSyntaxError(f"expected a variable, found {var or 'end of input'!r}", pos)
        tok = self.peek()
        if tok[0] == "+":
            raise NonMonadicError("sums of variables are not allowed; atoms mention one variable", tok[2])
        if tok[0] == "%":
            self.take()
            modulus = self.number()
            if modulus < 1:
                raise FormulaSyntaxError("modulus must be >= 1", tok[2])
            return self.parse_mod_tail(var, modulus)
        if tok[0] in RELATIONS:
            self.take()
            bound = self.number()
            return Threshold(var, tok[0], bound)
        raise FormulaSyntaxError(f"expected a relation after {var!r}", tok[2])

    def parse_mod_tail(self, var: str, modulus: int) -> Formula:
        tok = self.peek()
        if tok[0] == "in":
            self.take()
            self.take("{")
            residues = {self.number()}
            while self.peek()[0] == ",":
                self.take()
                residues.add(self.number())
            self.take("}")
            for r in residues:
                if r >= modulus:
                    raise FormulaSyntaxError(f"residue {r} not below modulus {modulus}", tok[2])
            return Mod(var, modulus, frozenset(residues))
        if tok[0] in RELATIONS:
            self.take()
            bound = self.number()
            accepted = frozenset(r for r in range(modulus) if _compare(r, tok[0], bound))
            return Mod(var, modulus, accepted)
        raise FormulaSyntaxError("expected a relation or 'in' after the modulus", tok[2])

    def number(self) -> int:
        tok = self.take()
        if tok[0] == "+":
            raise NonMonadicError("sums are not allowed", tok[2])
        if tok[0] != "num":
            raise FormulaSyntaxError(f"expected a number, found {tok[1] or 'end of input'!r}", tok[2])
        return int(tok[1])


def _compare(value: int, relation: str, bound: int) -> bool:
    if relation == "<":
        return value < bound
    if relation == "<=":
        return value <= bound
    if relation == "=":
        return value == bound
    if relation == ">=":
        return value >= bound
    return value > bound


def parse(text: str) -> Formula:
    return _Parser(text).parse()


def to_text(formula: Formula) -> str:
    """Canonical concrete syntax; parse(to_text(f)) == f."""
    return _print(formula, 1)


def _print(f: Formula, parent_level: int) -> str:
    if isinstance(f, Threshold):
        return f"{f.var} {f.relation} {f.bound}"
    if isinstance(f, Mod):
        inner = ", ".join(str(r) for r in sorted(f.accepted))
        return f"{f.var} % {f.modulus} in {{{inner}}}"
    if isinstance(f, Not):
        return "!" + _print(f.operand, 4)
    if isinstance(f, And):
        text, level = f"{_print(f.left, 2)} & {_print(f.right, 3)}", 2
    else:
        text, level = f"{_print(f.left, 1)} | {_print(f.right, 2)}", 1
    return f"({text})" if level < parent_level else text


# -- normalization and profiles ---------------------------------------------


def normalize(formula: Formula) -> Formula:
    """Equivalent formula over the naturals whose threshold atoms all use >=.

    Rewrites x < t, x <= t, x = t, x > t through >= so that saturating a
    variable at its maximal >= bound never changes any atom's truth value.
    """
    if isinstance(formula, Threshold):
        var, rel, b = formula.var, formula.relation, formula.bound
        if rel == ">=":
            return formula
        if rel == ">":
            return Threshold(var, ">=", b + 1)
        if rel == "<":
            return Not(Threshold(var, ">=", b))
        if rel == "<=":
            return Not(Threshold(var, ">=", b + 1))
        return And(Threshold(var, ">=", b), Not(Threshold(var, ">=", b + 1)))
    if isinstance(formula, Mod):
        return formula
    if isinstance(formula, Not):
        return Not(normalize(formula.operand))
    if isinstance(formula, And):
        return And(normalize(formula.left), normalize(formula.right))
    return Or(normalize(formula.left), normalize(formula.right))


@dataclass(frozen=True)
class SaturationProfile:
    """Per variable: the largest >= threshold (0 if none) and the lcm of
    all moduli (1 if none). The pair (min(x, t), x mod m) determines every
    atom on x."""

    per_var: Mapping[str, tuple[int, int]]

    def threshold(self, var: str) -> int:
        return self.per_var[var][0]

    def modulus(self, var: str) -> int:
        return self.per_var[var][1]

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(sorted(self.per_var))

    def saturate(self, assignment: Mapping[str, int]) -> dict[str, tuple[int, int]]:
        """Profile tuple of a concrete assignment."""
        return {
            v: (min(assignment.get(v, 0), t), assignment.get(v, 0) % m)
            for v, (t, m) in self.per_var.items()
        }


def _atoms(formula: Formula) -> Iterator[Union[Threshold, Mod]]:
    if isinstance(formula, (Threshold, Mod)):
        yield formula
    elif isinstance(formula, Not):
        yield from _atoms(formula.operand)
    else:
        yield from _atoms(formula.left)
        yield from _atoms(formula.right)


def saturation_profile(formula: Formula) -> SaturationProfile:
    """Saturation thresholds and moduli of a normalized formula."""
    per_var: dict[str, tuple[int, int]] = {}
    for atom in _atoms(formula):
        t, m = per_var.get(atom.var, (0, 1))
        if isinstance(atom, Threshold):
            if atom.relation != ">=":
                raise FormulaError("profiles are defined on normalized formulas only")
            t = max(t, atom.bound)
        else:
            m = math.lcm(m, atom.modulus)
        per_var[atom.var] = (t, m)
    return SaturationProfile(per_var)


# -- evaluation ---------------------------------------------------------------


def evaluate(formula: Formula, assignment: Mapping[str, int]) -> int:
    """Truth value (0/1) of the formula at an assignment of naturals."""
    if isinstance(formula, Threshold):
        return int(_compare(_lookup(assignment, formula.var), formula.relation, formula.bound))
    if isinstance(formula, Mod):
        return int(_lookup(assignment, formula.var) % formula.modulus in formula.accepted)
    if isinstance(formula, Not):
        return 1 - evaluate(formula.operand, assignment)
    if isinstance(formula, And):
        return evaluate(formula.left, assignment) & evaluate(formula.right, assignment)
    return evaluate(formula.left, assignment) | evaluate(formula.right, assignment)


def _lookup(assignment: Mapping[str, int], var: str) -> int:
    if var not in assignment:
        raise UnboundVariable(f"no value for variable {var!r}")
    return assignment[var]


def evaluate_profile(
    formula: Formula,
    profile: SaturationProfile,
    values: Mapping[str, tuple[int, int]],
) -> int:
    """Truth value of a normalized formula from saturated per-variable
    (min(x, t), x mod m) pairs alone."""
    for var, (t, m) in profile.per_var.items():
        if var not in values:
            raise UnboundVariable(f"no profile tuple for variable {var!r}")
        sat, res = values[var]
        if not (0 <= sat <= t) or not (0 <= res < m):
            raise InconsistentTuple(f"tuple {values[var]!r} inconsistent with (t={t}, m={m}) for {var!r}")

    def atom_value(atom) -> int:
        if atom.var not in profile.per_var:
            raise InconsistentTuple(f"profile lacks variable {atom.var!r}")
        sat, res = values[atom.var]
        if isinstance(atom, Threshold):
            if atom.relation != ">=" or atom.bound > profile.threshold(atom.var):
                raise InconsistentTuple("profile does not dominate the formula; normalize first")
            return int(sat >= atom.bound)
        if profile.modulus(atom.var) % atom.modulus != 0:
            raise InconsistentTuple("profile modulus does not cover the atom")
        return int(res % atom.modulus in atom.accepted)

    def walk(f: Formula) -> int:
        if isinstance(f, (Threshold, Mod)):
            return atom_value(f)
        if isinstance(f, Not):
            return 1 - walk(f.operand)
        if isinstance(f, And):
            return walk(f.left) & walk(f.right)
        return walk(f.left) | walk(f.right)

    return walk(formula)


# -- compilation --------------------------------------------------------------


def _constant_protocol(var: str) -> Protocol:
    return Protocol(
        name=f"constant-{var}",
        output_alphabet=(0,),
        states={"Z": State(0, {"level": 1})},
        initial={var: "Z"},
        transitions={},
    )


def _component(var: str, t: int, m: int):
    """Component protocol for one variable plus the adapter from its output
    values to (saturation, residue) pairs."""
    if t >= 1 and m >= 2:
        proto = robust_min_mod(t, m, var=var)
        spec = FunctionSpec(tuple((a, b) for a in range(t + 1) for b in range(m)), (0, 0))
        adapt = lambda o: o
    elif t >= 1:
        proto = robust_min(t, var=var)
        spec = FunctionSpec(tuple(range(t + 1)), 0)
        adapt = lambda o: (o, 0)
    elif m >= 2:
        proto = robust_mod(m, var=var)
        spec = FunctionSpec(tuple(range(m)), 0)
        adapt = lambda o: (0, o)
    else:
        proto = _constant_protocol(var)
        spec = FunctionSpec((0,), 0)
        adapt = lambda o: (0, 0)
    return proto, spec, adapt


def _split_folded(value, arity: int) -> list:
    """Undo the left-nested pairing produced by folding binary composition."""
    if arity == 1:
        return [value]
    left, right = value
    return _split_folded(left, arity - 1) + [right]


def compile_formula(formula: Formula) -> tuple[Protocol, FunctionSpec]:
    """Robust protocol deciding a monadic formula.

    Builds one saturating component per variable, folds them together with
    parallel composition, and remaps every composed output through the
    profile evaluator to a bit.
    """
    nf = normalize(formula)
    profile = saturation_profile(nf)
    names = sorted(variables(nf))
    if not names:
        raise NoVariables("the formula has no variables")

    components = []
    for var in names:
        t, m = profile.per_var.get(var, (0, 1))
        components.append(_component(var, t, m))

    proto, spec, _ = components[0]
    for nxt_proto, nxt_spec, _ in components[1:]:
        proto = zoo.parallel_compose(proto, spec, nxt_proto, nxt_spec)
        spec = FunctionSpec(
            tuple((a, b) for a in spec.codomain for b in nxt_spec.codomain),
            (spec.zero_value, nxt_spec.zero_value),
        )

    adapters = [c[2] for c in components]

    def decide(value) -> int:
        parts = _split_folded(value, len(names))
        tuples = {var: adapters[i](parts[i]) for i, var in enumerate(names)}
        return evaluate_profile(nf, profile, tuples)

    states = {q: State(decide(st.output), st.meta) for q, st in proto.states.items()}
    decided = Protocol(
        name=f"decide[{to_text(formula)}]",
        output_alphabet=(0, 1),
        states=states,
        initial=dict(proto.initial),
        transitions=dict(proto.transitions),
    )
    zero = evaluate(nf, {v: 0 for v in names})
    return decided, FunctionSpec((0, 1), zero)


def component_stats(formula: Formula) -> dict:
    """Per-variable profile and predicted state counts, without building
    anything. Counts can be astronomically large; they are exact integers.
    """
    nf = normalize(formula)
    profile = saturation_profile(nf)
    names = sorted(variables(nf))
    per_var = {}
    sizes = []
    codomains = []
    for var in names:
        t, m = profile.per_var.get(var, (0, 1))
        if t >= 1 and m >= 2:
            c = m * m
            top = max(c + 1, t + m)
            size, codomain = top * top * m**c, (t + 1) * m
        elif t >= 1:
            size, codomain = t * t, t + 1
        elif m >= 2:
            c = m * m
            size, codomain = (c + 1) * (c + 1) * m**c, m
        else:
            size, codomain = 1, 1
        per_var[var] = {"threshold": t, "modulus": m, "component_states": size}
        sizes.append(size)
        codomains.append(codomain)
    total, stored = (sizes[0], codomains[0]) if sizes else (0, 1)
    for size, codomain in zip(sizes[1:], codomains[1:]):
        total = total * codomain + size * stored
        stored *= codomain
    return {"variables": per_var, "state_count": total}
