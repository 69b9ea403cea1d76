"""Constructors for the concrete protocols studied by this workbench, plus
the parallel-composition combinator and its vector helpers.

All constructors are deterministic: the same parameters always produce a
byte-identical serialized protocol.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Any, Iterable, Sequence

from .core import Configuration, InvalidProtocol, Protocol, ProtocolError, State


class InvalidParameter(ProtocolError):
    pass


class LengthMismatch(ProtocolError):
    pass


class EmptyVector(ProtocolError):
    pass


class VariableClash(ProtocolError):
    pass


@dataclass(frozen=True)
class ModVector:
    """Fixed-length vector of residues, one per tower replica."""

    entries: tuple[int, ...]
    modulus: int

    def __post_init__(self):
        if self.modulus < 1:
            raise InvalidParameter("modulus must be >= 1")
        if any(not (0 <= e < self.modulus) for e in self.entries):
            raise InvalidParameter(f"entries must lie in [0, {self.modulus})")


def reconcile(u: ModVector, v: ModVector) -> ModVector:
    """Componentwise agree-or-zero merge of two replica-count vectors."""
    if len(u.entries) != len(v.entries) or u.modulus != v.modulus:
        raise LengthMismatch("vectors must share length and modulus")
    return ModVector(_reconcile(u.entries, v.entries), u.modulus)


def _reconcile(u: Sequence[int], v: Sequence[int]) -> tuple[int, ...]:
    return tuple(a if a == b else 0 for a, b in zip(u, v))


def plurality(values: Sequence[int]) -> int:
    """Most frequent residue in a vector; ties break toward the smallest."""
    if len(values) == 0:
        raise EmptyVector("plurality of an empty vector")
    counts: dict[int, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    return min(counts, key=lambda v: (-counts[v], v))


@dataclass(frozen=True)
class FunctionSpec:
    """Declared codomain of a computed function, plus its value on the
    zero input. The zero value may fall outside what any state outputs
    (e.g. min(0, k) = 0 while every min-protocol state outputs >= 1),
    which is why codomains are declared rather than inferred."""

    codomain: tuple
    zero_value: Any

    def __post_init__(self):
        object.__setattr__(self, "codomain", tuple(self.codomain))
        if self.zero_value not in self.codomain:
            raise InvalidParameter(f"zero value {self.zero_value!r} not in the codomain")


# -- pebble ---------------------------------------------------------------


def pebble(k: int, var: str = "x") -> Protocol:
    """Threshold-counting protocol: agents pool pebbles; whoever sees k of
    them broadcasts that the threshold was reached. Decides [n >= k], but
    not robustly."""
    if k < 1:
        raise InvalidParameter("k must be >= 1")
    states = {
        f"P{i}": State(1 if i == k else 0, {"level": i}) for i in range(k + 1)
    }
    transitions = {}
    for i in range(k + 1):
        for j in range(i, k + 1):
            if i + j < k:
                post = (i + j, 0)
            else:
                post = (k, k)
            pre_ids = tuple(sorted((f"P{i}", f"P{j}")))
            post_ids = tuple(sorted((f"P{post[0]}", f"P{post[1]}")))
            if pre_ids != post_ids:
                transitions[pre_ids] = post_ids
    return Protocol(
        name=f"pebble-{k}",
        output_alphabet=(0, 1),
        states=states,
        initial={var: "P1"},
        transitions=transitions,
    )


# -- tower ----------------------------------------------------------------


def tower(k: int, var: str = "x") -> Protocol:
    """Tower-climbing protocol: agents sharing a level push one of them up;
    an agent at the top level pulls everyone else up. Decides [n >= k]
    robustly."""
    if k < 1:
        raise InvalidParameter("k must be >= 1")
    states = {f"L{i}": State(1 if i == k else 0, {"level": i}) for i in range(1, k + 1)}
    transitions = {}
    for i in range(1, k):
        transitions[(f"L{i}", f"L{i}")] = tuple(sorted((f"L{i}", f"L{i+1}")))
        transitions[tuple(sorted((f"L{k}", f"L{i}")))] = (f"L{k}", f"L{k}")
    return Protocol(
        name=f"tower-{k}",
        output_alphabet=(0, 1),
        states=states,
        initial={var: "L1"},
        transitions=transitions,
    )


# -- robust min -----------------------------------------------------------


def robust_min(k: int, var: str = "x") -> Protocol:
    """Tower variant computing min(n, k) robustly. Each agent tracks its own
    level and the highest level it knows was ever occupied; the knowledge
    component is the output and spreads by gossip."""
    if k < 1:
        raise InvalidParameter("k must be >= 1")

    def sid(i, h):
        return f"{i}.{h}"

    states = {
        sid(i, h): State(h, {"level": i, "known": h})
        for i in range(1, k + 1)
        for h in range(1, k + 1)
    }
    transitions = {}
    for (i1, h1), (i2, h2) in product(product(range(1, k + 1), repeat=2), repeat=2):
        pre = tuple(sorted((sid(i1, h1), sid(i2, h2))))
        if pre in transitions:
            continue
        if i1 == i2 and i1 < k:
            h = max(h1, h2, i1 + 1)
            post = tuple(sorted((sid(i1, h), sid(i1 + 1, h))))
        elif i1 != i2:
            h = max(h1, h2)
            post = tuple(sorted((sid(i1, h), sid(i2, h))))
        else:
            continue
        if pre != post:
            transitions[pre] = post
    return Protocol(
        name=f"robust-min-{k}",
        output_alphabet=tuple(range(k + 1)),
        states=states,
        initial={var: sid(1, 1)},
        transitions=transitions,
    )


# -- robust mod -----------------------------------------------------------


def _vec_id(u: Sequence[int]) -> str:
    return "-".join(str(e) for e in u)


def _mod_state_id(i: int, t: int, u: Sequence[int]) -> str:
    return f"{i}.{t}.{_vec_id(u)}"


def _mod_move_up(i, t1, u, t2, v, m, c):
    # One agent climbs from level i to i+1, leaving its level-i count with
    # the agent staying behind and opening a fresh count one level up.
    # Replica indices beyond c do not exist and are left untouched.
    w = list(_reconcile(u, v))
    if i <= c:
        w[i - 1] = (u[i - 1] + v[i - 1]) % m
    if i + 1 <= c:
        w[i] = 1
    return max(t1, t2, i + 1), tuple(w)


def _mod_exchange(i1, t1, u, i2, t2, v, m, c):
    # Disagreements on replicas neither agent works for reconcile to zero;
    # each agent at a replica level restores its own authoritative count.
    w = list(_reconcile(u, v))
    if i1 <= c:
        w[i1 - 1] = u[i1 - 1]
    if i2 <= c:
        w[i2 - 1] = v[i2 - 1]
    return max(t1, t2), tuple(w)


def _mod_tower_protocol(name, top, c, m, k, min_mod, var):
    """Shared builder for the replica-tower protocols.

    top: highest level; c: number of replicas; output is (n mod m) alone or
    paired with min(n, k) when min_mod is set.
    """
    offsets = tuple(range(c))

    def out_value(t, u):
        if t < top:
            mod_part = t % m
        else:
            mod_part = plurality(tuple((e + o) % m for e, o in zip(u, offsets)))
        if min_mod:
            return (min(t, k), mod_part)
        return mod_part

    states = {}
    for i in range(1, top + 1):
        for t in range(1, top + 1):
            for u in product(range(m), repeat=c):
                states[_mod_state_id(i, t, u)] = State(
                    out_value(t, u),
                    {"level": i, "known": t, "vector": list(u), "modulus": m, "replicas": c},
                )

    transitions = {}
    level_range = range(1, top + 1)
    vec_range = list(product(range(m), repeat=c))
    for i1, i2 in product(level_range, repeat=2):
        if i1 > i2:
            continue
        same, at_top = i1 == i2, i1 == top and i2 == top
        if same and not at_top:
            kind = "up"
        elif not same or at_top:
            kind = "ex"
        for t1, t2 in product(level_range, repeat=2):
            for u in vec_range:
                for v in vec_range:
                    pre = tuple(sorted((_mod_state_id(i1, t1, u), _mod_state_id(i2, t2, v))))
                    if pre in transitions:
                        continue
                    if kind == "up":
                        tp, w = _mod_move_up(i1, t1, u, t2, v, m, c)
                        post = (
                            _mod_state_id(i1, tp, w),
                            _mod_state_id(i1 + 1, tp, w),
                        )
                    else:
                        tp, w = _mod_exchange(i1, t1, u, i2, t2, v, m, c)
                        post = (
                            _mod_state_id(i1, tp, w),
                            _mod_state_id(i2, tp, w),
                        )
                    post = tuple(sorted(post))
                    if pre != post:
                        transitions[pre] = post

    if min_mod:
        alphabet = tuple((a, b) for a in range(k + 1) for b in range(m))
    else:
        alphabet = tuple(range(m))
    init_vec = (1,) + (0,) * (c - 1)
    return Protocol(
        name=name,
        output_alphabet=alphabet,
        states=states,
        initial={var: _mod_state_id(1, 1, init_vec)},
        transitions=transitions,
    )


def robust_mod(m: int, var: str = "x") -> Protocol:
    """Replica-tower protocol computing (n mod m) robustly. Each level of a
    tower of height m^2 + 1 keeps an independent modular count; the output
    below the top is read off the known height, at the top it is the
    plurality of the index-compensated replica counts."""
    if m < 2:
        raise InvalidParameter("m must be >= 2")
    c = m * m
    return _mod_tower_protocol(f"robust-mod-{m}", c + 1, c, m, 0, False, var)


def robust_min_mod(k: int, m: int, var: str = "x") -> Protocol:
    """Replica tower of height max(m^2 + 1, k + m) computing the pair
    (min(n, k), n mod m) robustly."""
    if k < 1:
        raise InvalidParameter("k must be >= 1")
    if m < 2:
        raise InvalidParameter("m must be >= 2")
    c = m * m
    top = max(c + 1, k + m)
    return _mod_tower_protocol(f"robust-min-mod-{k}-{m}", top, c, m, k, True, var)


# -- parallel composition --------------------------------------------------


def _fmt_value(v) -> str:
    if isinstance(v, tuple):
        return "(" + ",".join(_fmt_value(x) for x in v) + ")"
    return str(v)


def _jsonable(v):
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    return v


def parallel_compose(
    pf: Protocol, sf: FunctionSpec, pg: Protocol, sg: FunctionSpec
) -> Protocol:
    """Run two protocols side by side on disjoint variables. Each agent works
    for one side and carries the other side's current output; cross-side
    meetings exchange outputs, same-side meetings run that side's protocol,
    resetting a disagreed carried value to the other side's zero output."""
    if set(pf.initial) & set(pg.initial):
        raise VariableClash(f"shared input variables: {sorted(set(pf.initial) & set(pg.initial))}")
    for proto, spec, side in ((pf, sf, "left"), (pg, sg, "right")):
        missing = set(proto.output_alphabet) - set(spec.codomain)
        if missing:
            raise InvalidParameter(f"{side} protocol outputs {missing} outside its declared codomain")

    def fid(q, o):
        return f"f|{q}|{_fmt_value(o)}"

    def gid(q, o):
        return f"g|{q}|{_fmt_value(o)}"

    states = {}
    for q, st in sorted(pf.states.items()):
        for o in sg.codomain:
            states[fid(q, o)] = State(
                (st.output, o), {"side": "f", "inner": q, "stored": _jsonable(o)}
            )
    for q, st in sorted(pg.states.items()):
        for o in sf.codomain:
            states[gid(q, o)] = State(
                (o, st.output), {"side": "g", "inner": q, "stored": _jsonable(o)}
            )

    initial = {var: fid(q, sg.zero_value) for var, q in pf.initial.items()}
    initial |= {var: gid(q, sf.zero_value) for var, q in pg.initial.items()}

    transitions = {}

    def add(pre_a, pre_b, post_a, post_b):
        pre = tuple(sorted((pre_a, pre_b)))
        post = tuple(sorted((post_a, post_b)))
        if pre != post:
            transitions[pre] = post

    for side, proto, make_id, zero in (("f", pf, fid, sg.zero_value), ("g", pg, gid, sf.zero_value)):
        others = sg.codomain if side == "f" else sf.codomain
        state_ids = sorted(proto.states)
        for a_idx, q1 in enumerate(state_ids):
            for q2 in state_ids[a_idx:]:
                p1, p2 = proto.delta((q1, q2))
                for o1 in others:
                    for o2 in others:
                        if o1 == o2:
                            add(make_id(q1, o1), make_id(q2, o1), make_id(p1, o1), make_id(p2, o1))
                        else:
                            add(make_id(q1, o1), make_id(q2, o2), make_id(p1, zero), make_id(p2, zero))

    for qf, stf in sorted(pf.states.items()):
        for qg, stg in sorted(pg.states.items()):
            for of in sf.codomain:
                for og in sg.codomain:
                    add(
                        fid(qf, og), gid(qg, of),
                        fid(qf, stg.output), gid(qg, stf.output),
                    )

    alphabet = tuple((a, b) for a in sf.codomain for b in sg.codomain)
    return Protocol(
        name=f"compose({pf.name},{pg.name})",
        output_alphabet=alphabet,
        states=states,
        initial=initial,
        transitions=transitions,
    )
