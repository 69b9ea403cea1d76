"""Exhaustive desk-scale verification: reachability graphs layered by
snipes, bottom strongly connected components as the fairness oracle,
"computes f" and robustness checks, and the state-complexity analyses.

Fairness is discharged structurally: on a finite reachability set, the
tail of every fair execution cycles through one bottom SCC and visits all
of it, so "every fair execution converges to r" holds exactly when every
reachable bottom SCC is uniformly an r-consensus.
"""

from __future__ import annotations

import enum
import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator, Mapping, Optional, Sequence

from .core import (
    Configuration,
    ProtocolError,
    Protocol,
    SnipeEvent,
    State,
    StepEvent,
    Trace,
    TransitionRule,
    initial_configuration,
)
from .presburger import (
    Formula,
    evaluate,
    normalize,
    saturation_profile,
    variables,
)
from .zoo import InvalidParameter

DEFAULT_NODE_LIMIT = 1_000_000


class ResourceLimitExceeded(ProtocolError):
    """The exploration would store more configurations than allowed."""


class NotAPredicateProtocol(ProtocolError):
    """Operation requires a protocol with output alphabet {0, 1}."""


class VerdictStatus(str, enum.Enum):
    PASS = "pass"
    FAIL = "fail"
    RESOURCE_EXCEEDED = "resource-exceeded"


@dataclass
class Verdict:
    """Machine-readable check result; failures carry a replayable trace."""

    status: VerdictStatus
    details: str
    counterexample: Optional[Trace] = None
    stats: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status is VerdictStatus.PASS

    @property
    def failed(self) -> bool:
        return self.status is VerdictStatus.FAIL

    def to_json(self) -> dict:
        doc = {"status": self.status.value, "details": self.details, "stats": self.stats}
        if self.counterexample is not None:
            doc["counterexample"] = self.counterexample.to_json()
        return doc


@dataclass(frozen=True)
class PredicateOracle:
    """Ground truth: a total function from input configurations (variable
    counts) to an output value."""

    fn: Callable[[Mapping[str, int]], Any]
    name: str = ""

    def __call__(self, counts: Mapping[str, int]):
        return self.fn(counts)


def oracle_from_formula(formula: Formula) -> PredicateOracle:
    from .presburger import to_text

    fvars = variables(formula)
    return PredicateOracle(
        lambda counts: evaluate(formula, {v: counts.get(v, 0) for v in fvars}),
        to_text(formula),
    )


def _total(counts: Mapping[str, int]) -> int:
    return sum(counts.values())


def oracle_threshold(k: int) -> PredicateOracle:
    return PredicateOracle(lambda c: int(_total(c) >= k), f"n >= {k}")


def oracle_min(k: int) -> PredicateOracle:
    return PredicateOracle(lambda c: min(_total(c), k), f"min(n, {k})")


def oracle_mod(m: int) -> PredicateOracle:
    return PredicateOracle(lambda c: _total(c) % m, f"n mod {m}")


def oracle_min_mod(k: int, m: int) -> PredicateOracle:
    return PredicateOracle(lambda c: (min(_total(c), k), _total(c) % m), f"(min(n, {k}), n mod {m})")


# -- interned engine ---------------------------------------------------------

_NO_CONSENSUS = object()


class _Tables:
    """Integer-interned view of a protocol for fast exploration."""

    __slots__ = ("ids", "index", "outputs", "delta")

    def __init__(self, protocol: Protocol):
        self.ids = tuple(sorted(protocol.states))
        self.index = {q: i for i, q in enumerate(self.ids)}
        self.outputs = tuple(protocol.states[q].output for q in self.ids)
        self.delta: dict[tuple[int, int], tuple[int, int]] = {}
        for pre, post in protocol.transitions.items():
            if pre == post:
                continue
            self.delta[(self.index[pre[0]], self.index[pre[1]])] = (
                self.index[post[0]],
                self.index[post[1]],
            )

    def key_of(self, config: Configuration) -> tuple[int, ...]:
        out: list[int] = []
        for q, n in config.entries:
            out.extend([self.index[q]] * n)
        out.sort()
        return tuple(out)

    def config_of(self, key: Sequence[int]) -> Configuration:
        counts: dict[str, int] = {}
        for s in key:
            q = self.ids[s]
            counts[q] = counts.get(q, 0) + 1
        return Configuration.from_counts(counts)

    def rule_of(self, pre: tuple[int, int], post: tuple[int, int]) -> TransitionRule:
        return TransitionRule(
            (self.ids[pre[0]], self.ids[pre[1]]),
            (self.ids[post[0]], self.ids[post[1]]),
        )

    def consensus(self, key: Sequence[int]):
        r = self.outputs[key[0]]
        for s in key[1:]:
            if self.outputs[s] != r:
                return _NO_CONSENSUS
        return r


def _successor_items(tables: _Tables, key: tuple[int, ...]):
    """Distinct enabled rules with their successor keys, ascending by pair."""
    out = []
    n = len(key)
    delta = tables.delta
    prev_a = -1
    for ia in range(n):
        a = key[ia]
        if a == prev_a:
            continue
        prev_a = a
        prev_b = -1
        for ib in range(ia + 1, n):
            b = key[ib]
            if b == prev_b:
                continue
            prev_b = b
            post = delta.get((a, b))
            if post is None:
                continue
            rest = list(key)
            del rest[ib]
            del rest[ia]
            rest.extend(post)
            rest.sort()
            out.append(((a, b), post, tuple(rest)))
    return out


class _Explored:
    __slots__ = ("nodes", "index", "adj", "parents", "edge_count")

    def __init__(self):
        self.nodes: list[tuple[int, ...]] = []
        self.index: dict[tuple[int, ...], int] = {}
        self.adj: list[list[int]] = []
        self.parents: list[Optional[tuple]] = []
        self.edge_count = 0


def _close(tables: _Tables, seed_keys: Iterable[tuple[int, ...]], budget: list[int]) -> _Explored:
    """BFS closure of the seeds under non-silent steps."""
    ex = _Explored()

    def add(key, parent) -> int:
        if budget[0] <= 0:
            raise ResourceLimitExceeded("node limit reached during exploration")
        budget[0] -= 1
        i = len(ex.nodes)
        ex.index[key] = i
        ex.nodes.append(key)
        ex.adj.append([])
        ex.parents.append(parent)
        return i

    for key in sorted(seed_keys):
        if key not in ex.index:
            add(key, None)
    frontier = deque(range(len(ex.nodes)))
    while frontier:
        i = frontier.popleft()
        for pre, post, succ in _successor_items(tables, ex.nodes[i]):
            j = ex.index.get(succ)
            if j is None:
                j = add(succ, (i, pre, post))
                frontier.append(j)
            ex.adj[i].append(j)
            ex.edge_count += 1
    return ex


def _tarjan(adj: list[list[int]]) -> tuple[list[int], list[list[int]]]:
    n = len(adj)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    scc_id = [-1] * n
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            descended = False
            children = adj[v]
            while pi < len(children):
                w = children[pi]
                pi += 1
                if index[w] == -1:
                    work[-1] = (v, pi)
                    work.append((w, 0))
                    descended = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if descended:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    scc_id[w] = len(comps)
                    comp.append(w)
                    if w == v:
                        break
                comps.append(comp)
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
    return scc_id, comps


def _bottom_sccs(adj, scc_id, comps) -> list[list[int]]:
    bottom = [True] * len(comps)
    for v in range(len(adj)):
        for w in adj[v]:
            if scc_id[w] != scc_id[v]:
                bottom[scc_id[v]] = False
    found = [sorted(comp) for i, comp in enumerate(comps) if bottom[i]]
    found.sort(key=lambda comp: comp[0])
    return found


# -- layered robustness check -------------------------------------------------


def _snipe_seeds(explored: _Explored) -> dict[tuple[int, ...], tuple[int, int]]:
    """All one-agent-removed configurations, keyed to their first provenance
    (source node index, sniped state). Configurations never become empty."""
    seeds: dict[tuple[int, ...], tuple[int, int]] = {}
    for idx, key in enumerate(explored.nodes):
        if len(key) < 2:
            continue
        prev = -1
        for pos, s in enumerate(key):
            if s == prev:
                continue
            prev = s
            succ = key[:pos] + key[pos + 1 :]
            if succ not in seeds:
                seeds[succ] = (idx, s)
    return seeds


def _build_trace(
    tables: _Tables,
    initial: Configuration,
    layers: list[tuple[_Explored, dict[int, tuple[int, int]]]],
    layer_idx: int,
    node_idx: int,
) -> Trace:
    events_rev = []
    cur_layer, cur = layer_idx, node_idx
    final = tables.config_of(layers[layer_idx][0].nodes[node_idx])
    while True:
        explored, provenance = layers[cur_layer]
        while explored.parents[cur] is not None:
            parent_idx, pre, post = explored.parents[cur]
            events_rev.append(StepEvent(tables.rule_of(pre, post)))
            cur = parent_idx
        if cur_layer == 0:
            break
        prev_idx, sniped = provenance[cur]
        events_rev.append(SnipeEvent(tables.ids[sniped]))
        cur_layer -= 1
        cur = prev_idx
    return Trace(initial, tuple(reversed(events_rev)), final)


def _value_json(value):
    if isinstance(value, tuple):
        return [_value_json(v) for v in value]
    return value


def _check_layers(
    tables: _Tables,
    initial: Configuration,
    j_max: int,
    allowed_for: Callable[[int], set],
    strict: bool,
    budget: list[int],
    context: str,
) -> Verdict:
    layers: list[tuple[_Explored, dict[int, tuple[int, int]]]] = []
    seeds: dict[tuple[int, ...], Optional[tuple[int, int]]] = {tables.key_of(initial): None}
    total_nodes = total_edges = total_sccs = 0
    per_layer = []

    def stats() -> dict:
        return {
            "nodes": total_nodes,
            "edges": total_edges,
            "sccs": total_sccs,
            "layers": len(per_layer),
            "per_layer": per_layer,
        }

    for s in range(j_max + 1):
        try:
            explored = _close(tables, seeds.keys(), budget)
        except ResourceLimitExceeded as exc:
            return Verdict(VerdictStatus.RESOURCE_EXCEEDED, f"{context}: {exc}", stats=stats())
        provenance = {
            explored.index[key]: prov for key, prov in seeds.items() if prov is not None
        }
        layers.append((explored, provenance))
        scc_id, comps = _tarjan(explored.adj)
        bottoms = _bottom_sccs(explored.adj, scc_id, comps)
        total_nodes += len(explored.nodes)
        total_edges += explored.edge_count
        total_sccs += len(comps)
        allowed = allowed_for(s)
        layer_consensus = []
        for comp in bottoms:
            values = {tables.consensus(explored.nodes[i]) for i in comp}
            if len(values) > 1 or _NO_CONSENSUS in values:
                witness = next(
                    (i for i in comp if tables.consensus(explored.nodes[i]) is _NO_CONSENSUS),
                    comp[0],
                )
                trace = _build_trace(tables, initial, layers, s, witness)
                return Verdict(
                    VerdictStatus.FAIL,
                    f"{context}: after {s} snipe(s), a fair execution may never stabilize "
                    f"(bottom component of {len(comp)} configuration(s) without a uniform consensus)",
                    counterexample=trace,
                    stats=stats(),
                )
            r = values.pop()
            layer_consensus.append((comp, r))
            if r not in allowed:
                trace = _build_trace(tables, initial, layers, s, comp[0])
                return Verdict(
                    VerdictStatus.FAIL,
                    f"{context}: after {s} snipe(s), a fair execution stabilizes to {r!r}, "
                    f"outside the allowed outputs {sorted(map(repr, allowed))}",
                    counterexample=trace,
                    stats=stats(),
                )
        distinct = []
        for _, r in layer_consensus:
            if r not in distinct:
                distinct.append(r)
        per_layer.append(
            {
                "snipes": s,
                "nodes": len(explored.nodes),
                "edges": explored.edge_count,
                "bottom_sccs": len(layer_consensus),
                "consensus_values": [_value_json(r) for r in distinct],
            }
        )
        if strict and len(distinct) > 1:
            offender = next(comp for comp, r in layer_consensus if r != distinct[0])
            trace = _build_trace(tables, initial, layers, s, offender[0])
            return Verdict(
                VerdictStatus.FAIL,
                f"{context}: after {s} snipe(s), different fair executions stabilize to "
                f"different outputs {distinct!r} (strict mode requires one)",
                counterexample=trace,
                stats=stats(),
            )
        if s < j_max:
            seeds = dict(_snipe_seeds(explored))
    return Verdict(VerdictStatus.PASS, f"{context}: all layers stabilize permissibly", stats=stats())


# -- public checks -------------------------------------------------------------


def permissible_outputs(oracle: PredicateOracle, counts: Mapping[str, int], j: int) -> set:
    """Outputs of the function on every nonempty sub-input obtained by
    removing at most j agents."""
    names = sorted(v for v, n in counts.items() if n > 0)
    amounts = [counts[v] for v in names]
    if sum(amounts) < 1:
        raise ProtocolError("permissible outputs need a nonempty input")
    out = set()

    def rec(i: int, left: int, removed: list[int]):
        if i == len(names):
            if sum(amounts) - sum(removed) >= 1:
                sub = dict(counts)
                for var, r in zip(names, removed):
                    sub[var] = counts[var] - r
                out.add(oracle(sub))
            return
        for r in range(min(left, amounts[i]) + 1):
            rec(i + 1, left - r, removed + [r])

    rec(0, j, [])
    return out


def check_computes(
    protocol: Protocol,
    oracle: PredicateOracle,
    inputs: Iterable[Mapping[str, int]],
    node_limit: int = DEFAULT_NODE_LIMIT,
) -> Verdict:
    """Does every fair snipe-free execution from each input stabilize to the
    oracle's value? The node budget spans all inputs."""
    tables = _Tables(protocol)
    budget = [node_limit]
    combined: dict = {"nodes": 0, "edges": 0, "sccs": 0, "inputs": 0}
    for counts in inputs:
        config = initial_configuration(protocol, counts)
        expected = oracle(counts)
        verdict = _check_layers(
            tables,
            config,
            0,
            lambda s: {expected},
            False,
            budget,
            f"input {dict(sorted(counts.items()))}, expecting {expected!r}",
        )
        combined["inputs"] += 1
        for k in ("nodes", "edges", "sccs"):
            combined[k] += verdict.stats.get(k, 0)
        if not verdict.passed:
            verdict.stats = verdict.stats | {"combined": combined}
            return verdict
    return Verdict(VerdictStatus.PASS, "all inputs stabilize to the oracle value", stats=combined)


def check_robust(
    protocol: Protocol,
    oracle: PredicateOracle,
    counts: Mapping[str, int],
    j_max: int,
    node_limit: int = DEFAULT_NODE_LIMIT,
    strict: bool = False,
) -> Verdict:
    """For every s <= j_max and every configuration reachable with exactly s
    snipes, must every fair snipe-free continuation stabilize to an output
    the oracle permits for s removals.

    In strict mode all executions with the same snipe count must in
    addition agree on one output value.
    """
    config = initial_configuration(protocol, counts)
    if not 0 <= j_max <= config.size - 1:
        raise InvalidParameter(f"j_max must lie in [0, {config.size - 1}]")
    tables = _Tables(protocol)
    return _check_layers(
        tables,
        config,
        j_max,
        lambda s: permissible_outputs(oracle, counts, s),
        strict,
        [node_limit],
        f"input {dict(sorted(counts.items()))}",
    )


# -- reach graphs ---------------------------------------------------------------


@dataclass
class ReachGraph:
    """Explored configuration graph, layered by the number of snipes used."""

    nodes: list[Configuration]
    snipes_used: list[int]
    step_edges: list[tuple[int, int, TransitionRule]]
    snipe_edges: list[tuple[int, int, str]]
    node_limit: int

    def layer(self, s: int) -> list[int]:
        return [i for i, used in enumerate(self.snipes_used) if used == s]

    def _step_adj(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in self.nodes]
        for src, dst, _ in self.step_edges:
            adj[src].append(dst)
        return adj

    def scc_decomposition(self) -> list[list[int]]:
        """SCCs of the step relation (snipe edges cannot close cycles)."""
        _, comps = _tarjan(self._step_adj())
        comps = [sorted(c) for c in comps]
        comps.sort(key=lambda c: c[0])
        return comps

    def bottom_sccs(self) -> list[list[int]]:
        adj = self._step_adj()
        scc_id, comps = _tarjan(adj)
        return _bottom_sccs(adj, scc_id, comps)


def reach_graph(
    protocol: Protocol,
    start: Configuration,
    snipe_budget: int = 0,
    node_limit: int = DEFAULT_NODE_LIMIT,
) -> ReachGraph:
    """BFS closure of a configuration under steps and up to snipe_budget
    snipes, layered by snipes used. Raises ResourceLimitExceeded rather than
    truncating."""
    if start.size < 1:
        raise ProtocolError("reachability needs a nonempty start configuration")
    tables = _Tables(protocol)
    budget = [node_limit]
    nodes: list[Configuration] = []
    snipes_used: list[int] = []
    step_edges: list[tuple[int, int, TransitionRule]] = []
    snipe_edges: list[tuple[int, int, str]] = []
    offset = 0
    seeds: dict[tuple[int, ...], Optional[tuple[int, int]]] = {tables.key_of(start): None}
    for s in range(snipe_budget + 1):
        if not seeds:
            break
        explored = _close(tables, seeds.keys(), budget)
        for key, prov in seeds.items():
            if prov is not None:
                src, sniped = prov
                snipe_edges.append((src, offset + explored.index[key], tables.ids[sniped]))
        for i, key in enumerate(explored.nodes):
            nodes.append(tables.config_of(key))
            snipes_used.append(s)
            for pre, post, succ in _successor_items(tables, key):
                step_edges.append((offset + i, offset + explored.index[succ], tables.rule_of(pre, post)))
        if s < snipe_budget:
            raw = _snipe_seeds(explored)
            seeds = {key: (offset + idx, sniped) for key, (idx, sniped) in raw.items()}
        offset += len(explored.nodes)
    return ReachGraph(nodes, snipes_used, step_edges, snipe_edges, node_limit)


# -- confinement and escape ------------------------------------------------------


class ConfinementStatus(str, enum.Enum):
    CONFINED = "confined"
    CONFINABLE_NOT_CONFINED = "confinable-not-confined"
    NOT_CONFINABLE = "not-confinable"


def escape_transitions(protocol: Protocol, states: Iterable[str]) -> set[TransitionRule]:
    """Rules consuming only inside the set but producing outside it."""
    inside = set(states)
    unknown = inside - set(protocol.states)
    if unknown:
        raise ProtocolError(f"unknown states: {sorted(unknown)}")
    return {
        rule
        for rule in protocol.rules()
        if set(rule.pre) <= inside and not set(rule.post) <= inside
    }


def confinement_status(
    protocol: Protocol,
    config: Configuration,
    states: Iterable[str],
    node_limit: int = DEFAULT_NODE_LIMIT,
) -> ConfinementStatus:
    """Can the configuration escape the state set, and if so, must it?

    Decided on the full snipe-free reach graph: confined means no reachable
    configuration populates a state outside the set; confinable means some
    reachable configuration is confined.
    """
    if config.size < 1:
        raise ProtocolError("confinement needs a nonempty configuration")
    inside = set(states)
    tables = _Tables(protocol)
    allowed = {tables.index[q] for q in inside if q in tables.index}
    explored = _close(tables, [tables.key_of(config)], [node_limit])
    n = len(explored.nodes)
    bad = [any(s not in allowed for s in key) for key in explored.nodes]
    reverse: list[list[int]] = [[] for _ in range(n)]
    for v in range(n):
        for w in explored.adj[v]:
            reverse[w].append(v)
    can_escape = list(bad)
    frontier = deque(i for i in range(n) if bad[i])
    while frontier:
        w = frontier.popleft()
        for v in reverse[w]:
            if not can_escape[v]:
                can_escape[v] = True
                frontier.append(v)
    if not can_escape[0]:
        return ConfinementStatus.CONFINED
    if not all(can_escape):
        return ConfinementStatus.CONFINABLE_NOT_CONFINED
    return ConfinementStatus.NOT_CONFINABLE


# -- lower-bound machinery ---------------------------------------------------------


def critical_input(protocol: Protocol) -> dict[str, int]:
    """One more agent per input variable than the protocol has rejecting
    states."""
    if set(protocol.output_alphabet) != {0, 1}:
        raise NotAPredicateProtocol("critical inputs are defined for 0/1 protocols")
    rejecting = sum(1 for st in protocol.states.values() if st.output == 0)
    return {var: rejecting + 1 for var in protocol.initial}


def check_upward_invariant(formula: Formula, counts: Mapping[str, int]) -> bool:
    """Is the formula constant on the upward cone of the input?

    Evaluated exhaustively on the box [A_i, max(A_i, t_i) + m_i] per
    variable; beyond it saturation makes profile tuples repeat, so the box
    meets every profile class occurring in the cone.
    """
    nf = normalize(formula)
    profile = saturation_profile(nf)
    names = sorted(set(variables(nf)) | set(counts))
    base = {v: counts.get(v, 0) for v in names}
    expected = evaluate(nf, base)
    ranges = []
    for v in names:
        t, m = profile.per_var.get(v, (0, 1))
        ranges.append(range(base[v], max(base[v], t) + m + 1))
    for point in itertools.product(*ranges):
        if evaluate(nf, dict(zip(names, point))) != expected:
            return False
    return True


def state_lower_bound(formula: Formula, search_bound: Optional[int] = None) -> Optional[int]:
    """Minimum, over upward-invariant inputs found in the search box, of the
    largest per-variable count; None when the box holds no such input.

    A heuristic witness search: the true minimum is found only if attained
    within the box. The default bound is max_i (t_i + m_i).
    """
    nf = normalize(formula)
    profile = saturation_profile(nf)
    names = sorted(variables(nf))
    if not names:
        return 0
    if search_bound is None:
        search_bound = max(t + m for t, m in (profile.per_var.get(v, (0, 1)) for v in names))
    for level in range(search_bound + 1):
        for point in itertools.product(range(level + 1), repeat=len(names)):
            if max(point) != level:
                continue
            if check_upward_invariant(nf, dict(zip(names, point))):
                return level
    return None


# -- exhaustive protocol enumeration --------------------------------------------------


def enumerate_protocols(
    num_states: int,
    num_initial: int = 1,
    outputs: Sequence[int] = (0, 1),
) -> Iterator[Protocol]:
    """All protocols with the given shape, up to state renaming, in a fixed
    deterministic order. The lone initial state is always the first state;
    renamings permute the remaining states."""
    if not 1 <= num_states <= 3:
        raise InvalidParameter("enumeration is tractable for 1..3 states only")
    if num_initial != 1:
        raise InvalidParameter("only single-initial-state enumeration is supported")
    if tuple(sorted(set(outputs))) != (0, 1):
        raise InvalidParameter("enumeration targets 0/1 predicate protocols")

    ids = tuple(f"q{i}" for i in range(num_states))
    pairs = [
        (a, b) for i, a in enumerate(ids) for b in ids[i:]
    ]
    pair_pos = {p: i for i, p in enumerate(pairs)}
    perms = [
        (ids[0],) + rest
        for rest in itertools.permutations(ids[1:])
    ]

    def relabel(table: tuple, outs: tuple, perm) -> tuple:
        rename = dict(zip(ids, perm))
        new_table = [None] * len(pairs)
        for pos, post in enumerate(table):
            a, b = pairs[pos]
            new_pre = tuple(sorted((rename[a], rename[b])))
            new_post = tuple(sorted((rename[post[0]], rename[post[1]])))
            new_table[pair_pos[new_pre]] = new_post
        new_outs = [0] * num_states
        for i, q in enumerate(ids):
            new_outs[ids.index(rename[q])] = outs[i]
        return tuple(new_table), tuple(new_outs)

    serial = 0
    for outs in itertools.product((0, 1), repeat=num_states):
        for table in itertools.product(pairs, repeat=len(pairs)):
            if any(relabel(table, outs, perm) < (table, outs) for perm in perms[1:]):
                continue
            transitions = {
                pre: post for pre, post in zip(pairs, table) if pre != post
            }
            yield Protocol(
                name=f"enum-{num_states}-{serial}",
                output_alphabet=(0, 1),
                states={q: State(outs[i]) for i, q in enumerate(ids)},
                initial={"x": ids[0]},
                transitions=transitions,
            )
            serial += 1
